#pragma once

#include "adaconv/dynamics.hpp"
#include "adaconv/error.hpp"
#include "adaconv/experiments.hpp"
#include "adaconv/objectives.hpp"
#include "adaconv/perturbation.hpp"
#include "adaconv/serialization.hpp"
#include "adaconv/stability.hpp"
#include "adaconv/types.hpp"
