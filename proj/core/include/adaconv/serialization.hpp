#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "adaconv/dynamics.hpp"
#include "adaconv/experiments.hpp"
#include "adaconv/perturbation.hpp"
#include "adaconv/stability.hpp"

namespace adaconv {

using Json = nlohmann::json;

// 17 significant digits.
std::string format_double(double x);

Json to_json(const OptimizerSpec& spec);
// Missing fields keep the defaults of `base`.
OptimizerSpec optimizer_spec_from_json(const Json& j,
                                       const OptimizerSpec& base = {});

Json to_json(const HessianSpectrum& spectrum);
Json to_json(const BoundVerdict& verdict);
Json to_json(const StabilityReport& report);
Json to_json(const ThetaBoundReport& report);
Json to_json(const HBoundReport& report);
Json to_json(const LyapunovCertificate& cert);
Json to_json(const GradientLowerBound& bound);
Json to_json(const Envelope& envelope);

Json to_json(const Axis& axis);
Axis axis_from_json(const Json& j);
Json to_json(const SweepSpec& spec);
SweepSpec sweep_spec_from_json(const Json& j);

// Header: param1,param2,kingma,ours,converged,color
void write_sweep_csv(std::ostream& out, const SweepGrid& grid);
Json to_json(const SweepGrid& grid);

// Header: t,w_0..w_{n-1},m_0..,v_0..,dist_to_min
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const Vector& w_star);

}  // namespace adaconv
