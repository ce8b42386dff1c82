#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaconv/dynamics.hpp"
#include "adaconv/objectives.hpp"
#include "adaconv/types.hpp"

namespace adaconv {

// 3n eigenvalues of the ADAM fixed-point Jacobian: beta2 (n times) and the
// roots of l^2 - (1 + beta1 - phi_i) l + beta1, phi_i = (alpha mu_i / eps)(1 - beta1).
EigenvalueList adam_closed_form_eigs(const HyperParams& hp,
                                     const HessianSpectrum& spectrum);

struct ClosedFormEigs {
  EigenvalueList eigenvalues;
  bool bound_applicable = true;  // false for AdaGrad
};

ClosedFormEigs closed_form_eigs(const OptimizerSpec& spec,
                                const HessianSpectrum& spectrum);

// Jacobian of the autonomous map at x. Columns by Ridders' extrapolation of
// central differences.
Matrix numerical_jacobian(const OptimizerSpec& spec, const Objective& obj,
                          const State& x);

// Dense nonsymmetric eigensolver.
EigenvalueList eigenvalues(const Matrix& a);

double spectral_radius(const EigenvalueList& eigs);

// Greedy nearest-neighbour pairing; returns the largest pair distance.
double multiset_distance(const EigenvalueList& a, const EigenvalueList& b);

enum class BoundSource { kOurs, kKingma, kReddi };

std::string_view to_string(BoundSource source);

struct BoundVerdict {
  Family family = Family::kAdam;
  BoundSource source = BoundSource::kOurs;
  bool applicable = true;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;  // lhs < rhs
  double margin = 0.0;     // rhs - lhs
  bool non_positive_definite = false;
  std::vector<double> mode_margins;  // per Hessian eigenvalue
  std::string inequality;
};

BoundVerdict bound_check(const OptimizerSpec& spec,
                         const HessianSpectrum& spectrum);

struct ClassicalBounds {
  BoundVerdict kingma;  // beta1^2 < sqrt(beta2)
  BoundVerdict reddi;   // beta1 < sqrt(beta2)
};

ClassicalBounds classical_bounds(const HyperParams& hp);

// Threshold on epsilon above which the ADAM bound holds:
// alpha * mu_max * (1 - beta1) / (2 beta1 + 2).
double epsilon_boundary(const HyperParams& hp, double mu_max);

struct StabilityReport {
  OptimizerSpec spec;
  std::string objective;
  Vector w_star;
  HessianSpectrum spectrum;
  EigenvalueList eigenvalues;
  double spectral_radius = 0.0;
  BoundVerdict ours;
  std::optional<ClassicalBounds> classical;  // ADAM only
  std::optional<double> epsilon_boundary;    // ADAM only

  // nullopt for AdaGrad
  std::optional<bool> our_bound_satisfied() const;
  std::optional<bool> kingma_bound_satisfied() const;
  std::optional<bool> reddi_bound_satisfied() const;
  double margin() const { return ours.margin; }
};

StabilityReport analyze(const OptimizerSpec& spec, const Objective& obj,
                        const Vector& w_star);

}  // namespace adaconv
