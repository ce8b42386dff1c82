#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaconv/dynamics.hpp"
#include "adaconv/objectives.hpp"
#include "adaconv/types.hpp"

namespace adaconv {

struct Trajectory;

struct ThetaBoundConstants {
  double c = 0.0;           // 4 alpha / (eps (1-beta1) (sqrt(1-beta2) + 1 - beta1))
  double beta_decay = 0.0;  // max(beta1, beta2, beta1^2)
  double lipschitz = 0.0;   // gradient Lipschitz constant on the ball
};

ThetaBoundConstants theta_bound_constants(const HyperParams& hp,
                                          double lipschitz);

// 1.05 * max spectral norm of the Hessian over `samples` points of the ball
// around w_star.
double estimate_lipschitz(const Objective& obj, const Vector& w_star,
                          double radius, int samples, std::uint64_t seed);

struct Witness {
  std::int64_t t = 0;
  Vector x;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct ThetaBoundReport {
  ThetaBoundConstants constants;
  int samples = 0;
  int violations = 0;
  double max_ratio = 0.0;        // Theta (eps2 placement)
  double max_ratio_tilde = 0.0;  // Theta tilde (original placement)
  std::optional<Witness> witness;
  bool passed() const { return violations == 0; }
};

ThetaBoundReport verify_theta_bound(const Objective& obj, const HyperParams& hp,
                                    int samples, double radius,
                                    std::uint64_t seed = 1);

struct HBoundReport {
  int scalar_samples = 0;
  int state_samples = 0;
  int scalar_violations = 0;
  int moment_violations = 0;  // ||h|| <= (alpha/eps) ||m_{t+1}||
  int state_violations = 0;   // ||h|| <= (alpha/eps) ||x - x*||
  double max_scalar_ratio = 0.0;
  double max_state_ratio = 0.0;
  std::optional<double> witness_v;
  std::optional<Witness> witness;
  bool passed() const {
    return scalar_violations == 0 && moment_violations == 0 &&
           state_violations == 0;
  }
};

HBoundReport verify_h_bound(const Objective& obj, const HyperParams& hp,
                            int samples, double radius,
                            std::uint64_t seed = 2);

struct LyapunovConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

struct LyapunovCertificate {
  int horizon = 0;
  double k = 0.0;
  double rate = 0.0;  // q = exp(-lambda), per-step decay
  double lipschitz = 0.0;
  LyapunovConstants proof;      // from k, q, L as in the construction
  LyapunovConstants empirical;  // tightest values seen on the samples
  int sample_count = 0;
  int violations = 0;
  std::optional<Witness> witness;
  bool valid() const {
    return violations == 0 && proof.c1 > 0 && proof.c2 > 0 && proof.c3 > 0 &&
           proof.c4 > 0;
  }
};

// V(x) = sum_{t<N} ||phi(t, x) - x*||^2 along the autonomous map.
double lyapunov_value(const OptimizerSpec& spec, const Objective& obj,
                      const State& x_star, const Vector& x, int horizon);

// horizon = 0 picks the smallest power of two >= 16 with k^2 q^(2N) < 1.
// Throws CertificateUnavailableError when the fixed point is not stable.
LyapunovCertificate lyapunov_certificate(const OptimizerSpec& spec,
                                         const Objective& obj, int horizon,
                                         int samples, double radius,
                                         std::uint64_t seed = 3);

struct GradientLowerBound {
  double c_proof = 0.0;      // sigma_min(H) - delta, delta = sigma_min/2
  double c_empirical = 0.0;  // smallest ||grad|| / ||w - w*|| sampled
  int samples = 0;
  int violations = 0;
  bool verified = false;
  std::optional<Vector> witness;
};

// Throws NotApplicableError for a singular Hessian at the minimum.
GradientLowerBound gradient_lower_bound(const Objective& obj, double radius,
                                        int samples = 10000,
                                        std::uint64_t seed = 4);

struct Envelope {
  double rate = 0.0;  // c; infinity for a diverged trajectory
  double prefactor = 1.0;  // M
  bool holds = false;
};

Envelope convergence_envelope(const Trajectory& traj, const State& x_star);

}  // namespace adaconv
