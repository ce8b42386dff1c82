#include "adaconv/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "adaconv/error.hpp"
#include "adaconv/experiments.hpp"
#include "adaconv/stability.hpp"

namespace adaconv {
namespace {

constexpr double kSlack = 1e-12;

// Uniform sample from the Euclidean ball of the given radius.
Vector sample_ball(std::mt19937_64& rng, Index dim, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Vector dir(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index i = 0; i < dim; ++i) dir[i] = normal(rng);
    norm = dir.norm();
  }
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
  return dir * (r / norm);
}

bool nonnegative_slot(const StateLayout& layout, Index i) {
  const Slot s = layout.slot(i);
  return s == Slot::kSecondMoment ||
         (layout.family() == Family::kAdaDelta && s == Slot::kFirstMoment);
}

// Random state near x_star; accumulators of squared quantities are kept
// nonnegative.
Vector sample_state(std::mt19937_64& rng, const State& x_star, double radius) {
  Vector x = x_star.x + sample_ball(rng, x_star.x.size(), radius);
  for (Index i = 0; i < x.size(); ++i) {
    if (nonnegative_slot(x_star.layout, i)) x[i] = std::abs(x[i]);
  }
  return x;
}

void record(std::optional<Witness>& witness, std::int64_t t, const Vector& x,
            double lhs, double rhs) {
  if (!witness) witness = Witness{t, x, lhs, rhs};
}

}  // namespace

ThetaBoundConstants theta_bound_constants(const HyperParams& hp,
                                          double lipschitz) {
  ThetaBoundConstants k;
  k.c = 4.0 * hp.alpha /
        (hp.epsilon * (1.0 - hp.beta1) *
         (std::sqrt(1.0 - hp.beta2) + (1.0 - hp.beta1)));
  k.beta_decay = std::max({hp.beta1, hp.beta2, hp.beta1 * hp.beta1});
  k.lipschitz = lipschitz;
  return k;
}

double estimate_lipschitz(const Objective& obj, const Vector& w_star,
                          double radius, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto norm_at = [&](const Vector& w) {
    const Matrix h = obj.hessian(w);
    if (h.rows() == 1) return std::abs(h(0, 0));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  };
  double best = norm_at(w_star);
  for (int i = 0; i < samples; ++i) {
    best = std::max(best, norm_at(w_star + sample_ball(rng, w_star.size(), radius)));
  }
  return 1.05 * best;
}

ThetaBoundReport verify_theta_bound(const Objective& obj, const HyperParams& hp,
                                    int samples, double radius,
                                    std::uint64_t seed) {
  validate(hp, Family::kAdam);
  if (samples < 0 || !(radius >= 0.0)) throw UsageError("bad sampling parameters");
  const Vector& w_star = obj.require_minimum();
  OptimizerSpec eps2{Family::kAdam, AdamVariant::kEps2Bias, hp};
  OptimizerSpec orig{Family::kAdam, AdamVariant::kOrigBias, hp};
  const State x_star = fixed_point(eps2, obj, w_star);

  ThetaBoundReport report;
  report.constants =
      theta_bound_constants(hp, estimate_lipschitz(obj, w_star, radius, 1000, seed + 101));
  report.samples = samples;
  const ThetaBoundConstants& k = report.constants;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> step_index(0, 200);
  for (int s = 0; s < samples; ++s) {
    State x(x_star.layout, sample_state(rng, x_star, radius), step_index(rng));
    // weighted norm beta1 ||m|| + (1 - beta1) L ||w - w*|| from the proof
    const double star_norm = hp.beta1 * x.m().norm() +
                             (1.0 - hp.beta1) * k.lipschitz * (x.w() - w_star).norm();
    const double rhs =
        k.c * std::pow(k.beta_decay, static_cast<double>(x.t + 1)) * star_norm;
    const double lhs = theta(eps2, obj, x).norm();
    const double lhs_tilde = theta(orig, obj, x).norm();
    auto ratio = [&](double l) { return rhs > 0.0 ? l / rhs : (l > 0.0 ? INFINITY : 0.0); };
    report.max_ratio = std::max(report.max_ratio, ratio(lhs));
    report.max_ratio_tilde = std::max(report.max_ratio_tilde, ratio(lhs_tilde));
    const double worst = std::max(lhs, lhs_tilde);
    if (worst > rhs + kSlack) {
      ++report.violations;
      record(report.witness, x.t, x.x, worst, rhs);
    }
  }
  return report;
}

HBoundReport verify_h_bound(const Objective& obj, const HyperParams& hp,
                            int samples, double radius, std::uint64_t seed) {
  validate(hp, Family::kAdam);
  if (samples < 0 || !(radius >= 0.0)) throw UsageError("bad sampling parameters");
  const double eps = hp.epsilon;
  const double inv_eps = 1.0 / eps;
  HBoundReport report;

  // Scalar gap at v = 0 and on a log grid spanning eps^2 * 1e-12 .. 1e12.
  const int grid = std::max(samples, 2);
  const double lo = std::log(eps * eps * 1e-12), hi = std::log(1e12);
  for (int i = 0; i <= grid; ++i) {
    const double v = i == 0 ? 0.0
                            : std::exp(lo + (hi - lo) * (i - 1) / (grid - 1));
    const double gap = std::abs(epsilon_placement_gap(v, eps));
    ++report.scalar_samples;
    report.max_scalar_ratio = std::max(report.max_scalar_ratio, gap * eps);
    if (gap > inv_eps + kSlack) {
      ++report.scalar_violations;
      if (!report.witness_v) report.witness_v = v;
    }
  }

  const Vector& w_star = obj.require_minimum();
  OptimizerSpec spec{Family::kAdam, AdamVariant::kEps2NoBias, hp};
  const State x_star = fixed_point(spec, obj, w_star);
  const double gain = hp.alpha / eps;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    State x(x_star.layout, sample_state(rng, x_star, radius), 0);
    const Vector h = h_disturbance(hp, obj, x);
    const Vector g = obj.gradient(Vector(x.w()));
    const Vector m_next = hp.beta1 * x.m() + (1.0 - hp.beta1) * g;
    const double lhs = h.norm();
    ++report.state_samples;
    if (lhs > gain * m_next.norm() + kSlack) {
      ++report.moment_violations;
      record(report.witness, 0, x.x, lhs, gain * m_next.norm());
    }
    const double rhs = gain * (x.x - x_star.x).norm();
    report.max_state_ratio =
        std::max(report.max_state_ratio, rhs > 0.0 ? lhs / rhs : 0.0);
    if (lhs > rhs + kSlack) {
      ++report.state_violations;
      record(report.witness, 0, x.x, lhs, rhs);
    }
  }
  return report;
}

namespace {

// Distances ||phi(t, x) - x*|| for t = 0..steps under the autonomous map.
void orbit_distances(Stepper& stepper, const Vector& x0, const Vector& x_star,
                     int steps, Vector& buf, Vector& next,
                     std::vector<double>& dist) {
  dist.resize(static_cast<std::size_t>(steps) + 1);
  buf = x0;
  dist[0] = (buf - x_star).norm();
  for (int t = 1; t <= steps; ++t) {
    stepper.apply_autonomous(buf, next);
    buf.swap(next);
    dist[static_cast<std::size_t>(t)] = (buf - x_star).norm();
  }
}

double sum_squares(const std::vector<double>& d, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += d[i] * d[i];
  return s;
}

struct Fit {
  double k = 1.0;
  double q = 0.0;
};

constexpr double kRateFloor = 1e-2;

Fit fit_decay(const std::vector<std::vector<double>>& orbits, int horizon) {
  const std::size_t half = static_cast<std::size_t>(horizon / 2);
  const std::size_t end = static_cast<std::size_t>(horizon);
  double q = kRateFloor;
  for (const auto& d : orbits) {
    if (d[half] > 0.0 && d[end] > 0.0) {
      q = std::max(q, std::pow(d[end] / d[half], 1.0 / static_cast<double>(end - half)));
    }
  }
  double log_k = 0.0;
  const double log_q = std::log(q);
  for (const auto& d : orbits) {
    if (d[0] == 0.0) continue;
    for (std::size_t t = 0; t <= end; ++t) {
      if (d[t] == 0.0) break;
      log_k = std::max(log_k, std::log(d[t] / d[0]) - static_cast<double>(t) * log_q);
    }
  }
  return {1.05 * std::exp(log_k), q};
}

}  // namespace

double lyapunov_value(const OptimizerSpec& spec, const Objective& obj,
                      const State& x_star, const Vector& x, int horizon) {
  if (horizon < 1) throw UsageError("Lyapunov horizon must be positive");
  if (x.size() != x_star.x.size()) throw UsageError("state size mismatch");
  Stepper stepper(spec, obj);
  Vector buf, next(x.size());
  std::vector<double> d;
  orbit_distances(stepper, x, x_star.x, horizon - 1, buf, next, d);
  return sum_squares(d, 0, d.size());
}

LyapunovCertificate lyapunov_certificate(const OptimizerSpec& spec,
                                         const Objective& obj, int horizon,
                                         int samples, double radius,
                                         std::uint64_t seed) {
  if (horizon < 0 || samples < 1 || !(radius > 0.0)) {
    throw UsageError("bad Lyapunov certificate parameters");
  }
  validate(spec.hyper, spec.family);
  const Vector& w_star = obj.require_minimum();
  const State x_star = fixed_point(spec, obj, w_star);
  const ClosedFormEigs eigs = closed_form_eigs(spec, hessian_spectrum(obj, w_star));
  const double rho = spectral_radius(eigs.eigenvalues);
  if (!eigs.bound_applicable || !(rho < 1.0)) {
    throw CertificateUnavailableError(
        "fixed point is not exponentially stable (spectral radius " +
        std::to_string(rho) + ")");
  }

  Stepper stepper(spec, obj);
  const Index dim = x_star.x.size();
  Vector buf(dim), next(dim);

  // Calibration orbits fix k, q and L; fresh samples are then checked.
  std::mt19937_64 cal_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int n_cal = std::min(samples, 1000);
  std::vector<Vector> cal_points;
  for (int i = 0; i < n_cal; ++i) cal_points.push_back(sample_state(cal_rng, x_star, radius));

  constexpr int kMaxHorizon = 1 << 14;
  int n_steps = horizon > 0 ? horizon : 16;
  Fit fit;
  std::vector<std::vector<double>> orbits(cal_points.size());
  for (;;) {
    for (std::size_t i = 0; i < cal_points.size(); ++i) {
      orbit_distances(stepper, cal_points[i], x_star.x, n_steps, buf, next, orbits[i]);
    }
    fit = fit_decay(orbits, n_steps);
    const double tail = fit.k * fit.k * std::pow(fit.q, 2.0 * n_steps);
    if (horizon > 0 || (fit.q < 1.0 && tail < 1.0) || n_steps >= kMaxHorizon) break;
    n_steps *= 2;
  }

  // Lipschitz constant of the map over the region the orbits visit.
  double lip = 0.0;
  const int n_lip = std::min<int>(static_cast<int>(cal_points.size()), 200);
  OptimizerSpec autonomous = spec;
  if (spec.family == Family::kAdam) autonomous.variant = AdamVariant::kEps2NoBias;
  for (int i = 0; i < n_lip; ++i) {
    buf = cal_points[static_cast<std::size_t>(i)];
    for (int t = 0; t <= n_steps; ++t) {
      if ((t & (t - 1)) == 0) {
        const Matrix jac = numerical_jacobian(autonomous, obj, State(x_star.layout, buf));
        Eigen::JacobiSVD<Matrix> svd(jac);
        lip = std::max(lip, svd.singularValues()[0]);
      }
      stepper.apply_autonomous(buf, next);
      buf.swap(next);
    }
  }
  lip *= 1.05;

  LyapunovCertificate cert;
  cert.horizon = n_steps;
  cert.k = fit.k;
  cert.rate = fit.q;
  cert.lipschitz = lip;
  const double k2 = fit.k * fit.k, q2 = fit.q * fit.q;
  cert.proof.c1 = 1.0;
  cert.proof.c2 = k2 * (1.0 - std::pow(q2, n_steps)) / (1.0 - q2);
  cert.proof.c3 = 1.0 - k2 * std::pow(q2, n_steps);
  for (int t = 0; t < n_steps; ++t) cert.proof.c4 += fit.k * std::pow(fit.q * lip, t);

  cert.empirical.c1 = INFINITY;
  cert.empirical.c3 = INFINITY;
  std::mt19937_64 rng(seed);
  std::vector<double> d;
  Vector prev_x;
  double prev_v = 0.0, prev_d0 = 0.0;
  const auto within = [](double lhs, double rhs) {
    return lhs <= rhs + kSlack * std::max(1.0, std::abs(rhs));
  };
  for (int s = 0; s < samples; ++s) {
    const Vector x = sample_state(rng, x_star, radius);
    orbit_distances(stepper, x, x_star.x, n_steps, buf, next, d);
    const double v = sum_squares(d, 0, static_cast<std::size_t>(n_steps));
    const double v_next = sum_squares(d, 1, static_cast<std::size_t>(n_steps) + 1);
    const double d0 = d[0];
    const double d0sq = d0 * d0;
    ++cert.sample_count;
    if (d0 > 0.0) {
      cert.empirical.c1 = std::min(cert.empirical.c1, v / d0sq);
      cert.empirical.c2 = std::max(cert.empirical.c2, v / d0sq);
      cert.empirical.c3 = std::min(cert.empirical.c3, (v - v_next) / d0sq);
    }
    bool ok = within(cert.proof.c1 * d0sq, v) && within(v, cert.proof.c2 * d0sq) &&
              within(v_next - v, -cert.proof.c3 * d0sq);
    if (!ok) {
      ++cert.violations;
      record(cert.witness, 0, x, v, d0sq);
    }
    if (s > 0) {
      const double span = (x - prev_x).norm() * (d0 + prev_d0);
      const double dv = std::abs(v - prev_v);
      if (span > 0.0) cert.empirical.c4 = std::max(cert.empirical.c4, dv / span);
      if (!within(dv, cert.proof.c4 * span)) {
        ++cert.violations;
        record(cert.witness, 0, x, dv, cert.proof.c4 * span);
      }
    }
    prev_x = x;
    prev_v = v;
    prev_d0 = d0;
  }
  if (!std::isfinite(cert.empirical.c1)) cert.empirical.c1 = 0.0;
  if (!std::isfinite(cert.empirical.c3)) cert.empirical.c3 = 0.0;
  return cert;
}

GradientLowerBound gradient_lower_bound(const Objective& obj, double radius,
                                        int samples, std::uint64_t seed) {
  if (samples < 0 || !(radius >= 0.0)) throw UsageError("bad sampling parameters");
  const Vector& w_star = obj.require_minimum();
  const HessianSpectrum spectrum = hessian_spectrum(obj, w_star);
  if (!spectrum.positive_definite) {
    throw NotApplicableError("Hessian at the minimum is not positive definite");
  }
  double sigma_min = INFINITY, sigma_max = 0.0;
  for (double mu : spectrum.eigenvalues) {
    sigma_min = std::min(sigma_min, std::abs(mu));
    sigma_max = std::max(sigma_max, std::abs(mu));
  }
  if (sigma_min <= 1e-12 * sigma_max) {
    throw NotApplicableError("Hessian at the minimum is singular");
  }

  GradientLowerBound out;
  out.c_proof = sigma_min - 0.5 * sigma_min;
  out.c_empirical = INFINITY;
  out.samples = samples;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    const Vector w = w_star + sample_ball(rng, w_star.size(), radius);
    const double dist = (w - w_star).norm();
    if (dist == 0.0) continue;
    const double gnorm = obj.gradient(w).norm();
    out.c_empirical = std::min(out.c_empirical, gnorm / dist);
    if (gnorm < out.c_proof * dist - kSlack) {
      ++out.violations;
      if (!out.witness) out.witness = w;
    }
  }
  if (!std::isfinite(out.c_empirical)) out.c_empirical = out.c_proof;
  out.verified = out.violations == 0;
  return out;
}

Envelope convergence_envelope(const Trajectory& traj, const State& x_star) {
  Envelope env;
  if (traj.diverged) {
    env.rate = INFINITY;
    env.prefactor = INFINITY;
    env.holds = false;
    return env;
  }
  if (traj.states.size() < 51) {
    throw UsageError("envelope fit needs a trajectory of at least 50 steps");
  }
  std::vector<double> d;
  d.reserve(traj.states.size());
  for (const State& s : traj.states) {
    if (s.x.size() != x_star.x.size()) throw UsageError("state size mismatch");
    d.push_back((s.x - x_star.x).norm());
  }
  if (d[0] == 0.0) {
    env.rate = 0.0;
    env.prefactor = 1.0;
    env.holds = true;
    return env;
  }
  // Stop at exact arrival or at distances too small for a meaningful log.
  std::size_t end = d.size();
  for (std::size_t t = 0; t < d.size(); ++t) {
    if (d[t] < 1e-250) {
      end = t;
      break;
    }
  }
  const std::size_t start = end / 2;
  if (end - start < 4) {
    env.rate = 0.0;
    env.prefactor = *std::max_element(d.begin(), d.begin() + static_cast<long>(end)) / d[0];
    env.holds = true;
    return env;
  }
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const double cnt = static_cast<double>(end - start);
  for (std::size_t t = start; t < end; ++t) {
    const double x = static_cast<double>(t), y = std::log(d[t]);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
  }
  const double slope = (cnt * sty - st * sy) / (cnt * stt - st * st);
  env.rate = std::exp(slope);
  double log_m = -INFINITY;
  const double log_d0 = std::log(d[0]);
  for (std::size_t t = 0; t < end; ++t) {
    log_m = std::max(log_m, std::log(d[t]) - log_d0 - static_cast<double>(t) * slope);
  }
  env.prefactor = std::exp(log_m);
  env.holds = env.rate < 1.0;
  return env;
}

}  // namespace adaconv
