#include "adaconv/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "adaconv/error.hpp"

namespace adaconv {

EigenvalueList adam_closed_form_eigs(const HyperParams& hp,
                                     const HessianSpectrum& spectrum) {
  const Index n = spectrum.size();
  EigenvalueList eigs(static_cast<std::size_t>(n), Complex(hp.beta2, 0.0));
  for (double mu : spectrum.eigenvalues) {
    const double phi = (hp.alpha * mu / hp.epsilon) * (1.0 - hp.beta1);
    const double b = hp.beta1 + 1.0 - phi;
    const double disc = b * b - 4.0 * hp.beta1;
    if (disc >= 0.0) {
      // larger-magnitude root first, the other from the product beta1
      const double r1 = 0.5 * (b + std::copysign(std::sqrt(disc), b));
      const double r2 = r1 != 0.0 ? hp.beta1 / r1 : 0.0;
      eigs.emplace_back(r1, 0.0);
      eigs.emplace_back(r2, 0.0);
    } else {
      const double im = 0.5 * std::sqrt(-disc);
      eigs.emplace_back(0.5 * b, im);
      eigs.emplace_back(0.5 * b, -im);
    }
  }
  return eigs;
}

ClosedFormEigs closed_form_eigs(const OptimizerSpec& spec,
                                const HessianSpectrum& spectrum) {
  const HyperParams& hp = spec.hyper;
  const std::size_t n = spectrum.eigenvalues.size();
  ClosedFormEigs out;
  auto push_modes = [&](double gain) {
    for (double mu : spectrum.eigenvalues) out.eigenvalues.emplace_back(1.0 - gain * mu, 0.0);
  };
  switch (spec.family) {
    case Family::kAdam:
      out.eigenvalues = adam_closed_form_eigs(hp, spectrum);
      break;
    case Family::kRmsProp:
      out.eigenvalues.assign(n, Complex(hp.beta, 0.0));
      push_modes(hp.alpha / hp.epsilon);
      break;
    case Family::kAdaGrad:
      out.eigenvalues.assign(n, Complex(1.0, 0.0));
      push_modes(hp.alpha / hp.epsilon);
      out.bound_applicable = false;
      break;
    case Family::kAdaDelta:
      out.eigenvalues.assign(2 * n, Complex(hp.beta, 0.0));
      push_modes(hp.alpha);
      break;
    case Family::kSgd:
      push_modes(hp.alpha);
      break;
  }
  return out;
}

namespace {

// Initial Ridders step per coordinate, tied to the scale on which the map
// bends: gradients of size epsilon for weights and first moments, epsilon^2
// for second moments.
double initial_step(const OptimizerSpec& spec, const StateLayout& layout,
                    Index i, double xi) {
  const double eps = spec.hyper.epsilon;
  if (layout.slot(i) == Slot::kSecondMoment ||
      (spec.family == Family::kAdaDelta && layout.slot(i) == Slot::kFirstMoment)) {
    return 0.1 * std::max(eps * eps, std::abs(xi));
  }
  const double scale = spec.family == Family::kSgd ? 1.0 : std::min(1.0, eps);
  return 0.1 * scale * std::max(1.0, std::abs(xi));
}

}  // namespace

Matrix numerical_jacobian(const OptimizerSpec& spec, const Objective& obj,
                          const State& x) {
  Stepper stepper(spec, obj);
  const StateLayout layout = layout_for(spec, obj);
  if (!(x.layout == layout)) throw UsageError("state layout mismatch");
  const Index d = layout.size();

  constexpr int kTable = 10;
  constexpr double kShrink = 1.4;
  constexpr double kShrink2 = kShrink * kShrink;
  constexpr double kSafe = 2.0;

  Vector xp(d), xm(d), fp(d), fm(d);
  auto central = [&](Index j, double h, Vector& out) {
    xp = x.x;
    xm = x.x;
    xp[j] += h;
    xm[j] -= h;
    const double span = xp[j] - xm[j];
    stepper.apply_autonomous(xp, fp);
    stepper.apply_autonomous(xm, fm);
    out = (fp - fm) / span;
    return out.allFinite();
  };

  Matrix jac(d, d);
  std::vector<std::vector<Vector>> a(kTable, std::vector<Vector>(kTable, Vector(d)));
  for (Index j = 0; j < d; ++j) {
    double h = initial_step(spec, layout, j, x.x[j]);
    int retries = 0;
    while (!central(j, h, a[0][0])) {
      h *= 0.25;
      if (++retries > 40) throw DivergedError(x.t, j, x.x[j]);
    }
    double err = std::numeric_limits<double>::max();
    Vector best = a[0][0];
    for (int i = 1; i < kTable; ++i) {
      h /= kShrink;
      if (!central(j, h, a[0][i])) break;
      double fac = kShrink2;
      for (int k = 1; k <= i; ++k) {
        a[k][i] = (a[k - 1][i] * fac - a[k - 1][i - 1]) / (fac - 1.0);
        fac *= kShrink2;
        const double errt =
            std::max((a[k][i] - a[k - 1][i]).cwiseAbs().maxCoeff(),
                     (a[k][i] - a[k - 1][i - 1]).cwiseAbs().maxCoeff());
        if (errt <= err) {
          err = errt;
          best = a[k][i];
        }
      }
      if ((a[i][i] - a[i - 1][i - 1]).cwiseAbs().maxCoeff() >= kSafe * err) break;
    }
    jac.col(j) = best;
  }
  for (Index i = 0; i < jac.size(); ++i) {
    if (!std::isfinite(jac.data()[i])) throw DivergedError(x.t, i % d, jac.data()[i]);
  }
  return jac;
}

EigenvalueList eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw UsageError("eigenvalues need a nonempty square matrix");
  }
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw DomainError("eigensolver failed");
  const auto& ev = solver.eigenvalues();
  return EigenvalueList(ev.data(), ev.data() + ev.size());
}

double spectral_radius(const EigenvalueList& eigs) {
  if (eigs.empty()) throw UsageError("spectral radius of an empty list");
  double r = 0.0;
  for (const Complex& l : eigs) r = std::max(r, std::abs(l));
  return r;
}

double multiset_distance(const EigenvalueList& a, const EigenvalueList& b) {
  if (a.size() != b.size()) throw UsageError("eigenvalue lists differ in size");
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const Complex& x : a) {
    std::size_t best = b.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(x - b[j]);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_dist);
  }
  return worst;
}

std::string_view to_string(BoundSource source) {
  switch (source) {
    case BoundSource::kOurs: return "ours";
    case BoundSource::kKingma: return "kingma";
    case BoundSource::kReddi: return "reddi";
  }
  return "?";
}

namespace {

BoundVerdict make_verdict(Family family, BoundSource source, double lhs,
                          double rhs, std::string inequality) {
  BoundVerdict v;
  v.family = family;
  v.source = source;
  v.lhs = lhs;
  v.rhs = rhs;
  v.satisfied = lhs < rhs;
  v.margin = rhs - lhs;
  v.inequality = std::move(inequality);
  return v;
}

}  // namespace

BoundVerdict bound_check(const OptimizerSpec& spec,
                         const HessianSpectrum& spectrum) {
  if (spectrum.eigenvalues.empty()) throw UsageError("empty Hessian spectrum");
  const HyperParams& hp = spec.hyper;
  const double mu_max = spectrum.max();
  double gain = 1.0;  // lhs = gain * mu
  double rhs = 0.0;
  std::string text;
  switch (spec.family) {
    case Family::kSgd:
      rhs = 2.0 / hp.alpha;
      text = "max_mu < 2/alpha";
      break;
    case Family::kAdaDelta:
      rhs = 2.0 / hp.alpha;
      text = "max_mu < 2/alpha";
      break;
    case Family::kRmsProp:
      rhs = 2.0 * hp.epsilon / hp.alpha;
      text = "max_mu < 2*epsilon/alpha";
      break;
    case Family::kAdam:
      gain = (hp.alpha / hp.epsilon) * (1.0 - hp.beta1);
      rhs = 2.0 * hp.beta1 + 2.0;
      text = "(alpha/epsilon)*max_mu*(1-beta1) < 2*beta1+2";
      break;
    case Family::kAdaGrad: {
      BoundVerdict v;
      v.family = spec.family;
      v.applicable = false;
      v.non_positive_definite = !spectrum.positive_definite;
      v.inequality = "not applicable";
      return v;
    }
  }
  BoundVerdict v =
      make_verdict(spec.family, BoundSource::kOurs, gain * mu_max, rhs, text);
  v.non_positive_definite = !spectrum.positive_definite;
  for (double mu : spectrum.eigenvalues) v.mode_margins.push_back(rhs - gain * mu);
  return v;
}

ClassicalBounds classical_bounds(const HyperParams& hp) {
  const double root = std::sqrt(hp.beta2);
  return {make_verdict(Family::kAdam, BoundSource::kKingma, hp.beta1 * hp.beta1,
                       root, "beta1^2 < sqrt(beta2)"),
          make_verdict(Family::kAdam, BoundSource::kReddi, hp.beta1, root,
                       "beta1 < sqrt(beta2)")};
}

double epsilon_boundary(const HyperParams& hp, double mu_max) {
  if (!(hp.alpha >= 0.0) || !std::isfinite(hp.alpha)) {
    throw DomainError("alpha must be nonnegative");
  }
  if (!(hp.beta1 > 0.0 && hp.beta1 < 1.0)) {
    throw DomainError("beta1 must lie in (0, 1)");
  }
  if (!std::isfinite(mu_max)) throw DomainError("mu_max must be finite");
  return hp.alpha * mu_max * (1.0 - hp.beta1) / (2.0 * hp.beta1 + 2.0);
}

std::optional<bool> StabilityReport::our_bound_satisfied() const {
  if (!ours.applicable) return std::nullopt;
  return ours.satisfied;
}

std::optional<bool> StabilityReport::kingma_bound_satisfied() const {
  if (!classical) return std::nullopt;
  return classical->kingma.satisfied;
}

std::optional<bool> StabilityReport::reddi_bound_satisfied() const {
  if (!classical) return std::nullopt;
  return classical->reddi.satisfied;
}

StabilityReport analyze(const OptimizerSpec& spec, const Objective& obj,
                        const Vector& w_star) {
  validate(spec.hyper, spec.family);
  fixed_point(spec, obj, w_star);
  StabilityReport r;
  r.spec = spec;
  r.objective = obj.id();
  r.w_star = w_star;
  r.spectrum = hessian_spectrum(obj, w_star);
  r.eigenvalues = closed_form_eigs(spec, r.spectrum).eigenvalues;
  r.spectral_radius = spectral_radius(r.eigenvalues);
  r.ours = bound_check(spec, r.spectrum);
  if (spec.family == Family::kAdam) {
    r.classical = classical_bounds(spec.hyper);
    r.epsilon_boundary = epsilon_boundary(spec.hyper, r.spectrum.max());
  }
  return r;
}

}  // namespace adaconv
