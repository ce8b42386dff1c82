#include "adaconv/dynamics.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adaconv/error.hpp"

namespace adaconv {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kSgd: return "sgd";
    case Family::kRmsProp: return "rmsprop";
    case Family::kAdaGrad: return "adagrad";
    case Family::kAdaDelta: return "adadelta";
    case Family::kAdam: return "adam";
  }
  return "?";
}

std::string_view to_string(AdamVariant variant) {
  switch (variant) {
    case AdamVariant::kEps2Bias: return "eps2_bias";
    case AdamVariant::kEps2NoBias: return "eps2_nobias";
    case AdamVariant::kOrigNoBias: return "orig_nobias";
    case AdamVariant::kOrigBias: return "orig_bias";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::kSgd, Family::kRmsProp, Family::kAdaGrad,
                   Family::kAdaDelta, Family::kAdam}) {
    if (name == to_string(f)) return f;
  }
  throw UsageError("unknown optimizer family '" + std::string(name) + "'");
}

AdamVariant parse_variant(std::string_view name) {
  for (AdamVariant v : {AdamVariant::kEps2Bias, AdamVariant::kEps2NoBias,
                        AdamVariant::kOrigNoBias, AdamVariant::kOrigBias}) {
    if (name == to_string(v)) return v;
  }
  throw UsageError("unknown ADAM variant '" + std::string(name) + "'");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError("invalid hyperparameter: " + what);
}

bool open_unit(double b) { return b > 0.0 && b < 1.0; }

}  // namespace

void validate(const HyperParams& hp, Family family) {
  require(std::isfinite(hp.alpha) && hp.alpha > 0.0, "alpha must be positive");
  if (family != Family::kSgd) {
    require(std::isfinite(hp.epsilon) && hp.epsilon > 0.0,
            "epsilon must be positive");
  }
  switch (family) {
    case Family::kAdam:
      require(open_unit(hp.beta1), "beta1 must lie in (0, 1)");
      require(open_unit(hp.beta2), "beta2 must lie in (0, 1)");
      break;
    case Family::kRmsProp:
    case Family::kAdaDelta:
      require(hp.beta > 0.0 && hp.beta <= 1.0, "beta must lie in (0, 1]");
      break;
    case Family::kSgd:
    case Family::kAdaGrad:
      break;
  }
}

void set_hyperparameter(HyperParams& hp, std::string_view name, double value) {
  if (name == "alpha") hp.alpha = value;
  else if (name == "epsilon") hp.epsilon = value;
  else if (name == "beta1") hp.beta1 = value;
  else if (name == "beta2") hp.beta2 = value;
  else if (name == "beta") hp.beta = value;
  else throw UsageError("unknown hyperparameter '" + std::string(name) + "'");
}

double get_hyperparameter(const HyperParams& hp, std::string_view name) {
  if (name == "alpha") return hp.alpha;
  if (name == "epsilon") return hp.epsilon;
  if (name == "beta1") return hp.beta1;
  if (name == "beta2") return hp.beta2;
  if (name == "beta") return hp.beta;
  throw UsageError("unknown hyperparameter '" + std::string(name) + "'");
}

bool OptimizerSpec::bias_corrected() const {
  return family == Family::kAdam && (variant == AdamVariant::kEps2Bias ||
                                     variant == AdamVariant::kOrigBias);
}

bool OptimizerSpec::epsilon_outside_root() const {
  return family == Family::kAdam && (variant == AdamVariant::kOrigNoBias ||
                                     variant == AdamVariant::kOrigBias);
}

StateLayout::StateLayout(Family family, Index n) : family_(family), n_(n) {
  if (n < 1) throw UsageError("state dimension must be positive");
  switch (family) {
    case Family::kAdam:
      blocks_ = 3; m_off_ = 0; v_off_ = n; w_off_ = 2 * n;
      break;
    case Family::kAdaDelta:
      blocks_ = 3; v_off_ = 0; m_off_ = n; w_off_ = 2 * n;
      break;
    case Family::kRmsProp:
    case Family::kAdaGrad:
      blocks_ = 2; v_off_ = 0; w_off_ = n;
      break;
    case Family::kSgd:
      blocks_ = 1; w_off_ = 0;
      break;
  }
}

Slot StateLayout::slot(Index i) const {
  if (i < 0 || i >= size()) throw UsageError("state index out of range");
  if (i >= w_off_ && i < w_off_ + n_) return Slot::kWeight;
  if (has_m() && i >= m_off_ && i < m_off_ + n_) return Slot::kFirstMoment;
  return Slot::kSecondMoment;
}

State::State(StateLayout l, Vector values, std::int64_t step)
    : layout(l), x(std::move(values)), t(step) {
  if (x.size() != layout.size()) {
    throw UsageError("state vector size does not match layout");
  }
  if (t < 0) throw UsageError("iteration index must be nonnegative");
}

StateLayout layout_for(const OptimizerSpec& spec, const Objective& obj) {
  return StateLayout(spec.family, obj.dimension());
}

State initial_state(const OptimizerSpec& spec, const Vector& w0) {
  StateLayout layout(spec.family, w0.size());
  State s(layout, Vector::Zero(layout.size()), 0);
  s.w() = w0;
  return s;
}

State fixed_point(const OptimizerSpec& spec, const Objective& obj,
                  const Vector& w_star, double tol) {
  const Vector g = obj.gradient(w_star);
  const double gmax = g.cwiseAbs().maxCoeff();
  if (!(gmax <= tol)) {
    throw NotCriticalPointError("not a critical point: ||grad||_inf = " +
                                std::to_string(gmax));
  }
  return initial_state(spec, w_star);
}

double bias_factor(const HyperParams& hp, std::int64_t t) {
  const double k = static_cast<double>(t + 1);
  return std::sqrt(1.0 - std::pow(hp.beta2, k)) / (1.0 - std::pow(hp.beta1, k));
}

double epsilon_placement_gap(double v, double epsilon) {
  return 1.0 / (std::sqrt(v) + epsilon) - 1.0 / std::sqrt(v + epsilon * epsilon);
}

Stepper::Stepper(OptimizerSpec spec, Objective obj)
    : spec_(spec),
      autonomous_(spec),
      obj_(std::move(obj)),
      layout_(spec.family, obj_.dimension()),
      g_(obj_.dimension()) {
  validate(spec_.hyper, spec_.family);
  if (spec_.family == Family::kAdam) autonomous_.variant = AdamVariant::kEps2NoBias;
}

void Stepper::apply_family(const OptimizerSpec& spec, const ConstVectorRef& x,
                           std::int64_t t, VectorRef out) {
  const HyperParams& hp = spec.hyper;
  const Index n = layout_.n();
  const Index wo = layout_.w_offset();
  obj_.gradient_into(x.segment(wo, n), g_);
  // Per-index updates only read slot i of x before writing slot i of out,
  // so in-place stepping is safe.
  switch (spec.family) {
    case Family::kSgd:
      for (Index i = 0; i < n; ++i) out[i] = x[i] - hp.alpha * g_[i];
      break;
    case Family::kRmsProp:
    case Family::kAdaGrad: {
      const double e2 = hp.epsilon * hp.epsilon;
      const bool rms = spec.family == Family::kRmsProp;
      for (Index i = 0; i < n; ++i) {
        const double g = g_[i];
        const double v = rms ? hp.beta * x[i] + (1.0 - hp.beta) * g * g
                             : x[i] + g * g;
        const double w = x[wo + i] - hp.alpha * g / std::sqrt(v + e2);
        out[i] = v;
        out[wo + i] = w;
      }
      break;
    }
    case Family::kAdaDelta: {
      const double e2 = hp.epsilon * hp.epsilon;
      const Index mo = layout_.m_offset();
      for (Index i = 0; i < n; ++i) {
        const double g = g_[i];
        const double v = hp.beta * x[i] + (1.0 - hp.beta) * g * g;
        const double m_old = x[mo + i];
        const double m = hp.beta * m_old +
                         (1.0 - hp.beta) * g * g * (m_old + e2) / (v + e2);
        const double w =
            x[wo + i] - hp.alpha * std::sqrt(m_old + e2) / std::sqrt(v + e2) * g;
        out[i] = v;
        out[mo + i] = m;
        out[wo + i] = w;
      }
      break;
    }
    case Family::kAdam: {
      const double e2 = hp.epsilon * hp.epsilon;
      const double scale =
          spec.bias_corrected() ? hp.alpha * bias_factor(hp, t) : hp.alpha;
      const bool outside = spec.epsilon_outside_root();
      for (Index i = 0; i < n; ++i) {
        const double g = g_[i];
        const double m = hp.beta1 * x[i] + (1.0 - hp.beta1) * g;
        const double v = hp.beta2 * x[n + i] + (1.0 - hp.beta2) * g * g;
        const double den = outside ? std::sqrt(v) + hp.epsilon : std::sqrt(v + e2);
        out[i] = m;
        out[n + i] = v;
        out[wo + i] = x[wo + i] - scale * m / den;
      }
      break;
    }
  }
}

void Stepper::apply(const ConstVectorRef& x, std::int64_t t, VectorRef out) {
  apply_family(spec_, x, t, out);
}

void Stepper::apply_autonomous(const ConstVectorRef& x, VectorRef out) {
  apply_family(autonomous_, x, 0, out);
}

void Stepper::step(const State& in, State& out) {
  if (!(in.layout == layout_)) {
    throw UsageError("state layout does not match optimizer and objective");
  }
  if (&in != &out) {
    out.layout = layout_;
    out.x.resize(layout_.size());
  }
  const std::int64_t t = in.t;
  apply_family(spec_, in.x, t, out.x);
  out.t = t + 1;
  for (Index i = 0; i < out.x.size(); ++i) {
    const double xi = out.x[i];
    if (!std::isfinite(xi) || std::abs(xi) > kDivergenceLimit) {
      throw DivergedError(out.t, i, xi);
    }
  }
}

State step(const OptimizerSpec& spec, const Objective& obj, const State& x) {
  Stepper stepper(spec, obj);
  State out;
  stepper.step(x, out);
  return out;
}

State autonomous_step(const OptimizerSpec& spec, const Objective& obj,
                      const State& x) {
  OptimizerSpec autonomous = spec;
  if (spec.family == Family::kAdam) autonomous.variant = AdamVariant::kEps2NoBias;
  return step(autonomous, obj, x);
}

namespace {

void require_adam_state(const State& x, const Objective& obj) {
  if (x.layout.family() != Family::kAdam || x.layout.n() != obj.dimension()) {
    throw UsageError("expected an ADAM state for this objective");
  }
}

}  // namespace

Vector theta(const OptimizerSpec& spec, const Objective& obj, const State& x) {
  if (spec.family != Family::kAdam) {
    throw UsageError("theta is defined for ADAM only");
  }
  require_adam_state(x, obj);
  const HyperParams& hp = spec.hyper;
  const Index n = x.layout.n();
  const Vector g = obj.gradient(Vector(x.w()));
  const double gap = 1.0 - bias_factor(hp, x.t);
  Vector out = Vector::Zero(3 * n);
  for (Index i = 0; i < n; ++i) {
    const double m = hp.beta1 * x.x[i] + (1.0 - hp.beta1) * g[i];
    const double v = hp.beta2 * x.x[n + i] + (1.0 - hp.beta2) * g[i] * g[i];
    const double den = spec.epsilon_outside_root()
                           ? std::sqrt(v) + hp.epsilon
                           : std::sqrt(v + hp.epsilon * hp.epsilon);
    out[2 * n + i] = hp.alpha * gap * m / den;
  }
  return out;
}

Vector h_disturbance(const HyperParams& hp, const Objective& obj,
                     const State& x) {
  require_adam_state(x, obj);
  const Index n = x.layout.n();
  if ((x.v().array() < 0.0).any()) {
    throw UsageError("h_disturbance requires a nonnegative second moment");
  }
  const Vector g = obj.gradient(Vector(x.w()));
  Vector out = Vector::Zero(3 * n);
  for (Index i = 0; i < n; ++i) {
    const double m = hp.beta1 * x.x[i] + (1.0 - hp.beta1) * g[i];
    const double v = hp.beta2 * x.x[n + i] + (1.0 - hp.beta2) * g[i] * g[i];
    out[2 * n + i] = -hp.alpha * m * epsilon_placement_gap(v, hp.epsilon);
  }
  return out;
}

GenericAdaptiveMethod generic_method(Family family, const HyperParams& hp) {
  GenericAdaptiveMethod method;
  auto pass_through = [](const Vector&, const Vector& m_next, const Vector&) {
    return m_next;
  };
  auto gradient = [](const Vector&, const Vector& g, const Vector&) { return g; };
  switch (family) {
    case Family::kSgd: {
      const double e = hp.epsilon;
      method.psi = [e](const Vector& v, const Vector&) {
        return Vector(Vector::Constant(v.size(), 1.0 - e * e));
      };
      method.phi = gradient;
      method.direction = pass_through;
      break;
    }
    case Family::kRmsProp: {
      const double b = hp.beta;
      method.psi = [b](const Vector& v, const Vector& g) {
        return Vector(b * v.array() + (1.0 - b) * g.array().square());
      };
      method.phi = gradient;
      method.direction = pass_through;
      break;
    }
    case Family::kAdaGrad:
      method.psi = [](const Vector& v, const Vector& g) {
        return Vector(v.array() + g.array().square());
      };
      method.phi = gradient;
      method.direction = pass_through;
      break;
    case Family::kAdaDelta: {
      const double b = hp.beta, e2 = hp.epsilon * hp.epsilon;
      method.psi = [b](const Vector& v, const Vector& g) {
        return Vector(b * v.array() + (1.0 - b) * g.array().square());
      };
      method.phi = [b, e2](const Vector& m, const Vector& g, const Vector& v_next) {
        return Vector(b * m.array() + (1.0 - b) * g.array().square() *
                                          (m.array() + e2) / (v_next.array() + e2));
      };
      method.direction = [e2](const Vector& m, const Vector&, const Vector& g) {
        return Vector(g.array() * (m.array() + e2).sqrt());
      };
      break;
    }
    case Family::kAdam: {
      const double b1 = hp.beta1, b2 = hp.beta2;
      method.psi = [b2](const Vector& v, const Vector& g) {
        return Vector(b2 * v.array() + (1.0 - b2) * g.array().square());
      };
      method.phi = [b1](const Vector& m, const Vector& g, const Vector&) {
        return Vector(b1 * m + (1.0 - b1) * g);
      };
      method.direction = pass_through;
      break;
    }
  }
  return method;
}

State generic_step(const OptimizerSpec& spec, const Objective& obj,
                   const State& x) {
  if (spec.family == Family::kAdam && spec.variant != AdamVariant::kEps2NoBias) {
    throw UsageError("the generic method covers ADAM without bias correction only");
  }
  validate(spec.hyper, spec.family);
  const StateLayout layout = layout_for(spec, obj);
  if (!(x.layout == layout)) throw UsageError("state layout mismatch");
  const HyperParams& hp = spec.hyper;
  const Index n = layout.n();
  const GenericAdaptiveMethod method = generic_method(spec.family, hp);

  const Vector w = x.w();
  const Vector g = obj.gradient(w);
  const Vector m = layout.has_m() ? Vector(x.m()) : Vector::Zero(n);
  const Vector v = layout.has_v() ? Vector(x.v()) : Vector::Zero(n);
  const Vector v_next = method.psi(v, g);
  const Vector m_next = method.phi(m, g, v_next);
  const Vector d = method.direction(m, m_next, g);
  const double e2 = hp.epsilon * hp.epsilon;

  State out = x;
  out.t = x.t + 1;
  out.w() = w.array() - hp.alpha * d.array() / (v_next.array() + e2).sqrt();
  if (layout.has_m()) out.m() = m_next;
  if (layout.has_v()) out.v() = v_next;
  return out;
}

}  // namespace adaconv
