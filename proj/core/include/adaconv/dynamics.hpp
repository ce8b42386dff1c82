#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include "adaconv/objectives.hpp"
#include "adaconv/types.hpp"

namespace adaconv {

enum class Family { kSgd, kRmsProp, kAdaGrad, kAdaDelta, kAdam };

// eps2_*: epsilon squared under the root, sqrt(v + eps^2).
// orig_*: epsilon added after the root, sqrt(v) + eps.
enum class AdamVariant { kEps2Bias, kEps2NoBias, kOrigNoBias, kOrigBias };

std::string_view to_string(Family family);
std::string_view to_string(AdamVariant variant);
Family parse_family(std::string_view name);
AdamVariant parse_variant(std::string_view name);

struct HyperParams {
  double alpha = 0.01;
  double epsilon = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double beta = 0.9;  // RMSProp and AdaDelta decay
};

// Throws DomainError when a parameter used by `family` is out of range.
void validate(const HyperParams& hp, Family family);

// Sets a hyperparameter by name ("alpha", "epsilon", "beta1", "beta2", "beta").
void set_hyperparameter(HyperParams& hp, std::string_view name, double value);
double get_hyperparameter(const HyperParams& hp, std::string_view name);

struct OptimizerSpec {
  Family family = Family::kAdam;
  AdamVariant variant = AdamVariant::kEps2Bias;
  HyperParams hyper;

  bool bias_corrected() const;
  bool epsilon_outside_root() const;
};

enum class Slot { kFirstMoment, kSecondMoment, kWeight };

// Stacked state layout:
//   ADAM          (m, v, w)
//   RMSProp/AdaGrad (v, w)
//   AdaDelta      (v, m, w)   m accumulates squared updates
//   SGD           (w)
class StateLayout {
 public:
  StateLayout() = default;
  StateLayout(Family family, Index n);

  Family family() const { return family_; }
  Index n() const { return n_; }
  Index size() const { return blocks_ * n_; }
  bool has_m() const { return m_off_ >= 0; }
  bool has_v() const { return v_off_ >= 0; }
  Index m_offset() const { return m_off_; }
  Index v_offset() const { return v_off_; }
  Index w_offset() const { return w_off_; }
  Slot slot(Index i) const;

  bool operator==(const StateLayout&) const = default;

 private:
  Family family_ = Family::kSgd;
  Index n_ = 0;
  Index blocks_ = 1;
  Index m_off_ = -1;
  Index v_off_ = -1;
  Index w_off_ = 0;
};

struct State {
  StateLayout layout;
  Vector x;
  std::int64_t t = 0;

  State() = default;
  State(StateLayout l, Vector values, std::int64_t step = 0);

  auto w() { return x.segment(layout.w_offset(), layout.n()); }
  auto w() const { return x.segment(layout.w_offset(), layout.n()); }
  // Empty segments when the family has no such slot.
  auto m() { return x.segment(layout.has_m() ? layout.m_offset() : 0, layout.has_m() ? layout.n() : 0); }
  auto m() const { return x.segment(layout.has_m() ? layout.m_offset() : 0, layout.has_m() ? layout.n() : 0); }
  auto v() { return x.segment(layout.has_v() ? layout.v_offset() : 0, layout.has_v() ? layout.n() : 0); }
  auto v() const { return x.segment(layout.has_v() ? layout.v_offset() : 0, layout.has_v() ? layout.n() : 0); }
};

StateLayout layout_for(const OptimizerSpec& spec, const Objective& obj);

// Zero-moment start at w0.
State initial_state(const OptimizerSpec& spec, const Vector& w0);

// Zero-moment state at a critical point; throws NotCriticalPointError when
// ||grad(w_star)||_inf > tol.
State fixed_point(const OptimizerSpec& spec, const Objective& obj,
                  const Vector& w_star, double tol = 1e-8);

// sqrt(1 - beta2^(t+1)) / (1 - beta1^(t+1))
double bias_factor(const HyperParams& hp, std::int64_t t);

// 1/(sqrt(v)+eps) - 1/sqrt(v+eps^2), bounded by 1/eps in magnitude.
double epsilon_placement_gap(double v, double epsilon);

// Reusable stepping engine. Holds a gradient buffer, so one instance per
// thread; the free functions below build a temporary one.
class Stepper {
 public:
  Stepper(OptimizerSpec spec, Objective obj);

  const OptimizerSpec& spec() const { return spec_; }
  const Objective& objective() const { return obj_; }

  // out <- T(in.t, in). Checks the divergence guard and validates layout.
  void step(const State& in, State& out);
  // Same update without the guard; non-finite values propagate.
  void apply(const ConstVectorRef& x, std::int64_t t, VectorRef out);
  // Autonomous part: ADAM uses the eps2 map without bias correction, the
  // other families are already autonomous.
  void apply_autonomous(const ConstVectorRef& x, VectorRef out);

 private:
  void apply_family(const OptimizerSpec& spec, const ConstVectorRef& x,
                    std::int64_t t, VectorRef out);

  OptimizerSpec spec_;
  OptimizerSpec autonomous_;
  Objective obj_;
  StateLayout layout_;
  Vector g_;
};

// Divergence guard threshold on |x_i|.
inline constexpr double kDivergenceLimit = 1e12;

State step(const OptimizerSpec& spec, const Objective& obj, const State& x);
State autonomous_step(const OptimizerSpec& spec, const Objective& obj,
                      const State& x);

// Bias-correction perturbation: step(*_bias) - step(*_nobias). The variant
// selects the epsilon placement (eps2 -> Theta, orig -> Theta tilde).
Vector theta(const OptimizerSpec& spec, const Objective& obj, const State& x);

// step(orig_nobias) - step(eps2_nobias), in the (m, v, w) layout.
Vector h_disturbance(const HyperParams& hp, const Objective& obj,
                     const State& x);

// Generic adaptive method built from per-family update rules.
// Cross-checks the fused steps.
struct GenericAdaptiveMethod {
  // v_{t+1} = psi(v_t, g_t)
  std::function<Vector(const Vector& v, const Vector& g)> psi;
  // m_{t+1} = phi(m_t, g_t, v_{t+1})
  std::function<Vector(const Vector& m, const Vector& g, const Vector& v_next)> phi;
  // d(m_t, w_t); m_next is passed for methods whose direction is phi itself.
  std::function<Vector(const Vector& m, const Vector& m_next, const Vector& g)> direction;
};

GenericAdaptiveMethod generic_method(Family family, const HyperParams& hp);
State generic_step(const OptimizerSpec& spec, const Objective& obj,
                   const State& x);

}  // namespace adaconv
