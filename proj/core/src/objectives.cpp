#include "adaconv/objectives.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Eigenvalues>

#include "adaconv/error.hpp"

namespace adaconv {
namespace {

class CallableObjective final : public ObjectiveFunction {
 public:
  CallableObjective(ValueFn value, GradientFn gradient, HessianFn hessian)
      : value_(std::move(value)),
        gradient_(std::move(gradient)),
        hessian_(std::move(hessian)) {}

  double value(const ConstVectorRef& w) const override { return value_(w); }
  void gradient(const ConstVectorRef& w, VectorRef out) const override {
    out = gradient_(w);
  }
  void hessian(const ConstVectorRef& w, MatrixRef out) const override {
    out = hessian_(w);
  }

 private:
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

class Quad1d final : public ObjectiveFunction {
 public:
  double value(const ConstVectorRef& w) const override {
    return 0.5 * w[0] * w[0] + 10.0;
  }
  void gradient(const ConstVectorRef& w, VectorRef out) const override {
    out[0] = w[0];
  }
  void hessian(const ConstVectorRef&, MatrixRef out) const override {
    out(0, 0) = 1.0;
  }
};

class Quartic final : public ObjectiveFunction {
 public:
  double value(const ConstVectorRef& w) const override {
    const double x = w[0];
    return x * x * x * x + x * x * x;
  }
  void gradient(const ConstVectorRef& w, VectorRef out) const override {
    const double x = w[0];
    out[0] = 4.0 * x * x * x + 3.0 * x * x;
  }
  void hessian(const ConstVectorRef& w, MatrixRef out) const override {
    const double x = w[0];
    out(0, 0) = 12.0 * x * x + 6.0 * x;
  }
};

class TwoDim final : public ObjectiveFunction {
 public:
  double value(const ConstVectorRef& w) const override {
    const double a = w[0] + 2.0, b = w[1] + 1.0;
    return a * a * b * b + a * a + 0.1 * b * b;
  }
  void gradient(const ConstVectorRef& w, VectorRef out) const override {
    const double a = w[0] + 2.0, b = w[1] + 1.0;
    out[0] = 2.0 * a * b * b + 2.0 * a;
    out[1] = 2.0 * a * a * b + 0.2 * b;
  }
  void hessian(const ConstVectorRef& w, MatrixRef out) const override {
    const double a = w[0] + 2.0, b = w[1] + 1.0;
    out(0, 0) = 2.0 * b * b + 2.0;
    out(1, 1) = 2.0 * a * a + 0.2;
    out(0, 1) = out(1, 0) = 4.0 * a * b;
  }
};

class ScaledQuad final : public ObjectiveFunction {
 public:
  explicit ScaledQuad(double c) : c_(c) {}
  double value(const ConstVectorRef& w) const override {
    return 0.5 * c_ * w[0] * w[0];
  }
  void gradient(const ConstVectorRef& w, VectorRef out) const override {
    out[0] = c_ * w[0];
  }
  void hessian(const ConstVectorRef&, MatrixRef out) const override {
    out(0, 0) = c_;
  }

 private:
  double c_;
};

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

Objective::Objective(std::string id, Index dimension,
                     std::shared_ptr<const ObjectiveFunction> fn,
                     std::optional<Vector> minimum)
    : id_(std::move(id)),
      dimension_(dimension),
      fn_(std::move(fn)),
      minimum_(std::move(minimum)) {
  if (dimension_ < 1) throw UsageError("objective dimension must be positive");
  if (!fn_) throw UsageError("objective function is null");
  if (minimum_ && minimum_->size() != dimension_) {
    throw UsageError("objective minimum has wrong dimension");
  }
}

const Vector& Objective::require_minimum() const {
  if (!minimum_) {
    throw UsageError("objective '" + id_ + "' has no known minimum");
  }
  return *minimum_;
}

void Objective::check_point(const Vector& w) const {
  if (w.size() != dimension_) {
    throw UsageError("objective '" + id_ + "' expects dimension " +
                     std::to_string(dimension_) + ", got " +
                     std::to_string(w.size()));
  }
  if (!w.allFinite()) throw UsageError("evaluation point is not finite");
}

double Objective::value(const Vector& w) const {
  check_point(w);
  return fn_->value(w);
}

Vector Objective::gradient(const Vector& w) const {
  check_point(w);
  Vector g(dimension_);
  fn_->gradient(w, g);
  return g;
}

Matrix Objective::hessian(const Vector& w) const {
  check_point(w);
  Matrix h = Matrix::Zero(dimension_, dimension_);
  fn_->hessian(w, h);
  return h;
}

Objective make_objective(std::string id, Index dimension, ValueFn value,
                         GradientFn gradient, HessianFn hessian,
                         std::optional<Vector> minimum) {
  return Objective(std::move(id), dimension,
                   std::make_shared<CallableObjective>(
                       std::move(value), std::move(gradient), std::move(hessian)),
                   std::move(minimum));
}

Objective quad1d() {
  return Objective("quad1d", 1, std::make_shared<Quad1d>(), vec({0.0}));
}

Objective quartic() {
  return Objective("quartic", 1, std::make_shared<Quartic>(), vec({-0.75}));
}

Objective twodim() {
  return Objective("twodim", 2, std::make_shared<TwoDim>(), vec({-2.0, -1.0}));
}

Objective scaled_quad(double c) {
  if (!std::isfinite(c)) throw UsageError("scaled_quad scale must be finite");
  // shortest round-trip text so the id parses back to the same scale
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, c);
  std::string id = "scaled_quad:" + std::string(buf, res.ptr);
  return Objective(std::move(id), 1, std::make_shared<ScaledQuad>(c),
                   vec({0.0}));
}

Objective objective_from_id(std::string_view id) {
  if (id == "quad1d") return quad1d();
  if (id == "quartic") return quartic();
  if (id == "twodim") return twodim();
  constexpr std::string_view prefix = "scaled_quad:";
  if (id.substr(0, prefix.size()) == prefix) {
    std::string_view arg = id.substr(prefix.size());
    double c = 0.0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), c);
    if (ec != std::errc() || ptr != arg.data() + arg.size() || arg.empty()) {
      throw UsageError("bad scale in objective id '" + std::string(id) + "'");
    }
    return scaled_quad(c);
  }
  throw UsageError("unknown objective '" + std::string(id) + "'");
}

HessianSpectrum spectrum_from_eigenvalues(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw UsageError("empty Hessian spectrum");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  HessianSpectrum s;
  s.positive_definite = eigenvalues.front() > 0.0;
  s.eigenvalues = std::move(eigenvalues);
  return s;
}

Vector grad(const Objective& obj, const Vector& w) { return obj.gradient(w); }

HessianSpectrum hessian_spectrum(const Objective& obj, const Vector& w) {
  const Matrix h = obj.hessian(w);
  if (h.rows() == 1) return spectrum_from_eigenvalues({h(0, 0)});
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  const Vector& ev = solver.eigenvalues();
  return spectrum_from_eigenvalues(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

double default_fd_step(double wi) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) *
         std::max(1.0, std::abs(wi));
}

namespace {

FiniteDifferenceReport fd_check_impl(const Objective& obj, const Vector& w,
                                     const Vector& steps) {
  const Index n = obj.dimension();
  const Vector g = obj.gradient(w);
  const Matrix h = obj.hessian(w);
  FiniteDifferenceReport report;
  for (Index i = 0; i < n; ++i) {
    Vector wp = w, wm = w;
    wp[i] += steps[i];
    wm[i] -= steps[i];
    const double span = wp[i] - wm[i];
    const double fd = (obj.value(wp) - obj.value(wm)) / span;
    report.max_rel_err_grad = std::max(
        report.max_rel_err_grad, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    const Vector col = (obj.gradient(wp) - obj.gradient(wm)) / span;
    for (Index j = 0; j < n; ++j) {
      report.max_rel_err_hess =
          std::max(report.max_rel_err_hess,
                   std::abs(col[j] - h(j, i)) / std::max(1.0, std::abs(h(j, i))));
    }
  }
  return report;
}

}  // namespace

FiniteDifferenceReport fd_check(const Objective& obj, const Vector& w,
                                double step) {
  if (!(step > 0.0)) throw UsageError("finite-difference step must be positive");
  return fd_check_impl(obj, w, Vector::Constant(obj.dimension(), step));
}

FiniteDifferenceReport fd_check(const Objective& obj, const Vector& w) {
  if (w.size() != obj.dimension()) return fd_check(obj, w, 1.0);  // throws
  Vector steps(w.size());
  for (Index i = 0; i < w.size(); ++i) steps[i] = default_fd_step(w[i]);
  return fd_check_impl(obj, w, steps);
}

}  // namespace adaconv
