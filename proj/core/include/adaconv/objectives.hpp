#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaconv/types.hpp"

namespace adaconv {

// Interface for a twice differentiable scalar field. Implementations must be
// immutable and thread-safe; output buffers are pre-sized by the caller.
class ObjectiveFunction {
 public:
  virtual ~ObjectiveFunction() = default;
  virtual double value(const ConstVectorRef& w) const = 0;
  virtual void gradient(const ConstVectorRef& w, VectorRef out) const = 0;
  virtual void hessian(const ConstVectorRef& w, MatrixRef out) const = 0;
};

class Objective {
 public:
  Objective(std::string id, Index dimension,
            std::shared_ptr<const ObjectiveFunction> fn,
            std::optional<Vector> minimum = std::nullopt);

  const std::string& id() const { return id_; }
  Index dimension() const { return dimension_; }
  const std::optional<Vector>& minimum() const { return minimum_; }
  // Throws UsageError when no minimum is known.
  const Vector& require_minimum() const;

  double value(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  Matrix hessian(const Vector& w) const;

  // Unchecked hot-path variant used by the steppers.
  void gradient_into(const ConstVectorRef& w, VectorRef out) const {
    fn_->gradient(w, out);
  }

 private:
  void check_point(const Vector& w) const;

  std::string id_;
  Index dimension_;
  std::shared_ptr<const ObjectiveFunction> fn_;
  std::optional<Vector> minimum_;
};

using ValueFn = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;
using HessianFn = std::function<Matrix(const Vector&)>;

// Wraps plain callables as an objective.
Objective make_objective(std::string id, Index dimension, ValueFn value,
                         GradientFn gradient, HessianFn hessian,
                         std::optional<Vector> minimum = std::nullopt);

// f(w) = w^2/2 + 10
Objective quad1d();
// f(w) = w^4 + w^3, minimum at -3/4
Objective quartic();
// f(w) = (w1+2)^2 (w2+1)^2 + (w1+2)^2 + 0.1 (w2+1)^2, minimum at (-2, -1)
Objective twodim();
// f(w) = c w^2 / 2
Objective scaled_quad(double c);

// "quad1d", "quartic", "twodim", "scaled_quad:<c>"
Objective objective_from_id(std::string_view id);

struct HessianSpectrum {
  std::vector<double> eigenvalues;  // ascending
  bool positive_definite = false;

  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
  Index size() const { return static_cast<Index>(eigenvalues.size()); }
};

HessianSpectrum spectrum_from_eigenvalues(std::vector<double> eigenvalues);

Vector grad(const Objective& obj, const Vector& w);
HessianSpectrum hessian_spectrum(const Objective& obj, const Vector& w);

struct FiniteDifferenceReport {
  double max_rel_err_grad = 0.0;
  double max_rel_err_hess = 0.0;
};

// Central differences with a fixed absolute step.
FiniteDifferenceReport fd_check(const Objective& obj, const Vector& w,
                                double step);
// Step cbrt(machine eps) * max(1, |w_i|) per coordinate.
FiniteDifferenceReport fd_check(const Objective& obj, const Vector& w);

double default_fd_step(double wi);

}  // namespace adaconv
