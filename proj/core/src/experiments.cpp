#include "adaconv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "adaconv/error.hpp"
#include "adaconv/stability.hpp"

namespace adaconv {

Trajectory run_trajectory(const OptimizerSpec& spec, const Objective& obj,
                          const Vector& w0, std::int64_t t_max, Record record) {
  if (t_max < 1) throw UsageError("T_max must be at least 1");
  if (w0.size() != obj.dimension()) {
    throw UsageError("start point has dimension " + std::to_string(w0.size()) +
                     ", objective expects " + std::to_string(obj.dimension()));
  }
  if (!w0.allFinite()) throw UsageError("start point is not finite");

  Stepper stepper(spec, obj);
  Trajectory traj;
  traj.objective = obj.id();
  traj.spec = spec;

  State cur = initial_state(spec, w0);
  if (record == Record::kAll) {
    traj.states.reserve(static_cast<std::size_t>(t_max) + 1);
    traj.states.push_back(cur);
    for (std::int64_t k = 0; k < t_max; ++k) {
      try {
        stepper.step(cur, cur);
      } catch (const DivergedError& e) {
        traj.diverged = true;
        traj.divergence = Divergence{e.t(), e.component(), e.value()};
        break;
      }
      traj.states.push_back(cur);
    }
    return traj;
  }

  // Ring buffer of the most recent states.
  std::vector<State> ring(kTailLength, cur);
  std::size_t stored = 1;
  State scratch = cur;
  for (std::int64_t k = 0; k < t_max; ++k) {
    try {
      stepper.step(cur, scratch);
    } catch (const DivergedError& e) {
      traj.diverged = true;
      traj.divergence = Divergence{e.t(), e.component(), e.value()};
      break;
    }
    std::swap(cur, scratch);
    ring[stored % kTailLength] = cur;
    ++stored;
  }
  const std::size_t keep = std::min(stored, kTailLength);
  for (std::size_t i = stored - keep; i < stored; ++i) {
    traj.states.push_back(ring[i % kTailLength]);
  }
  return traj;
}

bool settled(const Trajectory& traj, const Vector& w_star, double radius) {
  if (traj.diverged) return false;
  if (traj.states.size() < kTailLength) {
    throw UsageError("convergence classification needs at least five iterates");
  }
  for (std::size_t i = traj.states.size() - kTailLength; i < traj.states.size(); ++i) {
    const auto w = traj.states[i].w();
    if (w.size() != w_star.size()) throw UsageError("minimum has wrong dimension");
    if ((w - w_star).cwiseAbs().maxCoeff() > radius) return false;
  }
  return true;
}

bool classify_convergence(const Trajectory& traj, const Vector& w_star) {
  return settled(traj, w_star, kConvergenceRadius);
}

Color classify_cell(bool kingma, bool ours, bool converged) {
  if (converged) {
    if (ours) return kingma ? Color::kGreen : Color::kBlue;
    return kingma ? Color::kYellow : Color::kWhite;
  }
  if (ours) return kingma ? Color::kBlack : Color::kCyan;
  return kingma ? Color::kMagenta : Color::kRed;
}

std::string_view to_string(Color color) {
  switch (color) {
    case Color::kGreen: return "green";
    case Color::kBlue: return "blue";
    case Color::kYellow: return "yellow";
    case Color::kWhite: return "white";
    case Color::kBlack: return "black";
    case Color::kCyan: return "cyan";
    case Color::kMagenta: return "magenta";
    case Color::kRed: return "red";
  }
  return "?";
}

Color parse_color(std::string_view name) {
  for (Color c : kAllColors) {
    if (to_string(c) == name) return c;
  }
  throw UsageError("unknown color '" + std::string(name) + "'");
}

double Axis::value(int i) const {
  if (i < 0 || i >= count) throw UsageError("axis index out of range");
  if (count == 1 || i == 0) return min;
  if (i == count - 1) return max;
  const double f = static_cast<double>(i) / static_cast<double>(count - 1);
  if (scale == Scale::kLog) {
    return std::exp(std::log(min) + (std::log(max) - std::log(min)) * f);
  }
  return min + (max - min) * f;
}

std::array<std::size_t, 8> SweepGrid::color_counts() const {
  std::array<std::size_t, 8> counts{};
  for (const SweepCell& c : cells) ++counts[static_cast<std::size_t>(c.color)];
  return counts;
}

std::size_t SweepGrid::count(Color color) const {
  return color_counts()[static_cast<std::size_t>(color)];
}

SweepCell evaluate_cell(const SweepSpec& spec, const Objective& obj,
                        const HessianSpectrum& spectrum, const HyperParams& hp) {
  OptimizerSpec opt = spec.optimizer;
  opt.hyper = hp;
  SweepCell cell;
  const BoundVerdict ours = bound_check(opt, spectrum);
  cell.ours = ours.applicable && ours.satisfied;
  // The classical bounds only exist for ADAM; other families reuse ours.
  cell.kingma = opt.family == Family::kAdam ? classical_bounds(hp).kingma.satisfied
                                            : cell.ours;
  const Trajectory traj =
      run_trajectory(opt, obj, spec.w0, spec.iterations, Record::kTail);
  cell.converged = classify_convergence(traj, obj.require_minimum());
  cell.color = classify_cell(cell.kingma, cell.ours, cell.converged);
  return cell;
}

namespace {

void check_axis(const Axis& axis) {
  HyperParams probe;
  get_hyperparameter(probe, axis.parameter);
  if (axis.count < 1) throw UsageError("axis '" + axis.parameter + "' needs count >= 1");
  if (!std::isfinite(axis.min) || !std::isfinite(axis.max)) {
    throw UsageError("axis '" + axis.parameter + "' has non-finite bounds");
  }
  if (axis.scale == Scale::kLog && !(axis.min > 0.0 && axis.max > 0.0)) {
    throw UsageError("log axis '" + axis.parameter + "' needs positive bounds");
  }
}

}  // namespace

SweepGrid sweep(const SweepSpec& spec, int jobs) {
  check_axis(spec.axis1);
  check_axis(spec.axis2);
  if (spec.iterations < 1) throw UsageError("iterations must be at least 1");
  const Objective obj = objective_from_id(spec.objective);
  const Vector& w_star = obj.require_minimum();
  if (spec.w0.size() != obj.dimension()) {
    throw UsageError("start point dimension does not match objective");
  }
  const HessianSpectrum spectrum = hessian_spectrum(obj, w_star);

  const int n1 = spec.axis1.count, n2 = spec.axis2.count;
  std::vector<HyperParams> params(static_cast<std::size_t>(n1) * n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      HyperParams hp = spec.optimizer.hyper;
      set_hyperparameter(hp, spec.axis1.parameter, spec.axis1.value(i));
      set_hyperparameter(hp, spec.axis2.parameter, spec.axis2.value(j));
      validate(hp, spec.optimizer.family);
      params[static_cast<std::size_t>(i) * n2 + j] = hp;
    }
  }

  SweepGrid grid;
  grid.spec = spec;
  grid.cells.resize(params.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (std::size_t k = next++; k < params.size(); k = next++) {
        SweepCell cell = evaluate_cell(spec, obj, spectrum, params[k]);
        cell.param1 = spec.axis1.value(static_cast<int>(k / n2));
        cell.param2 = spec.axis2.value(static_cast<int>(k % n2));
        grid.cells[k] = cell;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = params.size();
    }
  };

  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(params.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return grid;
}

}  // namespace adaconv
