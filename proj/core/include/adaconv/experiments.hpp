#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adaconv/dynamics.hpp"
#include "adaconv/objectives.hpp"
#include "adaconv/types.hpp"

namespace adaconv {

struct Divergence {
  std::int64_t t = 0;
  Index component = 0;
  double value = 0.0;
};

enum class Record { kAll, kTail };

struct Trajectory {
  std::string objective;
  OptimizerSpec spec;
  // Every state when recorded in full; the last kTailLength otherwise.
  std::vector<State> states;
  bool diverged = false;
  std::optional<Divergence> divergence;
};

inline constexpr std::size_t kTailLength = 5;
inline constexpr double kConvergenceRadius = 1e-2;

// Iterates from the zero-moment start at w0 for t_max steps or until the
// divergence guard trips. Throws UsageError for t_max < 1.
Trajectory run_trajectory(const OptimizerSpec& spec, const Objective& obj,
                          const Vector& w0, std::int64_t t_max,
                          Record record = Record::kAll);

// Last five w-iterates within radius of w_star in the infinity norm.
bool settled(const Trajectory& traj, const Vector& w_star, double radius);
bool classify_convergence(const Trajectory& traj, const Vector& w_star);

enum class Color { kGreen, kBlue, kYellow, kWhite, kBlack, kCyan, kMagenta, kRed };

inline constexpr std::array<Color, 8> kAllColors = {
    Color::kGreen, Color::kBlue,  Color::kYellow,  Color::kWhite,
    Color::kBlack, Color::kCyan, Color::kMagenta, Color::kRed};

Color classify_cell(bool kingma, bool ours, bool converged);
std::string_view to_string(Color color);
Color parse_color(std::string_view name);

enum class Scale { kLinear, kLog };

struct Axis {
  std::string parameter;
  double min = 0.0;
  double max = 0.0;
  int count = 1;
  Scale scale = Scale::kLinear;

  double value(int i) const;
};

struct SweepSpec {
  std::string id;
  OptimizerSpec optimizer;
  std::string objective;
  Vector w0;
  Axis axis1;  // outer, param1
  Axis axis2;  // inner, param2
  std::int64_t iterations = 10000;
  std::string notes;
};

struct SweepCell {
  double param1 = 0.0;
  double param2 = 0.0;
  bool kingma = false;
  bool ours = false;
  bool converged = false;
  Color color = Color::kRed;
};

struct SweepGrid {
  SweepSpec spec;
  std::vector<SweepCell> cells;  // row-major over axis1

  std::array<std::size_t, 8> color_counts() const;
  std::size_t count(Color color) const;
};

// Throws UsageError/DomainError for malformed specs. jobs <= 0 uses the
// hardware concurrency.
SweepGrid sweep(const SweepSpec& spec, int jobs = 1);

// Evaluates one cell with the given hyperparameters.
SweepCell evaluate_cell(const SweepSpec& spec, const Objective& obj,
                        const HessianSpectrum& spectrum,
                        const HyperParams& hp);

SweepSpec preset(std::string_view id);
std::vector<std::string> preset_ids();

}  // namespace adaconv
