#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>

#include "adaconv/adaconv.hpp"

namespace adaconv::cli {
namespace {

// Flag values as parsed; only options given on the command line override the
// config file.
struct Flags {
  std::string config, family, variant, objective, output, format, preset, check;
  double alpha = 0, epsilon = 0, beta1 = 0, beta2 = 0, beta = 0;
  double radius = 0, mu_max = 0;
  std::vector<double> w0, w_star;
  std::int64_t t_max = 0;
  int jobs = 0, samples = 0, horizon = 0;
  std::uint64_t seed = 0;
};

struct Binding {
  CLI::Option* option;
  std::function<Json()> value;
};

std::vector<Binding> add_options(CLI::App* app, Flags& f) {
  std::vector<Binding> b;
  auto str = [&](const char* name, std::string& target, const char* help) {
    b.push_back({app->add_option(name, target, help), [&target] { return Json(target); }});
  };
  auto num = [&](const char* name, auto& target, const char* help) {
    b.push_back({app->add_option(name, target, help), [&target] { return Json(target); }});
  };
  auto vec = [&](const char* name, std::vector<double>& target, const char* help) {
    auto* opt = app->add_option(name, target, help)->delimiter(',')->allow_extra_args(false);
    b.push_back({opt, [&target] { return Json(target); }});
  };
  str("--family", f.family, "sgd | rmsprop | adagrad | adadelta | adam");
  str("--variant", f.variant, "eps2_bias | eps2_nobias | orig_nobias | orig_bias");
  num("--alpha", f.alpha, "learning rate");
  num("--epsilon", f.epsilon, "epsilon");
  num("--beta1", f.beta1, "ADAM first-moment decay");
  num("--beta2", f.beta2, "ADAM second-moment decay");
  num("--beta", f.beta, "RMSProp / AdaDelta decay");
  str("--objective", f.objective, "quad1d | quartic | twodim | scaled_quad:<c>");
  vec("--w0", f.w0, "start point, comma separated");
  vec("--w_star", f.w_star, "critical point, comma separated");
  num("--t_max", f.t_max, "iterations");
  str("--preset", f.preset, "sweep preset id");
  num("--jobs", f.jobs, "sweep worker threads");
  str("-o,--output", f.output, "output file (default stdout)");
  str("--format", f.format, "csv | json");
  str("--check", f.check,
      "theta_bound | h_bound | lyapunov | gradient_lower_bound | convergence_envelope | all");
  num("--samples", f.samples, "samples per check");
  num("--radius", f.radius, "sampling radius around the minimum");
  num("--seed", f.seed, "random seed");
  num("--horizon", f.horizon, "Lyapunov horizon N (0 = automatic)");
  num("--mu_max", f.mu_max, "largest Hessian eigenvalue");
  app->add_option("--config", f.config, "JSON config; flags override its values");
  return b;
}

// Long option names double as config keys.
std::string key_of(const CLI::Option* opt) { return opt->get_lnames().front(); }

Json load_config(const Flags& f, const std::vector<Binding>& bindings) {
  Json cfg = Json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot open config file '" + f.config + "'");
    try {
      cfg = Json::parse(in);
    } catch (const Json::exception& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  }
  for (const Binding& b : bindings) {
    if (b.option->count() > 0) cfg[key_of(b.option)] = b.value();
  }
  return cfg;
}

template <typename T>
T get_or(const Json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception&) {
    throw UsageError(std::string("bad value for '") + key + "'");
  }
}

std::optional<Vector> get_vector(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) return std::nullopt;
  const Json& j = cfg.at(key);
  try {
    if (j.is_number()) return Vector::Constant(1, j.get<double>());
    const auto v = j.get<std::vector<double>>();
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = v[i];
    return out;
  } catch (const Json::exception&) {
    throw UsageError(std::string("bad value for '") + key + "'");
  }
}

OptimizerSpec optimizer_from(const Json& cfg, OptimizerSpec spec = {}) {
  if (cfg.contains("optimizer")) spec = optimizer_spec_from_json(cfg.at("optimizer"), spec);
  Json flat = Json::object();
  for (const char* key : {"family", "variant", "alpha", "epsilon", "beta1", "beta2", "beta"}) {
    if (cfg.contains(key)) flat[key] = cfg.at(key);
  }
  return optimizer_spec_from_json(flat, spec);
}

Objective objective_from(const Json& cfg, const char* fallback = nullptr) {
  if (!cfg.contains("objective")) {
    if (!fallback) throw UsageError("--objective is required");
    return objective_from_id(fallback);
  }
  return objective_from_id(get_or<std::string>(cfg, "objective", ""));
}

Vector w_star_from(const Json& cfg, const Objective& obj) {
  if (auto w = get_vector(cfg, "w_star")) return *w;
  return obj.require_minimum();
}

std::string format_from(const Json& cfg, const char* fallback) {
  const std::string fmt = get_or<std::string>(cfg, "format", fallback);
  if (fmt != "csv" && fmt != "json") throw UsageError("--format must be csv or json");
  return fmt;
}

// Writes to the output file when given, stdout otherwise.
void emit(const Json& cfg, std::ostream& out,
          const std::function<void(std::ostream&)>& write) {
  const std::string path = get_or<std::string>(cfg, "output", "");
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot open output file '" + path + "'");
  write(file);
  if (!file) throw UsageError("failed writing '" + path + "'");
}

void emit_json(const Json& cfg, std::ostream& out, const Json& j) {
  emit(cfg, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

int cmd_analyze(const Json& cfg, std::ostream& out) {
  const Objective obj = objective_from(cfg);
  const OptimizerSpec spec = optimizer_from(cfg);
  if (format_from(cfg, "json") != "json") throw UsageError("analyze writes json only");
  const StabilityReport report = analyze(spec, obj, w_star_from(cfg, obj));
  emit_json(cfg, out, to_json(report));
  return kExitOk;
}

int cmd_trajectory(const Json& cfg, std::ostream& out) {
  const Objective obj = objective_from(cfg);
  const OptimizerSpec spec = optimizer_from(cfg);
  const auto w0 = get_vector(cfg, "w0");
  if (!w0) throw UsageError("--w0 is required");
  const std::int64_t t_max = get_or<std::int64_t>(cfg, "t_max", 10000);
  const Vector w_star = w_star_from(cfg, obj);
  const std::string fmt = format_from(cfg, "csv");
  const Trajectory traj = run_trajectory(spec, obj, *w0, t_max);
  if (fmt == "csv") {
    emit(cfg, out, [&](std::ostream& o) { write_trajectory_csv(o, traj, w_star); });
  } else {
    const State& last = traj.states.back();
    Json j = {{"optimizer", to_json(spec)},
              {"objective", obj.id()},
              {"steps", last.t},
              {"diverged", traj.diverged},
              {"converged", classify_convergence(traj, w_star)},
              {"final_w", std::vector<double>(last.w().begin(), last.w().end())},
              {"final_dist_to_min", (last.w() - w_star).norm()}};
    emit_json(cfg, out, j);
  }
  return traj.diverged ? kExitFailed : kExitOk;
}

int cmd_sweep(const Json& cfg, std::ostream& out) {
  SweepSpec spec;
  if (cfg.contains("preset")) {
    spec = preset(get_or<std::string>(cfg, "preset", ""));
  } else if (cfg.contains("axis1")) {
    spec = sweep_spec_from_json(cfg);
  } else {
    throw UsageError("sweep needs --preset or a config with axis1/axis2");
  }
  spec.optimizer = optimizer_from(cfg, spec.optimizer);
  if (cfg.contains("objective")) spec.objective = get_or<std::string>(cfg, "objective", "");
  if (auto w0 = get_vector(cfg, "w0")) spec.w0 = *w0;
  if (cfg.contains("t_max")) spec.iterations = get_or<std::int64_t>(cfg, "t_max", 10000);
  const std::string fmt = format_from(cfg, "csv");
  const SweepGrid grid = sweep(spec, get_or<int>(cfg, "jobs", 1));
  if (fmt == "csv") {
    emit(cfg, out, [&](std::ostream& o) { write_sweep_csv(o, grid); });
  } else {
    emit_json(cfg, out, to_json(grid));
  }
  return kExitOk;
}

const std::vector<std::string> kChecks = {"theta_bound", "h_bound", "lyapunov",
                                          "gradient_lower_bound",
                                          "convergence_envelope"};

int cmd_verify(const Json& cfg, std::ostream& out) {
  const Objective obj = objective_from(cfg, "quad1d");
  const OptimizerSpec spec = optimizer_from(cfg);
  validate(spec.hyper, spec.family);
  const std::string which = get_or<std::string>(cfg, "check", "all");
  if (which != "all" && std::find(kChecks.begin(), kChecks.end(), which) == kChecks.end()) {
    throw UsageError("unknown check '" + which + "'");
  }
  const int samples = get_or<int>(cfg, "samples", 10000);
  const double radius = get_or<double>(cfg, "radius", 0.1);
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 1);
  const int horizon = get_or<int>(cfg, "horizon", 0);
  if (samples < 1 || !(radius > 0.0) || horizon < 0) {
    throw UsageError("--samples, --radius and --horizon must be positive");
  }
  const Vector& w_star = obj.require_minimum();

  Json checks = Json::array();
  bool all_passed = true;
  auto run_check = [&](const std::string& name, const std::function<Json()>& body) {
    if (which != "all" && which != name) return;
    Json j;
    try {
      j = body();
    } catch (const CertificateUnavailableError& e) {
      j = {{"check", name}, {"passed", false}, {"error", e.what()}};
    } catch (const NotApplicableError& e) {
      j = {{"check", name}, {"passed", false}, {"error", e.what()}};
    }
    all_passed = all_passed && j.at("passed").get<bool>();
    checks.push_back(j);
  };
  run_check("theta_bound", [&] {
    return to_json(verify_theta_bound(obj, spec.hyper, samples, radius, seed));
  });
  run_check("h_bound", [&] {
    return to_json(verify_h_bound(obj, spec.hyper, samples, radius, seed + 1));
  });
  run_check("lyapunov", [&] {
    return to_json(lyapunov_certificate(spec, obj, horizon, samples, radius, seed + 2));
  });
  run_check("gradient_lower_bound", [&] {
    return to_json(gradient_lower_bound(obj, radius, samples, seed + 3));
  });
  run_check("convergence_envelope", [&] {
    Vector w0 = w_star.array() + radius / std::sqrt(static_cast<double>(w_star.size()));
    if (auto given = get_vector(cfg, "w0")) w0 = *given;
    const Trajectory traj =
        run_trajectory(spec, obj, w0, get_or<std::int64_t>(cfg, "t_max", 10000));
    Json j = to_json(convergence_envelope(traj, fixed_point(spec, obj, w_star)));
    j["w0"] = std::vector<double>(w0.data(), w0.data() + w0.size());
    return j;
  });
  Json report = {{"optimizer", to_json(spec)},
                 {"objective", obj.id()},
                 {"radius", radius},
                 {"samples", samples},
                 {"seed", seed},
                 {"passed", all_passed},
                 {"checks", checks}};
  emit_json(cfg, out, report);
  return all_passed ? kExitOk : kExitFailed;
}

int cmd_boundary(const Json& cfg, std::ostream& out) {
  const OptimizerSpec spec = optimizer_from(cfg);
  double mu_max = 0.0;
  if (cfg.contains("mu_max")) {
    mu_max = get_or<double>(cfg, "mu_max", 0.0);
  } else if (cfg.contains("objective")) {
    const Objective obj = objective_from(cfg);
    mu_max = hessian_spectrum(obj, w_star_from(cfg, obj)).max();
  } else {
    throw UsageError("boundary needs --mu_max or --objective");
  }
  const double eps = epsilon_boundary(spec.hyper, mu_max);
  if (format_from(cfg, "json") == "csv") {
    emit(cfg, out, [&](std::ostream& o) {
      o << "alpha,beta1,mu_max,epsilon_boundary\n"
        << format_double(spec.hyper.alpha) << ',' << format_double(spec.hyper.beta1)
        << ',' << format_double(mu_max) << ',' << format_double(eps) << '\n';
    });
  } else {
    emit_json(cfg, out,
              {{"alpha", spec.hyper.alpha},
               {"beta1", spec.hyper.beta1},
               {"mu_max", mu_max},
               {"epsilon_boundary", eps}});
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Adaptive optimizers as discrete dynamical systems", "adaconv"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const Json&, std::ostream&);
  };
  const std::vector<Command> commands = {
      {"analyze", "Fixed-point eigenvalues, spectral radius and bound verdicts", cmd_analyze},
      {"trajectory", "Run one optimizer trajectory", cmd_trajectory},
      {"sweep", "Classify a 2-D hyperparameter grid", cmd_sweep},
      {"verify", "Sample the perturbation and Lyapunov estimates", cmd_verify},
      {"boundary", "Smallest epsilon satisfying the ADAM bound", cmd_boundary},
  };
  std::vector<Flags> flags(commands.size());
  std::vector<std::vector<Binding>> bindings;
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].name, commands[i].help);
    bindings.push_back(add_options(sub, flags[i]));
    subs.push_back(sub);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      const Json cfg = load_config(flags[i], bindings[i]);
      return commands[i].fn(cfg, out);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const DomainError& e) {
      err << "domain error: " << e.what() << '\n';
      return kExitDomain;
    } catch (const DivergedError& e) {
      err << "diverged: " << e.what() << '\n';
      return kExitFailed;
    }
  }
  return kExitUsage;
}

}  // namespace adaconv::cli
