#include "adaconv/serialization.hpp"

#include <cmath>
#include <cstdio>

#include "adaconv/error.hpp"

namespace adaconv {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw UsageError("expected a number or an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

Json eigen_json(const EigenvalueList& eigs) {
  Json a = Json::array();
  for (const Complex& l : eigs) a.push_back(Json::array({l.real(), l.imag()}));
  return a;
}

Json witness_json(const std::optional<Witness>& w) {
  if (!w) return nullptr;
  return {{"t", w->t}, {"x", vector_json(w->x)}, {"lhs", w->lhs}, {"rhs", w->rhs}};
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  return *v;
}

}  // namespace

Json to_json(const OptimizerSpec& spec) {
  const HyperParams& hp = spec.hyper;
  Json j = {{"family", std::string(to_string(spec.family))}};
  switch (spec.family) {
    case Family::kAdam:
      j["variant"] = std::string(to_string(spec.variant));
      j["alpha"] = hp.alpha;
      j["epsilon"] = hp.epsilon;
      j["beta1"] = hp.beta1;
      j["beta2"] = hp.beta2;
      break;
    case Family::kRmsProp:
    case Family::kAdaDelta:
      j["alpha"] = hp.alpha;
      j["epsilon"] = hp.epsilon;
      j["beta"] = hp.beta;
      break;
    case Family::kAdaGrad:
      j["alpha"] = hp.alpha;
      j["epsilon"] = hp.epsilon;
      break;
    case Family::kSgd:
      j["alpha"] = hp.alpha;
      break;
  }
  return j;
}

OptimizerSpec optimizer_spec_from_json(const Json& j, const OptimizerSpec& base) {
  if (!j.is_object()) throw UsageError("optimizer spec must be a JSON object");
  OptimizerSpec spec = base;
  try {
    if (j.contains("family")) spec.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("variant")) spec.variant = parse_variant(j.at("variant").get<std::string>());
    for (const char* key : {"alpha", "epsilon", "beta1", "beta2", "beta"}) {
      if (j.contains(key)) set_hyperparameter(spec.hyper, key, j.at(key).get<double>());
    }
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed optimizer spec: ") + e.what());
  }
  return spec;
}

Json to_json(const HessianSpectrum& spectrum) {
  return {{"eigenvalues", spectrum.eigenvalues},
          {"positive_definite", spectrum.positive_definite}};
}

Json to_json(const BoundVerdict& v) {
  Json j = {{"source", std::string(to_string(v.source))},
            {"family", std::string(to_string(v.family))},
            {"inequality", v.inequality},
            {"applicable", v.applicable}};
  if (!v.applicable) {
    j["satisfied"] = "not-applicable";
    return j;
  }
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["satisfied"] = v.satisfied;
  j["margin"] = v.margin;
  if (v.source == BoundSource::kOurs) {
    j["mode_margins"] = v.mode_margins;
    j["non_positive_definite"] = v.non_positive_definite;
  }
  return j;
}

Json to_json(const StabilityReport& r) {
  Json j = {{"optimizer", to_json(r.spec)},
            {"objective", r.objective},
            {"w_star", vector_json(r.w_star)},
            {"hessian", to_json(r.spectrum)},
            {"eigenvalues", eigen_json(r.eigenvalues)},
            {"spectral_radius", r.spectral_radius},
            {"our_bound", to_json(r.ours)},
            {"margin", r.margin()}};
  const auto ours = r.our_bound_satisfied();
  j["our_bound_satisfied"] = ours ? Json(*ours) : Json("not-applicable");
  j["kingma_bound_satisfied"] = optional_json(r.kingma_bound_satisfied());
  j["reddi_bound_satisfied"] = optional_json(r.reddi_bound_satisfied());
  if (r.classical) {
    j["kingma_bound"] = to_json(r.classical->kingma);
    j["reddi_bound"] = to_json(r.classical->reddi);
  }
  j["epsilon_boundary"] = optional_json(r.epsilon_boundary);
  return j;
}

Json to_json(const ThetaBoundReport& r) {
  return {{"check", "theta_bound"},
          {"passed", r.passed()},
          {"samples", r.samples},
          {"violations", r.violations},
          {"max_ratio", r.max_ratio},
          {"max_ratio_tilde", r.max_ratio_tilde},
          {"constants",
           {{"C", r.constants.c},
            {"beta", r.constants.beta_decay},
            {"L", r.constants.lipschitz}}},
          {"witness", witness_json(r.witness)}};
}

Json to_json(const HBoundReport& r) {
  return {{"check", "h_bound"},
          {"passed", r.passed()},
          {"scalar_samples", r.scalar_samples},
          {"state_samples", r.state_samples},
          {"scalar_violations", r.scalar_violations},
          {"moment_violations", r.moment_violations},
          {"state_violations", r.state_violations},
          {"max_scalar_ratio", r.max_scalar_ratio},
          {"max_state_ratio", r.max_state_ratio},
          {"witness_v", optional_json(r.witness_v)},
          {"witness", witness_json(r.witness)}};
}

Json to_json(const LyapunovCertificate& c) {
  auto constants = [](const LyapunovConstants& k) {
    return Json{{"c1", k.c1}, {"c2", k.c2}, {"c3", k.c3}, {"c4", k.c4}};
  };
  return {{"check", "lyapunov"},
          {"passed", c.valid()},
          {"horizon", c.horizon},
          {"k", c.k},
          {"rate", c.rate},
          {"lipschitz", c.lipschitz},
          {"proof_constants", constants(c.proof)},
          {"empirical_constants", constants(c.empirical)},
          {"samples", c.sample_count},
          {"violations", c.violations},
          {"witness", witness_json(c.witness)}};
}

Json to_json(const GradientLowerBound& b) {
  return {{"check", "gradient_lower_bound"},
          {"passed", b.verified},
          {"C", b.c_proof},
          {"C_empirical", b.c_empirical},
          {"samples", b.samples},
          {"violations", b.violations},
          {"witness", b.witness ? vector_json(*b.witness) : Json(nullptr)}};
}

Json to_json(const Envelope& e) {
  return {{"check", "convergence_envelope"},
          {"passed", e.holds},
          {"rate", std::isfinite(e.rate) ? Json(e.rate) : Json("inf")},
          {"prefactor", std::isfinite(e.prefactor) ? Json(e.prefactor) : Json("inf")},
          {"holds", e.holds}};
}

Json to_json(const Axis& axis) {
  return {{"parameter", axis.parameter},
          {"min", axis.min},
          {"max", axis.max},
          {"count", axis.count},
          {"scale", axis.scale == Scale::kLog ? "log" : "linear"}};
}

Axis axis_from_json(const Json& j) {
  Axis a;
  try {
    a.parameter = j.at("parameter").get<std::string>();
    a.min = j.at("min").get<double>();
    a.max = j.at("max").get<double>();
    a.count = j.at("count").get<int>();
    const std::string scale = j.value("scale", std::string("linear"));
    if (scale == "log") a.scale = Scale::kLog;
    else if (scale == "linear") a.scale = Scale::kLinear;
    else throw UsageError("unknown axis scale '" + scale + "'");
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed axis: ") + e.what());
  }
  return a;
}

Json to_json(const SweepSpec& spec) {
  return {{"id", spec.id},
          {"optimizer", to_json(spec.optimizer)},
          {"objective", spec.objective},
          {"w0", vector_json(spec.w0)},
          {"axis1", to_json(spec.axis1)},
          {"axis2", to_json(spec.axis2)},
          {"iterations", spec.iterations},
          {"notes", spec.notes}};
}

SweepSpec sweep_spec_from_json(const Json& j) {
  SweepSpec s;
  try {
    s.id = j.value("id", std::string("custom"));
    s.optimizer = optimizer_spec_from_json(j.at("optimizer"));
    s.objective = j.at("objective").get<std::string>();
    s.w0 = vector_from_json(j.at("w0"));
    s.axis1 = axis_from_json(j.at("axis1"));
    s.axis2 = axis_from_json(j.at("axis2"));
    s.iterations = j.value("iterations", std::int64_t{10000});
    s.notes = j.value("notes", std::string());
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed sweep spec: ") + e.what());
  }
  return s;
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
  out << "param1,param2,kingma,ours,converged,color\n";
  for (const SweepCell& c : grid.cells) {
    out << format_double(c.param1) << ',' << format_double(c.param2) << ','
        << (c.kingma ? "true" : "false") << ',' << (c.ours ? "true" : "false")
        << ',' << (c.converged ? "true" : "false") << ',' << to_string(c.color)
        << '\n';
  }
}

Json to_json(const SweepGrid& grid) {
  Json counts = Json::object();
  const auto n = grid.color_counts();
  for (Color c : kAllColors) counts[std::string(to_string(c))] = n[static_cast<std::size_t>(c)];
  Json cells = Json::array();
  for (const SweepCell& c : grid.cells) {
    cells.push_back({{"param1", c.param1},
                     {"param2", c.param2},
                     {"kingma", c.kingma},
                     {"ours", c.ours},
                     {"converged", c.converged},
                     {"color", std::string(to_string(c.color))}});
  }
  return {{"spec", to_json(grid.spec)}, {"color_counts", counts}, {"cells", cells}};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const Vector& w_star) {
  if (traj.states.empty()) throw UsageError("empty trajectory");
  const StateLayout& layout = traj.states.front().layout;
  const Index n = layout.n();
  if (w_star.size() != n) throw UsageError("minimum has wrong dimension");
  out << 't';
  for (Index i = 0; i < n; ++i) out << ",w_" << i;
  if (layout.has_m()) for (Index i = 0; i < n; ++i) out << ",m_" << i;
  if (layout.has_v()) for (Index i = 0; i < n; ++i) out << ",v_" << i;
  out << ",dist_to_min\n";
  for (const State& s : traj.states) {
    out << s.t;
    for (Index i = 0; i < n; ++i) out << ',' << format_double(s.w()[i]);
    for (Index i = 0; i < s.m().size(); ++i) out << ',' << format_double(s.m()[i]);
    for (Index i = 0; i < s.v().size(); ++i) out << ',' << format_double(s.v()[i]);
    out << ',' << format_double((s.w() - w_star).norm()) << '\n';
  }
}

}  // namespace adaconv
