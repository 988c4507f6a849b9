#include "ceas/config.hpp"

#include <fstream>
#include <sstream>

#include "ceas/errors.hpp"
#include "json_util.hpp"

namespace ceas {

using detail::read_opt;
using detail::reject_unknown;

std::string_view method_name(Method m) {
  switch (m) {
    case Method::ceas: return "ceas";
    case Method::max_sinr: return "max_sinr";
    case Method::dual: return "dual";
    case Method::oracle: return "oracle";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "ceas") return Method::ceas;
  if (name == "max_sinr") return Method::max_sinr;
  if (name == "dual") return Method::dual;
  if (name == "oracle") return Method::oracle;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected ceas, max_sinr, dual or oracle)");
}

void ExperimentPlan::validate() const {
  scenario.validate();
  if (!(utility.rate_unit_scale > 0.0)) throw ConfigError("utility.rate_unit_scale must be > 0");
  if (methods.empty()) throw ConfigError("methods: at least one method is required");
  if (n_drops < 1) throw ConfigError("n_drops must be >= 1");
  try {
    ceas.validate();
    for (const auto& d : dual) d.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (dual.empty()) throw ConfigError("dual: at least one configuration is required");
  for (Method m : methods) {
    if (m == Method::dual && utility.kind != UtilityKind::logarithmic)
      throw ConfigError("method dual requires logarithmic utility");
    if (m == Method::oracle) {
      const auto size = enumeration_size(static_cast<std::size_t>(scenario.n_users),
                                         static_cast<std::size_t>(scenario.n_bs()));
      if (size > oracle_budget)
        throw ConfigError("method oracle: J^I = " + std::to_string(scenario.n_bs()) + "^" +
                          std::to_string(scenario.n_users) +
                          " exceeds the enumeration budget of " + std::to_string(oracle_budget));
    }
  }
  if (caps) {
    if (caps->size() != static_cast<std::size_t>(scenario.n_bs()))
      throw ConfigError("caps: expected " + std::to_string(scenario.n_bs()) + " entries");
    (void)load_caps();
  }
  for (int s : sweep.n_samples)
    if (s < 1) throw ConfigError("sweep.n_samples entries must be >= 1");
  for (int e : sweep.n_elites)
    if (e < 1) throw ConfigError("sweep.n_elites entries must be >= 1");
  for (double a : sweep.smoothing_alpha)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep.smoothing_alpha entries must lie in [0, 1]");
}

LoadCaps ExperimentPlan::load_caps() const {
  const auto n_users = static_cast<std::size_t>(scenario.n_users);
  if (!caps) return LoadCaps::inactive(n_users, static_cast<std::size_t>(scenario.n_bs()));
  try {
    return LoadCaps(*caps, n_users);
  } catch (const ContractError& e) {
    throw ConfigError(std::string("caps: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const UtilitySpec& u) {
  j = {{"kind", u.kind == UtilityKind::logarithmic ? "logarithmic" : "identity"},
       {"rate_unit_scale", u.rate_unit_scale},
       {"log_base", u.log_base == LogBase::natural ? "e" : "2"}};
}

void from_json(const nlohmann::json& j, UtilitySpec& u) {
  reject_unknown(j, {"kind", "rate_unit_scale", "log_base"}, "utility");
  std::string kind = u.kind == UtilityKind::logarithmic ? "logarithmic" : "identity";
  std::string base = u.log_base == LogBase::natural ? "e" : "2";
  read_opt(j, "kind", kind);
  read_opt(j, "rate_unit_scale", u.rate_unit_scale);
  read_opt(j, "log_base", base);
  if (kind == "logarithmic") u.kind = UtilityKind::logarithmic;
  else if (kind == "identity") u.kind = UtilityKind::identity;
  else throw ConfigError("utility.kind must be 'logarithmic' or 'identity'");
  if (base == "e") u.log_base = LogBase::natural;
  else if (base == "2") u.log_base = LogBase::binary;
  else throw ConfigError("utility.log_base must be 'e' or '2'");
}

void to_json(nlohmann::json& j, const ExperimentPlan& p) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : p.methods) methods.push_back(std::string(method_name(m)));
  j = {{"scenario", p.scenario},
       {"utility", p.utility},
       {"caps", nullptr},
       {"methods", std::move(methods)},
       {"ceas", p.ceas},
       {"dual", p.dual},
       {"oracle", {{"budget", p.oracle_budget}}},
       {"n_drops", p.n_drops},
       {"base_seed", p.base_seed},
       {"sweep",
        {{"n_samples", p.sweep.n_samples},
         {"n_elites", p.sweep.n_elites},
         {"smoothing_alpha", p.sweep.smoothing_alpha}}}};
  if (p.caps) j["caps"] = *p.caps;
}

void from_json(const nlohmann::json& j, ExperimentPlan& p) {
  reject_unknown(j,
                 {"scenario", "utility", "caps", "methods", "ceas", "dual", "oracle", "n_drops",
                  "base_seed", "sweep"},
                 "plan");
  if (auto it = j.find("scenario"); it != j.end()) from_json(*it, p.scenario);
  if (auto it = j.find("utility"); it != j.end()) from_json(*it, p.utility);
  if (auto it = j.find("caps"); it != j.end()) {
    if (it->is_null()) {
      p.caps.reset();
    } else {
      std::vector<int> caps;
      read_opt(j, "caps", caps);
      p.caps = std::move(caps);
    }
  }
  if (auto it = j.find("methods"); it != j.end()) {
    std::vector<std::string> names;
    read_opt(j, "methods", names);
    p.methods.clear();
    for (const auto& n : names) p.methods.push_back(parse_method(n));
  }
  if (auto it = j.find("ceas"); it != j.end()) from_json(*it, p.ceas);
  if (auto it = j.find("dual"); it != j.end()) {
    if (it->is_object()) {
      p.dual.assign(1, DualConfig{});
      from_json(*it, p.dual.front());
    } else if (it->is_array()) {
      p.dual.clear();
      for (const auto& d : *it) {
        DualConfig cfg;
        from_json(d, cfg);
        p.dual.push_back(cfg);
      }
    } else {
      throw ConfigError("dual: expected an object or an array of objects");
    }
  }
  if (auto it = j.find("oracle"); it != j.end()) {
    reject_unknown(*it, {"budget"}, "oracle");
    read_opt(*it, "budget", p.oracle_budget);
  }
  read_opt(j, "n_drops", p.n_drops);
  read_opt(j, "base_seed", p.base_seed);
  if (auto it = j.find("sweep"); it != j.end() && !it->is_null()) {
    reject_unknown(*it, {"n_samples", "n_elites", "smoothing_alpha"}, "sweep");
    read_opt(*it, "n_samples", p.sweep.n_samples);
    read_opt(*it, "n_elites", p.sweep.n_elites);
    read_opt(*it, "smoothing_alpha", p.sweep.smoothing_alpha);
  }
}

ExperimentPlan plan_from_json(const nlohmann::json& doc) {
  ExperimentPlan p;
  from_json(doc, p);
  return p;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  auto p = plan_from_json(read_json_file(path));
  p.validate();
  return p;
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  nlohmann::json* node = &doc;
  std::stringstream path(key);
  std::string part;
  while (std::getline(path, part, '.')) {
    if (node->is_object() && node->contains(part)) {
      node = &(*node)[part];
    } else if (node->is_array() && !part.empty() &&
               part.find_first_not_of("0123456789") == std::string::npos &&
               std::stoul(part) < node->size()) {
      node = &(*node)[std::stoul(part)];
    } else {
      throw ConfigError("override key '" + key + "' does not name a config field");
    }
  }
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  *node = std::move(value);
}

ExperimentPlan resolve_plan(const nlohmann::json& doc, const std::vector<std::string>& overrides) {
  nlohmann::json resolved = plan_from_json(doc);
  for (const auto& o : overrides) apply_override(resolved, o);
  auto plan = plan_from_json(resolved);
  plan.validate();
  return plan;
}

}  // namespace ceas
