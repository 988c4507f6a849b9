#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ceas/association.hpp"
#include "ceas/baselines.hpp"
#include "ceas/ce_optimizer.hpp"
#include "ceas/netmodel.hpp"

namespace ceas {

enum class Method { ceas, max_sinr, dual, oracle };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

// Lists are swept as a cartesian product; an empty list keeps the base
// value from the plan's CE config.
struct SweepGrid {
  std::vector<int> n_samples;
  std::vector<int> n_elites;
  std::vector<double> smoothing_alpha;

  bool empty() const { return n_samples.empty() && n_elites.empty() && smoothing_alpha.empty(); }

  friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

struct ExperimentPlan {
  ScenarioConfig scenario;
  UtilitySpec utility;
  // Per-BS load caps; unset means cap[j] = I (constraint inactive).
  std::optional<std::vector<int>> caps;
  std::vector<Method> methods{Method::ceas, Method::max_sinr};
  CEConfig ceas;
  // Several entries run as dual-1, dual-2, ...
  std::vector<DualConfig> dual{DualConfig{}};
  std::uint64_t oracle_budget = kDefaultEnumerationBudget;
  int n_drops = 50;
  std::uint64_t base_seed = 1;
  SweepGrid sweep;

  // Throws ConfigError.
  void validate() const;
  LoadCaps load_caps() const;

  friend bool operator==(const ExperimentPlan&, const ExperimentPlan&) = default;
};

void to_json(nlohmann::json& j, const UtilitySpec& u);
void from_json(const nlohmann::json& j, UtilitySpec& u);
void to_json(nlohmann::json& j, const ExperimentPlan& p);
void from_json(const nlohmann::json& j, ExperimentPlan& p);

// Parses a plan document; missing keys take defaults.
ExperimentPlan plan_from_json(const nlohmann::json& doc);
ExperimentPlan load_plan(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Applies `dotted.key=value` to a plan document. The key must name a field of
// the fully resolved plan (array elements by index). The value is parsed as
// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Resolves a plan file plus overrides into a validated plan.
ExperimentPlan resolve_plan(const nlohmann::json& doc, const std::vector<std::string>& overrides);

}  // namespace ceas
