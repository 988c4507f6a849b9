#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "ceas/association.hpp"
#include "ceas/netmodel.hpp"

namespace ceas {

// Each user picks its highest-SINR BS (ties to the lowest index). Load caps
// are not consulted.
Association max_sinr_assoc(const LinkGains& gains);

struct ExhaustiveResult {
  Association association;
  double utility = 0.0;
  std::uint64_t candidates = 0;  // J^I
  std::uint64_t feasible = 0;
};

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

// Enumerates all J^I associations in lexicographic order of the assignment
// vector, skipping cap violations; ties keep the lexicographically smallest.
// Throws BudgetError when J^I exceeds `budget`.
ExhaustiveResult exhaustive_search(const LinkGains& gains, const LoadCaps& caps,
                                   const UtilitySpec& utility,
                                   std::uint64_t budget = kDefaultEnumerationBudget);

// J^I, saturating at UINT64_MAX.
std::uint64_t enumeration_size(std::size_t n_users, std::size_t n_bs);

// Reconstructed Lagrangian dual decomposition for the log-utility problem
// with equal sharing. Relaxing K_j = sum_i x_ij with price mu_j gives the
// user rule argmax_j [ln(c_ij) - mu_j] and, for each BS, the load estimate
// K_j = exp(mu_j - 1). Prices then follow the subgradient step
//   mu_j <- mu_j + step_size * (load_j - exp(mu_j - 1)).
struct DualConfig {
  double step_size = 0.1;
  int n_iterations = 100;
  double init_price = 1.0;

  void validate() const;

  friend bool operator==(const DualConfig&, const DualConfig&) = default;
};

struct DualResult {
  Association association;
  std::vector<std::vector<double>> price_trace;  // mu after each iteration; [0] is init
};

DualResult dual_subgradient_assoc(const LinkGains& gains, const UtilitySpec& utility,
                                  const DualConfig& cfg);

void to_json(nlohmann::json& j, const DualConfig& cfg);
void from_json(const nlohmann::json& j, DualConfig& cfg);

}  // namespace ceas
