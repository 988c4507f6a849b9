#include "ceas/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ceas/errors.hpp"
#include "json_util.hpp"

namespace ceas {

Association max_sinr_assoc(const LinkGains& gains) {
  const std::size_t n_bs = gains.n_bs();
  std::vector<int> assign(gains.n_users(), 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n_bs; ++j)
      if (gains.sinr(i, j) > gains.sinr(i, best)) best = j;
    assign[i] = static_cast<int>(best);
  }
  return Association(std::move(assign), n_bs);
}

std::uint64_t enumeration_size(std::size_t n_users, std::size_t n_bs) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n_users; ++i) {
    if (n_bs != 0 && total > std::numeric_limits<std::uint64_t>::max() / n_bs)
      return std::numeric_limits<std::uint64_t>::max();
    total *= n_bs;
  }
  return total;
}

ExhaustiveResult exhaustive_search(const LinkGains& gains, const LoadCaps& caps,
                                   const UtilitySpec& utility, std::uint64_t budget) {
  const std::size_t n_users = gains.n_users();
  const std::size_t n_bs = gains.n_bs();
  if (caps.n_users() != n_users || caps.n_bs() != n_bs)
    throw ContractError("exhaustive_search: caps do not match the gain matrix");
  const std::uint64_t size = enumeration_size(n_users, n_bs);
  if (size > budget)
    throw BudgetError("exhaustive_search: J^I = " + std::to_string(n_bs) + "^" +
                      std::to_string(n_users) +
                      (size == std::numeric_limits<std::uint64_t>::max()
                           ? std::string(" overflows 64 bits")
                           : " = " + std::to_string(size)) +
                      " exceeds the enumeration budget of " + std::to_string(budget));
  if (n_bs == 0) throw ContractError("exhaustive_search: no base stations");

  ExhaustiveResult out;
  out.candidates = size;
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;

  std::vector<int> assign(n_users, 0);
  std::vector<int> loads(n_bs, 0);
  loads[0] = static_cast<int>(n_users);
  for (std::uint64_t c = 0; c < size; ++c) {
    bool feasible = true;
    for (std::size_t j = 0; j < n_bs && feasible; ++j) feasible = loads[j] <= caps[j];
    if (feasible) {
      ++out.feasible;
      Association a(assign, n_bs);
      const double value = score_association(a, gains, utility);
      if (!have_best || value > best) {
        best = value;
        out.association = std::move(a);
        have_best = true;
      }
    }
    // Odometer step; the last user varies fastest.
    for (std::size_t k = n_users; k-- > 0;) {
      --loads[static_cast<std::size_t>(assign[k])];
      if (++assign[k] < static_cast<int>(n_bs)) {
        ++loads[static_cast<std::size_t>(assign[k])];
        break;
      }
      assign[k] = 0;
      ++loads[0];
    }
  }
  out.utility = best;
  return out;
}

void DualConfig::validate() const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size))
    throw ContractError("dual.step_size must be a finite value >= 0");
  if (n_iterations < 0) throw ContractError("dual.n_iterations must be >= 0");
  if (!std::isfinite(init_price)) throw ContractError("dual.init_price must be finite");
}

namespace {

std::vector<int> user_rule(const RealMatrix& log_rate, const std::vector<double>& price) {
  std::vector<int> assign(log_rate.rows());
  for (std::size_t i = 0; i < log_rate.rows(); ++i) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < log_rate.cols(); ++j) {
      const double value = log_rate(i, j) - price[j];
      if (value > best_value) {
        best_value = value;
        best = j;
      }
    }
    assign[i] = static_cast<int>(best);
  }
  return assign;
}

}  // namespace

DualResult dual_subgradient_assoc(const LinkGains& gains, const UtilitySpec& utility,
                                  const DualConfig& cfg) {
  cfg.validate();
  if (utility.kind != UtilityKind::logarithmic)
    throw ContractError("dual_subgradient_assoc: requires logarithmic utility");
  const std::size_t n_users = gains.n_users();
  const std::size_t n_bs = gains.n_bs();
  if (n_bs == 0) throw ContractError("dual_subgradient_assoc: no base stations");

  RealMatrix log_rate(n_users, n_bs);
  for (std::size_t i = 0; i < n_users; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_bs; ++j) {
      const double c = gains.full_rate(i, j) / utility.rate_unit_scale;
      log_rate(i, j) = c > 0.0 ? std::log(c) : -std::numeric_limits<double>::infinity();
      any = any || c > 0.0;
    }
    if (!any)
      throw EvaluationError(i, "dual_subgradient_assoc: user " + std::to_string(i) +
                                   " has zero rate on every BS");
  }

  std::vector<double> price(n_bs, cfg.init_price);
  DualResult out;
  out.price_trace.push_back(price);
  std::vector<int> loads(n_bs);
  for (int it = 0; it < cfg.n_iterations; ++it) {
    const auto assign = user_rule(log_rate, price);
    std::fill(loads.begin(), loads.end(), 0);
    for (int j : assign) ++loads[static_cast<std::size_t>(j)];
    for (std::size_t j = 0; j < n_bs; ++j)
      price[j] += cfg.step_size * (loads[j] - std::exp(price[j] - 1.0));
    out.price_trace.push_back(price);
  }
  out.association = Association(user_rule(log_rate, price), n_bs);
  return out;
}

void to_json(nlohmann::json& j, const DualConfig& c) {
  j = {{"step_size", c.step_size}, {"n_iterations", c.n_iterations}, {"init_price", c.init_price}};
}

void from_json(const nlohmann::json& j, DualConfig& c) {
  detail::reject_unknown(j, {"step_size", "n_iterations", "init_price"}, "dual");
  detail::read_opt(j, "step_size", c.step_size);
  detail::read_opt(j, "n_iterations", c.n_iterations);
  detail::read_opt(j, "init_price", c.init_price);
}

}  // namespace ceas
