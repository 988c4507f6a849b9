#include "ceas/association.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ceas/errors.hpp"

namespace ceas {

Association::Association(std::vector<int> assign, std::size_t n_bs)
    : assign_(std::move(assign)), n_bs_(n_bs) {
  for (std::size_t i = 0; i < assign_.size(); ++i)
    if (assign_[i] < 0 || static_cast<std::size_t>(assign_[i]) >= n_bs_)
      throw ContractError("Association: user " + std::to_string(i) + " assigned to BS " +
                          std::to_string(assign_[i]) + " outside [0, " +
                          std::to_string(n_bs_) + ")");
}

std::vector<std::uint8_t> Association::to_binary() const {
  std::vector<std::uint8_t> x(assign_.size() * n_bs_, 0);
  for (std::size_t i = 0; i < assign_.size(); ++i)
    x[i * n_bs_ + static_cast<std::size_t>(assign_[i])] = 1;
  return x;
}

LoadCaps::LoadCaps(std::vector<int> cap, std::size_t n_users)
    : cap_(std::move(cap)), n_users_(n_users) {
  long long total = 0;
  for (int c : cap_) {
    if (c < 0) throw ContractError("LoadCaps: negative cap");
    total += c;
  }
  if (total < static_cast<long long>(n_users))
    throw ContractError("LoadCaps: caps sum to " + std::to_string(total) + " < " +
                        std::to_string(n_users) + " users, no feasible association");
}

LoadCaps LoadCaps::inactive(std::size_t n_users, std::size_t n_bs) {
  return LoadCaps(std::vector<int>(n_bs, static_cast<int>(n_users)), n_users);
}

bool LoadCaps::binding() const {
  for (int c : cap_)
    if (static_cast<std::size_t>(c) < n_users_) return true;
  return false;
}

bool is_feasible(const Association& a, const LoadCaps& caps) {
  if (a.n_bs() != caps.n_bs() || a.n_users() != caps.n_users())
    throw ContractError("is_feasible: association and caps have different dimensions");
  const auto loads = bs_loads(a);
  for (std::size_t j = 0; j < loads.size(); ++j)
    if (loads[j] > caps[j]) return false;
  return true;
}

std::vector<int> bs_loads(const Association& a) {
  std::vector<int> loads(a.n_bs(), 0);
  for (int j : a.assign()) ++loads[static_cast<std::size_t>(j)];
  return loads;
}

std::vector<double> user_rates(const Association& a, const LinkGains& g) {
  if (a.n_users() != g.n_users() || a.n_bs() != g.n_bs())
    throw ContractError("user_rates: association and gains have different dimensions");
  const auto loads = bs_loads(a);
  std::vector<double> rates(a.n_users());
  for (std::size_t i = 0; i < a.n_users(); ++i) {
    const auto j = static_cast<std::size_t>(a.bs_of(i));
    rates[i] = g.full_rate(i, j) / loads[j];
  }
  return rates;
}

namespace {

double log_in(double x, LogBase base) {
  return base == LogBase::natural ? std::log(x) : std::log2(x);
}

}  // namespace

double utility_of_rates(std::span<const double> rates_bps, const UtilitySpec& u) {
  double total = 0.0;
  for (std::size_t i = 0; i < rates_bps.size(); ++i) {
    const double r = rates_bps[i] / u.rate_unit_scale;
    if (u.kind == UtilityKind::identity) {
      total += r;
      continue;
    }
    if (!(r > 0.0))
      throw EvaluationError(i, "logarithmic utility: user " + std::to_string(i) +
                                   " has non-positive rate");
    total += log_in(r, u.log_base);
  }
  return total;
}

double evaluate_utility(const Association& a, const LinkGains& g, const UtilitySpec& u) {
  const auto rates = user_rates(a, g);
  return utility_of_rates(rates, u);
}

double score_association(const Association& a, const LinkGains& g, const UtilitySpec& u) {
  try {
    return evaluate_utility(a, g, u);
  } catch (const EvaluationError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

void repair_to_caps(std::vector<int>& assign, const LoadCaps& caps,
                    const RealMatrix& preference) {
  const std::size_t n_bs = caps.n_bs();
  if (assign.size() != caps.n_users() || preference.rows() != assign.size() ||
      preference.cols() != n_bs)
    throw ContractError("repair_to_caps: dimension mismatch");
  std::vector<int> loads(n_bs, 0);
  for (int j : assign) ++loads[static_cast<std::size_t>(j)];

  for (std::size_t j = 0; j < n_bs; ++j) {
    while (loads[j] > caps[j]) {
      std::size_t victim = assign.size();
      for (std::size_t i = 0; i < assign.size(); ++i) {
        if (static_cast<std::size_t>(assign[i]) != j) continue;
        if (victim == assign.size() || preference(i, j) <= preference(victim, j)) victim = i;
      }
      std::size_t target = n_bs;
      for (std::size_t k = 0; k < n_bs; ++k) {
        if (k == j || loads[k] >= caps[k]) continue;
        if (target == n_bs || preference(victim, k) > preference(victim, target)) target = k;
      }
      // Sum of caps >= I guarantees spare capacity somewhere.
      assign[victim] = static_cast<int>(target);
      --loads[j];
      ++loads[target];
    }
  }
}

void to_json(nlohmann::json& j, const Association& a) {
  j = std::vector<int>(a.assign().begin(), a.assign().end());
}

Association association_from_json(const nlohmann::json& j, std::size_t n_bs) {
  try {
    return Association(j.get<std::vector<int>>(), n_bs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("association: ") + e.what());
  }
}

}  // namespace ceas
