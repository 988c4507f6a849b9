#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ceas/netmodel.hpp"

namespace ceas {

// One serving BS per user. The one-hot matrix x (and its flattened binary
// vector, index n = i * J + j) is a derived view; an Association cannot hold
// a row with zero or several ones.
class Association {
 public:
  Association() = default;
  Association(std::vector<int> assign, std::size_t n_bs);

  std::size_t n_users() const noexcept { return assign_.size(); }
  std::size_t n_bs() const noexcept { return n_bs_; }
  int bs_of(std::size_t user) const { return assign_[user]; }
  std::span<const int> assign() const noexcept { return assign_; }

  // Flattened x, length I * J.
  std::vector<std::uint8_t> to_binary() const;

  friend bool operator==(const Association&, const Association&) = default;
  friend auto operator<=>(const Association& a, const Association& b) {
    return a.assign_ <=> b.assign_;
  }

 private:
  std::vector<int> assign_;
  std::size_t n_bs_ = 0;
};

// Per-BS load upper bounds L_j.
class LoadCaps {
 public:
  // Throws ContractError when sum(cap) < n_users or any cap is negative.
  LoadCaps(std::vector<int> cap, std::size_t n_users);

  // cap[j] = I everywhere: the load constraint never binds.
  static LoadCaps inactive(std::size_t n_users, std::size_t n_bs);

  std::size_t n_bs() const noexcept { return cap_.size(); }
  std::size_t n_users() const noexcept { return n_users_; }
  int operator[](std::size_t j) const { return cap_[j]; }
  std::span<const int> values() const noexcept { return cap_; }
  bool binding() const;

 private:
  std::vector<int> cap_;
  std::size_t n_users_ = 0;
};

enum class UtilityKind { logarithmic, identity };
enum class LogBase { natural, binary };

struct UtilitySpec {
  UtilityKind kind = UtilityKind::logarithmic;
  // Rates in bit/s are divided by this before the utility (Mbps by default).
  double rate_unit_scale = 1e6;
  LogBase log_base = LogBase::natural;

  friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;
};

bool is_feasible(const Association& a, const LoadCaps& caps);

std::vector<int> bs_loads(const Association& a);

// rate[i] = full_rate[i][assign[i]] / load[assign[i]]  (equal bandwidth share).
std::vector<double> user_rates(const Association& a, const LinkGains& g);

// Sum of U(rate / rate_unit_scale). Throws EvaluationError naming the first
// user with a non-positive rate under logarithmic utility.
double utility_of_rates(std::span<const double> rates_bps, const UtilitySpec& u);
double evaluate_utility(const Association& a, const LinkGains& g, const UtilitySpec& u);

// Same as evaluate_utility but scores a zero-rate link as -infinity instead
// of throwing, so sampling loops stay total.
double score_association(const Association& a, const LinkGains& g, const UtilitySpec& u);

// Deterministic capacity repair. Visits BSs in ascending index; while BS j is
// over its cap, the user on j with the lowest preference(i, j) (ties: highest
// user index) moves to the BS k with spare capacity maximizing
// preference(i, k) (ties: lowest k). Leaves feasible inputs untouched.
void repair_to_caps(std::vector<int>& assign, const LoadCaps& caps,
                    const RealMatrix& preference);

void to_json(nlohmann::json& j, const Association& a);
Association association_from_json(const nlohmann::json& j, std::size_t n_bs);

}  // namespace ceas
