#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "ceas/baselines.hpp"
#include "ceas/ce_optimizer.hpp"
#include "ceas/errors.hpp"
#include "test_util.hpp"

using namespace ceas;
using ceas::testing::gains_from_rates;
using ceas::testing::random_drop;

namespace {

// Recursive brute force with its own utility arithmetic (log of Mbps).
std::pair<std::vector<int>, double> brute_force(const LinkGains& g, const std::vector<int>& cap) {
  const std::size_t n_users = g.n_users();
  const std::size_t n_bs = g.n_bs();
  std::vector<int> current(n_users), best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n_users) {
      std::vector<int> load(n_bs, 0);
      for (int j : current) ++load[static_cast<std::size_t>(j)];
      for (std::size_t j = 0; j < n_bs; ++j)
        if (load[j] > cap[j]) return;
      double value = 0.0;
      for (std::size_t k = 0; k < n_users; ++k) {
        const auto j = static_cast<std::size_t>(current[k]);
        value += std::log(g.full_rate(k, j) / load[j] / 1e6);
      }
      if (best.empty() || value > best_value) {
        best_value = value;
        best = current;
      }
      return;
    }
    for (std::size_t j = 0; j < n_bs; ++j) {
      current[i] = static_cast<int>(j);
      rec(i + 1);
    }
  };
  rec(0);
  return {best, best_value};
}

}  // namespace

TEST_CASE("max_sinr_assoc picks the strongest link") {
  LinkGains g = gains_from_rates({{1, 1}, {1, 1}, {1, 1}});
  g.sinr(0, 0) = 2;
  g.sinr(0, 1) = 1;
  g.sinr(1, 0) = 1;
  g.sinr(1, 1) = 2;
  g.sinr(2, 0) = 3;
  g.sinr(2, 1) = 3;
  CHECK(max_sinr_assoc(g) == Association({0, 1, 0}, 2));
}

TEST_CASE("max_sinr_assoc overloads the macro cell for users near it") {
  ScenarioConfig cfg;
  auto dep = generate_deployment(cfg, 12);
  for (auto& u : dep.users) u = {u.x * 0.05, u.y * 0.05};  // within 25 m of the MBS
  const auto a = max_sinr_assoc(compute_link_gains(dep));
  CHECK(bs_loads(a)[0] == 30);
}

TEST_CASE("max_sinr_assoc is invariant to increasing transforms of SINR") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_drop(30, 4, seed);
    LinkGains t = g;
    for (double& v : t.sinr.values()) v = std::log1p(std::sqrt(v)) * 3.0 + 1.0;
    CHECK(max_sinr_assoc(t) == max_sinr_assoc(g));
  }
}

TEST_CASE("exhaustive_search on tiny instances") {
  const auto one = gains_from_rates({{3e6, 9e6, 5e6}});
  const auto r1 = exhaustive_search(one, LoadCaps::inactive(1, 3), {});
  CHECK(r1.association == Association({1}, 3));
  CHECK(r1.utility == doctest::Approx(std::log(9.0)));
  CHECK(r1.candidates == 3);

  // Sharing one BS halves both rates, so the optimum splits the users.
  const auto sym = gains_from_rates({{4e6, 4e6}, {4e6, 4e6}});
  const auto r2 = exhaustive_search(sym, LoadCaps::inactive(2, 2), {UtilityKind::identity});
  CHECK(r2.association == Association({0, 1}, 2));
  CHECK(r2.utility == doctest::Approx(8.0));
}

TEST_CASE("exhaustive_search matches an independent brute force") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_drop(6, 3, seed);
    const auto ours = exhaustive_search(g, LoadCaps::inactive(6, 3), {});
    const auto ref = brute_force(g, {6, 6, 6});
    CHECK(ours.candidates == 729);
    CHECK(ours.utility == doctest::Approx(ref.second).epsilon(1e-12));
    CHECK(std::vector<int>(ours.association.assign().begin(), ours.association.assign().end()) ==
          ref.first);

    const std::vector<int> cap{2, 2, 2};
    const auto capped = exhaustive_search(g, LoadCaps(cap, 6), {});
    const auto capped_ref = brute_force(g, cap);
    CHECK(capped.utility == doctest::Approx(capped_ref.second).epsilon(1e-12));
    CHECK(capped.feasible == 90);  // 6! / (2! 2! 2!)
  }
}

TEST_CASE("exhaustive_search refuses instances over budget") {
  const auto g = random_drop(20, 4, 1);
  CHECK(enumeration_size(20, 4) == 1099511627776ULL);
  CHECK_THROWS_AS(exhaustive_search(g, LoadCaps::inactive(20, 4), {}), BudgetError);
  CHECK_THROWS_AS(exhaustive_search(random_drop(6, 3, 1), LoadCaps::inactive(6, 3), {}, 728),
                  BudgetError);
  CHECK(enumeration_size(100, 4) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("exhaustive_search dominates CEAS and repaired Max-SINR") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_drop(7, 3, 100 + seed);
    const LoadCaps caps({3, 3, 3}, 7);
    const auto best = exhaustive_search(g, caps, {});
    CEConfig cfg;
    cfg.seed = seed;
    cfg.n_threads = 1;
    cfg.n_samples = 200;
    CHECK(best.utility >= ceas_run(g, caps, {}, cfg).utility);
    const auto raw = max_sinr_assoc(g);
    std::vector<int> assign(raw.assign().begin(), raw.assign().end());
    repair_to_caps(assign, caps, g.sinr);
    const Association repaired(assign, 3);
    REQUIRE(is_feasible(repaired, caps));
    CHECK(best.utility >= evaluate_utility(repaired, g, {}));
  }
}

TEST_CASE("dual baseline with a single BS") {
  const auto g = random_drop(5, 1, 2);
  const auto r = dual_subgradient_assoc(g, {}, {});
  CHECK(bs_loads(r.association) == std::vector<int>{5});
  CHECK(r.price_trace.size() == 101);
}

TEST_CASE("dual baseline with zero step keeps the initial prices") {
  const auto g = random_drop(30, 4, 6);
  DualConfig cfg;
  cfg.step_size = 0.0;
  cfg.init_price = 0.3;
  const auto r = dual_subgradient_assoc(g, {}, cfg);
  for (const auto& mu : r.price_trace) CHECK(mu == std::vector<double>(4, 0.3));
  // Equal prices reduce the user rule to the best full-bandwidth link.
  CHECK(r.association == max_sinr_assoc(g));
}

TEST_CASE("dual baseline prices follow the subgradient step") {
  const auto g = gains_from_rates({{8e6, 2e6}, {6e6, 3e6}, {5e6, 1e6}});
  DualConfig cfg;
  cfg.step_size = 0.5;
  cfg.n_iterations = 1;
  cfg.init_price = 1.0;
  const auto r = dual_subgradient_assoc(g, {}, cfg);
  // All users start on BS 0: loads (3, 0), K = e^0 = 1.
  CHECK(r.price_trace[1][0] == doctest::Approx(1.0 + 0.5 * (3 - 1)));
  CHECK(r.price_trace[1][1] == doctest::Approx(1.0 + 0.5 * (0 - 1)));
}

TEST_CASE("dual baseline lands between Max-SINR and the optimum") {
  int between = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = random_drop(6, 3, 1000 + seed);
    const double low = evaluate_utility(max_sinr_assoc(g), g, {});
    const double high = exhaustive_search(g, LoadCaps::inactive(6, 3), {}).utility;
    const double dual = evaluate_utility(dual_subgradient_assoc(g, {}, {}).association, g, {});
    if (dual >= low - 1e-12 && dual <= high + 1e-12) ++between;
  }
  CHECK(between >= 90);
}

TEST_CASE("dual baseline is sensitive to the step size") {
  const auto g = random_drop(30, 4, 21);
  std::set<double> utilities;
  for (double step : {0.01, 0.1, 1.0}) {
    DualConfig cfg;
    cfg.step_size = step;
    utilities.insert(evaluate_utility(dual_subgradient_assoc(g, {}, cfg).association, g, {}));
  }
  CHECK(utilities.size() >= 2);
}

TEST_CASE("dual baseline errors") {
  const auto dead = gains_from_rates({{1e6, 2e6}, {0.0, 0.0}});
  try {
    (void)dual_subgradient_assoc(dead, {}, {});
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.user() == 1);
  }
  CHECK_THROWS_AS(dual_subgradient_assoc(dead, {UtilityKind::identity}, {}), ContractError);
  DualConfig bad;
  bad.step_size = -1.0;
  CHECK_THROWS_AS(dual_subgradient_assoc(random_drop(3, 2, 1), {}, bad), ContractError);
}
