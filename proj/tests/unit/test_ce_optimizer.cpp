#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ceas/baselines.hpp"
#include "ceas/ce_optimizer.hpp"
#include "ceas/errors.hpp"
#include "test_util.hpp"

using namespace ceas;
using ceas::testing::gains_from_rates;
using ceas::testing::random_drop;

namespace {

BernoulliParams repeated_row(std::size_t n_users, const std::vector<double>& row) {
  std::vector<double> u;
  for (std::size_t i = 0; i < n_users; ++i) u.insert(u.end(), row.begin(), row.end());
  return BernoulliParams(n_users, row.size(), u);
}

// Frequency of each BS over `draws` users sampled from identical rows.
std::vector<double> row_frequencies(const std::vector<double>& row, int draws,
                                    const SamplingLimits& limits, std::uint64_t seed) {
  constexpr std::size_t kUsers = 1000;
  const auto params = repeated_row(kUsers, row);
  const auto caps = LoadCaps::inactive(kUsers, row.size());
  Rng rng(seed);
  std::vector<double> counts(row.size(), 0.0);
  for (int k = 0; k < draws / static_cast<int>(kUsers); ++k) {
    const auto a = sample_feasible(params, caps, rng, limits);
    for (int j : a.assign()) counts[static_cast<std::size_t>(j)] += 1.0;
  }
  for (double& c : counts) c /= draws;
  return counts;
}

// Exact law of the row sampler: up to M Bernoulli attempts accepted when
// one-hot, then a categorical draw over the normalized row.
std::vector<double> row_law(const std::vector<double>& u, int max_attempts) {
  const std::size_t n = u.size();
  std::vector<double> onehot(n);
  double accept = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double p = u[j];
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) p *= 1.0 - u[k];
    onehot[j] = p;
    accept += p;
  }
  const double miss = std::pow(1.0 - accept, max_attempts);
  double total = 0.0;
  for (double x : u) total += x;
  std::vector<double> law(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double via_accept = accept > 0.0 ? onehot[j] * (1.0 - miss) / accept : 0.0;
    const double fallback = total > 0.0 ? u[j] / total : 1.0 / static_cast<double>(n);
    law[j] = via_accept + miss * fallback;
  }
  return law;
}

std::vector<Association> random_elites(std::mt19937_64& rng, std::size_t count,
                                       std::size_t n_users, std::size_t n_bs) {
  std::vector<Association> out;
  for (std::size_t s = 0; s < count; ++s) {
    std::vector<int> assign(n_users);
    for (int& a : assign) a = static_cast<int>(rng() % n_bs);
    out.emplace_back(assign, n_bs);
  }
  return out;
}

CEConfig small_config(std::uint64_t seed) {
  CEConfig cfg;
  cfg.n_samples = 100;
  cfg.n_elites = 10;
  cfg.n_iterations = 6;
  cfg.seed = seed;
  cfg.n_threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("sample_feasible follows a degenerate distribution") {
  const auto params = repeated_row(8, {1.0, 0.0, 0.0, 0.0});
  Rng rng(1);
  const auto a = sample_feasible(params, LoadCaps::inactive(8, 4), rng);
  for (int j : a.assign()) CHECK(j == 0);
}

TEST_CASE("row sampler at u = 1/2 with two BSs is balanced") {
  const auto freq = row_frequencies({0.5, 0.5}, 100000, {}, 2);
  CHECK(row_law({0.5, 0.5}, 20)[0] == doctest::Approx(0.5));
  CHECK(std::abs(freq[0] - 0.5) < 0.01);
}

TEST_CASE("all-zero row falls back to a uniform draw") {
  const auto freq = row_frequencies({0.0, 0.0}, 100000, {}, 3);
  CHECK(std::abs(freq[0] - 0.5) < 0.01);
}

TEST_CASE("row sampler matches its exact law on asymmetric rows") {
  const std::vector<std::vector<double>> rows = {
      {0.7, 0.2, 0.4}, {0.9, 0.9, 0.1}, {0.05, 0.1, 0.0, 0.3}, {1.0, 1.0, 0.0}};
  for (int attempts : {1, 2, 20}) {
    for (const auto& row : rows) {
      const auto law = row_law(row, attempts);
      const auto freq = row_frequencies(row, 100000, {attempts, 100}, 7 + attempts);
      for (std::size_t j = 0; j < row.size(); ++j) CHECK(std::abs(freq[j] - law[j]) < 0.01);
    }
  }
}

TEST_CASE("sampler is uniform over BSs at u = 1/2 (chi-square)") {
  for (std::size_t n_bs : {2u, 3u, 4u}) {
    const std::vector<double> row(n_bs, 0.5);
    const auto freq = row_frequencies(row, 100000, {}, 100 + n_bs);
    double stat = 0.0;
    const double expected = 100000.0 / static_cast<double>(n_bs);
    for (double f : freq) stat += std::pow(f * 100000.0 - expected, 2) / expected;
    // Upper 0.001 quantiles of chi-square with 1, 2, 3 degrees of freedom.
    const double critical[] = {10.828, 13.816, 16.266};
    CHECK(stat < critical[n_bs - 2]);
  }
}

TEST_CASE("sampled associations respect binding caps") {
  const auto params = BernoulliParams::uniform(30, 4);
  const LoadCaps caps({10, 7, 7, 7}, 30);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) CHECK(is_feasible(sample_feasible(params, caps, rng), caps));
  // Forced repair path: a single vector attempt with all mass on BS 0.
  const auto skewed = repeated_row(30, {1.0, 0.0, 0.0, 0.0});
  const auto a = sample_feasible(skewed, caps, rng, {20, 1});
  CHECK(is_feasible(a, caps));
  CHECK(bs_loads(a)[0] == 10);
}

TEST_CASE("sample_feasible rejects mismatched caps") {
  Rng rng(1);
  CHECK_THROWS_AS(sample_feasible(BernoulliParams::uniform(3, 2), LoadCaps::inactive(3, 3), rng),
                  ContractError);
}

TEST_CASE("score_samples") {
  // Mbps: user 0 gets 4 on BS 0 and 2 on BS 1; user 1 gets 2 and 8.
  const auto g = gains_from_rates({{4e6, 2e6}, {2e6, 8e6}});
  const UtilitySpec identity{UtilityKind::identity};
  const std::vector<Association> samples{Association({0, 0}, 2), Association({0, 1}, 2),
                                         Association({1, 0}, 2)};
  // Sharing BS 0: 2 + 1; split: 4 + 8; crossed: 2 + 2.
  CHECK(score_samples(samples, g, identity) == std::vector<double>{3.0, 12.0, 4.0});
  const auto logs = score_samples(samples, g, {});
  CHECK(logs[0] == doctest::Approx(std::log(2.0)));
  CHECK(logs[1] == doctest::Approx(std::log(32.0)));
  CHECK(logs[2] == doctest::Approx(std::log(4.0)));

  CHECK(score_samples(std::vector<Association>{samples[1]}, g, identity) ==
        std::vector<double>{12.0});
  const std::vector<Association> dup{samples[2], samples[2]};
  CHECK(score_samples(dup, g, identity) == std::vector<double>{4.0, 4.0});
}

TEST_CASE("select_elites") {
  CHECK(select_elites(std::vector<double>{3, 1, 2}, 2) == std::vector<std::size_t>{0, 2});
  CHECK(select_elites(std::vector<double>{5, 5, 5, 5}, 3) == std::vector<std::size_t>{0, 1, 2});
  auto all = select_elites(std::vector<double>{1, 4, 2, 3}, 4);
  CHECK(all == std::vector<std::size_t>{1, 3, 2, 0});
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(select_elites(std::vector<double>{ninf, 1.0, ninf}, 2) == std::vector<std::size_t>{1, 0});
  CHECK_THROWS_AS(select_elites(std::vector<double>{1.0}, 2), ContractError);
}

TEST_CASE("update_params is the elite mean") {
  const std::vector<Association> same(3, Association({1, 0}, 2));
  const auto v = update_params(same);
  CHECK(v.at(0, 1) == 1.0);
  CHECK(v.at(0, 0) == 0.0);
  CHECK(v.at(1, 0) == 1.0);

  std::vector<Association> ten;
  for (int s = 0; s < 10; ++s) ten.emplace_back(std::vector<int>{s < 4 ? 0 : 1}, 2);
  CHECK(update_params(ten).at(0, 0) == 0.4);
  CHECK(update_params(ten).at(0, 1) == 0.6);

  const Association one({2, 0, 1}, 3);
  const auto v1 = update_params(std::vector<Association>{one});
  const auto x = one.to_binary();
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(v1[n] == static_cast<double>(x[n]));

  CHECK_THROWS_AS(update_params(std::vector<Association>{}), ContractError);
}

TEST_CASE("update_params equals the exact rational column mean") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n_users = 1 + rng() % 6;
    const std::size_t n_bs = 1 + rng() % 4;
    const std::size_t count = 1 + rng() % 13;
    const auto elites = random_elites(rng, count, n_users, n_bs);
    const auto v = update_params(elites);
    for (std::size_t n = 0; n < n_users * n_bs; ++n) {
      long ones = 0;
      for (const auto& e : elites) ones += e.to_binary()[n];
      const long g = std::gcd(ones, static_cast<long>(count));
      const long num = ones / g;
      const long den = static_cast<long>(count) / g;
      // num/den correctly rounded; exact in binary when den is a power of two.
      CHECK(v[n] == static_cast<double>(num) / static_cast<double>(den));
      if ((den & (den - 1)) == 0) CHECK(v[n] * static_cast<double>(den) == static_cast<double>(num));
    }
  }
}

TEST_CASE("elite_log_likelihood") {
  const Association x({0}, 2);  // binary (1, 0)
  const std::vector<Association> one{x};
  CHECK(elite_log_likelihood(one, BernoulliParams(1, 2, {1.0, 0.0}), 2) == 0.0);
  CHECK(elite_log_likelihood(one, BernoulliParams(1, 2, {0.5, 0.5}), 2) ==
        doctest::Approx(-0.6931471805599453));
  CHECK(elite_log_likelihood(one, BernoulliParams(1, 2, {0.0, 0.5}), 2) ==
        -std::numeric_limits<double>::infinity());
  // The 1/S factor.
  CHECK(elite_log_likelihood(one, BernoulliParams(1, 2, {0.5, 0.5}), 4) ==
        doctest::Approx(-0.6931471805599453 / 2));
}

TEST_CASE("the elite mean maximizes the elite log-likelihood") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int set = 0; set < 20; ++set) {
    const std::size_t n_users = 1 + rng() % 5;
    const std::size_t n_bs = 2 + rng() % 3;
    const std::size_t count = 1 + rng() % 10;
    const auto elites = random_elites(rng, count, n_users, n_bs);
    const auto v = update_params(elites);
    const double best = elite_log_likelihood(elites, v, 500);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> u(v.values().begin(), v.values().end());
      for (double& p : u) p = std::clamp(p + noise(rng), 0.0, 1.0);
      CHECK(best >= elite_log_likelihood(elites, BernoulliParams(n_users, n_bs, u), 500));
    }
  }
}

TEST_CASE("smooth_update") {
  const BernoulliParams prev(1, 1, {0.5});
  const BernoulliParams v(1, 1, {0.4});
  CHECK(smooth_update(prev, v, 1.0) == v);
  CHECK(smooth_update(prev, v, 0.0) == prev);
  CHECK(std::abs(smooth_update(prev, v, 0.7)[0] - 0.43) <= 1e-15);
  CHECK_THROWS_AS(smooth_update(prev, v, 1.5), ContractError);
  CHECK_THROWS_AS(smooth_update(prev, BernoulliParams::uniform(1, 2), 0.5), ContractError);
}

TEST_CASE("smooth_update stays between prev and v, monotone in alpha") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(6), b(6);
    for (double& x : a) x = u01(rng);
    for (double& x : b) x = u01(rng);
    const BernoulliParams prev(2, 3, a), v(2, 3, b);
    double lo_alpha = u01(rng), hi_alpha = u01(rng);
    if (lo_alpha > hi_alpha) std::swap(lo_alpha, hi_alpha);
    const auto lo = smooth_update(prev, v, lo_alpha);
    const auto hi = smooth_update(prev, v, hi_alpha);
    for (std::size_t n = 0; n < 6; ++n) {
      CHECK(lo[n] >= 0.0);
      CHECK(lo[n] <= 1.0);
      CHECK(lo[n] >= std::min(a[n], b[n]) - 1e-15);
      CHECK(lo[n] <= std::max(a[n], b[n]) + 1e-15);
      // Closer to v as alpha grows.
      CHECK(std::abs(hi[n] - b[n]) <= std::abs(lo[n] - b[n]) + 1e-15);
    }
  }
}

TEST_CASE("ceas_run finds the optimum of a 2x2 instance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_drop(2, 2, seed);
    const auto caps = LoadCaps::inactive(2, 2);
    CEConfig cfg;
    cfg.seed = seed;
    cfg.n_threads = 1;
    const auto run = ceas_run(g, caps, {}, cfg);
    const auto best = exhaustive_search(g, caps, {});
    CHECK(run.utility == best.utility);
    CHECK(run.utility == evaluate_utility(run.association, g, {}));
  }
}

TEST_CASE("ceas_run trace invariants") {
  const auto g = random_drop(30, 4, 77);
  const LoadCaps caps({10, 7, 7, 7}, 30);
  CEConfig cfg = small_config(5);
  cfg.record_params = true;
  std::size_t seen = 0;
  double best_seen = -std::numeric_limits<double>::infinity();
  const auto run = ceas_run(g, caps, {}, cfg, [&](int, auto samples, auto scores) {
    for (std::size_t s = 0; s < samples.size(); ++s) {
      CHECK(is_feasible(samples[s], caps));
      best_seen = std::max(best_seen, scores[s]);
      ++seen;
    }
  });
  const auto& tr = run.trace;
  CHECK(seen == 600);
  CHECK(tr.samples_scored == 600);
  CHECK(tr.iterations_run == 6);
  CHECK(tr.per_iteration.size() == 6);
  CHECK(tr.incumbent_score == best_seen);
  CHECK(run.utility == best_seen);
  CHECK(is_feasible(run.association, caps));
  for (std::size_t t = 1; t < tr.per_iteration.size(); ++t) {
    CHECK(tr.per_iteration[t].incumbent_score >= tr.per_iteration[t - 1].incumbent_score);
    CHECK(tr.per_iteration[t].best_score <= tr.per_iteration[t].incumbent_score);
    CHECK(tr.per_iteration[t].elite_mean_score <= tr.per_iteration[t].best_score);
  }
  CHECK(tr.per_iteration.front().params == std::vector<double>(120, 0.5));
  CHECK(tr.per_iteration.back().params.size() == 120);
}

TEST_CASE("ceas_run is deterministic and independent of thread count") {
  const auto g = random_drop(20, 4, 3);
  const auto caps = LoadCaps::inactive(20, 4);
  CEConfig cfg = small_config(9);
  const auto a = ceas_run(g, caps, {}, cfg);
  const auto b = ceas_run(g, caps, {}, cfg);
  cfg.n_threads = 4;
  const auto c = ceas_run(g, caps, {}, cfg);
  for (const auto* other : {&b, &c}) {
    CHECK(other->association == a.association);
    CHECK(other->utility == a.utility);
    REQUIRE(other->trace.per_iteration.size() == a.trace.per_iteration.size());
    for (std::size_t t = 0; t < a.trace.per_iteration.size(); ++t) {
      CHECK(other->trace.per_iteration[t].best_score == a.trace.per_iteration[t].best_score);
      CHECK(other->trace.per_iteration[t].mean_score == a.trace.per_iteration[t].mean_score);
      CHECK(other->trace.per_iteration[t].iteration_best == a.trace.per_iteration[t].iteration_best);
    }
  }
  cfg.seed = 10;
  CHECK(ceas_run(g, caps, {}, cfg).trace.per_iteration.front().mean_score !=
        a.trace.per_iteration.front().mean_score);
}

TEST_CASE("stagnation stop ends the run early") {
  const auto g = random_drop(4, 2, 1);
  CEConfig cfg = small_config(2);
  cfg.n_iterations = 50;
  cfg.stagnation_iterations = 3;
  const auto run = ceas_run(g, LoadCaps::inactive(4, 2), {}, cfg);
  CHECK(run.trace.iterations_run < 50);
  CHECK(run.trace.per_iteration.size() == static_cast<std::size_t>(run.trace.iterations_run));
}

TEST_CASE("CEConfig validation") {
  CEConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_elites = 600;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = {};
  cfg.smoothing_alpha = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = {};
  cfg.warm_start = std::vector<int>{0, 1};
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  const auto g = random_drop(3, 2, 1);
  CHECK_THROWS_AS(ceas_run(g, LoadCaps::inactive(3, 3), {}, CEConfig{}), ContractError);
}

TEST_CASE("trace records carry per-iteration scores") {
  const auto g = random_drop(5, 3, 8);
  const auto run = ceas_run(g, LoadCaps::inactive(5, 3), {}, small_config(1));
  const auto recs = trace_records(run.trace);
  REQUIRE(recs.size() == 6);
  CHECK(recs[2]["t"] == 2);
  CHECK(recs[2]["best_score"].get<double>() == run.trace.per_iteration[2].best_score);
  CHECK(recs[5].contains("elite_mean_score"));
  CHECK(recs[5].contains("mean_score"));
}
