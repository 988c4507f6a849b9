#include "ceas/ce_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "ceas/errors.hpp"
#include "json_util.hpp"

namespace ceas {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Mean of a score list; -inf propagates.
double mean_of(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

int draw_row(std::span<const double> u_row, Rng& rng, int max_row_resamples) {
  const int n_bs = static_cast<int>(u_row.size());
  for (int attempt = 0; attempt < max_row_resamples; ++attempt) {
    int ones = 0;
    int chosen = -1;
    for (int j = 0; j < n_bs && ones < 2; ++j) {
      if (uniform01(rng) < u_row[static_cast<std::size_t>(j)]) {
        ++ones;
        chosen = j;
      }
    }
    if (ones == 1) return chosen;
  }
  // Categorical fallback over the normalized row.
  const double total = std::accumulate(u_row.begin(), u_row.end(), 0.0);
  const double r = uniform01(rng);
  if (!(total > 0.0)) return std::min(static_cast<int>(r * n_bs), n_bs - 1);
  const double target = r * total;
  double acc = 0.0;
  int last_positive = 0;
  for (int j = 0; j < n_bs; ++j) {
    const double p = u_row[static_cast<std::size_t>(j)];
    if (p <= 0.0) continue;
    acc += p;
    last_positive = j;
    if (target < acc) return j;
  }
  return last_positive;
}

template <typename Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
  std::size_t workers = n_threads > 0 ? static_cast<std::size_t>(n_threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < n; k += workers) fn(k);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void CEConfig::validate() const {
  if (n_samples < 1) throw ContractError("ce.n_samples must be >= 1");
  if (n_elites < 1) throw ContractError("ce.n_elites must be >= 1");
  if (n_elites > n_samples) throw ContractError("ce.n_elites must not exceed ce.n_samples");
  if (n_iterations < 1) throw ContractError("ce.n_iterations must be >= 1");
  if (!(smoothing_alpha >= 0.0 && smoothing_alpha <= 1.0))
    throw ContractError("ce.smoothing_alpha must lie in [0, 1]");
  if (max_row_resamples < 1) throw ContractError("ce.max_row_resamples must be >= 1");
  if (max_vector_resamples < 1) throw ContractError("ce.max_vector_resamples must be >= 1");
  if (n_threads < 0) throw ContractError("ce.n_threads must be >= 0");
  if (stagnation_iterations < 0) throw ContractError("ce.stagnation_iterations must be >= 0");
  if (warm_start) throw ContractError("ce.warm_start is reserved and not supported");
}

BernoulliParams::BernoulliParams(std::size_t n_users, std::size_t n_bs, std::vector<double> u)
    : n_users_(n_users), n_bs_(n_bs), u_(std::move(u)) {
  if (u_.size() != n_users_ * n_bs_)
    throw ContractError("BernoulliParams: expected " + std::to_string(n_users_ * n_bs_) +
                        " entries, got " + std::to_string(u_.size()));
  for (double p : u_)
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("BernoulliParams: entry outside [0, 1]");
}

BernoulliParams BernoulliParams::uniform(std::size_t n_users, std::size_t n_bs) {
  return BernoulliParams(n_users, n_bs, std::vector<double>(n_users * n_bs, 0.5));
}

RealMatrix BernoulliParams::as_matrix() const {
  RealMatrix m(n_users_, n_bs_);
  std::copy(u_.begin(), u_.end(), m.values().begin());
  return m;
}

Association sample_feasible(const BernoulliParams& params, const LoadCaps& caps, Rng& rng,
                            const SamplingLimits& limits) {
  const std::size_t n_users = params.n_users();
  const std::size_t n_bs = params.n_bs();
  if (caps.n_users() != n_users || caps.n_bs() != n_bs)
    throw ContractError("sample_feasible: params and caps have different dimensions");
  if (n_bs == 0) {
    if (n_users == 0) return Association({}, 0);
    throw ContractError("sample_feasible: no base stations");
  }

  std::vector<int> assign(n_users);
  std::vector<int> loads(n_bs);
  for (int attempt = 0; attempt < limits.max_vector_resamples; ++attempt) {
    std::fill(loads.begin(), loads.end(), 0);
    bool within_caps = true;
    for (std::size_t i = 0; i < n_users; ++i) {
      assign[i] = draw_row(params.row(i), rng, limits.max_row_resamples);
      within_caps = ++loads[static_cast<std::size_t>(assign[i])] <= caps[assign[i]] && within_caps;
    }
    if (within_caps) return Association(std::move(assign), n_bs);
  }
  repair_to_caps(assign, caps, params.as_matrix());
  return Association(std::move(assign), n_bs);
}

std::vector<double> score_samples(std::span<const Association> samples, const LinkGains& gains,
                                  const UtilitySpec& utility) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& a : samples) scores.push_back(score_association(a, gains, utility));
  return scores;
}

std::vector<std::size_t> select_elites(std::span<const double> scores, std::size_t n_elites) {
  if (n_elites > scores.size())
    throw ContractError("select_elites: more elites requested than samples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mid = order.begin() + static_cast<std::ptrdiff_t>(n_elites);
  std::partial_sort(order.begin(), mid, order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(n_elites);
  return order;
}

BernoulliParams update_params(std::span<const Association> elites) {
  if (elites.empty()) throw ContractError("update_params: empty elite set");
  const std::size_t n_users = elites.front().n_users();
  const std::size_t n_bs = elites.front().n_bs();
  std::vector<std::size_t> counts(n_users * n_bs, 0);
  for (const auto& e : elites) {
    if (e.n_users() != n_users || e.n_bs() != n_bs)
      throw ContractError("update_params: elites have different dimensions");
    for (std::size_t i = 0; i < n_users; ++i)
      ++counts[i * n_bs + static_cast<std::size_t>(e.bs_of(i))];
  }
  std::vector<double> v(counts.size());
  const auto n = static_cast<double>(elites.size());
  for (std::size_t k = 0; k < counts.size(); ++k) v[k] = static_cast<double>(counts[k]) / n;
  return BernoulliParams(n_users, n_bs, std::move(v));
}

double elite_log_likelihood(std::span<const Association> elites, const BernoulliParams& params,
                            std::size_t n_samples) {
  if (n_samples == 0) throw ContractError("elite_log_likelihood: n_samples must be >= 1");
  double total = 0.0;
  for (const auto& e : elites) {
    if (e.n_users() != params.n_users() || e.n_bs() != params.n_bs())
      throw ContractError("elite_log_likelihood: dimension mismatch");
    const auto x = e.to_binary();
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double p = x[n] ? params[n] : 1.0 - params[n];
      if (p <= 0.0) return -std::numeric_limits<double>::infinity();
      total += std::log(p);
    }
  }
  return total / static_cast<double>(n_samples);
}

BernoulliParams smooth_update(const BernoulliParams& prev, const BernoulliParams& v,
                              double alpha) {
  if (prev.n_users() != v.n_users() || prev.n_bs() != v.n_bs())
    throw ContractError("smooth_update: dimension mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("smooth_update: alpha outside [0, 1]");
  std::vector<double> u(prev.size());
  for (std::size_t n = 0; n < u.size(); ++n)
    u[n] = std::clamp(alpha * v[n] + (1.0 - alpha) * prev[n], 0.0, 1.0);
  return BernoulliParams(prev.n_users(), prev.n_bs(), std::move(u));
}

CEResult ceas_run(const LinkGains& gains, const LoadCaps& caps, const UtilitySpec& utility,
                  const CEConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  const std::size_t n_users = gains.n_users();
  const std::size_t n_bs = gains.n_bs();
  if (caps.n_users() != n_users || caps.n_bs() != n_bs)
    throw ContractError("ceas_run: caps do not match the gain matrix");

  const auto n_samples = static_cast<std::size_t>(cfg.n_samples);
  const auto n_elites = static_cast<std::size_t>(cfg.n_elites);
  const SamplingLimits limits{cfg.max_row_resamples, cfg.max_vector_resamples};

  BernoulliParams u = BernoulliParams::uniform(n_users, n_bs);
  CEResult result;
  CERunTrace& trace = result.trace;
  trace.incumbent_score = kNegInf;
  bool have_incumbent = false;
  int since_improvement = 0;

  std::vector<Association> samples(n_samples);
  std::vector<double> scores(n_samples);
  for (int t = 0; t < cfg.n_iterations; ++t) {
    parallel_for(n_samples, cfg.n_threads, [&](std::size_t s) {
      Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(t), s});
      samples[s] = sample_feasible(u, caps, rng, limits);
      scores[s] = score_association(samples[s], gains, utility);
    });
    trace.samples_scored += n_samples;
    if (observer) observer(t, samples, scores);

    const auto elite_idx = select_elites(scores, n_elites);
    std::vector<Association> elites;
    std::vector<double> elite_scores;
    elites.reserve(n_elites);
    for (std::size_t k : elite_idx) {
      elites.push_back(samples[k]);
      elite_scores.push_back(scores[k]);
    }

    bool improved = false;
    if (!have_incumbent || elite_scores.front() > trace.incumbent_score) {
      trace.incumbent = elites.front();
      trace.incumbent_score = elite_scores.front();
      improved = have_incumbent;
      have_incumbent = true;
    }

    IterationRecord rec;
    rec.t = t;
    rec.best_score = elite_scores.front();
    rec.elite_mean_score = mean_of(elite_scores);
    rec.mean_score = mean_of(scores);
    rec.incumbent_score = trace.incumbent_score;
    rec.iteration_best = elites.front();
    if (cfg.record_params) rec.params.assign(u.values().begin(), u.values().end());
    trace.per_iteration.push_back(std::move(rec));
    trace.iterations_run = t + 1;

    u = smooth_update(u, update_params(elites), cfg.smoothing_alpha);

    since_improvement = improved || t == 0 ? 0 : since_improvement + 1;
    if (cfg.stagnation_iterations > 0 && since_improvement >= cfg.stagnation_iterations) break;
  }

  result.association = trace.incumbent;
  result.utility = trace.incumbent_score;
  return result;
}

void to_json(nlohmann::json& j, const CEConfig& c) {
  j = {{"n_samples", c.n_samples},
       {"n_elites", c.n_elites},
       {"n_iterations", c.n_iterations},
       {"smoothing_alpha", c.smoothing_alpha},
       {"max_row_resamples", c.max_row_resamples},
       {"max_vector_resamples", c.max_vector_resamples},
       {"seed", c.seed},
       {"n_threads", c.n_threads},
       {"stagnation_iterations", c.stagnation_iterations},
       {"record_params", c.record_params},
       {"warm_start", nullptr}};
  if (c.warm_start) j["warm_start"] = *c.warm_start;
}

void from_json(const nlohmann::json& j, CEConfig& c) {
  detail::reject_unknown(j,
                         {"n_samples", "n_elites", "n_iterations", "smoothing_alpha",
                          "max_row_resamples", "max_vector_resamples", "seed", "n_threads",
                          "stagnation_iterations", "record_params", "warm_start"},
                         "ceas");
  detail::read_opt(j, "n_samples", c.n_samples);
  detail::read_opt(j, "n_elites", c.n_elites);
  detail::read_opt(j, "n_iterations", c.n_iterations);
  detail::read_opt(j, "smoothing_alpha", c.smoothing_alpha);
  detail::read_opt(j, "max_row_resamples", c.max_row_resamples);
  detail::read_opt(j, "max_vector_resamples", c.max_vector_resamples);
  detail::read_opt(j, "seed", c.seed);
  detail::read_opt(j, "n_threads", c.n_threads);
  detail::read_opt(j, "stagnation_iterations", c.stagnation_iterations);
  detail::read_opt(j, "record_params", c.record_params);
  if (auto it = j.find("warm_start"); it != j.end() && !it->is_null()) {
    std::vector<int> ws;
    detail::read_opt(j, "warm_start", ws);
    c.warm_start = std::move(ws);
  }
}

std::vector<nlohmann::json> trace_records(const CERunTrace& trace) {
  std::vector<nlohmann::json> out;
  out.reserve(trace.per_iteration.size());
  for (const auto& r : trace.per_iteration)
    out.push_back({{"t", r.t},
                   {"best_score", r.best_score},
                   {"elite_mean_score", r.elite_mean_score},
                   {"mean_score", r.mean_score},
                   {"incumbent_score", r.incumbent_score}});
  return out;
}

}  // namespace ceas
