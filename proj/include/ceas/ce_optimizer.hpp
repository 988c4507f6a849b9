#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ceas/association.hpp"
#include "ceas/netmodel.hpp"
#include "ceas/rng.hpp"

namespace ceas {

// Cross-entropy search settings. Defaults: S = 500 samples, 10 elites,
// T = 20 iterations. For larger instances S is usually scaled as c * I * J.
struct CEConfig {
  int n_samples = 500;
  int n_elites = 10;
  int n_iterations = 20;
  double smoothing_alpha = 0.7;
  int max_row_resamples = 20;
  int max_vector_resamples = 100;
  std::uint64_t seed = 0;
  // Worker threads for sampling and scoring; 0 picks hardware concurrency.
  // Results do not depend on this value.
  int n_threads = 0;
  // Stop once the incumbent has not improved for this many iterations; 0 disables.
  int stagnation_iterations = 0;
  bool record_params = false;
  // Reserved for seeding u from a previous association; must stay unset.
  std::optional<std::vector<int>> warm_start;

  void validate() const;

  friend bool operator==(const CEConfig&, const CEConfig&) = default;
};

struct SamplingLimits {
  int max_row_resamples = 20;
  int max_vector_resamples = 100;
};

// Independent Bernoulli success probabilities u[n] for the flattened
// association vector, n = i * J + j.
class BernoulliParams {
 public:
  BernoulliParams() = default;
  BernoulliParams(std::size_t n_users, std::size_t n_bs, std::vector<double> u);

  // u = 1/2 everywhere.
  static BernoulliParams uniform(std::size_t n_users, std::size_t n_bs);

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_bs() const noexcept { return n_bs_; }
  std::size_t size() const noexcept { return u_.size(); }
  double operator[](std::size_t n) const { return u_[n]; }
  double at(std::size_t user, std::size_t bs) const { return u_[user * n_bs_ + bs]; }
  std::span<const double> values() const noexcept { return u_; }
  std::span<const double> row(std::size_t user) const {
    return std::span<const double>(u_).subspan(user * n_bs_, n_bs_);
  }
  RealMatrix as_matrix() const;

  friend bool operator==(const BernoulliParams&, const BernoulliParams&) = default;

 private:
  std::size_t n_users_ = 0;
  std::size_t n_bs_ = 0;
  std::vector<double> u_;
};

struct IterationRecord {
  int t = 0;
  double best_score = 0.0;        // best sample of this iteration, F(x^[1])
  double elite_mean_score = 0.0;
  double mean_score = 0.0;
  double incumbent_score = 0.0;   // best over iterations 0..t
  Association iteration_best;     // x^[1] of this iteration
  std::vector<double> params;     // u used for sampling; filled when record_params
};

struct CERunTrace {
  std::vector<IterationRecord> per_iteration;
  Association incumbent;
  double incumbent_score = 0.0;
  int iterations_run = 0;
  std::size_t samples_scored = 0;
};

struct CEResult {
  Association association;  // best-ever feasible sample
  double utility = 0.0;
  CERunTrace trace;
};

// Observer invoked once per iteration with every scored sample.
using IterationObserver =
    std::function<void(int t, std::span<const Association>, std::span<const double>)>;

// Draws one association satisfying the one-hot and load-cap constraints.
// Each user row is drawn as J independent Bernoulli bits and redrawn until it
// is one-hot, at most max_row_resamples times, after which a categorical draw
// over the normalized row is used (uniform for an all-zero row). Whole vectors
// violating the caps are redrawn up to max_vector_resamples times, then the
// last draw goes through repair_to_caps with u as the preference.
Association sample_feasible(const BernoulliParams& params, const LoadCaps& caps, Rng& rng,
                            const SamplingLimits& limits = {});

std::vector<double> score_samples(std::span<const Association> samples, const LinkGains& gains,
                                  const UtilitySpec& utility);

// Indices of the n_elites highest scores, sorted descending; equal scores keep
// the lower index first.
std::vector<std::size_t> select_elites(std::span<const double> scores, std::size_t n_elites);

// Column-wise mean of the elites' binary vectors.
BernoulliParams update_params(std::span<const Association> elites);

// (1/n_samples) * sum over elites of ln p(x; u), with 0 * ln 0 = 0. Returns
// -infinity when an elite bit contradicts a saturated parameter.
double elite_log_likelihood(std::span<const Association> elites, const BernoulliParams& params,
                            std::size_t n_samples);

// alpha * v + (1 - alpha) * prev.
BernoulliParams smooth_update(const BernoulliParams& prev, const BernoulliParams& v,
                              double alpha);

CEResult ceas_run(const LinkGains& gains, const LoadCaps& caps, const UtilitySpec& utility,
                  const CEConfig& cfg, const IterationObserver& observer = {});

void to_json(nlohmann::json& j, const CEConfig& cfg);
void from_json(const nlohmann::json& j, CEConfig& cfg);

// One JSON object per iteration: t, best_score, elite_mean_score, mean_score,
// incumbent_score.
std::vector<nlohmann::json> trace_records(const CERunTrace& trace);

}  // namespace ceas
