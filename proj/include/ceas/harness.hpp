#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ceas/ce_optimizer.hpp"
#include "ceas/config.hpp"
#include "ceas/netmodel.hpp"

namespace ceas {

struct DropRecord {
  int drop_index = 0;
  std::uint64_t drop_seed = 0;
  std::string method;
  double utility = 0.0;
  double mean_rate_bps = 0.0;
  std::vector<double> per_user_rates;
  std::vector<int> bs_loads;
  std::vector<Tier> bs_tiers;
  std::vector<int> assign;
  double runtime_ms = 0.0;
  std::uint64_t gains_checksum = 0;
  bool feasible = true;
  std::optional<CERunTrace> trace;  // CEAS only
};

struct MethodError {
  int drop_index = 0;
  std::uint64_t drop_seed = 0;
  std::string method;
  std::string message;
};

struct LoadShares {
  double mbs_share_pct = 0.0;
  double sbs_share_pct = 0.0;
};

using CdfPoints = std::vector<std::pair<double, double>>;

struct MethodAggregate {
  std::size_t n_records = 0;
  double mean_utility = 0.0;
  double mean_rate_bps = 0.0;
  LoadShares shares;
  CdfPoints rate_cdf;
};

struct ExperimentResult {
  std::vector<DropRecord> records;
  std::vector<MethodError> errors;
  std::map<std::string, MethodAggregate> aggregates;
  std::vector<std::string> method_order;
};

// Appends records as they are produced: results.csv, traces.jsonl and
// errors.csv under `dir`.
class ResultWriter {
 public:
  ResultWriter(const std::filesystem::path& dir, int n_sbs);

  void write(const DropRecord& r);
  void write(const MethodError& e);

 private:
  std::ofstream results_;
  std::ofstream traces_;
  std::ofstream errors_;
};

// Seed of drop d: a hash of (base_seed, d), independent of the method set.
std::uint64_t drop_seed(std::uint64_t base_seed, int drop_index);

// Runs every method on every drop of the plan. Method failures are recorded
// in `errors` and do not stop the experiment.
ExperimentResult run_experiment(const ExperimentPlan& plan, ResultWriter* writer = nullptr);

std::map<std::string, MethodAggregate> compute_aggregates(const std::vector<DropRecord>& records);

// Empirical CDF over per-user rates pooled across the given records: one
// point per distinct rate, ascending, fraction of rates <= that value.
CdfPoints rate_cdf(const std::vector<const DropRecord*>& records);

// MBS / SBS user shares in percent, averaged over drops.
LoadShares load_shares(const std::vector<const DropRecord*>& records);

std::vector<const DropRecord*> records_for(const ExperimentResult& result,
                                           const std::string& method);

struct SweepCell {
  int n_samples = 0;
  int n_elites = 0;
  double smoothing_alpha = 0.0;
  // Incumbent utility after each iteration, averaged over drops.
  std::vector<double> mean_curve;
  double mean_final = 0.0;
  // convergence_iteration of each drop's incumbent curve, averaged.
  double mean_convergence_iteration = 0.0;
  std::size_t n_failed = 0;
};

std::vector<SweepCell> sensitivity_sweep(const ExperimentPlan& plan);

// First iteration whose value is within `fraction` of the final value,
// i.e. value >= final - (1 - fraction) * |final|.
int convergence_iteration(const std::vector<double>& curve, double fraction = 0.99);

// Per-drop convergence_iteration of the incumbent curves, averaged over drops.
double mean_convergence_iteration(const std::vector<const DropRecord*>& records,
                                  double fraction = 0.99);

// Average of the per-iteration incumbent curves, padding early-stopped runs
// with their last value.
std::vector<double> mean_incumbent_curve(const std::vector<const DropRecord*>& records,
                                         int n_iterations);

// (oracle - candidate) / max(1, |oracle|); stays meaningful for negative
// log utilities.
double relative_gap(double oracle_utility, double candidate_utility);

void write_summary_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_load_shares_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_cdf_csv(const std::filesystem::path& path, const CdfPoints& cdf);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells);

}  // namespace ceas
