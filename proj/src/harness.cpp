#include "ceas/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>

#include "ceas/errors.hpp"
#include "ceas/rng.hpp"

namespace ceas {

namespace {

struct MethodOutput {
  std::string label;
  Association association;
  std::optional<CERunTrace> trace;
  double runtime_ms = 0.0;
};

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

DropRecord make_record(int drop_index, std::uint64_t seed, const MethodOutput& out,
                       const LinkGains& gains, const LoadCaps& caps, const UtilitySpec& utility,
                       const std::vector<Tier>& tiers, std::uint64_t gains_checksum) {
  DropRecord r;
  r.drop_index = drop_index;
  r.drop_seed = seed;
  r.method = out.label;
  r.per_user_rates = user_rates(out.association, gains);
  r.utility = utility_of_rates(r.per_user_rates, utility);
  r.mean_rate_bps = r.per_user_rates.empty()
                        ? 0.0
                        : std::accumulate(r.per_user_rates.begin(), r.per_user_rates.end(), 0.0) /
                              static_cast<double>(r.per_user_rates.size());
  r.bs_loads = bs_loads(out.association);
  r.bs_tiers = tiers;
  r.assign.assign(out.association.assign().begin(), out.association.assign().end());
  r.runtime_ms = out.runtime_ms;
  r.gains_checksum = gains_checksum;
  r.feasible = is_feasible(out.association, caps);
  r.trace = out.trace;
  return r;
}

}  // namespace

ResultWriter::ResultWriter(const std::filesystem::path& dir, int n_sbs) {
  std::filesystem::create_directories(dir);
  results_ = open_output(dir / "results.csv");
  traces_ = open_output(dir / "traces.jsonl");
  errors_ = open_output(dir / "errors.csv");
  results_ << "drop_seed,method,utility,mean_rate_mbps,mbs_load";
  for (int k = 1; k <= n_sbs; ++k) results_ << ",sbs_load_" << k;
  results_ << ",runtime_ms,gains_checksum\n";
  errors_ << "drop_seed,method,message\n";
}

void ResultWriter::write(const DropRecord& r) {
  results_ << r.drop_seed << ',' << r.method << ',' << r.utility << ','
           << r.mean_rate_bps / 1e6;
  for (int load : r.bs_loads) results_ << ',' << load;
  results_ << ',' << r.runtime_ms << ',' << hex64(r.gains_checksum) << '\n';
  results_.flush();
  if (r.trace) {
    for (auto rec : trace_records(*r.trace)) {
      rec["drop_seed"] = r.drop_seed;
      rec["method"] = r.method;
      traces_ << rec.dump() << '\n';
    }
    traces_.flush();
  }
}

void ResultWriter::write(const MethodError& e) {
  std::string msg = e.message;
  std::replace(msg.begin(), msg.end(), '"', '\'');
  errors_ << e.drop_seed << ',' << e.method << ",\"" << msg << "\"\n";
  errors_.flush();
}

std::uint64_t drop_seed(std::uint64_t base_seed, int drop_index) {
  return derive_seed(base_seed, {static_cast<std::uint64_t>(drop_index)});
}

ExperimentResult run_experiment(const ExperimentPlan& plan, ResultWriter* writer) {
  plan.validate();
  const LoadCaps caps = plan.load_caps();
  ExperimentResult result;

  auto fail = [&](int d, std::uint64_t seed, const std::string& method, const std::string& msg) {
    result.errors.push_back({d, seed, method, msg});
    if (writer) writer->write(result.errors.back());
  };

  for (int d = 0; d < plan.n_drops; ++d) {
    const std::uint64_t seed = drop_seed(plan.base_seed, d);
    LinkGains gains;
    std::vector<Tier> tiers;
    try {
      const Deployment dep = generate_deployment(plan.scenario, seed);
      gains = compute_link_gains(dep);
      for (const auto& bs : dep.bss) tiers.push_back(bs.tier);
    } catch (const std::exception& e) {
      for (Method m : plan.methods) fail(d, seed, std::string(method_name(m)), e.what());
      continue;
    }
    const std::uint64_t sum = checksum(gains);

    std::vector<MethodOutput> outputs;
    for (Method m : plan.methods) {
      const std::string name(method_name(m));
      try {
        const auto start = Clock::now();
        switch (m) {
          case Method::ceas: {
            CEConfig cfg = plan.ceas;
            cfg.seed = derive_seed(plan.ceas.seed, {seed});
            auto run = ceas_run(gains, caps, plan.utility, cfg);
            outputs.push_back({name, std::move(run.association), std::move(run.trace),
                               elapsed_ms(start)});
            break;
          }
          case Method::max_sinr: {
            auto a = max_sinr_assoc(gains);
            outputs.push_back({name, a, std::nullopt, elapsed_ms(start)});
            if (caps.binding()) {
              std::vector<int> assign(a.assign().begin(), a.assign().end());
              repair_to_caps(assign, caps, gains.sinr);
              outputs.push_back({name + "_repaired", Association(std::move(assign), gains.n_bs()),
                                 std::nullopt, elapsed_ms(start)});
            }
            break;
          }
          case Method::dual: {
            for (std::size_t k = 0; k < plan.dual.size(); ++k) {
              const auto t0 = Clock::now();
              const std::string label =
                  plan.dual.size() == 1 ? name : name + "-" + std::to_string(k + 1);
              try {
                auto run = dual_subgradient_assoc(gains, plan.utility, plan.dual[k]);
                outputs.push_back({label, std::move(run.association), std::nullopt,
                                   elapsed_ms(t0)});
              } catch (const std::exception& e) {
                fail(d, seed, label, e.what());
              }
            }
            break;
          }
          case Method::oracle: {
            auto run = exhaustive_search(gains, caps, plan.utility, plan.oracle_budget);
            outputs.push_back({name, std::move(run.association), std::nullopt, elapsed_ms(start)});
            break;
          }
        }
      } catch (const std::exception& e) {
        fail(d, seed, name, e.what());
      }
    }

    for (const auto& out : outputs) {
      try {
        result.records.push_back(
            make_record(d, seed, out, gains, caps, plan.utility, tiers, sum));
        if (writer) writer->write(result.records.back());
      } catch (const std::exception& e) {
        fail(d, seed, out.label, e.what());
      }
    }
  }

  for (const auto& r : result.records)
    if (std::find(result.method_order.begin(), result.method_order.end(), r.method) ==
        result.method_order.end())
      result.method_order.push_back(r.method);
  result.aggregates = compute_aggregates(result.records);
  return result;
}

std::vector<const DropRecord*> records_for(const ExperimentResult& result,
                                           const std::string& method) {
  std::vector<const DropRecord*> out;
  for (const auto& r : result.records)
    if (r.method == method) out.push_back(&r);
  return out;
}

std::map<std::string, MethodAggregate> compute_aggregates(const std::vector<DropRecord>& records) {
  std::map<std::string, std::vector<const DropRecord*>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(&r);
  std::map<std::string, MethodAggregate> out;
  for (const auto& [method, recs] : by_method) {
    MethodAggregate agg;
    agg.n_records = recs.size();
    for (const auto* r : recs) {
      agg.mean_utility += r->utility;
      agg.mean_rate_bps += r->mean_rate_bps;
    }
    agg.mean_utility /= static_cast<double>(recs.size());
    agg.mean_rate_bps /= static_cast<double>(recs.size());
    agg.shares = load_shares(recs);
    bool any_rates = false;
    for (const auto* r : recs) any_rates = any_rates || !r->per_user_rates.empty();
    if (any_rates) agg.rate_cdf = rate_cdf(recs);
    out.emplace(method, std::move(agg));
  }
  return out;
}

CdfPoints rate_cdf(const std::vector<const DropRecord*>& records) {
  std::vector<double> pool;
  for (const auto* r : records) pool.insert(pool.end(), r->per_user_rates.begin(), r->per_user_rates.end());
  if (pool.empty()) throw ContractError("rate_cdf: empty rate pool");
  std::sort(pool.begin(), pool.end());
  CdfPoints cdf;
  const auto n = static_cast<double>(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (k + 1 < pool.size() && pool[k + 1] == pool[k]) continue;
    cdf.emplace_back(pool[k], static_cast<double>(k + 1) / n);
  }
  return cdf;
}

LoadShares load_shares(const std::vector<const DropRecord*>& records) {
  double mbs = 0.0;
  std::size_t drops = 0;
  for (const auto* r : records) {
    int total = 0;
    int on_macro = 0;
    for (std::size_t j = 0; j < r->bs_loads.size(); ++j) {
      total += r->bs_loads[j];
      if (j < r->bs_tiers.size() && r->bs_tiers[j] == Tier::macro) on_macro += r->bs_loads[j];
    }
    if (total == 0) continue;
    mbs += 100.0 * on_macro / total;
    ++drops;
  }
  if (drops == 0) return {};
  mbs /= static_cast<double>(drops);
  return {mbs, 100.0 - mbs};
}

std::vector<double> mean_incumbent_curve(const std::vector<const DropRecord*>& records,
                                         int n_iterations) {
  std::vector<double> curve(static_cast<std::size_t>(n_iterations), 0.0);
  std::size_t used = 0;
  for (const auto* r : records) {
    if (!r->trace || r->trace->per_iteration.empty()) continue;
    const auto& it = r->trace->per_iteration;
    for (std::size_t t = 0; t < curve.size(); ++t)
      curve[t] += it[std::min(t, it.size() - 1)].incumbent_score;
    ++used;
  }
  if (used > 0)
    for (double& v : curve) v /= static_cast<double>(used);
  return curve;
}

int convergence_iteration(const std::vector<double>& curve, double fraction) {
  if (curve.empty()) return -1;
  const double final_value = curve.back();
  const double threshold = final_value - (1.0 - fraction) * std::abs(final_value);
  for (std::size_t t = 0; t < curve.size(); ++t)
    if (curve[t] >= threshold) return static_cast<int>(t);
  return static_cast<int>(curve.size()) - 1;
}

double mean_convergence_iteration(const std::vector<const DropRecord*>& records,
                                  double fraction) {
  double total = 0.0;
  std::size_t used = 0;
  std::vector<double> curve;
  for (const auto* r : records) {
    if (!r->trace || r->trace->per_iteration.empty()) continue;
    curve.clear();
    for (const auto& it : r->trace->per_iteration) curve.push_back(it.incumbent_score);
    total += convergence_iteration(curve, fraction);
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

std::vector<SweepCell> sensitivity_sweep(const ExperimentPlan& plan) {
  if (plan.sweep.empty()) throw ConfigError("sweep: the grid is empty");
  const auto or_base = [](const auto& list, auto base) {
    return list.empty() ? std::vector<decltype(base)>{base} : list;
  };
  const auto samples = or_base(plan.sweep.n_samples, plan.ceas.n_samples);
  const auto elites = or_base(plan.sweep.n_elites, plan.ceas.n_elites);
  const auto alphas = or_base(plan.sweep.smoothing_alpha, plan.ceas.smoothing_alpha);

  std::vector<SweepCell> cells;
  for (int s : samples) {
    for (int e : elites) {
      for (double a : alphas) {
        ExperimentPlan cell_plan = plan;
        cell_plan.methods = {Method::ceas};
        cell_plan.ceas.n_samples = s;
        cell_plan.ceas.n_elites = e;
        cell_plan.ceas.smoothing_alpha = a;
        const auto result = run_experiment(cell_plan);
        const auto recs = records_for(result, "ceas");
        SweepCell cell{s,   e,   a, mean_incumbent_curve(recs, cell_plan.ceas.n_iterations),
                       0.0, mean_convergence_iteration(recs), result.errors.size()};
        if (!recs.empty()) cell.mean_final = result.aggregates.at("ceas").mean_utility;
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

double relative_gap(double oracle_utility, double candidate_utility) {
  return (oracle_utility - candidate_utility) / std::max(1.0, std::abs(oracle_utility));
}

void write_summary_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_output(path);
  out << "method,n_drops,mean_utility,mean_rate_mbps\n";
  for (const auto& m : result.method_order) {
    const auto& a = result.aggregates.at(m);
    out << m << ',' << a.n_records << ',' << a.mean_utility << ',' << a.mean_rate_bps / 1e6 << '\n';
  }
}

void write_load_shares_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_output(path);
  out << "method,mbs_share_pct,sbs_share_pct\n";
  for (const auto& m : result.method_order) {
    const auto& s = result.aggregates.at(m).shares;
    out << m << ',' << s.mbs_share_pct << ',' << s.sbs_share_pct << '\n';
  }
}

void write_cdf_csv(const std::filesystem::path& path, const CdfPoints& cdf) {
  auto out = open_output(path);
  out << "rate_mbps,cumulative_fraction\n";
  for (const auto& [rate, frac] : cdf) out << rate / 1e6 << ',' << frac << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepCell>& cells) {
  auto out = open_output(path);
  out << "n_samples,n_elites,smoothing_alpha,t,mean_utility\n";
  for (const auto& c : cells)
    for (std::size_t t = 0; t < c.mean_curve.size(); ++t)
      out << c.n_samples << ',' << c.n_elites << ',' << c.smoothing_alpha << ',' << t << ','
          << c.mean_curve[t] << '\n';
}

}  // namespace ceas
