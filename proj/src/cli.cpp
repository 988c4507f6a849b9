#include "ceas/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ceas/baselines.hpp"
#include "ceas/config.hpp"
#include "ceas/errors.hpp"
#include "ceas/harness.hpp"
#include "ceas/netmodel.hpp"

namespace ceas {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "ceas_out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::optional<int> drops;
  std::optional<std::string> methods;
  bool quiet = false;
};

std::vector<Method> split_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_method(item));
  return out;
}

ExperimentPlan build_plan(const Options& opt) {
  const nlohmann::json doc =
      opt.config.empty() ? nlohmann::json::object() : read_json_file(opt.config);
  ExperimentPlan plan = resolve_plan(doc, opt.sets);
  if (opt.seed) plan.base_seed = *opt.seed;
  if (opt.drops) plan.n_drops = *opt.drops;
  if (opt.methods) plan.methods = split_methods(*opt.methods);
  plan.validate();
  return plan;
}

void write_snapshot(const fs::path& dir, const ExperimentPlan& plan) {
  fs::create_directories(dir);
  std::ofstream out(dir / "effective_config.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "effective_config.json").string());
  out << nlohmann::json(plan).dump(2) << '\n';
}

std::uint64_t deployment_checksum(const Deployment& dep) {
  const std::string text = nlohmann::json(dep).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void print_table(std::ostream& out, const ExperimentResult& result) {
  out << std::left << std::setw(20) << "method" << std::right << std::setw(14) << "utility"
      << std::setw(14) << "rate_mbps" << std::setw(12) << "mbs_pct" << std::setw(8) << "drops"
      << '\n';
  out << std::fixed;
  for (const auto& m : result.method_order) {
    const auto& a = result.aggregates.at(m);
    out << std::left << std::setw(20) << m << std::right << std::setprecision(4) << std::setw(14)
        << a.mean_utility << std::setw(14) << a.mean_rate_bps / 1e6 << std::setprecision(2)
        << std::setw(12) << a.shares.mbs_share_pct << std::setw(8) << a.n_records << '\n';
  }
  const auto ce = result.aggregates.find("ceas");
  const auto ms = result.aggregates.find("max_sinr");
  if (ce != result.aggregates.end() && ms != result.aggregates.end() &&
      ms->second.mean_utility != 0.0)
    out << "utility ratio ceas/max_sinr: " << std::setprecision(4)
        << ce->second.mean_utility / ms->second.mean_utility << '\n';
  out.unsetf(std::ios::floatfield);
}

int report_errors(std::ostream& err, const ExperimentResult& result) {
  for (const auto& e : result.errors)
    err << "drop " << e.drop_index << " (" << hex64(e.drop_seed) << ") " << e.method
        << ": " << e.message << '\n';
  return result.errors.empty() ? kExitOk : kExitFailure;
}

int cmd_generate(const Options& opt, std::ostream& out) {
  const ExperimentPlan plan = build_plan(opt);
  const std::uint64_t seed = opt.seed.value_or(drop_seed(plan.base_seed, 0));
  const Deployment dep = generate_deployment(plan.scenario, seed);
  const fs::path dir(opt.out);
  write_snapshot(dir, plan);
  std::ofstream file(dir / "deployment.json");
  if (!file) throw std::runtime_error("cannot write " + (dir / "deployment.json").string());
  file << nlohmann::json(dep).dump(2) << '\n';
  out << "deployment " << (dir / "deployment.json").string() << " users " << dep.n_users()
      << " bss " << dep.n_bs() << " checksum " << hex64(deployment_checksum(dep)) << '\n';
  return kExitOk;
}

int cmd_run(const Options& opt, bool full_artifacts, std::ostream& out, std::ostream& err) {
  const ExperimentPlan plan = build_plan(opt);
  const fs::path dir(opt.out);
  write_snapshot(dir, plan);
  ResultWriter writer(dir, plan.scenario.n_sbs);
  const ExperimentResult result = run_experiment(plan, &writer);
  write_summary_csv(dir / "summary.csv", result);
  if (full_artifacts) {
    write_load_shares_csv(dir / "load_shares.csv", result);
    for (const auto& m : result.method_order) {
      const auto& agg = result.aggregates.at(m);
      if (!agg.rate_cdf.empty()) write_cdf_csv(dir / ("cdf_" + m + ".csv"), agg.rate_cdf);
    }
  }
  if (!opt.quiet) print_table(out, result);
  return report_errors(err, result);
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  ExperimentPlan plan = build_plan(opt);
  if (plan.sweep.empty()) throw ConfigError("sweep: the plan has no sweep grid");
  const fs::path dir(opt.out);
  write_snapshot(dir, plan);
  const auto cells = sensitivity_sweep(plan);
  write_sweep_csv(dir / "sweep_curves.csv", cells);
  if (!opt.quiet) {
    out << "n_samples n_elites alpha final_utility converged_at\n";
    for (const auto& c : cells)
      out << c.n_samples << ' ' << c.n_elites << ' ' << c.smoothing_alpha << ' '
          << c.mean_final << ' ' << c.mean_convergence_iteration << '\n';
  }
  for (const auto& c : cells)
    if (c.n_failed > 0) return kExitFailure;
  return kExitOk;
}

int cmd_oracle_check(const Options& opt, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan = build_plan(opt);
  const auto size = enumeration_size(static_cast<std::size_t>(plan.scenario.n_users),
                                     static_cast<std::size_t>(plan.scenario.n_bs()));
  if (size > plan.oracle_budget)
    throw BudgetError("oracle-check: J^I = " + std::to_string(plan.scenario.n_bs()) + "^" +
                      std::to_string(plan.scenario.n_users) +
                      " exceeds the enumeration budget of " + std::to_string(plan.oracle_budget));
  plan.methods = {Method::ceas, Method::oracle};
  const fs::path dir(opt.out);
  write_snapshot(dir, plan);
  ResultWriter writer(dir, plan.scenario.n_sbs);
  const ExperimentResult result = run_experiment(plan, &writer);

  const auto ce = records_for(result, "ceas");
  const auto oracle = records_for(result, "oracle");
  std::size_t within = 0;
  std::size_t compared = 0;
  std::size_t k = 0;
  for (const auto* o : oracle) {
    while (k < ce.size() && ce[k]->drop_index < o->drop_index) ++k;
    if (k == ce.size() || ce[k]->drop_index != o->drop_index) continue;
    const double gap = relative_gap(o->utility, ce[k]->utility);
    ++compared;
    if (gap <= 0.01) ++within;
    if (!opt.quiet)
      out << "seed " << hex64(o->drop_seed) << " ceas " << ce[k]->utility << " oracle "
          << o->utility << " gap " << gap << " diff " << o->utility - ce[k]->utility << '\n';
  }
  out << "within 1%: " << within << '/' << compared << " ("
      << (compared ? static_cast<double>(within) / compared : 0.0) << ")\n";
  return report_errors(err, result);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-entropy user association for downlink HetNets"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Experiment plan (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", opt.seed, "Base seed (deployment seed for generate)");
    sub->add_option("--set", opt.sets, "Override key=value (dotted key, repeatable)");
    sub->add_flag("--quiet", opt.quiet, "Suppress tables");
  };
  auto add_experiment = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--drops", opt.drops, "Number of drops")->check(CLI::PositiveNumber);
    sub->add_option("--methods", opt.methods, "Comma list of ceas,max_sinr,dual,oracle");
  };

  auto* generate = app.add_subcommand("generate", "Generate one deployment");
  add_common(generate);
  auto* run = app.add_subcommand("run", "Run the configured methods and write records");
  add_experiment(run);
  auto* compare = app.add_subcommand("compare", "Comparison table, load shares and rate CDFs");
  add_experiment(compare);
  auto* sweep = app.add_subcommand("sweep", "Sensitivity sweep over the plan's grid");
  add_experiment(sweep);
  auto* oracle = app.add_subcommand("oracle-check", "CEAS against exhaustive search");
  add_experiment(oracle);

  std::vector<std::string> argv_store{"ceas"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*generate) return cmd_generate(opt, out);
    if (*run) return cmd_run(opt, false, out, err);
    if (*compare) return cmd_run(opt, true, out, err);
    if (*sweep) return cmd_sweep(opt, out);
    if (*oracle) return cmd_oracle_check(opt, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BudgetError& e) {
    err << "refused: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ceas
