#include "ceas/netmodel.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>
#include <iomanip>

#include "ceas/errors.hpp"
#include "json_util.hpp"
#include "ceas/rng.hpp"
#include "ceas/units.hpp"

namespace ceas {

using detail::read_opt;
using detail::reject_unknown;

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

Point uniform_in_disk(Rng& rng, double radius) {
  const double r = radius * std::sqrt(uniform01(rng));
  const double theta = 2.0 * std::numbers::pi * uniform01(rng);
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::string tier_name(Tier t) { return t == Tier::macro ? "macro" : "small"; }

Tier parse_tier(const std::string& s) {
  if (s == "macro") return Tier::macro;
  if (s == "small") return Tier::small;
  throw ConfigError("unknown BS tier '" + s + "'");
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void ScenarioConfig::validate() const {
  if (n_users < 0) throw ConfigError("scenario.n_users must be >= 0");
  if (n_sbs < 0) throw ConfigError("scenario.n_sbs must be >= 0");
  if (!(cell_radius_m > 0.0)) throw ConfigError("scenario.cell_radius_m must be > 0");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("scenario.bandwidth_hz must be > 0");
  if (!std::isfinite(noise_dbm)) throw ConfigError("scenario.noise_dbm must be finite");
  if (shadowing.enabled && !(shadowing.sigma_db >= 0.0))
    throw ConfigError("scenario.shadowing.sigma_db must be >= 0");
  if (min_distances.mbs_sbs_m < 0.0 || min_distances.sbs_sbs_m < 0.0)
    throw ConfigError("scenario.min_distances must be >= 0");
  if (!(min_distances.user_bs_m > 0.0))
    throw ConfigError("scenario.min_distances.user_bs_m must be > 0");
  if (placement_retries < 1) throw ConfigError("scenario.placement_retries must be >= 1");
}

void Deployment::validate() const {
  if (!(cell_radius > 0.0)) throw ContractError("deployment: cell_radius must be > 0");
  if (!(bandwidth_hz > 0.0)) throw ContractError("deployment: bandwidth_hz must be > 0");
  if (!(min_link_distance_m > 0.0))
    throw ContractError("deployment: min_link_distance_m must be > 0");
  if (bss.empty()) throw ContractError("deployment: no base stations");
  const BaseStation* mbs = nullptr;
  for (const auto& bs : bss) {
    if (bs.tier == Tier::macro) {
      if (mbs) throw ContractError("deployment: more than one macro BS");
      mbs = &bs;
    }
  }
  if (!mbs) throw ContractError("deployment: no macro BS");
  // Small tolerance for positions that went through polar coordinates.
  const double limit = cell_radius * (1.0 + 1e-12);
  for (const auto& bs : bss)
    if (distance(bs.position, mbs->position) > limit)
      throw ContractError("deployment: BS outside the cell");
  for (const auto& u : users)
    if (distance(u, mbs->position) > limit)
      throw ContractError("deployment: user outside the cell");
  if (!shadowing_db.empty() &&
      (shadowing_db.rows() != users.size() || shadowing_db.cols() != bss.size()))
    throw ContractError("deployment: shadowing matrix has wrong shape");
}

double path_loss_db(double distance_m, const PathLossParams& params) {
  if (!(distance_m > 0.0))
    throw DomainError("path_loss_db: distance must be positive");
  return params.intercept_db + params.slope_db_per_decade * std::log10(distance_m / 1000.0);
}

LinkGains link_gains_from(const RealMatrix& gain, const std::vector<double>& tx_power_w,
                          double noise_w, double bandwidth_hz) {
  const std::size_t n_users = gain.rows();
  const std::size_t n_bs = gain.cols();
  if (tx_power_w.size() != n_bs)
    throw ContractError("link_gains_from: power vector does not match BS count");
  if (!(noise_w >= 0.0) || !(bandwidth_hz > 0.0))
    throw ContractError("link_gains_from: noise must be >= 0 and bandwidth > 0");

  LinkGains out{gain, RealMatrix(n_users, n_bs), RealMatrix(n_users, n_bs)};
  for (std::size_t i = 0; i < n_users; ++i) {
    for (std::size_t j = 0; j < n_bs; ++j) {
      double interference = 0.0;
      for (std::size_t q = 0; q < n_bs; ++q)
        if (q != j) interference += gain(i, q) * tx_power_w[q];
      const double denom = interference + noise_w;
      const double signal = gain(i, j) * tx_power_w[j];
      double sinr = 0.0;
      if (signal > 0.0) sinr = denom > 0.0 ? signal / denom : INFINITY;
      out.sinr(i, j) = sinr;
      out.full_rate(i, j) = bandwidth_hz * std::log2(1.0 + sinr);
    }
  }
  return out;
}

LinkGains compute_link_gains(const Deployment& dep) {
  dep.validate();
  const std::size_t n_users = dep.n_users();
  const std::size_t n_bs = dep.n_bs();
  RealMatrix gain(n_users, n_bs);
  std::vector<double> power_w(n_bs);
  for (std::size_t j = 0; j < n_bs; ++j) power_w[j] = dbm_to_watt(dep.bss[j].tx_power_dbm);
  for (std::size_t i = 0; i < n_users; ++i) {
    for (std::size_t j = 0; j < n_bs; ++j) {
      const double d = std::max(distance(dep.users[i], dep.bss[j].position),
                                dep.min_link_distance_m);
      double loss = path_loss_db(d, dep.pathloss);
      if (!dep.shadowing_db.empty()) loss += dep.shadowing_db(i, j);
      gain(i, j) = db_to_linear(-loss);
    }
  }
  return link_gains_from(gain, power_w, dbm_to_watt(dep.noise_power_dbm), dep.bandwidth_hz);
}

Deployment generate_deployment(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Deployment dep;
  dep.cell_radius = cfg.cell_radius_m;
  dep.bandwidth_hz = cfg.bandwidth_hz;
  dep.noise_power_dbm = cfg.noise_dbm;
  dep.pathloss = cfg.pathloss;
  dep.min_link_distance_m = cfg.min_distances.user_bs_m;
  dep.seed = seed;

  dep.bss.push_back({{0.0, 0.0}, cfg.mbs_power_dbm, Tier::macro});

  // Separate streams so the BS layout does not depend on the user count.
  Rng bs_rng = make_stream(seed, {1});
  for (int s = 0; s < cfg.n_sbs; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_retries && !placed; ++attempt) {
      const Point p = uniform_in_disk(bs_rng, cfg.cell_radius_m);
      if (distance(p, dep.bss.front().position) < cfg.min_distances.mbs_sbs_m) continue;
      bool clear = true;
      for (std::size_t k = 1; k < dep.bss.size() && clear; ++k)
        clear = distance(p, dep.bss[k].position) >= cfg.min_distances.sbs_sbs_m;
      if (!clear) continue;
      dep.bss.push_back({p, cfg.sbs_power_dbm, Tier::small});
      placed = true;
    }
    if (!placed)
      throw GenerationError("generate_deployment: could not place small cell " +
                            std::to_string(s + 1) + " after " +
                            std::to_string(cfg.placement_retries) + " attempts");
  }

  Rng user_rng = make_stream(seed, {2});
  dep.users.reserve(static_cast<std::size_t>(cfg.n_users));
  for (int i = 0; i < cfg.n_users; ++i)
    dep.users.push_back(uniform_in_disk(user_rng, cfg.cell_radius_m));

  if (cfg.shadowing.enabled) {
    Rng sh_rng = make_stream(seed, {3});
    std::normal_distribution<double> normal(0.0, cfg.shadowing.sigma_db);
    dep.shadowing_db = RealMatrix(dep.n_users(), dep.n_bs());
    for (double& v : dep.shadowing_db.values()) v = normal(sh_rng);
  }
  return dep;
}

std::uint64_t checksum(const LinkGains& g) {
  std::uint64_t h = kFnvOffset;
  for (const RealMatrix* m : {&g.gain, &g.sinr, &g.full_rate}) {
    const std::size_t dims[2] = {m->rows(), m->cols()};
    h = fnv1a(dims, sizeof dims, h);
    h = fnv1a(m->values().data(), m->values().size_bytes(), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = {{"n_users", c.n_users},
       {"n_sbs", c.n_sbs},
       {"cell_radius_m", c.cell_radius_m},
       {"mbs_power_dbm", c.mbs_power_dbm},
       {"sbs_power_dbm", c.sbs_power_dbm},
       {"bandwidth_hz", c.bandwidth_hz},
       {"noise_dbm", c.noise_dbm},
       {"pathloss",
        {{"intercept_db", c.pathloss.intercept_db},
         {"slope_db_per_decade", c.pathloss.slope_db_per_decade}}},
       {"shadowing", {{"enabled", c.shadowing.enabled}, {"sigma_db", c.shadowing.sigma_db}}},
       {"min_distances",
        {{"mbs_sbs_m", c.min_distances.mbs_sbs_m},
         {"sbs_sbs_m", c.min_distances.sbs_sbs_m},
         {"user_bs_m", c.min_distances.user_bs_m}}},
       {"placement_retries", c.placement_retries}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  reject_unknown(j,
                 {"n_users", "n_sbs", "cell_radius_m", "mbs_power_dbm", "sbs_power_dbm",
                  "bandwidth_hz", "noise_dbm", "pathloss", "shadowing", "min_distances",
                  "placement_retries"},
                 "scenario");
  read_opt(j, "n_users", c.n_users);
  read_opt(j, "n_sbs", c.n_sbs);
  read_opt(j, "cell_radius_m", c.cell_radius_m);
  read_opt(j, "mbs_power_dbm", c.mbs_power_dbm);
  read_opt(j, "sbs_power_dbm", c.sbs_power_dbm);
  read_opt(j, "bandwidth_hz", c.bandwidth_hz);
  read_opt(j, "noise_dbm", c.noise_dbm);
  read_opt(j, "placement_retries", c.placement_retries);
  if (auto it = j.find("pathloss"); it != j.end()) {
    reject_unknown(*it, {"intercept_db", "slope_db_per_decade"}, "scenario.pathloss");
    read_opt(*it, "intercept_db", c.pathloss.intercept_db);
    read_opt(*it, "slope_db_per_decade", c.pathloss.slope_db_per_decade);
  }
  if (auto it = j.find("shadowing"); it != j.end()) {
    reject_unknown(*it, {"enabled", "sigma_db"}, "scenario.shadowing");
    read_opt(*it, "enabled", c.shadowing.enabled);
    read_opt(*it, "sigma_db", c.shadowing.sigma_db);
  }
  if (auto it = j.find("min_distances"); it != j.end()) {
    reject_unknown(*it, {"mbs_sbs_m", "sbs_sbs_m", "user_bs_m"}, "scenario.min_distances");
    read_opt(*it, "mbs_sbs_m", c.min_distances.mbs_sbs_m);
    read_opt(*it, "sbs_sbs_m", c.min_distances.sbs_sbs_m);
    read_opt(*it, "user_bs_m", c.min_distances.user_bs_m);
  }
}

void to_json(nlohmann::json& j, const Deployment& d) {
  nlohmann::json bss = nlohmann::json::array();
  for (const auto& bs : d.bss)
    bss.push_back({{"x", bs.position.x},
                   {"y", bs.position.y},
                   {"tx_power_dbm", bs.tx_power_dbm},
                   {"tier", tier_name(bs.tier)}});
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : d.users) users.push_back({u.x, u.y});
  nlohmann::json shadow = nlohmann::json::array();
  for (std::size_t i = 0; i < d.shadowing_db.rows(); ++i) {
    const auto row = d.shadowing_db.row(i);
    shadow.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j = {{"seed", d.seed},
       {"cell_radius_m", d.cell_radius},
       {"bandwidth_hz", d.bandwidth_hz},
       {"noise_power_dbm", d.noise_power_dbm},
       {"pathloss",
        {{"intercept_db", d.pathloss.intercept_db},
         {"slope_db_per_decade", d.pathloss.slope_db_per_decade}}},
       {"min_link_distance_m", d.min_link_distance_m},
       {"bss", std::move(bss)},
       {"users", std::move(users)},
       {"shadowing_db", std::move(shadow)}};
}

void from_json(const nlohmann::json& j, Deployment& d) {
  try {
    d = Deployment{};
    d.seed = j.at("seed").get<std::uint64_t>();
    d.cell_radius = j.at("cell_radius_m").get<double>();
    d.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    d.noise_power_dbm = j.at("noise_power_dbm").get<double>();
    d.pathloss.intercept_db = j.at("pathloss").at("intercept_db").get<double>();
    d.pathloss.slope_db_per_decade = j.at("pathloss").at("slope_db_per_decade").get<double>();
    d.min_link_distance_m = j.at("min_link_distance_m").get<double>();
    for (const auto& b : j.at("bss"))
      d.bss.push_back({{b.at("x").get<double>(), b.at("y").get<double>()},
                       b.at("tx_power_dbm").get<double>(),
                       parse_tier(b.at("tier").get<std::string>())});
    for (const auto& u : j.at("users"))
      d.users.push_back({u.at(0).get<double>(), u.at(1).get<double>()});
    const auto& sh = j.at("shadowing_db");
    if (!sh.empty()) {
      d.shadowing_db = RealMatrix(sh.size(), d.bss.size());
      for (std::size_t i = 0; i < sh.size(); ++i)
        for (std::size_t k = 0; k < d.bss.size(); ++k)
          d.shadowing_db(i, k) = sh.at(i).at(k).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("deployment: ") + e.what());
  }
}

}  // namespace ceas
