#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ceas/matrix.hpp"

namespace ceas {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

enum class Tier { macro, small };

struct BaseStation {
  Point position;
  double tx_power_dbm = 0.0;
  Tier tier = Tier::small;

  friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

struct PathLossParams {
  double intercept_db = 128.1;
  double slope_db_per_decade = 37.6;

  friend bool operator==(const PathLossParams&, const PathLossParams&) = default;
};

struct ShadowingParams {
  bool enabled = false;
  double sigma_db = 8.0;

  friend bool operator==(const ShadowingParams&, const ShadowingParams&) = default;
};

struct MinDistances {
  double mbs_sbs_m = 75.0;
  double sbs_sbs_m = 40.0;
  // Link distances below this are clamped before path loss.
  double user_bs_m = 10.0;

  friend bool operator==(const MinDistances&, const MinDistances&) = default;
};

// Single-cell drop: one macro BS at the origin, small cells and users
// uniform in the disk.
struct ScenarioConfig {
  int n_users = 30;
  int n_sbs = 3;
  double cell_radius_m = 500.0;
  double mbs_power_dbm = 43.0;
  double sbs_power_dbm = 23.0;
  double bandwidth_hz = 10e6;
  // Thermal -174 dBm/Hz over 10 MHz, 0 dB noise figure.
  double noise_dbm = -104.0;
  PathLossParams pathloss;
  ShadowingParams shadowing;
  MinDistances min_distances;
  int placement_retries = 1000;

  int n_bs() const { return n_sbs + 1; }
  void validate() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Deployment {
  std::vector<BaseStation> bss;
  std::vector<Point> users;
  double cell_radius = 0.0;
  double bandwidth_hz = 0.0;
  double noise_power_dbm = 0.0;
  PathLossParams pathloss;
  double min_link_distance_m = 10.0;
  // Per-link shadowing in dB (users x bss); empty when shadowing is off.
  RealMatrix shadowing_db;
  std::uint64_t seed = 0;

  std::size_t n_users() const { return users.size(); }
  std::size_t n_bs() const { return bss.size(); }
  void validate() const;

  friend bool operator==(const Deployment&, const Deployment&) = default;
};

struct LinkGains {
  RealMatrix gain;       // linear channel gain h_ij
  RealMatrix sinr;       // linear SINR
  RealMatrix full_rate;  // W * log2(1 + sinr), bit/s, before load sharing

  std::size_t n_users() const { return gain.rows(); }
  std::size_t n_bs() const { return gain.cols(); }
};

// intercept + slope * log10(d / 1 km). Throws DomainError for d <= 0.
double path_loss_db(double distance_m, const PathLossParams& params);

LinkGains compute_link_gains(const Deployment& dep);

// Builds LinkGains from explicit gains, powers (W) and noise (W).
LinkGains link_gains_from(const RealMatrix& gain, const std::vector<double>& tx_power_w,
                          double noise_w, double bandwidth_hz);

Deployment generate_deployment(const ScenarioConfig& cfg, std::uint64_t seed);

// FNV-1a over the raw bytes of all gain matrices.
std::uint64_t checksum(const LinkGains& g);
std::string hex64(std::uint64_t v);

void to_json(nlohmann::json& j, const ScenarioConfig& cfg);
void from_json(const nlohmann::json& j, ScenarioConfig& cfg);
void to_json(nlohmann::json& j, const Deployment& dep);
void from_json(const nlohmann::json& j, Deployment& dep);

}  // namespace ceas
