#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdris/types.hpp"

namespace fdris {

using Point3 = std::array<double, 3>;

/// Physical and network parameters of one multi-cell full-duplex scenario.
///
/// Defaults reproduce the two-cell reference deployment: BSs at (0,0,30) and
/// (700,0,30), the surface at (350,0,15), user disks of radius 20 m centred
/// 300 m from their serving BS towards the surface.
struct ScenarioConfig {
  int num_cells = 2;
  int users_per_cell_dl = 2;
  int users_per_cell_ul = 2;
  int bs_tx_antennas = 6;
  int bs_rx_antennas = 2;
  int ue_tx_antennas = 6;
  int ue_rx_antennas = 2;
  int ris_elements = 100;
  int streams_dl = 2;
  int streams_ul = 2;

  std::vector<Point3> bs_positions{{0.0, 0.0, 30.0}, {700.0, 0.0, 30.0}};
  Point3 ris_position{350.0, 0.0, 15.0};
  double user_center_x = 300.0;
  double user_center_y = 50.0;
  double user_height_m = 1.5;
  double user_region_radius = 20.0;

  double carrier_freq_hz = 2.4e9;
  double bandwidth_hz = 10e6;
  double noise_density_dbm_per_hz = -174.0;
  double power_bs_watt = 1.0;
  double power_ue_watt = 0.2;
  double sic_db = 90.0;

  double pathloss_ref_db = -30.0;
  double alpha_bu = 3.75;
  double alpha_uu = 3.9;
  double alpha_bb = 3.2;
  double alpha_r = 2.2;
  double rician_factor = 3.0;
  double antenna_spacing_wavelengths = 0.5;
  double si_pathloss_db = 0.0;
  bool direct_links_enabled = true;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("invalid scenario: " + m); };
    if (num_cells < 1) fail("num_cells must be >= 1");
    if (users_per_cell_dl < 0 || users_per_cell_ul < 0) fail("user counts must be >= 0");
    if (users_per_cell_dl + users_per_cell_ul < 1) fail("at least one user per cell is required");
    if (bs_tx_antennas < 1 || bs_rx_antennas < 1 || ue_tx_antennas < 1 || ue_rx_antennas < 1)
      fail("antenna counts must be >= 1");
    if (ris_elements < 1) fail("ris_elements must be >= 1");
    if (streams_dl < 1 || streams_ul < 1) fail("stream counts must be >= 1");
    if (streams_dl > std::min(bs_tx_antennas, ue_rx_antennas))
      fail("streams_dl exceeds min(bs_tx_antennas, ue_rx_antennas)");
    if (streams_ul > std::min(ue_tx_antennas, bs_rx_antennas))
      fail("streams_ul exceeds min(ue_tx_antennas, bs_rx_antennas)");
    if (static_cast<int>(bs_positions.size()) != num_cells)
      fail("bs_positions must list one position per cell");
    if (!(power_bs_watt > 0.0) || !(power_ue_watt > 0.0)) fail("power budgets must be > 0");
    if (!(sic_db >= 0.0)) fail("sic_db must be >= 0");
    if (!(user_region_radius > 0.0)) fail("user_region_radius must be > 0");
    if (!(alpha_bu > 0.0 && alpha_uu > 0.0 && alpha_bb > 0.0 && alpha_r > 0.0))
      fail("path-loss exponents must be > 0");
    if (!(rician_factor >= 0.0)) fail("rician_factor must be >= 0");
    if (!(bandwidth_hz > 0.0) || !(carrier_freq_hz > 0.0)) fail("frequencies must be > 0");
    if (!(antenna_spacing_wavelengths > 0.0)) fail("antenna spacing must be > 0");
  }

  /// Noise power in watts over the configured bandwidth.
  double noise_power_watt() const {
    return std::pow(10.0, (noise_density_dbm_per_hz + 10.0 * std::log10(bandwidth_hz) - 30.0) / 10.0);
  }

  double sic_linear() const { return std::pow(10.0, sic_db / 10.0); }
};

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{
      {"num_cells", c.num_cells},
      {"users_per_cell_dl", c.users_per_cell_dl},
      {"users_per_cell_ul", c.users_per_cell_ul},
      {"bs_tx_antennas", c.bs_tx_antennas},
      {"bs_rx_antennas", c.bs_rx_antennas},
      {"ue_tx_antennas", c.ue_tx_antennas},
      {"ue_rx_antennas", c.ue_rx_antennas},
      {"ris_elements", c.ris_elements},
      {"streams_dl", c.streams_dl},
      {"streams_ul", c.streams_ul},
      {"bs_positions", c.bs_positions},
      {"ris_position", c.ris_position},
      {"user_center_x", c.user_center_x},
      {"user_center_y", c.user_center_y},
      {"user_height_m", c.user_height_m},
      {"user_region_radius", c.user_region_radius},
      {"carrier_freq_hz", c.carrier_freq_hz},
      {"bandwidth_hz", c.bandwidth_hz},
      {"noise_density_dbm_per_hz", c.noise_density_dbm_per_hz},
      {"power_bs_watt", c.power_bs_watt},
      {"power_ue_watt", c.power_ue_watt},
      {"sic_db", c.sic_db},
      {"pathloss_ref_db", c.pathloss_ref_db},
      {"alpha_bu", c.alpha_bu},
      {"alpha_uu", c.alpha_uu},
      {"alpha_bb", c.alpha_bb},
      {"alpha_r", c.alpha_r},
      {"rician_factor", c.rician_factor},
      {"antenna_spacing_wavelengths", c.antenna_spacing_wavelengths},
      {"si_pathloss_db", c.si_pathloss_db},
      {"direct_links_enabled", c.direct_links_enabled},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected so that typos in
/// config files surface as errors instead of silently using defaults.
inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) throw ConfigError("unknown scenario field: " + it.key());

  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("num_cells", c.num_cells);
  get("users_per_cell_dl", c.users_per_cell_dl);
  get("users_per_cell_ul", c.users_per_cell_ul);
  get("bs_tx_antennas", c.bs_tx_antennas);
  get("bs_rx_antennas", c.bs_rx_antennas);
  get("ue_tx_antennas", c.ue_tx_antennas);
  get("ue_rx_antennas", c.ue_rx_antennas);
  get("ris_elements", c.ris_elements);
  get("streams_dl", c.streams_dl);
  get("streams_ul", c.streams_ul);
  get("bs_positions", c.bs_positions);
  get("ris_position", c.ris_position);
  get("user_center_x", c.user_center_x);
  get("user_center_y", c.user_center_y);
  get("user_height_m", c.user_height_m);
  get("user_region_radius", c.user_region_radius);
  get("carrier_freq_hz", c.carrier_freq_hz);
  get("bandwidth_hz", c.bandwidth_hz);
  get("noise_density_dbm_per_hz", c.noise_density_dbm_per_hz);
  get("power_bs_watt", c.power_bs_watt);
  get("power_ue_watt", c.power_ue_watt);
  get("sic_db", c.sic_db);
  get("pathloss_ref_db", c.pathloss_ref_db);
  get("alpha_bu", c.alpha_bu);
  get("alpha_uu", c.alpha_uu);
  get("alpha_bb", c.alpha_bb);
  get("alpha_r", c.alpha_r);
  get("rician_factor", c.rician_factor);
  get("antenna_spacing_wavelengths", c.antenna_spacing_wavelengths);
  get("si_pathloss_db", c.si_pathloss_db);
  get("direct_links_enabled", c.direct_links_enabled);
}

/// Parses a config document; errors from the JSON layer are rethrown as ConfigError.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c = j.get<ScenarioConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed scenario config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Applies a dotted-key override such as "ris_position.0=200" or "sic_db=120".
/// The value is parsed as JSON when possible, else taken as a string.
inline ScenarioConfig apply_override(const ScenarioConfig& base, const std::string& key,
                                     const std::string& value) {
  nlohmann::json doc = base;
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  std::string pointer = "/" + key;
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  const nlohmann::json::json_pointer ptr(pointer);
  if (!doc.contains(ptr)) throw ConfigError("unknown override key: " + key);
  doc[ptr] = parsed;
  return scenario_from_json(doc);
}

}  // namespace fdris
