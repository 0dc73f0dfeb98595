#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fdris/scenario.hpp"
#include "fdris/types.hpp"

namespace fdris {

/// Reference distance of the log-distance path-loss law, in meters.
inline constexpr double kReferenceDistance = 1.0;

/// Log-distance large-scale loss in dB: ref_loss_db - 10 * exponent * log10(d / d0).
inline double path_loss_db(double distance_m, double exponent, double ref_loss_db) {
  if (!(distance_m > 0.0)) throw DomainError("path_loss_db: distance must be positive");
  return ref_loss_db - 10.0 * exponent * std::log10(distance_m / kReferenceDistance);
}

/// Cascaded transmitter -> surface -> receiver loss; each hop carries its own
/// reference loss, so the product-distance law falls out of per-hop scaling.
inline double reflected_path_loss_db(double d_tx_ris_m, double d_ris_rx_m, double exponent_r,
                                     double ref_loss_db) {
  return path_loss_db(d_tx_ris_m, exponent_r, ref_loss_db) +
         path_loss_db(d_ris_rx_m, exponent_r, ref_loss_db);
}

/// Uniform linear array response towards `angle_rad`.
inline CVec steering_vector(double angle_rad, int n, double spacing_over_lambda) {
  if (n < 1) throw DomainError("steering_vector: n must be >= 1");
  CVec a(n);
  const double k = kTwoPi * spacing_over_lambda * std::sin(angle_rad);
  a(0) = Complex(1.0, 0.0);
  for (int i = 1; i < n; ++i) a(i) = std::polar(1.0, k * i);
  return a;
}

/// sqrt(k/(k+1)) * los + sqrt(1/(k+1)) * nlos
inline CMat rician_channel(double kappa, const CMat& los, const CMat& nlos) {
  detail::require_dims(los.rows() == nlos.rows() && los.cols() == nlos.cols(),
                       "rician_channel: LoS and NLoS dimensions differ");
  if (!(kappa >= 0.0)) throw DomainError("rician_channel: kappa must be >= 0");
  if (std::isinf(kappa)) return los;
  return std::sqrt(kappa / (kappa + 1.0)) * los + std::sqrt(1.0 / (kappa + 1.0)) * nlos;
}

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

inline double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Array sizes and user counts of a network. User counts may be zero for
/// direction-restricted (half-duplex) sub-networks.
struct Dimensions {
  int cells = 0;
  int dl_users = 0;  // per cell
  int ul_users = 0;  // per cell
  int bs_tx = 0;
  int bs_rx = 0;
  int ue_tx = 0;
  int ue_rx = 0;
  int ris = 0;
  int dl_streams = 0;
  int ul_streams = 0;

  static Dimensions from(const ScenarioConfig& c) {
    return {c.num_cells,      c.users_per_cell_dl, c.users_per_cell_ul, c.bs_tx_antennas,
            c.bs_rx_antennas, c.ue_tx_antennas,    c.ue_rx_antennas,    c.ris_elements,
            c.streams_dl,     c.streams_ul};
  }
};

/// One realization of every direct and surface-related channel.
///
/// Naming follows receiver_from_transmitter. Indices: l, j cells; k, i users.
struct ChannelSet {
  Dimensions dims;

  std::vector<std::vector<std::vector<CMat>>> dl_from_bs;  ///< [l][k][j]  ue_rx x bs_tx
  std::vector<std::vector<CMat>> bs_from_bs;               ///< [l][j]     bs_rx x bs_tx, j == l is SI
  std::vector<std::vector<std::vector<CMat>>> bs_from_ul;  ///< [j][l][k]  bs_rx x ue_tx
  std::vector<std::vector<std::vector<std::vector<CMat>>>> dl_from_ul;  ///< [l][k][j][i] ue_rx x ue_tx

  std::vector<CMat> bs_from_ris;               ///< [l]     bs_rx x M
  std::vector<std::vector<CMat>> dl_from_ris;  ///< [l][k]  ue_rx x M
  std::vector<CMat> ris_from_bs;               ///< [l]     M x bs_tx
  std::vector<std::vector<CMat>> ris_from_ul;  ///< [l][k]  M x ue_tx

  double noise_bs = 0.0;  ///< watts
  double noise_ue = 0.0;  ///< watts
  double sic = 1.0;       ///< linear SIC coefficient (>= 1)
  std::uint64_t seed = 0;

  std::vector<std::vector<Point3>> dl_positions;
  std::vector<std::vector<Point3>> ul_positions;

  /// Inverse SIC scaling applied to the BS(j) -> BS(l) link.
  double bs_link_scale(int l, int j) const { return l == j ? 1.0 / sic : 1.0; }

  /// Every matrix has its declared size and finite entries.
  bool well_formed() const;
};

namespace detail {

inline bool finite_with_shape(const CMat& m, Eigen::Index r, Eigen::Index c) {
  return m.rows() == r && m.cols() == c && m.allFinite();
}

}  // namespace detail

inline bool ChannelSet::well_formed() const {
  const auto& d = dims;
  using detail::finite_with_shape;
  for (int l = 0; l < d.cells; ++l) {
    if (!finite_with_shape(bs_from_ris[l], d.bs_rx, d.ris)) return false;
    if (!finite_with_shape(ris_from_bs[l], d.ris, d.bs_tx)) return false;
    for (int j = 0; j < d.cells; ++j)
      if (!finite_with_shape(bs_from_bs[l][j], d.bs_rx, d.bs_tx)) return false;
    for (int k = 0; k < d.dl_users; ++k) {
      if (!finite_with_shape(dl_from_ris[l][k], d.ue_rx, d.ris)) return false;
      for (int j = 0; j < d.cells; ++j) {
        if (!finite_with_shape(dl_from_bs[l][k][j], d.ue_rx, d.bs_tx)) return false;
        for (int i = 0; i < d.ul_users; ++i)
          if (!finite_with_shape(dl_from_ul[l][k][j][i], d.ue_rx, d.ue_tx)) return false;
      }
    }
    for (int k = 0; k < d.ul_users; ++k) {
      if (!finite_with_shape(ris_from_ul[l][k], d.ris, d.ue_tx)) return false;
      for (int j = 0; j < d.cells; ++j)
        if (!finite_with_shape(bs_from_ul[j][l][k], d.bs_rx, d.ue_tx)) return false;
    }
  }
  return std::isfinite(noise_bs) && std::isfinite(noise_ue) && noise_bs >= 0.0 && noise_ue >= 0.0;
}

/// Allocates every matrix of `dims` as zeros.
inline ChannelSet zero_channels(const Dimensions& d, double noise_bs, double noise_ue, double sic) {
  ChannelSet ch;
  ch.dims = d;
  ch.noise_bs = noise_bs;
  ch.noise_ue = noise_ue;
  ch.sic = sic;
  const int L = d.cells;
  ch.dl_from_bs.assign(L, std::vector<std::vector<CMat>>(d.dl_users, std::vector<CMat>(L, CMat::Zero(d.ue_rx, d.bs_tx))));
  ch.bs_from_bs.assign(L, std::vector<CMat>(L, CMat::Zero(d.bs_rx, d.bs_tx)));
  ch.bs_from_ul.assign(L, std::vector<std::vector<CMat>>(L, std::vector<CMat>(d.ul_users, CMat::Zero(d.bs_rx, d.ue_tx))));
  ch.dl_from_ul.assign(
      L, std::vector<std::vector<std::vector<CMat>>>(
             d.dl_users, std::vector<std::vector<CMat>>(L, std::vector<CMat>(d.ul_users, CMat::Zero(d.ue_rx, d.ue_tx)))));
  ch.bs_from_ris.assign(L, CMat::Zero(d.bs_rx, d.ris));
  ch.dl_from_ris.assign(L, std::vector<CMat>(d.dl_users, CMat::Zero(d.ue_rx, d.ris)));
  ch.ris_from_bs.assign(L, CMat::Zero(d.ris, d.bs_tx));
  ch.ris_from_ul.assign(L, std::vector<CMat>(d.ul_users, CMat::Zero(d.ris, d.ue_tx)));
  ch.dl_positions.assign(L, std::vector<Point3>(d.dl_users, Point3{0, 0, 0}));
  ch.ul_positions.assign(L, std::vector<Point3>(d.ul_users, Point3{0, 0, 0}));
  return ch;
}

/// Centre of the user disk of cell `l` for the given direction. Disks sit
/// `user_center_x` from the serving BS on the side facing the surface; uplink
/// users at +y, downlink users at -y.
inline Point3 user_disk_center(const ScenarioConfig& c, int l, bool uplink) {
  const Point3& bs = c.bs_positions.at(l);
  const double dir = c.ris_position[0] >= bs[0] ? 1.0 : -1.0;
  const double y = uplink ? c.user_center_y : -c.user_center_y;
  return {bs[0] + dir * c.user_center_x, bs[1] + y, c.user_height_m};
}

namespace detail {

inline Point3 drop_user(const Point3& center, double radius, Rng& rng) {
  const double r = radius * std::sqrt(uniform(rng, 0.0, 1.0));
  const double a = uniform(rng, 0.0, kTwoPi);
  return {center[0] + r * std::cos(a), center[1] + r * std::sin(a), center[2]};
}

inline CMat rayleigh_link(int rx, int tx, double loss_db, Rng& rng) {
  return db_to_amplitude(loss_db) * complex_gaussian(rx, tx, rng);
}

inline CMat rician_link(int rx, int tx, double loss_db, const ScenarioConfig& c, Rng& rng) {
  const double aoa = uniform(rng, 0.0, kTwoPi);
  const double aod = uniform(rng, 0.0, kTwoPi);
  const CMat los = steering_vector(aoa, rx, c.antenna_spacing_wavelengths) *
                   steering_vector(aod, tx, c.antenna_spacing_wavelengths).adjoint();
  const CMat nlos = complex_gaussian(rx, tx, rng);
  return db_to_amplitude(loss_db) * rician_channel(c.rician_factor, los, nlos);
}

}  // namespace detail

/// Draws one Monte-Carlo realization. Pure function of (config, seed): the
/// draw order below is part of the contract and must not be reordered.
inline ChannelSet generate_realization(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const Dimensions d = Dimensions::from(config);
  const double noise = config.noise_power_watt();
  ChannelSet ch = zero_channels(d, noise, noise, config.sic_linear());
  ch.seed = seed;
  Rng rng(seed);
  const int L = d.cells;
  const double ref = config.pathloss_ref_db;

  for (int l = 0; l < L; ++l) {
    const Point3 dl_c = user_disk_center(config, l, false);
    const Point3 ul_c = user_disk_center(config, l, true);
    for (int k = 0; k < d.dl_users; ++k)
      ch.dl_positions[l][k] = detail::drop_user(dl_c, config.user_region_radius, rng);
    for (int k = 0; k < d.ul_users; ++k)
      ch.ul_positions[l][k] = detail::drop_user(ul_c, config.user_region_radius, rng);
  }

  // Direct links are drawn even when blocked so the surface links of a
  // realization do not depend on the blockage flag.
  const double direct_gain = config.direct_links_enabled ? 1.0 : 0.0;
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < d.dl_users; ++k)
      for (int j = 0; j < L; ++j) {
        const double pl = path_loss_db(distance(ch.dl_positions[l][k], config.bs_positions[j]), config.alpha_bu, ref);
        ch.dl_from_bs[l][k][j] = direct_gain * detail::rayleigh_link(d.ue_rx, d.bs_tx, pl, rng);
      }
  for (int j = 0; j < L; ++j)
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < d.ul_users; ++k) {
        const double pl = path_loss_db(distance(ch.ul_positions[l][k], config.bs_positions[j]), config.alpha_bu, ref);
        ch.bs_from_ul[j][l][k] = direct_gain * detail::rayleigh_link(d.bs_rx, d.ue_tx, pl, rng);
      }
  for (int l = 0; l < L; ++l)
    for (int j = 0; j < L; ++j) {
      const double pl = l == j ? config.si_pathloss_db
                               : path_loss_db(distance(config.bs_positions[l], config.bs_positions[j]), config.alpha_bb, ref);
      ch.bs_from_bs[l][j] = detail::rician_link(d.bs_rx, d.bs_tx, pl, config, rng);
    }
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < d.dl_users; ++k)
      for (int j = 0; j < L; ++j)
        for (int i = 0; i < d.ul_users; ++i) {
          const double pl = path_loss_db(distance(ch.dl_positions[l][k], ch.ul_positions[j][i]), config.alpha_uu, ref);
          ch.dl_from_ul[l][k][j][i] = detail::rayleigh_link(d.ue_rx, d.ue_tx, pl, rng);
        }

  const Point3& ris = config.ris_position;
  for (int l = 0; l < L; ++l) {
    const double pl = path_loss_db(distance(config.bs_positions[l], ris), config.alpha_r, ref);
    ch.bs_from_ris[l] = detail::rician_link(d.bs_rx, d.ris, pl, config, rng);
    ch.ris_from_bs[l] = detail::rician_link(d.ris, d.bs_tx, pl, config, rng);
  }
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < d.dl_users; ++k) {
      const double pl = path_loss_db(distance(ch.dl_positions[l][k], ris), config.alpha_r, ref);
      ch.dl_from_ris[l][k] = detail::rician_link(d.ue_rx, d.ris, pl, config, rng);
    }
    for (int k = 0; k < d.ul_users; ++k) {
      const double pl = path_loss_db(distance(ch.ul_positions[l][k], ris), config.alpha_r, ref);
      ch.ris_from_ul[l][k] = detail::rician_link(d.ris, d.ue_tx, pl, config, rng);
    }
  }
  return ch;
}

/// Copy with all surface channels zeroed (reflection removed).
inline ChannelSet without_reflection(const ChannelSet& in) {
  ChannelSet out = in;
  for (auto& m : out.bs_from_ris) m.setZero();
  for (auto& m : out.ris_from_bs) m.setZero();
  for (auto& v : out.dl_from_ris)
    for (auto& m : v) m.setZero();
  for (auto& v : out.ris_from_ul)
    for (auto& m : v) m.setZero();
  return out;
}

/// Sub-network keeping only uplink users (`keep_uplink`) or only downlink users.
inline ChannelSet restrict_direction(const ChannelSet& in, bool keep_uplink) {
  ChannelSet out = in;
  if (keep_uplink) {
    out.dims.dl_users = 0;
    for (auto& v : out.dl_from_bs) v.clear();
    for (auto& v : out.dl_from_ul) v.clear();
    for (auto& v : out.dl_from_ris) v.clear();
    for (auto& v : out.dl_positions) v.clear();
  } else {
    out.dims.ul_users = 0;
    for (auto& a : out.bs_from_ul)
      for (auto& v : a) v.clear();
    for (auto& a : out.dl_from_ul)
      for (auto& b : a)
        for (auto& v : b) v.clear();
    for (auto& v : out.ris_from_ul) v.clear();
    for (auto& v : out.ul_positions) v.clear();
  }
  return out;
}

}  // namespace fdris
