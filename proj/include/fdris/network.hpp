#pragma once

#include <cmath>
#include <vector>

#include "fdris/channel.hpp"
#include "fdris/types.hpp"

namespace fdris {

/// Surface configuration: phases theta in [0, 2pi) and the unit-modulus
/// reflection vector phi = exp(j theta).
class PhaseState {
 public:
  PhaseState() = default;

  explicit PhaseState(RVec theta) : theta_(std::move(theta)) {
    for (Eigen::Index m = 0; m < theta_.size(); ++m) theta_(m) = wrap(theta_(m));
    phi_.resize(theta_.size());
    for (Eigen::Index m = 0; m < theta_.size(); ++m) phi_(m) = std::polar(1.0, theta_(m));
  }

  static PhaseState zeros(int m) { return PhaseState(RVec::Zero(m)); }

  /// Phases taken from the arguments of `phi`; moduli are discarded.
  static PhaseState from_phi(const CVec& phi) {
    RVec theta(phi.size());
    for (Eigen::Index m = 0; m < phi.size(); ++m) theta(m) = std::arg(phi(m));
    return PhaseState(std::move(theta));
  }

  static PhaseState random(int m, Rng& rng) {
    RVec theta(m);
    for (int i = 0; i < m; ++i) theta(i) = detail::uniform(rng, 0.0, kTwoPi);
    return PhaseState(std::move(theta));
  }

  const RVec& theta() const { return theta_; }
  const CVec& phi() const { return phi_; }
  int size() const { return static_cast<int>(theta_.size()); }

  static double wrap(double t) {
    double w = std::fmod(t, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
  }

 private:
  RVec theta_;
  CVec phi_;
};

/// Transmit precoders. dl[l][k] is bs_tx x dl_streams, ul[l][k] is ue_tx x ul_streams.
struct PrecoderSet {
  std::vector<std::vector<CMat>> dl;
  std::vector<std::vector<CMat>> ul;

  static PrecoderSet zeros(const Dimensions& d) {
    PrecoderSet p;
    p.dl.assign(d.cells, std::vector<CMat>(d.dl_users, CMat::Zero(d.bs_tx, d.dl_streams)));
    p.ul.assign(d.cells, std::vector<CMat>(d.ul_users, CMat::Zero(d.ue_tx, d.ul_streams)));
    return p;
  }

  /// Sum_k Tr(F F^H) over the downlink precoders of cell l.
  double cell_power(int l) const {
    double p = 0.0;
    for (const auto& f : dl.at(l)) p += f.squaredNorm();
    return p;
  }
  double ul_power(int l, int k) const { return ul.at(l).at(k).squaredNorm(); }

  /// Largest relative budget excess over all constraints (<= 0 when feasible).
  double max_relative_excess(double power_bs, double power_ue) const {
    double worst = -1.0;
    for (std::size_t l = 0; l < dl.size(); ++l)
      if (!dl[l].empty()) worst = std::max(worst, cell_power(static_cast<int>(l)) / power_bs - 1.0);
    for (const auto& cell : ul)
      for (const auto& f : cell) worst = std::max(worst, f.squaredNorm() / power_ue - 1.0);
    return worst;
  }
};

/// Per-user rates in bit/s/Hz. ul[l][k], dl[l][k].
struct RateBreakdown {
  std::vector<std::vector<double>> ul;
  std::vector<std::vector<double>> dl;
  double ul_sum = 0.0;
  double dl_sum = 0.0;
  double sum_rate = 0.0;
};

enum class Direction { Uplink, Downlink };

/// direct + g_rx * diag(phi) * g_tx
inline CMat effective_channel(const CMat& direct, const CMat& g_rx, const PhaseState& phase, const CMat& g_tx) {
  detail::require_dims(g_rx.cols() == phase.size() && g_tx.rows() == phase.size(),
                       "effective_channel: surface dimension mismatch");
  detail::require_dims(direct.rows() == g_rx.rows() && direct.cols() == g_tx.cols(),
                       "effective_channel: direct link dimension mismatch");
  return direct + g_rx * phase.phi().asDiagonal() * g_tx;
}

/// All direct + reflected channels for one surface configuration, same
/// indexing as ChannelSet.
struct EquivalentChannels {
  Dimensions dims;
  std::vector<std::vector<std::vector<CMat>>> dl_from_bs;
  std::vector<std::vector<CMat>> bs_from_bs;
  std::vector<std::vector<std::vector<CMat>>> bs_from_ul;
  std::vector<std::vector<std::vector<std::vector<CMat>>>> dl_from_ul;
  double noise_bs = 0.0;
  double noise_ue = 0.0;
  double sic = 1.0;

  double bs_link_scale(int l, int j) const { return l == j ? 1.0 / sic : 1.0; }
};

inline EquivalentChannels equivalent_channels(const ChannelSet& ch, const PhaseState& phase) {
  const Dimensions& d = ch.dims;
  detail::require_dims(phase.size() == d.ris, "equivalent_channels: phase length != surface size");
  EquivalentChannels eq;
  eq.dims = d;
  eq.noise_bs = ch.noise_bs;
  eq.noise_ue = ch.noise_ue;
  eq.sic = ch.sic;
  const auto phi = phase.phi().asDiagonal();
  const int L = d.cells;

  // G_rx * Phi is shared by every link into the same receiver.
  std::vector<CMat> bs_rx_phi(L);
  std::vector<std::vector<CMat>> dl_rx_phi(L);
  for (int l = 0; l < L; ++l) {
    bs_rx_phi[l] = ch.bs_from_ris[l] * phi;
    dl_rx_phi[l].resize(d.dl_users);
    for (int k = 0; k < d.dl_users; ++k) dl_rx_phi[l][k] = ch.dl_from_ris[l][k] * phi;
  }

  eq.dl_from_bs.assign(L, std::vector<std::vector<CMat>>(d.dl_users, std::vector<CMat>(L)));
  eq.bs_from_bs.assign(L, std::vector<CMat>(L));
  eq.bs_from_ul.assign(L, std::vector<std::vector<CMat>>(L, std::vector<CMat>(d.ul_users)));
  eq.dl_from_ul.assign(L, std::vector<std::vector<std::vector<CMat>>>(
                              d.dl_users, std::vector<std::vector<CMat>>(L, std::vector<CMat>(d.ul_users))));
  for (int l = 0; l < L; ++l) {
    for (int j = 0; j < L; ++j) eq.bs_from_bs[l][j] = ch.bs_from_bs[l][j] + bs_rx_phi[l] * ch.ris_from_bs[j];
    for (int k = 0; k < d.dl_users; ++k)
      for (int j = 0; j < L; ++j) {
        eq.dl_from_bs[l][k][j] = ch.dl_from_bs[l][k][j] + dl_rx_phi[l][k] * ch.ris_from_bs[j];
        for (int i = 0; i < d.ul_users; ++i)
          eq.dl_from_ul[l][k][j][i] = ch.dl_from_ul[l][k][j][i] + dl_rx_phi[l][k] * ch.ris_from_ul[j][i];
      }
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < d.ul_users; ++k)
        eq.bs_from_ul[l][j][k] = ch.bs_from_ul[l][j][k] + bs_rx_phi[l] * ch.ris_from_ul[j][k];
  }
  return eq;
}

namespace detail {

inline void check_user(const Dimensions& d, int l, int k, Direction dir) {
  const int users = dir == Direction::Uplink ? d.ul_users : d.dl_users;
  if (l < 0 || l >= d.cells || k < 0 || k >= users) throw std::out_of_range("user index out of range");
}

}  // namespace detail

/// Interference-plus-noise covariance at BS l for decoding UL user (l, k).
inline CMat ul_interference_covariance(int l, int k, const EquivalentChannels& eq, const PrecoderSet& f) {
  const Dimensions& d = eq.dims;
  detail::check_user(d, l, k, Direction::Uplink);
  CMat v = eq.noise_bs * CMat::Identity(d.bs_rx, d.bs_rx);
  for (int j = 0; j < d.cells; ++j)
    for (int i = 0; i < d.ul_users; ++i) {
      if (i == k && j == l) continue;
      const CMat hf = eq.bs_from_ul[l][j][i] * f.ul[j][i];
      v.noalias() += hf * hf.adjoint();
    }
  for (int j = 0; j < d.cells; ++j) {
    const double s = eq.bs_link_scale(l, j);
    for (int i = 0; i < d.dl_users; ++i) {
      const CMat hf = eq.bs_from_bs[l][j] * f.dl[j][i];
      v.noalias() += s * (hf * hf.adjoint());
    }
  }
  return detail::hermitian_part(v);
}

/// Interference-plus-noise covariance at DL user (l, k).
inline CMat dl_interference_covariance(int l, int k, const EquivalentChannels& eq, const PrecoderSet& f) {
  const Dimensions& d = eq.dims;
  detail::check_user(d, l, k, Direction::Downlink);
  CMat v = eq.noise_ue * CMat::Identity(d.ue_rx, d.ue_rx);
  for (int j = 0; j < d.cells; ++j)
    for (int i = 0; i < d.dl_users; ++i) {
      if (i == k && j == l) continue;
      const CMat hf = eq.dl_from_bs[l][k][j] * f.dl[j][i];
      v.noalias() += hf * hf.adjoint();
    }
  for (int j = 0; j < d.cells; ++j)
    for (int i = 0; i < d.ul_users; ++i) {
      const CMat hf = eq.dl_from_ul[l][k][j][i] * f.ul[j][i];
      v.noalias() += hf * hf.adjoint();
    }
  return detail::hermitian_part(v);
}

inline CMat ul_interference_covariance(int l, int k, const ChannelSet& ch, const PrecoderSet& f, const PhaseState& phase) {
  return ul_interference_covariance(l, k, equivalent_channels(ch, phase), f);
}

inline CMat dl_interference_covariance(int l, int k, const ChannelSet& ch, const PrecoderSet& f, const PhaseState& phase) {
  return dl_interference_covariance(l, k, equivalent_channels(ch, phase), f);
}

/// Desired-link equivalent channel of a user: H(l <- k_l^u) or H(k_l^d <- l).
inline const CMat& desired_channel(const EquivalentChannels& eq, int l, int k, Direction dir) {
  return dir == Direction::Uplink ? eq.bs_from_ul[l][l][k] : eq.dl_from_bs[l][k][l];
}

inline const CMat& user_precoder(const PrecoderSet& f, int l, int k, Direction dir) {
  return dir == Direction::Uplink ? f.ul[l][k] : f.dl[l][k];
}

inline CMat interference_covariance(int l, int k, Direction dir, const EquivalentChannels& eq, const PrecoderSet& f) {
  return dir == Direction::Uplink ? ul_interference_covariance(l, k, eq, f) : dl_interference_covariance(l, k, eq, f);
}

/// log2 det(I + H F F^H H^H V^{-1}), evaluated as log2 det(V + H F F^H H^H) - log2 det(V).
inline double rate_from_covariance(const CMat& h, const CMat& f, const CMat& v) {
  const CMat hf = h * f;
  const CMat total = v + hf * hf.adjoint();
  double r;
  try {
    r = detail::log2_det_hpd(total) - detail::log2_det_hpd(v);
  } catch (const DomainError&) {
    throw DomainError("user_rate: singular interference-plus-noise covariance");
  }
  // Round-off can push an exactly-zero rate a hair below zero.
  if (r < 0.0 && r > -1e-9) r = 0.0;
  return r;
}

inline double user_rate(int l, int k, Direction dir, const EquivalentChannels& eq, const PrecoderSet& f) {
  return rate_from_covariance(desired_channel(eq, l, k, dir), user_precoder(f, l, k, dir),
                              interference_covariance(l, k, dir, eq, f));
}

inline double user_rate(int l, int k, Direction dir, const ChannelSet& ch, const PrecoderSet& f, const PhaseState& phase) {
  return user_rate(l, k, dir, equivalent_channels(ch, phase), f);
}

inline RateBreakdown sum_rate(const EquivalentChannels& eq, const PrecoderSet& f) {
  const Dimensions& d = eq.dims;
  RateBreakdown r;
  r.ul.assign(d.cells, std::vector<double>(d.ul_users, 0.0));
  r.dl.assign(d.cells, std::vector<double>(d.dl_users, 0.0));
  for (int l = 0; l < d.cells; ++l) {
    for (int k = 0; k < d.ul_users; ++k) {
      r.ul[l][k] = user_rate(l, k, Direction::Uplink, eq, f);
      r.ul_sum += r.ul[l][k];
    }
    for (int k = 0; k < d.dl_users; ++k) {
      r.dl[l][k] = user_rate(l, k, Direction::Downlink, eq, f);
      r.dl_sum += r.dl[l][k];
    }
  }
  r.sum_rate = r.ul_sum + r.dl_sum;
  return r;
}

inline RateBreakdown sum_rate(const ChannelSet& ch, const PrecoderSet& f, const PhaseState& phase) {
  return sum_rate(equivalent_channels(ch, phase), f);
}

}  // namespace fdris
