#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fdris/bcd.hpp"
#include "fdris/channel.hpp"
#include "fdris/phase_opt.hpp"
#include "fdris/wmmse.hpp"

namespace fdris {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// A fully populated small problem: channels, random feasible precoders and
/// phases, and the decoders/weights those imply.
struct ValidationInstance {
  ScenarioConfig config;
  ChannelSet channels;
  PrecoderSet precoders;
  PhaseState phase;
  AuxiliarySet aux;
};

inline PrecoderSet random_precoders(const Dimensions& d, double power_bs, double power_ue, Rng& rng) {
  PrecoderSet f = PrecoderSet::zeros(d);
  for (int l = 0; l < d.cells; ++l) {
    double total = 0.0;
    for (auto& m : f.dl[l]) {
      m = detail::complex_gaussian(d.bs_tx, d.dl_streams, rng);
      total += m.squaredNorm();
    }
    for (auto& m : f.dl[l]) m *= std::sqrt(detail::uniform(rng, 0.2, 1.0) * power_bs / total);
    for (auto& m : f.ul[l]) {
      m = detail::complex_gaussian(d.ue_tx, d.ul_streams, rng);
      m *= std::sqrt(detail::uniform(rng, 0.2, 1.0) * power_ue / m.squaredNorm());
    }
  }
  return f;
}

/// Two cells, one user per direction, 2x2 arrays and M elements.
inline ScenarioConfig small_scenario(int ris_elements) {
  ScenarioConfig c;
  c.users_per_cell_dl = 1;
  c.users_per_cell_ul = 1;
  c.bs_tx_antennas = c.bs_rx_antennas = c.ue_tx_antennas = c.ue_rx_antennas = 2;
  c.streams_dl = c.streams_ul = 2;
  c.ris_elements = ris_elements;
  return c;
}

inline ValidationInstance make_validation_instance(const ScenarioConfig& config, std::uint64_t seed) {
  ValidationInstance in;
  in.config = config;
  in.channels = generate_realization(config, seed);
  Rng rng(seed * 7919 + 17);
  in.precoders = random_precoders(in.channels.dims, config.power_bs_watt, config.power_ue_watt, rng);
  in.phase = PhaseState::random(config.ris_elements, rng);
  in.aux = update_auxiliary(equivalent_channels(in.channels, in.phase), in.precoders);
  return in;
}

inline CVec random_unit_vector(int m, Rng& rng) { return PhaseState::random(m, rng).phi(); }

/// Central differences over the real and imaginary parts; returns the
/// complex gradient d/dRe + j d/dIm.
inline CVec finite_difference_gradient_phi(const QuadraticForm& qf, const CVec& phi, double h = 1e-6) {
  CVec g(phi.size());
  for (Eigen::Index m = 0; m < phi.size(); ++m) {
    CVec p = phi, q = phi;
    p(m) += h;
    q(m) -= h;
    const double dre = (objective(qf, p) - objective(qf, q)) / (2.0 * h);
    p = phi;
    q = phi;
    p(m) += Complex(0.0, h);
    q(m) -= Complex(0.0, h);
    const double dim = (objective(qf, p) - objective(qf, q)) / (2.0 * h);
    g(m) = Complex(dre, dim);
  }
  return g;
}

inline RVec finite_difference_gradient_theta(const QuadraticForm& qf, const RVec& theta, double h = 1e-6) {
  RVec g(theta.size());
  for (Eigen::Index m = 0; m < theta.size(); ++m) {
    RVec p = theta, q = theta;
    p(m) += h;
    q(m) -= h;
    g(m) = (objective_theta(qf, p) - objective_theta(qf, q)) / (2.0 * h);
  }
  return g;
}

/// Minimum of f over the grid {2 pi i / n}^M (exhaustive; keep n^M small).
inline double grid_minimum(const QuadraticForm& qf, int n) {
  const int m = qf.size();
  std::vector<Complex> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = std::polar(1.0, kTwoPi * i / n);
  std::vector<int> idx(m, 0);
  CVec phi(m);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (int k = 0; k < m; ++k) phi(k) = roots[idx[k]];
    best = std::min(best, objective(qf, phi));
    int k = 0;
    while (k < m && ++idx[k] == n) idx[k++] = 0;
    if (k == m) break;
  }
  return best;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// Oracle checks on M = 3, L = 2, one user per direction. Each entry states
/// pass/fail and the worst deviation observed.
inline std::vector<CheckResult> run_validation(int instances = 10, std::uint64_t seed = 1) {
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, bool ok, double worst, double tol) {
    std::ostringstream s;
    s << "worst " << worst << " (tolerance " << tol << ")";
    out.push_back({name, ok, s.str()});
  };
  const ScenarioConfig cfg = small_scenario(3);

  {
    ScenarioConfig ref;
    const Point3 user{ref.user_center_x, ref.user_center_y, ref.user_height_m};
    const double d_bu = distance(ref.bs_positions[0], user);
    const double d_br = distance(ref.bs_positions[0], ref.ris_position);
    const double d_ru = distance(ref.ris_position, user);
    const double e1 = std::abs(path_loss_db(d_bu, ref.alpha_bu, ref.pathloss_ref_db) + 123.19);
    const double e2 = std::abs(reflected_path_loss_db(d_br, d_ru, 2.2, ref.pathloss_ref_db) + 156.84);
    const double e3 = std::abs(reflected_path_loss_db(d_br, d_ru, 2.8, ref.pathloss_ref_db) + 183.25);
    const double worst = std::max({e1, e2, e3});
    add("path-loss anchors", worst <= 0.01, worst, 0.01);
  }

  double w_sur = 0, w_off = 0, w_gphi = 0, w_gth = 0, w_tan = 0, w_grid = 0;
  for (int i = 0; i < instances; ++i) {
    const ValidationInstance in = make_validation_instance(cfg, seed + i);
    const Dimensions& d = in.channels.dims;
    const double rate = sum_rate(in.channels, in.precoders, in.phase).sum_rate;
    w_sur = std::max(w_sur, relative_error(total_surrogate_rate(in.aux, d), rate));

    const QuadraticForm qf = build_quadratic_form(in.channels, in.precoders, in.aux);
    Rng rng(seed + 1000 + i);
    const PhaseState p1 = PhaseState::random(d.ris, rng), p2 = PhaseState::random(d.ris, rng);
    const double dj = weighted_mse_objective(in.channels, in.precoders, in.aux, p1) -
                      weighted_mse_objective(in.channels, in.precoders, in.aux, p2);
    const double df = objective(qf, p1.phi()) - objective(qf, p2.phi());
    const double scale = std::max(std::abs(weighted_mse_objective(in.channels, in.precoders, in.aux, p1)), 1e-300);
    w_off = std::max(w_off, std::abs(dj - df) / scale);

    const CVec phi = random_unit_vector(d.ris, rng);
    const CVec g = euclidean_gradient_phi(qf, phi);
    w_gphi = std::max(w_gphi, (g - finite_difference_gradient_phi(qf, phi)).norm() / std::max(g.norm(), 1e-300));
    const RVec th = PhaseState::random(d.ris, rng).theta();
    const RVec gt = sca_gradient_theta(qf, th);
    w_gth = std::max(w_gth, (gt - finite_difference_gradient_theta(qf, th)).norm() / std::max(gt.norm(), 1e-300));

    const CVec z = riemannian_project(g, phi);
    for (Eigen::Index m = 0; m < z.size(); ++m) w_tan = std::max(w_tan, std::abs((z(m) * std::conj(phi(m))).real()));

    const double fg = grid_minimum(qf, 64);
    const double fc = ccm_minimize(qf, phi).final_f();
    const double fs = sca_minimize(qf, th).final_f();
    w_grid = std::max({w_grid, fc - fg, fs - fg});
  }
  add("surrogate equals rate after decoder update", w_sur <= 1e-8, w_sur, 1e-8);
  add("quadratic form offset cancellation", w_off <= 1e-8, w_off, 1e-8);
  add("phi gradient vs finite differences", w_gphi <= 1e-5, w_gphi, 1e-5);
  add("theta gradient vs finite differences", w_gth <= 1e-5, w_gth, 1e-5);
  add("projected gradient is tangent", w_tan <= 1e-12, w_tan, 1e-12);
  add("CCM and SCA reach the 64^3 grid minimum", w_grid <= 1e-3, w_grid, 1e-3);

  double w_mono = 0, w_excess = -1, w_slack = 0;
  bool solved = true;
  for (int i = 0; i < instances; ++i) {
    const ChannelSet ch = generate_realization(cfg, seed + 500 + i);
    for (PhaseAlgorithm alg : {PhaseAlgorithm::Ccm, PhaseAlgorithm::Sca}) {
      SolverConfig sc;
      sc.phase_algorithm = alg;
      sc.power_bs_watt = cfg.power_bs_watt;
      sc.power_ue_watt = cfg.power_ue_watt;
      const SolverReport r = solve(ch, sc, seed + 500 + i);
      solved = solved && r.ok();
      for (std::size_t t = 1; t < r.sum_rate_trace.size(); ++t)
        w_mono = std::max(w_mono, (r.sum_rate_trace[t - 1] - r.sum_rate_trace[t]) / std::max(r.sum_rate_trace[t - 1], 1e-300));
      w_excess = std::max(w_excess, r.max_power_excess);
      w_slack = std::max(w_slack, r.max_slackness);
    }
  }
  add("BCD sum-rate trace nondecreasing", solved && w_mono <= 1e-8, w_mono, 1e-8);
  add("power budgets respected", solved && w_excess <= 1e-6, w_excess, 1e-6);
  add("complementary slackness", solved && w_slack <= 1e-6, w_slack, 1e-6);
  return out;
}

}  // namespace fdris
