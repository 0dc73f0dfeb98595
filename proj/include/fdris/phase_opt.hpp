#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fdris/network.hpp"
#include "fdris/wmmse.hpp"

namespace fdris {

/// f(phi) = c^H phi + phi^H c + phi^H Xi phi. The weighted-MSE sum equals
/// f(phi) + constant_offset for every unit-modulus phi.
struct QuadraticForm {
  CMat Xi;
  CVec c;
  double constant_offset = 0.0;

  int size() const { return static_cast<int>(c.size()); }

  static QuadraticForm zero(int m) { return {CMat::Zero(m, m), CVec::Zero(m), 0.0}; }
};

struct LineSearchConfig {
  double armijo_tau = 0.3;
  double initial_step = 1.0;
  double shrink_factor = 0.5;
  int max_backtracks = 50;

  void validate() const {
    if (!(armijo_tau > 0.0 && armijo_tau < 0.5)) throw ConfigError("armijo_tau must lie in (0, 0.5)");
    if (!(initial_step > 0.0)) throw ConfigError("initial_step must be > 0");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) throw ConfigError("shrink_factor must lie in (0, 1)");
    if (max_backtracks < 1) throw ConfigError("max_backtracks must be >= 1");
  }
};

struct TracePoint {
  int iteration = 0;
  double f = 0.0;
  double step = 0.0;  ///< zeta for CCM, 1/beta for SCA
};

enum class PhaseTermination { Converged, IterationCap, Stalled };

inline const char* to_string(PhaseTermination t) {
  switch (t) {
    case PhaseTermination::Converged: return "converged";
    case PhaseTermination::IterationCap: return "iteration_cap";
    case PhaseTermination::Stalled: return "stalled";
  }
  return "unknown";
}

struct PhaseResult {
  CVec phi;
  RVec theta;
  std::vector<TracePoint> trace;  ///< entry 0 is the starting point
  PhaseTermination termination = PhaseTermination::Converged;
  int iterations = 0;

  double final_f() const { return trace.back().f; }
};

inline double objective(const QuadraticForm& qf, const CVec& phi) {
  detail::require_dims(phi.size() == qf.c.size(), "objective: phi has wrong length");
  return 2.0 * qf.c.dot(phi).real() + phi.dot(qf.Xi * phi).real();
}

inline double objective_theta(const QuadraticForm& qf, const RVec& theta) {
  CVec phi(theta.size());
  for (Eigen::Index m = 0; m < theta.size(); ++m) phi(m) = std::polar(1.0, theta(m));
  return objective(qf, phi);
}

/// 2 Xi phi + 2 c
inline CVec euclidean_gradient_phi(const QuadraticForm& qf, const CVec& phi) {
  detail::require_dims(phi.size() == qf.c.size(), "euclidean_gradient_phi: phi has wrong length");
  return 2.0 * (qf.Xi * phi + qf.c);
}

/// eta - Re{eta^* . phi} . phi
inline CVec riemannian_project(const CVec& eta, const CVec& phi) {
  detail::require_dims(eta.size() == phi.size(), "riemannian_project: length mismatch");
  CVec z(eta.size());
  for (Eigen::Index m = 0; m < eta.size(); ++m) z(m) = eta(m) - (std::conj(eta(m)) * phi(m)).real() * phi(m);
  return z;
}

inline CVec retract(const CVec& phi_bar) {
  CVec out(phi_bar.size());
  for (Eigen::Index m = 0; m < phi_bar.size(); ++m) {
    const double a = std::abs(phi_bar(m));
    if (a == 0.0) throw DomainError("retract: zero entry has no phase");
    out(m) = phi_bar(m) / a;
  }
  return out;
}

/// 2 Re{-j phi^* . (Xi phi + c)}
inline RVec sca_gradient_theta(const QuadraticForm& qf, const RVec& theta) {
  detail::require_dims(theta.size() == qf.c.size(), "sca_gradient_theta: theta has wrong length");
  CVec phi(theta.size());
  for (Eigen::Index m = 0; m < theta.size(); ++m) phi(m) = std::polar(1.0, theta(m));
  const CVec g = qf.Xi * phi + qf.c;
  RVec out(theta.size());
  for (Eigen::Index m = 0; m < theta.size(); ++m) out(m) = 2.0 * (Complex(0.0, -1.0) * std::conj(phi(m)) * g(m)).real();
  return out;
}

namespace detail {

inline bool relative_change_small(double f_old, double f_new, double tol) {
  return std::abs(f_old - f_new) <= tol * std::abs(f_new);
}

inline RVec angles(const CVec& phi) {
  RVec t(phi.size());
  for (Eigen::Index m = 0; m < phi.size(); ++m) t(m) = PhaseState::wrap(std::arg(phi(m)));
  return t;
}

}  // namespace detail

/// Riemannian steepest descent on the complex circle with Armijo backtracking.
/// The sufficient-decrease test is applied to the retracted point, and each
/// line search starts from twice the previously accepted step.
inline PhaseResult ccm_minimize(const QuadraticForm& qf, const CVec& phi0, const LineSearchConfig& ls = {},
                                double tol = 1e-5, int max_iter = 500) {
  ls.validate();
  detail::require_dims(phi0.size() == qf.c.size(), "ccm_minimize: phi0 has wrong length");
  for (Eigen::Index m = 0; m < phi0.size(); ++m)
    if (std::abs(std::abs(phi0(m)) - 1.0) > 1e-9) throw DomainError("ccm_minimize: phi0 is not unit-modulus");

  PhaseResult res;
  CVec phi = phi0;
  double f = objective(qf, phi);
  res.trace.push_back({0, f, 0.0});
  double step = ls.initial_step;
  res.termination = PhaseTermination::IterationCap;

  for (int t = 1; t <= max_iter; ++t) {
    res.iterations = t;
    const CVec rgrad = riemannian_project(euclidean_gradient_phi(qf, phi), phi);
    const double g2 = rgrad.squaredNorm();
    if (g2 == 0.0) {
      res.trace.push_back({t, f, 0.0});
      res.termination = PhaseTermination::Converged;
      break;
    }
    bool accepted = false;
    CVec next;
    double f_next = f;
    for (int b = 0; b <= ls.max_backtracks; ++b) {
      const CVec trial = phi - step * rgrad;
      bool singular = false;
      for (Eigen::Index m = 0; m < trial.size() && !singular; ++m) singular = trial(m) == Complex(0.0, 0.0);
      if (!singular) {
        next = retract(trial);
        f_next = objective(qf, next);
        if (f_next - f <= -ls.armijo_tau * step * g2) {
          accepted = true;
          break;
        }
      }
      step *= ls.shrink_factor;
    }
    if (!accepted) {
      res.trace.push_back({t, f, 0.0});
      res.termination = PhaseTermination::Stalled;
      break;
    }
    const double f_old = f;
    phi = next;
    f = f_next;
    res.trace.push_back({t, f, step});
    if (detail::relative_change_small(f_old, f, tol)) {
      res.termination = PhaseTermination::Converged;
      break;
    }
    step *= 2.0;
  }
  res.phi = phi;
  res.theta = detail::angles(phi);
  return res;
}

/// Successive minimisation of the quadratic upper model
/// f(theta_t) + g^T d + beta/2 |d|^2, i.e. theta - g / beta. beta is accepted
/// when the model upper-bounds f at the new point; it starts from the previous
/// accepted value, is halved while that holds and doubled while it fails.
inline PhaseResult sca_minimize(const QuadraticForm& qf, const RVec& theta0, const LineSearchConfig& ls = {},
                                double tol = 1e-5, int max_iter = 500) {
  ls.validate();
  detail::require_dims(theta0.size() == qf.c.size(), "sca_minimize: theta0 has wrong length");
  constexpr double kMaxBeta = 1e12;

  PhaseResult res;
  RVec theta = theta0.unaryExpr([](double t) { return PhaseState::wrap(t); });
  double f = objective_theta(qf, theta);
  res.trace.push_back({0, f, 0.0});
  double beta = 1.0 / ls.initial_step;
  res.termination = PhaseTermination::IterationCap;

  for (int t = 1; t <= max_iter; ++t) {
    res.iterations = t;
    const RVec g = sca_gradient_theta(qf, theta);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) {
      res.trace.push_back({t, f, 0.0});
      res.termination = PhaseTermination::Converged;
      break;
    }
    auto trial = [&](double b, RVec& th, double& fv) {
      th = theta - g / b;
      fv = objective_theta(qf, th);
      return fv <= f - g2 / (2.0 * b);
    };
    RVec th_ok, th_try;
    double f_ok = f, f_try = f;
    bool accepted = false;
    if (trial(beta, th_try, f_try)) {
      accepted = true;
      th_ok = th_try;
      f_ok = f_try;
      for (int n = 0; n < ls.max_backtracks && trial(beta * ls.shrink_factor, th_try, f_try); ++n) {
        beta *= ls.shrink_factor;
        th_ok = th_try;
        f_ok = f_try;
      }
    } else {
      while (beta <= kMaxBeta) {
        beta /= ls.shrink_factor;
        if (trial(beta, th_try, f_try)) {
          accepted = true;
          th_ok = th_try;
          f_ok = f_try;
          break;
        }
      }
    }
    if (!accepted) {
      res.trace.push_back({t, f, 0.0});
      res.termination = PhaseTermination::Stalled;
      beta = 1.0 / ls.initial_step;
      break;
    }
    const double f_old = f;
    theta = th_ok.unaryExpr([](double v) { return PhaseState::wrap(v); });
    f = f_ok;
    res.trace.push_back({t, f, 1.0 / beta});
    if (detail::relative_change_small(f_old, f, tol)) {
      res.termination = PhaseTermination::Converged;
      break;
    }
  }
  res.theta = theta;
  res.phi = PhaseState(theta).phi();
  return res;
}

namespace detail {

// Entrywise diag(A^H B).
inline CVec diag_adjoint_product(const CMat& a, const CMat& b) {
  return (a.conjugate().cwiseProduct(b)).colwise().sum().transpose();
}

}  // namespace detail

/// Xi and c of the phase subproblem for fixed decoders, weights and precoders.
///
/// Every receiver r (DL user, or a BS decoding its UL users) contributes
///   Tr(K_r Hbar S Hbar^H) over all transmitters, K_r = U^H W U, S = F F^H,
/// and -2 Re Tr(W U Hbar F) for its own stream. Expanding Hbar = H + G_r Phi G_t
/// gives Xi = sum (G_r^H K_r G_r) . (G_t S G_t^H)^T and the linear term c.
inline QuadraticForm build_quadratic_form(const ChannelSet& ch, const PrecoderSet& f, const AuxiliarySet& aux) {
  const Dimensions& d = ch.dims;
  const int L = d.cells;
  const int M = d.ris;
  QuadraticForm qf = QuadraticForm::zero(M);

  // Transmit-side covariances and their surface images.
  std::vector<CMat> s_bs(L, CMat::Zero(d.bs_tx, d.bs_tx));
  std::vector<std::vector<CMat>> s_ul(L, std::vector<CMat>(d.ul_users));
  std::vector<CMat> e_bs(L);
  std::vector<std::vector<CMat>> e_ul(L, std::vector<CMat>(d.ul_users));
  std::vector<CMat> gs_bs(L);  // G_t S, M x n_tx
  std::vector<std::vector<CMat>> gs_ul(L, std::vector<CMat>(d.ul_users));
  CMat e_total = CMat::Zero(M, M);
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < d.dl_users; ++i) s_bs[j].noalias() += f.dl[j][i] * f.dl[j][i].adjoint();
    gs_bs[j] = ch.ris_from_bs[j] * s_bs[j];
    e_bs[j] = gs_bs[j] * ch.ris_from_bs[j].adjoint();
    e_total += e_bs[j];
    for (int i = 0; i < d.ul_users; ++i) {
      s_ul[j][i] = f.ul[j][i] * f.ul[j][i].adjoint();
      gs_ul[j][i] = ch.ris_from_ul[j][i] * s_ul[j][i];
      e_ul[j][i] = gs_ul[j][i] * ch.ris_from_ul[j][i].adjoint();
      e_total += e_ul[j][i];
    }
  }

  CMat d_total = CMat::Zero(M, M);
  double offset = 0.0;

  // One receiver: accumulate its D, linear and constant parts. `direct_bs(j)`
  // and `direct_ul(j, i)` return the direct channel from each transmitter.
  auto receiver = [&](const CMat& k, const CMat& g_r, double noise, bool is_bs, int cell, auto&& direct_bs,
                      auto&& direct_ul) -> CMat {
    const CMat d_r = g_r.adjoint() * k * g_r;
    d_total += d_r;
    CMat y = CMat::Zero(k.rows(), M);  // sum_tx s H S G_t^H
    for (int j = 0; j < L; ++j) {
      const double s = (is_bs && j == cell) ? 1.0 / ch.sic : 1.0;
      if (d.dl_users > 0) {
        const CMat& h = direct_bs(j);
        y.noalias() += s * (h * gs_bs[j].adjoint());
        offset += s * (k * h * s_bs[j] * h.adjoint()).trace().real();
      }
      for (int i = 0; i < d.ul_users; ++i) {
        const CMat& h = direct_ul(j, i);
        y.noalias() += h * gs_ul[j][i].adjoint();
        offset += (k * h * s_ul[j][i] * h.adjoint()).trace().real();
      }
    }
    qf.c += detail::diag_adjoint_product(k * g_r, y);
    offset += noise * k.trace().real();
    return d_r;
  };

  // Own-stream part: -2 Re Tr(W U Hbar F) and + Tr(W).
  auto desired = [&](const CMat& u, const CMat& w, const CMat& g_r, const CMat& h, const CMat& g_t, const CMat& fk) {
    // c -= diag(G_r^H U^H W^H F^H G_t^H)
    qf.c -= detail::diag_adjoint_product(w * u * g_r, (g_t * fk).adjoint().eval());
    offset += -2.0 * (w * u * h * fk).trace().real() + w.trace().real();
  };

  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < d.dl_users; ++k) {
      const CMat& u = aux.u_dl[l][k];
      const CMat& w = aux.w_dl[l][k];
      const CMat kk = u.adjoint() * w * u;
      receiver(
          kk, ch.dl_from_ris[l][k], ch.noise_ue, false, l, [&](int j) -> const CMat& { return ch.dl_from_bs[l][k][j]; },
          [&](int j, int i) -> const CMat& { return ch.dl_from_ul[l][k][j][i]; });
      desired(u, w, ch.dl_from_ris[l][k], ch.dl_from_bs[l][k][l], ch.ris_from_bs[l], f.dl[l][k]);
    }
    if (d.ul_users > 0) {
      CMat kk = CMat::Zero(d.bs_rx, d.bs_rx);
      for (int k = 0; k < d.ul_users; ++k) kk += aux.u_ul[l][k].adjoint() * aux.w_ul[l][k] * aux.u_ul[l][k];
      const CMat d_bs = receiver(
          kk, ch.bs_from_ris[l], ch.noise_bs, true, l, [&](int j) -> const CMat& { return ch.bs_from_bs[l][j]; },
          [&](int j, int i) -> const CMat& { return ch.bs_from_ul[l][j][i]; });
      // Own-BS self-interference is attenuated by 1/sic.
      qf.Xi += (1.0 / ch.sic - 1.0) * d_bs.cwiseProduct(e_bs[l].transpose());
      for (int k = 0; k < d.ul_users; ++k)
        desired(aux.u_ul[l][k], aux.w_ul[l][k], ch.bs_from_ris[l], ch.bs_from_ul[l][l][k], ch.ris_from_ul[l][k],
                f.ul[l][k]);
    }
  }
  qf.Xi += d_total.cwiseProduct(e_total.transpose());
  qf.Xi = detail::hermitian_part(qf.Xi);
  qf.constant_offset = offset;
  return qf;
}

/// Sum_r Tr(W_r E_r) with U, W fixed and E_r evaluated at `phase`.
inline double weighted_mse_objective(const ChannelSet& ch, const PrecoderSet& f, const AuxiliarySet& aux,
                                     const PhaseState& phase) {
  const EquivalentChannels eq = equivalent_channels(ch, phase);
  const Dimensions& d = ch.dims;
  double total = 0.0;
  for (int l = 0; l < d.cells; ++l) {
    for (int k = 0; k < d.ul_users; ++k) {
      const CMat v = ul_interference_covariance(l, k, eq, f);
      const CMat e = mse_matrix(aux.u_ul[l][k], eq.bs_from_ul[l][l][k], f.ul[l][k], v);
      total += (aux.w_ul[l][k] * e).trace().real();
    }
    for (int k = 0; k < d.dl_users; ++k) {
      const CMat v = dl_interference_covariance(l, k, eq, f);
      const CMat e = mse_matrix(aux.u_dl[l][k], eq.dl_from_bs[l][k][l], f.dl[l][k], v);
      total += (aux.w_dl[l][k] * e).trace().real();
    }
  }
  return total;
}

}  // namespace fdris
