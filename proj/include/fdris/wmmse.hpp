#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "fdris/network.hpp"
#include "fdris/types.hpp"

namespace fdris {

/// MMSE decoders, weights and MSE matrices of every user, indexed [l][k].
struct AuxiliarySet {
  std::vector<std::vector<CMat>> u_ul, u_dl;
  std::vector<std::vector<CMat>> w_ul, w_dl;
  std::vector<std::vector<CMat>> e_ul, e_dl;
};

/// Outcome of one multiplier search.
struct MultiplierSolve {
  double lambda = 0.0;
  double power_at_lambda = 0.0;
  double budget = 0.0;
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;

  /// |lambda * (power - budget)| / budget
  double slackness() const { return budget > 0.0 ? std::abs(lambda * (power_at_lambda - budget)) / budget : 0.0; }
};

/// (U H F - I)(U H F - I)^H + U V U^H
inline CMat mse_matrix(const CMat& u, const CMat& h, const CMat& f, const CMat& v) {
  detail::require_dims(u.cols() == h.rows() && h.cols() == f.rows() && u.rows() == f.cols(),
                       "mse_matrix: U, H, F not conformable");
  detail::require_dims(v.rows() == h.rows() && v.cols() == h.rows(), "mse_matrix: V has wrong size");
  const CMat err = u * h * f - CMat::Identity(u.rows(), u.rows());
  return detail::hermitian_part(err * err.adjoint() + u * v * u.adjoint());
}

/// Wiener receive filter F^H H^H (H F F^H H^H + V)^{-1}.
inline CMat mmse_decoder(const CMat& h, const CMat& f, const CMat& v) {
  detail::require_dims(h.cols() == f.rows() && v.rows() == h.rows() && v.cols() == h.rows(),
                       "mmse_decoder: operands not conformable");
  const CMat hf = h * f;
  const CMat r = detail::hermitian_part(hf * hf.adjoint() + v);
  Eigen::LLT<CMat> llt(r);
  if (llt.info() != Eigen::Success) throw DomainError("mmse_decoder: singular receive covariance");
  // U = (R^{-1} H F)^H since R is Hermitian
  return llt.solve(hf).adjoint();
}

/// W = E^{-1}, symmetrized.
inline CMat weight_update(const CMat& e) {
  Eigen::LLT<CMat> llt(detail::hermitian_part(e));
  if (llt.info() != Eigen::Success) throw DomainError("weight_update: MSE matrix is singular (degenerate stream)");
  const CMat w = llt.solve(CMat::Identity(e.rows(), e.cols()));
  return detail::hermitian_part(w);
}

/// log2 det(W) - (Tr(W E) - b) log2(e), the bit-valued weighted-MSE rate.
inline double surrogate_rate(const CMat& w, const CMat& e, int streams) {
  double logdet;
  try {
    logdet = detail::log2_det_hpd(w);
  } catch (const DomainError&) {
    throw DomainError("surrogate_rate: weight matrix is not positive definite");
  }
  const double tr = (w * e).trace().real();
  return logdet - (tr - streams) * kLog2E;
}

/// Joint decoder/weight update for every user at the current (F, Phi).
inline AuxiliarySet update_auxiliary(const EquivalentChannels& eq, const PrecoderSet& f) {
  const Dimensions& d = eq.dims;
  AuxiliarySet aux;
  auto alloc = [&](std::vector<std::vector<CMat>>& x, int users) { x.assign(d.cells, std::vector<CMat>(users)); };
  alloc(aux.u_ul, d.ul_users);
  alloc(aux.w_ul, d.ul_users);
  alloc(aux.e_ul, d.ul_users);
  alloc(aux.u_dl, d.dl_users);
  alloc(aux.w_dl, d.dl_users);
  alloc(aux.e_dl, d.dl_users);
  for (int l = 0; l < d.cells; ++l) {
    for (int k = 0; k < d.ul_users; ++k) {
      const CMat v = ul_interference_covariance(l, k, eq, f);
      const CMat& h = eq.bs_from_ul[l][l][k];
      aux.u_ul[l][k] = mmse_decoder(h, f.ul[l][k], v);
      aux.e_ul[l][k] = mse_matrix(aux.u_ul[l][k], h, f.ul[l][k], v);
      aux.w_ul[l][k] = weight_update(aux.e_ul[l][k]);
    }
    for (int k = 0; k < d.dl_users; ++k) {
      const CMat v = dl_interference_covariance(l, k, eq, f);
      const CMat& h = eq.dl_from_bs[l][k][l];
      aux.u_dl[l][k] = mmse_decoder(h, f.dl[l][k], v);
      aux.e_dl[l][k] = mse_matrix(aux.u_dl[l][k], h, f.dl[l][k], v);
      aux.w_dl[l][k] = weight_update(aux.e_dl[l][k]);
    }
  }
  return aux;
}

/// Quadratic precoder-subproblem matrices: cell[l] for each BS, ul[l][k] for each UL user.
struct TransmitQuadratics {
  std::vector<CMat> cell;
  std::vector<std::vector<CMat>> ul;
};

inline TransmitQuadratics build_A_matrices(const EquivalentChannels& eq, const AuxiliarySet& aux) {
  const Dimensions& d = eq.dims;
  const int L = d.cells;
  // K = U^H W U per receiver; UL decoders at one BS share the receive array.
  std::vector<std::vector<CMat>> k_dl(L, std::vector<CMat>(d.dl_users));
  std::vector<CMat> k_bs(L, CMat::Zero(d.bs_rx, d.bs_rx));
  for (int j = 0; j < L; ++j) {
    for (int i = 0; i < d.dl_users; ++i) k_dl[j][i] = aux.u_dl[j][i].adjoint() * aux.w_dl[j][i] * aux.u_dl[j][i];
    for (int i = 0; i < d.ul_users; ++i) k_bs[j] += aux.u_ul[j][i].adjoint() * aux.w_ul[j][i] * aux.u_ul[j][i];
  }

  TransmitQuadratics a;
  a.cell.assign(L, CMat::Zero(d.bs_tx, d.bs_tx));
  a.ul.assign(L, std::vector<CMat>(d.ul_users, CMat::Zero(d.ue_tx, d.ue_tx)));
  for (int l = 0; l < L; ++l) {
    if (d.dl_users > 0) {
      CMat& acc = a.cell[l];
      for (int j = 0; j < L; ++j) {
        for (int i = 0; i < d.dl_users; ++i) {
          const CMat& h = eq.dl_from_bs[j][i][l];
          acc.noalias() += h.adjoint() * k_dl[j][i] * h;
        }
        if (d.ul_users > 0) {
          const CMat& h = eq.bs_from_bs[j][l];
          acc.noalias() += eq.bs_link_scale(j, l) * (h.adjoint() * k_bs[j] * h);
        }
      }
      acc = detail::hermitian_part(acc);
    }
    for (int k = 0; k < d.ul_users; ++k) {
      CMat& acc = a.ul[l][k];
      for (int j = 0; j < L; ++j) {
        for (int i = 0; i < d.dl_users; ++i) {
          const CMat& h = eq.dl_from_ul[j][i][l][k];
          acc.noalias() += h.adjoint() * k_dl[j][i] * h;
        }
        const CMat& h = eq.bs_from_ul[j][l][k];
        acc.noalias() += h.adjoint() * k_bs[j] * h;
      }
      acc = detail::hermitian_part(acc);
    }
  }
  return a;
}

/// Right-hand side H^H U^H W of the stationarity condition.
inline CMat precoder_rhs(const CMat& h, const CMat& u, const CMat& w) { return h.adjoint() * u.adjoint() * w; }

/// (A + lambda I)^{-1} H^H U^H W. Throws DomainError when A + lambda I is
/// singular (lambda = 0 with rank-deficient A); callers then bisect on lambda > 0.
inline CMat precoder_from_multiplier(const CMat& a, double lambda, const CMat& h, const CMat& u, const CMat& w) {
  detail::require_dims(a.rows() == a.cols() && a.rows() == h.cols(), "precoder_from_multiplier: A has wrong size");
  if (lambda < 0.0) throw DomainError("precoder_from_multiplier: negative multiplier");
  const CMat shifted = detail::hermitian_part(a) + lambda * CMat::Identity(a.rows(), a.cols());
  Eigen::LDLT<CMat> ldlt(shifted);
  const double scale = std::max(shifted.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * scale)
    throw DomainError("precoder_from_multiplier: A + lambda I is singular");
  return ldlt.solve(precoder_rhs(h, u, w));
}

/// Sum_i z_i / (lambda_i + lambda)^2. Terms with z_i = 0 contribute nothing;
/// z_i > 0 over a zero denominator gives +inf.
inline double power_of_multiplier(const RVec& z, const RVec& eigenvalues, double lambda) {
  detail::require_dims(z.size() == eigenvalues.size(), "power_of_multiplier: size mismatch");
  double p = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (eigenvalues(i) < -1e-9) throw DomainError("power_of_multiplier: negative eigenvalue (A must be PSD)");
    if (z(i) < 0.0) throw DomainError("power_of_multiplier: negative diagonal of Z");
    if (z(i) == 0.0) continue;
    const double den = std::max(eigenvalues(i), 0.0) + lambda;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    p += z(i) / (den * den);
  }
  return p;
}

struct BisectionOptions {
  double power_tol = 1e-7;     ///< relative power tolerance, also bounds |lambda (p - P)| / P
  double bracket_tol = 1e-12;  ///< bracket floor, relative to the initial upper bound
  int max_expansions = 200;
};

/// Root of power_fn(lambda) = budget for a decreasing power_fn, or lambda = 0
/// when the constraint is inactive. On exit either lambda = 0 with power <= budget
/// or |power - budget| max(1, lambda) <= power_tol * budget, unless the bracket
/// collapses first (then the feasible end is returned).
inline MultiplierSolve bisection_solve(const std::function<double(double)>& power_fn, double budget,
                                       double lo, double hi, const BisectionOptions& opt = {}) {
  if (!(budget > 0.0)) throw DomainError("bisection_solve: budget must be positive");
  if (lo < 0.0 || !(hi > lo)) throw DomainError("bisection_solve: invalid bracket");
  MultiplierSolve out;
  out.budget = budget;
  const double p0 = power_fn(0.0);
  if (p0 <= budget) {
    out.lambda = 0.0;
    out.power_at_lambda = p0;
    out.bracket_hi = hi;
    return out;
  }
  double p_hi = power_fn(hi);
  for (int n = 0; p_hi > budget; ++n) {
    if (n >= opt.max_expansions) throw DomainError("bisection_solve: bracket does not enclose a root");
    lo = hi;
    hi *= 2.0;
    p_hi = power_fn(hi);
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  const double floor = opt.bracket_tol * hi;
  double best = hi, best_p = p_hi;
  while (hi - lo > floor) {
    const double mid = 0.5 * (lo + hi);
    const double p = power_fn(mid);
    ++out.iterations;
    if (std::abs(p - budget) * std::max(1.0, mid) <= opt.power_tol * budget) {
      best = mid;
      best_p = p;
      break;
    }
    if (p > budget) {
      lo = mid;
    } else {
      hi = mid;
      best = hi;
      best_p = p;
    }
  }
  out.lambda = best;
  out.power_at_lambda = best_p;
  return out;
}

/// One power-constrained group: minimise Sum_k Tr(F_k^H A F_k) - 2 Re Tr(...) s.t. Sum_k ||F_k||^2 <= budget.
/// `rhs[k]` is H_k^H U_k^H W_k. Returns the precoders and the multiplier search.
inline std::pair<std::vector<CMat>, MultiplierSolve> solve_power_group(const CMat& a, const std::vector<CMat>& rhs,
                                                                       double budget, const BisectionOptions& opt = {}) {
  Eigen::SelfAdjointEigenSolver<CMat> es(detail::hermitian_part(a));
  if (es.info() != Eigen::Success) throw DomainError("solve_power_group: eigendecomposition failed");
  RVec lam = es.eigenvalues();
  const CMat& q = es.eigenvectors();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-9 * scale) throw DomainError("solve_power_group: A is not positive semidefinite");
    if (lam(i) < 1e-14 * scale) lam(i) = 0.0;
  }
  std::vector<CMat> qb(rhs.size());
  RVec z = RVec::Zero(lam.size());
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    qb[k] = q.adjoint() * rhs[k];
    z += qb[k].rowwise().squaredNorm();
  }
  // Directions in the null space of A that the right-hand side does not
  // excite (up to round-off) are dropped.
  const double zsum = z.sum();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (lam(i) == 0.0 && z(i) <= 1e-24 * zsum) z(i) = 0.0;

  auto power = [&](double lambda) { return power_of_multiplier(z, lam, lambda); };
  MultiplierSolve ms;
  if (zsum == 0.0) {
    ms.budget = budget;
  } else {
    const double upper = std::sqrt(zsum / budget);
    ms = bisection_solve(power, budget, 0.0, upper, opt);
  }

  std::vector<CMat> f(rhs.size());
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    CMat scaled = qb[k];
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      const double den = lam(i) + ms.lambda;
      if (z(i) == 0.0 || den <= 0.0)
        scaled.row(i).setZero();
      else
        scaled.row(i) /= den;
    }
    f[k] = q * scaled;
  }
  return {std::move(f), ms};
}

struct PrecoderUpdate {
  PrecoderSet precoders;
  std::vector<MultiplierSolve> solves;  ///< one per cell, then one per UL user
};

/// Per-cell DL multiplier shared by the cell's DL precoders; one multiplier per UL user.
inline PrecoderUpdate update_all_precoders(const EquivalentChannels& eq, const AuxiliarySet& aux, double power_bs,
                                           double power_ue, const BisectionOptions& opt = {}) {
  const Dimensions& d = eq.dims;
  const TransmitQuadratics a = build_A_matrices(eq, aux);
  PrecoderUpdate out;
  out.precoders = PrecoderSet::zeros(d);
  for (int l = 0; l < d.cells; ++l) {
    if (d.dl_users == 0) continue;
    std::vector<CMat> rhs(d.dl_users);
    for (int k = 0; k < d.dl_users; ++k) rhs[k] = precoder_rhs(eq.dl_from_bs[l][k][l], aux.u_dl[l][k], aux.w_dl[l][k]);
    auto [f, ms] = solve_power_group(a.cell[l], rhs, power_bs, opt);
    out.precoders.dl[l] = std::move(f);
    out.solves.push_back(ms);
  }
  for (int l = 0; l < d.cells; ++l)
    for (int k = 0; k < d.ul_users; ++k) {
      std::vector<CMat> rhs{precoder_rhs(eq.bs_from_ul[l][l][k], aux.u_ul[l][k], aux.w_ul[l][k])};
      auto [f, ms] = solve_power_group(a.ul[l][k], rhs, power_ue, opt);
      out.precoders.ul[l][k] = std::move(f.front());
      out.solves.push_back(ms);
    }
  return out;
}

/// Precoder-subproblem objective Sum Tr(F^H A F) - 2 Re Tr(W U H F).
inline double precoder_objective(const EquivalentChannels& eq, const AuxiliarySet& aux, const TransmitQuadratics& a,
                                 const PrecoderSet& f) {
  const Dimensions& d = eq.dims;
  double obj = 0.0;
  for (int l = 0; l < d.cells; ++l) {
    for (int k = 0; k < d.dl_users; ++k) {
      const CMat& fk = f.dl[l][k];
      obj += (fk.adjoint() * a.cell[l] * fk).trace().real();
      obj -= 2.0 * (aux.w_dl[l][k] * aux.u_dl[l][k] * eq.dl_from_bs[l][k][l] * fk).trace().real();
    }
    for (int k = 0; k < d.ul_users; ++k) {
      const CMat& fk = f.ul[l][k];
      obj += (fk.adjoint() * a.ul[l][k] * fk).trace().real();
      obj -= 2.0 * (aux.w_ul[l][k] * aux.u_ul[l][k] * eq.bs_from_ul[l][l][k] * fk).trace().real();
    }
  }
  return obj;
}

/// Sum of surrogate_rate over all users.
inline double total_surrogate_rate(const AuxiliarySet& aux, const Dimensions& d) {
  double s = 0.0;
  for (int l = 0; l < d.cells; ++l) {
    for (int k = 0; k < d.ul_users; ++k) s += surrogate_rate(aux.w_ul[l][k], aux.e_ul[l][k], d.ul_streams);
    for (int k = 0; k < d.dl_users; ++k) s += surrogate_rate(aux.w_dl[l][k], aux.e_dl[l][k], d.dl_streams);
  }
  return s;
}

}  // namespace fdris
