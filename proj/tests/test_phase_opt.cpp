#include <gtest/gtest.h>

#include "fdris/phase_opt.hpp"
#include "fdris/validation.hpp"
#include "oracles.hpp"

using namespace fdris;

namespace {

struct Instance {
  ChannelSet ch;
  PrecoderSet f;
  AuxiliarySet aux;
  QuadraticForm qf;
};

Instance random_instance(std::uint64_t seed, const Dimensions& d) {
  Rng rng(seed);
  Instance in;
  in.ch = oracle::random_channels(d, rng);
  in.f = oracle::precoders(d, rng);
  in.aux = update_auxiliary(equivalent_channels(in.ch, PhaseState::random(d.ris, rng)), in.f);
  in.qf = build_quadratic_form(in.ch, in.f, in.aux);
  return in;
}

Dimensions two_cell(int m) { return oracle::dims(2, 2, 2, 2, 3, 2, 2, m, 2, 1); }

QuadraticForm random_form(int m, Rng& rng) {
  const CMat x = oracle::gaussian(m, m, rng);
  return {x * x.adjoint(), oracle::gaussian(m, 1, rng), 0.0};
}

bool nonincreasing(const std::vector<TracePoint>& t) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i].f > t[i - 1].f) return false;
  return true;
}

}  // namespace

TEST(QuadraticForm, NoReflectionGivesZeroForm) {
  Instance in = random_instance(1, two_cell(4));
  in.ch = without_reflection(in.ch);
  const QuadraticForm qf = build_quadratic_form(in.ch, in.f, in.aux);
  EXPECT_EQ(qf.Xi.norm(), 0.0);
  EXPECT_EQ(qf.c.norm(), 0.0);
}

TEST(QuadraticForm, HermitianAndRealValued) {
  const Instance in = random_instance(2, two_cell(6));
  EXPECT_LT((in.qf.Xi - in.qf.Xi.adjoint()).norm(), 1e-10 * in.qf.Xi.norm());
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const CVec phi = oracle::unit_vector(6, rng);
    const Complex f = in.qf.c.dot(phi) + phi.dot(in.qf.c) + phi.dot(in.qf.Xi * phi);
    EXPECT_LT(std::abs(f.imag()), 1e-9);
    EXPECT_NEAR(f.real(), objective(in.qf, phi), 1e-9 * std::abs(f.real()));
  }
}

TEST(QuadraticForm, ScalarNetworkSingleElement) {
  const Dimensions d = oracle::dims(1, 1, 1, 1, 1, 1, 1, 1, 1, 1);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Instance in = random_instance(10 + s, d);
    Rng rng(20 + s);
    for (int i = 0; i < 5; ++i) {
      const CVec phi = oracle::unit_vector(1, rng);
      const double j = oracle::weighted_mse(in.ch, in.f, in.aux, phi);
      EXPECT_NEAR(objective(in.qf, phi) + in.qf.constant_offset, j, 1e-10 * std::abs(j));
    }
  }
}

TEST(QuadraticForm, OffsetCancellation) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = random_instance(30 + s, two_cell(5));
    Rng rng(40 + s);
    const CVec p1 = oracle::unit_vector(5, rng), p2 = oracle::unit_vector(5, rng);
    const double j1 = oracle::weighted_mse(in.ch, in.f, in.aux, p1), j2 = oracle::weighted_mse(in.ch, in.f, in.aux, p2);
    const double df = objective(in.qf, p1) - objective(in.qf, p2);
    EXPECT_LE(std::abs((j1 - j2) - df), 1e-8 * std::abs(j1));
    EXPECT_NEAR(objective(in.qf, p1) + in.qf.constant_offset, j1, 1e-8 * std::abs(j1));
  }
}

TEST(QuadraticForm, MatchesPrintedBlockEquations) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = random_instance(50 + s, two_cell(4));
    const CMat xi = oracle::paper_Xi(in.ch, in.f, in.aux);
    const CVec c = oracle::paper_C(in.ch, in.f, in.aux).diagonal();
    EXPECT_LT(oracle::rel(in.qf.Xi, xi), 1e-12);
    EXPECT_LT(oracle::rel(CMat(in.qf.c), CMat(c)), 1e-12);
  }
}

TEST(QuadraticForm, LibraryWeightedMseMatchesOracle) {
  const Instance in = random_instance(60, two_cell(3));
  Rng rng(61);
  const PhaseState p = PhaseState::random(3, rng);
  const double j = oracle::weighted_mse(in.ch, in.f, in.aux, p.phi());
  EXPECT_NEAR(weighted_mse_objective(in.ch, in.f, in.aux, p), j, 1e-12 * std::abs(j));
}

TEST(Gradient, Examples) {
  Rng rng(4);
  const CVec phi = oracle::unit_vector(3, rng);
  EXPECT_EQ(euclidean_gradient_phi(QuadraticForm::zero(3), phi).norm(), 0.0);
  const QuadraticForm id{CMat::Identity(3, 3), CVec::Zero(3), 0.0};
  EXPECT_LT((euclidean_gradient_phi(id, phi) - 2.0 * phi).norm(), 1e-15);
  EXPECT_EQ(sca_gradient_theta(QuadraticForm::zero(3), RVec::Ones(3)).norm(), 0.0);
}

TEST(Gradient, ScalarThetaDerivative) {
  // f = 2 cos(theta), f' = -2 sin(theta)
  const QuadraticForm qf{CMat::Zero(1, 1), CVec::Ones(1), 0.0};
  RVec th(1);
  th << kPi / 2;
  const RVec fd = oracle::fd_gradient_real([&](const RVec& t) { return objective_theta(qf, t); }, th);
  EXPECT_NEAR(sca_gradient_theta(qf, th)(0), fd(0), 1e-6);
  EXPECT_NEAR(sca_gradient_theta(qf, th)(0), -2.0, 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance in = random_instance(70 + s, two_cell(8));
    Rng rng(80 + s);
    const CVec phi = oracle::unit_vector(8, rng);
    const CVec g = euclidean_gradient_phi(in.qf, phi);
    const CVec fd = oracle::fd_gradient_complex([&](const CVec& x) { return oracle::quad(in.qf.Xi, in.qf.c, x); }, phi);
    EXPECT_LE((g - fd).norm(), 1e-5 * g.norm());

    const RVec th = PhaseState::random(8, rng).theta();
    const RVec gt = sca_gradient_theta(in.qf, th);
    const RVec fdt = oracle::fd_gradient_real(
        [&](const RVec& t) {
          CVec p(t.size());
          for (Eigen::Index m = 0; m < t.size(); ++m) p(m) = std::polar(1.0, t(m));
          return oracle::quad(in.qf.Xi, in.qf.c, p);
        },
        th);
    EXPECT_LE((gt - fdt).norm(), 1e-5 * gt.norm());
  }
}

TEST(Projection, TangentIdempotentRadialFree) {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const CVec phi = oracle::unit_vector(7, rng);
    const CVec eta = oracle::gaussian(7, 1, rng);
    const CVec z = riemannian_project(eta, phi);
    for (int m = 0; m < 7; ++m) EXPECT_LT(std::abs((z(m) * std::conj(phi(m))).real()), 1e-12);
    EXPECT_LE((riemannian_project(z, phi) - z).norm(), 1e-12);
    EXPECT_LE(riemannian_project(phi, phi).norm(), 1e-12);
    EXPECT_LE(riemannian_project(3.0 * phi, phi).norm(), 1e-12);
  }
}

TEST(Retract, Examples) {
  Rng rng(6);
  const CVec phi = oracle::unit_vector(4, rng);
  EXPECT_LT((retract(phi) - phi).norm(), 1e-15);
  CVec two(1);
  two << Complex(2.0, 0.0);
  EXPECT_EQ(retract(two)(0), Complex(1.0, 0.0));
  const CVec x = oracle::gaussian(10, 1, rng);
  const CVec r = retract(x);
  for (int m = 0; m < 10; ++m) {
    EXPECT_NEAR(std::abs(r(m)), 1.0, 1e-12);
    EXPECT_NEAR(std::remainder(std::arg(r(m)) - std::arg(x(m)), kTwoPi), 0.0, 1e-12);
  }
  CVec z = phi;
  z(2) = 0.0;
  EXPECT_THROW(retract(z), DomainError);
}

TEST(Ccm, ZeroFormReturnsStart) {
  Rng rng(7);
  const CVec phi0 = oracle::unit_vector(4, rng);
  const PhaseResult r = ccm_minimize(QuadraticForm::zero(4), phi0);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.termination, PhaseTermination::Converged);
  EXPECT_LT((r.phi - phi0).norm(), 1e-15);
}

TEST(Sca, ZeroFormReturnsStart) {
  const RVec th0 = RVec::LinSpaced(4, 0.1, 2.0);
  const PhaseResult r = sca_minimize(QuadraticForm::zero(4), th0);
  EXPECT_LT((r.theta - th0).norm(), 1e-15);
}

TEST(SingleElement, BothAlgorithmsFindBruteForceOptimum) {
  const QuadraticForm qf{CMat::Zero(1, 1), -CVec::Ones(1), 0.0};
  double best = std::numeric_limits<double>::infinity();
  CVec p(1);
  for (int i = 0; i < 3600; ++i) {
    p(0) = std::polar(1.0, kTwoPi * i / 3600);
    best = std::min(best, oracle::quad(qf.Xi, qf.c, p));
  }
  EXPECT_NEAR(best, -2.0, 1e-12);
  for (double t0 : {0.4, 2.0, 3.1, 5.5}) {
    CVec phi0(1);
    phi0 << std::polar(1.0, t0);
    const PhaseResult c = ccm_minimize(qf, phi0);
    const PhaseResult s = sca_minimize(qf, RVec::Constant(1, t0));
    EXPECT_NEAR(c.final_f(), best, 1e-4);
    EXPECT_NEAR(s.final_f(), best, 1e-4);
    EXPECT_NEAR(std::abs(c.phi(0) - 1.0), 0.0, 1e-2);
    EXPECT_NEAR(c.final_f(), s.final_f(), 1e-4);
  }
}

TEST(ThreeElements, ReachGridOptimum) {
  const ScenarioConfig cfg = small_scenario(3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ValidationInstance in = make_validation_instance(cfg, 900 + s);
    const QuadraticForm qf = build_quadratic_form(in.channels, in.precoders, in.aux);
    const double grid = oracle::grid_min3(qf.Xi, qf.c, 64);
    Rng rng(910 + s);
    const PhaseResult c = ccm_minimize(qf, oracle::unit_vector(3, rng));
    const PhaseResult r = sca_minimize(qf, PhaseState::random(3, rng).theta());
    EXPECT_LE(c.final_f(), grid + 1e-4);
    EXPECT_LE(r.final_f(), grid + 1e-3);
    EXPECT_NEAR(c.final_f(), r.final_f(), 1e-3);
  }
}

TEST(Minimizers, TracesNonincreasingAndUnitModulus) {
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const QuadraticForm qf = random_form(12, rng);
    const PhaseResult c = ccm_minimize(qf, oracle::unit_vector(12, rng));
    const PhaseResult s = sca_minimize(qf, PhaseState::random(12, rng).theta());
    EXPECT_TRUE(nonincreasing(c.trace));
    EXPECT_TRUE(nonincreasing(s.trace));
    for (int m = 0; m < 12; ++m) {
      EXPECT_NEAR(std::abs(c.phi(m)), 1.0, 1e-12);
      EXPECT_GE(s.theta(m), 0.0);
      EXPECT_LT(s.theta(m), kTwoPi);
    }
    EXPECT_NEAR(c.final_f(), oracle::quad(qf.Xi, qf.c, c.phi), 1e-9 * std::abs(c.final_f()) + 1e-12);
    EXPECT_NEAR(s.final_f(), oracle::quad(qf.Xi, qf.c, s.phi), 1e-9 * std::abs(s.final_f()) + 1e-12);
  }
}

TEST(Minimizers, IterationCapIsReported) {
  Rng rng(9);
  const QuadraticForm qf = random_form(10, rng);
  const PhaseResult c = ccm_minimize(qf, oracle::unit_vector(10, rng), {}, 1e-300, 3);
  EXPECT_EQ(c.iterations, 3);
  EXPECT_EQ(c.termination, PhaseTermination::IterationCap);
}

TEST(Minimizers, StalledLineSearch) {
  Rng rng(10);
  const QuadraticForm qf = random_form(5, rng);
  LineSearchConfig ls;
  ls.max_backtracks = 1;
  ls.initial_step = 1e6;
  const PhaseResult c = ccm_minimize(qf, oracle::unit_vector(5, rng), ls);
  EXPECT_EQ(c.termination, PhaseTermination::Stalled);
  EXPECT_TRUE(nonincreasing(c.trace));
  EXPECT_EQ(c.trace.back().step, 0.0);
}

TEST(Minimizers, InputValidation) {
  EXPECT_THROW(ccm_minimize(QuadraticForm::zero(2), CVec::Constant(2, 2.0)), DomainError);
  EXPECT_THROW(ccm_minimize(QuadraticForm::zero(2), CVec::Ones(3)), DimensionError);
  LineSearchConfig bad;
  bad.armijo_tau = 0.6;
  EXPECT_THROW(sca_minimize(QuadraticForm::zero(2), RVec::Zero(2), bad), ConfigError);
}
