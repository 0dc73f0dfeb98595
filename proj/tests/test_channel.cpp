#include <gtest/gtest.h>

#include <cmath>

#include "fdris/channel.hpp"
#include "fdris/scenario.hpp"

using namespace fdris;

namespace {

const Point3 kUserCenter{300.0, 50.0, 1.5};

}  // namespace

TEST(PathLoss, ReferenceDistanceGivesReferenceLoss) {
  EXPECT_DOUBLE_EQ(path_loss_db(1.0, 3.75, -30.0), -30.0);
  EXPECT_DOUBLE_EQ(path_loss_db(1.0, 0.7, -30.0), -30.0);
}

TEST(PathLoss, ZeroExponentIsFlat) { EXPECT_DOUBLE_EQ(path_loss_db(500.0, 0.0, -30.0), -30.0); }

TEST(PathLoss, DirectLinkAnchor) {
  const double d = distance({0, 0, 30}, kUserCenter);
  EXPECT_NEAR(path_loss_db(d, 3.75, -30.0), -123.19, 0.01);
}

TEST(PathLoss, ReflectedAnchors) {
  const Point3 bs{0, 0, 30}, ris{350, 0, 15};
  const double d_br = distance(bs, ris), d_ru = distance(ris, kUserCenter);
  EXPECT_NEAR(reflected_path_loss_db(d_br, d_ru, 2.2, -30.0), -156.84, 0.01);
  EXPECT_NEAR(reflected_path_loss_db(d_br, d_ru, 2.8, -30.0), -183.25, 0.01);
}

TEST(PathLoss, ReflectedUnitDistancesGiveTwiceReference) {
  EXPECT_DOUBLE_EQ(reflected_path_loss_db(1.0, 1.0, 2.2, -30.0), -60.0);
}

TEST(PathLoss, ReflectedMatchesProductDistanceLaw) {
  for (double a : {2.0, 2.2, 3.1})
    for (double d1 : {3.0, 120.0})
      for (double d2 : {7.0, 400.0})
        EXPECT_NEAR(reflected_path_loss_db(d1, d2, a, -30.0), -60.0 - 10.0 * a * std::log10(d1 * d2), 1e-10);
}

TEST(PathLoss, RejectsNonPositiveDistance) {
  EXPECT_THROW(path_loss_db(0.0, 2.0, -30.0), DomainError);
  EXPECT_THROW(path_loss_db(-1.0, 2.0, -30.0), DomainError);
  EXPECT_THROW(reflected_path_loss_db(0.0, 5.0, 2.0, -30.0), DomainError);
}

TEST(SteeringVector, BroadsideIsAllOnes) {
  const CVec a = steering_vector(0.0, 5, 0.5);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a(i), Complex(1.0, 0.0));
}

TEST(SteeringVector, SingleElement) {
  const CVec a = steering_vector(1.234, 1, 0.5);
  ASSERT_EQ(a.size(), 1);
  EXPECT_EQ(a(0), Complex(1.0, 0.0));
}

TEST(SteeringVector, EndfireHalfWavelength) {
  const CVec a = steering_vector(kPi / 2, 2, 0.5);
  EXPECT_NEAR(std::abs(a(1) - Complex(-1.0, 0.0)), 0.0, 1e-12);
}

TEST(SteeringVector, ElementFormula) {
  const double ang = 0.7, sp = 0.37;
  const CVec a = steering_vector(ang, 6, sp);
  for (int i = 0; i < 6; ++i) {
    const Complex want = std::exp(Complex(0.0, kTwoPi * sp * i * std::sin(ang)));
    EXPECT_NEAR(std::abs(a(i) - want), 0.0, 1e-12);
  }
}

TEST(SteeringVector, RejectsEmptyArray) { EXPECT_THROW(steering_vector(0.1, 0, 0.5), DomainError); }

TEST(Rician, ZeroFactorIsPureScattering) {
  Rng rng(3);
  const CMat los = detail::complex_gaussian(2, 3, rng), nlos = detail::complex_gaussian(2, 3, rng);
  EXPECT_EQ(rician_channel(0.0, los, nlos), nlos);
}

TEST(Rician, LargeFactorApproachesLineOfSight) {
  Rng rng(4);
  const CMat ones = CMat::Ones(3, 2);
  const CMat h = rician_channel(1e12, ones, detail::complex_gaussian(3, 2, rng));
  EXPECT_LT((h - ones).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Rician, CommonFactor) {
  Rng rng(5);
  const CMat a = detail::complex_gaussian(2, 2, rng);
  const CMat h = rician_channel(3.0, a, a);
  EXPECT_LT((h - a * (std::sqrt(0.75) + std::sqrt(0.25))).norm(), 1e-12);
}

TEST(Rician, DimensionMismatch) {
  EXPECT_THROW(rician_channel(1.0, CMat::Zero(2, 2), CMat::Zero(2, 3)), DimensionError);
  EXPECT_THROW(rician_channel(-1.0, CMat::Zero(2, 2), CMat::Zero(2, 2)), DomainError);
}

TEST(Scenario, DefaultsAreValidAndNoiseMatchesDensity) {
  ScenarioConfig c;
  EXPECT_NO_THROW(c.validate());
  // -174 dBm/Hz over 10 MHz is -104 dBm
  EXPECT_NEAR(10.0 * std::log10(c.noise_power_watt()) + 30.0, -104.0, 1e-9);
  EXPECT_NEAR(c.sic_linear(), 1e9, 1e-3);
}

TEST(Scenario, ValidationRejectsBadFields) {
  auto bad = [](auto mutate) {
    ScenarioConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](ScenarioConfig& c) { c.num_cells = 0; });
  bad([](ScenarioConfig& c) { c.ris_elements = 0; });
  bad([](ScenarioConfig& c) { c.streams_dl = 3; });
  bad([](ScenarioConfig& c) { c.streams_ul = 3; });
  bad([](ScenarioConfig& c) { c.power_bs_watt = 0.0; });
  bad([](ScenarioConfig& c) { c.sic_db = -1.0; });
  bad([](ScenarioConfig& c) { c.user_region_radius = 0.0; });
  bad([](ScenarioConfig& c) { c.alpha_r = 0.0; });
  bad([](ScenarioConfig& c) { c.bs_positions.pop_back(); });
  bad([](ScenarioConfig& c) { c.users_per_cell_dl = c.users_per_cell_ul = 0; });
}

TEST(Scenario, JsonRoundTrip) {
  ScenarioConfig c;
  c.ris_elements = 37;
  c.sic_db = 123.5;
  c.direct_links_enabled = false;
  const nlohmann::json j = c;
  const ScenarioConfig back = scenario_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Scenario, JsonRejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"ris_elemnts", 3}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json{{"ris_elements", "many"}}), ConfigError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::array()), ConfigError);
}

TEST(Scenario, OverrideDottedKey) {
  const ScenarioConfig c = apply_override(ScenarioConfig{}, "ris_position.0", "200");
  EXPECT_DOUBLE_EQ(c.ris_position[0], 200.0);
  EXPECT_DOUBLE_EQ(apply_override(c, "sic_db", "120").sic_db, 120.0);
  EXPECT_THROW(apply_override(c, "no_such_key", "1"), ConfigError);
  EXPECT_THROW(apply_override(c, "ris_elements", "0"), ConfigError);
}

TEST(Geometry, UserDisksFaceTheSurface) {
  ScenarioConfig c;
  const Point3 a = user_disk_center(c, 0, true), b = user_disk_center(c, 1, true), e = user_disk_center(c, 0, false);
  EXPECT_DOUBLE_EQ(a[0], 300.0);
  EXPECT_DOUBLE_EQ(b[0], 400.0);
  EXPECT_DOUBLE_EQ(a[1], 50.0);
  EXPECT_DOUBLE_EQ(e[1], -50.0);
  EXPECT_DOUBLE_EQ(a[2], 1.5);
}

TEST(Realization, DeterministicForSeed) {
  ScenarioConfig c;
  c.ris_elements = 12;
  const ChannelSet a = generate_realization(c, 42), b = generate_realization(c, 42), z = generate_realization(c, 43);
  EXPECT_EQ(a.bs_from_ris[1], b.bs_from_ris[1]);
  EXPECT_EQ(a.dl_from_ul[0][1][1][0], b.dl_from_ul[0][1][1][0]);
  EXPECT_EQ(a.ul_positions, b.ul_positions);
  EXPECT_NE(a.bs_from_ris[1], z.bs_from_ris[1]);
}

TEST(Realization, ShapesAndFiniteness) {
  ScenarioConfig c;
  c.ris_elements = 9;
  c.users_per_cell_dl = 3;
  c.users_per_cell_ul = 1;
  c.num_cells = 3;
  c.bs_positions.push_back({350.0, 600.0, 30.0});
  const ChannelSet ch = generate_realization(c, 1);
  EXPECT_TRUE(ch.well_formed());
  EXPECT_EQ(ch.dl_from_bs[2][2][0].rows(), c.ue_rx_antennas);
  EXPECT_EQ(ch.dl_from_bs[2][2][0].cols(), c.bs_tx_antennas);
  EXPECT_EQ(ch.bs_from_ris[0].rows(), c.bs_rx_antennas);
  EXPECT_EQ(ch.bs_from_ris[0].cols(), 9);
  EXPECT_EQ(ch.ris_from_ul[2][0].rows(), 9);
  EXPECT_EQ(ch.ris_from_ul[2][0].cols(), c.ue_tx_antennas);
  EXPECT_EQ(ch.dl_from_ul[1][2][2][0].rows(), c.ue_rx_antennas);
}

TEST(Realization, UsersInsideTheirDisks) {
  ScenarioConfig c;
  c.ris_elements = 2;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const ChannelSet ch = generate_realization(c, s);
    for (int l = 0; l < 2; ++l)
      for (int k = 0; k < 2; ++k) {
        const Point3 cu = user_disk_center(c, l, true), cd = user_disk_center(c, l, false);
        EXPECT_LE(std::hypot(ch.ul_positions[l][k][0] - cu[0], ch.ul_positions[l][k][1] - cu[1]), 20.0 + 1e-9);
        EXPECT_LE(std::hypot(ch.dl_positions[l][k][0] - cd[0], ch.dl_positions[l][k][1] - cd[1]), 20.0 + 1e-9);
        EXPECT_DOUBLE_EQ(ch.ul_positions[l][k][2], 1.5);
      }
  }
}

TEST(Realization, BlockageZeroesDirectBsUserLinks) {
  ScenarioConfig c;
  c.ris_elements = 5;
  c.direct_links_enabled = false;
  const ChannelSet ch = generate_realization(c, 8);
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) {
        EXPECT_EQ(ch.dl_from_bs[l][k][j].norm(), 0.0);
        EXPECT_EQ(ch.bs_from_ul[j][l][k].norm(), 0.0);
      }
  // surface links unaffected by the flag
  ScenarioConfig open = c;
  open.direct_links_enabled = true;
  EXPECT_EQ(generate_realization(open, 8).dl_from_ris[1][0], ch.dl_from_ris[1][0]);
  EXPECT_GT(ch.bs_from_bs[0][0].norm(), 0.0);
}

TEST(Realization, NoisePowerAndSic) {
  ScenarioConfig c;
  c.ris_elements = 3;
  c.sic_db = 100.0;
  const ChannelSet ch = generate_realization(c, 2);
  EXPECT_DOUBLE_EQ(ch.noise_bs, c.noise_power_watt());
  EXPECT_DOUBLE_EQ(ch.noise_ue, c.noise_power_watt());
  EXPECT_NEAR(ch.sic, 1e10, 1e-2);
  EXPECT_DOUBLE_EQ(ch.bs_link_scale(1, 1), 1.0 / ch.sic);
  EXPECT_DOUBLE_EQ(ch.bs_link_scale(0, 1), 1.0);
}

TEST(Realization, RayleighFadingHasUnitVariance) {
  ScenarioConfig c;
  c.ris_elements = 1;
  double acc = 0.0;
  long n = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const ChannelSet ch = generate_realization(c, s);
    for (int l = 0; l < 2; ++l)
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) {
          const double pl = path_loss_db(distance(ch.dl_positions[l][k], c.bs_positions[j]), c.alpha_bu, c.pathloss_ref_db);
          const CMat small = ch.dl_from_bs[l][k][j] / db_to_amplitude(pl);
          acc += small.squaredNorm();
          n += small.size();
        }
  }
  EXPECT_NEAR(acc / n, 1.0, 0.05);
}

TEST(Realization, SelfInterferenceUsesItsOwnLoss) {
  ScenarioConfig c;
  c.ris_elements = 1;
  c.si_pathloss_db = -40.0;
  double acc = 0.0;
  for (std::uint64_t s = 0; s < 400; ++s) acc += generate_realization(c, s).bs_from_bs[0][0].squaredNorm();
  // Rician with unit-modulus LoS and unit-variance NLoS: E|h|^2 = 1 per entry
  EXPECT_NEAR(acc / 400.0 / (c.bs_rx_antennas * c.bs_tx_antennas), 1e-4, 1e-5);
}

TEST(Realization, WithoutReflectionAndRestriction) {
  ScenarioConfig c;
  c.ris_elements = 4;
  const ChannelSet ch = generate_realization(c, 9);
  const ChannelSet nr = without_reflection(ch);
  EXPECT_EQ(nr.bs_from_ris[0].norm(), 0.0);
  EXPECT_EQ(nr.ris_from_ul[1][1].norm(), 0.0);
  EXPECT_EQ(nr.dl_from_bs[0][0][0], ch.dl_from_bs[0][0][0]);

  const ChannelSet ul = restrict_direction(ch, true), dl = restrict_direction(ch, false);
  EXPECT_EQ(ul.dims.dl_users, 0);
  EXPECT_EQ(ul.dims.ul_users, 2);
  EXPECT_EQ(dl.dims.ul_users, 0);
  EXPECT_TRUE(ul.well_formed());
  EXPECT_TRUE(dl.well_formed());
}
