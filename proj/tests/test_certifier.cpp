#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mgsos/certifier.hpp"
#include "mgsos/error.hpp"
#include "mgsos/simulator.hpp"
#include "support.hpp"

using namespace mgsos;
using mgsos::testing::single_bus;
using mgsos::testing::three_bus;
using mgsos::testing::three_bus_suggested;
using mgsos::testing::corpus;
using mgsos::testing::degrees;

TEST(Certifier, StableScalarCertified) {
  const CertifyReport r = assess(single_bus(1.0), degrees(2, 2, 2, 2, 2));
  ASSERT_EQ(r.zeta, 1) << r.note;
  ASSERT_TRUE(r.certificate);
  // V = c·δ² with c > 0.
  ASSERT_EQ(r.V.terms().size(), 1u);
  const auto& [m, c] = *r.V.terms().begin();
  EXPECT_EQ(m.degree(), 2u);
  EXPECT_GT(c, 0.0);
}

TEST(Certifier, UnstableScalarNeverCertified) {
  for (const auto& cfg : {degrees(2, 2, 2, 2, 2), degrees(4, 2, 2, 4, 5), degrees(6, 2, 2, 2, 2)}) {
    CertifierConfig c = cfg;
    EXPECT_EQ(assess(single_bus(-1.0), c).zeta, 0);
    c.jacobian_prescreen = false;
    const CertifyReport r = assess(single_bus(-1.0), c);
    EXPECT_EQ(r.zeta, 0);
    EXPECT_TRUE(r.solved);
  }
}

TEST(Certifier, PrescreenSkipsSolve) {
  const CertifyReport r = assess(three_bus(), CertifierConfig{});
  EXPECT_EQ(r.zeta, 0);
  EXPECT_FALSE(r.solved);
  EXPECT_GT(r.jacobian_max_real, 0.0);
  EXPECT_GT(r.problem_stats.num_blocks, 0);
}

TEST(Certifier, DegreeValidation) {
  EXPECT_THROW(assess(single_bus(1.0), degrees(3, 2, 2, 4, 5)), ConfigError);
  EXPECT_THROW(assess(single_bus(1.0), degrees(0, 2, 2, 4, 5)), ConfigError);
  EXPECT_THROW(assess(single_bus(1.0), degrees(4, 1, 2, 4, 5)), ConfigError);
  EXPECT_THROW(assess(single_bus(1.0), degrees(4, 2, 3, 4, 5)), ConfigError);
  EXPECT_EQ(degrees(4, 2, 2, 4, 5).sigma2_degree(), 6);
  EXPECT_EQ(degrees(4, 2, 2, 3, 5).sigma1_degree(), 4);
}

TEST(Certifier, ProblemShapeForThreeBus) {
  CertifierConfig cfg;
  cfg.sdp.max_iters = 0;
  const CertifyReport r = assess(three_bus_suggested(), cfg);
  // V block, the derivative condition, then s1/s2 per edge.
  ASSERT_EQ(r.problem_stats.num_blocks, 2 + 2 * 3);
  EXPECT_EQ(r.problem_stats.gram_sizes[0], 10);   // degree ≤ 2 in 3 variables
  EXPECT_EQ(r.problem_stats.gram_sizes[1], 210);  // degree ≤ 4 in 6 variables
  EXPECT_EQ(r.problem_stats.gram_sizes[2], 7);    // s1 over (δ, φ), degree 2
  EXPECT_EQ(r.problem_stats.gram_sizes[3], 4);    // s2 over δ, degree 2
  EXPECT_EQ(r.domain.size(), 3u);
}

TEST(Certifier, Deterministic) {
  const auto a = to_json(assess(single_bus(2.0), degrees(4, 2, 2, 4, 4)));
  const auto b = to_json(assess(single_bus(2.0), degrees(4, 2, 2, 4, 4)));
  EXPECT_EQ(a.dump(), b.dump());
  const auto c = assess(three_bus_suggested(), degrees(2, 0, 0, 2, 2));
  const auto d = assess(three_bus_suggested(), degrees(2, 0, 0, 2, 2));
  EXPECT_EQ(c.zeta, d.zeta);
  EXPECT_EQ(to_json(c).dump(), to_json(d).dump());
}

TEST(Certifier, ReportJson) {
  const auto j = to_json(assess(single_bus(1.0), degrees(2, 2, 2, 2, 2)));
  EXPECT_EQ(j["zeta"], 1);
  EXPECT_TRUE(j["certificate"].is_object());
  EXPECT_TRUE(j["certificate"]["V"].is_array());
  EXPECT_TRUE(j["problem_stats"]["gram_sizes"].is_array());
  EXPECT_FALSE(j.contains("wall_time"));
}

TEST(Certifier, DegreesFromJson) {
  const auto c = degrees_from_json({{"l_V", 6}, {"l_sigma2", 3}}, "degrees");
  EXPECT_EQ(c.l_V, 6);
  EXPECT_EQ(c.l_sigma2, 3);
  EXPECT_EQ(c.l_s1, 2);
  EXPECT_THROW(degrees_from_json({{"l_W", 6}}, "degrees"), ConfigError);
  EXPECT_THROW(degrees_from_json({{"l_V", 2.5}}, "degrees"), ConfigError);
}

// Every certificate in the corpus must survive independent checks.
TEST(Certifier, SoundnessOverCorpus) {
  int certified = 0;
  std::mt19937_64 rng(41);
  for (const auto& inst : corpus()) {
    const CertifyReport rep = assess(inst.net, inst.cfg);
    if (rep.zeta != 1) continue;
    ++certified;
    EXPECT_EQ(mgsos::testing::soundness_violations(inst.net, rep, rng), 0);
  }
  EXPECT_GT(certified, 0);
}
