#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "gsp/error.hpp"
#include "gsp/sim/agents.hpp"
#include "gsp/sim/oracle.hpp"
#include "gsp/sim/scenario.hpp"
#include "gsp/sim/simulation.hpp"
#include "support.hpp"

using namespace gsp;
using namespace gsp::sim;

namespace {

SliderGrid grid8() { return SliderGrid(-0.24, 0.38, 8); }

EmotionTarget correlated_2d(double rho = 0.7) {
  EmotionTarget t;
  t.mu = {0.05, 0.12};
  const double s0 = 0.14, s1 = 0.11;
  Eigen::MatrixXd c(2, 2);
  c << s0 * s0, rho * s0 * s1, rho * s0 * s1, s1 * s1;
  t.covariance = c;
  return t;
}

/// Brute force: the joint density evaluated along the slice, renormalized.
std::vector<double> slice_by_joint(const EmotionTarget& t, LatentPoint p, int dim, const SliderGrid& g) {
  std::vector<double> out;
  for (int k = 0; k < g.size(); ++k) {
    p.indices[static_cast<std::size_t>(dim)] = k;
    const auto x = p.weights(g);
    out.push_back(std::exp(t.log_density(x)));
  }
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return out;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> empirical(const AgentPolicy& policy, const std::vector<double>& probs, int draws,
                              std::uint64_t seed) {
  auto rng = substream(seed, "test-draws", 0);
  std::vector<double> h(probs.size(), 0.0);
  for (int i = 0; i < draws; ++i) h[static_cast<std::size_t>(agent_choose(policy, probs, rng))] += 1.0 / draws;
  return h;
}

ExperimentConfig low_dim_config(int dims, int grid_n, int ppi, int chains_per_cell, int iterations) {
  ExperimentConfig c;
  c.dimensions = dims;
  c.grid = {-0.24, 0.38, grid_n};
  c.n_chains = 9 * chains_per_cell;
  c.n_iterations = iterations;
  c.participants_per_iteration = ppi;
  c.n_random = 2;
  c.rating_target = 1;
  return c;
}

Scenario quiet_scenario(const ExperimentConfig& c) {
  Scenario s = default_scenario(c);
  s.render = false;
  s.validation.enabled = false;
  return s;
}

}  // namespace

TEST(SliceProbs, MatchTheJointAlongTheSlice) {
  const auto g = grid8();
  const auto t = correlated_2d();
  for (int a = 0; a < 8; ++a) {
    for (int dim = 0; dim < 2; ++dim) {
      const LatentPoint p{{a, 7 - a}};
      const auto got = conditional_slice_probs(t, p, dim, g);
      const auto want = slice_by_joint(t, p, dim, g);
      for (int k = 0; k < 8; ++k) EXPECT_NEAR(got[static_cast<std::size_t>(k)], want[static_cast<std::size_t>(k)], 1e-12);
    }
  }
}

TEST(SliceProbs, IsotropicTargetIgnoresTheOtherCoordinates) {
  const SliderGrid g(-0.24, 0.38, 32);
  EmotionTarget t;
  t.mu = {0.1, -0.05, 0.2};
  t.sigma = 0.08;
  const auto base = conditional_slice_probs(t, LatentPoint{{0, 0, 0}}, 1, g);
  for (const auto& other : {LatentPoint{{31, 0, 5}}, LatentPoint{{12, 9, 31}}}) {
    const auto p = conditional_slice_probs(t, other, 1, g);
    for (std::size_t k = 0; k < p.size(); ++k) EXPECT_NEAR(p[k], base[k], 1e-15);
  }
}

TEST(SliceProbs, TinySigmaPeaksAndHugeSigmaIsUniform) {
  const SliderGrid g(-0.24, 0.38, 32);
  EmotionTarget t;
  t.mu = {0.1};
  t.sigma = 1e-4;
  const auto sharp = conditional_slice_probs(t, LatentPoint{{0}}, 0, g);
  EXPECT_GT(sharp[17], 0.999);  // 0.1 sits on index 17
  t.sigma = 1e6;
  for (double p : conditional_slice_probs(t, LatentPoint{{0}}, 0, g)) EXPECT_NEAR(p, 1.0 / 32, 1e-12);
}

TEST(SliceProbs, ScaleInvarianceOfTheCovariance) {
  // Scaling the whole problem by a factor leaves the grid distribution unchanged.
  const auto g = grid8();
  const auto t = correlated_2d();
  const SliderGrid g2(-0.48, 0.76, 8);
  EmotionTarget t2 = t;
  t2.mu = {0.1, 0.24};
  t2.covariance = 4.0 * *t.covariance;
  const auto a = conditional_slice_probs(t, LatentPoint{{2, 5}}, 0, g);
  const auto b = conditional_slice_probs(t2, LatentPoint{{2, 5}}, 0, g2);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(SliceProbs, Errors) {
  const auto g = grid8();
  EmotionTarget t;
  t.mu = {0.0, 0.0};
  EXPECT_THROW(conditional_slice_probs(t, LatentPoint{{0}}, 0, g), Error);
  EXPECT_THROW(conditional_slice_probs(t, LatentPoint{{0, 0}}, 2, g), Error);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  t.covariance = bad;
  try {
    t.precision();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::conditioning);
  }
  EmotionTarget far;
  far.mu = {0.5, 0.0};
  EXPECT_THROW(validate(far, g), Error);
}

TEST(Agent, MaximizerPicksTheLowestArgmax) {
  const std::vector<double> p{0.1, 0.3, 0.3, 0.2, 0.1};
  auto rng = substream(1, "t", 0);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(agent_choose(AgentPolicy{}, p, rng), 1);
  EXPECT_EQ(choice_distribution(AgentPolicy{}, p), (std::vector<double>{0, 1, 0, 0, 0}));
}

TEST(Agent, SamplerDrawsFollowTheSlice) {
  const SliderGrid g(-0.24, 0.38, 32);
  EmotionTarget t;
  t.mu = {0.05};
  t.sigma = 0.1;
  const auto p = conditional_slice_probs(t, LatentPoint{{0}}, 0, g);
  const AgentPolicy sampler{AgentPolicy::Mode::sampler, 1.0, 0.0};
  EXPECT_LT(tv(empirical(sampler, p, 200000, 3), p), 0.01);
}

TEST(Agent, TemperatureAndLapseReshapeTheChoice) {
  const std::vector<double> p{0.1, 0.2, 0.7};
  const AgentPolicy cold{AgentPolicy::Mode::sampler, 0.5, 0.0};
  const auto d = choice_distribution(cold, p);
  const double z = 0.01 + 0.04 + 0.49;
  EXPECT_NEAR(d[0], 0.01 / z, 1e-12);
  EXPECT_NEAR(d[2], 0.49 / z, 1e-12);

  const AgentPolicy lapse{AgentPolicy::Mode::maximizer, 1.0, 1.0};
  for (double v : choice_distribution(lapse, p)) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
  const auto h = empirical(lapse, p, 60000, 4);
  for (double v : h) EXPECT_NEAR(v, 1.0 / 3, 0.01);

  const AgentPolicy some{AgentPolicy::Mode::maximizer, 1.0, 0.3};
  const auto want = choice_distribution(some, p);
  EXPECT_NEAR(want[2], 0.7 + 0.1, 1e-12);
  EXPECT_LT(tv(empirical(some, p, 100000, 5), want), 0.01);
}

TEST(RatingAgent, NoiselessMapping) {
  EmotionTarget t;
  t.mu = {0.1, 0.0};
  const RatingModel exact{0.2, RatingNoise::none};
  auto rng = substream(1, "t", 0);
  EXPECT_EQ(rating_agent(t, std::vector<double>{0.1, 0.0}, exact, rng), 4);
  EXPECT_EQ(rating_agent(t, std::vector<double>{-0.24, 0.38}, exact, rng), 1);
  // Distance with s = 1/2 exactly: |d|^2 = 2 sigma_r^2 ln 2.
  const double d = std::sqrt(2.0 * 0.04 * std::log(2.0));
  EXPECT_EQ(rating_agent(t, std::vector<double>{0.1 + d, 0.0}, exact, rng), 3);
  EXPECT_EQ(rating_from_similarity(0.0), 1);
  EXPECT_EQ(rating_from_similarity(1.0 / 6.0), 2);
  EXPECT_EQ(rating_from_similarity(1.0), 4);
}

TEST(RatingAgent, DitherIsUnbiasedInTheInterior) {
  EmotionTarget t;
  t.mu = {0.0};
  const RatingModel dither{0.2, RatingNoise::dither};
  auto rng = substream(9, "t", 0);
  for (double s : {0.3, 0.5, 0.8}) {
    const double d = std::sqrt(-2.0 * 0.04 * std::log(s));
    double mean = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) mean += rating_agent(t, std::vector<double>{d}, dither, rng) / double(n);
    EXPECT_NEAR(mean, 1.0 + 3.0 * s, 0.02) << s;
  }
}

TEST(Oracle, StateNumberingRoundTrips) {
  const auto g = grid8();
  EXPECT_EQ(state_count(g, 2), 64);
  for (int s = 0; s < 64; ++s) EXPECT_EQ(state_index(state_point(s, g, 2), g), s);
  EXPECT_EQ(state_point(9, g, 2).indices, (std::vector<int>{1, 1}));
}

TEST(Oracle, OneDimensionIsExactAfterOneStep) {
  const auto g = grid8();
  EmotionTarget t;
  t.mu = {0.1};
  t.sigma = 0.15;
  const Eigen::MatrixXd k = gibbs_update_matrix(t, g, 0);
  const auto pi = target_on_grid(t, g);
  for (int r = 0; r < 8; ++r) EXPECT_LT(total_variation(k.row(r).transpose(), pi), 1e-14);
}

TEST(Oracle, CorrelatedTwoDimensionalStationaryMatchesBruteForceTarget) {
  const auto g = grid8();
  const auto t = correlated_2d();
  Eigen::VectorXd brute(64);
  for (int s = 0; s < 64; ++s) brute(s) = std::exp(t.log_density(state_point(s, g, 2).weights(g)));
  brute /= brute.sum();
  EXPECT_LT(total_variation(gibbs_oracle_stationary(t, g), brute), 1e-10);
  EXPECT_LT(total_variation(target_on_grid(t, g), brute), 1e-12);
  // Stationarity under each single-dimension update as well.
  for (int d = 0; d < 2; ++d) {
    const Eigen::VectorXd moved = gibbs_update_matrix(t, g, d).transpose() * brute;
    EXPECT_LT(total_variation(moved, brute), 1e-12);
  }
}

TEST(Oracle, IsotropicTargetFactorizes) {
  const auto g = grid8();
  EmotionTarget t;
  t.mu = {0.0, 0.2};
  t.sigma = 0.1;
  const auto pi = target_on_grid(t, g);
  EmotionTarget a, b;
  a.mu = {0.0};
  b.mu = {0.2};
  a.sigma = b.sigma = 0.1;
  const auto pa = target_on_grid(a, g);
  const auto pb = target_on_grid(b, g);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(pi(i * 8 + j), pa(i) * pb(j), 1e-14);
  }
}

TEST(Oracle, RowsAreDistributionsAndOnlyMoveOneCoordinate) {
  const auto g = grid8();
  const auto t = correlated_2d();
  const auto k = gibbs_update_matrix(t, g, 1);
  for (int r = 0; r < 64; ++r) {
    EXPECT_NEAR(k.row(r).sum(), 1.0, 1e-12);
    const auto from = state_point(r, g, 2);
    for (int c = 0; c < 64; ++c) {
      if (state_point(c, g, 2).indices[0] != from.indices[0]) EXPECT_EQ(k(r, c), 0.0);
    }
  }
}

TEST(Oracle, SizeLimit) {
  EmotionTarget t;
  t.mu = {0.0, 0.0, 0.0};
  EXPECT_THROW(gibbs_oracle_stationary(t, grid8()), Error);
}

TEST(Scenario, DefaultTargetsCoverEveryEmotionInRange) {
  const ExperimentConfig c;
  const auto targets = default_targets(c);
  ASSERT_EQ(targets.size(), 3u);
  for (const auto& t : targets) {
    EXPECT_EQ(t.mu.size(), 10u);
    EXPECT_NO_THROW(validate(t, c.grid_spec()));
    ASSERT_TRUE(t.covariance);
    EXPECT_NEAR((*t.covariance)(0, 5) / 0.0144, 0.8, 1e-12);
  }
}

TEST(Scenario, ParseRoundTripAndErrors) {
  const ExperimentConfig c;
  const auto s = default_scenario(c);
  const auto back = parse_scenario(to_json(s), c);
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());

  auto code_of = [&](nlohmann::json j) {
    try {
      parse_scenario(j, c);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io;
  };
  EXPECT_EQ(code_of({{"policy", {{"mode", "greedy"}}}}), Errc::config);
  EXPECT_EQ(code_of({{"targets", "nearest"}}), Errc::config);
  EXPECT_EQ(code_of({{"concurrency", 0}}), Errc::config);
  EXPECT_EQ(code_of({{"dropout_rate", 1.0}}), Errc::config);
  EXPECT_EQ(code_of({{"participants", 2}}), Errc::config);
  EXPECT_EQ(code_of({{"seed", "x"}}), Errc::config);
  EXPECT_EQ(code_of({{"targets", {{{"emotion", "anger"}, {"mu", {0.0, 0.0}}}}}}), Errc::config);
}

TEST(Scenario, DiagonalTargetsProjectOntoTheGrid) {
  const ExperimentConfig c;
  const auto s = parse_scenario({{"targets", "diagonal"}}, c);
  for (const auto& t : s.targets) {
    EXPECT_FALSE(t.covariance);
    const auto p = grid_projection(t, c.grid_spec());
    const auto w = p.weights(c.grid_spec());
    for (std::size_t d = 0; d < w.size(); ++d) EXPECT_LE(std::abs(w[d] - t.mu[d]), 0.01 + 1e-12);
  }
}

TEST(Simulation, IdenticalInputsGiveIdenticalLogs) {
  const auto c = low_dim_config(2, 8, 3, 1, 6);
  const auto s = quiet_scenario(c);
  const auto a = run_simulation(c, s);
  const auto b = run_simulation(c, s);
  EXPECT_EQ(summarize(a).dump(), summarize(b).dump());
  EXPECT_EQ(summarize(a).at("full_chains"), 9);
  EXPECT_EQ(a.events.size(), b.events.size());
}

TEST(Simulation, SingleRaterChainIsTextbookGibbs) {
  // With one response per iteration every step of a chain is one draw from
  // the conditional slice at the chain's current point.
  const auto c = low_dim_config(2, 8, 1, 20, 30);
  auto s = quiet_scenario(c);
  s.policy = {AgentPolicy::Mode::sampler, 1.0, 0.0};
  s.targets.clear();
  for (Emotion e : c.emotions) {
    auto t = correlated_2d();
    t.emotion = e;
    s.targets.push_back(t);
  }
  const auto result = run_simulation(c, s);
  const auto g = c.grid_spec();

  std::vector<double> observed(8, 0.0), expected(8, 0.0);
  int steps = 0;
  for (const auto& chain : result.state.chains) {
    ASSERT_TRUE(chain.complete());
    for (std::size_t i = 0; i + 1 < chain.history.size(); ++i) {
      const int dim = static_cast<int>(i % 2);
      const auto p = conditional_slice_probs(s.target(chain.spec.emotion), chain.history[i].point, dim, g);
      for (int k = 0; k < 8; ++k) expected[static_cast<std::size_t>(k)] += p[static_cast<std::size_t>(k)];
      observed[static_cast<std::size_t>(chain.history[i + 1].point.indices[static_cast<std::size_t>(dim)])] += 1.0;
      EXPECT_EQ(chain.history[i + 1].point.indices[static_cast<std::size_t>(1 - dim)],
                chain.history[i].point.indices[static_cast<std::size_t>(1 - dim)]);
      ++steps;
    }
  }
  for (int k = 0; k < 8; ++k) {
    observed[static_cast<std::size_t>(k)] /= steps;
    expected[static_cast<std::size_t>(k)] /= steps;
  }
  EXPECT_EQ(steps, 180 * 30);
  EXPECT_LT(tv(observed, expected), 0.02);

  // Late states pooled over chains approach the stationary distribution.
  const auto pi = gibbs_oracle_stationary(s.targets.front(), g);
  Eigen::VectorXd late = Eigen::VectorXd::Zero(64);
  for (const auto& chain : result.state.chains) {
    for (const auto& h : chain.history) {
      if (h.iteration >= 10) late(state_index(h.point, g)) += 1.0;
    }
  }
  late /= late.sum();
  EXPECT_LT(total_variation(late, pi), 0.06);
}

TEST(Simulation, MedianOfFiveMaximizersEqualsOne) {
  const auto one = low_dim_config(2, 8, 1, 1, 8);
  const auto five = low_dim_config(2, 8, 5, 1, 8);
  const auto a = run_simulation(one, quiet_scenario(one));
  const auto b = run_simulation(five, quiet_scenario(five));
  ASSERT_EQ(a.state.chains.size(), b.state.chains.size());
  for (std::size_t i = 0; i < a.state.chains.size(); ++i) {
    EXPECT_EQ(a.state.chains[i].history, b.state.chains[i].history) << i;
  }
}

TEST(Simulation, StalledChainsRunToTheDeadline) {
  auto c = low_dim_config(2, 8, 3, 1, 4);
  c.duration_hours = 2.0;
  auto s = quiet_scenario(c);
  s.stalled_chains = {0, 4};
  const auto r = run_simulation(c, s);
  EXPECT_EQ(r.state.termination, TerminationReason::deadline);
  EXPECT_EQ(r.state.full_chains(), 7);
  EXPECT_EQ(r.state.chain(0).iteration, 0);
  EXPECT_GT(r.stats.abandoned, 0);
}

TEST(Simulation, ValidationPhaseCollectsEveryRating) {
  const auto c = low_dim_config(2, 8, 3, 1, 4);
  auto s = quiet_scenario(c);
  s.validation.enabled = true;
  s.validation.raters = 12;
  const auto r = run_simulation(c, s);
  ASSERT_TRUE(r.state.validation);
  const std::size_t items = 9 * 5 + 2 + 9 * c.novel_sentences.size();
  EXPECT_EQ(r.state.validation->items.size(), items);
  EXPECT_EQ(r.stats.ratings, static_cast<int>(items * 3));
  const auto summary = summarize(r);
  EXPECT_EQ(summary.at("validation").at("ratings"), items * 3);
}
