#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace slicer;
using testing_support::path_graph;
using testing_support::ScopedEnv;

TEST(Simulate, CertainAndImpossibleTransmission) {
  const Graph g = path_graph(2);
  Rng rng(1);
  auto c = simulate_cascade(g, EdgeParams::constant(1, 1.0), 0, 1, rng);
  EXPECT_EQ(c.times, (std::vector<Outcome>{Outcome::exact(0), Outcome::exact(1)}));
  c = simulate_cascade(g, EdgeParams::constant(1, 0.0), 0, 1, rng);
  EXPECT_EQ(c.times, (std::vector<Outcome>{Outcome::exact(0), Outcome::star()}));
}

TEST(Simulate, HorizonCutsFront) {
  const Graph g = path_graph(3);
  Rng rng(2);
  const auto c = simulate_cascade(g, EdgeParams::constant(2, 1.0), 0, 1, rng);
  EXPECT_TRUE(c.times[2].is_star());
  EXPECT_EQ(c.times[1], Outcome::exact(1));
}

TEST(SimulateSet, ZeroCountIsError) {
  EXPECT_THROW(simulate_set(path_graph(2), EdgeParams::constant(1, 0.5), 0, 3, SeedPolicy::uniform_random(), 1), Error);
}

TEST(SimulateSet, ZeroAlphaActivatesOnlySeeds) {
  Rng rng(3);
  const Graph g = gen_erdos_renyi(50, 3.0, rng);
  const auto cs = simulate_set(g, EdgeParams::constant(g.num_edges(), 0.0), 10000, 5, SeedPolicy::uniform_random(), 9);
  for (const auto& c : cs) {
    const auto active = std::count_if(c.times.begin(), c.times.end(), [](const Outcome& o) { return o.is_exact(); });
    ASSERT_EQ(active, 1);
    ASSERT_EQ(c.times[c.seed], Outcome::exact(0));
  }
}

TEST(SimulateSet, FirstStepBinomial) {
  const double alpha = 0.37;
  const Graph g = path_graph(2);
  const std::size_t M = 100000;
  const auto cs = simulate_set(g, EdgeParams::constant(1, alpha), M, 2, SeedPolicy::fixed_list({0}), 11);
  std::size_t hits = 0;
  for (const auto& c : cs) hits += c.times[1] == Outcome::exact(1);
  const double sigma = std::sqrt(alpha * (1 - alpha) / static_cast<double>(M));
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(M), alpha, 3 * sigma);
}

TEST(SimulateSet, ReachabilityInvariant) {
  Rng rng(4);
  const Graph g = gen_barabasi_albert(80, 1.5, rng);
  const auto p = sample_params(g.num_edges(), UniformDist{0.0, 1.0}, rng);
  for (const auto& c : simulate_set(g, p, 2000, 6, SeedPolicy::uniform_random(), 5)) ASSERT_TRUE(is_valid_cascade(g, c));
}

TEST(SimulateSet, PrefixAndThreadInvariance) {
  Rng rng(5);
  const Graph g = gen_erdos_renyi(60, 3.0, rng);
  const auto p = sample_params(g.num_edges(), UniformDist{0.0, 1.0}, rng);
  std::vector<Cascade> one, many;
  {
    ScopedEnv env("SLICER_THREADS", "1");
    one = simulate_set(g, p, 500, 5, SeedPolicy::uniform_random(), 77);
  }
  {
    ScopedEnv env("SLICER_THREADS", "4");
    many = simulate_set(g, p, 800, 5, SeedPolicy::uniform_random(), 77);
  }
  for (std::size_t c = 0; c < one.size(); ++c) {
    ASSERT_EQ(one[c].seed, many[c].seed);
    ASSERT_EQ(one[c].times, many[c].times);
  }
}

TEST(SimulateSet, SeedPolicies) {
  const Graph g = path_graph(4);
  const auto p = EdgeParams::constant(3, 0.5);
  const auto rr = simulate_set(g, p, 8, 3, SeedPolicy::round_robin(), 1);
  for (std::size_t c = 0; c < rr.size(); ++c) EXPECT_EQ(rr[c].seed, c % 4);
  const auto fx = simulate_set(g, p, 6, 3, SeedPolicy::fixed_list({2, 3}), 1);
  for (std::size_t c = 0; c < fx.size(); ++c) EXPECT_EQ(fx[c].seed, c % 2 == 0 ? 2u : 3u);
}

TEST(SimulateSet, HigherAlphaSpreadsFurther) {
  Rng rng(6);
  const Graph g = gen_erdos_renyi(100, 3.0, rng);
  auto mean_size = [&](double a) {
    double s = 0;
    const auto cs = simulate_set(g, EdgeParams::constant(g.num_edges(), a), 1000, 5, SeedPolicy::uniform_random(), 3);
    for (const auto& c : cs) s += static_cast<double>(std::count_if(c.times.begin(), c.times.end(), [](const Outcome& o) { return o.is_exact(); }));
    return s / 1000.0;
  };
  EXPECT_GT(mean_size(0.9), mean_size(0.1));
}

TEST(Observation, FullGridIsIdentity) {
  Rng rng(7);
  const Graph g = gen_erdos_renyi(40, 3.0, rng);
  const auto p = sample_params(g.num_edges(), UniformDist{0.0, 1.0}, rng);
  const ObservationModel full{{}, {0, 1, 2, 3, 4}, std::nullopt};
  for (const auto& c : simulate_set(g, p, 200, 4, SeedPolicy::uniform_random(), 8)) {
    ASSERT_EQ(apply_observation(c, full, rng).times, c.times);
    ASSERT_EQ(apply_observation(c, ObservationModel{}, rng).times, c.times);
  }
}

TEST(Observation, EndpointGrid) {
  Cascade c{0, 6, {Outcome::exact(0), Outcome::exact(3), Outcome::star()}};
  Rng rng(1);
  const auto o = apply_observation(c, ObservationModel{{}, {0, 6}, std::nullopt}, rng);
  EXPECT_EQ(o.times[0], Outcome::exact(0));
  EXPECT_EQ(o.times[1], Outcome::interval(0, 6));
  EXPECT_TRUE(o.times[2].is_star());
}

TEST(Observation, GeneralGrid) {
  Cascade c{0, 6, {Outcome::exact(0), Outcome::exact(3), Outcome::exact(4), Outcome::exact(5), Outcome::star()}};
  Rng rng(1);
  const auto o = apply_observation(c, ObservationModel{{}, {0, 2, 4}, std::nullopt}, rng);
  EXPECT_EQ(o.times[1], Outcome::interval(2, 4));
  EXPECT_EQ(o.times[2], Outcome::interval(2, 4));
  EXPECT_EQ(o.times[3], Outcome::interval(4, kNever));
  EXPECT_EQ(o.times[4], Outcome::interval(4, kNever));
  // A one-step gap is an exact observation.
  const auto unit = apply_observation(c, ObservationModel{{}, {0, 1, 2, 3, 4, 6}, std::nullopt}, rng);
  EXPECT_EQ(unit.times[1], Outcome::exact(3));
  EXPECT_EQ(unit.times[3], Outcome::interval(4, 6));
}

TEST(Observation, GridMustStartAtZero) {
  Cascade c{0, 4, {Outcome::exact(0), Outcome::star()}};
  Rng rng(1);
  EXPECT_THROW(apply_observation(c, ObservationModel{{}, {1, 4}, std::nullopt}, rng), Error);
  EXPECT_THROW(apply_observation(c, ObservationModel{{}, {0, 5}, std::nullopt}, rng), Error);
  EXPECT_THROW(apply_observation(c, ObservationModel{{}, {0, 2, 2}, std::nullopt}, rng), Error);
}

TEST(Observation, NoiseFrequencies) {
  Cascade c{0, 5, {Outcome::exact(0), Outcome::exact(2), Outcome::star()}};
  const ObservationModel model{{}, {}, NoiseSpec::symmetric_k1()};
  Rng rng(12);
  const int M = 100000;
  std::array<int, 3> hist{};
  for (int k = 0; k < M; ++k) {
    const auto o = apply_observation(c, model, rng);
    ASSERT_EQ(o.times[0], Outcome::exact(0));
    ASSERT_TRUE(o.times[2].is_star());
    const int t = o.times[1].time();
    ASSERT_TRUE(t >= 1 && t <= 3);
    ++hist[static_cast<std::size_t>(t - 1)];
  }
  const double expected[] = {0.2, 0.6, 0.2};
  for (int k = 0; k < 3; ++k) {
    const double sigma = std::sqrt(expected[k] * (1 - expected[k]) / M);
    EXPECT_NEAR(hist[static_cast<std::size_t>(k)] / double(M), expected[k], 4 * sigma);
  }
}

TEST(Observation, NoiseClampsToHorizon) {
  Cascade c{0, 2, {Outcome::exact(0), Outcome::exact(2), Outcome::exact(1)}};
  const ObservationModel model{{}, {}, NoiseSpec{{0.0, 0.0, 1.0}}};
  Rng rng(1);
  const auto o = apply_observation(c, model, rng);
  EXPECT_EQ(o.times[1], Outcome::exact(2));
  EXPECT_EQ(o.times[2], Outcome::exact(2));
}

TEST(Observation, HiddenNodesExceptSeed) {
  Cascade c{1, 3, {Outcome::exact(1), Outcome::exact(0), Outcome::star()}};
  Rng rng(1);
  const auto o = apply_observation(c, ObservationModel{{true, true, false}, {}, std::nullopt}, rng);
  EXPECT_TRUE(o.times[0].is_hidden());
  EXPECT_EQ(o.times[1], Outcome::exact(0));
  EXPECT_TRUE(o.times[2].is_star());
}

TEST(Observation, ChooseHiddenCount) {
  Rng rng(2);
  const auto h = choose_hidden(100, 0.25, rng);
  EXPECT_EQ(std::count(h.begin(), h.end(), true), 25);
  EXPECT_THROW(choose_hidden(10, 1.5, rng), Error);
}

TEST(NoiseSpec, Validation) {
  EXPECT_NO_THROW(NoiseSpec::symmetric_k1().validate());
  EXPECT_THROW(NoiseSpec({0.5, 0.5}).validate(), Error);
  EXPECT_THROW(NoiseSpec({0.5, 0.6, -0.1}).validate(), Error);
  EXPECT_THROW(NoiseSpec({0.2, 0.2, 0.2}).validate(), Error);
}

TEST(Aggregate, IdenticalCascadesShareCounts) {
  const ObservedCascade c{0, 3, {Outcome::exact(0), Outcome::exact(2), Outcome::star()}};
  const auto s = aggregate_statistics(std::vector<ObservedCascade>{c, c, c});
  ASSERT_EQ(s.classes.size(), 1u);
  EXPECT_EQ(s.classes[0].cascades, 3u);
  for (const auto& node : s.classes[0].per_node) {
    ASSERT_EQ(node.size(), 1u);
    EXPECT_EQ(node[0].count, 3u);
  }
}

TEST(Aggregate, ClassesBySeed) {
  Rng rng(3);
  const Graph g = gen_erdos_renyi(100, 3.0, rng);
  const auto p = sample_params(g.num_edges(), UniformDist{0.0, 1.0}, rng);
  const auto cs = simulate_set(g, p, 100, 4, SeedPolicy::round_robin(), 4);
  std::vector<ObservedCascade> obs;
  for (const auto& c : cs) obs.push_back(observe_fully(c));
  EXPECT_EQ(aggregate_statistics(obs).classes.size(), 100u);

  const auto big = simulate_set(g, p, 20000, 4, SeedPolicy::uniform_random(), 4);
  obs.clear();
  for (const auto& c : big) obs.push_back(observe_fully(c));
  const auto s = aggregate_statistics(obs);
  EXPECT_LE(s.classes.size(), 100u);
  EXPECT_EQ(s.total_cascades(), 20000u);
  for (const auto& cls : s.classes)
    for (const auto& node : cls.per_node) {
      std::uint64_t total = 0;
      for (const auto& oc : node) total += oc.count;
      ASSERT_EQ(total, cls.cascades);
    }
}

TEST(Aggregate, HiddenAndNaiveIntervalsDropped) {
  const ObservedCascade c{0, 4, {Outcome::exact(0), Outcome::hidden(), Outcome::interval(0, 4)}};
  const auto s = aggregate_statistics(std::vector<ObservedCascade>{c});
  EXPECT_TRUE(s.classes[0].per_node[1].empty());
  EXPECT_TRUE(s.has_intervals());
  const auto naive = aggregate_statistics(std::vector<ObservedCascade>{c}, {.intervals_as_hidden = true});
  EXPECT_TRUE(naive.classes[0].per_node[2].empty());
  EXPECT_FALSE(naive.has_intervals());
}

TEST(Aggregate, HiddenSeedIsError) {
  const ObservedCascade c{0, 4, {Outcome::hidden(), Outcome::star()}};
  EXPECT_THROW(aggregate_statistics(std::vector<ObservedCascade>{c}), Error);
  EXPECT_THROW(aggregate_statistics(std::vector<ObservedCascade>{}), Error);
}

TEST(Simulate, TreeFrequenciesMatchExactMarginals) {
  Rng rng(13);
  const Graph g = checks::random_tree(7, rng);
  const auto p = sample_params(g.num_edges(), UniformDist{0.2, 0.9}, rng);
  const int T = 4;
  const auto exact = exact_marginals_bruteforce(g, p, 0, T);
  const auto mc = monte_carlo_marginals(g, p, 0, T, 100000, rng);
  for (NodeId i = 0; i < g.num_nodes(); ++i)
    for (int t = 0; t <= T; ++t) {
      const double sigma = std::sqrt(exact.at(i, t) * (1 - exact.at(i, t)) / 100000.0);
      EXPECT_LE(std::abs(mc.at(i, t) - exact.at(i, t)), 4 * sigma + 1e-12) << i << ' ' << t;
    }
}
