#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lsa/metrics.hpp"

using namespace lsa;

namespace {

FeatureSource toy_features(std::uint64_t seed) {
  FeatureSource fs;
  fs.dims = FeatureDims{8, 4};
  fs.seed = seed;
  return fs;
}

// Random-walk trajectories for aggregate checks.
std::vector<EpisodeOutcome> random_outcomes(const NavGraph& g, std::size_t n,
                                            std::uint64_t seed) {
  FeatureSource fs = toy_features(seed);
  RngStream rng(seed);
  std::vector<EpisodeOutcome> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int start = static_cast<int>(rng.next_u64() % g.n_nodes());
    const int goal = static_cast<int>(rng.next_u64() % g.n_nodes());
    Trajectory t = start_trajectory(g, start);
    const std::size_t walk = rng.next_u64() % 6;
    for (std::size_t s = 0; s < walk && !t.terminated; ++s) {
      Observation obs = observe(g, t.current(), t.heading, fs);
      step(g, t, obs, rng.next_u64() % obs.candidates.size());
    }
    if (!t.terminated) {
      Observation obs = observe(g, t.current(), t.heading, fs);
      step(g, t, obs, 0);
    }
    out.push_back({t, goal, shortest_path(g, start, goal).length});
  }
  return out;
}

}  // namespace

TEST_CASE("success boundary is inclusive at three meters") {
  CHECK(success(0.0));
  CHECK(success(3.0));
  CHECK_FALSE(success(3.01));
  CHECK(success(5.0, 6.0));
}

TEST_CASE("navigation error is the graph geodesic") {
  NavGraph g = generate_synthetic_env(41, 10, 4.0, 10.0);
  CHECK(navigation_error(g, 4, 4) == 0.0);
  for (int w : g.adjacency[2])
    CHECK(navigation_error(g, 2, w) ==
          doctest::Approx(g.edge_length(2, w)).epsilon(1e-12));
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b)
      CHECK(navigation_error(g, a, b) ==
            doctest::Approx(shortest_path(g, a, b).length).epsilon(1e-12));
}

TEST_CASE("oracle success scans every visited node") {
  NavGraph g = generate_synthetic_env(43, 12, 4.0, 10.0);
  FeatureSource fs = toy_features(43);
  // walk through the goal and keep going: OSR true even if SR false
  auto episodes = generate_episodes(g, 43, 10);
  for (const Episode& e : episodes) {
    Trajectory t = start_trajectory(g, e.start);
    // follow the reference path to the goal...
    for (std::size_t i = 1; i < e.reference_path.size(); ++i) {
      Observation obs = observe(g, t.current(), t.heading, fs);
      std::size_t a = 0;
      for (std::size_t k = 1; k < obs.candidates.size(); ++k)
        if (obs.candidates[k].neighbor == e.reference_path[i]) a = k;
      REQUIRE(a > 0);
      step(g, t, obs, a);
    }
    // ...then overshoot one hop if possible
    Observation obs = observe(g, t.current(), t.heading, fs);
    if (obs.candidates.size() > 1) step(g, t, obs, 1);
    CHECK(oracle_success(g, t, e.goal));
    // brute-force equivalence
    bool expect = false;
    for (int v : t.visited)
      expect = expect || shortest_path(g, v, e.goal).length <= kSuccessRadius;
    CHECK(oracle_success(g, t, e.goal) == expect);
  }
}

TEST_CASE("spl substitutions from the definition") {
  // exact shortest path -> 1
  CHECK(spl({true}, {5.0}, {5.0}) == doctest::Approx(1.0));
  // failure -> 0 regardless of length
  CHECK(spl({false}, {1.0}, {5.0}) == 0.0);
  // success with double the shortest length -> 0.5
  CHECK(spl({true}, {10.0}, {5.0}) == doctest::Approx(0.5));
  // mean over episodes
  CHECK(spl({true, false}, {5.0, 5.0}, {5.0, 5.0}) == doctest::Approx(0.5));
  // start == goal contributes the success flag
  CHECK(spl({true}, {0.0}, {0.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spl({true}, {1.0, 2.0}, {1.0}), DimensionError);
}

TEST_CASE("spl is invariant to uniform scaling of all lengths") {
  std::vector<bool> s{true, true, false, true};
  std::vector<double> traj{4.0, 9.0, 3.0, 7.5};
  std::vector<double> ref{4.0, 6.0, 3.0, 7.5};
  const double base = spl(s, traj, ref);
  for (double c : {0.5, 2.0, 13.0}) {
    std::vector<double> traj_c = traj, ref_c = ref;
    for (double& v : traj_c) v *= c;
    for (double& v : ref_c) v *= c;
    CHECK(spl(s, traj_c, ref_c) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("aggregate metrics match brute-force recomputation and ordering") {
  NavGraph g = generate_synthetic_env(47, 30, 4.0, 14.0);
  auto outcomes = random_outcomes(g, 200, 47);
  MetricsReport r = aggregate_metrics(g, outcomes);
  CHECK(r.n_episodes == 200);

  double ne = 0.0, sr = 0.0, osr = 0.0, tl = 0.0, spl_acc = 0.0;
  for (const EpisodeOutcome& o : outcomes) {
    const double e = shortest_path(g, o.trajectory.current(), o.goal).length;
    ne += e;
    const bool s = e <= kSuccessRadius;
    sr += s ? 1.0 : 0.0;
    bool ever = false;
    for (int v : o.trajectory.visited)
      ever = ever || shortest_path(g, v, o.goal).length <= kSuccessRadius;
    osr += ever ? 1.0 : 0.0;
    tl += o.trajectory.length;
    if (s)
      spl_acc += o.shortest_length == 0.0
                     ? 1.0
                     : o.shortest_length /
                           std::max(o.trajectory.length, o.shortest_length);
  }
  const double n = 200.0;
  CHECK(r.ne == doctest::Approx(ne / n).epsilon(1e-12));
  CHECK(r.sr == doctest::Approx(sr / n).epsilon(1e-12));
  CHECK(r.osr == doctest::Approx(osr / n).epsilon(1e-12));
  CHECK(r.tl == doctest::Approx(tl / n).epsilon(1e-12));
  CHECK(r.spl == doctest::Approx(spl_acc / n).epsilon(1e-12));

  CHECK(r.spl >= 0.0);
  CHECK(r.spl <= r.sr + 1e-12);
  CHECK(r.sr <= r.osr + 1e-12);
  CHECK(r.osr <= 1.0);
  CHECK(r.ne >= 0.0);
}

TEST_CASE("teacher trajectories give perfect metrics") {
  NavGraph g = generate_synthetic_env(53, 12, 4.0, 10.0);
  FeatureSource fs = toy_features(53);
  auto episodes = generate_episodes(g, 53, 30);
  std::vector<EpisodeOutcome> outcomes;
  for (const Episode& e : episodes) {
    Trajectory t = start_trajectory(g, e.start);
    while (!t.terminated) {
      Observation obs = observe(g, t.current(), t.heading, fs);
      step(g, t, obs, teacher_action(g, e, t.current(), obs));
    }
    outcomes.push_back({t, e.goal, shortest_path(g, e.start, e.goal).length});
  }
  MetricsReport r = aggregate_metrics(g, outcomes);
  CHECK(r.ne == 0.0);
  CHECK(r.sr == 1.0);
  CHECK(r.osr == 1.0);
  CHECK(r.spl == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("report serialization has stable shapes") {
  MetricsReport r;
  r.n_episodes = 3;
  r.ne = 1.5;
  r.sr = 0.5;
  r.osr = 0.75;
  r.spl = 0.25;
  r.tl = 10.0;
  CHECK(r.csv_header() == "n_episodes,ne,sr,osr,spl,tl");
  CHECK(r.csv_row() == "3,1.500000,0.500000,0.750000,0.250000,10.000000");
  CHECK(r.text().find("sr 0.500000") != std::string::npos);
}
