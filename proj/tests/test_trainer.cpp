#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lsa/trainer.hpp"

using namespace lsa;

namespace {

struct Setup {
  NavGraph graph;
  FeatureSource features;
  std::vector<Episode> episodes;
  ModelConfig cfg;
};

Setup toy_setup(std::uint64_t seed, std::size_t n_nodes = 8,
                std::size_t n_episodes = 6) {
  Setup s;
  s.graph = generate_synthetic_env(seed, n_nodes, 4.0, 10.0);
  s.features.dims = FeatureDims{8, 4};
  s.features.seed = seed;
  s.episodes = generate_episodes(s.graph, seed, n_episodes);
  s.cfg.dims = s.features.dims;
  s.cfg.d_h = 8;
  s.cfg.dropout_p = 0.0;
  return s;
}

}  // namespace

TEST_CASE("cross entropy of uniform scores is ln K") {
  Tensor scores = Tensor::from_rows({{0.25, 0.25, 0.25, 0.25}});
  CHECK(cross_entropy_loss(scores, 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // concentrated on the teacher -> near zero
  Tensor sharp = Tensor::from_rows({{0.0, 30.0, 0.0}});
  CHECK(cross_entropy_loss(sharp, 1) < 1e-9);

  // gradient is softmax minus one-hot
  Tensor d;
  cross_entropy_loss(scores, 2, &d);
  CHECK(d(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d(0, 2) == doctest::Approx(-0.75).epsilon(1e-12));
}

TEST_CASE("train config validation rejects nonsense") {
  TrainConfig c;
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("one small step on a fixed batch decreases its loss") {
  Setup s = toy_setup(61);
  Model m = make_model(s.cfg, 61);
  std::vector<const Episode*> batch;
  for (const Episode& e : s.episodes) batch.push_back(&e);

  auto batch_loss = [&] {
    double loss = 0.0;
    std::size_t n = 0;
    RngStream rng(0);
    for (const Episode* e : batch) {
      auto [l, d] = episode_loss_and_grad(m, s.graph, s.features, *e, rng, false);
      loss += l;
      n += d;
    }
    return loss / static_cast<double>(n);
  };

  const double before = batch_loss();
  RngStream rng(0);
  train_step(m, s.graph, s.features, batch, 1e-3, rng);
  const double after = batch_loss();
  CHECK(after < before);
}

TEST_CASE("training is deterministic per seed") {
  TrainConfig tc;
  tc.steps = 5;
  tc.batch_size = 2;
  tc.seed = 9;
  Setup s = toy_setup(67);

  Model m1 = make_model(s.cfg, 67);
  TrainResult r1 = train(m1, s.graph, s.features, s.episodes, tc);
  Model m2 = make_model(s.cfg, 67);
  TrainResult r2 = train(m2, s.graph, s.features, s.episodes, tc);
  REQUIRE(r1.loss_curve.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(r1.loss_curve[i] == r2.loss_curve[i]);
  auto p1 = m1.all_params();
  auto p2 = m2.all_params();
  for (std::size_t i = 0; i < p1.size(); ++i)
    for (std::size_t j = 0; j < p1[i]->value.size(); ++j)
      CHECK(p1[i]->value[j] == p2[i]->value[j]);
}

TEST_CASE("evaluation never touches the parameters") {
  Setup s = toy_setup(71);
  Model m = make_model(s.cfg, 71);
  std::vector<double> snapshot;
  for (Param* p : m.all_params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      snapshot.push_back(p->value[i]);

  evaluate_episodes(m, s.graph, s.features, s.episodes);
  teacher_accuracy(m, s.graph, s.features, s.episodes);

  std::size_t idx = 0;
  for (Param* p : m.all_params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      CHECK(p->value[i] == snapshot[idx++]);
}

TEST_CASE("teacher policy scores a perfect success rate") {
  Setup s = toy_setup(73);
  Model m = make_model(s.cfg, 73);
  RolloutOptions opts;
  opts.teacher_policy = true;
  MetricsReport r = evaluate_episodes(m, s.graph, s.features, s.episodes, opts);
  CHECK(r.sr == 1.0);
  CHECK(r.spl == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.ne == 0.0);

  // an untrained model should not beat the oracle
  MetricsReport rm = evaluate_episodes(m, s.graph, s.features, s.episodes);
  CHECK(rm.sr <= 1.0);
}

TEST_CASE("a short training run improves teacher-action accuracy") {
  Setup s = toy_setup(79, 8, 8);
  Model m = make_model(s.cfg, 79);
  const double before = teacher_accuracy(m, s.graph, s.features, s.episodes);
  TrainConfig tc;
  tc.steps = 60;
  tc.batch_size = 4;
  tc.learning_rate = 0.2;
  tc.seed = 79;
  TrainResult r = train(m, s.graph, s.features, s.episodes, tc);
  const double after = teacher_accuracy(m, s.graph, s.features, s.episodes);
  CHECK(after > before);
  CHECK(r.final_loss < r.loss_curve.front());
}

TEST_CASE("training with dropout stays deterministic too") {
  Setup s = toy_setup(83);
  s.cfg.dropout_p = 0.5;
  TrainConfig tc;
  tc.steps = 3;
  tc.batch_size = 2;
  tc.seed = 5;
  Model m1 = make_model(s.cfg, 83);
  Model m2 = make_model(s.cfg, 83);
  TrainResult r1 = train(m1, s.graph, s.features, s.episodes, tc);
  TrainResult r2 = train(m2, s.graph, s.features, s.episodes, tc);
  for (std::size_t i = 0; i < r1.loss_curve.size(); ++i)
    CHECK(r1.loss_curve[i] == r2.loss_curve[i]);
}

TEST_CASE("rollout respects the step limit") {
  Setup s = toy_setup(89);
  s.cfg.step_limit = 2;
  Model m = make_model(s.cfg, 89);
  for (const Episode& e : s.episodes) {
    RolloutResult r = rollout_episode(m, s.graph, s.features, e);
    CHECK(r.trajectory.steps.size() <= 2);
  }
}
