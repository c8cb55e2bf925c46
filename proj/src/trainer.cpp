#include "lsa/trainer.hpp"

#include <cmath>

namespace lsa {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (steps == 0) throw ConfigError("train: steps must be positive");
  if (batch_size == 0) throw ConfigError("train: batch size must be positive");
}

std::pair<double, std::size_t> episode_loss_and_grad(
    Model& m, const NavGraph& graph, const FeatureSource& features,
    const Episode& episode, RngStream& dropout_rng, bool accumulate_grad) {
  InstructionEmbedding ins = make_instruction(episode, features, m.cfg.d_h);
  Tensor state = ins.cls;

  struct StepData {
    ModelStepCache cache;
    Tensor d_scores;
  };
  std::vector<StepData> steps;

  Trajectory traj = start_trajectory(graph, episode.start);
  double loss = 0.0;
  while (!traj.terminated && traj.steps.size() < m.cfg.step_limit) {
    Observation obs = observe(graph, traj.current(), traj.heading, features);
    StepData sd;
    ModelStepOutput out =
        model_step(m, obs, state, ins.tokens, dropout_rng, true, &sd.cache);
    const std::size_t teacher = teacher_action(graph, episode, traj.current(), obs);
    loss += cross_entropy_loss(out.scores, teacher, &sd.d_scores);
    steps.push_back(std::move(sd));
    step(graph, traj, obs, teacher);  // teacher forcing
    state = out.next_state;
  }

  if (accumulate_grad) {
    // Backpropagation through time over the recurrent state.
    Tensor d_state = Tensor::zeros(1, m.cfg.d_h);
    for (std::size_t t = steps.size(); t-- > 0;) {
      Tensor d_prev = Tensor::zeros(1, m.cfg.d_h);
      model_step_backward(m, steps[t].cache, steps[t].d_scores, d_state, &d_prev);
      d_state = d_prev;
    }
  }
  return {loss, steps.size()};
}

double train_step(Model& m, const NavGraph& graph, const FeatureSource& features,
                  const std::vector<const Episode*>& batch, double learning_rate,
                  RngStream& dropout_rng) {
  m.zero_grads();
  double loss = 0.0;
  std::size_t decisions = 0;
  for (const Episode* e : batch) {
    auto [l, n] = episode_loss_and_grad(m, graph, features, *e, dropout_rng, true);
    loss += l;
    decisions += n;
  }
  if (!std::isfinite(loss))
    throw EvaluationError("train_step: loss diverged (non-finite); lower the learning rate");
  const double inv = decisions ? 1.0 / static_cast<double>(decisions) : 0.0;
  for (Param* p : m.all_params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] -= learning_rate * inv * p->grad[i];
  return loss * inv;
}

double teacher_accuracy(Model& m, const NavGraph& graph,
                        const FeatureSource& features,
                        const std::vector<Episode>& episodes) {
  std::size_t correct = 0, total = 0;
  RngStream rng(0);
  for (const Episode& e : episodes) {
    InstructionEmbedding ins = make_instruction(e, features, m.cfg.d_h);
    Tensor state = ins.cls;
    Trajectory traj = start_trajectory(graph, e.start);
    while (!traj.terminated && traj.steps.size() < m.cfg.step_limit) {
      Observation obs = observe(graph, traj.current(), traj.heading, features);
      ModelStepOutput out = model_step(m, obs, state, ins.tokens, rng, false);
      const std::size_t teacher = teacher_action(graph, e, traj.current(), obs);
      if (out.chosen == teacher) ++correct;
      ++total;
      step(graph, traj, obs, teacher);
      state = out.next_state;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

TrainResult train(Model& m, const NavGraph& graph, const FeatureSource& features,
                  const std::vector<Episode>& episodes, const TrainConfig& cfg,
                  const TrainCallback& callback) {
  cfg.validate();
  if (episodes.empty()) throw ConfigError("train: no episodes");
  TrainResult result;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    std::vector<const Episode*> batch;
    for (std::size_t b = 0; b < cfg.batch_size; ++b)
      batch.push_back(&episodes[(s * cfg.batch_size + b) % episodes.size()]);
    RngStream dropout_rng(hash_combine(cfg.seed, 0xd0 + s));
    const double loss =
        train_step(m, graph, features, batch, cfg.learning_rate, dropout_rng);
    result.loss_curve.push_back(loss);
    if (callback) callback(s, loss);
  }
  result.final_loss = result.loss_curve.back();
  return result;
}

}  // namespace lsa
