#ifndef LSA_TRAINER_HPP
#define LSA_TRAINER_HPP

#include <functional>

#include "lsa/model.hpp"

namespace lsa {

struct TrainConfig {
  double learning_rate = 0.2;
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

// One imitation step on a batch of episodes: teacher-forced rollouts,
// cross-entropy against the teacher action at every step, backpropagation
// through the whole episode (including the recurrent state), and a plain
// gradient-descent update. Returns the mean per-decision loss.
double train_step(Model& m, const NavGraph& graph, const FeatureSource& features,
                  const std::vector<const Episode*>& batch, double learning_rate,
                  RngStream& dropout_rng);

// Teacher-forced loss and gradient accumulation for one episode without the
// parameter update; returns (total loss, decision count).
std::pair<double, std::size_t> episode_loss_and_grad(
    Model& m, const NavGraph& graph, const FeatureSource& features,
    const Episode& episode, RngStream& dropout_rng, bool accumulate_grad);

// Fraction of teacher-forced decisions where the evaluation-mode argmax
// matches the teacher.
double teacher_accuracy(Model& m, const NavGraph& graph,
                        const FeatureSource& features,
                        const std::vector<Episode>& episodes);

struct TrainResult {
  std::vector<double> loss_curve;  // one entry per step
  double final_loss = 0.0;
};

using TrainCallback = std::function<void(std::size_t step, double loss)>;

TrainResult train(Model& m, const NavGraph& graph, const FeatureSource& features,
                  const std::vector<Episode>& episodes, const TrainConfig& cfg,
                  const TrainCallback& callback = {});

}  // namespace lsa

#endif  // LSA_TRAINER_HPP
