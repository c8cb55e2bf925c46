#ifndef LSA_RUN_CONFIG_HPP
#define LSA_RUN_CONFIG_HPP

#include <string>

#include "lsa/model.hpp"
#include "lsa/trainer.hpp"

namespace lsa {

// Experiment configuration document: "key = value" lines, '#' comments.
// Unknown keys are rejected; every run writes its resolved form next to its
// outputs.
struct RunConfig {
  // environment
  std::uint64_t seed = 7;
  std::size_t n_nodes = 15;
  double connect_radius = 4.5;
  double box_size = 10.0;
  // synthetic features
  double feature_noise = 0.1;
  double feature_signal = 1.0;
  std::size_t signal_width = 0;  // 0 = derived from d_image
  // model
  ModelConfig model;
  // training
  double learning_rate = 0.2;
  std::size_t train_steps = 2000;
  std::size_t batch_size = 8;
  // episodes
  std::size_t n_episodes = 100;
  // output
  std::string out_dir;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& text);
  std::string to_text() const;

  FeatureSource feature_source() const;
  TrainConfig train_config() const;
  void validate() const;
};

}  // namespace lsa

#endif  // LSA_RUN_CONFIG_HPP
