#ifndef LSA_MODEL_HPP
#define LSA_MODEL_HPP

#include "lsa/decoder.hpp"
#include "lsa/local_mask.hpp"
#include "lsa/metrics.hpp"
#include "lsa/nav_env.hpp"
#include "lsa/slot_attention.hpp"

namespace lsa {

struct ModelConfig {
  FeatureDims dims;
  std::size_t d_h = 32;
  std::size_t decoder_layers = 1;
  MaskShape mask = MaskShape::window(3, 3);
  std::size_t slot_iterations = 3;
  double dropout_p = 0.7;
  bool literal_alg1 = false;
  bool use_slot_attention = true;  // false: candidates feed the decoder directly
  bool stop_slot_attends = true;   // stop slot joins slot attention (full mask)
  std::size_t step_limit = 20;

  SlotAttnConfig slot_config() const;
  DecoderConfig decoder_config() const;
};

struct Model {
  ModelConfig cfg;
  SlotAttnParams slot;
  DecoderParams dec;

  std::vector<Param*> all_params();
  void zero_grads();
};

Model make_model(const ModelConfig& cfg, std::uint64_t seed);

// Synthetic instruction: one token per reference-path node (its identity
// signal in decoder width), the goal token carries an extra goal tag, and the
// cls row starts from the goal signal.
InstructionEmbedding make_instruction(const Episode& episode,
                                      const FeatureSource& features,
                                      std::size_t d_h);

struct ModelStepCache {
  Tensor cand_in;  // K x d_view stacked candidates
  MaskMatrix mask;
  bool slot_used = false;
  bool stop_excluded = false;
  SlotAttnCache slot_cache;
  DecoderStepCache dec_cache;
};

struct ModelStepOutput {
  Tensor scores;  // 1 x K
  std::size_t chosen = 0;
  Tensor next_state;  // 1 x d_h
  AttentionTrace trace;
};

ModelStepOutput model_step(Model& m, const Observation& obs,
                           const Tensor& state, const Tensor& tokens,
                           RngStream& rng, bool training,
                           ModelStepCache* cache = nullptr);

// Backward through one step; accumulates parameter gradients and, via
// d_state_in, the gradient flowing to the previous step's state.
void model_step_backward(Model& m, const ModelStepCache& cache,
                         const Tensor& d_scores, const Tensor& d_next_state,
                         Tensor* d_state_in);

// Cross-entropy of softmax(scores) against the teacher index; d_scores
// (optional) receives the gradient.
double cross_entropy_loss(const Tensor& scores, std::size_t teacher,
                          Tensor* d_scores = nullptr);

struct RolloutOptions {
  bool teacher_policy = false;  // follow the oracle instead of the model
  bool record_traces = false;
};

struct RolloutResult {
  Trajectory trajectory;
  std::size_t correct = 0;  // steps where argmax matched the teacher
  std::size_t total = 0;
  std::vector<AttentionTrace> traces;
  std::vector<Tensor> scores;
};

// Greedy evaluation-mode rollout of one episode.
RolloutResult rollout_episode(Model& m, const NavGraph& graph,
                              const FeatureSource& features,
                              const Episode& episode,
                              const RolloutOptions& options = {});

MetricsReport evaluate_episodes(Model& m, const NavGraph& graph,
                                const FeatureSource& features,
                                const std::vector<Episode>& episodes,
                                const RolloutOptions& options = {});

}  // namespace lsa

#endif  // LSA_MODEL_HPP
