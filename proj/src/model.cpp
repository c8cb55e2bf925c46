#include "lsa/model.hpp"

#include <cmath>

namespace lsa {

namespace {

constexpr std::uint64_t kTagGoal = 0x676f616c;  // "goal"

Tensor sub_rows(const Tensor& x, std::size_t begin) {
  Tensor out = Tensor::zeros(x.rows() - begin, x.cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(begin + i, j);
  return out;
}

}  // namespace

SlotAttnConfig ModelConfig::slot_config() const {
  SlotAttnConfig c;
  c.dims = dims;
  c.dropout_p = dropout_p;
  c.iterations = slot_iterations;
  c.literal_alg1 = literal_alg1;
  return c;
}

DecoderConfig ModelConfig::decoder_config() const {
  DecoderConfig c;
  c.d_view = dims.d_view();
  c.d_h = d_h;
  c.layers = decoder_layers;
  return c;
}

std::vector<Param*> Model::all_params() {
  std::vector<Param*> out = slot.all();
  for (Param* p : dec.all()) out.push_back(p);
  return out;
}

void Model::zero_grads() {
  for (Param* p : all_params()) p->zero_grad();
}

Model make_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model m;
  m.cfg = cfg;
  RngStream rng(hash_combine(seed, 0x6d6f64656c));  // "model"
  m.slot = make_slot_attn_params(cfg.slot_config(), rng);
  m.dec = make_decoder_params(cfg.decoder_config(), rng);
  return m;
}

InstructionEmbedding make_instruction(const Episode& episode,
                                      const FeatureSource& features,
                                      std::size_t d_h) {
  const std::vector<int>& path = episode.reference_path;
  if (path.empty()) throw EvaluationError("make_instruction: empty reference path");
  InstructionEmbedding ins;
  ins.tokens = Tensor::zeros(path.size(), d_h);
  Tensor goal_tag = Tensor::vec(d_h);
  {
    RngStream rng(hash_combine(features.seed, kTagGoal));
    for (std::size_t j = 0; j < d_h; ++j)
      goal_tag[j] = (rng.next_u64() & 1) ? 1.0 : -1.0;
  }
  for (std::size_t i = 0; i < path.size(); ++i) {
    Tensor sig = features.node_signal(path[i], d_h);
    for (std::size_t j = 0; j < d_h; ++j) ins.tokens(i, j) = sig[j];
  }
  for (std::size_t j = 0; j < d_h; ++j)
    ins.tokens(path.size() - 1, j) += goal_tag[j];
  ins.cls = Tensor::zeros(1, d_h);
  Tensor goal_sig = features.node_signal(episode.goal, d_h);
  for (std::size_t j = 0; j < d_h; ++j) ins.cls(0, j) = goal_sig[j];
  return ins;
}

ModelStepOutput model_step(Model& m, const Observation& obs,
                           const Tensor& state, const Tensor& tokens,
                           RngStream& rng, bool training,
                           ModelStepCache* cache) {
  ModelStepCache local;
  ModelStepCache& c = cache ? *cache : local;
  c = ModelStepCache{};
  c.cand_in = stack_candidates(obs.candidates);

  Tensor dec_in = c.cand_in;
  ModelStepOutput out;
  const bool run_slot = m.cfg.use_slot_attention && m.cfg.slot_iterations > 0;
  if (run_slot) {
    c.slot_used = true;
    if (m.cfg.stop_slot_attends) {
      c.mask = build_mask(obs.candidates, m.cfg.mask);
      dec_in = slot_attention_forward_stacked(obs.grid.stacked(), c.cand_in,
                                              c.mask, m.slot, rng, training,
                                              &c.slot_cache, &out.trace);
    } else {
      // The stop slot bypasses slot attention; only real candidates refine.
      c.stop_excluded = true;
      std::vector<CandidateView> rest(obs.candidates.begin() + 1,
                                      obs.candidates.end());
      if (rest.empty()) {
        c.slot_used = false;
      } else {
        c.mask = build_mask(rest, m.cfg.mask);
        Tensor refined = slot_attention_forward_stacked(
            obs.grid.stacked(), sub_rows(c.cand_in, 1), c.mask, m.slot, rng,
            training, &c.slot_cache, &out.trace);
        for (std::size_t i = 0; i < refined.rows(); ++i)
          for (std::size_t j = 0; j < refined.cols(); ++j)
            dec_in(i + 1, j) = refined(i, j);
      }
    }
  }

  DecoderStepResult res = decoder_step(state, dec_in, tokens, m.dec, &c.dec_cache);
  out.scores = res.scores;
  out.chosen = res.chosen;
  out.next_state = res.next_state;
  return out;
}

void model_step_backward(Model& m, const ModelStepCache& cache,
                         const Tensor& d_scores, const Tensor& d_next_state,
                         Tensor* d_state_in) {
  Tensor d_cand = Tensor::zeros(cache.cand_in.rows(), cache.cand_in.cols());
  decoder_step_backward(cache.dec_cache, m.dec, d_scores, d_next_state,
                        d_state_in, &d_cand);
  if (!cache.slot_used) return;
  if (!cache.stop_excluded) {
    slot_attention_backward(cache.slot_cache, cache.mask, m.slot, d_cand);
  } else {
    slot_attention_backward(cache.slot_cache, cache.mask, m.slot,
                            sub_rows(d_cand, 1));
  }
}

double cross_entropy_loss(const Tensor& scores, std::size_t teacher,
                          Tensor* d_scores) {
  if (teacher >= scores.size())
    throw EvaluationError("cross_entropy_loss: teacher index out of range");
  double max_v = scores[0];
  for (std::size_t i = 1; i < scores.size(); ++i)
    max_v = std::max(max_v, scores[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    denom += std::exp(scores[i] - max_v);
  const double log_p = scores[teacher] - max_v - std::log(denom);
  if (d_scores) {
    *d_scores = Tensor::zeros(1, scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      (*d_scores)(0, i) = std::exp(scores[i] - max_v) / denom;
    (*d_scores)(0, teacher) -= 1.0;
  }
  return -log_p;
}

RolloutResult rollout_episode(Model& m, const NavGraph& graph,
                              const FeatureSource& features,
                              const Episode& episode,
                              const RolloutOptions& options) {
  InstructionEmbedding ins = make_instruction(episode, features, m.cfg.d_h);
  Tensor state = ins.cls;
  RngStream rng(episode.seed);  // unused in evaluation mode (no dropout)

  RolloutResult result;
  result.trajectory = start_trajectory(graph, episode.start);
  while (!result.trajectory.terminated &&
         result.trajectory.steps.size() < m.cfg.step_limit) {
    Observation obs = observe(graph, result.trajectory.current(),
                              result.trajectory.heading, features);
    ModelStepOutput out = model_step(m, obs, state, ins.tokens, rng, false);
    const std::size_t teacher =
        teacher_action(graph, episode, result.trajectory.current(), obs);
    if (out.chosen == teacher) ++result.correct;
    ++result.total;
    if (options.record_traces) {
      result.traces.push_back(out.trace);
      result.scores.push_back(out.scores);
    }
    const std::size_t action = options.teacher_policy ? teacher : out.chosen;
    step(graph, result.trajectory, obs, action);
    state = out.next_state;
  }
  // Success bonus on the recorded reward stream (no learner consumes it).
  if (result.trajectory.terminated &&
      result.trajectory.current() == episode.goal &&
      !result.trajectory.steps.empty())
    result.trajectory.steps.back().reward += 2.0;
  return result;
}

MetricsReport evaluate_episodes(Model& m, const NavGraph& graph,
                                const FeatureSource& features,
                                const std::vector<Episode>& episodes,
                                const RolloutOptions& options) {
  std::vector<EpisodeOutcome> outcomes;
  for (const Episode& e : episodes) {
    RolloutResult r = rollout_episode(m, graph, features, e, options);
    EpisodeOutcome o;
    o.trajectory = std::move(r.trajectory);
    o.goal = e.goal;
    o.shortest_length = shortest_path(graph, e.start, e.goal).length;
    outcomes.push_back(std::move(o));
  }
  return aggregate_metrics(graph, outcomes);
}

}  // namespace lsa
