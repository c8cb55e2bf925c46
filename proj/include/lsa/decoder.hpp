#ifndef LSA_DECODER_HPP
#define LSA_DECODER_HPP

#include <vector>

#include "lsa/ops.hpp"

namespace lsa {

// Synthetic instruction embedding. cls seeds the navigation state; the token
// rows stay fixed for the whole episode.
struct InstructionEmbedding {
  Tensor cls;     // 1 x d_h
  Tensor tokens;  // n_tokens x d_h
};

struct DecoderConfig {
  std::size_t d_view = 0;  // visual input width
  std::size_t d_h = 16;    // decoder width
  std::size_t layers = 1;  // depth of the cross and self attention stacks
};

// Single-head attention projections for one layer.
struct AttnLayerParams {
  AffineParams q, k, v;  // d_h -> d_h
};

struct DecoderParams {
  DecoderConfig cfg;
  AffineParams visual_proj;  // d_view -> d_h
  std::vector<AttnLayerParams> cross_layers;
  std::vector<AttnLayerParams> self_layers;
  AffineParams state_proj;  // 2*d_h -> d_h (state update)
  LayerNormParams ln_fuse, ln_state;

  std::vector<Param*> all();
  void zero_grads();
};

DecoderParams make_decoder_params(const DecoderConfig& cfg, RngStream& rng);

Tensor project_visual(const Tensor& cand, const DecoderParams& p);

struct AttnLayerCache {
  Tensor in;             // query-side input rows
  Tensor context;        // key/value-side input rows
  Tensor q, keys, vals;  // projections
  Tensor attn;
};

struct CrossAttnResult {
  Tensor out;        // (K+1) x d_h with residual, row 0 is the state
  Tensor state_x;    // 1 x d_h
  Tensor visual_x;   // K x d_h
  Tensor lang_x;     // n_tokens x d_h (value-projected tokens, final layer)
  Tensor attn_lang;  // 1 x n_tokens, state row's weights, final layer
};

// One scaled dot-product cross-attention layer with [state; visual] as
// queries over the instruction tokens, residual per query row.
CrossAttnResult cross_attention(const Tensor& state, const Tensor& visual,
                                const Tensor& tokens, AttnLayerParams& p,
                                AttnLayerCache* cache = nullptr);

struct SelfAttnResult {
  Tensor out;
  Tensor state_s;   // 1 x d_h
  Tensor visual_s;  // K x d_h
  Tensor attn_row;  // 1 x K, state row's weights over candidates, renormalized
};

// Full self-attention over [state; candidates]; the state row's attention to
// the candidate rows, renormalized over candidates, is the action-score
// source.
SelfAttnResult self_attention(const Tensor& joined, AttnLayerParams& p,
                              AttnLayerCache* cache = nullptr);

struct StateUpdateCache {
  Tensor lang_x, visual_s, attn_lang, attn_vis;
  Tensor sum_lang, sum_vis;  // attended summaries, 1 x d_h
  Tensor fused;              // sum_lang .* sum_vis
  LayerNormCache ln_fuse_cache;
  Tensor concat;  // [state_s ; ln(fused)], 1 x 2*d_h
  LayerNormCache ln_state_cache;
};

// s_{t+1} = LN(W_s * [state_s ; LN(lang summary .* visual summary)] + b_s).
Tensor update_state(const Tensor& state_s, const Tensor& lang_x,
                    const Tensor& visual_s, const Tensor& attn_lang,
                    const Tensor& attn_vis, DecoderParams& p,
                    StateUpdateCache* cache = nullptr);

// Argmax with lowest-index tie break; index 0 is the stop action. Rejects
// non-finite scores.
std::size_t select_action(const Tensor& scores);

struct DecoderStepCache {
  Tensor cand;    // K x d_view input
  Tensor visual;  // K x d_h
  std::vector<AttnLayerCache> cross;
  std::vector<AttnLayerCache> self;
  Tensor lang_x;
  Tensor attn_lang;
  Tensor attn_row_raw;  // state row of the final self attention, 1 x (K+1)
  Tensor scores;
  StateUpdateCache update;
};

struct DecoderStepResult {
  Tensor scores;      // 1 x K, candidate 0 is stop
  std::size_t chosen = 0;
  Tensor next_state;  // 1 x d_h
};

DecoderStepResult decoder_step(const Tensor& state, const Tensor& cand_features,
                               const Tensor& tokens, DecoderParams& p,
                               DecoderStepCache* cache = nullptr);

// Backward through one decoder step. d_scores (1 x K) and d_next_state
// (1 x d_h) are the incoming gradients; d_state_in and d_cand (optional) are
// accumulated.
void decoder_step_backward(const DecoderStepCache& cache, DecoderParams& p,
                           const Tensor& d_scores, const Tensor& d_next_state,
                           Tensor* d_state_in, Tensor* d_cand);

}  // namespace lsa

#endif  // LSA_DECODER_HPP
