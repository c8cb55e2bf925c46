#ifndef LSA_SLOT_ATTENTION_HPP
#define LSA_SLOT_ATTENTION_HPP

#include <vector>

#include "lsa/mask.hpp"
#include "lsa/ops.hpp"
#include "lsa/view_geometry.hpp"

namespace lsa {

struct SlotAttnConfig {
  FeatureDims dims;
  std::size_t d_qk = 0;        // query/key projection width; 0 means d_image
  std::size_t mlp_hidden = 0;  // 0 means d_image
  double dropout_p = 0.7;
  std::size_t iterations = 3;
  // Algorithm-literal update: the GRU output is discarded and the residual
  // MLP acts on the attention updates. Default is the reconciled update
  // where the GRU output becomes the slot state before the MLP residual.
  bool literal_alg1 = false;

  std::size_t qk_width() const { return d_qk ? d_qk : dims.d_image; }
  std::size_t hidden_width() const { return mlp_hidden ? mlp_hidden : dims.d_image; }
};

struct SlotAttnParams {
  SlotAttnConfig cfg;
  AffineParams q, k;  // d_view -> qk_width
  AffineParams v;     // d_image -> d_image (value width closes the GRU/MLP loop)
  GruParams gru;      // over d_image
  MlpParams mlp;      // d_image -> hidden -> d_image
  LayerNormParams ln_input;    // shared by the key and value paths (image part)
  LayerNormParams ln_slots;    // slot image block, inside the loop
  LayerNormParams ln_pre_mlp;  // before the residual MLP

  std::vector<Param*> all();
  void zero_grads();
};

SlotAttnParams make_slot_attn_params(const SlotAttnConfig& cfg, RngStream& rng);

// Per-iteration attention matrices (36 x K) and update tensors (K x d_image).
struct AttentionTrace {
  std::vector<Tensor> attn;
  std::vector<Tensor> updates;
};

struct SlotAttnIterCache {
  Tensor slots_in;  // K x d_view at the top of the iteration
  LayerNormCache ln_slots_cache;
  Tensor slots_norm;  // K x d_view
  Tensor qproj;       // K x qk_width
  Tensor logits;      // N x K
  Tensor attn;        // N x K
  Tensor updates;     // K x d_image
  GruCache gru_cache;
  Tensor gru_out;     // K x d_image (reconciled mode only)
  Tensor mlp_in;      // input of the pre-MLP layer norm
  LayerNormCache ln_pre_cache;
  MlpCache mlp_cache;
};

struct SlotAttnCache {
  Tensor cand;          // K x d_view input
  Tensor drop_q_scale;  // K x d_view
  Tensor key_in;        // N x d_view grid features
  LayerNormCache ln_key_cache;
  Tensor key_ln, key_drop_scale, key_dp;  // N x d_view
  LayerNormCache ln_val_cache;
  Tensor val_drop_scale, val_dp;  // N x d_image
  Tensor keys;    // N x qk_width
  Tensor values;  // N x d_image
  std::vector<SlotAttnIterCache> iters;
};

// Dropout restricted to the image columns [0, d_image); angle columns pass
// through untouched.
Tensor drop_feat(const Tensor& x, std::size_t d_image, double p, RngStream& rng,
                 bool training, Tensor* scale_out = nullptr);

// Layer norm over the image columns only; angle columns pass through.
Tensor partial_layer_norm(const Tensor& x, std::size_t d_image,
                          const LayerNormParams& p, double eps = kLayerNormEps,
                          LayerNormCache* cache = nullptr);

// Iterative masked slot attention. Slots are initialized from the candidate
// features; the image block is refined for cfg.iterations rounds while the
// angle block stays bit-identical; the output adds the refined slots to the
// input image features residually. iterations == 0 returns the input
// unchanged. cache (optional) is required for the backward pass.
Tensor slot_attention_forward(const PanoramaGrid& grid,
                              const std::vector<CandidateView>& candidates,
                              const MaskMatrix& mask, SlotAttnParams& params,
                              RngStream& rng, bool training,
                              SlotAttnCache* cache = nullptr,
                              AttentionTrace* trace = nullptr);

// As above but taking pre-stacked feature matrices (grid: N x d_view,
// candidates: K x d_view).
Tensor slot_attention_forward_stacked(const Tensor& grid_features,
                                      const Tensor& cand_features,
                                      const MaskMatrix& mask,
                                      SlotAttnParams& params, RngStream& rng,
                                      bool training,
                                      SlotAttnCache* cache = nullptr,
                                      AttentionTrace* trace = nullptr);

// Accumulates parameter gradients for d(loss)/d(output) = d_out. Gradients
// with respect to the inputs are not produced (inputs are data, not
// parameters).
void slot_attention_backward(const SlotAttnCache& cache, const MaskMatrix& mask,
                             SlotAttnParams& params, const Tensor& d_out);

}  // namespace lsa

#endif  // LSA_SLOT_ATTENTION_HPP
