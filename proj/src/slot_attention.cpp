#include "lsa/slot_attention.hpp"

#include <cmath>

namespace lsa {

namespace {

Tensor image_block(const Tensor& x, std::size_t d_image) {
  Tensor out = Tensor::zeros(x.rows(), d_image);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < d_image; ++j) out(i, j) = x(i, j);
  return out;
}

void set_image_block(Tensor& x, const Tensor& img) {
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < img.cols(); ++j) x(i, j) = img(i, j);
}

Param uniform_param(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
  return Param(t);
}

Param zero_vec_param(std::size_t n) { return Param(Tensor::vec(n)); }

AffineParams make_affine(std::size_t in, std::size_t out, RngStream& rng) {
  return AffineParams{uniform_param(in, out, rng), zero_vec_param(out)};
}

LayerNormParams make_layer_norm(std::size_t d) {
  Tensor gain = Tensor::vec(d);
  gain.fill(1.0);
  return LayerNormParams{Param(gain), Param(Tensor::vec(d))};
}

}  // namespace

std::vector<Param*> SlotAttnParams::all() {
  return {&q.w,      &q.b,      &k.w,          &k.b,          &v.w,
          &v.b,      &gru.w_z,  &gru.u_z,      &gru.b_z,      &gru.w_r,
          &gru.u_r,  &gru.b_r,  &gru.w_n,      &gru.u_n,      &gru.b_n,
          &mlp.first.w,  &mlp.first.b,  &mlp.second.w, &mlp.second.b,
          &ln_input.gain, &ln_input.bias, &ln_slots.gain, &ln_slots.bias,
          &ln_pre_mlp.gain, &ln_pre_mlp.bias};
}

void SlotAttnParams::zero_grads() {
  for (Param* p : all()) p->zero_grad();
}

SlotAttnParams make_slot_attn_params(const SlotAttnConfig& cfg, RngStream& rng) {
  SlotAttnParams p;
  p.cfg = cfg;
  const std::size_t d_v = cfg.dims.d_view();
  const std::size_t d_i = cfg.dims.d_image;
  p.q = make_affine(d_v, cfg.qk_width(), rng);
  p.k = make_affine(d_v, cfg.qk_width(), rng);
  p.v = make_affine(d_i, d_i, rng);
  p.gru.w_z = uniform_param(d_i, d_i, rng);
  p.gru.u_z = uniform_param(d_i, d_i, rng);
  p.gru.b_z = zero_vec_param(d_i);
  p.gru.w_r = uniform_param(d_i, d_i, rng);
  p.gru.u_r = uniform_param(d_i, d_i, rng);
  p.gru.b_r = zero_vec_param(d_i);
  p.gru.w_n = uniform_param(d_i, d_i, rng);
  p.gru.u_n = uniform_param(d_i, d_i, rng);
  p.gru.b_n = zero_vec_param(d_i);
  p.mlp.first = make_affine(d_i, cfg.hidden_width(), rng);
  p.mlp.second = make_affine(cfg.hidden_width(), d_i, rng);
  p.ln_input = make_layer_norm(d_i);
  p.ln_slots = make_layer_norm(d_i);
  p.ln_pre_mlp = make_layer_norm(d_i);
  return p;
}

Tensor drop_feat(const Tensor& x, std::size_t d_image, double p, RngStream& rng,
                 bool training, Tensor* scale_out) {
  if (x.cols() < d_image)
    throw DimensionError("drop_feat: width " + x.shape_str() +
                         " smaller than image width " + std::to_string(d_image));
  Tensor img = image_block(x, d_image);
  Tensor img_scale;
  Tensor img_dropped = dropout(img, p, rng, training, &img_scale);
  Tensor out = x;
  set_image_block(out, img_dropped);
  if (scale_out) {
    *scale_out = x;
    scale_out->fill(1.0);
    set_image_block(*scale_out, img_scale);
  }
  return out;
}

Tensor partial_layer_norm(const Tensor& x, std::size_t d_image,
                          const LayerNormParams& p, double eps,
                          LayerNormCache* cache) {
  if (x.cols() < d_image)
    throw DimensionError("partial_layer_norm: width " + x.shape_str() +
                         " smaller than image width " + std::to_string(d_image));
  Tensor img = layer_norm(image_block(x, d_image), p, eps, cache);
  Tensor out = x;
  set_image_block(out, img);
  return out;
}

Tensor slot_attention_forward(const PanoramaGrid& grid,
                              const std::vector<CandidateView>& candidates,
                              const MaskMatrix& mask, SlotAttnParams& params,
                              RngStream& rng, bool training,
                              SlotAttnCache* cache, AttentionTrace* trace) {
  return slot_attention_forward_stacked(grid.stacked(),
                                        stack_candidates(candidates), mask,
                                        params, rng, training, cache, trace);
}

Tensor slot_attention_forward_stacked(const Tensor& grid_features,
                                      const Tensor& cand_features,
                                      const MaskMatrix& mask,
                                      SlotAttnParams& params, RngStream& rng,
                                      bool training, SlotAttnCache* cache,
                                      AttentionTrace* trace) {
  const SlotAttnConfig& cfg = params.cfg;
  const std::size_t d_i = cfg.dims.d_image;
  const std::size_t d_v = cfg.dims.d_view();
  const std::size_t n_views = grid_features.rows();
  const std::size_t k_slots = cand_features.rows();
  if (grid_features.cols() != d_v || cand_features.cols() != d_v)
    throw DimensionError("slot_attention: feature width mismatch, grid " +
                         grid_features.shape_str() + " candidates " +
                         cand_features.shape_str() + " expected width " +
                         std::to_string(d_v));
  if (mask.n_views != n_views || mask.n_slots != k_slots)
    throw DimensionError("slot_attention: mask " + std::to_string(mask.n_views) +
                         "x" + std::to_string(mask.n_slots) +
                         " does not match N=" + std::to_string(n_views) +
                         " K=" + std::to_string(k_slots));

  // The degenerate iteration count is the clean no-op baseline: the residual
  // contribution is defined as zero and no random draws are consumed.
  if (cfg.iterations == 0) {
    if (cache) *cache = SlotAttnCache{};
    if (trace) *trace = AttentionTrace{};
    return cand_features;
  }

  SlotAttnCache local;
  SlotAttnCache& c = cache ? *cache : local;
  c = SlotAttnCache{};
  c.cand = cand_features;
  c.key_in = grid_features;

  Tensor slots = drop_feat(cand_features, d_i, cfg.dropout_p, rng, training,
                           &c.drop_q_scale);

  c.key_ln = partial_layer_norm(grid_features, d_i, params.ln_input,
                                kLayerNormEps, &c.ln_key_cache);
  c.key_dp = drop_feat(c.key_ln, d_i, cfg.dropout_p, rng, training,
                       &c.key_drop_scale);
  c.keys = affine(c.key_dp, params.k);

  Tensor val_ln = layer_norm(image_block(grid_features, d_i), params.ln_input,
                             kLayerNormEps, &c.ln_val_cache);
  c.val_dp = dropout(val_ln, cfg.dropout_p, rng, training, &c.val_drop_scale);
  c.values = affine(c.val_dp, params.v);

  const double scale = 1.0 / std::sqrt(static_cast<double>(d_v));
  if (trace) *trace = AttentionTrace{};

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    SlotAttnIterCache it;
    it.slots_in = slots;
    Tensor slots_prev = image_block(slots, d_i);
    it.slots_norm = partial_layer_norm(slots, d_i, params.ln_slots,
                                       kLayerNormEps, &it.ln_slots_cache);
    it.qproj = affine(it.slots_norm, params.q);
    it.logits = matmul_transpose_b(c.keys, it.qproj);  // N x K
    for (std::size_t i = 0; i < it.logits.size(); ++i) it.logits[i] *= scale;
    it.attn = masked_softmax(it.logits, mask);
    it.updates = matmul_transpose_a(it.attn, c.values);  // K x d_i

    Tensor img;
    if (!cfg.literal_alg1) {
      it.gru_out = gru_cell(slots_prev, it.updates, params.gru, &it.gru_cache);
      it.mlp_in = it.gru_out;
      Tensor normed = layer_norm(it.mlp_in, params.ln_pre_mlp, kLayerNormEps,
                                 &it.ln_pre_cache);
      Tensor delta = mlp(normed, params.mlp, &it.mlp_cache);
      img = it.gru_out;
      for (std::size_t i = 0; i < img.size(); ++i) img[i] += delta[i];
    } else {
      // Pseudocode-literal path: residual on the attention updates, on top of
      // the normalized slots; the GRU state is computed but never consumed,
      // so it is skipped entirely.
      it.mlp_in = it.updates;
      Tensor normed = layer_norm(it.mlp_in, params.ln_pre_mlp, kLayerNormEps,
                                 &it.ln_pre_cache);
      Tensor delta = mlp(normed, params.mlp, &it.mlp_cache);
      img = image_block(it.slots_norm, d_i);
      for (std::size_t i = 0; i < img.size(); ++i) img[i] += delta[i];
    }
    set_image_block(slots, img);

    if (trace) {
      trace->attn.push_back(it.attn);
      trace->updates.push_back(it.updates);
    }
    c.iters.push_back(std::move(it));
  }

  // Residual image update on the original candidate features; angle columns
  // are copied from the input untouched.
  Tensor out = cand_features;
  for (std::size_t i = 0; i < k_slots; ++i)
    for (std::size_t j = 0; j < d_i; ++j) out(i, j) += slots(i, j);
  return out;
}

void slot_attention_backward(const SlotAttnCache& cache, const MaskMatrix& mask,
                             SlotAttnParams& params, const Tensor& d_out) {
  if (cache.iters.empty()) return;  // iterations == 0 contributes nothing
  const SlotAttnConfig& cfg = params.cfg;
  const std::size_t d_i = cfg.dims.d_image;
  const std::size_t d_v = cfg.dims.d_view();
  const std::size_t n_views = cache.key_in.rows();
  const std::size_t k_slots = cache.cand.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_v));

  Tensor d_img = image_block(d_out, d_i);  // gradient on the final slot image
  Tensor d_keys = Tensor::zeros(n_views, cfg.qk_width());
  Tensor d_values = Tensor::zeros(n_views, d_i);

  for (std::size_t t = cache.iters.size(); t-- > 0;) {
    const SlotAttnIterCache& it = cache.iters[t];
    Tensor d_updates = Tensor::zeros(k_slots, d_i);
    Tensor d_slots_norm = Tensor::zeros(k_slots, d_v);
    Tensor d_slots_prev = Tensor::zeros(k_slots, d_i);

    Tensor d_mlp_in = Tensor::zeros(k_slots, d_i);
    {
      Tensor d_normed = Tensor::zeros(k_slots, d_i);
      MlpCache mlp_cache = it.mlp_cache;
      mlp_backward(mlp_cache, params.mlp, d_img, &d_normed);
      layer_norm_backward(it.ln_pre_cache, params.ln_pre_mlp, d_normed, &d_mlp_in);
    }

    if (!cfg.literal_alg1) {
      // img = gru_out + mlp(ln(gru_out))
      Tensor d_gru_out = d_img;
      for (std::size_t i = 0; i < d_gru_out.size(); ++i)
        d_gru_out[i] += d_mlp_in[i];
      gru_cell_backward(it.gru_cache, params.gru, d_gru_out, &d_slots_prev,
                        &d_updates);
    } else {
      // img = slots_norm_image + mlp(ln(updates))
      for (std::size_t i = 0; i < k_slots; ++i)
        for (std::size_t j = 0; j < d_i; ++j)
          d_slots_norm(i, j) += d_img(i, j);
      for (std::size_t i = 0; i < d_updates.size(); ++i)
        d_updates[i] += d_mlp_in[i];
    }

    // updates = attn^T * values
    Tensor d_attn = matmul_transpose_b(cache.values, d_updates);  // N x K
    {
      Tensor dv = matmul(it.attn, d_updates);  // N x d_i
      for (std::size_t i = 0; i < dv.size(); ++i) d_values[i] += dv[i];
    }
    Tensor d_logits = Tensor::zeros(n_views, k_slots);
    masked_softmax_backward(it.attn, mask, d_attn, &d_logits);

    // logits = scale * keys * qproj^T
    {
      Tensor dk = matmul(d_logits, it.qproj);  // N x qk
      for (std::size_t i = 0; i < dk.size(); ++i) d_keys[i] += scale * dk[i];
      Tensor d_qproj = matmul_transpose_a(d_logits, cache.keys);  // K x qk
      for (std::size_t i = 0; i < d_qproj.size(); ++i) d_qproj[i] *= scale;
      affine_backward(it.slots_norm, params.q, d_qproj, &d_slots_norm);
    }

    // Partial layer norm over the image block of slots_in.
    Tensor d_slots_in_img = Tensor::zeros(k_slots, d_i);
    layer_norm_backward(it.ln_slots_cache, params.ln_slots,
                        image_block(d_slots_norm, d_i), &d_slots_in_img);

    // Carry the gradient to the previous iteration's image block.
    d_img = d_slots_in_img;
    for (std::size_t i = 0; i < d_img.size(); ++i) d_img[i] += d_slots_prev[i];
  }

  // Key path: keys = affine(dropfeat(partial_ln(grid)), k).
  {
    Tensor d_key_dp = Tensor::zeros(n_views, d_v);
    affine_backward(cache.key_dp, params.k, d_keys, &d_key_dp);
    Tensor d_key_ln = elementwise_mul(d_key_dp, cache.key_drop_scale);
    layer_norm_backward(cache.ln_key_cache, params.ln_input,
                        image_block(d_key_ln, d_i), nullptr);
  }
  // Value path: values = affine(dropout(ln(grid_images)), v).
  {
    Tensor d_val_dp = Tensor::zeros(n_views, d_i);
    affine_backward(cache.val_dp, params.v, d_values, &d_val_dp);
    Tensor d_val_ln = elementwise_mul(d_val_dp, cache.val_drop_scale);
    layer_norm_backward(cache.ln_val_cache, params.ln_input, d_val_ln, nullptr);
  }
}

}  // namespace lsa
