#include "lsa/decoder.hpp"

#include <cmath>

namespace lsa {

namespace {

Param uniform_param(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t = Tensor::zeros(rows, cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
  return Param(t);
}

AffineParams make_affine(std::size_t in, std::size_t out, RngStream& rng) {
  return AffineParams{uniform_param(in, out, rng), Param(Tensor::vec(out))};
}

LayerNormParams make_layer_norm(std::size_t d) {
  Tensor gain = Tensor::vec(d);
  gain.fill(1.0);
  return LayerNormParams{Param(gain), Param(Tensor::vec(d))};
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
  Tensor out = Tensor::zeros(top.rows() + bottom.rows(), top.cols());
  for (std::size_t i = 0; i < top.rows(); ++i)
    for (std::size_t j = 0; j < top.cols(); ++j) out(i, j) = top(i, j);
  for (std::size_t i = 0; i < bottom.rows(); ++i)
    for (std::size_t j = 0; j < top.cols(); ++j)
      out(top.rows() + i, j) = bottom(i, j);
  return out;
}

Tensor row_slice(const Tensor& x, std::size_t begin, std::size_t count) {
  Tensor out = Tensor::zeros(count, x.cols());
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(begin + i, j);
  return out;
}

// One residual single-head attention layer; in are the query rows, context
// the key/value rows.
Tensor attn_layer_forward(const Tensor& in, const Tensor& context,
                          AttnLayerParams& p, AttnLayerCache& cache) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.cols()));
  cache.in = in;
  cache.context = context;
  cache.q = affine(in, p.q);
  cache.keys = affine(context, p.k);
  cache.vals = affine(context, p.v);
  Tensor logits = matmul_transpose_b(cache.q, cache.keys);
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] *= scale;
  cache.attn = masked_softmax(logits, MaskMatrix::all_true(logits.rows(), logits.cols()));
  Tensor ctx = matmul(cache.attn, cache.vals);
  Tensor out = in;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += ctx[i];
  return out;
}

// d_attn_extra / d_vals_extra are additional gradients entering through the
// attention weights or the value projections (empty tensors to skip).
// d_context may alias d_in for self attention.
void attn_layer_backward(const AttnLayerCache& cache, AttnLayerParams& p,
                         const Tensor& d_out, const Tensor& d_attn_extra,
                         const Tensor& d_vals_extra, Tensor* d_in,
                         Tensor* d_context) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(cache.in.cols()));
  Tensor d_attn = matmul_transpose_b(d_out, cache.vals);
  if (d_attn_extra.size())
    for (std::size_t i = 0; i < d_attn.size(); ++i) d_attn[i] += d_attn_extra[i];
  Tensor d_vals = matmul_transpose_a(cache.attn, d_out);
  if (d_vals_extra.size())
    for (std::size_t i = 0; i < d_vals.size(); ++i) d_vals[i] += d_vals_extra[i];

  Tensor d_logits = Tensor::zeros(cache.attn.rows(), cache.attn.cols());
  masked_softmax_backward(cache.attn,
                          MaskMatrix::all_true(cache.attn.rows(), cache.attn.cols()),
                          d_attn, &d_logits);
  Tensor d_q = matmul(d_logits, cache.keys);
  Tensor d_keys = matmul_transpose_a(d_logits, cache.q);
  for (std::size_t i = 0; i < d_q.size(); ++i) d_q[i] *= scale;
  for (std::size_t i = 0; i < d_keys.size(); ++i) d_keys[i] *= scale;

  affine_backward(cache.in, p.q, d_q, d_in);
  affine_backward(cache.context, p.k, d_keys, d_context);
  affine_backward(cache.context, p.v, d_vals, d_context);
  if (d_in)
    for (std::size_t i = 0; i < d_out.size(); ++i) (*d_in)[i] += d_out[i];
}

}  // namespace

std::vector<Param*> DecoderParams::all() {
  std::vector<Param*> out = {&visual_proj.w, &visual_proj.b};
  for (auto& l : cross_layers)
    for (Param* p : {&l.q.w, &l.q.b, &l.k.w, &l.k.b, &l.v.w, &l.v.b})
      out.push_back(p);
  for (auto& l : self_layers)
    for (Param* p : {&l.q.w, &l.q.b, &l.k.w, &l.k.b, &l.v.w, &l.v.b})
      out.push_back(p);
  for (Param* p : {&state_proj.w, &state_proj.b, &ln_fuse.gain, &ln_fuse.bias,
                   &ln_state.gain, &ln_state.bias})
    out.push_back(p);
  return out;
}

void DecoderParams::zero_grads() {
  for (Param* p : all()) p->zero_grad();
}

DecoderParams make_decoder_params(const DecoderConfig& cfg, RngStream& rng) {
  if (cfg.layers < 1) throw ConfigError("decoder: layers must be >= 1");
  DecoderParams p;
  p.cfg = cfg;
  p.visual_proj = make_affine(cfg.d_view, cfg.d_h, rng);
  for (std::size_t l = 0; l < cfg.layers; ++l)
    p.cross_layers.push_back({make_affine(cfg.d_h, cfg.d_h, rng),
                              make_affine(cfg.d_h, cfg.d_h, rng),
                              make_affine(cfg.d_h, cfg.d_h, rng)});
  for (std::size_t l = 0; l < cfg.layers; ++l)
    p.self_layers.push_back({make_affine(cfg.d_h, cfg.d_h, rng),
                             make_affine(cfg.d_h, cfg.d_h, rng),
                             make_affine(cfg.d_h, cfg.d_h, rng)});
  p.state_proj = make_affine(2 * cfg.d_h, cfg.d_h, rng);
  p.ln_fuse = make_layer_norm(cfg.d_h);
  p.ln_state = make_layer_norm(cfg.d_h);
  return p;
}

Tensor project_visual(const Tensor& cand, const DecoderParams& p) {
  return affine(cand, p.visual_proj);
}

CrossAttnResult cross_attention(const Tensor& state, const Tensor& visual,
                                const Tensor& tokens, AttnLayerParams& p,
                                AttnLayerCache* cache) {
  if (tokens.rows() == 0)
    throw EvaluationError("cross_attention: empty instruction context");
  AttnLayerCache local;
  AttnLayerCache& c = cache ? *cache : local;
  Tensor in = concat_rows(state, visual);
  Tensor out = attn_layer_forward(in, tokens, p, c);
  CrossAttnResult res;
  res.out = out;
  res.state_x = row_slice(out, 0, 1);
  res.visual_x = row_slice(out, 1, visual.rows());
  res.lang_x = c.vals;
  res.attn_lang = row_slice(c.attn, 0, 1);
  return res;
}

SelfAttnResult self_attention(const Tensor& joined, AttnLayerParams& p,
                              AttnLayerCache* cache) {
  if (joined.rows() < 2)
    throw EvaluationError("self_attention: need the state row plus at least one candidate");
  AttnLayerCache local;
  AttnLayerCache& c = cache ? *cache : local;
  Tensor out = attn_layer_forward(joined, joined, p, c);
  const std::size_t k = joined.rows() - 1;
  SelfAttnResult res;
  res.out = out;
  res.state_s = row_slice(out, 0, 1);
  res.visual_s = row_slice(out, 1, k);
  res.attn_row = Tensor::zeros(1, k);
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) z += c.attn(0, j + 1);
  for (std::size_t j = 0; j < k; ++j) res.attn_row(0, j) = c.attn(0, j + 1) / z;
  return res;
}

Tensor update_state(const Tensor& state_s, const Tensor& lang_x,
                    const Tensor& visual_s, const Tensor& attn_lang,
                    const Tensor& attn_vis, DecoderParams& p,
                    StateUpdateCache* cache) {
  StateUpdateCache local;
  StateUpdateCache& c = cache ? *cache : local;
  c.lang_x = lang_x;
  c.visual_s = visual_s;
  c.attn_lang = attn_lang;
  c.attn_vis = attn_vis;
  c.sum_lang = matmul(attn_lang, lang_x);   // 1 x d_h
  c.sum_vis = matmul(attn_vis, visual_s);   // 1 x d_h
  c.fused = elementwise_mul(c.sum_lang, c.sum_vis);
  Tensor fn = layer_norm(c.fused, p.ln_fuse, kLayerNormEps, &c.ln_fuse_cache);
  c.concat = Tensor::zeros(1, 2 * state_s.cols());
  for (std::size_t j = 0; j < state_s.cols(); ++j) {
    c.concat(0, j) = state_s(0, j);
    c.concat(0, state_s.cols() + j) = fn(0, j);
  }
  Tensor pre = affine(c.concat, p.state_proj);
  return layer_norm(pre, p.ln_state, kLayerNormEps, &c.ln_state_cache);
}

std::size_t select_action(const Tensor& scores) {
  if (scores.size() == 0) throw EvaluationError("select_action: empty scores");
  if (!scores.all_finite())
    throw EvaluationError("select_action: non-finite score");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

DecoderStepResult decoder_step(const Tensor& state, const Tensor& cand_features,
                               const Tensor& tokens, DecoderParams& p,
                               DecoderStepCache* cache) {
  if (cand_features.rows() == 0)
    throw EvaluationError("decoder_step: no candidates");
  DecoderStepCache local;
  DecoderStepCache& c = cache ? *cache : local;
  c = DecoderStepCache{};
  c.cand = cand_features;
  c.visual = project_visual(cand_features, p);

  Tensor cur_state = state;
  Tensor cur_visual = c.visual;
  CrossAttnResult cres;
  c.cross.resize(p.cross_layers.size());
  for (std::size_t l = 0; l < p.cross_layers.size(); ++l) {
    cres = cross_attention(cur_state, cur_visual, tokens, p.cross_layers[l],
                           &c.cross[l]);
    cur_state = cres.state_x;
    cur_visual = cres.visual_x;
  }
  c.lang_x = cres.lang_x;
  c.attn_lang = cres.attn_lang;

  Tensor joined = cres.out;
  SelfAttnResult sres;
  c.self.resize(p.self_layers.size());
  for (std::size_t l = 0; l < p.self_layers.size(); ++l) {
    sres = self_attention(joined, p.self_layers[l], &c.self[l]);
    joined = sres.out;
  }
  c.attn_row_raw = row_slice(c.self.back().attn, 0, 1);
  c.scores = sres.attn_row;

  DecoderStepResult res;
  res.scores = sres.attn_row;
  res.chosen = select_action(res.scores);
  res.next_state = update_state(sres.state_s, c.lang_x, sres.visual_s,
                                c.attn_lang, sres.attn_row, p, &c.update);
  return res;
}

void decoder_step_backward(const DecoderStepCache& cache, DecoderParams& p,
                           const Tensor& d_scores, const Tensor& d_next_state,
                           Tensor* d_state_in, Tensor* d_cand) {
  const std::size_t d_h = p.cfg.d_h;
  const std::size_t k = cache.cand.rows();

  // -- update_state backward --
  Tensor d_state_s = Tensor::zeros(1, d_h);
  Tensor d_visual_s = Tensor::zeros(k, d_h);
  Tensor d_lang_x = Tensor::zeros(cache.lang_x.rows(), d_h);
  Tensor d_attn_lang = Tensor::zeros(1, cache.lang_x.rows());
  Tensor d_attn_vis = Tensor::zeros(1, k);
  {
    const StateUpdateCache& u = cache.update;
    Tensor d_pre = Tensor::zeros(1, d_h);
    layer_norm_backward(u.ln_state_cache, p.ln_state, d_next_state, &d_pre);
    Tensor d_concat = Tensor::zeros(1, 2 * d_h);
    affine_backward(u.concat, p.state_proj, d_pre, &d_concat);
    Tensor d_fn = Tensor::zeros(1, d_h);
    for (std::size_t j = 0; j < d_h; ++j) {
      d_state_s(0, j) += d_concat(0, j);
      d_fn(0, j) = d_concat(0, d_h + j);
    }
    Tensor d_fused = Tensor::zeros(1, d_h);
    layer_norm_backward(u.ln_fuse_cache, p.ln_fuse, d_fn, &d_fused);
    Tensor d_sum_lang = elementwise_mul(d_fused, u.sum_vis);
    Tensor d_sum_vis = elementwise_mul(d_fused, u.sum_lang);
    // sum_lang = attn_lang * lang_x
    matmul_backward(u.attn_lang, u.lang_x, d_sum_lang, &d_attn_lang, &d_lang_x);
    matmul_backward(u.attn_vis, u.visual_s, d_sum_vis, &d_attn_vis, &d_visual_s);
  }

  // -- action-score path --
  for (std::size_t j = 0; j < k; ++j) d_attn_vis(0, j) += d_scores(0, j);

  // Renormalization backward: r_j = a_{j+1} / sum(a_1..a_K).
  Tensor d_attn_raw = Tensor::zeros(1, k + 1);
  {
    double z = 0.0, s = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += cache.attn_row_raw(0, j + 1);
    for (std::size_t j = 0; j < k; ++j)
      s += d_attn_vis(0, j) * cache.attn_row_raw(0, j + 1) / z;
    for (std::size_t j = 0; j < k; ++j)
      d_attn_raw(0, j + 1) = (d_attn_vis(0, j) - s) / z;
  }

  // -- self attention stack backward --
  Tensor d_joined = Tensor::zeros(k + 1, d_h);
  for (std::size_t j = 0; j < d_h; ++j) d_joined(0, j) = d_state_s(0, j);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d_h; ++j) d_joined(i + 1, j) = d_visual_s(i, j);
  for (std::size_t l = cache.self.size(); l-- > 0;) {
    Tensor d_attn_extra;
    if (l + 1 == cache.self.size()) {
      d_attn_extra = Tensor::zeros(k + 1, k + 1);
      for (std::size_t j = 0; j <= k; ++j) d_attn_extra(0, j) = d_attn_raw(0, j);
    }
    Tensor d_in = Tensor::zeros(k + 1, d_h);
    attn_layer_backward(cache.self[l], p.self_layers[l], d_joined, d_attn_extra,
                        Tensor{}, &d_in, &d_in);
    d_joined = d_in;
  }

  // -- cross attention stack backward --
  Tensor d_cross_out = d_joined;
  for (std::size_t l = cache.cross.size(); l-- > 0;) {
    Tensor d_attn_extra, d_vals_extra;
    if (l + 1 == cache.cross.size()) {
      d_attn_extra = Tensor::zeros(k + 1, cache.lang_x.rows());
      for (std::size_t j = 0; j < cache.lang_x.rows(); ++j)
        d_attn_extra(0, j) = d_attn_lang(0, j);
      d_vals_extra = d_lang_x;
    }
    Tensor d_in = Tensor::zeros(k + 1, d_h);
    attn_layer_backward(cache.cross[l], p.cross_layers[l], d_cross_out,
                        d_attn_extra, d_vals_extra, &d_in, nullptr);
    d_cross_out = d_in;
  }

  // Split the first cross layer's input gradient.
  if (d_state_in)
    for (std::size_t j = 0; j < d_h; ++j) (*d_state_in)(0, j) += d_cross_out(0, j);
  Tensor d_visual = row_slice(d_cross_out, 1, k);
  affine_backward(cache.cand, p.visual_proj, d_visual, d_cand);
}

}  // namespace lsa
