#include "lsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lsa {

namespace {

void check_matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + a.shape_str() +
                         " vs " + b.shape_str());
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_matmul(a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a(i, l);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += av * b(l, j);
    }
  return c;
}

Tensor matmul_transpose_a(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw DimensionError("matmul_transpose_a: outer dimensions disagree, " +
                         a.shape_str() + " vs " + b.shape_str());
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a(l, i);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += av * b(l, j);
    }
  return c;
}

Tensor matmul_transpose_b(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw DimensionError("matmul_transpose_b: inner dimensions disagree, " +
                         a.shape_str() + " vs " + b.shape_str());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a(i, l) * b(j, l);
      c(i, j) = s;
    }
  return c;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_c,
                     Tensor* d_a, Tensor* d_b) {
  if (d_a) {
    Tensor da = matmul_transpose_b(d_c, b);
    for (std::size_t i = 0; i < da.size(); ++i) (*d_a)[i] += da[i];
  }
  if (d_b) {
    Tensor db = matmul_transpose_a(a, d_c);
    for (std::size_t i = 0; i < db.size(); ++i) (*d_b)[i] += db[i];
  }
}

Tensor affine(const Tensor& x, const AffineParams& p) {
  Tensor y = matmul(x, p.w.value);
  if (p.b.value.size() != y.cols())
    throw DimensionError("affine: bias width " + p.b.value.shape_str() +
                         " does not match output " + y.shape_str());
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += p.b.value[j];
  return y;
}

void affine_backward(const Tensor& x, AffineParams& p, const Tensor& d_y, Tensor* d_x) {
  matmul_backward(x, p.w.value, d_y, nullptr, &p.w.grad);
  if (d_x) {
    Tensor dx = matmul_transpose_b(d_y, p.w.value);
    for (std::size_t i = 0; i < dx.size(); ++i) (*d_x)[i] += dx[i];
  }
  for (std::size_t i = 0; i < d_y.rows(); ++i)
    for (std::size_t j = 0; j < d_y.cols(); ++j) p.b.grad[j] += d_y(i, j);
}

Tensor masked_softmax(const Tensor& logits, const MaskMatrix& mask) {
  if (logits.rows() != mask.n_views || logits.cols() != mask.n_slots)
    throw DimensionError("masked_softmax: logits " + logits.shape_str() +
                         " vs mask " + std::to_string(mask.n_views) + "x" +
                         std::to_string(mask.n_slots));
  Tensor out = Tensor::zeros(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double max_v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.cols(); ++j)
      if (mask.at(i, j)) max_v = std::max(max_v, logits(i, j));
    if (!std::isfinite(max_v)) continue;  // fully masked row stays all-zero
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j)
      if (mask.at(i, j)) denom += std::exp(logits(i, j) - max_v);
    for (std::size_t j = 0; j < logits.cols(); ++j)
      if (mask.at(i, j)) out(i, j) = std::exp(logits(i, j) - max_v) / denom;
  }
  return out;
}

void masked_softmax_backward(const Tensor& attn, const MaskMatrix& mask,
                             const Tensor& d_attn, Tensor* d_logits) {
  for (std::size_t i = 0; i < attn.rows(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < attn.cols(); ++j)
      if (mask.at(i, j)) dot += attn(i, j) * d_attn(i, j);
    for (std::size_t j = 0; j < attn.cols(); ++j)
      if (mask.at(i, j)) (*d_logits)(i, j) += attn(i, j) * (d_attn(i, j) - dot);
  }
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& p, double eps,
                  LayerNormCache* cache) {
  const std::size_t d = x.cols();
  if (d < 2) throw DimensionError("layer_norm: degenerate dimension " + x.shape_str());
  if (p.gain.value.size() != d || p.bias.value.size() != d)
    throw DimensionError("layer_norm: affine width mismatch for " + x.shape_str());
  Tensor y = Tensor::zeros(x.rows(), d);
  Tensor xhat = Tensor::zeros(x.rows(), d);
  std::vector<double> inv_std(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (x(i, j) - mean) * is;
      y(i, j) = p.gain.value[j] * xhat(i, j) + p.bias.value[j];
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

void layer_norm_backward(const LayerNormCache& cache, LayerNormParams& p,
                         const Tensor& d_y, Tensor* d_x) {
  const Tensor& xhat = cache.xhat;
  const std::size_t d = xhat.cols();
  for (std::size_t i = 0; i < xhat.rows(); ++i) {
    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double dxh = d_y(i, j) * p.gain.value[j];
      sum_dxh += dxh;
      sum_dxh_xh += dxh * xhat(i, j);
      p.gain.grad[j] += d_y(i, j) * xhat(i, j);
      p.bias.grad[j] += d_y(i, j);
    }
    if (!d_x) continue;
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j) {
      double dxh = d_y(i, j) * p.gain.value[j];
      (*d_x)(i, j) += cache.inv_std[i] *
                      (dxh - inv_d * sum_dxh - inv_d * xhat(i, j) * sum_dxh_xh);
    }
  }
}

Tensor gru_cell(const Tensor& state, const Tensor& input, const GruParams& p,
                GruCache* cache) {
  if (!state.same_shape(input))
    throw DimensionError("gru_cell: state " + state.shape_str() +
                         " vs input " + input.shape_str());
  Tensor az = matmul(input, p.w_z.value);
  Tensor ar = matmul(input, p.w_r.value);
  Tensor an_x = matmul(input, p.w_n.value);
  Tensor hz = matmul(state, p.u_z.value);
  Tensor hr = matmul(state, p.u_r.value);
  Tensor hn = matmul(state, p.u_n.value);
  const std::size_t rows = state.rows(), d = state.cols();
  Tensor z = Tensor::zeros(rows, d), r = Tensor::zeros(rows, d),
         n = Tensor::zeros(rows, d), out = Tensor::zeros(rows, d);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      z(i, j) = sigmoid(az(i, j) + hz(i, j) + p.b_z.value[j]);
      r(i, j) = sigmoid(ar(i, j) + hr(i, j) + p.b_r.value[j]);
      n(i, j) = std::tanh(an_x(i, j) + r(i, j) * hn(i, j) + p.b_n.value[j]);
      out(i, j) = (1.0 - z(i, j)) * n(i, j) + z(i, j) * state(i, j);
    }
  if (cache) {
    cache->h = state;
    cache->x = input;
    cache->z = z;
    cache->r = r;
    cache->n = n;
    cache->hn = std::move(hn);
  }
  return out;
}

void gru_cell_backward(const GruCache& cache, GruParams& p, const Tensor& d_out,
                       Tensor* d_state, Tensor* d_input) {
  const std::size_t rows = cache.h.rows(), d = cache.h.cols();
  Tensor daz = Tensor::zeros(rows, d), dar = Tensor::zeros(rows, d),
         dan = Tensor::zeros(rows, d), dhn = Tensor::zeros(rows, d);
  Tensor dh = Tensor::zeros(rows, d);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double z = cache.z(i, j), r = cache.r(i, j), n = cache.n(i, j);
      const double go = d_out(i, j);
      const double dz = go * (cache.h(i, j) - n);
      const double dn = go * (1.0 - z);
      dh(i, j) += go * z;
      const double dan_v = dn * (1.0 - n * n);
      dan(i, j) = dan_v;
      const double dr = dan_v * cache.hn(i, j);
      dhn(i, j) = dan_v * r;
      daz(i, j) = dz * z * (1.0 - z);
      dar(i, j) = dr * r * (1.0 - r);
    }
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      p.b_z.grad[j] += daz(i, j);
      p.b_r.grad[j] += dar(i, j);
      p.b_n.grad[j] += dan(i, j);
    }
  matmul_backward(cache.x, p.w_z.value, daz, nullptr, &p.w_z.grad);
  matmul_backward(cache.x, p.w_r.value, dar, nullptr, &p.w_r.grad);
  matmul_backward(cache.x, p.w_n.value, dan, nullptr, &p.w_n.grad);
  matmul_backward(cache.h, p.u_z.value, daz, nullptr, &p.u_z.grad);
  matmul_backward(cache.h, p.u_r.value, dar, nullptr, &p.u_r.grad);
  matmul_backward(cache.h, p.u_n.value, dhn, nullptr, &p.u_n.grad);
  if (d_input) {
    Tensor dx = matmul_transpose_b(daz, p.w_z.value);
    Tensor dx2 = matmul_transpose_b(dar, p.w_r.value);
    Tensor dx3 = matmul_transpose_b(dan, p.w_n.value);
    for (std::size_t i = 0; i < dx.size(); ++i)
      (*d_input)[i] += dx[i] + dx2[i] + dx3[i];
  }
  if (d_state) {
    Tensor dh2 = matmul_transpose_b(daz, p.u_z.value);
    Tensor dh3 = matmul_transpose_b(dar, p.u_r.value);
    Tensor dh4 = matmul_transpose_b(dhn, p.u_n.value);
    for (std::size_t i = 0; i < dh.size(); ++i)
      (*d_state)[i] += dh[i] + dh2[i] + dh3[i] + dh4[i];
  }
}

Tensor mlp(const Tensor& x, const MlpParams& p, MlpCache* cache) {
  Tensor pre = affine(x, p.first);
  Tensor hidden = pre;
  for (std::size_t i = 0; i < hidden.size(); ++i)
    hidden[i] = std::max(0.0, hidden[i]);
  Tensor y = affine(hidden, p.second);
  if (cache) {
    cache->x = x;
    cache->pre = std::move(pre);
  }
  return y;
}

void mlp_backward(const MlpCache& cache, MlpParams& p, const Tensor& d_y, Tensor* d_x) {
  Tensor hidden = cache.pre;
  for (std::size_t i = 0; i < hidden.size(); ++i)
    hidden[i] = std::max(0.0, hidden[i]);
  Tensor d_hidden = Tensor::zeros(hidden.rows(), hidden.cols());
  affine_backward(hidden, p.second, d_y, &d_hidden);
  for (std::size_t i = 0; i < d_hidden.size(); ++i)
    if (cache.pre[i] <= 0.0) d_hidden[i] = 0.0;
  affine_backward(cache.x, p.first, d_hidden, d_x);
}

Tensor dropout(const Tensor& x, double p, RngStream& rng, bool training,
               Tensor* scale_out) {
  if (p < 0.0 || p >= 1.0)
    throw ConfigError("dropout: probability must be in [0,1), got " + std::to_string(p));
  if (!training || p == 0.0) {
    if (scale_out) {
      *scale_out = x;
      scale_out->fill(1.0);
    }
    return x;
  }
  Tensor y = x;
  Tensor scale = x;
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (rng.uniform() < p) {
      y[i] = 0.0;
      scale[i] = 0.0;
    } else {
      y[i] *= keep_scale;
      scale[i] = keep_scale;
    }
  }
  if (scale_out) *scale_out = std::move(scale);
  return y;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw DimensionError("elementwise_mul: " + a.shape_str() + " vs " + b.shape_str());
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= b[i];
  return c;
}

}  // namespace lsa
