#ifndef LSA_OPS_HPP
#define LSA_OPS_HPP

#include <cstddef>
#include <vector>

#include "lsa/mask.hpp"
#include "lsa/tensor.hpp"

namespace lsa {

constexpr double kLayerNormEps = 1e-5;

// ---- matmul -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_transpose_a(const Tensor& a, const Tensor& b);  // a^T * b
Tensor matmul_transpose_b(const Tensor& a, const Tensor& b);  // a * b^T

// Accumulates dA += dC * B^T and dB += A^T * dC. Either output may be null.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_c,
                     Tensor* d_a, Tensor* d_b);

// ---- affine y = x * W + b ----------------------------------------------

struct AffineParams {
  Param w;  // in x out
  Param b;  // out
};

Tensor affine(const Tensor& x, const AffineParams& p);
// Accumulates into p.w.grad / p.b.grad; d_x (optional) is accumulated.
void affine_backward(const Tensor& x, AffineParams& p, const Tensor& d_y, Tensor* d_x);

// ---- masked softmax over the slot axis ---------------------------------

// logits is n_views x n_slots; softmax runs across slots within each view row.
// Masked-out entries get probability exactly 0. A row with every slot masked
// is all-zero rather than NaN.
Tensor masked_softmax(const Tensor& logits, const MaskMatrix& mask);
void masked_softmax_backward(const Tensor& attn, const MaskMatrix& mask,
                             const Tensor& d_attn, Tensor* d_logits);

// ---- layer norm ---------------------------------------------------------

struct LayerNormParams {
  Param gain;  // D
  Param bias;  // D
};

struct LayerNormCache {
  Tensor xhat;                  // normalized pre-affine values
  std::vector<double> inv_std;  // per row
};

Tensor layer_norm(const Tensor& x, const LayerNormParams& p,
                  double eps = kLayerNormEps, LayerNormCache* cache = nullptr);
void layer_norm_backward(const LayerNormCache& cache, LayerNormParams& p,
                         const Tensor& d_y, Tensor* d_x);

// ---- GRU cell -----------------------------------------------------------

// Standard three-gate formulation:
//   z = sigmoid(x*Wz + h*Uz + bz)
//   r = sigmoid(x*Wr + h*Ur + br)
//   n = tanh(x*Wn + r .* (h*Un) + bn)
//   h' = (1 - z) .* n + z .* h
struct GruParams {
  Param w_z, u_z, b_z;
  Param w_r, u_r, b_r;
  Param w_n, u_n, b_n;
};

struct GruCache {
  Tensor h, x;       // inputs
  Tensor z, r, n;    // gate activations
  Tensor hn;         // h * Un
};

Tensor gru_cell(const Tensor& state, const Tensor& input, const GruParams& p,
                GruCache* cache = nullptr);
void gru_cell_backward(const GruCache& cache, GruParams& p, const Tensor& d_out,
                       Tensor* d_state, Tensor* d_input);

// ---- MLP: affine, relu, affine -----------------------------------------

struct MlpParams {
  AffineParams first;   // D x H
  AffineParams second;  // H x D
};

struct MlpCache {
  Tensor x;
  Tensor pre;  // first affine output, pre-relu
};

Tensor mlp(const Tensor& x, const MlpParams& p, MlpCache* cache = nullptr);
void mlp_backward(const MlpCache& cache, MlpParams& p, const Tensor& d_y, Tensor* d_x);

// ---- dropout ------------------------------------------------------------

// In training mode each element is zeroed with probability p and survivors
// are scaled by 1/(1-p). In evaluation mode the op is the exact identity.
// scale_out (optional) receives the per-element multiplier for the backward.
Tensor dropout(const Tensor& x, double p, RngStream& rng, bool training,
               Tensor* scale_out = nullptr);

Tensor elementwise_mul(const Tensor& a, const Tensor& b);

}  // namespace lsa

#endif  // LSA_OPS_HPP
