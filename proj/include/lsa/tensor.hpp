#ifndef LSA_TENSOR_HPP
#define LSA_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsa {

// Dense row-major tensor of doubles, rank 1 or 2. Rank-1 tensors behave as a
// single row when a matrix view is needed.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    Tensor t;
    t.shape_ = {rows, cols};
    t.data_.assign(rows * cols, 0.0);
    return t;
  }

  static Tensor vec(std::size_t n) {
    Tensor t;
    t.shape_ = {n};
    t.data_.assign(n, 0.0);
    return t;
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool all_finite() const;

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Trainable parameter: value plus an accumulated gradient of the same shape.
struct Param {
  Tensor value;
  Tensor grad;

  Param() = default;
  explicit Param(Tensor v) : value(std::move(v)) {
    grad = value;
    grad.fill(0.0);
  }
  void zero_grad() { grad.fill(0.0); }
};

// Counter-based deterministic random stream. Identical (seed, position) gives
// identical draws regardless of platform or evaluation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t position = 0)
      : seed_(seed), position_(position) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }
  void reset(std::uint64_t position = 0) { position_ = position; }

  std::uint64_t next_u64() { return mix(seed_, position_++); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (consumes two draws).
  double normal();

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
};

// Deterministic combiner for deriving sub-stream seeds.
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v);

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lsa

#endif  // LSA_TENSOR_HPP
