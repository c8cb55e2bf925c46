#include "lsa/tensor.hpp"

#include <cmath>
#include <sstream>

namespace lsa {

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DimensionError("from_rows: empty input");
  Tensor t = Tensor::zeros(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw DimensionError("from_rows: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) t(i, j) = rows[i][j];
  }
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

std::uint64_t RngStream::mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined state.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RngStream::normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return RngStream::mix(h, v ^ 0x6a09e667f3bcc909ULL);
}

}  // namespace lsa
