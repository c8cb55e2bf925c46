#ifndef LSA_MASK_HPP
#define LSA_MASK_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lsa {

// Boolean attendability matrix: rows are panorama views, columns are slots.
// allowed(n, k) == true means view n may be attended by slot k.
struct MaskMatrix {
  std::size_t n_views = 0;
  std::size_t n_slots = 0;
  std::vector<std::uint8_t> allowed;  // row-major n_views x n_slots

  MaskMatrix() = default;
  MaskMatrix(std::size_t n, std::size_t k, bool value = false)
      : n_views(n), n_slots(k), allowed(n * k, value ? 1 : 0) {}

  bool at(std::size_t n, std::size_t k) const { return allowed[n * n_slots + k] != 0; }
  void set(std::size_t n, std::size_t k, bool v) { allowed[n * n_slots + k] = v ? 1 : 0; }

  static MaskMatrix all_true(std::size_t n, std::size_t k) { return MaskMatrix(n, k, true); }
};

}  // namespace lsa

#endif  // LSA_MASK_HPP
