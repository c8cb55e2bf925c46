#include "lsa/local_mask.hpp"

#include <cstdlib>

namespace lsa {

MaskShape MaskShape::window(std::size_t h, std::size_t w) {
  if ((h != 1 && h != 3) || (w != 3 && w != 5 && w != 7))
    throw ConfigError("MaskShape: unsupported window " + std::to_string(h) +
                      "x" + std::to_string(w));
  MaskShape s;
  s.is_none = false;
  s.h = h;
  s.w = w;
  return s;
}

MaskShape MaskShape::parse(const std::string& label) {
  if (label == "none") return none();
  auto x = label.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= label.size())
    throw ConfigError("MaskShape: cannot parse \"" + label + "\"");
  const long h = std::strtol(label.substr(0, x).c_str(), nullptr, 10);
  const long w = std::strtol(label.substr(x + 1).c_str(), nullptr, 10);
  if (h <= 0 || w <= 0)
    throw ConfigError("MaskShape: cannot parse \"" + label + "\"");
  return window(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
}

std::string MaskShape::label() const {
  if (is_none) return "none";
  return std::to_string(h) + "x" + std::to_string(w);
}

std::vector<MaskShape> ablation_mask_shapes() {
  return {MaskShape::none(),      MaskShape::window(1, 3),
          MaskShape::window(1, 5), MaskShape::window(1, 7),
          MaskShape::window(3, 3), MaskShape::window(3, 5),
          MaskShape::window(3, 7)};
}

std::size_t circular_col_dist(std::size_t a, std::size_t b) {
  const std::size_t d = a > b ? a - b : b - a;
  return d < kGridCols - d ? d : kGridCols - d;
}

MaskMatrix build_mask(const std::vector<CandidateView>& candidates,
                      const MaskShape& shape, bool include_stop) {
  if (candidates.empty()) throw ConfigError("build_mask: no candidates");
  const std::size_t extra = include_stop ? 1 : 0;
  const std::size_t k_slots = candidates.size() + extra;
  MaskMatrix mask(kNumViews, k_slots, false);
  if (include_stop)
    for (std::size_t n = 0; n < kNumViews; ++n) mask.set(n, 0, true);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::size_t col = k + extra;
    if (shape.is_none || candidates[k].is_stop()) {
      for (std::size_t n = 0; n < kNumViews; ++n) mask.set(n, col, true);
      continue;
    }
    const ViewIndex center = *candidates[k].index;
    const std::size_t half_h = (shape.h - 1) / 2;
    const std::size_t half_w = (shape.w - 1) / 2;
    for (std::size_t r = 0; r < kGridRows; ++r) {
      const std::size_t dr = r > center.row ? r - center.row : center.row - r;
      if (dr > half_h) continue;  // vertical clamp, no wrap
      for (std::size_t c = 0; c < kGridCols; ++c) {
        if (circular_col_dist(c, center.col) > half_w) continue;
        mask.set(r * kGridCols + c, col, true);
      }
    }
  }
  return mask;
}

}  // namespace lsa
