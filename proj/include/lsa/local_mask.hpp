#ifndef LSA_LOCAL_MASK_HPP
#define LSA_LOCAL_MASK_HPP

#include <string>
#include <vector>

#include "lsa/mask.hpp"
#include "lsa/view_geometry.hpp"

namespace lsa {

// Attention window over the 3x12 grid. kind None means full attention.
// Window heights are 1 or 3; widths 3, 5 or 7 (the Table 2 ablation set).
struct MaskShape {
  bool is_none = true;
  std::size_t h = 0;
  std::size_t w = 0;

  static MaskShape none() { return MaskShape{}; }
  static MaskShape window(std::size_t h, std::size_t w);
  // Accepts "none" or "RxC" labels like "3x3".
  static MaskShape parse(const std::string& label);
  std::string label() const;
  bool operator==(const MaskShape&) const = default;
};

// The seven shapes of the mask ablation, in table order.
std::vector<MaskShape> ablation_mask_shapes();

// Horizontal grid distance with wraparound: min(|a-b|, 12-|a-b|).
std::size_t circular_col_dist(std::size_t a, std::size_t b);

// Builds the view-by-slot attendability matrix. Slot k with grid center
// (r_k, c_k) may attend view (r, c) iff |r - r_k| <= (h-1)/2 (clamped at the
// top/bottom rows, no vertical wrap) and circular_col_dist(c, c_k) <= (w-1)/2.
// A stop candidate in the list, and the prepended stop slot when include_stop
// is set, attends all 36 views.
MaskMatrix build_mask(const std::vector<CandidateView>& candidates,
                      const MaskShape& shape, bool include_stop = false);

}  // namespace lsa

#endif  // LSA_LOCAL_MASK_HPP
