#ifndef LSA_VIEW_GEOMETRY_HPP
#define LSA_VIEW_GEOMETRY_HPP

#include <optional>
#include <vector>

#include "lsa/tensor.hpp"

namespace lsa {

constexpr std::size_t kGridRows = 3;
constexpr std::size_t kGridCols = 12;
constexpr std::size_t kNumViews = kGridRows * kGridCols;  // 36

// Feature widths for the panoramic views. Full-scale deployments use image
// width 2048 and angle width 128; tests use toy widths.
struct FeatureDims {
  std::size_t d_image = 16;
  std::size_t d_angle = 8;
  std::size_t d_view() const { return d_image + d_angle; }
};

inline FeatureDims full_scale_dims() { return {2048, 128}; }

// Position in the 3x12 panorama. Row 0 is elevation -30 degrees, row 2 is
// +30; column c is heading c*30 degrees relative to the agent's facing.
struct ViewIndex {
  std::size_t row = 0;  // 0..2
  std::size_t col = 0;  // 0..11
  std::size_t flat() const { return row * kGridCols + col; }
  bool operator==(const ViewIndex&) const = default;
};

// (sin h, cos h, sin e, cos e) tiled d_angle/4 times.
struct AngleFeature {
  double heading = 0.0;    // radians, agent-relative
  double elevation = 0.0;  // radians
  Tensor values;           // d_angle
};

struct ViewFeature {
  Tensor image;        // d_image
  AngleFeature angle;  // d_angle
  Tensor combined() const;  // [image ; angle]
};

struct PanoramaGrid {
  FeatureDims dims;
  std::vector<ViewFeature> views;  // exactly 36, row-major

  const ViewFeature& at(const ViewIndex& idx) const { return views[idx.flat()]; }
  // 36 x d_view matrix of combined features.
  Tensor stacked() const;
  // 36 x d_image matrix of image features only.
  Tensor stacked_images() const;
};

// A view facing an adjacent viewpoint, or the synthetic stop candidate
// (which has no grid position).
struct CandidateView {
  std::optional<ViewIndex> index;  // empty for the stop candidate
  int neighbor = -1;               // destination node id, -1 for stop
  double heading = 0.0;            // radians relative to agent orientation
  double elevation = 0.0;
  ViewFeature feature;
  bool is_stop() const { return !index.has_value(); }
};

// Stacks candidate combined features as K x d_view.
Tensor stack_candidates(const std::vector<CandidateView>& candidates);

double wrap_angle(double radians);  // into [0, 2*pi)

AngleFeature encode_angle(double heading, double elevation, std::size_t d_angle);

ViewFeature compose_view_feature(const Tensor& image, double heading,
                                 double elevation, const FeatureDims& dims);

// Discretizes a relative direction onto the grid: heading rounds to the
// nearest 30-degree column (circular), elevation rounds and clamps to the
// three rows.
ViewIndex view_index_for_direction(double heading, double elevation);

// Elementwise maximum of all 36 image features; the angle part is the zero
// vector so the stop view is distinguishable from every real direction.
ViewFeature stop_view_feature(const PanoramaGrid& grid);

}  // namespace lsa

#endif  // LSA_VIEW_GEOMETRY_HPP
