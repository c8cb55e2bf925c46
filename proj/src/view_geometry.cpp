#include "lsa/view_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lsa {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kColStep = kTwoPi / static_cast<double>(kGridCols);  // 30 deg
}  // namespace

double wrap_angle(double radians) {
  double w = std::fmod(radians, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

Tensor ViewFeature::combined() const {
  Tensor out = Tensor::vec(image.size() + angle.values.size());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = image[i];
  for (std::size_t i = 0; i < angle.values.size(); ++i)
    out[image.size() + i] = angle.values[i];
  return out;
}

Tensor PanoramaGrid::stacked() const {
  Tensor out = Tensor::zeros(kNumViews, dims.d_view());
  for (std::size_t n = 0; n < kNumViews; ++n) {
    Tensor c = views[n].combined();
    for (std::size_t j = 0; j < c.size(); ++j) out(n, j) = c[j];
  }
  return out;
}

Tensor PanoramaGrid::stacked_images() const {
  Tensor out = Tensor::zeros(kNumViews, dims.d_image);
  for (std::size_t n = 0; n < kNumViews; ++n)
    for (std::size_t j = 0; j < dims.d_image; ++j) out(n, j) = views[n].image[j];
  return out;
}

Tensor stack_candidates(const std::vector<CandidateView>& candidates) {
  if (candidates.empty()) throw DimensionError("stack_candidates: no candidates");
  const std::size_t width = candidates[0].feature.combined().size();
  Tensor out = Tensor::zeros(candidates.size(), width);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    Tensor c = candidates[k].feature.combined();
    if (c.size() != width)
      throw DimensionError("stack_candidates: inconsistent feature widths");
    for (std::size_t j = 0; j < width; ++j) out(k, j) = c[j];
  }
  return out;
}

AngleFeature encode_angle(double heading, double elevation, std::size_t d_angle) {
  if (d_angle == 0 || d_angle % 4 != 0)
    throw ConfigError("encode_angle: angle width must be divisible by 4, got " +
                      std::to_string(d_angle));
  AngleFeature f;
  f.heading = heading;
  f.elevation = elevation;
  f.values = Tensor::vec(d_angle);
  const double quad[4] = {std::sin(heading), std::cos(heading),
                          std::sin(elevation), std::cos(elevation)};
  for (std::size_t i = 0; i < d_angle; ++i) f.values[i] = quad[i % 4];
  return f;
}

ViewFeature compose_view_feature(const Tensor& image, double heading,
                                 double elevation, const FeatureDims& dims) {
  if (image.size() != dims.d_image)
    throw DimensionError("compose_view_feature: image width " +
                         std::to_string(image.size()) + " != configured " +
                         std::to_string(dims.d_image));
  ViewFeature v;
  v.image = image;
  v.angle = encode_angle(heading, elevation, dims.d_angle);
  return v;
}

ViewIndex view_index_for_direction(double heading, double elevation) {
  const double w = wrap_angle(heading);
  long col = std::lround(w / kColStep) % static_cast<long>(kGridCols);
  long row = std::lround(elevation / kColStep);
  row = std::clamp(row, -1L, 1L) + 1;
  return ViewIndex{static_cast<std::size_t>(row), static_cast<std::size_t>(col)};
}

ViewFeature stop_view_feature(const PanoramaGrid& grid) {
  ViewFeature v;
  v.image = Tensor::vec(grid.dims.d_image);
  for (std::size_t j = 0; j < grid.dims.d_image; ++j) {
    double m = grid.views[0].image[j];
    for (std::size_t n = 1; n < kNumViews; ++n)
      m = std::max(m, grid.views[n].image[j]);
    v.image[j] = m;
  }
  v.angle.heading = 0.0;
  v.angle.elevation = 0.0;
  v.angle.values = Tensor::vec(grid.dims.d_angle);  // zero vector
  return v;
}

}  // namespace lsa
