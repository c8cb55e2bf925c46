#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "lsa/local_mask.hpp"

using namespace lsa;

namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;

CandidateView candidate_at(std::size_t row, std::size_t col,
                           const FeatureDims& dims = FeatureDims{4, 4}) {
  CandidateView c;
  c.index = ViewIndex{row, col};
  c.heading = static_cast<double>(col) * 30.0 * kDeg;
  c.elevation = (static_cast<double>(row) - 1.0) * 30.0 * kDeg;
  c.feature = compose_view_feature(Tensor::vec(dims.d_image), c.heading,
                                   c.elevation, dims);
  return c;
}

CandidateView stop_candidate(const FeatureDims& dims = FeatureDims{4, 4}) {
  CandidateView c;
  c.neighbor = -1;
  c.feature = compose_view_feature(Tensor::vec(dims.d_image), 0.0, 0.0, dims);
  return c;
}

// Independent predicate oracle over the raw window definition.
bool oracle_allowed(const MaskShape& shape, std::size_t vr, std::size_t vc,
                    std::size_t cr, std::size_t cc) {
  if (shape.is_none) return true;
  const long dr = std::labs(static_cast<long>(vr) - static_cast<long>(cr));
  const long dc_raw =
      std::labs(static_cast<long>(vc) - static_cast<long>(cc));
  const long dc = std::min(dc_raw, 12 - dc_raw);
  return dr <= static_cast<long>((shape.h - 1) / 2) &&
         dc <= static_cast<long>((shape.w - 1) / 2);
}

std::size_t count_allowed(const MaskMatrix& m, std::size_t slot) {
  std::size_t n = 0;
  for (std::size_t v = 0; v < m.n_views; ++v)
    if (m.at(v, slot)) ++n;
  return n;
}
}  // namespace

TEST_CASE("circular column distance table cases") {
  CHECK(circular_col_dist(0, 11) == 1);
  CHECK(circular_col_dist(3, 3) == 0);
  CHECK(circular_col_dist(2, 9) == 5);
  CHECK(circular_col_dist(0, 6) == 6);
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = 0; b < 12; ++b) {
      CHECK(circular_col_dist(a, b) == circular_col_dist(b, a));
      CHECK(circular_col_dist(a, b) <= 6);
    }
}

TEST_CASE("mask shape parsing and labels") {
  CHECK(MaskShape::parse("none").is_none);
  MaskShape s = MaskShape::parse("3x5");
  CHECK(s.h == 3);
  CHECK(s.w == 5);
  CHECK(s.label() == "3x5");
  CHECK(MaskShape::none().label() == "none");
  CHECK_THROWS_AS(MaskShape::parse("2x3"), ConfigError);
  CHECK_THROWS_AS(MaskShape::parse("3x4"), ConfigError);
  CHECK_THROWS_AS(MaskShape::parse("bogus"), ConfigError);
  CHECK_THROWS_AS(MaskShape::window(3, 9), ConfigError);
}

TEST_CASE("ablation set is the seven table shapes in order") {
  auto shapes = ablation_mask_shapes();
  REQUIRE(shapes.size() == 7);
  const char* labels[] = {"none", "1x3", "1x5", "1x7", "3x3", "3x5", "3x7"};
  for (std::size_t i = 0; i < 7; ++i) CHECK(shapes[i].label() == labels[i]);
}

TEST_CASE("build_mask equals the brute-force oracle for every shape and center") {
  for (const MaskShape& shape : ablation_mask_shapes()) {
    for (std::size_t cr = 0; cr < kGridRows; ++cr)
      for (std::size_t cc = 0; cc < kGridCols; ++cc) {
        MaskMatrix m = build_mask({candidate_at(cr, cc)}, shape);
        REQUIRE(m.n_views == kNumViews);
        REQUIRE(m.n_slots == 1);
        for (std::size_t vr = 0; vr < kGridRows; ++vr)
          for (std::size_t vc = 0; vc < kGridCols; ++vc)
            CHECK(m.at(vr * kGridCols + vc, 0) ==
                  oracle_allowed(shape, vr, vc, cr, cc));
      }
  }
}

TEST_CASE("documented window counts") {
  // 3x3 interior: 9 views, rows {0,1,2} x cols {11,0,1}
  MaskMatrix interior = build_mask({candidate_at(1, 0)}, MaskShape::window(3, 3));
  CHECK(count_allowed(interior, 0) == 9);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c : {11u, 0u, 1u}) CHECK(interior.at(r * 12 + c, 0));

  // 3x3 at the top elevation row: only a 2x3 region exists
  MaskMatrix edge = build_mask({candidate_at(0, 5)}, MaskShape::window(3, 3));
  CHECK(count_allowed(edge, 0) == 6);
  for (std::size_t c : {4u, 5u, 6u}) {
    CHECK(edge.at(0 * 12 + c, 0));
    CHECK(edge.at(1 * 12 + c, 0));
    CHECK_FALSE(edge.at(2 * 12 + c, 0));
  }

  // 1x7 wrapping through the seam
  MaskMatrix wrap = build_mask({candidate_at(2, 10)}, MaskShape::window(1, 7));
  CHECK(count_allowed(wrap, 0) == 7);
  for (std::size_t c : {7u, 8u, 9u, 10u, 11u, 0u, 1u})
    CHECK(wrap.at(2 * 12 + c, 0));
  CHECK_FALSE(wrap.at(1 * 12 + 10, 0));
}

TEST_CASE("shape none allows everything") {
  std::vector<CandidateView> cands{candidate_at(0, 0), candidate_at(1, 3),
                                   candidate_at(2, 7), candidate_at(1, 11)};
  MaskMatrix m = build_mask(cands, MaskShape::none());
  CHECK(m.n_slots == 4);
  for (std::size_t v = 0; v < m.n_views; ++v)
    for (std::size_t k = 0; k < m.n_slots; ++k) CHECK(m.at(v, k));
}

TEST_CASE("stop candidates attend the full grid") {
  std::vector<CandidateView> cands{stop_candidate(), candidate_at(1, 4)};
  MaskMatrix m = build_mask(cands, MaskShape::window(1, 3));
  CHECK(count_allowed(m, 0) == kNumViews);
  CHECK(count_allowed(m, 1) == 3);

  MaskMatrix with_stop =
      build_mask({candidate_at(1, 4)}, MaskShape::window(1, 3), true);
  CHECK(with_stop.n_slots == 2);
  CHECK(count_allowed(with_stop, 0) == kNumViews);
  CHECK(count_allowed(with_stop, 1) == 3);
}

TEST_CASE("rotation equivariance: shifting columns shifts the mask") {
  const MaskShape shape = MaskShape::window(3, 5);
  for (std::size_t delta : {1u, 3u, 7u}) {
    MaskMatrix base = build_mask({candidate_at(1, 2)}, shape);
    MaskMatrix shifted = build_mask({candidate_at(1, (2 + delta) % 12)}, shape);
    for (std::size_t r = 0; r < kGridRows; ++r)
      for (std::size_t c = 0; c < kGridCols; ++c)
        CHECK(base.at(r * 12 + c, 0) ==
              shifted.at(r * 12 + (c + delta) % 12, 0));
  }
}

TEST_CASE("window monotonicity: wider and taller windows are supersets") {
  for (std::size_t cr = 0; cr < kGridRows; ++cr)
    for (std::size_t cc = 0; cc < kGridCols; ++cc) {
      auto cand = candidate_at(cr, cc);
      MaskMatrix w3 = build_mask({cand}, MaskShape::window(1, 3));
      MaskMatrix w5 = build_mask({cand}, MaskShape::window(1, 5));
      MaskMatrix w7 = build_mask({cand}, MaskShape::window(1, 7));
      MaskMatrix h3 = build_mask({cand}, MaskShape::window(3, 3));
      for (std::size_t v = 0; v < kNumViews; ++v) {
        if (w3.at(v, 0)) {
          CHECK(w5.at(v, 0));
          CHECK(h3.at(v, 0));
        }
        if (w5.at(v, 0)) CHECK(w7.at(v, 0));
      }
    }
}

TEST_CASE("every slot can attend its own center view") {
  for (const MaskShape& shape : ablation_mask_shapes())
    for (std::size_t cr = 0; cr < kGridRows; ++cr)
      for (std::size_t cc = 0; cc < kGridCols; ++cc) {
        MaskMatrix m = build_mask({candidate_at(cr, cc)}, shape);
        CHECK(m.at(cr * kGridCols + cc, 0));
      }
}

TEST_CASE("multi-candidate masks over varying slot counts match the oracle") {
  // exhaustive equivalence for K in {1, 2, 5}
  for (std::size_t k : {1u, 2u, 5u}) {
    std::vector<CandidateView> cands;
    for (std::size_t i = 0; i < k; ++i)
      cands.push_back(candidate_at((i * 2) % 3, (i * 5) % 12));
    for (const MaskShape& shape : ablation_mask_shapes()) {
      MaskMatrix m = build_mask(cands, shape);
      REQUIRE(m.n_slots == k);
      for (std::size_t s = 0; s < k; ++s)
        for (std::size_t vr = 0; vr < kGridRows; ++vr)
          for (std::size_t vc = 0; vc < kGridCols; ++vc)
            CHECK(m.at(vr * kGridCols + vc, s) ==
                  oracle_allowed(shape, vr, vc, cands[s].index->row,
                                 cands[s].index->col));
    }
  }
}

TEST_CASE("candidates sharing a view index get identical columns") {
  std::vector<CandidateView> cands{candidate_at(1, 6), candidate_at(1, 6)};
  MaskMatrix m = build_mask(cands, MaskShape::window(3, 3));
  for (std::size_t v = 0; v < kNumViews; ++v) CHECK(m.at(v, 0) == m.at(v, 1));
}
