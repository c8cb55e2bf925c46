#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "lsa/io.hpp"
#include "lsa/local_mask.hpp"
#include "lsa/run_config.hpp"

using namespace lsa;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("graph files round trip exactly") {
  NavGraph g = generate_synthetic_env(3, 12, 4.0, 10.0);
  const std::string path = tmp_path("lsa_test_graph.txt");
  write_graph(path, g);
  NavGraph r = read_graph(path);
  REQUIRE(r.n_nodes() == g.n_nodes());
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    CHECK(r.positions[i].x == g.positions[i].x);
    CHECK(r.positions[i].y == g.positions[i].y);
    CHECK(r.positions[i].z == g.positions[i].z);
    CHECK(r.adjacency[i] == g.adjacency[i]);
  }
  // identical rewrite -> byte-identical file
  const std::string again = tmp_path("lsa_test_graph2.txt");
  write_graph(again, r);
  CHECK(read_text_file(path) == read_text_file(again));
}

TEST_CASE("corrupt graph headers are rejected") {
  const std::string path = tmp_path("lsa_bad_graph.txt");
  write_text_file(path, "not-a-graph v9\n");
  CHECK_THROWS_AS(read_graph(path), FormatError);
}

TEST_CASE("episode files round trip and recompute reference paths") {
  NavGraph g = generate_synthetic_env(5, 10, 4.0, 10.0);
  auto episodes = generate_episodes(g, 5, 12);
  const std::string path = tmp_path("lsa_test_episodes.txt");
  write_episodes(path, episodes);
  auto r = read_episodes(path, g);
  REQUIRE(r.size() == episodes.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].start == episodes[i].start);
    CHECK(r[i].goal == episodes[i].goal);
    CHECK(r[i].seed == episodes[i].seed);
    CHECK(r[i].reference_path == episodes[i].reference_path);
  }
}

TEST_CASE("feature fixtures round trip through the binary payload") {
  FeatureDims dims{6, 4};
  RngStream rng(9);
  std::vector<FeatureRecord> records;
  for (int n = 0; n < 3; ++n)
    for (std::size_t v = 0; v < 4; ++v) {
      FeatureRecord rec;
      rec.node = n;
      rec.view = v;
      rec.image = Tensor::vec(dims.d_image);
      for (std::size_t j = 0; j < dims.d_image; ++j)
        rec.image[j] = rng.uniform(-1.0, 1.0);
      records.push_back(std::move(rec));
    }
  const std::string path = tmp_path("lsa_test_features.bin");
  write_feature_fixture(path, dims, records);
  FeatureDims dims_read;
  auto r = read_feature_fixture(path, &dims_read);
  CHECK(dims_read.d_image == dims.d_image);
  CHECK(dims_read.d_angle == dims.d_angle);
  REQUIRE(r.size() == records.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].node == records[i].node);
    CHECK(r[i].view == records[i].view);
    for (std::size_t j = 0; j < dims.d_image; ++j)
      CHECK(r[i].image[j] == records[i].image[j]);  // bitwise
  }
}

TEST_CASE("checkpoints restore parameters bitwise") {
  ModelConfig cfg;
  cfg.dims = FeatureDims{8, 4};
  cfg.d_h = 8;
  Model m = make_model(cfg, 7);
  // scramble, save, restore into a freshly initialized model
  RngStream rng(3);
  for (Param* p : m.all_params())
    for (std::size_t i = 0; i < p->value.size(); ++i)
      p->value[i] = rng.uniform(-2.0, 2.0);
  const std::string path = tmp_path("lsa_test_checkpoint.bin");
  write_checkpoint(path, m, 123);

  Model fresh = make_model(cfg, 99);
  CHECK(read_checkpoint(path, fresh) == 123);
  auto a = m.all_params();
  auto b = fresh.all_params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i]->value.size(); ++j)
      CHECK(a[i]->value[j] == b[i]->value[j]);
}

TEST_CASE("checkpoints reject a mismatched configuration") {
  ModelConfig cfg;
  cfg.dims = FeatureDims{8, 4};
  cfg.d_h = 8;
  Model m = make_model(cfg, 7);
  const std::string path = tmp_path("lsa_test_checkpoint_mismatch.bin");
  write_checkpoint(path, m, 1);

  ModelConfig other = cfg;
  other.slot_iterations = 4;
  Model wrong = make_model(other, 7);
  CHECK_THROWS_AS(read_checkpoint(path, wrong), FormatError);

  ModelConfig other2 = cfg;
  other2.mask = MaskShape::window(1, 5);
  Model wrong2 = make_model(other2, 7);
  CHECK_THROWS_AS(read_checkpoint(path, wrong2), FormatError);
}

TEST_CASE("run config parsing applies known keys and rejects unknown ones") {
  const std::string text =
      "# a comment\n"
      "env.seed = 99\n"
      "env.nodes = 11\n"
      "model.mask = 1x5   # trailing comment\n"
      "model.iterations = 2\n"
      "model.dropout = 0.25\n"
      "train.learning_rate = 0.05\n"
      "\n";
  RunConfig cfg = RunConfig::parse_text(text);
  CHECK(cfg.seed == 99);
  CHECK(cfg.n_nodes == 11);
  CHECK(cfg.model.mask.label() == "1x5");
  CHECK(cfg.model.slot_iterations == 2);
  CHECK(cfg.model.dropout_p == doctest::Approx(0.25));
  CHECK(cfg.learning_rate == doctest::Approx(0.05));
  // untouched keys keep defaults
  CHECK(cfg.batch_size == 8);

  CHECK_THROWS_AS(RunConfig::parse_text("bogus.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_text("env.seed 5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_text("env.seed = abc\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_text("model.dropout = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse_text("model.mask = 5x5\n"), ConfigError);
}

TEST_CASE("resolved run configs round trip through their own text form") {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.model.mask = MaskShape::none();
  cfg.model.literal_alg1 = true;
  cfg.train_steps = 77;
  RunConfig back = RunConfig::parse_text(cfg.to_text());
  CHECK(back.seed == cfg.seed);
  CHECK(back.model.mask == cfg.model.mask);
  CHECK(back.model.literal_alg1 == cfg.model.literal_alg1);
  CHECK(back.train_steps == cfg.train_steps);
  CHECK(back.to_text() == cfg.to_text());
}

TEST_CASE("mask dumps cover every grid cell and slot") {
  std::vector<CandidateView> cands;
  CandidateView stop;
  stop.neighbor = -1;
  FeatureDims dims{4, 4};
  stop.feature = compose_view_feature(Tensor::vec(4), 0.0, 0.0, dims);
  cands.push_back(stop);
  CandidateView c;
  c.index = ViewIndex{1, 3};
  c.feature = compose_view_feature(Tensor::vec(4), 0.0, 0.0, dims);
  cands.push_back(c);
  MaskMatrix m = build_mask(cands, MaskShape::window(3, 3));

  const std::string grid = mask_to_text(m);
  CHECK(grid.find("slot 0") != std::string::npos);
  CHECK(grid.find("slot 1") != std::string::npos);
  CHECK(std::count(grid.begin(), grid.end(), '#') == 36 + 9);

  const std::string csv = mask_to_csv(m);
  CHECK(csv.rfind("view_row,view_col,slot,allowed", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 36 * 2);
}

TEST_CASE("attention trace dumps carry one row per weight") {
  AttentionTrace trace;
  Tensor attn = Tensor::zeros(kNumViews, 2);
  attn(0, 0) = 0.5;
  trace.attn.push_back(attn);
  trace.attn.push_back(attn);
  const std::string csv = trace_to_csv(trace);
  CHECK(csv.rfind("iteration,slot,view_row,view_col,weight", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2 * 36);
  const std::string text = trace_to_text(trace);
  CHECK(text.find("iter 1 slot 1") != std::string::npos);
}
