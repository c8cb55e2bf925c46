#include "lsa/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lsa {

namespace {

static_assert(std::endian::native == std::endian::little,
              "payload serialization assumes a little-endian host");

void write_doubles(std::ostream& os, const double* data, std::size_t count) {
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::istream& is, double* data, std::size_t count) {
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw FormatError("unexpected end of payload");
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw FormatError("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw FormatError("cannot open for reading: " + path);
  return is;
}

void expect_line(std::istream& is, const std::string& expected,
                 const std::string& context) {
  std::string line;
  if (!std::getline(is, line) || line != expected)
    throw FormatError(context + ": expected \"" + expected + "\", got \"" +
                      line + "\"");
}

std::string expect_key(std::istream& is, const std::string& key,
                       const std::string& context) {
  std::string line;
  if (!std::getline(is, line))
    throw FormatError(context + ": missing key " + key);
  if (line.rfind(key + " ", 0) != 0)
    throw FormatError(context + ": expected key \"" + key + "\", got \"" +
                      line + "\"");
  return line.substr(key.size() + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  auto os = open_out(path);
  os << content;
}

std::string read_text_file(const std::string& path) {
  auto is = open_in(path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_graph(const std::string& path, const NavGraph& graph) {
  auto os = open_out(path);
  os << "lsa-graph v1\n";
  os << "nodes " << graph.n_nodes() << "\n";
  for (std::size_t i = 0; i < graph.n_nodes(); ++i)
    os << "node " << i << " " << fmt_double(graph.positions[i].x) << " "
       << fmt_double(graph.positions[i].y) << " "
       << fmt_double(graph.positions[i].z) << "\n";
  std::size_t m = 0;
  for (std::size_t i = 0; i < graph.n_nodes(); ++i)
    for (int j : graph.adjacency[i])
      if (static_cast<std::size_t>(j) > i) ++m;
  os << "edges " << m << "\n";
  for (std::size_t i = 0; i < graph.n_nodes(); ++i)
    for (int j : graph.adjacency[i])
      if (static_cast<std::size_t>(j) > i) os << "edge " << i << " " << j << "\n";
}

NavGraph read_graph(const std::string& path) {
  auto is = open_in(path);
  expect_line(is, "lsa-graph v1", path);
  NavGraph g;
  const std::size_t n = std::stoul(expect_key(is, "nodes", path));
  g.positions.resize(n);
  g.adjacency.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream ls(expect_key(is, "node", path));
    std::size_t id;
    Vec3 p;
    ls >> id >> p.x >> p.y >> p.z;
    if (!ls || id >= n) throw FormatError(path + ": bad node line");
    g.positions[id] = p;
  }
  const std::size_t m = std::stoul(expect_key(is, "edges", path));
  for (std::size_t i = 0; i < m; ++i) {
    std::istringstream ls(expect_key(is, "edge", path));
    std::size_t a, b;
    ls >> a >> b;
    if (!ls || a >= n || b >= n || a == b)
      throw FormatError(path + ": bad edge line");
    g.adjacency[a].push_back(static_cast<int>(b));
    g.adjacency[b].push_back(static_cast<int>(a));
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

void write_episodes(const std::string& path, const std::vector<Episode>& episodes) {
  auto os = open_out(path);
  os << "lsa-episodes v1\n";
  os << "count " << episodes.size() << "\n";
  for (const Episode& e : episodes)
    os << "episode " << e.start << " " << e.goal << " " << e.seed << "\n";
}

std::vector<Episode> read_episodes(const std::string& path, const NavGraph& graph) {
  auto is = open_in(path);
  expect_line(is, "lsa-episodes v1", path);
  const std::size_t n = std::stoul(expect_key(is, "count", path));
  std::vector<Episode> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::istringstream ls(expect_key(is, "episode", path));
    Episode e;
    ls >> e.start >> e.goal >> e.seed;
    if (!ls) throw FormatError(path + ": bad episode line");
    e.reference_path = shortest_path(graph, e.start, e.goal).path;
    out.push_back(std::move(e));
  }
  return out;
}

void write_feature_fixture(const std::string& path, const FeatureDims& dims,
                           const std::vector<FeatureRecord>& records) {
  auto os = open_out(path, true);
  os << "lsa-features v1\n";
  os << "d_image " << dims.d_image << "\n";
  os << "d_angle " << dims.d_angle << "\n";
  os << "records " << records.size() << "\n";
  os << "endian little\n";
  os << "payload\n";
  for (const FeatureRecord& r : records) {
    if (r.image.size() != dims.d_image)
      throw FormatError("feature fixture: record width mismatch");
    const double header[2] = {static_cast<double>(r.node),
                              static_cast<double>(r.view)};
    write_doubles(os, header, 2);
    write_doubles(os, r.image.data().data(), r.image.size());
  }
}

std::vector<FeatureRecord> read_feature_fixture(const std::string& path,
                                                FeatureDims* dims_out) {
  auto is = open_in(path, true);
  expect_line(is, "lsa-features v1", path);
  FeatureDims dims;
  dims.d_image = std::stoul(expect_key(is, "d_image", path));
  dims.d_angle = std::stoul(expect_key(is, "d_angle", path));
  const std::size_t n = std::stoul(expect_key(is, "records", path));
  const std::string endian = expect_key(is, "endian", path);
  if (endian != "little")
    throw FormatError(path + ": unsupported endianness " + endian);
  expect_line(is, "payload", path);
  std::vector<FeatureRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureRecord r;
    double header[2];
    read_doubles(is, header, 2);
    r.node = static_cast<int>(header[0]);
    r.view = static_cast<std::size_t>(header[1]);
    r.image = Tensor::vec(dims.d_image);
    read_doubles(is, r.image.data().data(), dims.d_image);
    out.push_back(std::move(r));
  }
  if (dims_out) *dims_out = dims;
  return out;
}

namespace {

std::string config_header(const ModelConfig& c) {
  std::ostringstream os;
  os << "d_image " << c.dims.d_image << "\n"
     << "d_angle " << c.dims.d_angle << "\n"
     << "d_h " << c.d_h << "\n"
     << "decoder_layers " << c.decoder_layers << "\n"
     << "mask " << c.mask.label() << "\n"
     << "slot_iterations " << c.slot_iterations << "\n"
     << "dropout " << fmt_double(c.dropout_p) << "\n"
     << "literal_alg1 " << (c.literal_alg1 ? 1 : 0) << "\n"
     << "use_slot_attention " << (c.use_slot_attention ? 1 : 0) << "\n"
     << "stop_slot_attends " << (c.stop_slot_attends ? 1 : 0) << "\n"
     << "step_limit " << c.step_limit << "\n";
  return os.str();
}

}  // namespace

void write_checkpoint(const std::string& path, const Model& model,
                      std::size_t step) {
  auto os = open_out(path, true);
  os << "lsa-checkpoint v1\n";
  os << config_header(model.cfg);
  os << "step " << step << "\n";
  // Const cast only to enumerate parameter storage; nothing is mutated.
  auto& m = const_cast<Model&>(model);
  std::size_t count = 0;
  for (Param* p : m.all_params()) count += p->value.size();
  os << "params " << count << "\n";
  os << "payload\n";
  for (Param* p : m.all_params())
    write_doubles(os, p->value.data().data(), p->value.size());
}

std::size_t read_checkpoint(const std::string& path, Model& model) {
  auto is = open_in(path, true);
  expect_line(is, "lsa-checkpoint v1", path);
  const std::string expected = config_header(model.cfg);
  std::istringstream want(expected);
  std::string want_line;
  while (std::getline(want, want_line)) {
    std::string got;
    if (!std::getline(is, got))
      throw FormatError(path + ": truncated checkpoint header");
    if (got != want_line)
      throw FormatError(path + ": checkpoint config mismatch: expected \"" +
                        want_line + "\", got \"" + got + "\"");
  }
  const std::size_t step = std::stoul(expect_key(is, "step", path));
  const std::size_t count = std::stoul(expect_key(is, "params", path));
  std::size_t have = 0;
  for (Param* p : model.all_params()) have += p->value.size();
  if (count != have)
    throw FormatError(path + ": parameter count mismatch");
  expect_line(is, "payload", path);
  for (Param* p : model.all_params())
    read_doubles(is, p->value.data().data(), p->value.size());
  return step;
}

std::string mask_to_text(const MaskMatrix& mask) {
  std::ostringstream os;
  for (std::size_t k = 0; k < mask.n_slots; ++k) {
    os << "slot " << k << "\n";
    for (std::size_t r = 0; r < kGridRows; ++r) {
      for (std::size_t c = 0; c < kGridCols; ++c)
        os << (mask.at(r * kGridCols + c, k) ? '#' : '.');
      os << "\n";
    }
  }
  return os.str();
}

std::string mask_to_csv(const MaskMatrix& mask) {
  std::ostringstream os;
  os << "view_row,view_col,slot,allowed\n";
  for (std::size_t n = 0; n < mask.n_views; ++n)
    for (std::size_t k = 0; k < mask.n_slots; ++k)
      os << n / kGridCols << "," << n % kGridCols << "," << k << ","
         << (mask.at(n, k) ? 1 : 0) << "\n";
  return os.str();
}

std::string trace_to_text(const AttentionTrace& trace) {
  std::ostringstream os;
  for (std::size_t t = 0; t < trace.attn.size(); ++t) {
    const Tensor& a = trace.attn[t];
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t n = 0; n < a.rows(); ++n)
        os << "iter " << t << " slot " << k << " view " << n / kGridCols << " "
           << n % kGridCols << " weight " << fmt_double(a(n, k)) << "\n";
  }
  return os.str();
}

std::string trace_to_csv(const AttentionTrace& trace) {
  std::ostringstream os;
  os << "iteration,slot,view_row,view_col,weight\n";
  for (std::size_t t = 0; t < trace.attn.size(); ++t) {
    const Tensor& a = trace.attn[t];
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t n = 0; n < a.rows(); ++n)
        os << t << "," << k << "," << n / kGridCols << "," << n % kGridCols
           << "," << fmt_double(a(n, k)) << "\n";
  }
  return os.str();
}

}  // namespace lsa
