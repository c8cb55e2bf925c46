#include "lsa/nav_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace lsa {

namespace {

constexpr double kColStep = 2.0 * M_PI / static_cast<double>(kGridCols);

std::uint64_t tagged_seed(std::uint64_t seed, std::uint64_t tag) {
  return hash_combine(seed, tag);
}

constexpr std::uint64_t kTagNodes = 0x6e6f646573;    // "nodes"
constexpr std::uint64_t kTagView = 0x76696577;       // "view"
constexpr std::uint64_t kTagSignal = 0x7369676e;     // "sign"
constexpr std::uint64_t kTagEpisode = 0x65706973;    // "epis"

double bearing_between(const Vec3& a, const Vec3& b) {
  return wrap_angle(std::atan2(b.y - a.y, b.x - a.x));
}

double elevation_between(const Vec3& a, const Vec3& b) {
  const double horiz = std::hypot(b.x - a.x, b.y - a.y);
  return std::atan2(b.z - a.z, horiz);
}

std::size_t heading_column(double heading) {
  return static_cast<std::size_t>(std::lround(wrap_angle(heading) / kColStep) %
                                  static_cast<long>(kGridCols));
}

double quantize_heading(double heading) {
  return static_cast<double>(heading_column(heading)) * kColStep;
}

}  // namespace

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

bool NavGraph::has_edge(int a, int b) const {
  const auto& adj = adjacency[static_cast<std::size_t>(a)];
  return std::find(adj.begin(), adj.end(), b) != adj.end();
}

double NavGraph::edge_length(int a, int b) const {
  if (!has_edge(a, b))
    throw EvaluationError("edge_length: no edge " + std::to_string(a) + "-" +
                          std::to_string(b));
  return distance(positions[static_cast<std::size_t>(a)],
                  positions[static_cast<std::size_t>(b)]);
}

bool NavGraph::is_connected() const {
  if (positions.empty()) return false;
  std::vector<char> seen(n_nodes(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adjacency[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++count;
        q.push(w);
      }
  }
  return count == n_nodes();
}

NavGraph generate_synthetic_env(std::uint64_t seed, std::size_t n_nodes,
                                double connect_radius, double box_size) {
  if (n_nodes < 2)
    throw ConfigError("generate_synthetic_env: need at least 2 nodes");
  NavGraph g;
  RngStream rng(tagged_seed(seed, kTagNodes));
  for (std::size_t i = 0; i < n_nodes; ++i) {
    Vec3 p;
    p.x = rng.uniform(0.0, box_size);
    p.y = rng.uniform(0.0, box_size);
    p.z = rng.uniform(-1.5, 1.5);  // modest height variation
    g.positions.push_back(p);
  }
  double radius = connect_radius;
  for (int attempt = 0; attempt < 64; ++attempt) {
    g.adjacency.assign(n_nodes, {});
    for (std::size_t i = 0; i < n_nodes; ++i)
      for (std::size_t j = i + 1; j < n_nodes; ++j)
        if (distance(g.positions[i], g.positions[j]) <= radius) {
          g.adjacency[i].push_back(static_cast<int>(j));
          g.adjacency[j].push_back(static_cast<int>(i));
        }
    if (g.is_connected()) return g;
    radius *= 1.25;
  }
  throw EvaluationError("generate_synthetic_env: could not connect graph");
}

Tensor FeatureSource::node_signal(int node, std::size_t d) const {
  const std::size_t base = signal_width ? signal_width
                                        : std::min<std::size_t>(dims.d_image, 8);
  const std::size_t w = std::min(base, d);
  Tensor t = Tensor::vec(d);
  RngStream rng(hash_combine(tagged_seed(seed, kTagSignal),
                             static_cast<std::uint64_t>(node)));
  for (std::size_t i = 0; i < w; ++i)
    t[i] = (rng.next_u64() & 1) ? 1.0 : -1.0;
  return t;
}

Observation observe(const NavGraph& graph, int node, double agent_heading,
                    const FeatureSource& features) {
  if (node < 0 || static_cast<std::size_t>(node) >= graph.n_nodes())
    throw EvaluationError("observe: unknown node " + std::to_string(node));
  const FeatureDims& dims = features.dims;
  const Vec3& here = graph.positions[static_cast<std::size_t>(node)];
  const std::size_t h_col = heading_column(agent_heading);

  // Neighbor identity signals keyed by absolute grid cell.
  std::map<std::size_t, std::vector<int>> cell_neighbors;
  struct NeighborGeom {
    int id;
    double bearing, elevation;
    ViewIndex abs_index;
  };
  std::vector<NeighborGeom> neighbors;
  for (int m : graph.adjacency[static_cast<std::size_t>(node)]) {
    NeighborGeom ng;
    ng.id = m;
    const Vec3& there = graph.positions[static_cast<std::size_t>(m)];
    ng.bearing = bearing_between(here, there);
    ng.elevation = elevation_between(here, there);
    ng.abs_index = view_index_for_direction(ng.bearing, ng.elevation);
    cell_neighbors[ng.abs_index.flat()].push_back(m);
    neighbors.push_back(ng);
  }

  Tensor self_signal = features.node_signal(node, dims.d_image);

  Observation obs;
  obs.grid.dims = dims;
  obs.grid.views.resize(kNumViews);
  for (std::size_t r = 0; r < kGridRows; ++r)
    for (std::size_t c = 0; c < kGridCols; ++c) {
      const std::size_t abs_col = (c + h_col) % kGridCols;
      const std::size_t abs_flat = r * kGridCols + abs_col;
      RngStream cell_rng(hash_combine(
          hash_combine(tagged_seed(features.seed, kTagView),
                       static_cast<std::uint64_t>(node)),
          abs_flat));
      Tensor image = Tensor::vec(dims.d_image);
      for (std::size_t j = 0; j < dims.d_image; ++j)
        image[j] = features.noise_scale * cell_rng.uniform(-1.0, 1.0) +
                   0.5 * features.signal_scale * self_signal[j];
      auto it = cell_neighbors.find(abs_flat);
      if (it != cell_neighbors.end())
        for (int m : it->second) {
          Tensor sig = features.node_signal(m, dims.d_image);
          for (std::size_t j = 0; j < dims.d_image; ++j)
            image[j] += features.signal_scale * sig[j];
        }
      const double rel_heading = static_cast<double>(c) * kColStep;
      const double elevation = (static_cast<double>(r) - 1.0) * kColStep;
      obs.grid.views[r * kGridCols + c] =
          compose_view_feature(image, rel_heading, elevation, dims);
    }

  // Stop candidate first, then neighbors in id order.
  CandidateView stop;
  stop.neighbor = -1;
  stop.feature = stop_view_feature(obs.grid);
  obs.candidates.push_back(std::move(stop));
  for (const NeighborGeom& ng : neighbors) {
    CandidateView c;
    c.neighbor = ng.id;
    c.heading = ng.bearing - agent_heading;
    c.elevation = ng.elevation;
    c.index = view_index_for_direction(c.heading, c.elevation);
    c.feature = obs.grid.at(*c.index);
    c.feature.angle = encode_angle(c.heading, c.elevation, dims.d_angle);
    obs.candidates.push_back(std::move(c));
  }
  return obs;
}

Trajectory start_trajectory(const NavGraph& graph, int start) {
  if (start < 0 || static_cast<std::size_t>(start) >= graph.n_nodes())
    throw EvaluationError("start_trajectory: unknown node " + std::to_string(start));
  Trajectory t;
  t.visited.push_back(start);
  return t;
}

void step(const NavGraph& graph, Trajectory& trajectory, const Observation& obs,
          std::size_t action) {
  if (trajectory.terminated)
    throw EvaluationError("step: trajectory already terminated");
  if (action >= obs.candidates.size())
    throw EvaluationError("step: action " + std::to_string(action) +
                          " out of range (" +
                          std::to_string(obs.candidates.size()) + " candidates)");
  StepRecord rec;
  rec.action = action;
  if (obs.candidates[action].is_stop()) {
    trajectory.terminated = true;
    rec.node = trajectory.current();
    rec.heading = trajectory.heading;
    rec.reward = 0.0;
  } else {
    const int from = trajectory.current();
    const int to = obs.candidates[action].neighbor;
    trajectory.length += graph.edge_length(from, to);
    trajectory.heading = quantize_heading(
        bearing_between(graph.positions[static_cast<std::size_t>(from)],
                        graph.positions[static_cast<std::size_t>(to)]));
    trajectory.visited.push_back(to);
    rec.node = to;
    rec.heading = trajectory.heading;
    rec.reward = -1.0;
  }
  trajectory.steps.push_back(rec);
}

ShortestPath shortest_path(const NavGraph& graph, int a, int b) {
  const std::size_t n = graph.n_nodes();
  if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n ||
      static_cast<std::size_t>(b) >= n)
    throw EvaluationError("shortest_path: node out of range");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<int> prev(n, -1);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[static_cast<std::size_t>(a)] = 0.0;
  heap.push({0.0, a});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    for (int w : graph.adjacency[static_cast<std::size_t>(v)]) {
      const double nd = d + graph.edge_length(v, w);
      if (nd < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = nd;
        prev[static_cast<std::size_t>(w)] = v;
        heap.push({nd, w});
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(b)]))
    throw EvaluationError("shortest_path: nodes " + std::to_string(a) + " and " +
                          std::to_string(b) + " are disconnected");
  ShortestPath sp;
  sp.length = dist[static_cast<std::size_t>(b)];
  for (int v = b; v != -1; v = prev[static_cast<std::size_t>(v)])
    sp.path.push_back(v);
  std::reverse(sp.path.begin(), sp.path.end());
  return sp;
}

std::vector<double> shortest_path_lengths(const NavGraph& graph, int source) {
  std::vector<double> out(graph.n_nodes());
  for (std::size_t i = 0; i < graph.n_nodes(); ++i)
    out[i] = shortest_path(graph, source, static_cast<int>(i)).length;
  return out;
}

std::size_t teacher_action(const NavGraph& graph, const Episode& episode,
                           int current_node, const Observation& obs) {
  if (current_node == episode.goal) return 0;
  ShortestPath sp = shortest_path(graph, current_node, episode.goal);
  const int next = sp.path[1];
  for (std::size_t k = 1; k < obs.candidates.size(); ++k)
    if (obs.candidates[k].neighbor == next) return k;
  throw EvaluationError("teacher_action: shortest-path neighbor " +
                        std::to_string(next) + " not among candidates");
}

std::vector<Episode> generate_episodes(const NavGraph& graph,
                                       std::uint64_t seed, std::size_t count) {
  RngStream rng(tagged_seed(seed, kTagEpisode));
  std::vector<Episode> out;
  const std::size_t n = graph.n_nodes();
  for (std::size_t i = 0; i < count; ++i) {
    Episode e;
    e.start = static_cast<int>(rng.next_u64() % n);
    do {
      e.goal = static_cast<int>(rng.next_u64() % n);
    } while (e.goal == e.start);
    e.reference_path = shortest_path(graph, e.start, e.goal).path;
    e.seed = hash_combine(seed, 0x1000 + i);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace lsa
