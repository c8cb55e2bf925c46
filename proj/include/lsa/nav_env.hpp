#ifndef LSA_NAV_ENV_HPP
#define LSA_NAV_ENV_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "lsa/view_geometry.hpp"

namespace lsa {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

double distance(const Vec3& a, const Vec3& b);

// Undirected weighted connectivity graph with 3-D node positions (meters).
struct NavGraph {
  std::vector<Vec3> positions;                      // node id -> position
  std::vector<std::vector<int>> adjacency;          // sorted neighbor ids
  std::size_t n_nodes() const { return positions.size(); }
  bool has_edge(int a, int b) const;
  double edge_length(int a, int b) const;
  bool is_connected() const;
};

struct Episode {
  int start = 0;
  int goal = 0;
  std::vector<int> reference_path;  // shortest path start -> goal
  std::uint64_t seed = 0;           // per-episode stream seed
};

struct StepRecord {
  int node = 0;             // node after the step
  std::size_t action = 0;   // chosen candidate index (0 = stop)
  double heading = 0.0;     // agent heading after the step
  double reward = 0.0;      // recorded but consumed by no learner
};

struct Trajectory {
  std::vector<int> visited;  // starts with the start node
  std::vector<StepRecord> steps;
  double heading = 0.0;  // current agent heading
  double length = 0.0;   // accumulated meters
  bool terminated = false;
  int current() const { return visited.back(); }
};

// Samples node positions in a cube of side box_size and connects nodes within
// connect_radius, growing the radius until the graph is connected.
// Deterministic per (seed, n_nodes, connect_radius, box_size).
NavGraph generate_synthetic_env(std::uint64_t seed, std::size_t n_nodes,
                                double connect_radius, double box_size);

// Synthetic view features: seeded noise plus node-identity signal components
// so that imitation learning has something to latch onto. Every view at a
// node carries the node's own signal; views facing a neighbor additionally
// carry that neighbor's signal.
struct FeatureSource {
  FeatureDims dims;
  std::uint64_t seed = 0;
  double noise_scale = 0.1;
  double signal_scale = 1.0;
  std::size_t signal_width = 0;  // 0 means min(d_image, 8)

  // Deterministic identity signal for a node, signal_width wide, embedded at
  // a node-dependent offset pattern within width d.
  Tensor node_signal(int node, std::size_t d) const;
};

struct Observation {
  PanoramaGrid grid;
  std::vector<CandidateView> candidates;  // stop candidate at position 0
};

// Panorama and candidate list at a node. Grid column 0 faces the agent's
// current heading; features are keyed by absolute direction so a node looks
// the same from every approach. agent_heading is quantized to the 12 grid
// headings by the caller (step() maintains this).
Observation observe(const NavGraph& graph, int node, double agent_heading,
                    const FeatureSource& features);

Trajectory start_trajectory(const NavGraph& graph, int start);

// Applies a candidate action: stop terminates, otherwise the agent moves to
// the chosen neighbor, its heading snaps to the traversed edge's bearing and
// the trajectory length grows by the edge length.
void step(const NavGraph& graph, Trajectory& trajectory,
          const Observation& obs, std::size_t action);

struct ShortestPath {
  double length = 0.0;
  std::vector<int> path;
};

// Exact Dijkstra shortest path on edge lengths; deterministic tie-break by
// node id.
ShortestPath shortest_path(const NavGraph& graph, int a, int b);

// All-targets variant from a single source.
std::vector<double> shortest_path_lengths(const NavGraph& graph, int source);

// Candidate index following the shortest path to the goal; 0 (stop) at goal.
std::size_t teacher_action(const NavGraph& graph, const Episode& episode,
                           int current_node, const Observation& obs);

// Samples episodes (start != goal) with shortest-path references.
std::vector<Episode> generate_episodes(const NavGraph& graph,
                                       std::uint64_t seed, std::size_t count);

}  // namespace lsa

#endif  // LSA_NAV_ENV_HPP
