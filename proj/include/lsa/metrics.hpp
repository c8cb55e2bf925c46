#ifndef LSA_METRICS_HPP
#define LSA_METRICS_HPP

#include <string>
#include <vector>

#include "lsa/nav_env.hpp"

namespace lsa {

constexpr double kSuccessRadius = 3.0;  // meters, boundary inclusive

struct MetricsReport {
  double ne = 0.0;   // mean navigation error (meters)
  double sr = 0.0;   // success rate
  double osr = 0.0;  // oracle success rate
  double spl = 0.0;  // success weighted by path length
  double tl = 0.0;   // mean trajectory length (meters)
  std::size_t n_episodes = 0;

  std::string csv_header() const;
  std::string csv_row() const;
  std::string text() const;
};

// Geodesic distance from the trajectory's final node to the goal.
double navigation_error(const NavGraph& graph, int final_node, int goal);

bool success(double ne, double radius = kSuccessRadius);

// True iff any visited node is within the success radius of the goal.
bool oracle_success(const NavGraph& graph, const Trajectory& trajectory,
                    int goal, double radius = kSuccessRadius);

// Mean over episodes of S_i * l_i / max(p_i, l_i); start == goal episodes
// contribute their success flag.
double spl(const std::vector<bool>& successes,
           const std::vector<double>& traj_lengths,
           const std::vector<double>& shortest_lengths);

struct EpisodeOutcome {
  Trajectory trajectory;
  int goal = 0;
  double shortest_length = 0.0;  // start -> goal
};

MetricsReport aggregate_metrics(const NavGraph& graph,
                                const std::vector<EpisodeOutcome>& outcomes);

}  // namespace lsa

#endif  // LSA_METRICS_HPP
