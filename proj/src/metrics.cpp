#include "lsa/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lsa {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}
}  // namespace

std::string MetricsReport::csv_header() const {
  return "n_episodes,ne,sr,osr,spl,tl";
}

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  os << n_episodes << "," << fmt(ne) << "," << fmt(sr) << "," << fmt(osr) << ","
     << fmt(spl) << "," << fmt(tl);
  return os.str();
}

std::string MetricsReport::text() const {
  std::ostringstream os;
  os << "episodes " << n_episodes << "\n"
     << "ne " << fmt(ne) << "\n"
     << "sr " << fmt(sr) << "\n"
     << "osr " << fmt(osr) << "\n"
     << "spl " << fmt(spl) << "\n"
     << "tl " << fmt(tl) << "\n";
  return os.str();
}

double navigation_error(const NavGraph& graph, int final_node, int goal) {
  return shortest_path(graph, final_node, goal).length;
}

bool success(double ne, double radius) { return ne <= radius; }

bool oracle_success(const NavGraph& graph, const Trajectory& trajectory,
                    int goal, double radius) {
  if (trajectory.visited.empty())
    throw EvaluationError("oracle_success: empty trajectory");
  for (int node : trajectory.visited)
    if (shortest_path(graph, node, goal).length <= radius) return true;
  return false;
}

double spl(const std::vector<bool>& successes,
           const std::vector<double>& traj_lengths,
           const std::vector<double>& shortest_lengths) {
  if (successes.size() != traj_lengths.size() ||
      successes.size() != shortest_lengths.size())
    throw DimensionError("spl: sequence length mismatch");
  if (successes.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < successes.size(); ++i) {
    if (!successes[i]) continue;
    const double l = shortest_lengths[i];
    if (l == 0.0) {
      sum += 1.0;  // start == goal: the term is the success flag
      continue;
    }
    sum += l / std::max(traj_lengths[i], l);
  }
  return sum / static_cast<double>(successes.size());
}

MetricsReport aggregate_metrics(const NavGraph& graph,
                                const std::vector<EpisodeOutcome>& outcomes) {
  MetricsReport r;
  r.n_episodes = outcomes.size();
  if (outcomes.empty()) return r;
  std::vector<bool> succ;
  std::vector<double> lengths, shortest;
  double ne_sum = 0.0, tl_sum = 0.0, osr_sum = 0.0;
  for (const EpisodeOutcome& o : outcomes) {
    const double ne = navigation_error(graph, o.trajectory.current(), o.goal);
    ne_sum += ne;
    tl_sum += o.trajectory.length;
    succ.push_back(success(ne));
    if (oracle_success(graph, o.trajectory, o.goal)) osr_sum += 1.0;
    lengths.push_back(o.trajectory.length);
    shortest.push_back(o.shortest_length);
  }
  const double n = static_cast<double>(outcomes.size());
  r.ne = ne_sum / n;
  r.tl = tl_sum / n;
  double sr_sum = 0.0;
  for (bool s : succ) sr_sum += s ? 1.0 : 0.0;
  r.sr = sr_sum / n;
  r.osr = osr_sum / n;
  r.spl = spl(succ, lengths, shortest);
  return r;
}

}  // namespace lsa
