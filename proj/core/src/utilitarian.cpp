#include <algorithm>
#include <limits>
#include <map>

#include "karma/mlnw.hpp"

namespace karma {

namespace {

class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : adj_(nodes) {}

  int addEdge(int from, int to, double cap, double cost) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, cap, cost});
    adj_[from].push_back(id);
    edges_.push_back({from, 0.0, -cost});
    adj_[to].push_back(id + 1);
    return id;
  }

  double flow(int edge) const { return edges_[edge ^ 1].cap; }

  /// Successive shortest paths, stopping once no negative-cost path remains.
  void run(int source, int sink, double eps) {
    const int n = static_cast<int>(adj_.size());
    const double inf = std::numeric_limits<double>::infinity();
    for (;;) {
      std::vector<double> dist(n, inf);
      std::vector<int> via(n, -1);
      dist[source] = 0.0;
      for (int round = 0; round < n; ++round) {
        bool changed = false;
        for (int v = 0; v < n; ++v) {
          if (dist[v] == inf) continue;
          for (int id : adj_[v]) {
            const Edge& e = edges_[id];
            if (e.cap <= eps) continue;
            if (dist[v] + e.cost < dist[e.to] - 1e-12) {
              dist[e.to] = dist[v] + e.cost;
              via[e.to] = id;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (dist[sink] == inf || dist[sink] >= -eps) return;

      double push = inf;
      for (int v = sink; v != source; v = edges_[via[v] ^ 1].to)
        push = std::min(push, edges_[via[v]].cap);
      for (int v = sink; v != source; v = edges_[via[v] ^ 1].to) {
        edges_[via[v]].cap -= push;
        edges_[via[v] ^ 1].cap += push;
      }
    }
  }

 private:
  struct Edge {
    int to;
    double cap;
    double cost;
  };
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

}  // namespace

LongRunAllocation utilitarian(const Problem& problem) {
  checkStructure(problem);
  const std::size_t m = problem.numResources();
  const int source = 0, sink = 1, firstResource = 2;
  constexpr double kEps = 1e-12;
  LongRunAllocation chi = CellTensor::zerosLike(problem);

  // Flow is measured in users: y = mass * sigma * chi.
  if (problem.mutuallyExclusive) {
    std::vector<std::pair<std::size_t, std::size_t>> rowOf;
    for (std::size_t i = 0; i < problem.numTypes(); ++i)
      for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) rowOf.push_back({i, k});
    const int firstRow = firstResource + static_cast<int>(m);
    MinCostFlow g(firstRow + static_cast<int>(rowOf.size()));
    for (std::size_t j = 0; j < m; ++j)
      g.addEdge(firstResource + static_cast<int>(j), sink, problem.capacities[j], 0.0);

    std::vector<std::vector<int>> edgeOf(rowOf.size(), std::vector<int>(m, -1));
    for (std::size_t r = 0; r < rowOf.size(); ++r) {
      const auto [i, k] = rowOf[r];
      const UserType& t = problem.types[i];
      const int node = firstRow + static_cast<int>(r);
      g.addEdge(source, node, t.mass * t.urgency.probs[k], 0.0);
      for (std::size_t j = 0; j < m; ++j)
        if (t.desires(j))
          edgeOf[r][j] = g.addEdge(node, firstResource + static_cast<int>(j),
                                   std::numeric_limits<double>::infinity(),
                                   -t.urgency.levels[k] * t.gain(j));
    }
    g.run(source, sink, kEps);

    // Rows with identical value vectors form one tie class and share flow
    // equally per user.
    std::map<std::vector<double>, std::vector<std::size_t>> classes;
    for (std::size_t r = 0; r < rowOf.size(); ++r) {
      const auto [i, k] = rowOf[r];
      const UserType& t = problem.types[i];
      std::vector<double> key(m);
      for (std::size_t j = 0; j < m; ++j)
        key[j] = t.desires(j) ? t.urgency.levels[k] * t.gain(j) : 0.0;
      classes[key].push_back(r);
    }
    for (const auto& [key, members] : classes) {
      double users = 0.0;
      std::vector<double> flow(m, 0.0);
      for (std::size_t r : members) {
        const auto [i, k] = rowOf[r];
        users += problem.types[i].mass * problem.types[i].urgency.probs[k];
        for (std::size_t j = 0; j < m; ++j)
          if (edgeOf[r][j] >= 0) flow[j] += g.flow(edgeOf[r][j]);
      }
      for (std::size_t r : members) {
        const auto [i, k] = rowOf[r];
        for (std::size_t j = 0; j < m; ++j) chi(i, j, k) = std::min(1.0, flow[j] / users);
      }
    }
    return chi;
  }

  MinCostFlow g(firstResource + static_cast<int>(m));
  for (std::size_t j = 0; j < m; ++j)
    g.addEdge(firstResource + static_cast<int>(j), sink, problem.capacities[j], 0.0);
  struct Cell {
    std::size_t i, j, k;
    int edge;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < problem.numTypes(); ++i) {
    const UserType& t = problem.types[i];
    for (std::size_t j = 0; j < m; ++j) {
      if (!t.desires(j)) continue;
      for (std::size_t k = 0; k < t.urgency.size(); ++k)
        cells.push_back({i, j, k,
                         g.addEdge(source, firstResource + static_cast<int>(j),
                                   t.mass * t.urgency.probs[k],
                                   -t.urgency.levels[k] * t.gain(j))});
    }
  }
  g.run(source, sink, kEps);

  std::map<std::pair<std::size_t, double>, std::vector<std::size_t>> classes;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    const UserType& t = problem.types[cell.i];
    classes[{cell.j, t.urgency.levels[cell.k] * t.gain(cell.j)}].push_back(c);
  }
  for (const auto& [key, members] : classes) {
    double users = 0.0, flow = 0.0;
    for (std::size_t c : members) {
      const UserType& t = problem.types[cells[c].i];
      users += t.mass * t.urgency.probs[cells[c].k];
      flow += g.flow(cells[c].edge);
    }
    for (std::size_t c : members) chi(cells[c].i, cells[c].j, cells[c].k) = std::min(1.0, flow / users);
  }
  return chi;
}

double utilitarianObjective(const Problem& problem, const LongRunAllocation& chi) {
  double total = 0.0;
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    total += problem.types[i].mass * rewardImprovement(problem, chi, i);
  return total;
}

}  // namespace karma
