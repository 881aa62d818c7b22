#include "karma/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace karma {

namespace {

struct Cell {
  std::size_t i, j, k;
};

}  // namespace

namespace {

struct Segment {
  double cost;
  double value;
  double prob;
  int from;  // resource given up, or -1
  int to;
};

// Best improvement of one user facing per-unit prices on each resource: the
// cheapest way to reach each improvement level is a greedy walk over
// segments sorted by value per cost, and w log r - cost(r) is maximized where
// w / r meets the marginal cost.
struct PricedChoice {
  double improvement = 0.0;
  double cost = 0.0;
  /// Expected units of each resource used per user.
  std::vector<double> usage;
};

PricedChoice priceUser(const Problem& problem, std::size_t i, const std::vector<double>& prices) {
  const UserType& t = problem.types[i];
  const std::size_t m = problem.numResources();
  std::vector<Segment> segs;
  for (std::size_t k = 0; k < t.urgency.size(); ++k) {
    const double s = t.urgency.probs[k], u = t.urgency.levels[k];
    std::vector<Segment> options;
    for (std::size_t j = 0; j < m; ++j)
      if (t.desires(j) && problem.capacities[j] > 0)
        options.push_back({s * prices[j], s * u * t.gain(j), s, -1, static_cast<int>(j)});
    if (!problem.mutuallyExclusive) {
      segs.insert(segs.end(), options.begin(), options.end());
      continue;
    }
    // One unit per level: walk the upper hull of the options from the origin.
    Segment cur{0.0, 0.0, s, -1, -1};
    for (;;) {
      const Segment* next = nullptr;
      double bestEff = -1.0;
      for (const auto& o : options) {
        if (o.value <= cur.value) continue;
        const double dc = o.cost - cur.cost, dv = o.value - cur.value;
        const double eff = dc <= 0.0 ? HUGE_VAL : dv / dc;
        if (eff > bestEff || (eff == bestEff && o.value > next->value)) {
          bestEff = eff;
          next = &o;
        }
      }
      if (!next) break;
      segs.push_back({std::max(0.0, next->cost - cur.cost), next->value - cur.value, s, cur.to,
                      next->to});
      cur = *next;
    }
  }
  std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
    return a.value * b.cost > b.value * a.cost;
  });

  PricedChoice out;
  out.usage.assign(m, 0.0);
  auto take = [&](const Segment& sg, double fraction) {
    out.improvement += fraction * sg.value;
    out.cost += fraction * sg.cost;
    out.usage[sg.to] += fraction * sg.prob;
    if (sg.from >= 0) out.usage[sg.from] -= fraction * sg.prob;
  };
  const double w = t.weight;
  for (const auto& sg : segs) {
    if (sg.cost <= 0.0) {
      take(sg, 1.0);
      continue;
    }
    const double target = w * sg.value / sg.cost;
    if (target <= out.improvement) break;
    if (target >= out.improvement + sg.value) {
      take(sg, 1.0);
    } else {
      take(sg, (target - out.improvement) / sg.value);
      break;
    }
  }
  return out;
}

}  // namespace

OracleResult mlnwOracle(const Problem& problem, int resolution) {
  if (resolution < 1) throw std::invalid_argument("resolution must be at least 1");
  const std::size_t m = problem.numResources();
  const std::size_t nt = problem.numTypes();

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (problem.types[i].desires(j))
        for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) cells.push_back({i, j, k});
  const std::size_t d = cells.size();
  if (d > 6)
    throw std::length_error("grid oracle supports at most 6 free cells, got " +
                            std::to_string(d));

  // Every type needs some desired resource with room, otherwise no allocation
  // improves all of them.
  for (std::size_t i = 0; i < nt; ++i) {
    bool reachable = false;
    for (std::size_t j = 0; j < m; ++j)
      reachable = reachable || (problem.types[i].desires(j) && problem.capacities[j] > 0);
    if (!reachable)
      throw std::domain_error("empty feasible set: type " + std::to_string(i) +
                              " cannot be improved");
  }

  // Dual function over capacity prices; convex, and its minimum equals the
  // optimal Nash welfare. Prices never exceed total weight over capacity.
  double totalWeight = 0.0;
  for (const auto& t : problem.types) totalWeight += t.mass * t.weight;
  // The subgradient is the capacity left over at the users' choices.
  std::vector<double> slack(m);
  auto dual = [&](const std::vector<double>& prices) {
    double g = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      g += prices[j] * problem.capacities[j];
      slack[j] = problem.capacities[j];
    }
    for (std::size_t i = 0; i < nt; ++i) {
      const PricedChoice c = priceUser(problem, i, prices);
      const UserType& t = problem.types[i];
      g += t.mass * (t.weight * std::log(c.improvement) - c.cost);
      for (std::size_t j = 0; j < m; ++j) slack[j] -= t.mass * c.usage[j];
    }
    return g;
  };

  std::vector<double> upper(m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    if (problem.capacities[j] > 0) upper[j] = 2.0 * totalWeight / problem.capacities[j];

  // Nested grid: recenter on an improved incumbent, shrink by 4 otherwise.
  const int points = 8 * resolution + 1;
  std::vector<double> lo(m, 0.0), width(upper), best(m, 0.0), x(m);
  double bestG = dual(best);
  for (int round = 0; round < 5000; ++round) {
    std::vector<int> idx(m, 0);
    std::vector<double> roundBest = best;
    double roundG = bestG;
    for (;;) {
      for (std::size_t j = 0; j < m; ++j) x[j] = lo[j] + width[j] * idx[j] / (points - 1);
      const double g = dual(x);
      if (g < roundG) {
        roundG = g;
        roundBest = x;
      }
      std::size_t j = 0;
      while (j < m && ++idx[j] == points) idx[j++] = 0;
      if (j == m) break;
    }
    const bool improved = roundG < bestG - 1e-15 * std::abs(bestG);
    best = roundBest;
    bestG = roundG;
    double maxWidth = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double w = improved ? width[j] : width[j] / 4;
      lo[j] = std::clamp(best[j] - w / 2, 0.0, std::max(0.0, upper[j] - w));
      width[j] = std::min(w, upper[j]);
      maxWidth = std::max(maxWidth, width[j] / std::max(1.0, upper[j]));
    }
    if (maxWidth < 1e-13) break;
  }

  // The grid can stall in kinked valleys of the dual; polish with a central-cut
  // ellipsoid over the whole price box (bisection in one dimension).
  if (m == 1) {
    double a = 0.0, z = upper[0];
    std::vector<double> p(1);
    for (int it = 0; it < 200 && z - a > 1e-15 * std::max(1.0, upper[0]); ++it) {
      p[0] = 0.5 * (a + z);
      const double g = dual(p);
      if (g < bestG) {
        bestG = g;
        best = p;
      }
      (slack[0] > 0.0 ? z : a) = p[0];
    }
  } else {
    const double n = static_cast<double>(m);
    Eigen::VectorXd center(m), h(m);
    // Factored form E = {center + L u : |u| <= 1} keeps the shape matrix PSD.
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    double radius2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      center[j] = 0.5 * upper[j];
      radius2 += center[j] * center[j];
    }
    L.diagonal().setConstant(std::sqrt(radius2 * 1.0001));
    const double floor2 = 1e-26 * radius2;
    const double dilate = n / std::sqrt(n * n - 1.0);
    const double shrink = 1.0 - std::sqrt((n - 1.0) / (n + 1.0));
    std::vector<double> p(m);
    for (int it = 0; it < 20000 && L.squaredNorm() > floor2; ++it) {
      std::size_t negative = m;
      for (std::size_t j = 0; j < m; ++j) {
        p[j] = center[j];
        if (p[j] < 0.0 && negative == m) negative = j;
      }
      if (negative < m) {
        h.setZero();
        h[negative] = -1.0;
      } else {
        const double g = dual(p);
        if (g < bestG) {
          bestG = g;
          best = p;
        }
        for (std::size_t j = 0; j < m; ++j) h[j] = slack[j];
      }
      const Eigen::VectorXd a = L.transpose() * h;
      const double norm = a.norm();
      if (!(norm > 0.0)) break;
      const Eigen::VectorXd u = a / norm;
      const Eigen::VectorXd step = L * u;
      center -= step / (n + 1.0);
      L = dilate * (L - shrink * step * u.transpose());
    }
  }

  // Improvements are unique at the optimum. Recover a feasible allocation that
  // reaches the largest common fraction t of them.
  std::vector<double> target(nt);
  for (std::size_t i = 0; i < nt; ++i) target[i] = priceUser(problem, i, best).improvement;

  const std::size_t nv = d + 1;  // cells, then t
  std::vector<std::vector<double>> A;
  std::vector<double> b, c(nv, 0.0);
  c[d] = 1.0;
  auto unit = [&](std::size_t v, double sign) {
    std::vector<double> row(nv, 0.0);
    row[v] = sign;
    return row;
  };
  for (std::size_t v = 0; v < nv; ++v) {
    A.push_back(unit(v, 1.0));
    b.push_back(1.0);
    A.push_back(unit(v, -1.0));
    b.push_back(0.0);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> row(nv, 0.0);
    bool any = false;
    for (std::size_t v = 0; v < d; ++v)
      if (cells[v].j == j) {
        const UserType& t = problem.types[cells[v].i];
        row[v] = t.mass * t.urgency.probs[cells[v].k];
        any = true;
      }
    if (any) {
      A.push_back(row);
      b.push_back(problem.capacities[j]);
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    std::vector<double> row(nv, 0.0);
    for (std::size_t v = 0; v < d; ++v)
      if (cells[v].i == i) {
        const UserType& t = problem.types[i];
        row[v] = -t.urgency.probs[cells[v].k] * t.urgency.levels[cells[v].k] * t.gain(cells[v].j);
      }
    row[d] = target[i];
    A.push_back(row);
    b.push_back(0.0);
  }
  if (problem.mutuallyExclusive)
    for (std::size_t i = 0; i < nt; ++i)
      for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) {
        std::vector<double> row(nv, 0.0);
        int count = 0;
        for (std::size_t v = 0; v < d; ++v)
          if (cells[v].i == i && cells[v].k == k) {
            row[v] = 1.0;
            ++count;
          }
        if (count > 1) {
          A.push_back(row);
          b.push_back(1.0);
        }
      }
  const LpResult lp = lpVertexOracle(A, b, c);

  OracleResult out;
  out.chi = CellTensor::zerosLike(problem);
  if (lp.feasible)
    for (std::size_t v = 0; v < d; ++v)
      out.chi(cells[v].i, cells[v].j, cells[v].k) = std::clamp(lp.x[v], 0.0, 1.0);
  out.objective = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    const double r = rewardImprovement(problem, out.chi, i);
    out.objective += problem.types[i].mass * problem.types[i].weight * std::log(r);
  }
  out.dualBound = bestG;
  out.prices = best;
  return out;
}

LpResult lpVertexOracle(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                        const std::vector<double>& c) {
  const std::size_t rows = A.size();
  const std::size_t d = c.size();
  LpResult out;
  out.objective = -HUGE_VAL;
  if (d == 0) {
    out.feasible = std::all_of(b.begin(), b.end(), [](double v) { return v >= 0.0; });
    out.objective = 0.0;
    return out;
  }

  std::vector<std::size_t> pick(d);
  for (std::size_t k = 0; k < d; ++k) pick[k] = k;
  Eigen::MatrixXd M(d, d);
  Eigen::VectorXd rhs(d);
  while (true) {
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t col = 0; col < d; ++col) M(r, col) = A[pick[r]][col];
      rhs[r] = b[pick[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(rhs);
      bool ok = true;
      for (std::size_t r = 0; r < rows && ok; ++r) {
        double lhs = 0.0;
        for (std::size_t col = 0; col < d; ++col) lhs += A[r][col] * x[col];
        ok = lhs <= b[r] + 1e-9 * (1.0 + std::abs(b[r]));
      }
      if (ok) {
        double obj = 0.0;
        for (std::size_t col = 0; col < d; ++col) obj += c[col] * x[col];
        if (obj > out.objective) {
          out.objective = obj;
          out.x.assign(x.data(), x.data() + d);
          out.feasible = true;
        }
      }
    }
    // Next d-combination of constraint rows.
    std::size_t k = d;
    while (k > 0 && pick[k - 1] == rows - d + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t r = k; r < d; ++r) pick[r] = pick[r - 1] + 1;
  }
  return out;
}

double userProblemOracle(const UserType& type, const std::vector<double>& bids,
                         double budgetShare, bool mutuallyExclusive) {
  const std::size_t m = bids.size();
  const std::size_t q = type.urgency.size();
  const std::size_t d = m * q;
  std::vector<std::vector<double>> A;
  std::vector<double> b, c(d);
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t j = 0; j < m; ++j)
      c[k * m + j] = type.urgency.probs[k] * type.urgency.levels[k] * type.gain(j);

  std::vector<double> budget(d);
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t j = 0; j < m; ++j) budget[k * m + j] = type.urgency.probs[k] * bids[j];
  A.push_back(budget);
  b.push_back(budgetShare);
  for (std::size_t v = 0; v < d; ++v) {
    std::vector<double> up(d, 0.0), down(d, 0.0);
    up[v] = 1.0;
    down[v] = -1.0;
    A.push_back(up);
    b.push_back(1.0);
    A.push_back(down);
    b.push_back(0.0);
  }
  if (mutuallyExclusive)
    for (std::size_t k = 0; k < q; ++k) {
      std::vector<double> row(d, 0.0);
      for (std::size_t j = 0; j < m; ++j) row[k * m + j] = 1.0;
      A.push_back(row);
      b.push_back(1.0);
    }
  return lpVertexOracle(A, b, c).objective;
}

double utilitarianOracle(const Problem& problem) {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < problem.numTypes(); ++i)
    for (std::size_t j = 0; j < problem.numResources(); ++j)
      for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) cells.push_back({i, j, k});
  const std::size_t d = cells.size();

  std::vector<std::vector<double>> A;
  std::vector<double> b, c(d);
  for (std::size_t v = 0; v < d; ++v) {
    const UserType& t = problem.types[cells[v].i];
    c[v] = t.mass * t.urgency.probs[cells[v].k] * t.urgency.levels[cells[v].k] *
           t.gain(cells[v].j);
    std::vector<double> up(d, 0.0), down(d, 0.0);
    up[v] = 1.0;
    down[v] = -1.0;
    A.push_back(up);
    b.push_back(1.0);
    A.push_back(down);
    b.push_back(0.0);
  }
  for (std::size_t j = 0; j < problem.numResources(); ++j) {
    std::vector<double> row(d, 0.0);
    for (std::size_t v = 0; v < d; ++v)
      if (cells[v].j == j) {
        const UserType& t = problem.types[cells[v].i];
        row[v] = t.mass * t.urgency.probs[cells[v].k];
      }
    A.push_back(row);
    b.push_back(problem.capacities[j]);
  }
  if (problem.mutuallyExclusive)
    for (std::size_t i = 0; i < problem.numTypes(); ++i)
      for (std::size_t k = 0; k < problem.types[i].urgency.size(); ++k) {
        std::vector<double> row(d, 0.0);
        for (std::size_t v = 0; v < d; ++v)
          if (cells[v].i == i && cells[v].k == k) row[v] = 1.0;
        A.push_back(row);
        b.push_back(1.0);
      }
  return lpVertexOracle(A, b, c).objective;
}

}  // namespace karma
