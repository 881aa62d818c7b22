#include <algorithm>
#include <cmath>

#include "karma/ke.hpp"

namespace karma {

namespace {

// A group is a set of mutually exclusive options for one urgency level: the
// whole row when resources are mutually exclusive, a single cell otherwise.
struct Group {
  std::size_t level;
  std::vector<std::size_t> options;
};

struct Selection {
  std::vector<std::vector<double>> chi;
  double spend = 0.0;
};

class UserLp {
 public:
  UserLp(const UserType& type, const std::vector<double>& bids, bool me)
      : type_(type), bids_(bids) {
    const std::size_t m = bids.size();
    for (std::size_t k = 0; k < type.urgency.size(); ++k) {
      if (me) {
        Group g{k, {}};
        for (std::size_t j = 0; j < m; ++j)
          if (type.desires(j)) g.options.push_back(j);
        if (!g.options.empty()) groups_.push_back(std::move(g));
      } else {
        for (std::size_t j = 0; j < m; ++j)
          if (type.desires(j)) groups_.push_back({k, {j}});
      }
    }
  }

  double value(std::size_t k, std::size_t j, double kappa) const {
    return type_.urgency.levels[k] * type_.gain(j) - kappa * bids_[j];
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const Group& g : groups_) {
      const double u = type_.urgency.levels[g.level];
      for (std::size_t a = 0; a < g.options.size(); ++a) {
        const std::size_t p = g.options[a];
        if (bids_[p] > 0.0) out.push_back(u * type_.gain(p) / bids_[p]);
        for (std::size_t b = a + 1; b < g.options.size(); ++b) {
          const std::size_t q = g.options[b];
          if (bids_[p] == bids_[q]) continue;
          const double k = u * (type_.gain(p) - type_.gain(q)) / (bids_[p] - bids_[q]);
          if (k > 0.0 && std::isfinite(k)) out.push_back(k);
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Lagrangian maximizer at a kappa that is not a breakpoint. Options tied at
  /// every kappa (identical gain and bid) share the row equally.
  Selection select(double kappa) const {
    Selection s;
    s.chi.assign(type_.urgency.size(), std::vector<double>(bids_.size(), 0.0));
    for (const Group& g : groups_) {
      double best = 0.0;
      for (std::size_t j : g.options) best = std::max(best, value(g.level, j, kappa));
      if (!(best > 0.0)) continue;
      std::size_t ties = 0;
      for (std::size_t j : g.options) ties += value(g.level, j, kappa) == best;
      for (std::size_t j : g.options)
        if (value(g.level, j, kappa) == best) s.chi[g.level][j] = 1.0 / ties;
    }
    for (std::size_t k = 0; k < s.chi.size(); ++k)
      for (std::size_t j = 0; j < bids_.size(); ++j)
        s.spend += type_.urgency.probs[k] * s.chi[k][j] * bids_[j];
    return s;
  }

 private:
  const UserType& type_;
  const std::vector<double>& bids_;
  std::vector<Group> groups_;
};

}  // namespace

UserProblemSolution solveUserProblem(const UserType& type, const std::vector<double>& bids,
                                     double budgetShare, bool mutuallyExclusive) {
  if (bids.size() != type.rewardsOn.size())
    throw std::invalid_argument("bid vector length does not match resources");
  if (!(budgetShare >= 0.0)) throw std::invalid_argument("budget share must be nonnegative");
  for (double b : bids)
    if (!(b >= 0.0)) throw std::invalid_argument("bids must be nonnegative");

  const UserLp lp(type, bids, mutuallyExclusive);
  const std::vector<double> K = lp.breakpoints();
  const std::size_t L = K.size();

  // Interval t is (K[t-1], K[t]) with K[-1] = 0 and K[L] = inf.
  auto probe = [&](std::size_t t) {
    if (L == 0) return 1.0;
    if (t == 0) return K[0] / 2;
    if (t == L) return 2 * K[L - 1] + 1.0;
    return (K[t - 1] + K[t]) / 2;
  };

  UserProblemSolution out;
  Selection first = lp.select(probe(0));
  if (first.spend <= budgetShare) {
    out.chi = std::move(first.chi);
    out.kappa = 0.0;
  } else {
    std::size_t lo = 0, hi = L;  // spend(lo) > budget >= spend(hi)
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (lp.select(probe(mid)).spend <= budgetShare)
        hi = mid;
      else
        lo = mid;
    }
    const Selection below = lp.select(probe(hi - 1));
    const Selection above = lp.select(probe(hi));
    const double theta = (budgetShare - above.spend) / (below.spend - above.spend);
    out.kappa = K[hi - 1];
    out.chi = above.chi;
    for (std::size_t k = 0; k < out.chi.size(); ++k)
      for (std::size_t j = 0; j < bids.size(); ++j)
        out.chi[k][j] = theta * below.chi[k][j] + (1.0 - theta) * above.chi[k][j];
  }

  const std::size_t q = type.urgency.size();
  out.eta.assign(q, std::vector<double>(bids.size(), 0.0));
  out.etaRow.assign(q, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    const double sigma = type.urgency.probs[k];
    for (std::size_t j = 0; j < bids.size(); ++j) {
      const double v = sigma * lp.value(k, j, out.kappa);
      if (mutuallyExclusive)
        out.etaRow[k] = std::max(out.etaRow[k], v);
      else
        out.eta[k][j] = std::max(0.0, v);
      out.objective += sigma * type.urgency.levels[k] * type.gain(j) * out.chi[k][j];
      out.spend += sigma * bids[j] * out.chi[k][j];
    }
  }
  return out;
}

}  // namespace karma
