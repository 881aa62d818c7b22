#include <boost/multiprecision/cpp_int.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "karma/oracle.hpp"

namespace karma {

namespace {

using boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// A strategy is a pair of 2-bit masks: bit 0 = bid when urgency is low,
// bit 1 = bid when urgency is high; one mask per day.
struct Strategy {
  int day1;
  int day2;
};

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Opponent behaviour as integer numerators over the probability denominator D.
struct Opponent {
  cpp_int q1;  // D * P(bids on day 1)
  cpp_int q2;  // D * P(bids on day 2 | still holds the token)
};

// Joint law of the opponents' day-1 bid count x, the number l of them tagged
// as day-1 losers, and the number z of token holders bidding on day 2, as
// numerators over D^(2 * opponents). Summing over every tagged subset and
// dividing by C(x, l) later gives the uniform rationing law.
class Law {
 public:
  explicit Law(int k) : k_(k), w_((k + 1) * (k + 1) * (k + 1)) { at(0, 0, 0) = 1; }

  cpp_int& at(int x, int l, int z) { return w_[(x * (k_ + 1) + l) * (k_ + 1) + z]; }
  const cpp_int& at(int x, int l, int z) const { return w_[(x * (k_ + 1) + l) * (k_ + 1) + z]; }

  Law with(int seen, const Opponent& o, const cpp_int& D) const {
    Law g(k_);
    g.at(0, 0, 0) = 0;
    const cpp_int hold = D - o.q1;
    const cpp_int skip2 = D - o.q2;
    const cpp_int holdBid = hold * o.q2, holdSkip = hold * skip2;
    const cpp_int win = o.q1 * D, loseBid = o.q1 * o.q2, loseSkip = o.q1 * skip2;
    for (int x = 0; x <= seen; ++x)
      for (int l = 0; l <= x; ++l)
        for (int z = 0; z <= seen; ++z) {
          const cpp_int& w = at(x, l, z);
          if (w.is_zero()) continue;
          // Holds on day 1, then may bid on day 2.
          g.at(x, l, z + 1) += w * holdBid;
          g.at(x, l, z) += w * holdSkip;
          // Bids on day 1 and wins: no token left.
          g.at(x + 1, l, z) += w * win;
          // Bids on day 1, tagged as loser, may bid again.
          g.at(x + 1, l + 1, z + 1) += w * loseBid;
          g.at(x + 1, l + 1, z) += w * loseSkip;
        }
    return g;
  }

 private:
  int k_;
  std::vector<cpp_int> w_;
};

std::string describe(const std::vector<int>& profile, const std::vector<Strategy>& reps) {
  std::ostringstream s;
  for (std::size_t a = 0; a < profile.size(); ++a) {
    if (a) s << ' ';
    const Strategy& st = reps[profile[a]];
    s << "(d1=" << st.day1 << ",d2=" << st.day2 << ')';
  }
  return s.str();
}

}  // namespace

DominanceReport twoShotCheck(const TwoShotGameSpec& spec) {
  if (spec.n < 2 || spec.n > 8) throw std::invalid_argument("n must lie in [2, 8]");
  if (spec.capacity < 1 || spec.capacity >= spec.n)
    throw std::invalid_argument("capacity must lie in [1, n)");
  if (!(spec.uLow > 0.0) || !(spec.uHigh > spec.uLow) || !std::isfinite(spec.uHigh))
    throw std::invalid_argument("urgencies must satisfy 0 < u_low < u_high");
  if (!(spec.pHigh > 0.0 && spec.pHigh < 1.0))
    throw std::invalid_argument("high-urgency probability must lie in (0, 1)");

  const int k = spec.n - 1;
  const int c = spec.capacity;

  // Doubles are dyadic rationals, so these conversions are exact. Everything
  // below is an integer numerator over one common positive denominator.
  const Rational pHigh(spec.pHigh), uLow(spec.uLow), uHigh(spec.uHigh);
  const cpp_int D = denominator(pHigh);
  const cpp_int P = numerator(pHigh);
  const cpp_int Du = boost::multiprecision::lcm(denominator(uLow), denominator(uHigh));
  const cpp_int UL = numerator(Rational(uLow * Du)), UH = numerator(Rational(uHigh * Du));

  // Rationing denominators: bidders * C(x, l) for every reachable (x, l).
  std::int64_t M = 1;
  for (int x = 0; x <= k; ++x)
    for (int bidders : {x, x + 1}) {
      const int l = std::max(0, bidders - c);
      if (bidders > 0) M = std::lcm(M, bidders * binomial(x, std::min(l, x)));
      if (l >= 1) M = std::lcm(M, bidders * binomial(x, l - 1));
    }
  std::int64_t N = 1;
  for (int z = 1; z <= spec.n; ++z) N = std::lcm<std::int64_t>(N, z);

  // Opponents matter only through (q1, q2); merge strategies that agree.
  auto bidMass = [&](int mask) {
    cpp_int q = 0;
    if (mask & 1) q += D - P;
    if (mask & 2) q += P;
    return q;
  };
  std::vector<Strategy> reps;
  std::vector<Opponent> classes;
  {
    std::set<std::pair<cpp_int, cpp_int>> seen;
    for (int d1 = 0; d1 < 4; ++d1)
      for (int d2 = 0; d2 < 4; ++d2) {
        Opponent o{bidMass(d1), bidMass(d2)};
        if (seen.emplace(o.q1, o.q2).second) {
          reps.push_back({d1, d2});
          classes.push_back(o);
        }
      }
  }
  const int nc = static_cast<int>(classes.size());
  int truthfulClass = -1;
  for (int a = 0; a < nc; ++a)
    if (classes[a].q1 == P && classes[a].q2 == D) truthfulClass = a;

  // Day 2: holding the token, always bidding is optimal since the token has
  // no later use. secondDay[z] = N * D * Du * P(win | z rivals) * E[u].
  const cpp_int expectedU = (D - P) * UL + P * UH;
  std::vector<cpp_int> secondDay(k + 1);
  for (int z = 0; z <= k; ++z)
    secondDay[z] = (z + 1 <= c ? N : N / (z + 1) * c) * expectedU;

  DominanceReport report;
  report.dominant = true;
  cpp_int minMargin;
  bool first = true;

  // Values below share the denominator D^(2k) * M * N * D * Du; the final
  // mixing over my day-1 urgency adds one more factor D.
  auto evaluate = [&](const Law& f, const std::vector<int>& profile) {
    cpp_int win = 0, contBid = 0, contHold = 0;
    for (int x = 0; x <= k; ++x) {
      for (int iBid = 0; iBid <= 1; ++iBid) {
        const int bidders = x + iBid;
        const int l = std::max(0, bidders - c);
        if (!iBid) {
          if (l > x) continue;
          const std::int64_t coef = M / binomial(x, l);
          for (int z = 0; z <= k; ++z)
            if (!f.at(x, l, z).is_zero()) contHold += f.at(x, l, z) * coef * secondDay[z];
          continue;
        }
        // I win and all l losers are opponents.
        if (l <= x) {
          const std::int64_t coef = M / (bidders * binomial(x, l)) * (bidders - l);
          for (int z = 0; z <= k; ++z)
            if (!f.at(x, l, z).is_zero()) win += f.at(x, l, z) * coef;
        }
        // I lose along with l - 1 opponents.
        if (l >= 1) {
          const std::int64_t coef = M / (bidders * binomial(x, l - 1)) * l;
          for (int z = 0; z <= k; ++z)
            if (!f.at(x, l - 1, z).is_zero()) contBid += f.at(x, l - 1, z) * coef * secondDay[z];
        }
      }
    }
    const cpp_int winScale = win * N * D;
    const cpp_int bidLow = winScale * UL + contBid;
    const cpp_int bidHigh = winScale * UH + contBid;
    const cpp_int& hold = contHold;

    const cpp_int truthful = (D - P) * hold + P * bidHigh;
    const cpp_int deviation =
        std::max({cpp_int(D * hold), cpp_int((D - P) * bidLow + P * bidHigh),
                  cpp_int((D - P) * bidLow + P * hold)});
    const cpp_int margin = truthful - deviation;
    if (first || margin < minMargin) {
      minMargin = margin;
      report.worstProfile = describe(profile, reps);
      first = false;
    }
    if (margin < 0) report.dominant = false;
    if (std::all_of(profile.begin(), profile.end(), [&](int a) { return a == truthfulClass; }))
      report.equilibrium = margin >= 0;
    ++report.profiles;
  };

  // Opponent multisets as non-decreasing class sequences; the law of each
  // prefix is shared by all of its extensions.
  std::vector<int> profile;
  std::vector<Law> laws{Law(k)};
  auto dfs = [&](auto&& self, int from) -> void {
    const int depth = static_cast<int>(profile.size());
    if (depth == k) {
      evaluate(laws.back(), profile);
      return;
    }
    for (int a = from; a < nc; ++a) {
      profile.push_back(a);
      laws.push_back(laws.back().with(depth, classes[a], D));
      self(self, a);
      laws.pop_back();
      profile.pop_back();
    }
  };
  dfs(dfs, 0);

  cpp_int denom = cpp_int(M) * N * D * D * Du;
  for (int a = 0; a < 2 * k; ++a) denom *= D;
  const Rational exact(minMargin, denom);
  report.minMargin = static_cast<double>(exact);
  std::ostringstream s;
  s << exact;
  report.minMarginExact = s.str();
  return report;
}

}  // namespace karma
