#include "interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace karma::detail {

namespace {

double maxStep(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (dv[k] < 0.0) alpha = std::min(alpha, -v[k] / dv[k]);
  return alpha;
}

bool termsPositive(const LogProgram& lp, const Eigen::VectorXd& x) {
  for (const auto& t : lp.terms) {
    double r = 0.0;
    for (std::size_t k = 0; k < t.index.size(); ++k) r += t.coef[k] * x[t.index[k]];
    if (!(r > 0.0)) return false;
  }
  return true;
}

}  // namespace

IpmResult solveLogProgram(const LogProgram& lp, const Eigen::VectorXd& x0, double target,
                          int maxIterations) {
  const Eigen::Index n = x0.size();
  const Eigen::Index p = lp.G.rows();

  Eigen::VectorXd x = x0;
  Eigen::VectorXd s = lp.h - lp.G * x;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd H(n, n);

  auto evalDerivatives = [&]() {
    grad.setZero();
    H.setZero();
    for (const auto& t : lp.terms) {
      double r = 0.0;
      for (std::size_t k = 0; k < t.index.size(); ++k) r += t.coef[k] * x[t.index[k]];
      for (std::size_t a = 0; a < t.index.size(); ++a) {
        grad[t.index[a]] -= t.weight * t.coef[a] / r;
        for (std::size_t b = 0; b < t.index.size(); ++b)
          H(t.index[a], t.index[b]) += t.weight * t.coef[a] * t.coef[b] / (r * r);
      }
    }
  };

  evalDerivatives();
  const double mu0 = std::max(1e-2, grad.cwiseAbs().maxCoeff() * s.mean());
  Eigen::VectorXd z = (mu0 / s.array()).matrix();

  IpmResult best;
  best.residual = std::numeric_limits<double>::infinity();
  int sinceImproved = 0;

  for (int it = 0; it < maxIterations; ++it) {
    if (it > 0) evalDerivatives();
    const Eigen::VectorXd rd = grad + lp.G.transpose() * z;
    const double mu = s.dot(z) / static_cast<double>(p);

    double resid = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) resid = std::max(resid, std::abs(rd[k]) / lp.varScale[k]);
    for (Eigen::Index k = 0; k < p; ++k) resid = std::max(resid, s[k] * z[k] / lp.rowScale[k]);
    if (!std::isfinite(resid)) break;

    if (resid < best.residual) {
      best.x = x;
      best.z = z;
      best.residual = resid;
      best.iterations = it;
      sinceImproved = 0;
    } else if (++sinceImproved >= 12) {
      break;
    }
    if (resid <= target) break;

    const Eigen::VectorXd d = (z.array() / s.array()).matrix();
    Eigen::MatrixXd M = H;
    M.noalias() += lp.G.transpose() * d.asDiagonal() * lp.G;
    // Symmetric Jacobi scaling keeps the factorization stable as z/s diverges
    // on active constraints.
    const Eigen::VectorXd scale = M.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    M = scale.asDiagonal() * M * scale.asDiagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    auto solve = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
      return (scale.array() * ldlt.solve((scale.array() * b.array()).matrix()).array()).matrix();
    };

    // Predictor.
    const Eigen::VectorXd dxAff = solve(-grad);
    const Eigen::VectorXd dsAff = -lp.G * dxAff;
    const Eigen::VectorXd dzAff = -z - (d.array() * dsAff.array()).matrix();
    const double aAff = std::min({1.0, maxStep(s, dsAff), maxStep(z, dzAff)});
    const double muAff = (s + aAff * dsAff).dot(z + aAff * dzAff) / static_cast<double>(p);
    const double sigma = std::pow(std::clamp(muAff / mu, 0.0, 1.0), 3);

    // Corrector.
    const Eigen::VectorXd w =
        (Eigen::VectorXd::Constant(p, sigma * mu).array() - dsAff.array() * dzAff.array())
            .matrix();
    const Eigen::VectorXd rhs =
        -rd - lp.G.transpose() * ((w.array() / s.array()).matrix() - z);
    const Eigen::VectorXd dx = solve(rhs);
    if (!dx.allFinite()) break;
    const Eigen::VectorXd ds = -lp.G * dx;
    const Eigen::VectorXd dz =
        ((w.array() - s.array() * z.array() - z.array() * ds.array()) / s.array()).matrix();

    double alpha = std::min(1.0, 0.995 * std::min(maxStep(s, ds), maxStep(z, dz)));
    while (alpha > 1e-14 && !termsPositive(lp, x + alpha * dx)) alpha *= 0.5;
    if (!(alpha > 1e-14)) break;

    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
  }

  if (best.x.size() == 0) {
    best.x = x;
    best.z = z;
  }
  return best;
}

}  // namespace karma::detail
