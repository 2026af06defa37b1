#pragma once

// Test-only reference implementations, deliberately independent of the
// library code paths they check.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "hhrl/numerics.hpp"
#include "hhrl/safety.hpp"
#include "hhrl/types.hpp"

namespace hhrl::oracle {

// Kinematic bicycle integrated at a very fine step; ground truth for the
// coarse simulator step.
struct BicycleState {
  double x = 0, y = 0, heading = 0, v = 0;
};

inline BicycleState integrate_fine(BicycleState s, double steer, double accel,
                                   double duration, double wheelbase, double h = 1e-4) {
  int n = static_cast<int>(std::round(duration / h));
  for (int k = 0; k < n; ++k) {
    s.x += s.v * std::cos(s.heading) * h;
    s.y += s.v * std::sin(s.heading) * h;
    s.heading += s.v * std::tan(steer) / wheelbase * h;
    s.v = std::max(0.0, s.v + accel * h);
  }
  return s;
}

// Brute-force convex polygon intersection: any edge pair crossing, or one
// rectangle containing the other. Different algorithm from the SAT path.
using Quad = std::array<Eigen::Vector2d, 4>;

inline Quad quad_of(const Pose& p, double len, double wid) {
  double c = std::cos(p.heading), s = std::sin(p.heading);
  Eigen::Vector2d ax(c, s), ay(-s, c), ctr(p.x, p.y);
  return {ctr + 0.5 * len * ax + 0.5 * wid * ay, ctr + 0.5 * len * ax - 0.5 * wid * ay,
          ctr - 0.5 * len * ax - 0.5 * wid * ay, ctr - 0.5 * len * ax + 0.5 * wid * ay};
}

inline int orient(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                  const Eigen::Vector2d& c) {
  double v = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
  if (v > 1e-12) return 1;
  if (v < -1e-12) return -1;
  return 0;
}

inline bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& p) {
  return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
         std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

inline bool segments_touch(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d);
  int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline bool point_inside(const Quad& q, const Eigen::Vector2d& p) {
  double sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    Eigen::Vector2d e = q[(i + 1) % 4] - q[i];
    Eigen::Vector2d w = p - q[i];
    double c = e.x() * w.y() - e.y() * w.x();
    if (std::abs(c) < 1e-12) continue;  // on an edge counts as inside
    if (sign == 0.0) {
      sign = c;
    } else if ((c > 0) != (sign > 0)) {
      return false;
    }
  }
  return true;
}

inline bool quads_intersect(const Quad& a, const Quad& b) {
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (segments_touch(a[i], a[(i + 1) % 4], b[j], b[(j + 1) % 4])) return true;
    }
  }
  return point_inside(a, b[0]) || point_inside(b, a[0]);
}

// Central finite differences over a scalar function of the network
// parameters. Visits every weight and bias.
struct FdCheck {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool ok = true;
};

inline double fd_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  double abs_err = std::abs(analytic - numeric);
  if (abs_err <= 1e-8) return 0.0;  // below finite-difference noise
  return abs_err / denom;
}

inline FdCheck check_param_gradients(Mlp& net, const Gradients& analytic,
                                     const std::function<double()>& loss, double h = 1e-5,
                                     double tol = 1e-4) {
  FdCheck res;
  auto probe = [&](double& param, double grad) {
    double keep = param;
    param = keep + h;
    double up = loss();
    param = keep - h;
    double down = loss();
    param = keep;
    double numeric = (up - down) / (2.0 * h);
    double rel = fd_error(grad, numeric);
    res.max_rel_err = std::max(res.max_rel_err, rel);
    res.max_abs_err = std::max(res.max_abs_err, std::abs(grad - numeric));
    if (rel > tol) res.ok = false;
  };
  for (int l = 0; l < net.layer_count(); ++l) {
    for (int i = 0; i < net.weights[l].rows(); ++i) {
      for (int j = 0; j < net.weights[l].cols(); ++j) {
        probe(net.weights[l](i, j), analytic.weights[l](i, j));
      }
    }
    for (int i = 0; i < net.biases[l].size(); ++i) {
      probe(net.biases[l][i], analytic.biases[l][i]);
    }
  }
  return res;
}

// Exhaustive reference for the high-level correction rule, including its
// tie-breaking (earliest index wins).
inline int correct_high_reference(const std::vector<HighCandidate>& cands, int chosen,
                                  double eta, double k_th) {
  if (eta * cands[chosen].risk < k_th) return chosen;
  int best = -1;
  for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
    if (eta * cands[i].risk >= k_th) continue;
    if (best < 0 || cands[i].q > cands[best].q) best = i;
  }
  if (best >= 0) return best;
  int least = 0;
  for (int i = 1; i < static_cast<int>(cands.size()); ++i) {
    if (cands[i].risk < cands[least].risk) least = i;
  }
  return least;
}

}  // namespace hhrl::oracle
