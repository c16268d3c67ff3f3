// Copyright 2026 The PCCA Lane-Swap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pcca/geometry_cbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pcca {
namespace {

constexpr double kMinFocalDistance = 1e-9;

Vec2 Normal(double theta) { return {-std::sin(theta), std::cos(theta)}; }

// Offsets xi_k = F_ik - X_j from agent j to the focal points of i.
struct FocalGeometry {
  std::array<Vec2, 2> xi;
  std::array<double, 2> norm;
};

FocalGeometry Focal(const AgentState& i, const AgentState& j,
                    const EllipseSpec& spec) {
  const Vec2 offset = spec.rho() * Heading(i.theta);
  const Vec2 d = Position(i) - Position(j);
  FocalGeometry g;
  g.xi = {d + offset, d - offset};
  for (int k = 0; k < 2; ++k) {
    g.norm[k] = g.xi[k].norm();
    if (g.norm[k] < kMinFocalDistance) {
      throw DegenerateGeometry("agent centre coincides with a focal point");
    }
  }
  return g;
}

Vec2 RelativeVelocity(const AgentState& i, const AgentState& j) {
  return i.v * Heading(i.theta) - j.v * Heading(j.theta);
}

struct Interval1D {
  double lo;
  double hi;
};

Interval1D Project(const std::array<Vec2, 4>& pts, const Vec2& axis) {
  Interval1D out{std::numeric_limits<double>::infinity(),
                 -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : pts) {
    const double s = p.dot(axis);
    out.lo = std::min(out.lo, s);
    out.hi = std::max(out.hi, s);
  }
  return out;
}

double PointSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

// Minimum axis overlap; negative when a separating axis exists.
double MinAxisOverlap(const std::array<Vec2, 4>& a, double theta_a,
                      const std::array<Vec2, 4>& b, double theta_b) {
  const std::array<Vec2, 4> axes{Heading(theta_a), Normal(theta_a),
                                 Heading(theta_b), Normal(theta_b)};
  double min_overlap = std::numeric_limits<double>::infinity();
  for (const Vec2& axis : axes) {
    const Interval1D pa = Project(a, axis);
    const Interval1D pb = Project(b, axis);
    min_overlap = std::min(min_overlap, std::min(pa.hi, pb.hi) - std::max(pa.lo, pb.lo));
  }
  return min_overlap;
}

double EllipseRadius(double semi_major, double semi_minor, double angle) {
  const double c = std::cos(angle) / semi_major;
  const double s = std::sin(angle) / semi_minor;
  return 1.0 / std::sqrt(c * c + s * s);
}

}  // namespace

EllipseSpec::EllipseSpec(double r, double alpha) : r_(r), alpha_(alpha) {
  if (!(r > 0.0) || !(alpha > 1.0) || !std::isfinite(r) || !std::isfinite(alpha)) {
    throw std::invalid_argument("EllipseSpec requires r > 0 and alpha > 1");
  }
  rho_ = r_ * std::sqrt(alpha_ * alpha_ - 1.0);
}

EllipseSpec EllipseSpec::FromAxes(double width, double length) {
  return EllipseSpec(0.5 * width, length / width);
}

EllipseSpec DefaultCbfEllipse() { return EllipseSpec::FromAxes(3.8, 8.36); }

CbfGains::CbfGains(double lambda1, double lambda2)
    : lambda1_(lambda1), lambda2_(lambda2) {
  if (!(lambda1 > 0.0) || !(lambda2 >= lambda1)) {
    throw std::invalid_argument("CbfGains requires 0 < lambda1 <= lambda2");
  }
}

double RailFn::Value(double x) const {
  if (kind == Kind::kConstant) return d0;
  return d0 + d1 * std::atan(d3 * (x - d4));
}

double RailFn::Slope(double x) const {
  if (kind == Kind::kConstant) return 0.0;
  const double s = d3 * (x - d4);
  return d1 * d3 / (1.0 + s * s);
}

double RailFn::Curvature(double x) const {
  if (kind == Kind::kConstant) return 0.0;
  const double s = d3 * (x - d4);
  const double q = 1.0 + s * s;
  return -2.0 * d1 * d3 * d3 * s / (q * q);
}

double EllipseH(const Vec2& xi, double theta_i, const Vec2& xj,
                const EllipseSpec& spec) {
  const Vec2 offset = spec.rho() * Heading(theta_i);
  return (xi + offset - xj).norm() + (xi - offset - xj).norm() -
         2.0 * spec.semi_major();
}

double EllipseHDot(const AgentState& i, const AgentState& j,
                   const EllipseSpec& spec) {
  const FocalGeometry g = Focal(i, j, spec);
  const Vec2 rel = RelativeVelocity(i, j);
  double hdot = 0.0;
  for (int k = 0; k < 2; ++k) hdot += g.xi[k].dot(rel) / g.norm[k];
  return hdot;
}

CbfRow EllipseRow(int id_i, const AgentState& i, int id_j, const AgentState& j,
                  const EllipseSpec& spec, const CbfGains& gains,
                  const VehicleParams& params) {
  const FocalGeometry g = Focal(i, j, spec);
  const Vec2 rel = RelativeVelocity(i, j);
  const double rel_sq = rel.squaredNorm();

  const Vec2 phi_i = Heading(i.theta);
  const Vec2 phi_j = Heading(j.theta);
  const Vec2 steer_i = (i.v * i.v / params.wheelbase) * Normal(i.theta);
  const Vec2 steer_j = (j.v * j.v / params.wheelbase) * Normal(j.theta);

  double h = -2.0 * spec.semi_major();
  double hdot = 0.0;
  double curvature = 0.0;
  Vec2 n_sum = Vec2::Zero();
  for (int k = 0; k < 2; ++k) {
    const Vec2 n = g.xi[k] / g.norm[k];
    const double along = n.dot(rel);
    h += g.norm[k];
    hdot += along;
    // (1 - cos^2 beta) |rel|^2 / |xi|, written without forming beta.
    curvature += std::max(0.0, rel_sq - along * along) / g.norm[k];
    n_sum += n;
  }

  CbfRow row;
  row.kind = RowKind::kInterAgent;
  row.pair = {id_i, id_j};
  row.term_count = 2;
  row.a = curvature + gains.l1() * hdot + gains.l0() * h;
  row.b[0] = {id_i, {n_sum.dot(steer_i), n_sum.dot(phi_i)}};
  row.b[1] = {id_j, {-n_sum.dot(steer_j), -n_sum.dot(phi_j)}};
  row.bw = row.b;
  return row;
}

std::pair<CbfRow, CbfRow> RoadRows(int id, const AgentState& s,
                                   const RailFn& left, const RailFn& right,
                                   const CbfGains& gains,
                                   const VehicleParams& params) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  const double vx = s.v * c;
  const double steer_gain = s.v * s.v / params.wheelbase;

  // Barrier g = y - rb(x) and its derivatives along the bicycle model.
  auto lower_row = [&](const RailFn& rail, double sign) {
    const double slope = rail.Slope(s.x);
    const double g = s.y - rail.Value(s.x);
    const double gdot = s.v * sn - slope * vx;
    const double drift = -rail.Curvature(s.x) * vx * vx;
    CbfRow row;
    row.term_count = 1;
    row.pair = {id, -1};
    row.a = sign * (drift + gains.l1() * gdot + gains.l0() * g);
    row.b[0] = {id, {sign * steer_gain * (c + slope * sn), sign * (sn - slope * c)}};
    row.bw = row.b;
    return row;
  };

  CbfRow right_row = lower_row(right, 1.0);
  right_row.kind = RowKind::kRoadRight;
  CbfRow left_row = lower_row(left, -1.0);
  left_row.kind = RowKind::kRoadLeft;
  return {right_row, left_row};
}

std::array<Vec2, 4> BodyCorners(const AgentState& s, const VehicleParams& params) {
  const Vec2 c = Position(s);
  const Vec2 f = 0.5 * params.body_length * Heading(s.theta);
  const Vec2 l = 0.5 * params.body_width * Normal(s.theta);
  return {c + f + l, c - f + l, c - f - l, c + f - l};
}

CollisionResult CollisionCheck(const AgentState& i, const AgentState& j,
                               const VehicleParams& params) {
  const auto a = BodyCorners(i, params);
  const auto b = BodyCorners(j, params);
  const double overlap = MinAxisOverlap(a, i.theta, b, j.theta);
  if (overlap > 0.0) return {true, -overlap};

  double gap = std::numeric_limits<double>::infinity();
  for (int e = 0; e < 4; ++e) {
    const int f = (e + 1) % 4;
    for (int p = 0; p < 4; ++p) {
      gap = std::min(gap, PointSegmentDistance(a[p], b[e], b[f]));
      gap = std::min(gap, PointSegmentDistance(b[p], a[e], a[f]));
    }
  }
  return {false, gap};
}

EllipseSpec SizeReportingEllipse(const VehicleParams& params, double alpha,
                                 std::span<const double> placement_angles,
                                 std::span<const double> relative_headings) {
  const AgentState origin{0.0, 0.0, 0.0, 0.0};

  auto safe = [&](double r0) {
    const double a = alpha * r0;
    for (const double phi : placement_angles) {
      const double t_i = EllipseRadius(a, r0, phi);
      for (const double psi : relative_headings) {
        // Direction from j back to i, expressed in j's body frame.
        const double t_j = EllipseRadius(a, r0, phi + std::numbers::pi - psi);
        const double t = std::max(t_i, t_j);
        const AgentState other{t * std::cos(phi), t * std::sin(phi), psi, 0.0};
        if (CollisionCheck(origin, other, params).overlap) return false;
      }
    }
    return true;
  };

  double lo = 1e-3;
  double hi = params.body_length + params.body_width;
  if (!safe(hi)) throw std::invalid_argument("SizeReportingEllipse: no safe size found");
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (safe(mid) ? hi : lo) = mid;
  }
  return EllipseSpec(hi, alpha);
}

EllipseSpec DefaultReportingEllipse(const VehicleParams& params, double alpha) {
  constexpr double kPi = std::numbers::pi;
  const std::array<double, 4> axes{0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  const std::array<double, 2> orthogonal{0.5 * kPi, 1.5 * kPi};
  return SizeReportingEllipse(params, alpha, axes, orthogonal);
}

}  // namespace pcca
