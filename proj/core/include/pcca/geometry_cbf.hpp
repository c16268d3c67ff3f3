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

// Elliptic inter-agent barrier functions, road-boundary barriers and the
// body-rectangle collision test used for ground-truth safety reporting.
//
// All barrier rows are second-order exponential CBF constraints of the form
//
//   hdd + l1 * hd + l0 * h = a + sum_k b_k . u_k >= 0
//
// where u_k = (delta_k, accel_k). Rows are linear in every agent's control.

#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "pcca/vehicle_dynamics.hpp"

namespace pcca {

using Vec2 = Eigen::Vector2d;

class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ellipse given by its semi-minor axis `r` and major/minor ratio `alpha`.
class EllipseSpec {
 public:
  /// Throws std::invalid_argument unless r > 0 and alpha > 1.
  EllipseSpec(double r, double alpha);

  /// Builds the ellipse from full axis lengths (width across, length along).
  static EllipseSpec FromAxes(double width, double length);

  double r() const { return r_; }
  double alpha() const { return alpha_; }
  /// Focal distance from the centre, r * sqrt(alpha^2 - 1).
  double rho() const { return rho_; }
  double semi_major() const { return alpha_ * r_; }

 private:
  double r_;
  double alpha_;
  double rho_;
};

/// The CBF ellipse used by the controller: 3.8 m x 8.36 m.
EllipseSpec DefaultCbfEllipse();

/// Exponential CBF poles {-lambda1, -lambda2}; l0 and l1 are derived.
class CbfGains {
 public:
  CbfGains(double lambda1 = 0.4, double lambda2 = 4.0);

  double lambda1() const { return lambda1_; }
  double lambda2() const { return lambda2_; }
  double l0() const { return lambda1_ * lambda2_; }
  double l1() const { return lambda1_ + lambda2_; }

 private:
  double lambda1_;
  double lambda2_;
};

enum class RowKind { kInterAgent, kRoadLeft, kRoadRight };

/// Coefficients multiplying one agent's (delta, accel).
struct RowTerm {
  int agent = -1;
  std::array<double, 2> coeff{0.0, 0.0};
};

/// a + sum(b . u) + sum(bw . w) >= 0. Inter-agent rows have two terms, road
/// rows have one; `bw` always equals `b` for these barriers.
struct CbfRow {
  double a = 0.0;
  std::array<RowTerm, 2> b{};
  std::array<RowTerm, 2> bw{};
  int term_count = 0;
  RowKind kind = RowKind::kInterAgent;
  /// (j, k) for inter-agent rows, (k, -1) for road rows.
  std::pair<int, int> pair{-1, -1};
};

/// Lateral road boundary rb(x): either a constant or
/// d0 + d1 * atan(d3 * (x - d4)).
struct RailFn {
  enum class Kind { kConstant, kArctan };

  Kind kind = Kind::kConstant;
  double d0 = 0.0;
  double d1 = 0.0;
  double d3 = 0.0;
  double d4 = 0.0;

  static RailFn Constant(double value) { return {Kind::kConstant, value, 0, 0, 0}; }
  static RailFn Arctan(double d0, double d1, double d3, double d4) {
    return {Kind::kArctan, d0, d1, d3, d4};
  }

  double Value(double x) const;
  double Slope(double x) const;
  double Curvature(double x) const;
};

inline Vec2 Position(const AgentState& s) { return {s.x, s.y}; }
inline Vec2 Heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// Sum of distances from the two focal points of the ellipse centred at `xi`
/// (heading `theta_i`) to `xj`, minus the major axis. Positive iff `xj` is
/// outside the ellipse.
double EllipseH(const Vec2& xi, double theta_i, const Vec2& xj,
                const EllipseSpec& spec);

inline double EllipseH(const AgentState& i, const AgentState& j,
                       const EllipseSpec& spec) {
  return EllipseH(Position(i), i.theta, Position(j), spec);
}

/// Time derivative of EllipseH with the focal points moving with the centre.
/// Throws DegenerateGeometry if `j` sits on a focal point of `i`.
double EllipseHDot(const AgentState& i, const AgentState& j,
                   const EllipseSpec& spec);

/// Full second-order CBF row for the ordered pair (i, j).
CbfRow EllipseRow(int id_i, const AgentState& i, int id_j, const AgentState& j,
                  const EllipseSpec& spec, const CbfGains& gains,
                  const VehicleParams& params);

/// Barrier rows keeping the centre of agent `id` between `right` and `left`.
std::pair<CbfRow, CbfRow> RoadRows(int id, const AgentState& s,
                                   const RailFn& left, const RailFn& right,
                                   const CbfGains& gains,
                                   const VehicleParams& params);

struct CollisionResult {
  bool overlap = false;
  /// Euclidean gap between the bodies when disjoint, minus the minimum
  /// penetration depth (over separating axes) when overlapping.
  double clearance = 0.0;
};

/// Exact oriented-rectangle test between two vehicle bodies.
CollisionResult CollisionCheck(const AgentState& i, const AgentState& j,
                               const VehicleParams& params);

/// Four body corners, counter-clockwise from the front-left.
std::array<Vec2, 4> BodyCorners(const AgentState& s, const VehicleParams& params);

/// The reporting barrier: EllipseH on the smaller h0 ellipse.
inline double H0Metric(const AgentState& i, const AgentState& j,
                       const EllipseSpec& spec0) {
  return EllipseH(i, j, spec0);
}

/// Smallest ellipse with aspect ratio `alpha` such that two bodies whose
/// centres lie outside each other's ellipse do not overlap. Vehicle j is
/// placed in every direction of `placement_angles` (body frame of i) with
/// every relative heading in `relative_headings`, at the closest distance
/// both ellipses allow. Found by bisection on r.
EllipseSpec SizeReportingEllipse(const VehicleParams& params, double alpha,
                                 std::span<const double> placement_angles,
                                 std::span<const double> relative_headings);

/// Reporting ellipse for an orthogonal vehicle placed ahead, behind or
/// beside: alpha * r0 = (L_v + W_v) / 2.
EllipseSpec DefaultReportingEllipse(const VehicleParams& params, double alpha = 2.2);

/// DefaultReportingEllipse(VehicleParams{}).r(), cached.
inline constexpr double kDefaultReportingR0 = 1.4886363636363635;

}  // namespace pcca
