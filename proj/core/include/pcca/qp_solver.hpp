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

// Dense strictly convex QP solver:
//
//   minimize    0.5 z'Hz + f'z
//   subject to  A z + b >= 0,   lb <= z <= ub
//
// Implemented as the Goldfarb-Idnani dual active-set method. Constraint ids
// are rows 0..m-1, lower bounds m..m+n-1, upper bounds m+n..m+2n-1.

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pcca {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd lb;  // -inf allowed
  Eigen::VectorXd ub;  // +inf allowed

  /// Problem with `n` variables, `m` rows, zero cost and infinite bounds.
  static QpProblem Zeros(int n, int m);

  int num_vars() const { return static_cast<int>(f.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  double Objective(const Eigen::VectorXd& z) const;

  /// Dimension checks, symmetry and lb <= ub; throws std::invalid_argument.
  /// Positive definiteness is checked by the solver's factorisation.
  void Validate() const;
};

enum class QpStatus { kOptimal, kMaxIter, kInfeasible };

std::string ToString(QpStatus status);

struct QpSolution {
  Eigen::VectorXd z;
  QpStatus status = QpStatus::kInfeasible;
  std::vector<int> active_set;
  int iterations = 0;
  double objective = 0.0;
  Eigen::VectorXd row_multipliers;    // >= 0, size m
  Eigen::VectorXd lower_multipliers;  // >= 0, size n
  Eigen::VectorXd upper_multipliers;  // >= 0, size n
};

struct KktResiduals {
  double stationarity = 0.0;     // |Hz + f - A'mu - nu_l + nu_u|_inf
  double primal = 0.0;           // worst constraint violation
  double dual = 0.0;             // worst negative multiplier
  double complementarity = 0.0;  // worst |multiplier * slack|
};

KktResiduals ComputeKkt(const QpProblem& problem, const QpSolution& solution);

struct QpSolverOptions {
  double feasibility_tol = 1e-10;
  /// Iteration cap is max_iter_factor * (n + m).
  int max_iter_factor = 10;
};

/// Reusable solver. Not thread-safe; use one instance per thread.
class QpSolver {
 public:
  explicit QpSolver(QpSolverOptions options = {}) : options_(options) {}

  /// Solves `problem`. Constraints listed in `warm_start` (ids from a previous
  /// solve) are tried first when choosing which violated constraint to add.
  /// Throws std::invalid_argument if H is not positive definite.
  QpSolution Solve(const QpProblem& problem, std::span<const int> warm_start = {});

 private:
  struct Constraint {
    int begin = 0;  // into idx_/val_
    int end = 0;
    double offset = 0.0;
    double norm = 1.0;
  };

  void Setup(const QpProblem& problem);
  double Slack(int c, const Eigen::VectorXd& x) const;
  void ComputeDirection(int c);
  void AddConstraint();
  void DropConstraint(int pos);

  QpSolverOptions options_;
  int n_ = 0;
  int m_ = 0;
  std::vector<Constraint> cons_;
  std::vector<int> cons_id_;
  std::vector<int> idx_;
  std::vector<double> val_;

  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_;
  Eigen::VectorXd z_;
  Eigen::VectorXd r_;
  std::vector<int> active_;      // internal constraint indices
  std::vector<char> is_active_;
};

}  // namespace pcca
