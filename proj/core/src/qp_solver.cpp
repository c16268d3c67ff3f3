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

#include "pcca/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace pcca {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Givens {
  double c = 1.0;
  double s = 0.0;
  double h = 0.0;
};

Givens MakeGivens(double a, double b) {
  const double h = std::hypot(a, b);
  if (h == 0.0) return {1.0, 0.0, 0.0};
  return {a / h, b / h, h};
}

bool IsDiagonal(const Eigen::MatrixXd& H) {
  for (int c = 0; c < H.cols(); ++c) {
    for (int r = 0; r < H.rows(); ++r) {
      if (r != c && H(r, c) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

QpProblem QpProblem::Zeros(int n, int m) {
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(n, n);
  p.f = Eigen::VectorXd::Zero(n);
  p.A = Eigen::MatrixXd::Zero(m, n);
  p.b = Eigen::VectorXd::Zero(m);
  p.lb = Eigen::VectorXd::Constant(n, -kInf);
  p.ub = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

double QpProblem::Objective(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(H * z) + f.dot(z);
}

void QpProblem::Validate() const {
  const Eigen::Index n = f.size();
  if (H.rows() != n || H.cols() != n || A.cols() != n || A.rows() != b.size() ||
      lb.size() != n || ub.size() != n) {
    throw std::invalid_argument("QpProblem: inconsistent dimensions");
  }
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("QpProblem: H is not symmetric");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(lb[k] <= ub[k])) throw std::invalid_argument("QpProblem: lb > ub");
  }
}

std::string ToString(QpStatus status) {
  switch (status) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kMaxIter: return "max_iter";
    case QpStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

KktResiduals ComputeKkt(const QpProblem& p, const QpSolution& s) {
  KktResiduals out;
  const Eigen::VectorXd grad = p.H * s.z + p.f - p.A.transpose() * s.row_multipliers -
                               s.lower_multipliers + s.upper_multipliers;
  out.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;

  auto track = [&](double slack, double mult) {
    out.primal = std::max(out.primal, -slack);
    out.dual = std::max(out.dual, -mult);
    if (std::isfinite(slack)) {
      out.complementarity = std::max(out.complementarity, std::abs(mult * slack));
    }
  };
  const Eigen::VectorXd rows = p.A * s.z + p.b;
  for (Eigen::Index r = 0; r < rows.size(); ++r) track(rows[r], s.row_multipliers[r]);
  for (Eigen::Index k = 0; k < s.z.size(); ++k) {
    track(s.z[k] - p.lb[k], s.lower_multipliers[k]);
    track(p.ub[k] - s.z[k], s.upper_multipliers[k]);
  }
  return out;
}

void QpSolver::Setup(const QpProblem& p) {
  n_ = p.num_vars();
  m_ = p.num_rows();
  cons_.clear();
  cons_id_.clear();
  idx_.clear();
  val_.clear();

  for (int r = 0; r < m_; ++r) {
    Constraint c;
    c.begin = static_cast<int>(idx_.size());
    double sq = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double a = p.A(r, k);
      if (a != 0.0) {
        idx_.push_back(k);
        val_.push_back(a);
        sq += a * a;
      }
    }
    c.end = static_cast<int>(idx_.size());
    c.offset = p.b[r];
    c.norm = std::max(std::sqrt(sq), 1e-300);
    cons_.push_back(c);
    cons_id_.push_back(r);
  }
  for (int side = 0; side < 2; ++side) {
    for (int k = 0; k < n_; ++k) {
      const double bound = side == 0 ? p.lb[k] : p.ub[k];
      if (!std::isfinite(bound)) continue;
      Constraint c;
      c.begin = static_cast<int>(idx_.size());
      idx_.push_back(k);
      val_.push_back(side == 0 ? 1.0 : -1.0);
      c.end = c.begin + 1;
      c.offset = side == 0 ? -bound : bound;
      cons_.push_back(c);
      cons_id_.push_back(m_ + side * n_ + k);
    }
  }

  if (IsDiagonal(p.H)) {
    J_ = Eigen::MatrixXd::Zero(n_, n_);
    for (int k = 0; k < n_; ++k) {
      if (!(p.H(k, k) > 0.0)) throw std::invalid_argument("QpSolver: H not positive definite");
      J_(k, k) = 1.0 / std::sqrt(p.H(k, k));
    }
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(p.H);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("QpSolver: H not positive definite");
    }
    // J = L^{-T}
    J_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(n_, n_));
  }
  R_.setZero(n_, n_);
  d_.resize(n_);
  z_.resize(n_);
  r_.resize(n_);
  active_.clear();
  is_active_.assign(cons_.size(), 0);
}

double QpSolver::Slack(int c, const Eigen::VectorXd& x) const {
  const Constraint& con = cons_[c];
  double s = con.offset;
  for (int t = con.begin; t < con.end; ++t) s += val_[t] * x[idx_[t]];
  return s;
}

void QpSolver::ComputeDirection(int c) {
  const Constraint& con = cons_[c];
  d_.setZero();
  for (int t = con.begin; t < con.end; ++t) {
    d_.noalias() += val_[t] * J_.row(idx_[t]).transpose();
  }
  const int q = static_cast<int>(active_.size());
  z_.noalias() = J_.rightCols(n_ - q) * d_.tail(n_ - q);
  for (int i = q - 1; i >= 0; --i) {
    double acc = d_[i];
    for (int j = i + 1; j < q; ++j) acc -= R_(i, j) * r_[j];
    r_[i] = acc / R_(i, i);
  }
}

void QpSolver::AddConstraint() {
  const int q = static_cast<int>(active_.size());
  for (int j = n_ - 1; j > q; --j) {
    if (d_[j] == 0.0) continue;
    const Givens g = MakeGivens(d_[j - 1], d_[j]);
    d_[j - 1] = g.h;
    d_[j] = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double a = J_(k, j - 1);
      const double b = J_(k, j);
      J_(k, j - 1) = g.c * a + g.s * b;
      J_(k, j) = -g.s * a + g.c * b;
    }
  }
  for (int i = 0; i <= q; ++i) R_(i, q) = d_[i];
}

void QpSolver::DropConstraint(int pos) {
  const int q = static_cast<int>(active_.size());
  for (int col = pos; col < q - 1; ++col) R_.col(col) = R_.col(col + 1);
  R_.col(q - 1).setZero();
  for (int j = pos; j < q - 1; ++j) {
    const Givens g = MakeGivens(R_(j, j), R_(j + 1, j));
    for (int col = j; col < q - 1; ++col) {
      const double a = R_(j, col);
      const double b = R_(j + 1, col);
      R_(j, col) = g.c * a + g.s * b;
      R_(j + 1, col) = -g.s * a + g.c * b;
    }
    R_(j + 1, j) = 0.0;
    for (int k = 0; k < n_; ++k) {
      const double a = J_(k, j);
      const double b = J_(k, j + 1);
      J_(k, j) = g.c * a + g.s * b;
      J_(k, j + 1) = -g.s * a + g.c * b;
    }
  }
  for (int i = 0; i < n_; ++i) R_(i, q - 1) = 0.0;
  is_active_[active_[pos]] = 0;
  active_.erase(active_.begin() + pos);
}

QpSolution QpSolver::Solve(const QpProblem& p, std::span<const int> warm_start) {
  p.Validate();
  Setup(p);

  QpSolution sol;
  Eigen::VectorXd x = -(J_ * (J_.transpose() * p.f));
  std::vector<double> u;  // multipliers of active_ (same order)
  u.reserve(cons_.size());

  std::vector<int> preferred;
  if (!warm_start.empty()) {
    std::vector<int> internal(static_cast<size_t>(m_ + 2 * n_), -1);
    for (int c = 0; c < static_cast<int>(cons_.size()); ++c) internal[cons_id_[c]] = c;
    for (int id : warm_start) {
      if (id >= 0 && id < static_cast<int>(internal.size()) && internal[id] >= 0) {
        preferred.push_back(internal[id]);
      }
    }
  }

  const int max_iter = options_.max_iter_factor * (n_ + m_ + 1);
  const int total = static_cast<int>(cons_.size());
  int iter = 0;
  sol.status = QpStatus::kMaxIter;

  while (iter < max_iter) {
    // Pick a violated constraint, preferring the warm-start set.
    int p_idx = -1;
    for (int c : preferred) {
      if (!is_active_[c] && Slack(c, x) < -options_.feasibility_tol * cons_[c].norm) {
        p_idx = c;
        break;
      }
    }
    if (p_idx < 0) {
      double worst = -options_.feasibility_tol;
      for (int c = 0; c < total; ++c) {
        if (is_active_[c]) continue;
        const double s = Slack(c, x) / cons_[c].norm;
        if (s < worst) {
          worst = s;
          p_idx = c;
        }
      }
    }
    if (p_idx < 0) {
      sol.status = QpStatus::kOptimal;
      break;
    }

    double s_p = Slack(p_idx, x);
    double u_new = 0.0;
    bool added = false;
    while (!added && iter < max_iter) {
      ++iter;
      ComputeDirection(p_idx);
      const int q = static_cast<int>(active_.size());

      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < q; ++j) {
        if (r_[j] > 0.0) {
          const double ratio = u[j] / r_[j];
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      const double d2 = d_.tail(n_ - q).squaredNorm();
      const double dependent_tol = 1e-14 * std::max(d_.squaredNorm(), 1e-300);
      double t2 = kInf;
      double zn = 0.0;
      if (d2 > dependent_tol) {
        // z'n_p equals |d2|^2.
        zn = d2;
        t2 = -s_p / zn;
      }

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        sol.status = QpStatus::kInfeasible;
        break;
      }
      if (!std::isfinite(t2)) {
        for (int j = 0; j < q; ++j) u[j] -= t1 * r_[j];
        u_new += t1;
        u.erase(u.begin() + drop);
        DropConstraint(drop);
        continue;
      }

      const double t = std::min(t1, t2);
      x.noalias() += t * z_;
      for (int j = 0; j < q; ++j) u[j] -= t * r_[j];
      u_new += t;
      if (t2 <= t1) {
        AddConstraint();
        active_.push_back(p_idx);
        is_active_[p_idx] = 1;
        u.push_back(u_new);
        added = true;
      } else {
        u.erase(u.begin() + drop);
        DropConstraint(drop);
        s_p = Slack(p_idx, x);
      }
    }
    if (sol.status == QpStatus::kInfeasible) break;
  }

  sol.z = x;
  sol.iterations = iter;
  sol.objective = p.Objective(x);
  sol.row_multipliers = Eigen::VectorXd::Zero(m_);
  sol.lower_multipliers = Eigen::VectorXd::Zero(n_);
  sol.upper_multipliers = Eigen::VectorXd::Zero(n_);
  for (size_t j = 0; j < active_.size(); ++j) {
    const int id = cons_id_[active_[j]];
    sol.active_set.push_back(id);
    if (id < m_) {
      sol.row_multipliers[id] = u[j];
    } else if (id < m_ + n_) {
      sol.lower_multipliers[id - m_] = u[j];
    } else {
      sol.upper_multipliers[id - m_ - n_] = u[j];
    }
  }
  return sol;
}

}  // namespace pcca
