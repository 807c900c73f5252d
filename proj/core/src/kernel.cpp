// SPDX-License-Identifier: Apache-2.0

#include "idet/kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace idet::kernel {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::span<const double> as_span(const VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// One barrier term: a smooth callback constraint, a budget or a box side.
struct Atom {
  enum class Kind { callback, budget, box_lower, box_upper };
  Kind kind;
  int index;  // callback/budget index or box coordinate
};

class BarrierSolver {
 public:
  BarrierSolver(const ConcaveProgram& prog, const SolveOptions& opts)
      : prog_(prog), opts_(opts), dim_(static_cast<int>(prog.dim)) {
    for (int i = 0; i < static_cast<int>(prog.inequalities.size()); ++i) {
      atoms_.push_back({Atom::Kind::callback, i});
    }
    for (int i = 0; i < static_cast<int>(prog.budgets.size()); ++i) {
      atoms_.push_back({Atom::Kind::budget, i});
    }
    for (int i = 0; i < dim_; ++i) {
      if (std::isfinite(prog.box.lower[i])) {
        atoms_.push_back({Atom::Kind::box_lower, i});
      }
      if (std::isfinite(prog.box.upper[i])) {
        atoms_.push_back({Atom::Kind::box_upper, i});
      }
    }
  }

  int atom_count() const { return static_cast<int>(atoms_.size()); }

  double atom_value(const Atom& a, const VectorXd& x) const {
    switch (a.kind) {
      case Atom::Kind::callback:
        return prog_.inequalities[a.index].value(as_span(x));
      case Atom::Kind::budget: {
        const auto& b = prog_.budgets[a.index];
        double dot = 0.0;
        for (int i = 0; i < dim_; ++i) dot += b.weights[i] * x[i];
        return b.bound - dot;
      }
      case Atom::Kind::box_lower:
        return x[a.index] - prog_.box.lower[a.index];
      case Atom::Kind::box_upper:
        return prog_.box.upper[a.index] - x[a.index];
    }
    return 0.0;
  }

  // accumulates weight * grad(atom) into g
  void add_atom_gradient(const Atom& a, const VectorXd& x, double weight,
                         VectorXd& g, VectorXd& scratch) const {
    switch (a.kind) {
      case Atom::Kind::callback:
        scratch.setZero();
        prog_.inequalities[a.index].gradient(
            as_span(x), {scratch.data(), static_cast<std::size_t>(dim_)});
        g.noalias() += weight * scratch;
        return;
      case Atom::Kind::budget: {
        const auto& b = prog_.budgets[a.index];
        for (int i = 0; i < dim_; ++i) g[i] -= weight * b.weights[i];
        return;
      }
      case Atom::Kind::box_lower:
        g[a.index] += weight;
        return;
      case Atom::Kind::box_upper:
        g[a.index] -= weight;
        return;
    }
  }

  bool eval_atoms(const VectorXd& x, VectorXd& vals) const {
    vals.resize(atom_count());
    for (int t = 0; t < atom_count(); ++t) {
      const double v = atom_value(atoms_[t], x);
      if (!std::isfinite(v) || v <= 0.0) return false;
      vals[t] = v;
    }
    return true;
  }

  // B(x) = -F(x) - mu * sum ln g_t(x); +inf outside the strict interior
  double barrier_value(const VectorXd& x, double mu, VectorXd& vals) const {
    if (!eval_atoms(x, vals)) return kInf;
    const double f = prog_.objective(as_span(x));
    if (!std::isfinite(f)) return kInf;
    double sum_log = 0.0;
    for (int t = 0; t < atom_count(); ++t) sum_log += std::log(vals[t]);
    return -f - mu * sum_log;
  }

  // grad B = -grad F - mu * sum grad g / g (vals must be current)
  void barrier_gradient(const VectorXd& x, double mu, const VectorXd& vals,
                        VectorXd& g, VectorXd& scratch) const {
    g.setZero(dim_);
    scratch.resize(dim_);
    scratch.setZero();
    prog_.objective_gradient(as_span(x),
                             {scratch.data(), static_cast<std::size_t>(dim_)});
    g = -scratch;
    for (int t = 0; t < atom_count(); ++t) {
      add_atom_gradient(atoms_[t], x, -mu / vals[t], g, scratch);
    }
  }

  // psi(x) = -grad F(x) - sum_t c_t * grad g_t(x) over callback atoms only;
  // its Jacobian is the smooth part of the barrier Hessian (box and budget
  // atoms are affine)
  void frozen_gradient(const VectorXd& x, const VectorXd& weights, VectorXd& g,
                       VectorXd& scratch) const {
    g.setZero(dim_);
    scratch.resize(dim_);
    scratch.setZero();
    prog_.objective_gradient(as_span(x),
                             {scratch.data(), static_cast<std::size_t>(dim_)});
    g = -scratch;
    for (int t = 0; t < atom_count(); ++t) {
      if (atoms_[t].kind != Atom::Kind::callback) continue;
      add_atom_gradient(atoms_[t], x, -weights[t], g, scratch);
    }
  }

  // Barrier Hessian: central differences of the frozen gradient plus the
  // analytic mu * grad g grad g^T / g^2 rank-one terms.
  bool barrier_hessian(const VectorXd& x, double mu, const VectorXd& vals,
                       MatrixXd& hess) const {
    hess.setZero(dim_, dim_);
    VectorXd weights(atom_count());
    for (int t = 0; t < atom_count(); ++t) weights[t] = mu / vals[t];

    VectorXd gp(dim_), gm(dim_), scratch(dim_), probe = x;
    for (int i = 0; i < dim_; ++i) {
      double h = 1e-6 * (1.0 + std::abs(x[i]));
      // stay inside the box so sqrt/log terms in callbacks remain defined
      const double lo = prog_.box.lower[i];
      const double hi = prog_.box.upper[i];
      if (std::isfinite(lo)) h = std::min(h, 0.45 * (x[i] - lo));
      if (std::isfinite(hi)) h = std::min(h, 0.45 * (hi - x[i]));
      if (h <= 0.0 || !std::isfinite(h)) h = 1e-12;

      bool ok = false;
      for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
        probe[i] = x[i] + h;
        frozen_gradient(probe, weights, gp, scratch);
        probe[i] = x[i] - h;
        frozen_gradient(probe, weights, gm, scratch);
        probe[i] = x[i];
        ok = gp.allFinite() && gm.allFinite();
        if (!ok) h *= 0.1;
      }
      if (!ok) return false;
      hess.col(i) = (gp - gm) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();

    VectorXd atom_grad(dim_), scratch2(dim_);
    for (int t = 0; t < atom_count(); ++t) {
      atom_grad.setZero();
      add_atom_gradient(atoms_[t], x, 1.0, atom_grad, scratch2);
      const double w = mu / (vals[t] * vals[t]);
      hess.noalias() += w * atom_grad * atom_grad.transpose();
    }
    return hess.allFinite();
  }

  struct InnerResult {
    int steps = 0;
    bool stalled = false;
    double grad_norm = kInf;
  };

  // Damped Newton on the barrier at fixed mu. early_exit_coord >= 0 stops as
  // soon as that coordinate exceeds early_exit_value (phase-1 shortcut).
  InnerResult newton_stage(VectorXd& x, double mu, int step_budget,
                           int early_exit_coord, double early_exit_value) {
    InnerResult res;
    VectorXd vals, grad(dim_), scratch(dim_), objective_grad(dim_);
    MatrixXd hess(dim_, dim_);
    VectorXd candidate(dim_), cand_vals;
    double best_grad_norm = kInf;
    int steps_since_progress = 0;

    for (; res.steps < step_budget; ++res.steps) {
      if (early_exit_coord >= 0 && x[early_exit_coord] > early_exit_value) {
        return res;
      }
      double b_val = barrier_value(x, mu, vals);
      if (!std::isfinite(b_val)) {
        res.stalled = true;
        return res;
      }
      barrier_gradient(x, mu, vals, grad, scratch);
      if (!grad.allFinite()) {
        res.stalled = true;
        return res;
      }

      objective_grad.setZero();
      prog_.objective_gradient(
          as_span(x), {objective_grad.data(), static_cast<std::size_t>(dim_)});
      const double grad_scale = 1.0 + objective_grad.lpNorm<Eigen::Infinity>();
      res.grad_norm = grad.lpNorm<Eigen::Infinity>();
      if (res.grad_norm <= 1e-9 * grad_scale) return res;
      // stop when the achievable gradient floor is reached (ill-conditioned
      // corners limit how far Newton can polish with a finite-difference
      // Hessian)
      if (res.grad_norm < 0.9 * best_grad_norm) {
        best_grad_norm = res.grad_norm;
        steps_since_progress = 0;
      } else if (++steps_since_progress >= 8) {
        return res;
      }

      if (!barrier_hessian(x, mu, vals, hess)) {
        res.stalled = true;
        return res;
      }

      // regularize until we get a usable descent direction
      double tau = 0.0;
      const double diag_scale =
          std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      VectorXd direction(dim_);
      bool have_direction = false;
      for (int attempt = 0; attempt < 12 && !have_direction; ++attempt) {
        MatrixXd reg = hess;
        if (tau > 0.0) reg.diagonal().array() += tau;
        Eigen::LDLT<MatrixXd> ldlt(reg);
        if (ldlt.info() == Eigen::Success) {
          direction = ldlt.solve(-grad);
          // one step of iterative refinement; matters at stiff corners
          VectorXd residual = -grad - reg * direction;
          direction += ldlt.solve(residual);
          if (direction.allFinite() && grad.dot(direction) < 0.0) {
            have_direction = true;
            break;
          }
        }
        tau = (tau == 0.0) ? 1e-10 * diag_scale : tau * 100.0;
      }
      if (!have_direction) {
        res.stalled = true;
        return res;
      }

      const double slope = grad.dot(direction);
      const double decrement = -slope;

      // Armijo backtracking, rejecting points outside the barrier domain
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        candidate = x + alpha * direction;
        const double cand_b = barrier_value(candidate, mu, cand_vals);
        if (std::isfinite(cand_b) && cand_b <= b_val + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // near the stage optimum the predicted decrease drops below rounding
        // noise; take the full Newton polish step as long as it stays in the
        // barrier domain and does not measurably increase the objective
        candidate = x + direction;
        const double cand_b = barrier_value(candidate, mu, cand_vals);
        if (decrement * 0.5 <= 1e-9 * (1.0 + std::abs(b_val)) &&
            std::isfinite(cand_b) &&
            cand_b <= b_val + 1e-12 * (1.0 + std::abs(b_val))) {
          accepted = true;
        }
      }
      if (!accepted) {
        res.stalled = true;
        return res;
      }
      x = candidate;

      if (decrement * 0.5 <= 1e-13 * (1.0 + std::abs(b_val)) &&
          res.grad_norm <= 1e-7 * grad_scale) {
        ++res.steps;
        return res;
      }
    }
    return res;
  }

  const ConcaveProgram& prog_;
  const SolveOptions& opts_;
  int dim_;
  std::vector<Atom> atoms_;
};

bool strictly_feasible(const BarrierSolver& solver, const ConcaveProgram& prog,
                       const VectorXd& x) {
  VectorXd vals;
  if (!solver.eval_atoms(x, vals)) return false;
  return std::isfinite(prog.objective(as_span(x)));
}

// Max-of-slack phase 1. Constraint and budget atoms get a shared slack
// variable; box bounds stay hard. Returns a strictly feasible x or nullopt.
std::optional<VectorXd> run_phase1(const ConcaveProgram& prog,
                                   const SolveOptions& opts, VectorXd x0,
                                   int* steps_used) {
  const int dim = static_cast<int>(prog.dim);
  for (int i = 0; i < dim; ++i) {
    if (prog.box.lower[i] > prog.box.upper[i]) return std::nullopt;
    // clamp softly into the box interior
    if (std::isfinite(prog.box.lower[i]) && std::isfinite(prog.box.upper[i])) {
      const double span = prog.box.upper[i] - prog.box.lower[i];
      if (span <= 0.0) return std::nullopt;
      x0[i] = std::clamp(x0[i], prog.box.lower[i] + 1e-9 * span,
                         prog.box.upper[i] - 1e-9 * span);
    } else if (std::isfinite(prog.box.lower[i])) {
      x0[i] = std::max(x0[i], prog.box.lower[i] + 1e-9);
    } else if (std::isfinite(prog.box.upper[i])) {
      x0[i] = std::min(x0[i], prog.box.upper[i] - 1e-9);
    }
  }

  struct SlackAtom {
    bool is_budget;
    int index;
    double scale;
  };
  std::vector<SlackAtom> slack_atoms;
  std::vector<double> g0;
  for (int i = 0; i < static_cast<int>(prog.inequalities.size()); ++i) {
    const double v = prog.inequalities[i].value(as_span(x0));
    if (!std::isfinite(v)) return std::nullopt;  // cannot even evaluate
    slack_atoms.push_back({false, i, 1.0 / std::max(1.0, std::abs(v))});
    g0.push_back(v);
  }
  for (int i = 0; i < static_cast<int>(prog.budgets.size()); ++i) {
    const auto& b = prog.budgets[i];
    double dot = 0.0;
    for (int c = 0; c < dim; ++c) dot += b.weights[c] * x0[c];
    const double v = b.bound - dot;
    slack_atoms.push_back({true, i, 1.0 / std::max(1.0, std::abs(v))});
    g0.push_back(v);
  }
  if (slack_atoms.empty()) return x0;  // box-only program: center works

  double t0 = kInf;
  for (std::size_t t = 0; t < slack_atoms.size(); ++t) {
    t0 = std::min(t0, slack_atoms[t].scale * g0[t]);
  }
  t0 -= 0.5;

  ConcaveProgram aux;
  aux.dim = prog.dim + 1;
  aux.objective = [dim](std::span<const double> y) { return y[dim]; };
  aux.objective_gradient = [dim](std::span<const double>,
                                 std::span<double> g) {
    for (auto& v : g) v = 0.0;
    g[dim] = 1.0;
  };
  for (const auto& atom : slack_atoms) {
    Constraint c;
    c.name = "slack";
    if (atom.is_budget) {
      const auto budget = prog.budgets[atom.index];
      const double scale = atom.scale;
      c.value = [budget, scale, dim](std::span<const double> y) {
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += budget.weights[i] * y[i];
        return scale * (budget.bound - dot) - y[dim];
      };
      c.gradient = [budget, scale, dim](std::span<const double>,
                                        std::span<double> g) {
        for (int i = 0; i < dim; ++i) g[i] = -scale * budget.weights[i];
        g[dim] = -1.0;
      };
    } else {
      const auto* ineq = &prog.inequalities[atom.index];
      const double scale = atom.scale;
      c.value = [ineq, scale, dim](std::span<const double> y) {
        return scale * ineq->value(y.first(dim)) - y[dim];
      };
      c.gradient = [ineq, scale, dim](std::span<const double> y,
                                      std::span<double> g) {
        ineq->gradient(y.first(dim), g.first(dim));
        for (int i = 0; i < dim; ++i) g[i] *= scale;
        g[dim] = -1.0;
      };
    }
    aux.inequalities.push_back(std::move(c));
  }
  aux.box.lower = prog.box.lower;
  aux.box.upper = prog.box.upper;
  aux.box.lower.push_back(t0 - 10.0);
  aux.box.upper.push_back(std::max(1e6, std::abs(t0) * 10.0));

  VectorXd y0(dim + 1);
  y0.head(dim) = x0;
  y0[dim] = t0;

  BarrierSolver solver(aux, opts);
  const int m = solver.atom_count();
  double mu = 1.0;
  int budget_left = opts.max_iter;
  VectorXd y = y0;
  while (budget_left > 0) {
    auto inner = solver.newton_stage(y, mu, budget_left, dim, 1e-6);
    budget_left -= inner.steps;
    if (steps_used) *steps_used += inner.steps;
    if (y[dim] > 1e-6) break;  // strictly feasible with margin
    if (m * mu < opts.opt_tol) break;
    mu *= 0.1;
  }

  VectorXd x = y.head(dim);
  // strictness check against the original program
  BarrierSolver check(prog, opts);
  VectorXd vals;
  if (!check.eval_atoms(x, vals)) return std::nullopt;
  return x;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::converged:
      return "converged";
    case Status::max_iter:
      return "max-iter";
    case Status::infeasible:
      return "infeasible";
    case Status::numeric_error:
      return "numeric-error";
  }
  return "unknown";
}

KernelSolution solve(const ConcaveProgram& program, std::span<const double> x0,
                     const SolveOptions& opts) {
  KernelSolution sol;
  const int dim = static_cast<int>(program.dim);
  if (dim == 0 || x0.size() != program.dim ||
      program.box.lower.size() != program.dim ||
      program.box.upper.size() != program.dim) {
    sol.status = Status::numeric_error;
    return sol;
  }

  VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = x0[i];

  BarrierSolver solver(program, opts);
  int total_steps = 0;

  if (!strictly_feasible(solver, program, x)) {
    auto feasible = run_phase1(program, opts, x, &total_steps);
    if (!feasible) {
      sol.status = Status::infeasible;
      sol.iterations = total_steps;
      return sol;
    }
    x = *feasible;
    if (!strictly_feasible(solver, program, x)) {
      sol.status = Status::infeasible;
      sol.iterations = total_steps;
      return sol;
    }
  }

  const int m = std::max(1, solver.atom_count());
  double mu = 1.0;
  double final_grad_norm = kInf;
  bool ran_out = false;
  while (true) {
    const int budget_left = opts.max_iter - total_steps;
    if (budget_left <= 0) {
      ran_out = true;
      break;
    }
    auto inner = solver.newton_stage(x, mu, budget_left, -1, 0.0);
    total_steps += inner.steps;
    final_grad_norm = inner.grad_norm;
    sol.stage_objectives.push_back(program.objective(as_span(x)));
    if (m * mu < opts.opt_tol) break;
    mu *= 0.1;
  }

  sol.x.assign(x.data(), x.data() + dim);
  sol.objective = program.objective(as_span(x));
  sol.iterations = total_steps;

  // KKT residual: barrier stationarity plus feasibility violations
  double feas_violation = 0.0;
  for (const auto& ineq : program.inequalities) {
    feas_violation = std::max(feas_violation, -ineq.value(as_span(x)));
  }
  for (const auto& b : program.budgets) {
    double dot = 0.0;
    for (int i = 0; i < dim; ++i) dot += b.weights[i] * x[i];
    feas_violation = std::max(feas_violation, dot - b.bound);
  }
  sol.kkt_residual = std::max(final_grad_norm, feas_violation);
  sol.status = ran_out ? Status::max_iter : Status::converged;
  if (!std::isfinite(sol.objective)) sol.status = Status::numeric_error;
  return sol;
}

std::optional<std::vector<double>> feasibility_phase1(
    const ConcaveProgram& program, const SolveOptions& opts) {
  const int dim = static_cast<int>(program.dim);
  VectorXd center(dim);
  for (int i = 0; i < dim; ++i) {
    const double lo = program.box.lower[i];
    const double hi = program.box.upper[i];
    if (lo > hi) return std::nullopt;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      center[i] = 0.5 * (lo + hi);
    } else if (std::isfinite(lo)) {
      center[i] = lo + 1.0;
    } else if (std::isfinite(hi)) {
      center[i] = hi - 1.0;
    } else {
      center[i] = 0.0;
    }
  }
  int steps = 0;
  auto res = run_phase1(program, opts, center, &steps);
  if (!res) return std::nullopt;
  return std::vector<double>(res->data(), res->data() + dim);
}

}  // namespace idet::kernel
