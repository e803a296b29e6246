use microlp::{ComparisonOp, OptimizationDirection, Problem, SolutionStatus, SolveOptions, TerminationReason};

use super::{Cmp, MilpBackend, Model, Sense, SolveOutcome, SolveParams, SolverError, Status, VarKind};

/// Tolerance for post-checking points returned by the backend.
const ACCEPT_VIOLATION: f64 = 1e-6;

/// Pure-Rust backend built on `microlp` (bounded dual simplex plus
/// branch-and-bound). Deterministic and single threaded.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLpBackend;

impl MilpBackend for MicroLpBackend {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn solve(&self, model: &Model, params: &SolveParams) -> Result<SolveOutcome, SolverError> {
        model.validate()?;
        let direction = match model.sense() {
            Sense::Maximize => OptimizationDirection::Maximize,
            Sense::Minimize => OptimizationDirection::Minimize,
        };
        let mut obj = vec![0.0; model.var_count()];
        for &(v, c) in model.objective() {
            obj[v.index()] += c;
        }
        let mut problem = Problem::new(direction);
        let mut handles = Vec::with_capacity(model.var_count());
        for (v, c) in model.vars().iter().zip(&obj) {
            let h = match v.kind {
                VarKind::Continuous => problem.add_var(*c, (v.lower, v.upper)),
                VarKind::Binary => {
                    let lo = v.lower.max(0.0).ceil() as i32;
                    let hi = v.upper.min(1.0).floor() as i32;
                    if lo > hi {
                        return Ok(SolveOutcome::without_solution(Status::Infeasible, worst(model.sense())));
                    }
                    problem.add_integer_var(*c, (lo, hi))
                }
            };
            handles.push(h);
        }
        for c in model.constraints() {
            let op = match c.cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(
                c.terms.iter().map(|&(v, a)| (handles[v.index()], a)),
                op,
                c.rhs,
            );
        }

        let mut options = SolveOptions::default();
        options.time_limit = params.time_limit;
        if let Some(ws) = &params.warm_start {
            if ws.len() == model.var_count() && model.max_violation(ws) <= ACCEPT_VIOLATION {
                options.warm_start = Some(handles.iter().copied().zip(ws.iter().copied()).collect());
            }
        }

        let outcome = match problem.solve_with(options) {
            Ok(o) => o,
            Err(microlp::Error::Infeasible) => {
                return Ok(SolveOutcome::without_solution(Status::Infeasible, worst(model.sense())))
            }
            Err(microlp::Error::Unbounded) => {
                return Ok(SolveOutcome::without_solution(Status::Unbounded, -worst(model.sense())))
            }
            Err(e) => return Err(SolverError::Backend(e.to_string())),
        };

        let Some(sol) = outcome.solution() else {
            let bound = outcome.stats().best_bound.unwrap_or(-worst(model.sense()));
            return Ok(SolveOutcome::without_solution(Status::TimeLimit, bound));
        };

        let mut primal: Vec<f64> = handles.iter().map(|&h| sol.var_value_raw(h)).collect();
        for (x, v) in primal.iter_mut().zip(model.vars()) {
            if v.kind == VarKind::Binary {
                *x = x.round();
            }
            *x = x.clamp(v.lower, v.upper);
        }
        let violation = model.max_violation(&primal);
        if violation > ACCEPT_VIOLATION {
            return Err(SolverError::InvalidPoint(violation));
        }
        let objective = model.evaluate(&primal);
        let status = match (sol.status(), sol.termination_reason()) {
            (SolutionStatus::Optimal, _) => Status::Optimal,
            (_, TerminationReason::TimeLimit) => Status::TimeLimit,
            (_, TerminationReason::MipGap) if params.gap_tol > 0.0 => {
                match sol.stats().best_bound {
                    Some(b) if (b - objective).abs() <= params.gap_tol => Status::Optimal,
                    _ => Status::Feasible,
                }
            }
            _ => Status::Feasible,
        };
        let best_bound = match status {
            Status::Optimal => objective,
            _ => sol.stats().best_bound.unwrap_or(-worst(model.sense())),
        };
        Ok(SolveOutcome {
            status,
            primal: Some(primal),
            objective: Some(objective),
            best_bound,
        })
    }
}

/// The worst objective value in the model's sense.
fn worst(sense: Sense) -> f64 {
    match sense {
        Sense::Maximize => f64::NEG_INFINITY,
        Sense::Minimize => f64::INFINITY,
    }
}
