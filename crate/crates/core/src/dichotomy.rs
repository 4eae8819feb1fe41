//! Throughput maximisation under an energy budget by bisecting the demand handed
//! to the primal-dual energy minimiser.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::primal_dual::{solve, PdSolution};
use crate::scalar::{ceil_log2, int, Scalar, Show};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The returned energy lies in `[E, (1 + eps) E]`, or full demand fits.
    Converged,
    /// No positive demand fits in `(1 + eps) E`; the returned solution is empty.
    BudgetTooSmall,
    /// The cap was reached; the best feasible probe seen is returned.
    Degenerate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::BudgetTooSmall => "budget-too-small",
            Status::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyResult {
    /// Demand of the returned probe.
    pub demand: Scalar,
    pub solution: PdSolution,
    /// Number of primal-dual runs.
    pub iterations: u32,
    pub status: Status,
}

impl DichotomyResult {
    pub fn throughput(&self, instance: &Instance) -> u64 {
        self.solution.throughput(instance)
    }
}

/// `ceil(log2(total_weight)) + ceil(log2(1 / eps)) + 32`.
pub fn iteration_cap(total_weight: u64, eps: &Scalar) -> u32 {
    ceil_log2(&int(total_weight as i64)) + ceil_log2(&eps.recip()) + 32
}

/// Bisects the demand on `[0, sum w]` until the primal-dual energy lands in
/// `[budget, (1 + eps) budget]`. Probes within `(1 + eps) budget` are remembered
/// (largest throughput, then lowest energy) and the best one is returned if the cap
/// is reached first, since the energy need not be monotone in the demand.
pub fn maximize_throughput(instance: &Instance, budget: &Scalar, eps: &Scalar) -> Result<DichotomyResult> {
    if budget.is_negative() {
        return Err(Error::NegativeBudget(Show(budget).to_string()));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidInstance(format!(
            "eps must be positive, got {}",
            Show(eps)
        )));
    }
    let total = instance.total_weight();
    let empty = |iterations, status| -> Result<DichotomyResult> {
        Ok(DichotomyResult {
            demand: Scalar::zero(),
            solution: solve(instance, &Scalar::zero())?,
            iterations,
            status,
        })
    };
    if total == 0 {
        return empty(0, Status::Converged);
    }
    if budget.is_zero() {
        return empty(0, Status::BudgetTooSmall);
    }

    let ceiling = budget * (Scalar::one() + eps);
    let full = int(total as i64);
    let probe = solve(instance, &full)?;
    if probe.energy <= ceiling {
        return Ok(DichotomyResult {
            demand: full,
            solution: probe,
            iterations: 1,
            status: Status::Converged,
        });
    }

    let cap = iteration_cap(total, eps);
    let (mut low, mut high) = (Scalar::zero(), full);
    let mut best: Option<(Scalar, PdSolution)> = None;
    for iterations in 2..=cap {
        let demand = (&low + &high) / int(2);
        let solution = solve(instance, &demand)?;
        if solution.energy <= ceiling {
            if &solution.energy >= budget {
                return Ok(DichotomyResult {
                    demand,
                    solution,
                    iterations,
                    status: Status::Converged,
                });
            }
            let better = best.as_ref().is_none_or(|(_, b)| {
                let (w, bw) = (solution.throughput(instance), b.throughput(instance));
                w > bw || (w == bw && solution.energy < b.energy)
            });
            if better {
                best = Some((demand.clone(), solution.clone()));
            }
        }
        if &solution.energy < budget {
            low = demand;
        } else {
            high = demand;
        }
    }
    match best {
        Some((demand, solution)) if solution.throughput(instance) > 0 => Ok(DichotomyResult {
            demand,
            solution,
            iterations: cap,
            status: Status::Degenerate,
        }),
        _ => empty(cap, Status::BudgetTooSmall),
    }
}
