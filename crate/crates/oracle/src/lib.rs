//! Reference solvers for certifying `speedscale` results on small instances.
//!
//! Nothing here shares solver code with the crate under test: the preemptive
//! optimum comes from the classical minimum-density-interval algorithm run per
//! machine and a subset partition over machines, and the non-preemptive optimum
//! from exhaustive search over job subsets, orders and grid start/completion times.
//! Every entry point checks an [`OracleBudget`] and refuses oversized instances.

mod nonpreemptive;
mod preemptive;
mod yds;

use std::time::{Duration, Instant};

use speedscale::Instance;

pub use nonpreemptive::{nonpreemptive_curve, opt_nonpreemptive, phi_grid, theta_grid};
pub use preemptive::{opt_preemptive, preemptive_curve, subset_energies};
pub use yds::{yds_min_energy, YdsJob, YdsSchedule};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Core(#[from] speedscale::Error),
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

/// Size caps and a wall-clock limit for the exhaustive searches.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    pub max_jobs: usize,
    pub max_machines: usize,
    pub max_grid: usize,
    pub time_limit: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_jobs: 8,
            max_machines: 3,
            max_grid: 600,
            time_limit: Duration::from_secs(120),
        }
    }
}

impl OracleBudget {
    pub(crate) fn admit(&self, instance: &Instance) -> Result<Deadline> {
        if instance.len() > self.max_jobs {
            return Err(OracleError::Refused(format!(
                "{} jobs exceed the cap of {}",
                instance.len(),
                self.max_jobs
            )));
        }
        if instance.machines() > self.max_machines {
            return Err(OracleError::Refused(format!(
                "{} machines exceed the cap of {}",
                instance.machines(),
                self.max_machines
            )));
        }
        Ok(Deadline {
            at: Instant::now() + self.time_limit,
        })
    }

    pub(crate) fn admit_grid(&self, points: usize) -> Result<()> {
        if points > self.max_grid {
            return Err(OracleError::Refused(format!(
                "grid of {points} points exceeds the cap of {}",
                self.max_grid
            )));
        }
        Ok(())
    }
}

pub(crate) struct Deadline {
    at: Instant,
}

impl Deadline {
    pub(crate) fn check(&self) -> Result<()> {
        if Instant::now() > self.at {
            Err(OracleError::Refused("time limit reached".into()))
        } else {
            Ok(())
        }
    }
}

/// Bitmask subsets of `n` jobs.
pub(crate) fn masks(n: usize) -> std::ops::Range<usize> {
    0..1usize << n
}

pub(crate) fn mask_weight(instance: &Instance, mask: usize) -> u64 {
    (0..instance.len())
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| instance.job(j).weight)
        .sum()
}

/// Minimum over ways of splitting each mask among machines, where `per_machine[i][s]`
/// is the cost of running exactly the jobs of `s` on machine `i`.
pub(crate) fn partition(
    per_machine: &[Vec<speedscale::scalar::Cost>],
    n: usize,
    deadline: &Deadline,
) -> Result<Vec<speedscale::scalar::Cost>> {
    use speedscale::scalar::relax;
    let mut best = per_machine[0].clone();
    for costs in &per_machine[1..] {
        let mut next = vec![None; best.len()];
        for mask in masks(n) {
            deadline.check()?;
            // enumerate submasks `s` given to this machine
            let mut s = mask;
            loop {
                if let (Some(a), Some(b)) = (&best[mask ^ s], &costs[s]) {
                    relax(&mut next[mask], a + b);
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & mask;
            }
        }
        best = next;
    }
    Ok(best)
}

/// `curve[w]` = minimum cost over masks of weight at least `w`.
pub(crate) fn weight_curve(instance: &Instance, by_mask: &[speedscale::scalar::Cost]) -> Vec<speedscale::scalar::Cost> {
    use speedscale::scalar::relax;
    let total = instance.total_weight() as usize;
    let mut exact = vec![None; total + 1];
    for (mask, c) in by_mask.iter().enumerate() {
        if let Some(c) = c {
            relax(&mut exact[mask_weight(instance, mask) as usize], c.clone());
        }
    }
    let mut curve = exact.clone();
    for w in (0..total).rev() {
        if let Some(c) = curve[w + 1].clone() {
            relax(&mut curve[w], c);
        }
    }
    curve
}
