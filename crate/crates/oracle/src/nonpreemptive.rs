//! Exhaustive non-preemptive search over a fixed grid of start/completion times.

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use speedscale::scalar::{int, relax, Cost};
use speedscale::{Instance, Scalar};

use crate::{masks, partition, weight_curve, Deadline, OracleBudget, Result};

fn subdivide(omega: &[Scalar], parts: u64) -> Vec<Scalar> {
    let mut out = omega.to_vec();
    for (x, a) in omega.iter().enumerate() {
        for b in &omega[x + 1..] {
            for k in 2..=parts {
                for l in 1..k {
                    out.push(a + (b - a) * int(l as i64) / int(k as i64));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Release dates, deadlines, and every `a + l (b - a) / k` for `k <= n`.
pub fn theta_grid(instance: &Instance) -> Vec<Scalar> {
    subdivide(&instance.omega(), instance.len() as u64)
}

/// As [`theta_grid`] with `k` up to the total volume (rounded up; largest volume
/// per job when machines differ).
pub fn phi_grid(instance: &Instance) -> Vec<Scalar> {
    let total = instance
        .jobs()
        .iter()
        .map(|j| j.volumes.iter().flatten().max().cloned().unwrap_or_else(Scalar::zero))
        .fold(Scalar::zero(), |acc, v| acc + v);
    let parts: u64 = total.ceil().to_integer().try_into().unwrap_or(u64::MAX);
    subdivide(&instance.omega(), parts.max(1))
}

struct Search<'a> {
    instance: &'a Instance,
    machine: usize,
    grid: &'a [Scalar],
    /// Jobs allowed to follow one another: all orders, or deadline order only.
    order: Vec<usize>,
    edf_only: bool,
    runs: HashMap<Scalar, Vec<Vec<Option<Scalar>>>>,
    best: Vec<Cost>,
    deadline: &'a Deadline,
}

impl Search<'_> {
    fn run_table(&mut self, volume: &Scalar) -> &Vec<Vec<Option<Scalar>>> {
        let (grid, power) = (self.grid, self.instance.power());
        self.runs.entry(volume.clone()).or_insert_with(|| {
            (0..grid.len())
                .map(|s| {
                    (0..grid.len())
                        .map(|c| (c > s).then(|| power.run_energy(volume, &(&grid[c] - &grid[s]))))
                        .collect()
                })
                .collect()
        })
    }

    /// `ready[t]`: cheapest way to have run the chosen sequence with the machine
    /// free from `grid[t]` on.
    fn dfs(&mut self, mask: usize, position: usize, ready: &[Cost]) -> Result<()> {
        self.deadline.check()?;
        if let Some(c) = ready.last().cloned().flatten() {
            relax(&mut self.best[mask], c);
        }
        let start_at = if self.edf_only { position } else { 0 };
        for at in start_at..self.order.len() {
            let j = self.order[at];
            if mask >> j & 1 == 1 {
                continue;
            }
            let job = self.instance.job(j);
            let Some(volume) = job.volume(self.machine).cloned() else {
                continue;
            };
            let (release, due) = (job.release.clone(), job.deadline.clone());
            let first = self.grid.partition_point(|t| *t < release);
            let last = self.grid.partition_point(|t| *t <= due);
            let table = self.run_table(&volume).clone();
            let mut next: Vec<Cost> = vec![None; self.grid.len()];
            for c in first + 1..last {
                let mut cell: Cost = None;
                for s in first..c {
                    if let (Some(base), Some(run)) = (&ready[s], &table[s][c]) {
                        relax(&mut cell, base + run);
                    }
                }
                next[c] = cell;
            }
            for t in 1..next.len() {
                if let Some(prev) = next[t - 1].clone() {
                    relax(&mut next[t], prev);
                }
            }
            self.dfs(mask | 1 << j, at + 1, &next)?;
        }
        Ok(())
    }
}

fn machine_energies(instance: &Instance, machine: usize, grid: &[Scalar], deadline: &Deadline) -> Result<Vec<Cost>> {
    let n = instance.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        let (a, b) = (instance.job(x), instance.job(y));
        (&a.deadline, &a.release).cmp(&(&b.deadline, &b.release))
    });
    let mut search = Search {
        instance,
        machine,
        grid,
        order,
        edf_only: instance.is_agreeable(),
        runs: HashMap::new(),
        best: vec![None; 1 << n],
        deadline,
    };
    let ready = vec![Some(Scalar::zero()); grid.len()];
    search.dfs(0, 0, &ready)?;
    Ok(search.best)
}

/// `curve[w]`: least energy of a non-preemptive schedule of weight at least `w`
/// whose start and completion times lie on `grid`, each job at constant speed.
/// Orders on a machine are restricted to deadline order when the instance is
/// agreeable, and unrestricted otherwise.
pub fn nonpreemptive_curve(instance: &Instance, grid: &[Scalar], budget: &OracleBudget) -> Result<Vec<Cost>> {
    let deadline = budget.admit(instance)?;
    budget.admit_grid(grid.len())?;
    if grid.iter().any(|t| t.is_negative()) {
        return Err(crate::OracleError::Refused("negative grid time".into()));
    }
    let mut per_machine: Vec<Vec<Cost>> = Vec::with_capacity(instance.machines());
    for machine in 0..instance.machines() {
        if machine > 0 && instance.is_identical_machines() {
            per_machine.push(per_machine[0].clone());
        } else {
            per_machine.push(machine_energies(instance, machine, grid, &deadline)?);
        }
    }
    let by_mask = partition(&per_machine, instance.len(), &deadline)?;
    debug_assert_eq!(by_mask.len(), masks(instance.len()).len());
    Ok(weight_curve(instance, &by_mask))
}

/// Largest total weight schedulable within `energy`.
pub fn opt_nonpreemptive(instance: &Instance, energy: &Scalar, grid: &[Scalar], budget: &OracleBudget) -> Result<u64> {
    let curve = nonpreemptive_curve(instance, grid, budget)?;
    Ok(speedscale::scalar::max_within(&curve, energy).unwrap_or(0) as u64)
}
