//! Exact non-preemptive solver for equal-volume jobs on a few identical machines.
//!
//! Jobs are taken in deadline order. A state describes a sub-problem: the jobs of
//! the first `k` whose release lies in `[release_floor, release_ceiling)`, to be
//! placed non-preemptively, one constant speed per job, with machine `i` restricted
//! to the window `[a_i, b_i]`. The last job of the sub-problem is either dropped, or
//! started at `u_h` on machine `h` and completed at `e'`; the remaining jobs then
//! split by release date at `u_h` into a left part (machine windows `[a_i, u_i]`)
//! and a right part (windows `[u_i, b_i]`, with `[e', b_h]` on machine `h`).
//!
//! Start and completion times range over the grid
//! `Θ = { a + l (b - a) / k : a, b release dates or deadlines, k <= n }` and
//! speeds over `Λ = { l p / (b - a) }`. Every state stores the minimum energy for
//! each exact total weight.

use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::grid::{SpeedSet, TimeGrid};
use crate::model::{Instance, SchedulePlan, Slice};
use crate::scalar::{self, common_denominator, relax_int, scale_to, Cost, IntCost, Scalar, Show};

/// Largest machine count accepted by the exact solvers.
pub const MAX_MACHINES: usize = 3;

/// Default cap on memoised states before the solver gives up.
pub const DEFAULT_STATE_LIMIT: usize = 2_000_000;

/// Open upper bound for `release_ceiling`.
pub const UNBOUNDED: u16 = u16::MAX;

/// Result of an exact solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DpOutcome {
    /// Largest total weight whose minimum energy fits in the budget.
    pub weight: u64,
    pub energy: Scalar,
    pub plan: SchedulePlan,
    /// Number of memoised states.
    pub states: usize,
}

/// Time components are indices into `Θ`. Machines past the instance's count, and
/// machines with `a_i >= b_i`, are unusable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EqStateKey {
    /// Number of deadline-ordered jobs considered (prefix length).
    pub k: usize,
    pub release_floor: u16,
    /// Exclusive; [`UNBOUNDED`] for no limit.
    pub release_ceiling: u16,
    pub a: [u16; MAX_MACHINES],
    pub b: [u16; MAX_MACHINES],
}

/// `Θ` of an equal-volume instance.
pub fn build_theta(instance: &Instance) -> Result<TimeGrid> {
    equal_volume(instance)?;
    Ok(TimeGrid::subdivisions(&instance.omega(), instance.len() as u64))
}

/// `Λ` of an equal-volume instance.
pub fn build_lambda(instance: &Instance) -> Result<SpeedSet> {
    let p = equal_volume(instance)?;
    Ok(SpeedSet::from_omega(&instance.omega(), p, instance.len() as u64))
}

fn equal_volume(instance: &Instance) -> Result<&Scalar> {
    if instance.is_empty() {
        return Err(Error::WrongSolver(
            "the equal-volume solver needs at least one job".into(),
        ));
    }
    instance
        .equal_volume()
        .ok_or_else(|| Error::WrongSolver("jobs do not share one volume on identical machines".into()))
}

#[derive(Debug, Clone)]
struct Placement {
    machine: usize,
    start: u16,
    end: u16,
    left: EqStateKey,
    right: EqStateKey,
}

/// Memoised evaluator of the recursion.
pub struct EqualDp<'a> {
    instance: &'a Instance,
    theta: TimeGrid,
    volume: Scalar,
    release: Vec<u16>,
    deadline: Vec<u16>,
    /// `runs[u]`: admissible completions `e` for a start at `u`, with the run energy.
    /// Energies are integers over this common denominator.
    runs: Vec<Vec<(u16, BigInt)>>,
    denominator: BigInt,
    memo: HashMap<EqStateKey, Rc<Vec<IntCost>>>,
    state_limit: usize,
}

impl<'a> EqualDp<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self> {
        let volume = equal_volume(instance)?.clone();
        if instance.machines() > MAX_MACHINES {
            return Err(Error::TooLarge(format!(
                "{} machines, the exact solver handles at most {MAX_MACHINES}",
                instance.machines()
            )));
        }
        let theta = build_theta(instance)?;
        let lambda = build_lambda(instance)?;
        if theta.len() >= UNBOUNDED as usize {
            return Err(Error::TooLarge(format!("time grid of {} points", theta.len())));
        }
        let power = instance.power();
        let mut exact: Vec<Vec<(u16, Scalar)>> = vec![Vec::new(); theta.len()];
        for (u, row) in exact.iter_mut().enumerate() {
            for e in u + 1..theta.len() {
                let duration = theta.get(e) - theta.get(u);
                if lambda.contains(&(&volume / &duration)) {
                    row.push((e as u16, power.run_energy(&volume, &duration)));
                }
            }
        }
        let denominator = common_denominator(exact.iter().flatten().map(|(_, c)| c));
        let runs = exact
            .into_iter()
            .map(|row| row.into_iter().map(|(e, c)| (e, scale_to(&c, &denominator))).collect())
            .collect();
        let index = |t: &Scalar| theta.index_of(t).expect("release dates and deadlines lie on the grid") as u16;
        let release = instance.jobs().iter().map(|j| index(&j.release)).collect();
        let deadline = instance.jobs().iter().map(|j| index(&j.deadline)).collect();
        Ok(Self {
            instance,
            theta,
            volume,
            release,
            deadline,
            runs,
            denominator,
            memo: HashMap::new(),
            state_limit: DEFAULT_STATE_LIMIT,
        })
    }

    pub fn with_state_limit(mut self, limit: usize) -> Self {
        self.state_limit = limit;
        self
    }

    pub fn theta(&self) -> &TimeGrid {
        &self.theta
    }

    pub fn states(&self) -> usize {
        self.memo.len()
    }

    /// The whole instance: every job, every machine open over the full horizon.
    pub fn root_key(&self) -> EqStateKey {
        let m = self.instance.machines();
        let last = (self.theta.len() - 1) as u16;
        let mut b = [0; MAX_MACHINES];
        b[..m].fill(last);
        EqStateKey {
            k: self.instance.len(),
            release_floor: 0,
            release_ceiling: UNBOUNDED,
            a: [0; MAX_MACHINES],
            b,
        }
    }

    /// Minimum energy of a schedule of total weight at least `w` for the state.
    pub fn ek(&mut self, key: &EqStateKey, w: u64) -> Result<Cost> {
        let table = self.table(key)?;
        let mut best: IntCost = None;
        for c in table.iter().skip(w as usize).flatten() {
            relax_int(&mut best, c.clone());
        }
        Ok(self.unscale(&best))
    }

    /// Largest exact weight whose minimum energy fits in `budget`, with a plan.
    /// The memo is kept, so further budgets are cheap.
    pub fn solve(&mut self, budget: &Scalar) -> Result<DpOutcome> {
        if budget.is_negative() {
            return Err(Error::NegativeBudget(Show(budget).to_string()));
        }
        let curve = self.curve()?;
        let weight = scalar::max_within(&curve, budget).unwrap_or(0);
        let energy = curve[weight].clone().unwrap_or_else(scalar::zero);
        let mut plan = SchedulePlan::empty(self.instance.machines());
        let root = self.root_key();
        self.reconstruct(&root, weight, &mut plan)?;
        plan.normalize();
        Ok(DpOutcome {
            weight: weight as u64,
            energy,
            plan,
            states: self.states(),
        })
    }

    /// Minimum energy for every exact total weight of the whole instance.
    pub fn curve(&mut self) -> Result<Vec<Cost>> {
        let root = self.root_key();
        Ok(self.table(&root)?.iter().map(|c| self.unscale(c)).collect())
    }

    fn in_range(&self, j: usize, key: &EqStateKey) -> bool {
        self.release[j] >= key.release_floor && self.release[j] < key.release_ceiling
    }

    /// Drops out-of-range trailing jobs and clips machine windows to the jobs'
    /// span; `None` when no job can be placed.
    fn tighten(&self, key: &EqStateKey) -> Option<EqStateKey> {
        let mut out = *key;
        while out.k > 0 && !self.in_range(out.k - 1, key) {
            out.k -= 1;
        }
        if out.k == 0 {
            return None;
        }
        let members = (0..out.k).filter(|&j| self.in_range(j, key));
        let (lo, hi) = members.fold((u16::MAX, 0), |(lo, hi), j| {
            (lo.min(self.release[j]), hi.max(self.release[j]))
        });
        out.release_floor = lo;
        out.release_ceiling = hi + 1;
        let horizon = self.deadline[out.k - 1];
        let mut usable = false;
        for i in 0..MAX_MACHINES {
            let (a, b) = (out.a[i].max(lo), out.b[i].min(horizon));
            if i < self.instance.machines() && a < b {
                out.a[i] = a;
                out.b[i] = b;
                usable = true;
            } else {
                out.a[i] = 0;
                out.b[i] = 0;
            }
        }
        usable.then_some(out)
    }

    /// Machines are identical, so window order does not matter.
    fn canonical(&self, key: &EqStateKey) -> EqStateKey {
        let m = self.instance.machines();
        let mut windows: Vec<(u16, u16)> = (0..m).map(|i| (key.a[i], key.b[i])).collect();
        windows.sort_unstable();
        let mut out = *key;
        for (i, (a, b)) in windows.into_iter().enumerate() {
            out.a[i] = a;
            out.b[i] = b;
        }
        out
    }

    /// Exact-weight energy table of a state.
    fn table(&mut self, key: &EqStateKey) -> Result<Rc<Vec<IntCost>>> {
        let Some(tight) = self.tighten(key) else {
            return Ok(Rc::new(vec![Some(BigInt::zero())]));
        };
        let canon = self.canonical(&tight);
        if let Some(hit) = self.memo.get(&canon) {
            return Ok(Rc::clone(hit));
        }
        let table = Rc::new(self.compute(&canon)?);
        if self.memo.len() >= self.state_limit {
            return Err(Error::TooLarge(format!(
                "more than {} dynamic-programming states",
                self.state_limit
            )));
        }
        self.memo.insert(canon, Rc::clone(&table));
        Ok(table)
    }

    fn member_weight(&self, key: &EqStateKey) -> usize {
        (0..key.k)
            .filter(|&j| self.in_range(j, key))
            .map(|j| self.instance.job(j).weight as usize)
            .sum()
    }

    fn unscale(&self, c: &IntCost) -> Cost {
        c.as_ref().map(|v| Scalar::new(v.clone(), self.denominator.clone()))
    }

    fn compute(&mut self, key: &EqStateKey) -> Result<Vec<IntCost>> {
        let job = key.k - 1;
        let weight = self.instance.job(job).weight as usize;
        let mut out: Vec<IntCost> = vec![None; self.member_weight(key) + 1];
        let skip = self.table(&EqStateKey { k: job, ..*key })?;
        for (w, c) in skip.iter().enumerate() {
            if let Some(c) = c {
                relax_int(&mut out[w], c.clone());
            }
        }
        // Placements sharing a left part are merged first: for each right weight
        // keep the cheapest run plus right part, then combine once with the left.
        let mut merged: Vec<(EqStateKey, Vec<IntCost>)> = Vec::new();
        let mut slot: HashMap<EqStateKey, usize> = HashMap::new();
        for placement in self.placements(key) {
            let cost = self.run_cost(placement.start, placement.end).clone();
            let right = self.table(&placement.right)?;
            let at = *slot.entry(placement.left).or_insert_with(|| {
                merged.push((placement.left, Vec::new()));
                merged.len() - 1
            });
            let best = &mut merged[at].1;
            if best.len() < right.len() {
                best.resize(right.len(), None);
            }
            for (wr, cr) in right.iter().enumerate() {
                if let Some(cr) = cr {
                    relax_int(&mut best[wr], cr + &cost);
                }
            }
        }
        for (left_key, best) in merged {
            let left = self.table(&left_key)?;
            for (wl, cl) in left.iter().enumerate() {
                let Some(cl) = cl else { continue };
                for (wr, cr) in best.iter().enumerate() {
                    if let Some(cr) = cr {
                        relax_int(&mut out[wl + wr + weight], cl + cr);
                    }
                }
            }
        }
        Ok(out)
    }

    fn run_cost(&self, start: u16, end: u16) -> &BigInt {
        let row = &self.runs[start as usize];
        let at = row
            .binary_search_by_key(&end, |(e, _)| *e)
            .expect("placement uses an admissible run");
        &row[at].1
    }

    /// Every way of running job `key.k - 1` and splitting the rest around it.
    fn placements(&self, key: &EqStateKey) -> Vec<Placement> {
        let job = key.k - 1;
        let m = self.instance.machines();
        let mut out = Vec::new();
        for h in 0..m {
            if key.a[h] >= key.b[h] {
                continue;
            }
            let latest_end = key.b[h].min(self.deadline[job]);
            for start in key.a[h].max(self.release[job])..key.b[h] {
                let ends = self.runs[start as usize]
                    .iter()
                    .map(|(e, _)| *e)
                    .take_while(|&e| e <= latest_end);
                let ends: Vec<u16> = ends.collect();
                if ends.is_empty() {
                    continue;
                }
                // Jobs released before `start` go left, the others right. On the
                // other machines a split point only matters between the earliest
                // right release and the latest left deadline; outside that range
                // one side is unaffected and the other only gains.
                let (mut latest_left, mut earliest_right) = (None::<u16>, None::<u16>);
                for j in (0..job).filter(|&j| self.in_range(j, key)) {
                    if self.release[j] < start {
                        latest_left = latest_left.max(Some(self.deadline[j]));
                    } else {
                        earliest_right = Some(earliest_right.map_or(self.release[j], |r| r.min(self.release[j])));
                    }
                }
                let options: Vec<Vec<u16>> = (0..m)
                    .map(|i| {
                        let (a, b) = (key.a[i], key.b[i]);
                        if i == h {
                            return vec![start];
                        }
                        match (latest_left, earliest_right) {
                            _ if a >= b => vec![a],
                            (None, _) => vec![a],
                            (_, None) => vec![b],
                            (Some(dl), Some(rr)) => {
                                let lo = a.max(rr).min(b);
                                let hi = b.min(dl).max(lo);
                                (lo..=hi).collect()
                            }
                        }
                    })
                    .collect();
                for split in cartesian(&options) {
                    let mut mid = key.a;
                    mid[..m].copy_from_slice(&split);
                    let left = EqStateKey {
                        k: job,
                        release_floor: key.release_floor,
                        release_ceiling: start.min(key.release_ceiling),
                        a: key.a,
                        b: mid,
                    };
                    for &end in &ends {
                        let mut right_a = mid;
                        right_a[h] = end;
                        let right = EqStateKey {
                            k: job,
                            release_floor: start.max(key.release_floor),
                            release_ceiling: key.release_ceiling,
                            a: right_a,
                            b: key.b,
                        };
                        out.push(Placement {
                            machine: h,
                            start,
                            end,
                            left,
                            right,
                        });
                    }
                }
            }
        }
        out
    }

    /// Plan attaining the exact weight `w` in the state.
    pub fn reconstruct(&mut self, key: &EqStateKey, w: usize, plan: &mut SchedulePlan) -> Result<()> {
        let Some(key) = self.tighten(key) else {
            return if w == 0 {
                Ok(())
            } else {
                Err(Error::Invariant(
                    "reconstruction reached an empty state with weight left".into(),
                ))
            };
        };
        let target = self.table(&key)?.get(w).cloned().flatten();
        let Some(target) = target else {
            return Err(Error::Invariant(format!("no schedule of weight {w} to reconstruct")));
        };
        let job = key.k - 1;
        let skip_key = EqStateKey { k: job, ..key };
        if self.table(&skip_key)?.get(w).cloned().flatten().as_ref() == Some(&target) {
            return self.reconstruct(&skip_key, w, plan);
        }
        let weight = self.instance.job(job).weight as usize;
        if w < weight {
            return Err(Error::Invariant("reconstruction weight underflow".into()));
        }
        for placement in self.placements(&key) {
            let cost = self.run_cost(placement.start, placement.end).clone();
            let left = self.table(&placement.left)?;
            let right = self.table(&placement.right)?;
            for (wl, cl) in left.iter().enumerate().take(w - weight + 1) {
                let (Some(cl), Some(Some(cr))) = (cl, right.get(w - weight - wl)) else {
                    continue;
                };
                if cl + &cost + cr == target {
                    let (s, e) = (
                        self.theta.get(placement.start as usize),
                        self.theta.get(placement.end as usize),
                    );
                    let speed = &self.volume / (e - s);
                    plan.push(placement.machine, Slice::new(job, s.clone(), e.clone(), speed));
                    self.reconstruct(&placement.left, wl, plan)?;
                    return self.reconstruct(&placement.right, w - weight - wl, plan);
                }
            }
        }
        Err(Error::Invariant(format!(
            "no choice attains the stored energy {}",
            Show(&Scalar::new(target, self.denominator.clone()))
        )))
    }
}

fn cartesian(options: &[Vec<u16>]) -> Vec<Vec<u16>> {
    options.iter().fold(vec![Vec::new()], |acc, choices| {
        acc.iter()
            .flat_map(|prefix| {
                choices.iter().map(move |&c| {
                    let mut v = prefix.clone();
                    v.push(c);
                    v
                })
            })
            .collect()
    })
}

/// Maximum total weight schedulable non-preemptively within `budget`, with a plan.
pub fn solve_equal(instance: &Instance, budget: &Scalar) -> Result<DpOutcome> {
    if budget.is_negative() {
        return Err(Error::NegativeBudget(Show(budget).to_string()));
    }
    if instance.is_empty() {
        return Ok(DpOutcome {
            weight: 0,
            energy: scalar::zero(),
            plan: SchedulePlan::empty(instance.machines()),
            states: 0,
        });
    }
    EqualDp::new(instance)?.solve(budget)
}
