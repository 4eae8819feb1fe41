//! Exact non-preemptive solver for agreeable instances on a few identical machines.
//!
//! On each machine an optimal schedule may run its jobs in deadline order, so the
//! jobs are scanned in that order (ties by release date) and a state only records,
//! per machine, the time `b_i` by which everything chosen so far must be finished
//! there. Job `k` is either dropped, or run on some machine `h` as the last job
//! there, ending at `min(b_h, d_k)` at a speed from
//! `Δ = { i / (b - a) : 1 <= i <= V }`; its start `a_h` becomes the new bound of
//! machine `h`. Times range over the grid
//! `Φ = { a + l (b - a) / k : k <= V }`, `V` the total volume.

use std::collections::HashMap;
use std::rc::Rc;

use num_traits::Signed;

use crate::dp_equal::{DpOutcome, MAX_MACHINES};
use crate::error::{Error, Result};
use crate::grid::{SpeedSet, TimeGrid};
use crate::model::{Instance, SchedulePlan, Slice};
use crate::scalar::{self, int, relax, Cost, Scalar, Show};

pub use crate::dp_equal::DEFAULT_STATE_LIMIT;

/// `b` components are indices into `Φ`; entries past the machine count are unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgStateKey {
    /// Number of jobs considered, in deadline order.
    pub k: usize,
    pub b: [u16; MAX_MACHINES],
}

/// `V`, the total volume rounded up to an integer.
fn total_volume(instance: &Instance) -> Result<u64> {
    let mut total = scalar::zero();
    for job in instance.jobs() {
        total += job
            .uniform_volume()
            .ok_or_else(|| Error::WrongSolver("the agreeable solver needs identical machines".into()))?;
    }
    total
        .ceil()
        .to_integer()
        .try_into()
        .map_err(|_| Error::TooLarge("total volume".into()))
}

fn check(instance: &Instance) -> Result<()> {
    if !instance.is_agreeable() {
        return Err(Error::WrongSolver("release and deadline orders cross".into()));
    }
    total_volume(instance).map(|_| ())
}

/// `Φ` of an agreeable instance.
pub fn build_phi(instance: &Instance) -> Result<TimeGrid> {
    check(instance)?;
    Ok(TimeGrid::subdivisions(
        &instance.omega(),
        total_volume(instance)?.max(1),
    ))
}

/// `Δ` of an agreeable instance.
pub fn build_delta(instance: &Instance) -> Result<SpeedSet> {
    check(instance)?;
    Ok(SpeedSet::from_omega(
        &instance.omega(),
        &int(1),
        total_volume(instance)?.max(1),
    ))
}

/// Admissible `(start, energy)` pairs of one job for one end time.
type Runs = Rc<Vec<(u16, Scalar)>>;

/// Memoised evaluator of the recursion.
pub struct AgreeableDp<'a> {
    instance: &'a Instance,
    phi: TimeGrid,
    delta: SpeedSet,
    /// Instance indices in scan order.
    order: Vec<usize>,
    release: Vec<u16>,
    deadline: Vec<u16>,
    /// `(position, end)` → admissible `(start, energy)` pairs.
    runs: HashMap<(usize, u16), Runs>,
    memo: HashMap<AgStateKey, Rc<Vec<Cost>>>,
    state_limit: usize,
}

impl<'a> AgreeableDp<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self> {
        check(instance)?;
        if instance.machines() > MAX_MACHINES {
            return Err(Error::TooLarge(format!(
                "{} machines, the exact solver handles at most {MAX_MACHINES}",
                instance.machines()
            )));
        }
        let phi = build_phi(instance)?;
        if phi.len() >= u16::MAX as usize {
            return Err(Error::TooLarge(format!("time grid of {} points", phi.len())));
        }
        let delta = build_delta(instance)?;
        let mut order: Vec<usize> = (0..instance.len()).collect();
        order.sort_by(|&x, &y| {
            let (a, b) = (instance.job(x), instance.job(y));
            (&a.deadline, &a.release, x).cmp(&(&b.deadline, &b.release, y))
        });
        let index = |t: &Scalar| phi.index_of(t).expect("release dates and deadlines lie on the grid") as u16;
        let release = order.iter().map(|&j| index(&instance.job(j).release)).collect();
        let deadline = order.iter().map(|&j| index(&instance.job(j).deadline)).collect();
        Ok(Self {
            instance,
            phi,
            delta,
            order,
            release,
            deadline,
            runs: HashMap::new(),
            memo: HashMap::new(),
            state_limit: DEFAULT_STATE_LIMIT,
        })
    }

    pub fn with_state_limit(mut self, limit: usize) -> Self {
        self.state_limit = limit;
        self
    }

    pub fn phi(&self) -> &TimeGrid {
        &self.phi
    }

    pub fn states(&self) -> usize {
        self.memo.len()
    }

    /// Instance index of the job at scan position `position`.
    pub fn job_at(&self, position: usize) -> usize {
        self.order[position]
    }

    /// Every machine open until the last deadline.
    pub fn root_key(&self) -> AgStateKey {
        let mut b = [0; MAX_MACHINES];
        b[..self.instance.machines()].fill((self.phi.len() - 1) as u16);
        AgStateKey {
            k: self.instance.len(),
            b,
        }
    }

    fn volume(&self, position: usize) -> &Scalar {
        self.instance
            .job(self.order[position])
            .uniform_volume()
            .expect("checked identical machines")
    }

    fn weight(&self, position: usize) -> usize {
        self.instance.job(self.order[position]).weight as usize
    }

    /// Predecessor bounds of `b` when job `k` (1-based scan position) runs at speed
    /// `s` as the last job of some machine `h`: `a_h = min(b_h, d_k) - p_k / s`,
    /// kept when `a_h >= r_k` and `a_h` lies on the grid; other machines keep `b_i`.
    pub fn prec(&self, k: usize, b: &[Scalar], s: &Scalar) -> Vec<(Vec<Scalar>, usize)> {
        let position = k - 1;
        let job = self.instance.job(self.order[position]);
        let mut out = Vec::new();
        if !s.is_positive() {
            return out;
        }
        for h in 0..b.len() {
            let end = if b[h] < job.deadline { &b[h] } else { &job.deadline };
            let start = end - self.volume(position) / s;
            if start >= job.release && self.phi.contains(&start) {
                let mut a = b.to_vec();
                a[h] = start;
                out.push((a, h));
            }
        }
        out
    }

    /// Admissible starts for job `position` ending at `end`.
    fn runs_ending(&mut self, position: usize, end: u16) -> Runs {
        if let Some(hit) = self.runs.get(&(position, end)) {
            return Rc::clone(hit);
        }
        let volume = self.volume(position).clone();
        let power = self.instance.power();
        let stop = self.phi.get(end as usize).clone();
        let list: Vec<(u16, Scalar)> = (self.release[position]..end)
            .filter_map(|a| {
                let duration = &stop - self.phi.get(a as usize);
                self.delta
                    .contains(&(&volume / &duration))
                    .then(|| (a, power.run_energy(&volume, &duration)))
            })
            .collect();
        let list = Rc::new(list);
        self.runs.insert((position, end), Rc::clone(&list));
        list
    }

    /// Clips bounds past the last relevant deadline; identical machines are sorted.
    fn canonical(&self, key: &AgStateKey) -> AgStateKey {
        let m = self.instance.machines();
        let mut out = *key;
        if out.k > 0 {
            let horizon = self.deadline[out.k - 1];
            for b in &mut out.b[..m] {
                *b = (*b).min(horizon);
            }
        }
        out.b[..m].sort_unstable();
        out
    }

    /// Exact-weight energy table: entry `w` is the least energy of a schedule of
    /// jobs among the first `k` with total weight exactly `w`.
    pub fn table(&mut self, key: &AgStateKey) -> Result<Rc<Vec<Cost>>> {
        if key.k == 0 {
            return Ok(Rc::new(vec![Some(scalar::zero())]));
        }
        let canon = self.canonical(key);
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

    /// `F_k(b, w)`: least energy with total weight at least `w`.
    pub fn fk(&mut self, key: &AgStateKey, w: u64) -> Result<Cost> {
        let table = self.table(key)?;
        let mut best: Cost = None;
        for c in table.iter().skip(w as usize).flatten() {
            relax(&mut best, c.clone());
        }
        Ok(best)
    }

    fn compute(&mut self, key: &AgStateKey) -> Result<Vec<Cost>> {
        let position = key.k - 1;
        let weight = self.weight(position);
        let skip = self.table(&AgStateKey { k: position, b: key.b })?;
        let mut out: Vec<Cost> = skip.as_ref().clone();
        out.resize(skip.len() + weight, None);
        for h in 0..self.instance.machines() {
            if h > 0 && key.b[h] == key.b[h - 1] {
                continue;
            }
            let end = key.b[h].min(self.deadline[position]);
            for (start, cost) in self.runs_ending(position, end).iter() {
                let mut b = key.b;
                b[h] = *start;
                let before = self.table(&AgStateKey { k: position, b })?;
                for (w, c) in before.iter().enumerate() {
                    if let Some(c) = c {
                        relax(&mut out[w + weight], c + cost);
                    }
                }
            }
        }
        Ok(out)
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
        Ok(self.table(&root)?.as_ref().clone())
    }

    /// Plan attaining exact weight `w` in the state.
    pub fn reconstruct(&mut self, key: &AgStateKey, w: usize, plan: &mut SchedulePlan) -> Result<()> {
        if key.k == 0 {
            return if w == 0 {
                Ok(())
            } else {
                Err(Error::Invariant(
                    "reconstruction ran out of jobs with weight left".into(),
                ))
            };
        }
        let target = self.table(key)?.get(w).cloned().flatten();
        let Some(target) = target else {
            return Err(Error::Invariant(format!("no schedule of weight {w} to reconstruct")));
        };
        let position = key.k - 1;
        let skip = AgStateKey { k: position, b: key.b };
        if self.table(&skip)?.get(w).cloned().flatten().as_ref() == Some(&target) {
            return self.reconstruct(&skip, w, plan);
        }
        let weight = self.weight(position);
        if w >= weight {
            for h in 0..self.instance.machines() {
                let end = key.b[h].min(self.deadline[position]);
                for (start, cost) in self.runs_ending(position, end).iter() {
                    let mut b = key.b;
                    b[h] = *start;
                    let before = AgStateKey { k: position, b };
                    if self
                        .table(&before)?
                        .get(w - weight)
                        .cloned()
                        .flatten()
                        .map(|c| c + cost)
                        .as_ref()
                        == Some(&target)
                    {
                        let (s, e) = (
                            self.phi.get(*start as usize).clone(),
                            self.phi.get(end as usize).clone(),
                        );
                        let speed = self.volume(position) / (&e - &s);
                        plan.push(h, Slice::new(self.order[position], s, e, speed));
                        return self.reconstruct(&before, w - weight, plan);
                    }
                }
            }
        }
        Err(Error::Invariant(format!(
            "no choice attains the stored energy {}",
            Show(&target)
        )))
    }
}

/// Maximum total weight schedulable non-preemptively within `budget`, with a plan.
/// The bound vector `(d_n, ..., d_n)` dominates every other admissible one, so the
/// answer is read there.
pub fn solve_agreeable(instance: &Instance, budget: &Scalar) -> Result<DpOutcome> {
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
    AgreeableDp::new(instance)?.solve(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{energy_of, validate_plan, Job, PowerModel};
    use crate::scalar::ratio;

    fn instance(machines: usize, jobs: &[(i64, i64, i64, u64)], alpha: u32) -> Instance {
        Instance::new(
            machines,
            jobs.iter()
                .map(|&(r, d, p, w)| Job::identical(int(r), int(d), w, int(p), machines))
                .collect(),
            PowerModel::new(alpha).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn prec_cases() {
        let one = instance(1, &[(1, 3, 1, 1)], 3);
        let dp = AgreeableDp::new(&one).unwrap();
        assert_eq!(dp.prec(1, &[int(3)], &ratio(1, 2)), vec![(vec![int(1)], 0)]);
        assert!(dp.prec(1, &[int(3)], &ratio(1, 4)).is_empty());

        let two = instance(2, &[(2, 5, 1, 1), (0, 3, 2, 1)], 3);
        let dp = AgreeableDp::new(&two).unwrap();
        assert_eq!(two.job(dp.job_at(0)).deadline, int(3));
        assert_eq!(
            dp.prec(1, &[int(3), int(5)], &int(1)),
            vec![(vec![int(1), int(5)], 0), (vec![int(3), int(1)], 1)]
        );
    }

    #[test]
    fn base_cases() {
        let inst = instance(1, &[(0, 2, 1, 1)], 3);
        let mut dp = AgreeableDp::new(&inst).unwrap();
        let empty = AgStateKey { k: 0, ..dp.root_key() };
        assert_eq!(dp.fk(&empty, 0).unwrap(), Some(int(0)));
        assert_eq!(dp.fk(&empty, 1).unwrap(), None);
        let root = dp.root_key();
        assert_eq!(dp.fk(&root, 1).unwrap(), Some(ratio(1, 4)));
    }

    #[test]
    fn single_job_budget() {
        let inst = instance(1, &[(0, 2, 1, 1)], 3);
        let out = solve_agreeable(&inst, &ratio(1, 4)).unwrap();
        assert_eq!(out.weight, 1);
        assert_eq!(out.plan.machines[0], vec![Slice::new(0, int(0), int(2), ratio(1, 2))]);
        let none = solve_agreeable(&inst, &ratio(1, 5)).unwrap();
        assert_eq!(none.weight, 0);
        assert!(none.plan.is_empty());
    }

    #[test]
    fn knapsack_pair() {
        // speeds 1 and 1/2 cost 1 + 1/4
        let inst = instance(1, &[(0, 1, 1, 1), (1, 3, 1, 2)], 3);
        assert_eq!(solve_agreeable(&inst, &ratio(9, 8)).unwrap().weight, 2);
        let both = solve_agreeable(&inst, &ratio(5, 4)).unwrap();
        assert_eq!(both.weight, 3);
        assert_eq!(energy_of(&both.plan, inst.power()).unwrap(), ratio(5, 4));
        assert!(validate_plan(&inst, &both.plan).is_empty());
    }

    #[test]
    fn two_machines() {
        let inst = instance(2, &[(0, 2, 2, 1), (0, 2, 2, 1), (1, 3, 1, 1)], 2);
        let out = solve_agreeable(&inst, &int(100)).unwrap();
        assert_eq!(out.weight, 3);
        assert!(validate_plan(&inst, &out.plan).is_empty());
        assert_eq!(energy_of(&out.plan, inst.power()).unwrap(), out.energy);
    }

    #[test]
    fn rejects_crossing_windows() {
        let inst = instance(1, &[(0, 5, 1, 1), (1, 3, 1, 1)], 2);
        assert!(matches!(solve_agreeable(&inst, &int(1)), Err(Error::WrongSolver(_))));
        assert!(matches!(
            solve_agreeable(&inst, &int(-1)),
            Err(Error::NegativeBudget(_))
        ));
    }
}
