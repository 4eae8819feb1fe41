//! Energy minimisation under a throughput demand on unrelated machines.
//!
//! The algorithm keeps one speed profile per machine. Each round it tentatively
//! water-fills every unselected job into every machine, takes the marginal power
//! `lambda = P'(level)` of that fill, and raises the dual variable of the current
//! selected set until some job's knapsack-cover price reaches `p_ij * lambda_ij`.
//! That job is committed to that machine with its fill, and the loop repeats until
//! the selected weight meets the demand. Each machine then runs its jobs earliest
//! deadline first at the accumulated profile.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{energy_of, Instance, SchedulePlan, Slice};
use crate::profile::{Fill, StepFunction};
use crate::scalar::{self, int, Scalar, Show};

/// Relative slack used when alpha is not an integer and powers are rounded.
const FLOAT_TOLERANCE: f64 = 1e-9;

/// Dual bookkeeping. Only the chain of selected sets `T_0 ⊂ T_1 ⊂ ...` ever has a
/// positive `beta`; chain set `k` is `order[..k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub demand: Scalar,
    pub order: Vec<usize>,
    /// `beta[k]` belongs to chain set `order[..k]`.
    pub beta: Vec<Scalar>,
    /// Set when the job is selected (`p_ij * lambda_ij` of the winning pair).
    pub gamma: Vec<Option<Scalar>>,
    /// `sum over chain sets S not containing j of w_j^S * beta_S`.
    pub price: Vec<Scalar>,
}

impl DualState {
    pub fn new(jobs: usize, demand: Scalar) -> Self {
        Self {
            demand,
            order: Vec::new(),
            beta: Vec::new(),
            gamma: vec![None; jobs],
            price: vec![Scalar::zero(); jobs],
        }
    }

    pub fn is_selected(&self, job: usize) -> bool {
        self.gamma[job].is_some()
    }

    /// Weight of chain set `order[..k]`.
    pub fn chain_weight(&self, instance: &Instance, k: usize) -> u64 {
        self.order[..k].iter().map(|&j| instance.job(j).weight).sum()
    }

    pub fn selected_weight(&self, instance: &Instance) -> u64 {
        self.chain_weight(instance, self.order.len())
    }

    /// `w_j^S = min(w_j, W - w(S))`.
    pub fn truncated_weight(&self, weight: u64, set_weight: u64) -> Scalar {
        let residual = &self.demand - int(set_weight as i64);
        let w = int(weight as i64);
        if w < residual {
            w
        } else {
            residual
        }
    }

    /// `sum_S (W - w(S)) beta_S` over the chain.
    pub fn knapsack_mass(&self, instance: &Instance) -> Scalar {
        self.beta
            .iter()
            .enumerate()
            .map(|(k, b)| (&self.demand - int(self.chain_weight(instance, k) as i64)) * b)
            .fold(Scalar::zero(), |acc, x| acc + x)
    }

    /// Recomputes every price from the chain and `beta`.
    pub fn recompute_prices(&mut self, instance: &Instance) {
        let mut prices = vec![Scalar::zero(); instance.len()];
        for (k, beta) in self.beta.iter().enumerate() {
            let set_weight = self.chain_weight(instance, k);
            let members = &self.order[..k];
            for (j, price) in prices.iter_mut().enumerate() {
                if !members.contains(&j) {
                    *price += self.truncated_weight(instance.job(j).weight, set_weight) * beta;
                }
            }
        }
        self.price = prices;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEntry {
    pub lambda: Scalar,
    pub fill: Fill,
}

/// Marginal prices of every live (machine, job) pair for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    entries: Vec<Vec<Option<LambdaEntry>>>,
}

impl LambdaTable {
    pub fn get(&self, machine: usize, job: usize) -> Option<&Scalar> {
        self.entry(machine, job).map(|e| &e.lambda)
    }

    pub fn entry(&self, machine: usize, job: usize) -> Option<&LambdaEntry> {
        self.entries.get(machine)?.get(job)?.as_ref()
    }

    /// `[machine][job]` lambdas, `None` for selected or unassignable pairs.
    pub fn values(&self) -> Vec<Vec<Option<Scalar>>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.as_ref().map(|x| x.lambda.clone())).collect())
            .collect()
    }
}

/// Tentative fills of every unselected job on every machine; profiles are untouched.
pub fn lambda_table(instance: &Instance, profiles: &[StepFunction], selected: &[bool]) -> Result<LambdaTable> {
    let power = instance.power();
    let mut entries = Vec::with_capacity(instance.machines());
    for (machine, profile) in profiles.iter().enumerate() {
        let mut row = Vec::with_capacity(instance.len());
        for (j, job) in instance.jobs().iter().enumerate() {
            let entry = match (selected[j], job.volume(machine)) {
                (false, Some(volume)) => {
                    let fill = profile.fill(&job.release, &job.deadline, volume)?;
                    Some(LambdaEntry {
                        lambda: power.derivative(&fill.level),
                        fill,
                    })
                }
                _ => None,
            };
            row.push(entry);
        }
        entries.push(row);
    }
    Ok(LambdaTable { entries })
}

/// One iteration of the main loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub lambda: Vec<Vec<Option<Scalar>>>,
    pub machine: usize,
    pub job: usize,
    pub raise: Scalar,
}

/// Stepwise driver; [`solve`] runs it to completion.
#[derive(Debug, Clone)]
pub struct PrimalDual<'a> {
    instance: &'a Instance,
    state: DualState,
    profiles: Vec<StepFunction>,
    assignment: Vec<Option<usize>>,
    deltas: Vec<Option<StepFunction>>,
    rounds: Vec<Round>,
}

impl<'a> PrimalDual<'a> {
    pub fn new(instance: &'a Instance, demand: Scalar) -> Result<Self> {
        if demand.is_negative() {
            return Err(Error::DemandInfeasible {
                demand: Show(&demand).to_string(),
                total: instance.total_weight(),
            });
        }
        if demand > int(instance.total_weight() as i64) {
            return Err(Error::DemandInfeasible {
                demand: Show(&demand).to_string(),
                total: instance.total_weight(),
            });
        }
        let n = instance.len();
        Ok(Self {
            instance,
            state: DualState::new(n, demand),
            profiles: vec![StepFunction::zero(); instance.machines()],
            assignment: vec![None; n],
            deltas: vec![None; n],
            rounds: Vec::new(),
        })
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn profiles(&self) -> &[StepFunction] {
        &self.profiles
    }

    pub fn is_done(&self) -> bool {
        int(self.state.selected_weight(self.instance) as i64) >= self.state.demand
    }

    pub fn lambda_table(&self) -> Result<LambdaTable> {
        let selected: Vec<bool> = (0..self.instance.len()).map(|j| self.state.is_selected(j)).collect();
        lambda_table(self.instance, &self.profiles, &selected)
    }

    /// Raises `beta` of the current selected set to the first tight pair and commits it.
    /// Ties go to the lowest machine index, then the lowest job index.
    pub fn run_round(&mut self) -> Result<Round> {
        let instance = self.instance;
        let table = self.lambda_table()?;
        let set_weight = self.state.selected_weight(instance);
        let mut best: Option<(Scalar, usize, usize)> = None;
        for machine in 0..instance.machines() {
            for (j, job) in instance.jobs().iter().enumerate() {
                let Some(entry) = table.entry(machine, j) else { continue };
                let volume = job.volume(machine).expect("live pair has a volume");
                let slack = volume * &entry.lambda - &self.state.price[j];
                let raise = slack / self.state.truncated_weight(job.weight, set_weight);
                if best.as_ref().is_none_or(|(b, _, _)| raise < *b) {
                    best = Some((raise, machine, j));
                }
            }
        }
        let Some((mut raise, machine, job)) = best else {
            return Err(Error::DemandInfeasible {
                demand: Show(&self.state.demand).to_string(),
                total: set_weight,
            });
        };
        if raise.is_negative() {
            if instance.power().is_exact() {
                return Err(Error::Invariant(format!("negative dual raise {}", Show(&raise))));
            }
            raise = Scalar::zero();
        }

        for (j, other) in instance.jobs().iter().enumerate() {
            if !self.state.is_selected(j) {
                let share = self.state.truncated_weight(other.weight, set_weight) * &raise;
                self.state.price[j] += share;
            }
        }
        self.state.beta.push(raise.clone());

        let entry = table.entry(machine, job).expect("winner is live").clone();
        let volume = instance.job(job).volume(machine).expect("live pair");
        self.profiles[machine] = self.profiles[machine].add(&entry.fill.delta);
        self.assignment[job] = Some(machine);
        self.deltas[job] = Some(entry.fill.delta);
        self.state.gamma[job] = Some(volume * &entry.lambda);
        self.state.order.push(job);

        let round = Round {
            lambda: table.values(),
            machine,
            job,
            raise,
        };
        self.rounds.push(round.clone());
        Ok(round)
    }

    pub fn finish(self) -> Result<PdSolution> {
        let plan = build_edf_plan(self.instance, &self.assignment, &self.profiles)?;
        let power = self.instance.power();
        let profile_energy = self
            .profiles
            .iter()
            .map(|p| p.integral_with(|v| power.power(v)))
            .fold(Scalar::zero(), |acc, e| acc + e);
        let energy = energy_of(&plan, power)?;
        if power.is_exact() && energy != profile_energy {
            return Err(Error::Invariant(format!(
                "plan energy {} differs from profile energy {}",
                Show(&energy),
                Show(&profile_energy)
            )));
        }
        Ok(PdSolution {
            state: self.state,
            assignment: self.assignment,
            deltas: self.deltas,
            profiles: self.profiles,
            plan,
            energy: profile_energy,
            rounds: self.rounds,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdSolution {
    pub state: DualState,
    /// Machine of each selected job.
    pub assignment: Vec<Option<usize>>,
    /// Fill added by each selected job (absent when rebuilt from a certificate).
    pub deltas: Vec<Option<StepFunction>>,
    /// Final machine speed profiles `s_i(t)`.
    pub profiles: Vec<StepFunction>,
    pub plan: SchedulePlan,
    /// `sum_i ∫ P(s_i(t)) dt`.
    pub energy: Scalar,
    pub rounds: Vec<Round>,
}

impl PdSolution {
    /// Selected jobs in selection order.
    pub fn selected(&self) -> &[usize] {
        &self.state.order
    }

    pub fn throughput(&self, instance: &Instance) -> u64 {
        self.state.selected_weight(instance)
    }

    /// Rebuilds a solution from a stored plan and its dual certificate.
    pub fn from_certificate(
        instance: &Instance,
        demand: Scalar,
        plan: SchedulePlan,
        order: Vec<usize>,
        beta: Vec<Scalar>,
        gamma: Vec<Option<Scalar>>,
    ) -> Result<Self> {
        let n = instance.len();
        if gamma.len() != n || beta.len() != order.len() || order.iter().any(|&j| j >= n) {
            return Err(Error::Format("certificate does not match the instance".into()));
        }
        let mut assignment = vec![None; n];
        let mut profiles = Vec::with_capacity(instance.machines());
        for (machine, slices) in plan.machines.iter().enumerate() {
            let mut profile = StepFunction::zero();
            for s in slices {
                assignment[s.job] = Some(machine);
                profile = profile.add(&StepFunction::constant(
                    s.start.clone(),
                    s.end.clone(),
                    s.speed.clone(),
                )?);
            }
            profiles.push(profile);
        }
        let mut state = DualState {
            demand,
            order,
            beta,
            gamma,
            price: Vec::new(),
        };
        state.recompute_prices(instance);
        let power = instance.power();
        let energy = profiles
            .iter()
            .map(|p| p.integral_with(|v| power.power(v)))
            .fold(Scalar::zero(), |acc, e| acc + e);
        Ok(Self {
            state,
            assignment,
            deltas: vec![None; n],
            profiles,
            plan,
            energy,
            rounds: Vec::new(),
        })
    }
}

/// Runs the primal-dual loop until the selected weight reaches `demand`.
pub fn solve(instance: &Instance, demand: &Scalar) -> Result<PdSolution> {
    let mut engine = PrimalDual::new(instance, demand.clone())?;
    while !engine.is_done() {
        engine.run_round()?;
    }
    engine.finish()
}

/// Preemptive EDF on each machine at its speed profile. Every assigned job must
/// complete inside its window; a miss is reported as an invariant failure.
pub fn build_edf_plan(
    instance: &Instance,
    assignment: &[Option<usize>],
    profiles: &[StepFunction],
) -> Result<SchedulePlan> {
    let mut plan = SchedulePlan::empty(instance.machines());
    for (machine, profile) in profiles.iter().enumerate() {
        let jobs: Vec<usize> = (0..instance.len())
            .filter(|&j| assignment[j] == Some(machine))
            .collect();
        if jobs.is_empty() {
            continue;
        }
        let mut remaining: Vec<Scalar> = jobs
            .iter()
            .map(|&j| {
                instance.job(j).volume(machine).cloned().ok_or_else(|| {
                    Error::Invariant(format!(
                        "job {} assigned to machine {machine} without volume",
                        instance.job(j).id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mut events: Vec<Scalar> = profile.breakpoints().to_vec();
        events.extend(jobs.iter().map(|&j| instance.job(j).release.clone()));
        events.sort();
        events.dedup();

        let slices = &mut plan.machines[machine];
        for seg in events.windows(2) {
            let speed = profile.value_at(&seg[0]);
            if speed.is_zero() {
                continue;
            }
            let mut now = seg[0].clone();
            while now < seg[1] {
                let pick = (0..jobs.len())
                    .filter(|&x| remaining[x].is_positive() && instance.job(jobs[x]).release <= now)
                    .min_by(|&x, &y| instance.job(jobs[x]).deadline.cmp(&instance.job(jobs[y]).deadline));
                let Some(x) = pick else { break };
                let finish = &now + &remaining[x] / &speed;
                let end = if finish < seg[1] { finish } else { seg[1].clone() };
                remaining[x] -= (&end - &now) * &speed;
                match slices.last_mut() {
                    Some(last) if last.job == jobs[x] && last.end == now && last.speed == speed => {
                        last.end = end.clone();
                    }
                    _ => slices.push(Slice::new(jobs[x], now.clone(), end.clone(), speed.clone())),
                }
                now = end;
            }
        }
        for (x, &j) in jobs.iter().enumerate() {
            if remaining[x].is_positive() {
                return Err(Error::Invariant(format!(
                    "EDF left {} of job {} unfinished on machine {machine}",
                    Show(&remaining[x]),
                    instance.job(j).id
                )));
            }
        }
        if let Some(late) = slices.iter().find(|s| s.end > instance.job(s.job).deadline) {
            return Err(Error::Invariant(format!(
                "EDF misses the deadline of job {} on machine {machine}",
                instance.job(late.job).id
            )));
        }
    }
    Ok(plan)
}

fn approx_le(lhs: &Scalar, rhs: &Scalar, exact: bool) -> bool {
    if exact || lhs <= rhs {
        return lhs <= rhs;
    }
    let (l, r) = (scalar::to_f64(lhs), scalar::to_f64(rhs));
    l - r <= FLOAT_TOLERANCE * l.abs().max(r.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualViolation {
    NegativeBeta {
        index: usize,
    },
    /// `lambda_ij` exceeds `P'` of the raised profile somewhere in the window.
    MarginalPrice {
        machine: usize,
        job: usize,
    },
    /// `sum w_j^S beta_S > gamma_j + lambda_ij p_ij`.
    Covering {
        machine: usize,
        job: usize,
        price: Scalar,
        bound: Scalar,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualReport {
    pub violations: Vec<DualViolation>,
    /// Number of (machine, job) pairs checked.
    pub pairs: usize,
}

impl DualReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the dual constraints using, for every pair, the water-fill level of the job
/// on the final machine profile as the `lambda` witness. The marginal-price
/// constraint is evaluated on the profile raised by that tentative fill, which is
/// the profile the algorithm reads `lambda` from.
pub fn verify_dual(instance: &Instance, solution: &PdSolution) -> Result<DualReport> {
    let power = instance.power();
    let exact = power.is_exact();
    let state = &solution.state;
    let mut report = DualReport::default();
    for (index, b) in state.beta.iter().enumerate() {
        if b.is_negative() {
            report.violations.push(DualViolation::NegativeBeta { index });
        }
    }
    for (machine, profile) in solution.profiles.iter().enumerate() {
        for (j, job) in instance.jobs().iter().enumerate() {
            let Some(volume) = job.volume(machine) else { continue };
            report.pairs += 1;
            let fill = profile.fill(&job.release, &job.deadline, volume)?;
            let lambda = power.derivative(&fill.level);
            let raised_min = profile.add(&fill.delta).window_min(&job.release, &job.deadline)?;
            if !approx_le(&lambda, &power.derivative(&raised_min), exact) {
                report.violations.push(DualViolation::MarginalPrice { machine, job: j });
            }
            let gamma = state.gamma[j].clone().unwrap_or_else(Scalar::zero);
            let bound = gamma + &lambda * volume;
            if !approx_le(&state.price[j], &bound, exact) {
                report.violations.push(DualViolation::Covering {
                    machine,
                    job: j,
                    price: state.price[j].clone(),
                    bound,
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub lhs: Scalar,
    pub rhs: Scalar,
    /// `lhs <= rhs` (within tolerance in floating mode).
    pub holds: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GuaranteeReport {
    pub checks: Vec<Check>,
}

impl GuaranteeReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// Evaluates the inequalities behind the approximation guarantee with the solution's
/// own dual values:
///
/// * `sum_j gamma_j <= 2 sum_S beta_S (W - w(S))`;
/// * per machine, `sum_{j on i} gamma_j >= ∫ P(s_i)`;
/// * `(2 Gamma + 2) sum_S beta_S (W - w(S)) + sum_i ∫ Q(s_i) - sum_j gamma_j >= sum_i ∫ P(s_i)`.
pub fn guarantee_report(instance: &Instance, solution: &PdSolution) -> GuaranteeReport {
    let power = instance.power();
    let exact = power.is_exact();
    let state = &solution.state;
    let mass = state.knapsack_mass(instance);
    let gammas: Vec<Scalar> = state
        .gamma
        .iter()
        .map(|g| g.clone().unwrap_or_else(Scalar::zero))
        .collect();
    let sum_gamma = gammas.iter().fold(Scalar::zero(), |acc, g| acc + g);
    let mut report = GuaranteeReport::default();
    let mut push = |name: String, lhs: Scalar, rhs: Scalar| {
        let holds = approx_le(&lhs, &rhs, exact);
        report.checks.push(Check { name, lhs, rhs, holds });
    };

    push(
        "assigned prices vs knapsack mass".into(),
        sum_gamma.clone(),
        int(2) * &mass,
    );

    let mut total_energy = Scalar::zero();
    let mut total_q = Scalar::zero();
    for (machine, profile) in solution.profiles.iter().enumerate() {
        let energy = profile.integral_with(|v| power.power(v));
        let on_machine = (0..instance.len())
            .filter(|&j| solution.assignment[j] == Some(machine))
            .fold(Scalar::zero(), |acc, j| acc + &gammas[j]);
        push(
            format!("machine {machine} energy vs prices"),
            energy.clone(),
            on_machine,
        );
        total_q += profile.integral_with(|v| power.q(v));
        total_energy += energy;
    }

    let factor = int(2) * power.gamma() + int(2);
    let dual_side = factor * &mass + total_q - &sum_gamma;
    push(
        "energy vs scaled dual objective".into(),
        total_energy.clone(),
        dual_side,
    );

    if let Ok(plan_energy) = energy_of(&solution.plan, power) {
        let equal = plan_energy == total_energy;
        report.checks.push(Check {
            name: "plan energy equals profile energy".into(),
            lhs: plan_energy,
            rhs: total_energy,
            holds: equal || !exact,
        });
    }
    report
}
