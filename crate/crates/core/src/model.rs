//! Domain types shared by every solver: power model, jobs, instances and
//! schedule plans, plus energy accounting and plan validation.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar, Show};

/// Exponent of the power function `P(z) = z^alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Integer(u32),
    /// Only reachable through the floating mode; powers are rounded through `f64`.
    Real(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    exponent: Exponent,
}

impl PowerModel {
    pub fn new(alpha: u32) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidInstance("alpha must be at least 1".into()));
        }
        Ok(Self {
            exponent: Exponent::Integer(alpha),
        })
    }

    pub fn real(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidInstance(format!(
                "alpha must be a finite number >= 1, got {alpha}"
            )));
        }
        if alpha.fract() == 0.0 && alpha <= u32::MAX as f64 {
            return Self::new(alpha as u32);
        }
        Ok(Self {
            exponent: Exponent::Real(alpha),
        })
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    /// True when every quantity this model produces is an exact rational.
    pub fn is_exact(&self) -> bool {
        matches!(self.exponent, Exponent::Integer(_))
    }

    pub fn alpha(&self) -> Scalar {
        match self.exponent {
            Exponent::Integer(a) => scalar::int(a as i64),
            Exponent::Real(a) => scalar::from_f64(a).expect("finite alpha"),
        }
    }

    /// `P(z) = z^alpha`.
    pub fn power(&self, z: &Scalar) -> Scalar {
        match self.exponent {
            Exponent::Integer(a) => scalar::powi(z, a),
            Exponent::Real(a) => real_pow(z, a),
        }
    }

    /// `P'(z) = alpha * z^(alpha - 1)`.
    pub fn derivative(&self, z: &Scalar) -> Scalar {
        match self.exponent {
            Exponent::Integer(a) => scalar::int(a as i64) * scalar::powi(z, a - 1),
            Exponent::Real(a) => self.alpha() * real_pow(z, a - 1.0),
        }
    }

    /// `Q(z) = P(z) - z P'(z) = (1 - alpha) z^alpha`.
    pub fn q(&self, z: &Scalar) -> Scalar {
        (Scalar::one() - self.alpha()) * self.power(z)
    }

    /// `max z P'(z) / P(z)`, which is exactly alpha for a monomial.
    pub fn gamma(&self) -> Scalar {
        self.alpha()
    }

    /// Energy of running `volume` at constant speed over `duration`.
    pub fn run_energy(&self, volume: &Scalar, duration: &Scalar) -> Scalar {
        duration * self.power(&(volume / duration))
    }
}

fn real_pow(z: &Scalar, a: f64) -> Scalar {
    if z.is_zero() {
        return Scalar::zero();
    }
    scalar::from_f64(scalar::to_f64(z).powf(a)).unwrap_or_else(Scalar::zero)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// 1-based position in the input; stable across the deadline renaming.
    pub id: usize,
    pub release: Scalar,
    pub deadline: Scalar,
    pub weight: u64,
    /// `volumes[i]` is the work on machine `i`; `None` means the pair is not allowed.
    pub volumes: Vec<Option<Scalar>>,
}

impl Job {
    pub fn new(release: Scalar, deadline: Scalar, weight: u64, volumes: Vec<Option<Scalar>>) -> Self {
        Self {
            id: 0,
            release,
            deadline,
            weight,
            volumes,
        }
    }

    /// Same volume on each of `machines` identical machines.
    pub fn identical(release: Scalar, deadline: Scalar, weight: u64, volume: Scalar, machines: usize) -> Self {
        Self::new(release, deadline, weight, vec![Some(volume); machines])
    }

    pub fn volume(&self, machine: usize) -> Option<&Scalar> {
        self.volumes.get(machine).and_then(Option::as_ref)
    }

    /// The common volume when it does not depend on the machine.
    pub fn uniform_volume(&self) -> Option<&Scalar> {
        let first = self.volumes.first()?.as_ref()?;
        self.volumes.iter().all(|v| v.as_ref() == Some(first)).then_some(first)
    }

    pub fn window_len(&self) -> Scalar {
        &self.deadline - &self.release
    }
}

/// A scheduling instance. Jobs are kept sorted by deadline (stable on input order),
/// so index `k` in [`Instance::jobs`] is the k-th job in EDF order.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    machines: usize,
    jobs: Vec<Job>,
    power: PowerModel,
    demand: Option<u64>,
    budget: Option<Scalar>,
}

impl Instance {
    /// Validates and EDF-sorts `jobs`. Ids are reassigned from input order.
    pub fn new(machines: usize, mut jobs: Vec<Job>, power: PowerModel) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidInstance("at least one machine is required".into()));
        }
        for (pos, job) in jobs.iter_mut().enumerate() {
            job.id = pos + 1;
            let bad = |msg: String| Error::InvalidInstance(format!("job {}: {msg}", pos + 1));
            if job.release.is_negative() {
                return Err(bad(format!("negative release {}", Show(&job.release))));
            }
            if job.release >= job.deadline {
                return Err(bad(format!(
                    "release {} must be before deadline {}",
                    Show(&job.release),
                    Show(&job.deadline)
                )));
            }
            if job.weight == 0 {
                return Err(bad("weight must be positive".into()));
            }
            if job.volumes.len() != machines {
                return Err(bad(format!(
                    "{} volumes given for {} machines",
                    job.volumes.len(),
                    machines
                )));
            }
            if let Some(v) = job.volumes.iter().flatten().find(|v| !v.is_positive()) {
                return Err(bad(format!("volume {} must be positive", Show(v))));
            }
        }
        jobs.sort_by(|a, b| a.deadline.cmp(&b.deadline));
        Ok(Self {
            machines,
            jobs,
            power,
            demand: None,
            budget: None,
        })
    }

    pub fn with_demand(mut self, demand: Option<u64>) -> Self {
        self.demand = demand;
        self
    }

    pub fn with_budget(mut self, budget: Option<Scalar>) -> Self {
        self.budget = budget;
        self
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, index: usize) -> &Job {
        &self.jobs[index]
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn power(&self) -> &PowerModel {
        &self.power
    }

    pub fn demand(&self) -> Option<u64> {
        self.demand
    }

    pub fn budget(&self) -> Option<&Scalar> {
        self.budget.as_ref()
    }

    pub fn total_weight(&self) -> u64 {
        self.jobs.iter().map(|j| j.weight).sum()
    }

    /// Index of the job with the given input id.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    /// Release order and deadline order never cross: there is no pair with `r_i < r_j` and `d_i > d_j`. Ties are allowed.
    pub fn is_agreeable(&self) -> bool {
        self.jobs.iter().all(|a| {
            self.jobs
                .iter()
                .all(|b| !(a.release < b.release && a.deadline > b.deadline))
        })
    }

    /// Every job has the same volume on every machine.
    pub fn is_identical_machines(&self) -> bool {
        self.jobs.iter().all(|j| j.uniform_volume().is_some())
    }

    /// All volumes, on all machines and jobs, are one common value.
    pub fn equal_volume(&self) -> Option<&Scalar> {
        let first = self.jobs.first()?.uniform_volume()?;
        self.jobs
            .iter()
            .all(|j| j.uniform_volume() == Some(first))
            .then_some(first)
    }

    pub fn is_equal_volume(&self) -> bool {
        self.equal_volume().is_some()
    }

    /// Sorted distinct release dates and deadlines.
    pub fn omega(&self) -> Vec<Scalar> {
        let mut pts: Vec<Scalar> = self
            .jobs
            .iter()
            .flat_map(|j| [j.release.clone(), j.deadline.clone()])
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }

    /// Sub-instance restricted to the given job indices (ids preserved).
    pub fn restrict(&self, indices: &[usize]) -> Instance {
        let jobs: Vec<Job> = indices.iter().map(|&i| self.jobs[i].clone()).collect();
        let mut out = Instance {
            machines: self.machines,
            jobs,
            power: self.power,
            demand: None,
            budget: None,
        };
        out.jobs
            .sort_by(|a, b| a.deadline.cmp(&b.deadline).then(a.id.cmp(&b.id)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    /// Index into [`Instance::jobs`].
    pub job: usize,
    pub start: Scalar,
    pub end: Scalar,
    pub speed: Scalar,
}

impl Slice {
    pub fn new(job: usize, start: Scalar, end: Scalar, speed: Scalar) -> Self {
        Self { job, start, end, speed }
    }

    pub fn len(&self) -> Scalar {
        &self.end - &self.start
    }

    pub fn volume(&self) -> Scalar {
        self.len() * &self.speed
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchedulePlan {
    pub machines: Vec<Vec<Slice>>,
}

impl SchedulePlan {
    pub fn empty(machines: usize) -> Self {
        Self {
            machines: vec![Vec::new(); machines],
        }
    }

    pub fn push(&mut self, machine: usize, slice: Slice) {
        self.machines[machine].push(slice);
    }

    pub fn slices(&self) -> impl Iterator<Item = (usize, &Slice)> {
        self.machines
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |x| (i, x)))
    }

    /// Distinct jobs appearing in the plan, ascending.
    pub fn jobs(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.slices().map(|(_, s)| s.job).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_empty(&self) -> bool {
        self.machines.iter().all(Vec::is_empty)
    }

    /// Sorts each machine's slices by start time.
    pub fn normalize(&mut self) {
        for m in &mut self.machines {
            m.sort_by(|a, b| a.start.cmp(&b.start));
        }
    }
}

/// Total energy `sum (t1 - t0) P(s)`; rejects structurally malformed plans.
pub fn energy_of(plan: &SchedulePlan, power: &PowerModel) -> Result<Scalar> {
    let mut report = ValidationReport::default();
    structural_checks(plan, &mut report);
    if !report.is_empty() {
        return Err(Error::InvalidPlan(report));
    }
    Ok(plan
        .slices()
        .map(|(_, s)| s.len() * power.power(&s.speed))
        .fold(Scalar::zero(), |acc, e| acc + e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MachineCount {
        expected: usize,
        found: usize,
    },
    UnknownJob {
        machine: usize,
        job: usize,
    },
    EmptySlice {
        machine: usize,
        job: usize,
    },
    NegativeSpeed {
        machine: usize,
        job: usize,
    },
    Overlap {
        machine: usize,
        first: usize,
        second: usize,
    },
    OutsideWindow {
        machine: usize,
        job: usize,
    },
    NotAssignable {
        machine: usize,
        job: usize,
    },
    Migration {
        job: usize,
    },
    VolumeMismatch {
        job: usize,
        expected: Scalar,
        found: Scalar,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::MachineCount { .. } => "machine-count",
            Violation::UnknownJob { .. } => "unknown-job",
            Violation::EmptySlice { .. } => "empty-slice",
            Violation::NegativeSpeed { .. } => "negative-speed",
            Violation::Overlap { .. } => "overlap",
            Violation::OutsideWindow { .. } => "window",
            Violation::NotAssignable { .. } => "not-assignable",
            Violation::Migration { .. } => "migration",
            Violation::VolumeMismatch { .. } => "volume",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MachineCount { expected, found } => {
                write!(f, "machine-count: plan has {found} machines, instance {expected}")
            }
            Violation::UnknownJob { machine, job } => write!(f, "unknown-job {job} on machine {machine}"),
            Violation::EmptySlice { machine, job } => write!(f, "empty-slice of job {job} on machine {machine}"),
            Violation::NegativeSpeed { machine, job } => {
                write!(f, "negative-speed for job {job} on machine {machine}")
            }
            Violation::Overlap { machine, first, second } => {
                write!(f, "overlap of jobs {first} and {second} on machine {machine}")
            }
            Violation::OutsideWindow { machine, job } => {
                write!(f, "window: job {job} runs outside its window on machine {machine}")
            }
            Violation::NotAssignable { machine, job } => {
                write!(f, "not-assignable: job {job} has no volume on machine {machine}")
            }
            Violation::Migration { job } => write!(f, "migration of job {job}"),
            Violation::VolumeMismatch { job, expected, found } => {
                write!(f, "volume: job {job} receives {} of {}", Show(found), Show(expected))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind() == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

fn structural_checks(plan: &SchedulePlan, report: &mut ValidationReport) {
    for (machine, slices) in plan.machines.iter().enumerate() {
        for s in slices {
            if s.start >= s.end {
                report.violations.push(Violation::EmptySlice { machine, job: s.job });
            }
            if s.speed.is_negative() {
                report.violations.push(Violation::NegativeSpeed { machine, job: s.job });
            }
        }
        let mut order: Vec<&Slice> = slices.iter().collect();
        order.sort_by(|a, b| a.start.cmp(&b.start));
        for pair in order.windows(2) {
            if pair[1].start < pair[0].end {
                report.violations.push(Violation::Overlap {
                    machine,
                    first: pair[0].job,
                    second: pair[1].job,
                });
            }
        }
    }
}

/// Lists every violated feasibility condition; an empty report means the plan is feasible.
pub fn validate_plan(instance: &Instance, plan: &SchedulePlan) -> ValidationReport {
    let mut report = ValidationReport::default();
    if plan.machines.len() != instance.machines() {
        report.violations.push(Violation::MachineCount {
            expected: instance.machines(),
            found: plan.machines.len(),
        });
    }
    structural_checks(plan, &mut report);

    let mut placed: BTreeMap<usize, (Vec<usize>, Scalar)> = BTreeMap::new();
    for (machine, s) in plan.slices() {
        if s.job >= instance.len() {
            report.violations.push(Violation::UnknownJob { machine, job: s.job });
            continue;
        }
        let job = instance.job(s.job);
        if s.start < job.release || s.end > job.deadline {
            report.violations.push(Violation::OutsideWindow { machine, job: s.job });
        }
        let entry = placed.entry(s.job).or_insert_with(|| (Vec::new(), Scalar::zero()));
        if !entry.0.contains(&machine) {
            entry.0.push(machine);
        }
        entry.1 += s.volume();
    }
    for (job, (machines, volume)) in placed {
        if machines.len() > 1 {
            report.violations.push(Violation::Migration { job });
            continue;
        }
        let machine = machines[0];
        match instance.job(job).volume(machine) {
            None => report.violations.push(Violation::NotAssignable { machine, job }),
            Some(expected) if *expected != volume => report.violations.push(Violation::VolumeMismatch {
                job,
                expected: expected.clone(),
                found: volume,
            }),
            Some(_) => {}
        }
    }
    report
}

/// Total weight of the jobs completed by a valid plan.
pub fn throughput_of(instance: &Instance, plan: &SchedulePlan) -> Result<u64> {
    let report = validate_plan(instance, plan);
    if !report.is_empty() {
        return Err(Error::InvalidPlan(report));
    }
    Ok(plan.jobs().iter().map(|&j| instance.job(j).weight).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn single(release: i64, deadline: i64, weight: u64, volume: i64) -> Instance {
        Instance::new(
            1,
            vec![Job::identical(int(release), int(deadline), weight, int(volume), 1)],
            PowerModel::new(3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn energy_one_slice() {
        let mut plan = SchedulePlan::empty(1);
        plan.push(0, Slice::new(0, int(0), int(2), int(1)));
        assert_eq!(energy_of(&plan, &PowerModel::new(3).unwrap()).unwrap(), int(2));
    }

    #[test]
    fn energy_half_speed_fill() {
        let mut plan = SchedulePlan::empty(1);
        plan.push(0, Slice::new(0, int(0), int(2), ratio(1, 2)));
        assert_eq!(energy_of(&plan, &PowerModel::new(3).unwrap()).unwrap(), ratio(1, 4));
    }

    #[test]
    fn energy_empty_plan() {
        assert!(energy_of(&SchedulePlan::empty(2), &PowerModel::new(3).unwrap())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn energy_rejects_overlap() {
        let mut plan = SchedulePlan::empty(1);
        plan.push(0, Slice::new(0, int(0), int(2), int(1)));
        plan.push(0, Slice::new(1, int(1), int(3), int(1)));
        assert!(matches!(
            energy_of(&plan, &PowerModel::new(2).unwrap()),
            Err(Error::InvalidPlan(_))
        ));
    }

    #[test]
    fn power_algebra() {
        let p = PowerModel::new(3).unwrap();
        assert_eq!(p.derivative(&ratio(1, 2)), ratio(3, 4));
        assert_eq!(p.derivative(&ratio(7, 4)), ratio(147, 16));
        assert_eq!(p.q(&int(2)), int(-16));
        assert_eq!(p.gamma(), int(3));
        assert_eq!(PowerModel::new(1).unwrap().gamma(), int(1));
        assert!(PowerModel::new(0).is_err());
        assert_eq!(PowerModel::real(2.0).unwrap(), PowerModel::new(2).unwrap());
        assert!(!PowerModel::real(2.5).unwrap().is_exact());
    }

    #[test]
    fn feasible_single_job() {
        let inst = single(0, 2, 5, 1);
        let mut plan = SchedulePlan::empty(1);
        plan.push(0, Slice::new(0, int(0), int(2), ratio(1, 2)));
        assert!(validate_plan(&inst, &plan).is_empty());
        assert_eq!(throughput_of(&inst, &plan).unwrap(), 5);
        assert_eq!(throughput_of(&inst, &SchedulePlan::empty(1)).unwrap(), 0);
    }

    #[test]
    fn detects_overlap_window_and_volume() {
        let inst = Instance::new(
            1,
            vec![
                Job::identical(int(0), int(2), 1, int(1), 1),
                Job::identical(int(0), int(3), 1, int(1), 1),
            ],
            PowerModel::new(2).unwrap(),
        )
        .unwrap();
        let mut plan = SchedulePlan::empty(1);
        plan.push(0, Slice::new(0, int(0), int(2), ratio(1, 2)));
        plan.push(0, Slice::new(1, int(1), int(4), ratio(1, 2)));
        let report = validate_plan(&inst, &plan);
        assert!(report.has("overlap"));
        assert!(report.has("window"));
        assert!(report.has("volume"));
    }

    #[test]
    fn detects_migration() {
        let inst = Instance::new(
            2,
            vec![Job::identical(int(0), int(2), 1, int(2), 2)],
            PowerModel::new(2).unwrap(),
        )
        .unwrap();
        let mut plan = SchedulePlan::empty(2);
        plan.push(0, Slice::new(0, int(0), int(1), int(1)));
        plan.push(1, Slice::new(0, int(1), int(2), int(1)));
        let report = validate_plan(&inst, &plan);
        assert_eq!(report.violations, vec![Violation::Migration { job: 0 }]);
    }

    #[test]
    fn rejects_degenerate_window() {
        let err = Instance::new(
            1,
            vec![Job::identical(int(1), int(1), 1, int(1), 1)],
            PowerModel::new(2).unwrap(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn edf_renaming_is_stable() {
        let inst = Instance::new(
            1,
            vec![
                Job::identical(int(0), int(5), 1, int(1), 1),
                Job::identical(int(0), int(3), 1, int(1), 1),
                Job::identical(int(1), int(3), 1, int(1), 1),
            ],
            PowerModel::new(2).unwrap(),
        )
        .unwrap();
        let ids: Vec<usize> = inst.jobs().iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![2, 3, 1]);
        assert_eq!(inst.omega(), vec![int(0), int(1), int(3), int(5)]);
    }

    #[test]
    fn agreeable_flag() {
        let mk = |w: &[(i64, i64)]| {
            Instance::new(
                1,
                w.iter()
                    .map(|&(r, d)| Job::identical(int(r), int(d), 1, int(1), 1))
                    .collect(),
                PowerModel::new(2).unwrap(),
            )
            .unwrap()
        };
        assert!(mk(&[(0, 2), (1, 3), (1, 3)]).is_agreeable());
        assert!(mk(&[(0, 2), (0, 3), (1, 3)]).is_agreeable());
        assert!(!mk(&[(0, 5), (1, 3)]).is_agreeable());
    }
}
