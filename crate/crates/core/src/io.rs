//! File formats and instance generators.
//!
//! Instances and results are JSON documents. Rationals are written as JSON
//! integers when integral and as `"num/den"` strings otherwise, so nothing passes
//! through binary floating point.

use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{energy_of, throughput_of, validate_plan, Exponent, Instance, Job, PowerModel, SchedulePlan, Slice};
use crate::primal_dual::{verify_dual, PdSolution};
use crate::scalar::{self, int, Rat, Scalar, Show};

/// Power exponent as written in a file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Integer(u32),
    /// Accepted only in floating mode.
    Real(f64),
}

/// `p` of a job: one volume for identical machines, or one per machine where
/// `null` forbids the machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Volume {
    Identical(Rat),
    PerMachine(Vec<Option<Rat>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobEntry {
    pub r: Rat,
    pub d: Rat,
    pub w: u64,
    pub p: Volume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub alpha: Alpha,
    pub machines: usize,
    pub jobs: Vec<JobEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Rat>,
}

fn positioned(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

impl InstanceFile {
    /// Syntax check only; see [`InstanceFile::to_instance`] for validation.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(positioned)
    }

    pub fn write(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }

    /// SHA-256 of the compact encoding, hex.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_vec(self).expect("instance files always serialize");
        hex::encode(Sha256::digest(&compact))
    }

    /// Builds the validated instance. A non-integer alpha is refused unless
    /// `allow_float` is set.
    pub fn to_instance(&self, allow_float: bool) -> Result<Instance> {
        let power = match self.alpha {
            Alpha::Integer(a) => PowerModel::new(a)?,
            Alpha::Real(a) if a.fract() == 0.0 && a >= 1.0 && a <= u32::MAX as f64 => PowerModel::new(a as u32)?,
            Alpha::Real(a) if allow_float => PowerModel::real(a)?,
            Alpha::Real(a) => {
                return Err(Error::InvalidInstance(format!(
                    "alpha {a} is not an integer; exact arithmetic needs an integer exponent (use floating mode)"
                )))
            }
        };
        let jobs = self
            .jobs
            .iter()
            .enumerate()
            .map(|(pos, j)| {
                let volumes = match &j.p {
                    Volume::Identical(v) => vec![Some(v.0.clone()); self.machines],
                    Volume::PerMachine(vs) => {
                        if vs.len() != self.machines {
                            return Err(Error::InvalidInstance(format!(
                                "job {}: {} volumes given for {} machines",
                                pos + 1,
                                vs.len(),
                                self.machines
                            )));
                        }
                        vs.iter().map(|v| v.as_ref().map(|v| v.0.clone())).collect()
                    }
                };
                Ok(Job::new(j.r.0.clone(), j.d.0.clone(), j.w, volumes))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(b) = &self.budget {
            if b.0.is_negative() {
                return Err(Error::NegativeBudget(Show(&b.0).to_string()));
            }
        }
        if let Some(d) = &self.demand {
            if d.0.is_negative() {
                return Err(Error::InvalidInstance(format!("negative demand {}", Show(&d.0))));
            }
        }
        Instance::new(self.machines, jobs, power)
    }

    /// File form of an instance, jobs in input order.
    pub fn from_instance(instance: &Instance) -> Self {
        let mut jobs: Vec<&Job> = instance.jobs().iter().collect();
        jobs.sort_by_key(|j| j.id);
        let alpha = match instance.power().exponent() {
            Exponent::Integer(a) => Alpha::Integer(a),
            Exponent::Real(a) => Alpha::Real(a),
        };
        Self {
            alpha,
            machines: instance.machines(),
            jobs: jobs
                .into_iter()
                .map(|j| JobEntry {
                    r: Rat(j.release.clone()),
                    d: Rat(j.deadline.clone()),
                    w: j.weight,
                    p: match j.uniform_volume() {
                        Some(v) => Volume::Identical(Rat(v.clone())),
                        None => Volume::PerMachine(j.volumes.iter().map(|v| v.clone().map(Rat)).collect()),
                    },
                })
                .collect(),
            budget: None,
            demand: None,
        }
    }
}

/// One slice of a stored plan; `job` is the 1-based input position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceEntry {
    pub machine: usize,
    pub job: usize,
    pub start: Rat,
    pub end: Rat,
    pub speed: Rat,
}

/// Dual solution of the primal-dual routine; job references are 1-based input positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub demand: Rat,
    /// Selected jobs in selection order.
    pub order: Vec<usize>,
    /// `beta[k]` belongs to the set of the first `k` selected jobs.
    pub beta: Vec<Rat>,
    /// Indexed by input position.
    pub gamma: Vec<Option<Rat>>,
    /// Indexed by input position.
    pub price: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub solver: String,
    pub instance_digest: String,
    pub instance: InstanceFile,
    pub throughput: u64,
    /// Exact rational string.
    pub energy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Rat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    pub plan: Vec<SliceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub wall_ms: f64,
    /// Floating arithmetic was used; checks then allow a relative tolerance.
    #[serde(default)]
    pub float: bool,
}

/// Outcome of re-checking a result file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Relative tolerance for floating-mode comparisons.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

fn close(a: &Scalar, b: &Scalar, float: bool) -> bool {
    if !float {
        return a == b;
    }
    let (x, y) = (scalar::to_f64(a), scalar::to_f64(b));
    (x - y).abs() <= FLOAT_TOLERANCE * x.abs().max(y.abs()).max(1.0)
}

fn id_to_index(instance: &Instance, id: usize) -> Result<usize> {
    instance
        .index_of(id)
        .ok_or_else(|| Error::Format(format!("job {id} does not exist")))
}

impl ResultFile {
    pub fn new(solver: &str, file: &InstanceFile, instance: &Instance, plan: &SchedulePlan, energy: &Scalar) -> Self {
        let slices = plan
            .slices()
            .map(|(machine, s)| SliceEntry {
                machine,
                job: instance.job(s.job).id,
                start: Rat(s.start.clone()),
                end: Rat(s.end.clone()),
                speed: Rat(s.speed.clone()),
            })
            .collect();
        Self {
            solver: solver.to_string(),
            instance_digest: file.digest(),
            instance: file.clone(),
            throughput: throughput_of(instance, plan).unwrap_or(0),
            energy: scalar::format(energy),
            demand: None,
            budget: None,
            eps: None,
            iterations: None,
            status: None,
            plan: slices,
            certificate: None,
            wall_ms: 0.0,
            float: !instance.power().is_exact(),
        }
    }

    pub fn with_certificate(mut self, instance: &Instance, solution: &PdSolution) -> Self {
        let n = instance.len();
        let mut gamma = vec![None; n];
        let mut price = vec![Rat(scalar::zero()); n];
        for (index, job) in instance.jobs().iter().enumerate() {
            gamma[job.id - 1] = solution.state.gamma[index].clone().map(Rat);
            price[job.id - 1] = Rat(solution.state.price[index].clone());
        }
        self.certificate = Some(Certificate {
            demand: Rat(solution.state.demand.clone()),
            order: solution.state.order.iter().map(|&j| instance.job(j).id).collect(),
            beta: solution.state.beta.iter().cloned().map(Rat).collect(),
            gamma,
            price,
        });
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(positioned)
    }

    pub fn write(&self) -> String {
        serde_json::to_string_pretty(self).expect("result files always serialize")
    }

    /// Plan with job references mapped to instance indices.
    pub fn plan(&self, instance: &Instance) -> Result<SchedulePlan> {
        let mut plan = SchedulePlan::empty(instance.machines());
        for s in &self.plan {
            if s.machine >= instance.machines() {
                return Err(Error::Format(format!(
                    "slice on machine {} of {}",
                    s.machine,
                    instance.machines()
                )));
            }
            if !s.speed.0.is_positive() || s.start.0 >= s.end.0 {
                return Err(Error::Format(format!(
                    "slice of job {} is empty or has no speed",
                    s.job
                )));
            }
            let index = id_to_index(instance, s.job)?;
            plan.push(
                s.machine,
                Slice::new(index, s.start.0.clone(), s.end.0.clone(), s.speed.0.clone()),
            );
        }
        plan.normalize();
        Ok(plan)
    }

    /// Re-derives everything the file claims: digest, plan feasibility, energy,
    /// throughput and, when present, dual feasibility of the certificate.
    pub fn verify(&self) -> Result<VerifyReport> {
        let mut report = VerifyReport::default();
        if self.instance.digest() != self.instance_digest {
            report.problems.push("instance digest mismatch".into());
        }
        let instance = self.instance.to_instance(true)?;
        let plan = self.plan(&instance)?;
        let violations = validate_plan(&instance, &plan);
        if !violations.is_empty() {
            report.problems.push(format!("plan: {violations}"));
            return Ok(report);
        }
        let energy = energy_of(&plan, instance.power())?;
        let stated = scalar::parse(&self.energy).map_err(|e| Error::Format(e.to_string()))?;
        if !close(&energy, &stated, self.float) {
            report
                .problems
                .push(format!("energy {} stated, plan uses {}", self.energy, Show(&energy)));
        }
        let throughput = throughput_of(&instance, &plan)?;
        if throughput != self.throughput {
            report.problems.push(format!(
                "throughput {} stated, plan completes {throughput}",
                self.throughput
            ));
        }
        if let Some(budget) = &self.budget {
            // a budget-too-small run reports the cheapest probe, which may exceed it
            if self.status.as_deref() != Some("budget-too-small") {
                let limit = &budget.0 * (scalar::one() + or_zero(&self.eps));
                if energy > limit && !close(&energy, &limit, self.float) {
                    report
                        .problems
                        .push(format!("energy {} exceeds the allowed {}", Show(&energy), Show(&limit)));
                }
            }
        }
        if let Some(cert) = &self.certificate {
            self.verify_certificate(&instance, plan, cert, &mut report)?;
        }
        Ok(report)
    }

    fn verify_certificate(
        &self,
        instance: &Instance,
        plan: SchedulePlan,
        cert: &Certificate,
        report: &mut VerifyReport,
    ) -> Result<()> {
        let n = instance.len();
        if cert.gamma.len() != n || cert.price.len() != n {
            return Err(Error::Format("certificate does not cover every job".into()));
        }
        let order = cert
            .order
            .iter()
            .map(|&id| id_to_index(instance, id))
            .collect::<Result<Vec<_>>>()?;
        let mut gamma = vec![None; n];
        for (index, job) in instance.jobs().iter().enumerate() {
            gamma[index] = cert.gamma[job.id - 1].as_ref().map(|g| g.0.clone());
        }
        let beta = cert.beta.iter().map(|b| b.0.clone()).collect();
        let solution = PdSolution::from_certificate(instance, cert.demand.0.clone(), plan, order, beta, gamma)?;
        for (index, job) in instance.jobs().iter().enumerate() {
            if !close(&solution.state.price[index], &cert.price[job.id - 1].0, self.float) {
                report
                    .problems
                    .push(format!("price of job {} does not follow from beta", job.id));
            }
        }
        let dual = verify_dual(instance, &solution)?;
        for v in &dual.violations {
            report.problems.push(format!("dual: {v:?}"));
        }
        Ok(())
    }
}

/// One summary line per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub instance: String,
    pub solver: String,
    pub n: usize,
    pub m: usize,
    pub alpha: String,
    pub demand_or_budget: String,
    pub throughput: u64,
    pub energy: String,
    pub iterations: String,
    pub ms: String,
}

/// Instance families produced by [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Agreeable,
    EqualVolume,
    Knapsack,
    Unrelated,
}

impl FromStr for GenKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agreeable" => Ok(Self::Agreeable),
            "equal-volume" => Ok(Self::EqualVolume),
            "knapsack" => Ok(Self::Knapsack),
            "unrelated" => Ok(Self::Unrelated),
            other => Err(Error::Format(format!(
                "unknown instance kind `{other}` (expected agreeable, equal-volume, knapsack or unrelated)"
            ))),
        }
    }
}

/// Generator parameters.
///
/// Ranges: `jobs` 1..=64, `machines` 1..=16, `alpha` 1..=16, `horizon` 1..=10_000,
/// `max_volume` and `max_weight` 1..=1_000, `volume` positive. `knapsack` uses only
/// `items` (value, size) pairs with positive entries, `capacity`, `alpha` and `machines`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub jobs: usize,
    pub machines: usize,
    pub alpha: u32,
    /// Release dates and deadlines are integers in `[0, horizon]`.
    pub horizon: u64,
    pub max_volume: u64,
    pub max_weight: u64,
    /// Common volume of `equal-volume` instances.
    pub volume: Scalar,
    pub items: Vec<(u64, u64)>,
    pub capacity: Scalar,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            jobs: 6,
            machines: 1,
            alpha: 3,
            horizon: 10,
            max_volume: 3,
            max_weight: 3,
            volume: int(1),
            items: Vec::new(),
            capacity: int(0),
        }
    }
}

impl GenParams {
    fn check(&self, kind: GenKind) -> Result<()> {
        let out = |what: &str| Err(Error::Format(format!("generator parameter {what} out of range")));
        if !(1..=16).contains(&self.machines) {
            return out("machines");
        }
        if !(1..=16).contains(&self.alpha) {
            return out("alpha");
        }
        if kind == GenKind::Knapsack {
            if self.items.is_empty() || self.items.len() > 64 || self.items.iter().any(|&(v, c)| v == 0 || c == 0) {
                return out("items");
            }
            if self.capacity.is_negative() {
                return out("capacity");
            }
            return Ok(());
        }
        if !(1..=64).contains(&self.jobs) {
            return out("jobs");
        }
        if !(1..=10_000).contains(&self.horizon) {
            return out("horizon");
        }
        if !(1..=1_000).contains(&self.max_volume) {
            return out("max_volume");
        }
        if !(1..=1_000).contains(&self.max_weight) {
            return out("max_weight");
        }
        if !self.volume.is_positive() {
            return out("volume");
        }
        Ok(())
    }
}

/// Random window `[r, d]` with integer ends in `[0, horizon]`.
fn window(rng: &mut ChaCha8Rng, horizon: u64) -> (u64, u64) {
    let r = rng.gen_range(0..horizon);
    (r, rng.gen_range(r + 1..=horizon))
}

/// Deterministic instance of the given family.
pub fn generate(kind: GenKind, seed: u64, params: &GenParams) -> Result<InstanceFile> {
    params.check(kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rat = |v: u64| Rat(Scalar::from_integer(v.into()));
    let mut jobs = Vec::new();
    let mut budget = None;
    match kind {
        GenKind::Knapsack => {
            // item (value, size) becomes a unit job on a window as long as its size,
            // windows laid end to end; the energy budget is the capacity
            let mut at = 0;
            for &(value, size) in &params.items {
                jobs.push(JobEntry {
                    r: rat(at),
                    d: rat(at + size),
                    w: value,
                    p: Volume::Identical(rat(1)),
                });
                at += size;
            }
            budget = Some(Rat(params.capacity.clone()));
        }
        GenKind::Agreeable => {
            let mut windows: Vec<(u64, u64)> = (0..params.jobs).map(|_| window(&mut rng, params.horizon)).collect();
            let mut releases: Vec<u64> = windows.iter().map(|w| w.0).collect();
            let mut deadlines: Vec<u64> = windows.iter().map(|w| w.1).collect();
            releases.sort_unstable();
            deadlines.sort_unstable();
            // pairing the k-th smallest release with the k-th smallest deadline keeps
            // both orders aligned and every window non-empty
            windows = releases.into_iter().zip(deadlines).collect();
            for (r, d) in windows {
                jobs.push(JobEntry {
                    r: rat(r),
                    d: rat(d),
                    w: rng.gen_range(1..=params.max_weight),
                    p: Volume::Identical(rat(rng.gen_range(1..=params.max_volume))),
                });
            }
        }
        GenKind::EqualVolume => {
            for _ in 0..params.jobs {
                let (r, d) = window(&mut rng, params.horizon);
                jobs.push(JobEntry {
                    r: rat(r),
                    d: rat(d),
                    w: rng.gen_range(1..=params.max_weight),
                    p: Volume::Identical(Rat(params.volume.clone())),
                });
            }
        }
        GenKind::Unrelated => {
            for _ in 0..params.jobs {
                let (r, d) = window(&mut rng, params.horizon);
                let mut volumes: Vec<Option<Rat>> = (0..params.machines)
                    .map(|_| {
                        (params.machines == 1 || rng.gen_range(0..8) > 0)
                            .then(|| rat(rng.gen_range(1..=params.max_volume)))
                    })
                    .collect();
                if volumes.iter().all(Option::is_none) {
                    volumes[0] = Some(rat(rng.gen_range(1..=params.max_volume)));
                }
                jobs.push(JobEntry {
                    r: rat(r),
                    d: rat(d),
                    w: rng.gen_range(1..=params.max_weight),
                    p: Volume::PerMachine(volumes),
                });
            }
        }
    }
    Ok(InstanceFile {
        alpha: Alpha::Integer(params.alpha),
        machines: params.machines,
        jobs,
        budget,
        demand: None,
    })
}

/// Parses knapsack items written `value:size,value:size,...`.
pub fn parse_items(text: &str) -> Result<Vec<(u64, u64)>> {
    let bad = |item: &str, why: &str| Error::Format(format!("item `{item}`: {why}"));
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        let (value, size) = item.split_once(':').ok_or_else(|| bad(item, "expected value:size"))?;
        let value: u64 = value
            .trim()
            .parse()
            .map_err(|_| bad(item, "value is not a non-negative integer"))?;
        let size: u64 = size
            .trim()
            .parse()
            .map_err(|_| bad(item, "size is not a non-negative integer"))?;
        if value == 0 || size == 0 {
            return Err(bad(item, "value and size must be positive"));
        }
        out.push((value, size));
    }
    Ok(out)
}

/// Reads and validates an instance document.
pub fn read_instance(text: &str, allow_float: bool) -> Result<(InstanceFile, Instance)> {
    let file = InstanceFile::parse(text)?;
    let instance = file.to_instance(allow_float)?;
    Ok((file, instance))
}

/// Zero unless the result carries a value.
pub fn or_zero(v: &Option<Rat>) -> Scalar {
    v.as_ref().map(|r| r.0.clone()).unwrap_or_else(Scalar::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primal_dual::solve;
    use crate::scalar::ratio;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"{
  "alpha": 3,
  "machines": 2,
  "jobs": [
    {"r": 0, "d": 2, "w": 1, "p": [1, 2]},
    {"r": "1/2", "d": 3, "w": 2, "p": 3},
    {"r": 1, "d": 3, "w": 1, "p": [null, "5/2"]}
  ],
  "demand": 2
}"#;

    #[test]
    fn parses_sample() {
        let (file, inst) = read_instance(SAMPLE, false).unwrap();
        assert_eq!(inst.len(), 3);
        assert_eq!(inst.job(1).release, ratio(1, 2));
        assert_eq!(inst.job(2).volumes, vec![None, Some(ratio(5, 2))]);
        assert_eq!(file.demand, Some(Rat(int(2))));
        assert_eq!(InstanceFile::parse(&file.write()).unwrap(), file);
    }

    #[test]
    fn long_real_exponent_round_trips() {
        // a mantissa beyond the fast float path must still parse to the nearest double
        let text = r#"{"alpha": 111111111111111111111111111111111111111111111111, "machines": 1, "jobs": []}"#;
        let file = InstanceFile::parse(text).unwrap();
        assert_eq!(InstanceFile::parse(&file.write()).unwrap(), file);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match InstanceFile::parse("{\n  \"alpha\": 3,\n  \"machines\": x\n}") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 15)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            InstanceFile::parse("{\"alpha\": 3, \"machines\": 1, \"jobs\": [], \"extra\": 1}"),
            Err(Error::Parse { .. })
        ));
        // floats are refused for rationals
        assert!(
            InstanceFile::parse(r#"{"alpha": 3, "machines": 1, "jobs": [{"r": 0.5, "d": 1, "w": 1, "p": 1}]}"#)
                .is_err()
        );
    }

    #[test]
    fn semantic_errors() {
        let bad_window = r#"{"alpha": 3, "machines": 1, "jobs": [{"r": 2, "d": 1, "w": 1, "p": 1}]}"#;
        assert!(matches!(
            read_instance(bad_window, false),
            Err(Error::InvalidInstance(_))
        ));
        let wrong_len = r#"{"alpha": 3, "machines": 2, "jobs": [{"r": 0, "d": 1, "w": 1, "p": [1]}]}"#;
        assert!(matches!(
            read_instance(wrong_len, false),
            Err(Error::InvalidInstance(_))
        ));
        let real = r#"{"alpha": 2.5, "machines": 1, "jobs": [{"r": 0, "d": 1, "w": 1, "p": 1}]}"#;
        assert!(read_instance(real, false).is_err());
        assert!(!read_instance(real, true).unwrap().1.power().is_exact());
    }

    #[test]
    fn knapsack_generator() {
        let params = GenParams {
            items: parse_items("1:1,2:2").unwrap(),
            capacity: int(2),
            ..GenParams::default()
        };
        let file = generate(GenKind::Knapsack, 0, &params).unwrap();
        let got: Vec<(Scalar, Scalar, u64, Volume)> = file
            .jobs
            .iter()
            .map(|j| (j.r.0.clone(), j.d.0.clone(), j.w, j.p.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (int(0), int(1), 1, Volume::Identical(Rat(int(1)))),
                (int(1), int(3), 2, Volume::Identical(Rat(int(1)))),
            ]
        );
        assert_eq!(file.budget, Some(Rat(int(2))));
    }

    #[test]
    fn generators_are_deterministic_and_shaped() {
        let params = GenParams {
            jobs: 12,
            machines: 2,
            volume: int(2),
            ..GenParams::default()
        };
        for seed in 0..20 {
            let a = generate(GenKind::Agreeable, seed, &params).unwrap();
            assert_eq!(a, generate(GenKind::Agreeable, seed, &params).unwrap());
            let inst = a.to_instance(false).unwrap();
            assert!(inst.is_agreeable());
            let rs: Vec<&Rat> = a.jobs.iter().map(|j| &j.r).collect();
            let ds: Vec<&Rat> = a.jobs.iter().map(|j| &j.d).collect();
            assert!(rs.windows(2).all(|w| w[0] <= w[1]) && ds.windows(2).all(|w| w[0] <= w[1]));

            let e = generate(GenKind::EqualVolume, seed, &params)
                .unwrap()
                .to_instance(false)
                .unwrap();
            assert_eq!(e.equal_volume(), Some(&int(2)));
            let u = generate(GenKind::Unrelated, seed, &params)
                .unwrap()
                .to_instance(false)
                .unwrap();
            assert!(u.jobs().iter().all(|j| j.volumes.iter().any(Option::is_some)));
        }
        assert!("bogus".parse::<GenKind>().is_err());
        let bad = GenParams {
            jobs: 0,
            ..GenParams::default()
        };
        assert!(generate(GenKind::EqualVolume, 0, &bad).is_err());
    }

    #[test]
    fn items() {
        assert_eq!(parse_items(" 3:4 , 1:1").unwrap(), vec![(3, 4), (1, 1)]);
        for bad in ["", "1", "1:", "a:1", "1:0", "1:2,", "-1:2"] {
            assert!(parse_items(bad).is_err(), "{bad}");
        }
    }

    fn pd_result(file: &InstanceFile) -> ResultFile {
        let inst = file.to_instance(false).unwrap();
        let sol = solve(&inst, &int(2)).unwrap();
        let mut result =
            ResultFile::new("pd-energy", file, &inst, &sol.plan, &sol.energy).with_certificate(&inst, &sol);
        result.throughput = sol.throughput(&inst);
        result.demand = Some(Rat(int(2)));
        result
    }

    #[test]
    fn result_roundtrip_and_verify() {
        let file = InstanceFile::parse(SAMPLE).unwrap();
        let result = pd_result(&file);
        let back = ResultFile::parse(&result.write()).unwrap();
        assert_eq!(back, result);
        assert!(back.verify().unwrap().is_ok(), "{:?}", back.verify());
    }

    #[test]
    fn verify_detects_tampering() {
        let file = InstanceFile::parse(SAMPLE).unwrap();
        let base = pd_result(&file);

        let mut energy = base.clone();
        energy.energy = "1/7".into();
        assert!(!energy.verify().unwrap().is_ok());

        let mut digest = base.clone();
        digest.instance.jobs[0].w = 5;
        assert!(digest.verify().unwrap().problems.iter().any(|p| p.contains("digest")));

        let mut beta = base.clone();
        let cert = beta.certificate.as_mut().unwrap();
        for b in &mut cert.beta {
            b.0 = int(0);
        }
        assert!(!beta.verify().unwrap().is_ok());

        let mut plan = base;
        plan.plan[0].speed = Rat(&plan.plan[0].speed.0 / int(2));
        assert!(!plan.verify().unwrap().is_ok());
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (0i64..50, 1i64..7).prop_map(|(n, d)| Rat(ratio(n, d)))
    }

    fn arb_file() -> impl Strategy<Value = InstanceFile> {
        (1usize..=3, 1u32..=4).prop_flat_map(|(m, alpha)| {
            let job = (
                arb_rat(),
                arb_rat(),
                1u64..5,
                prop::bool::ANY,
                prop::collection::vec(prop::option::of(arb_rat()), m),
                arb_rat(),
            )
                .prop_map(|(r, len, w, same, vs, v)| JobEntry {
                    d: Rat(&r.0 + &len.0 + int(1)),
                    r,
                    w,
                    p: if same {
                        Volume::Identical(Rat(&v.0 + int(1)))
                    } else {
                        Volume::PerMachine(vs)
                    },
                });
            (
                prop::collection::vec(job, 0..6),
                prop::option::of(arb_rat()),
                prop::option::of(arb_rat()),
            )
                .prop_map(move |(jobs, budget, demand)| InstanceFile {
                    alpha: Alpha::Integer(alpha),
                    machines: m,
                    jobs,
                    budget,
                    demand,
                })
        })
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(file in arb_file()) {
            let text = file.write();
            prop_assert_eq!(&InstanceFile::parse(&text).unwrap(), &file);
            prop_assert_eq!(InstanceFile::parse(&text).unwrap().write(), text);
        }

        #[test]
        fn instance_survives_file_form(file in arb_file()) {
            if let Ok(inst) = file.to_instance(false) {
                let again = InstanceFile::from_instance(&inst).to_instance(false).unwrap();
                prop_assert_eq!(again, inst);
            }
        }
    }
}
