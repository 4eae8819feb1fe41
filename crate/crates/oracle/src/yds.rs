//! Minimum-energy preemptive schedule of one machine with unbounded speed.
//!
//! Repeatedly pick the interval `[t1, t2]` (a release and a deadline of the
//! remaining jobs) whose contained jobs have the largest volume per unit of
//! still-free time, run those jobs at that density on the free part of the
//! interval, and mark it used. Measuring only free time is equivalent to the
//! usual time compression.

use num_traits::{Signed, Zero};
use speedscale::model::Slice;
use speedscale::{PowerModel, Scalar};

use crate::{OracleError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct YdsJob {
    /// Caller's job index, copied into the plan slices.
    pub index: usize,
    pub release: Scalar,
    pub deadline: Scalar,
    pub volume: Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YdsSchedule {
    pub energy: Scalar,
    /// Disjoint `(start, end, speed)` pieces, sorted by start.
    pub profile: Vec<(Scalar, Scalar, Scalar)>,
    /// Earliest-deadline-first slices at the profile speeds.
    pub plan: Vec<Slice>,
}

/// Measure of `[lo, hi]` not covered by the sorted disjoint `used` intervals.
fn free_measure(used: &[(Scalar, Scalar)], lo: &Scalar, hi: &Scalar) -> Scalar {
    let mut free = hi - lo;
    for (a, b) in used {
        let (s, e) = (a.max(lo), b.min(hi));
        if s < e {
            free -= e - s;
        }
    }
    free
}

/// Free sub-intervals of `[lo, hi]`.
fn free_pieces(used: &[(Scalar, Scalar)], lo: &Scalar, hi: &Scalar) -> Vec<(Scalar, Scalar)> {
    let mut out = Vec::new();
    let mut cursor = lo.clone();
    for (a, b) in used {
        if b <= &cursor || a >= hi {
            continue;
        }
        if a > &cursor {
            out.push((cursor.clone(), a.clone()));
        }
        if b > &cursor {
            cursor = b.clone();
        }
    }
    if &cursor < hi {
        out.push((cursor, hi.clone()));
    }
    out
}

pub fn yds_min_energy(jobs: &[YdsJob], power: &PowerModel) -> Result<YdsSchedule> {
    let mut remaining: Vec<&YdsJob> = jobs.iter().filter(|j| j.volume.is_positive()).collect();
    let mut used: Vec<(Scalar, Scalar)> = Vec::new();
    let mut profile = Vec::new();
    let mut energy = Scalar::zero();
    while !remaining.is_empty() {
        let mut best: Option<(Scalar, Scalar, Scalar)> = None;
        for lo in remaining.iter().map(|j| &j.release) {
            for hi in remaining.iter().map(|j| &j.deadline) {
                if hi <= lo {
                    continue;
                }
                let volume = remaining
                    .iter()
                    .filter(|j| &j.release >= lo && &j.deadline <= hi)
                    .fold(Scalar::zero(), |acc, j| acc + &j.volume);
                if volume.is_zero() {
                    continue;
                }
                let free = free_measure(&used, lo, hi);
                if !free.is_positive() {
                    return Err(OracleError::Refused("job window has no free time left".into()));
                }
                let density = volume / free;
                if best.as_ref().is_none_or(|(d, _, _)| &density > d) {
                    best = Some((density, lo.clone(), hi.clone()));
                }
            }
        }
        let (density, lo, hi) = best.expect("some remaining job has a non-empty window");
        for (a, b) in free_pieces(&used, &lo, &hi) {
            energy += (&b - &a) * power.power(&density);
            profile.push((a.clone(), b.clone(), density.clone()));
            used.push((a, b));
        }
        used.sort();
        remaining.retain(|j| !(j.release >= lo && j.deadline <= hi));
    }
    profile.sort();
    let plan = edf(jobs, &profile)?;
    Ok(YdsSchedule { energy, profile, plan })
}

/// Preemptive EDF at a fixed piecewise-constant speed.
fn edf(jobs: &[YdsJob], profile: &[(Scalar, Scalar, Scalar)]) -> Result<Vec<Slice>> {
    let mut left: Vec<Scalar> = jobs.iter().map(|j| j.volume.clone()).collect();
    let mut plan: Vec<Slice> = Vec::new();
    for (start, end, speed) in profile {
        let mut cuts: Vec<Scalar> = jobs
            .iter()
            .map(|j| j.release.clone())
            .filter(|r| r > start && r < end)
            .collect();
        cuts.push(end.clone());
        cuts.sort();
        cuts.dedup();
        let mut now = start.clone();
        for cut in cuts {
            while now < cut {
                let pick = (0..jobs.len())
                    .filter(|&x| left[x].is_positive() && jobs[x].release <= now)
                    .min_by(|&x, &y| jobs[x].deadline.cmp(&jobs[y].deadline));
                let Some(x) = pick else { break };
                let finish = &now + &left[x] / speed;
                let stop = if finish < cut { finish } else { cut.clone() };
                left[x] -= (&stop - &now) * speed;
                plan.push(Slice::new(jobs[x].index, now.clone(), stop.clone(), speed.clone()));
                now = stop;
            }
            now = cut;
        }
    }
    if left.iter().any(|v| v.is_positive())
        || plan
            .iter()
            .any(|s| jobs.iter().any(|j| j.index == s.job && s.end > j.deadline))
    {
        return Err(OracleError::Refused(
            "minimum-density profile is not EDF-feasible".into(),
        ));
    }
    Ok(plan)
}
