//! The exact dynamic programs agree with exhaustive search on random small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speedscale::dp_agreeable::{solve_agreeable, AgreeableDp};
use speedscale::dp_equal::{solve_equal, EqualDp};
use speedscale::model::{energy_of, validate_plan};
use speedscale::scalar::{int, relax, Cost};
use speedscale::{Instance, Job, PowerModel};
use speedscale_oracle::{nonpreemptive_curve, phi_grid, theta_grid, OracleBudget};

/// Exact-weight table to at-least-weight curve.
fn at_least(exact: &[Cost]) -> Vec<Cost> {
    let mut curve = exact.to_vec();
    for w in (0..curve.len().saturating_sub(1)).rev() {
        if let Some(c) = curve[w + 1].clone() {
            relax(&mut curve[w], c);
        }
    }
    curve
}

fn check_outcome(
    inst: &Instance,
    budget: &speedscale::Scalar,
    oracle: &[Cost],
    weight: u64,
    plan: &speedscale::SchedulePlan,
) {
    let expected = speedscale::scalar::max_within(oracle, budget).unwrap_or(0) as u64;
    assert_eq!(weight, expected);
    assert!(validate_plan(inst, plan).is_empty(), "{:?}", validate_plan(inst, plan));
    assert!(energy_of(plan, inst.power()).unwrap() <= *budget);
    let scheduled: u64 = plan.jobs().iter().map(|&j| inst.job(j).weight).sum();
    assert_eq!(scheduled, weight);
}

#[test]
fn equal_volume_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..250 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=2);
        let p = rng.gen_range(1..=2);
        let jobs = (0..n)
            .map(|_| {
                let r = rng.gen_range(0..4);
                let d = rng.gen_range(r + 1..=4);
                Job::identical(int(r), int(d), rng.gen_range(1..=2), int(p), m)
            })
            .collect();
        let inst = Instance::new(m, jobs, PowerModel::new(rng.gen_range(2..=3)).unwrap()).unwrap();
        let curve = at_least(&EqualDp::new(&inst).unwrap().curve().unwrap());
        let oracle = nonpreemptive_curve(&inst, &theta_grid(&inst), &OracleBudget::default()).unwrap();
        assert_eq!(curve, oracle, "{inst:?}");
        let budget = int(rng.gen_range(0..12)) / int(2);
        let out = solve_equal(&inst, &budget).unwrap();
        check_outcome(&inst, &budget, &oracle, out.weight, &out.plan);
    }
}

#[test]
fn agreeable_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..250 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=2);
        let mut releases: Vec<i64> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let mut lengths: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
        releases.sort();
        lengths.sort();
        // non-decreasing releases with deadlines made non-decreasing too
        let mut deadlines: Vec<i64> = releases.iter().zip(&lengths).map(|(r, l)| r + l).collect();
        for i in 1..n {
            deadlines[i] = deadlines[i].max(deadlines[i - 1]);
        }
        let jobs = (0..n)
            .map(|i| {
                Job::identical(
                    int(releases[i]),
                    int(deadlines[i]),
                    rng.gen_range(1..=2),
                    int(rng.gen_range(1..=2)),
                    m,
                )
            })
            .collect();
        let inst = Instance::new(m, jobs, PowerModel::new(rng.gen_range(2..=3)).unwrap()).unwrap();
        assert!(inst.is_agreeable());
        let curve = at_least(&AgreeableDp::new(&inst).unwrap().curve().unwrap());
        let oracle = nonpreemptive_curve(&inst, &phi_grid(&inst), &OracleBudget::default()).unwrap();
        assert_eq!(curve, oracle, "{inst:?}");
        let budget = int(rng.gen_range(0..12)) / int(2);
        let out = solve_agreeable(&inst, &budget).unwrap();
        check_outcome(&inst, &budget, &oracle, out.weight, &out.plan);
    }
}
