//! Small instances on which the advertised approximation bounds do not hold.
//! They pin down exactly how the primal-dual method and the knapsack
//! reduction behave, so that any change to these numbers is noticed.

use speedscale::io::{generate, GenKind, GenParams};
use speedscale::primal_dual::{guarantee_report, solve};
use speedscale::scalar::int;
use speedscale::{Instance, Job, PowerModel};
use speedscale_oracle::{opt_nonpreemptive, opt_preemptive, OracleBudget};

fn common_window(alpha: u32, jobs: &[(u64, i64)]) -> Instance {
    let jobs = jobs
        .iter()
        .map(|&(w, p)| Job::identical(int(0), int(1), w, int(p), 1))
        .collect();
    Instance::new(1, jobs, PowerModel::new(alpha).unwrap()).unwrap()
}

#[test]
fn energy_can_exceed_the_inflated_demand_optimum() {
    // a heavy job makes demand (2 alpha + 2) W cheap for the optimum, while the
    // primal-dual method still pays for the heavy job at demand W
    let inst = common_window(2, &[(1, 1), (100, 2)]);
    let sol = solve(&inst, &int(2)).unwrap();
    assert_eq!(sol.energy, int(9));
    assert!(guarantee_report(&inst, &sol).all_hold());
    let inflated = opt_preemptive(&inst, &int(12), &OracleBudget::default()).unwrap();
    assert_eq!(inflated, Some(int(4)));
}

#[test]
fn linear_power_can_exceed_the_doubled_demand_optimum() {
    let inst = common_window(1, &[(1, 1), (4, 5)]);
    let sol = solve(&inst, &int(2)).unwrap();
    assert_eq!(sol.energy, int(6));
    let doubled = opt_preemptive(&inst, &int(4), &OracleBudget::default()).unwrap();
    assert_eq!(doubled, Some(int(5)));
    // the classical factor-two guarantee against the same demand does hold
    let same = opt_preemptive(&inst, &int(2), &OracleBudget::default())
        .unwrap()
        .unwrap();
    assert!(sol.energy <= int(2) * same);
}

#[test]
fn knapsack_encoding_admits_more_than_the_knapsack_optimum() {
    // items (value 1, size 1) and (value 2, size 2) with capacity 2: the knapsack
    // optimum is 2, yet with cubic power both unit jobs fit in energy 5/4
    let params = GenParams {
        alpha: 3,
        items: vec![(1, 1), (2, 2)],
        capacity: int(2),
        ..GenParams::default()
    };
    let file = generate(GenKind::Knapsack, 0, &params).unwrap();
    let inst = file.to_instance(false).unwrap();
    let grid: Vec<_> = (0..=3).map(int).collect();
    let oracle = OracleBudget::default();
    assert_eq!(opt_nonpreemptive(&inst, &int(2), &grid, &oracle).unwrap(), 3);
    assert_eq!(
        opt_preemptive(&inst, &int(3), &oracle).unwrap(),
        Some("5/4".parse().unwrap())
    );
}
