use speedscale::model::{validate_plan, Job, PowerModel, Slice};
use speedscale::primal_dual::{guarantee_report, lambda_table, solve, verify_dual, PrimalDual};
use speedscale::scalar::{int, ratio};
use speedscale::{Instance, Scalar, StepFunction};

/// Four jobs on two unrelated machines, alpha = 3.
fn worked_example() -> Instance {
    let windows = [(0, 2), (1, 3), (0, 5), (1, 3)];
    let volumes = [(1, 2), (3, 5), (4, 3), (2, 1)];
    let jobs = windows
        .iter()
        .zip(volumes)
        .map(|(&(r, d), (p1, p2))| Job::new(int(r), int(d), 1, vec![Some(int(p1)), Some(int(p2))]))
        .collect();
    Instance::new(2, jobs, PowerModel::new(3).unwrap()).unwrap()
}

/// Table row in job-id order.
fn row(inst: &Instance, table: &[Vec<Option<Scalar>>], machine: usize) -> Vec<Option<Scalar>> {
    (1..=4)
        .map(|id| table[machine][inst.index_of(id).unwrap()].clone())
        .collect()
}

#[test]
fn first_round_table() {
    let inst = worked_example();
    let table = lambda_table(&inst, &[StepFunction::zero(), StepFunction::zero()], &[false; 4]).unwrap();
    let values = table.values();
    let some = |v: Vec<Scalar>| v.into_iter().map(Some).collect::<Vec<_>>();
    assert_eq!(
        row(&inst, &values, 0),
        some(vec![ratio(3, 4), ratio(27, 4), ratio(48, 25), int(3)])
    );
    assert_eq!(
        row(&inst, &values, 1),
        some(vec![int(3), ratio(75, 4), ratio(27, 25), ratio(3, 4)])
    );
}

#[test]
fn rounds_picks_and_duals() {
    let inst = worked_example();
    let mut engine = PrimalDual::new(&inst, int(3)).unwrap();
    let id = |j: usize| inst.job(j).id;

    let first = engine.run_round().unwrap();
    assert_eq!((first.machine, id(first.job), first.raise.clone()), (0, 1, ratio(3, 4)));

    let second = engine.run_round().unwrap();
    let m1 = row(&inst, &second.lambda, 0);
    assert_eq!(m1, vec![None, Some(ratio(147, 16)), Some(int(3)), Some(ratio(75, 16))]);
    assert_eq!(row(&inst, &second.lambda, 1)[1..], row(&inst, &first.lambda, 1)[1..]);
    assert_eq!((second.machine, id(second.job), second.raise.clone()), (1, 4, int(0)));

    let third = engine.run_round().unwrap();
    assert_eq!(
        (third.machine, id(third.job), third.raise.clone()),
        (1, 3, ratio(501, 100))
    );
    assert!(engine.is_done());

    let state = engine.state().clone();
    let gamma = |id: usize| state.gamma[inst.index_of(id).unwrap()].clone();
    assert_eq!(gamma(1), Some(ratio(3, 4)));
    assert_eq!(gamma(2), None);
    assert_eq!(gamma(3), Some(ratio(144, 25)));
    assert_eq!(gamma(4), Some(ratio(3, 4)));
    assert_eq!(state.beta, vec![ratio(3, 4), int(0), ratio(501, 100)]);

    let sol = engine.finish().unwrap();
    assert_eq!(sol.energy, ratio(281, 100));
}

#[test]
fn solution_plan_and_certificates() {
    let inst = worked_example();
    let sol = solve(&inst, &int(3)).unwrap();
    let mut ids: Vec<usize> = sol.selected().iter().map(|&j| inst.job(j).id).collect();
    ids.sort();
    assert_eq!(ids, vec![1, 3, 4]);
    assert_eq!(
        sol.profiles[1],
        StepFunction::constant(int(0), int(5), ratio(4, 5)).unwrap()
    );
    let (j3, j4) = (inst.index_of(3).unwrap(), inst.index_of(4).unwrap());
    assert_eq!(
        sol.plan.machines[1],
        vec![
            Slice::new(j3, int(0), int(1), ratio(4, 5)),
            Slice::new(j4, int(1), ratio(9, 4), ratio(4, 5)),
            Slice::new(j3, ratio(9, 4), int(5), ratio(4, 5)),
        ]
    );
    assert!(validate_plan(&inst, &sol.plan).is_empty());
    assert_eq!(speedscale::throughput_of(&inst, &sol.plan).unwrap(), 3);
    assert!(verify_dual(&inst, &sol).unwrap().is_feasible());
    let report = guarantee_report(&inst, &sol);
    assert!(report.all_hold(), "{:?}", report.failures().collect::<Vec<_>>());
}
