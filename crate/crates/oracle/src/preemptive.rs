//! Optimal preemptive, non-migratory energy for a throughput demand.

use num_traits::Zero;
use speedscale::scalar::Cost;
use speedscale::{Instance, Scalar};

use crate::yds::{yds_min_energy, YdsJob};
use crate::{masks, partition, weight_curve, OracleBudget, Result};

/// `out[i][mask]`: minimum energy of running exactly `mask` on machine `i`
/// (`None` if some job of the mask cannot run there).
pub fn subset_energies(instance: &Instance, budget: &OracleBudget) -> Result<Vec<Vec<Cost>>> {
    let deadline = budget.admit(instance)?;
    let n = instance.len();
    let mut out = Vec::with_capacity(instance.machines());
    for machine in 0..instance.machines() {
        let mut row = Vec::with_capacity(1 << n);
        for mask in masks(n) {
            deadline.check()?;
            let jobs: Option<Vec<YdsJob>> = (0..n)
                .filter(|j| mask >> j & 1 == 1)
                .map(|j| {
                    let job = instance.job(j);
                    job.volume(machine).map(|v| YdsJob {
                        index: j,
                        release: job.release.clone(),
                        deadline: job.deadline.clone(),
                        volume: v.clone(),
                    })
                })
                .collect();
            row.push(match jobs {
                Some(jobs) => Some(yds_min_energy(&jobs, instance.power())?.energy),
                None => None,
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// `curve[w]`: optimal energy for completing total weight at least `w`.
pub fn preemptive_curve(instance: &Instance, budget: &OracleBudget) -> Result<Vec<Cost>> {
    let deadline = budget.admit(instance)?;
    let per_machine = subset_energies(instance, budget)?;
    let by_mask = partition(&per_machine, instance.len(), &deadline)?;
    Ok(weight_curve(instance, &by_mask))
}

/// Optimal energy for a (possibly fractional) demand; `None` when no subset reaches it.
pub fn opt_preemptive(instance: &Instance, demand: &Scalar, budget: &OracleBudget) -> Result<Cost> {
    if *demand <= Scalar::zero() {
        return Ok(Some(Scalar::zero()));
    }
    let curve = preemptive_curve(instance, budget)?;
    // smallest integer weight >= demand
    let need = demand.ceil().to_integer();
    let need: usize = match need.try_into() {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    Ok(curve.get(need).cloned().flatten())
}

#[cfg(test)]
mod tests {
    use super::*;
    use speedscale::scalar::{int, ratio};
    use speedscale::{Job, PowerModel};

    #[test]
    fn zero_demand_and_single_job() {
        let inst = Instance::new(
            1,
            vec![Job::identical(int(0), int(2), 3, int(1), 1)],
            PowerModel::new(3).unwrap(),
        )
        .unwrap();
        let b = OracleBudget::default();
        assert_eq!(opt_preemptive(&inst, &int(0), &b).unwrap(), Some(int(0)));
        assert_eq!(opt_preemptive(&inst, &int(3), &b).unwrap(), Some(ratio(1, 4)));
        assert_eq!(opt_preemptive(&inst, &ratio(5, 2), &b).unwrap(), Some(ratio(1, 4)));
        assert_eq!(opt_preemptive(&inst, &int(4), &b).unwrap(), None);
    }

    #[test]
    fn splits_across_machines() {
        let inst = Instance::new(
            2,
            vec![
                Job::identical(int(0), int(1), 1, int(1), 2),
                Job::identical(int(0), int(1), 1, int(1), 2),
            ],
            PowerModel::new(2).unwrap(),
        )
        .unwrap();
        assert_eq!(
            opt_preemptive(&inst, &int(2), &OracleBudget::default()).unwrap(),
            Some(int(2))
        );
    }

    #[test]
    fn refuses_large() {
        let jobs = (0..9).map(|_| Job::identical(int(0), int(1), 1, int(1), 1)).collect();
        let inst = Instance::new(1, jobs, PowerModel::new(2).unwrap()).unwrap();
        assert!(matches!(
            opt_preemptive(&inst, &int(1), &OracleBudget::default()),
            Err(crate::OracleError::Refused(_))
        ));
    }
}
