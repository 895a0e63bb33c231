//! Comparison schedulers under the same piecewise sparsity constraint.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lds::{gramian, ActuatorSchedule, LinearSystem};
use crate::linalg::{trace_inverse_if_full_rank, DEFAULT_RANK_TOL};
use crate::seeding::seeded_rng;

/// Uniform random schedule: at every step, `s` distinct actuators drawn
/// without replacement. Deterministic for a given seed.
pub fn random_schedule(sys: &LinearSystem, s: usize, seed: u64) -> Result<ActuatorSchedule> {
    let m = sys.m();
    if s > m {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {s} distinct actuators from {m}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let steps = (0..sys.n())
        .map(|_| {
            rand::seq::index::sample(&mut rng, m, s)
                .into_iter()
                .map(|j| j + 1)
                .collect()
        })
        .collect();
    ActuatorSchedule::new(steps, s)
}

/// Deterministic baseline maximizing the Gramian trace. The trace is additive
/// over picked pairs, so the greedy over the partition matroid reduces to
/// taking, at each step, the `s` candidate vectors of largest norm
/// (ties toward the smaller actuator index).
pub fn greedy_trace_max_schedule(sys: &LinearSystem, s: usize) -> Result<ActuatorSchedule> {
    let m = sys.m();
    if s > m {
        return Err(Error::InvalidArgument(format!(
            "cannot select {s} actuators from {m}"
        )));
    }
    let n = sys.n();
    let mut steps = Vec::with_capacity(n);
    for k in 0..n {
        let block = sys.power(n - 1 - k) * sys.b();
        let mut by_norm: Vec<(usize, f64)> = (1..=m)
            .map(|j| (j, block.column(j - 1).norm_squared()))
            .collect();
        by_norm.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite norms")
                .then(a.0.cmp(&b.0))
        });
        steps.push(by_norm.iter().take(s).map(|&(j, _)| j).collect());
    }
    ActuatorSchedule::new(steps, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleRow {
    pub trial: usize,
    pub rank: usize,
    /// `trace(W^-1)`; absent when the draw was rank-deficient.
    pub trace_inv: Option<f64>,
}

/// Energy statistics of an ensemble of random schedules. `mean`, `median`,
/// and `min` summarize `trace(W^-1)` over the full-rank draws only; when all
/// draws are rank-deficient they are `None` rather than an error.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleEnergy {
    pub trials: usize,
    pub rank_deficient: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub rows: Vec<EnsembleRow>,
}

impl EnsembleEnergy {
    /// CSV rows `trial,rank,trace_inv` (header included, LF line endings).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,rank,trace_inv\n");
        for row in &self.rows {
            let value = row.trace_inv.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", row.trial, row.rank, value));
        }
        out
    }
}

/// Draw `trials` random schedules (per-trial seed `seed + trial`) and
/// summarize their energies.
pub fn random_schedule_ensemble_energy(
    sys: &LinearSystem,
    s: usize,
    trials: usize,
    seed: u64,
) -> Result<EnsembleEnergy> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let rows: Result<Vec<EnsembleRow>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let schedule = random_schedule(sys, s, seed.wrapping_add(trial as u64))?;
            let g = gramian(sys, &schedule, 0.0)?;
            Ok(EnsembleRow {
                trial,
                rank: g.rank(),
                trace_inv: trace_inverse_if_full_rank(g.w(), DEFAULT_RANK_TOL),
            })
        })
        .collect();
    let rows = rows?;
    let mut values: Vec<f64> = rows.iter().filter_map(|r| r.trace_inv).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    let rank_deficient = trials - values.len();
    let (mean, median, min) = if values.is_empty() {
        (None, None, None)
    } else {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mid = values.len() / 2;
        let median = if values.len() % 2 == 1 {
            values[mid]
        } else {
            0.5 * (values[mid - 1] + values[mid])
        };
        (Some(mean), Some(median), Some(values[0]))
    };
    Ok(EnsembleEnergy {
        trials,
        rank_deficient,
        mean,
        median,
        min,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::erdos_renyi_system;
    use crate::greedy::{greedy_schedule, GreedyConfig};
    use nalgebra::{dmatrix, DMatrix};

    #[test]
    fn forced_full_selection() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        for seed in 0..5 {
            let schedule = random_schedule(&sys, 2, seed).unwrap();
            for k in 0..2 {
                assert_eq!(
                    schedule.step(k).iter().copied().collect::<Vec<_>>(),
                    vec![1, 2]
                );
            }
        }
    }

    #[test]
    fn random_schedule_reproducible() {
        let sys = LinearSystem::new(DMatrix::identity(4, 4), DMatrix::zeros(4, 5)).unwrap();
        let a = random_schedule(&sys, 2, 99).unwrap();
        let b = random_schedule(&sys, 2, 99).unwrap();
        assert_eq!(a, b);
        for k in 0..4 {
            assert_eq!(a.step(k).len(), 2);
        }
        assert!(random_schedule(&sys, 6, 0).is_err());
    }

    #[test]
    fn per_actuator_frequency_uniform() {
        // 100 steps, m = 5, s = 1: each actuator should appear with
        // frequency about 1/5 over many seeds.
        let sys = LinearSystem::new(DMatrix::zeros(100, 100), DMatrix::zeros(100, 5)).unwrap();
        let mut counts = [0usize; 5];
        let seeds = 20;
        for seed in 0..seeds {
            let schedule = random_schedule(&sys, 1, seed).unwrap();
            for step in schedule.steps() {
                counts[step.iter().next().unwrap() - 1] += 1;
            }
        }
        let total = (100 * seeds) as f64;
        for c in counts {
            let freq = c as f64 / total;
            assert!((freq - 0.2).abs() < 0.05, "frequency {freq} too far from 0.2");
        }
    }

    #[test]
    fn trace_max_diag_example() {
        let sys = LinearSystem::new(dmatrix![2.0, 0.0; 0.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        let schedule = greedy_trace_max_schedule(&sys, 1).unwrap();
        // Step 0: |A e1|^2 = 4 beats |A e2|^2 = 1. Step 1: tie, actuator 1.
        // The result is rank deficient, which is the point of the baseline.
        assert_eq!(schedule.step(0).iter().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(schedule.step(1).iter().copied().collect::<Vec<_>>(), vec![1]);
        let g = gramian(&sys, &schedule, 0.0).unwrap();
        assert_eq!(g.rank(), 1);
    }

    #[test]
    fn trace_max_full_sparsity_takes_everything() {
        let sys = LinearSystem::new(DMatrix::identity(3, 3), DMatrix::identity(3, 3)).unwrap();
        let schedule = greedy_trace_max_schedule(&sys, 3).unwrap();
        for k in 0..3 {
            assert_eq!(schedule.step(k).len(), 3);
        }
    }

    #[test]
    fn trace_max_never_prefers_zero_column() {
        let b = dmatrix![1.0, 0.0; 0.5, 0.0];
        let sys = LinearSystem::new(DMatrix::identity(2, 2), b).unwrap();
        let schedule = greedy_trace_max_schedule(&sys, 1).unwrap();
        for k in 0..2 {
            assert_eq!(schedule.step(k).iter().copied().collect::<Vec<_>>(), vec![1]);
        }
    }

    #[test]
    fn trace_max_is_single_swap_optimal() {
        let sys = LinearSystem::new(
            dmatrix![0.8, 0.3, 0.0; 0.1, 1.1, -0.4; 0.0, 0.2, 0.9],
            dmatrix![1.0, 0.2, 0.0; 0.0, 1.4, 0.3; 0.5, 0.0, 1.1],
        )
        .unwrap();
        let s = 2;
        let schedule = greedy_trace_max_schedule(&sys, s).unwrap();
        let base = gramian(&sys, &schedule, 0.0).unwrap().w().trace();
        for k in 0..3 {
            for out in schedule.step(k).clone() {
                for swap_in in 1..=3 {
                    if schedule.step(k).contains(&swap_in) {
                        continue;
                    }
                    let mut steps: Vec<_> = schedule.steps().to_vec();
                    steps[k].remove(&out);
                    steps[k].insert(swap_in);
                    let neighbor = ActuatorSchedule::new(steps, s).unwrap();
                    let t = gramian(&sys, &neighbor, 0.0).unwrap().w().trace();
                    assert!(base >= t - 1e-10);
                }
            }
        }
    }

    #[test]
    fn ensemble_degenerate_cases() {
        // s = m forces identical draws: zero variance.
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
        let e = random_schedule_ensemble_energy(&sys, 2, 8, 3).unwrap();
        assert_eq!(e.rank_deficient, 0);
        assert_eq!(e.mean, e.median);
        assert_eq!(e.mean, e.min);

        // Infeasible sparsity: every draw is rank-deficient, flagged not thrown.
        let sys = LinearSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)).unwrap();
        let e = random_schedule_ensemble_energy(&sys, 1, 6, 3).unwrap();
        assert_eq!(e.rank_deficient, 6);
        assert!(e.mean.is_none() && e.median.is_none() && e.min.is_none());
        assert!(e.to_csv().lines().count() == 7);

        assert!(random_schedule_ensemble_energy(&sys, 1, 0, 3).is_err());
    }

    #[test]
    fn ensemble_mean_dominates_greedy() {
        let a = erdos_renyi_system(10, 17);
        let sys = LinearSystem::new(a, DMatrix::identity(10, 10)).unwrap();
        let s = 3;
        let (schedule, _) = greedy_schedule(&sys, &GreedyConfig::new(s)).unwrap();
        let greedy_energy =
            trace_inverse_if_full_rank(gramian(&sys, &schedule, 0.0).unwrap().w(), DEFAULT_RANK_TOL)
                .unwrap();
        let ensemble = random_schedule_ensemble_energy(&sys, s, 50, 1234).unwrap();
        let mean = ensemble.mean.expect("some full-rank draws expected");
        assert!(
            mean >= greedy_energy,
            "random mean {mean} should not beat greedy {greedy_energy}"
        );
    }
}
