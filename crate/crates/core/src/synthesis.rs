//! Minimum-energy input synthesis on a fixed schedule, and exact rollouts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lds::{controllability_matrix, ActuatorSchedule, LinearSystem};
use crate::linalg::{numerical_rank, DEFAULT_RANK_TOL};

/// A sequence of inputs together with the schedule that generated it. Every
/// u(k) is exactly zero outside `support.step(k)`.
#[derive(Debug, Clone)]
pub struct InputSequence {
    inputs: Vec<DVector<f64>>,
    support: ActuatorSchedule,
}

impl InputSequence {
    pub fn new(inputs: Vec<DVector<f64>>, support: ActuatorSchedule) -> Result<Self> {
        if inputs.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs for a schedule of {} steps",
                inputs.len(),
                support.len()
            )));
        }
        for (k, u) in inputs.iter().enumerate() {
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("input at step {k}")));
            }
            for (i, &x) in u.iter().enumerate() {
                if x != 0.0 && !support.step(k).contains(&(i + 1)) {
                    return Err(Error::InvalidSchedule(format!(
                        "input at step {k} is nonzero on actuator {} outside its support",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { inputs, support })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, k: usize) -> &DVector<f64> {
        &self.inputs[k]
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn support(&self) -> &ActuatorSchedule {
        &self.support
    }
}

/// States x(0), ..., x(K) of a rollout.
#[derive(Debug, Clone)]
pub struct Trajectory {
    states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory contains x(0)")
    }
}

/// Minimum-energy inputs steering x0 to xf along `schedule`.
///
/// Solves `min |z| s.t. C z = xf - A^K x0` for the stacked compressed input
/// z via `z = C^T (C C^T)^-1 d`, with the SPD solve done by Cholesky rather
/// than an explicit inverse, then scatters z onto the scheduled supports.
pub fn min_energy_inputs(
    sys: &LinearSystem,
    schedule: &ActuatorSchedule,
    x0: &DVector<f64>,
    xf: &DVector<f64>,
) -> Result<InputSequence> {
    let n = sys.n();
    if x0.len() != n || xf.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "endpoint vectors must have length {n}, got {} and {}",
            x0.len(),
            xf.len()
        )));
    }
    if x0.iter().chain(xf.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("endpoint vector".into()));
    }
    let horizon = schedule.len();
    let c = controllability_matrix(sys, schedule)?;
    let d = xf - sys.power_owned(horizon) * x0;

    let mut w = &c * c.transpose();
    w = (&w + w.transpose()) * 0.5;
    let rank = numerical_rank(&w, DEFAULT_RANK_TOL);
    let chol = if rank == n {
        nalgebra::Cholesky::new(w)
    } else {
        None
    };
    let y = match chol {
        Some(chol) => chol.solve(&d),
        None => {
            return Err(Error::TargetUnreachable {
                rank,
                n,
                residual: least_squares_residual(&c, &d),
            });
        }
    };
    let z = c.transpose() * y;

    let m = sys.m();
    let mut inputs = Vec::with_capacity(horizon);
    let mut offset = 0;
    for step in schedule.steps() {
        let mut u = DVector::zeros(m);
        for (idx, &j) in step.iter().enumerate() {
            u[j - 1] = z[offset + idx];
        }
        offset += step.len();
        inputs.push(u);
    }
    InputSequence::new(inputs, schedule.clone())
}

fn least_squares_residual(c: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    if c.ncols() == 0 {
        return d.norm();
    }
    let svd = nalgebra::SVD::try_new(c.clone(), true, true, f64::EPSILON, 0)
        .expect("SVD with uncapped iterations cannot fail");
    let cutoff = DEFAULT_RANK_TOL
        * svd.singular_values.max()
        * c.nrows().max(c.ncols()) as f64;
    match svd.solve(d, cutoff) {
        Ok(z) => (c * z - d).norm(),
        Err(_) => d.norm(),
    }
}

/// Exact forward rollout of x(k+1) = A x(k) + B u(k).
pub fn simulate(sys: &LinearSystem, inputs: &InputSequence, x0: &DVector<f64>) -> Result<Trajectory> {
    let n = sys.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state must have length {n}, got {}",
            x0.len()
        )));
    }
    for (k, u) in inputs.inputs().iter().enumerate() {
        if u.len() != sys.m() {
            return Err(Error::DimensionMismatch(format!(
                "input at step {k} has length {}, system has m = {}",
                u.len(),
                sys.m()
            )));
        }
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for u in inputs.inputs() {
        let next = sys.a() * states.last().expect("nonempty") + sys.b() * u;
        states.push(next);
    }
    Ok(Trajectory { states })
}

/// Total input energy `sum_k |u(k)|^2`.
pub fn control_energy(inputs: &InputSequence) -> f64 {
    inputs.inputs().iter().map(|u| u.norm_squared()).sum()
}
