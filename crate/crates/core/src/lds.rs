//! Discrete-time linear system model, actuator schedules, and Gramian algebra.
//!
//! Index convention used everywhere in this crate: a schedule step
//! `t in 0..K` contributes to the controllability matrix and Gramian through
//! the power `A^(K-1-t)`. Equivalently, the last step injects through `A^0`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    self, all_finite, numerical_rank, shifted_inverse, sym_eigenvalues, DEFAULT_RANK_TOL,
};

/// The pair (A, B) of a discrete-time linear system x(k+1) = A x(k) + B u(k),
/// with powers of A cached up to A^n at construction.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    /// powers[k] = A^k for k = 0..=n.
    powers: Vec<DMatrix<f64>>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "B must be {}xm with m >= 1, got {}x{}",
                n,
                b.nrows(),
                b.ncols()
            )));
        }
        if !all_finite(&a) {
            return Err(Error::NonFinite("A".into()));
        }
        if !all_finite(&b) {
            return Err(Error::NonFinite("B".into()));
        }
        let mut powers = Vec::with_capacity(n + 1);
        powers.push(DMatrix::identity(n, n));
        for k in 1..=n {
            let next = &powers[k - 1] * &a;
            powers.push(next);
        }
        Ok(Self { a, b, powers })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Cached A^k for k <= n.
    pub fn power(&self, k: usize) -> &DMatrix<f64> {
        &self.powers[k]
    }

    /// A^k for arbitrary k, falling back to repeated multiplication past the
    /// cache.
    pub fn power_owned(&self, k: usize) -> DMatrix<f64> {
        if k < self.powers.len() {
            return self.powers[k].clone();
        }
        let mut acc = self.powers[self.powers.len() - 1].clone();
        for _ in self.powers.len() - 1..k {
            acc = &acc * &self.a;
        }
        acc
    }

    /// Columns of B selected by a 1-based actuator set, ascending.
    pub fn input_submatrix(&self, actuators: &BTreeSet<usize>) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, actuators.len());
        for (c, &j) in actuators.iter().enumerate() {
            out.set_column(c, &self.b.column(j - 1));
        }
        out
    }

    /// Candidate vector for pair (k, j) at horizon K: `A^(K-1-k) * b_j`
    /// (j is 1-based).
    pub fn candidate_vector(&self, horizon: usize, k: usize, j: usize) -> DVector<f64> {
        assert!(k < horizon, "time index {k} out of horizon {horizon}");
        assert!(j >= 1 && j <= self.m(), "actuator index {j} out of range");
        let p = self.power_owned(horizon - 1 - k);
        &p * self.b.column(j - 1)
    }
}

/// An ordered list of per-step actuator index sets with the per-step
/// cardinality bound `s` they were built under. Actuator indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActuatorSchedule {
    steps: Vec<BTreeSet<usize>>,
    s: usize,
}

impl ActuatorSchedule {
    pub fn new(steps: Vec<BTreeSet<usize>>, s: usize) -> Result<Self> {
        for (k, step) in steps.iter().enumerate() {
            if step.len() > s {
                return Err(Error::InvalidSchedule(format!(
                    "step {k} selects {} actuators, bound is {s}",
                    step.len()
                )));
            }
            if step.iter().any(|&j| j == 0) {
                return Err(Error::InvalidSchedule(format!(
                    "step {k} contains index 0; actuator indices are 1-based"
                )));
            }
        }
        Ok(Self { steps, s })
    }

    /// Build from plain vectors, rejecting duplicate indices within a step.
    pub fn from_vecs(steps: &[Vec<usize>], s: usize) -> Result<Self> {
        let mut sets = Vec::with_capacity(steps.len());
        for (k, step) in steps.iter().enumerate() {
            let set: BTreeSet<usize> = step.iter().copied().collect();
            if set.len() != step.len() {
                return Err(Error::InvalidSchedule(format!(
                    "step {k} contains duplicate actuator indices"
                )));
            }
            sets.push(set);
        }
        Self::new(sets, s)
    }

    /// The fully-actuated schedule: every actuator at every step.
    pub fn full(horizon: usize, m: usize) -> Self {
        let all: BTreeSet<usize> = (1..=m).collect();
        Self {
            steps: vec![all; horizon],
            s: m,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, k: usize) -> &BTreeSet<usize> {
        &self.steps[k]
    }

    pub fn steps(&self) -> &[BTreeSet<usize>] {
        &self.steps
    }

    pub fn sparsity(&self) -> usize {
        self.s
    }

    /// Total number of selected (step, actuator) pairs.
    pub fn selected_count(&self) -> usize {
        self.steps.iter().map(|s| s.len()).sum()
    }

    /// Check index ranges against a concrete system.
    pub fn validate_for(&self, sys: &LinearSystem) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no steps".into()));
        }
        let m = sys.m();
        for (k, step) in self.steps.iter().enumerate() {
            if let Some(&j) = step.iter().find(|&&j| j < 1 || j > m) {
                return Err(Error::InvalidSchedule(format!(
                    "step {k} selects actuator {j}, system has m = {m}"
                )));
            }
        }
        Ok(())
    }
}

/// A Gramian snapshot: W, the regularizer, the shifted inverse
/// M = (W + eps I)^-1 with its trace, and the numerical rank of W.
///
/// `apply_rank_one` keeps W, M, and the trace exact but leaves `rank` at its
/// last refreshed value; call `refresh_rank` before reading it after
/// incremental updates.
#[derive(Debug, Clone)]
pub struct GramianState {
    w: DMatrix<f64>,
    epsilon: f64,
    shifted_inv: Option<DMatrix<f64>>,
    trace_inv: Option<f64>,
    rank: usize,
}

impl GramianState {
    /// State of the empty selection: W = 0, M = I/eps.
    pub fn empty(n: usize, epsilon: f64) -> Result<Self> {
        if epsilon < 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        let (shifted_inv, trace_inv) = if epsilon > 0.0 {
            (
                Some(DMatrix::identity(n, n) / epsilon),
                Some(n as f64 / epsilon),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            w: DMatrix::zeros(n, n),
            epsilon,
            shifted_inv,
            trace_inv,
            rank: 0,
        })
    }

    /// Build from an explicit symmetric PSD matrix.
    pub fn from_matrix(w: DMatrix<f64>, epsilon: f64, rank_tol: f64) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "Gramian must be square, got {}x{}",
                w.nrows(),
                w.ncols()
            )));
        }
        if !all_finite(&w) {
            return Err(Error::NonFinite("Gramian".into()));
        }
        if epsilon < 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and >= 0, got {epsilon}"
            )));
        }
        let scale = w.norm().max(1.0);
        if (&w - w.transpose()).norm() > 1e-8 * scale {
            return Err(Error::InvalidArgument(
                "Gramian is not symmetric within tolerance".into(),
            ));
        }
        let ev = sym_eigenvalues(&w);
        if ev[ev.len() - 1] < -1e-8 * scale {
            return Err(Error::InvalidArgument(
                "Gramian is not positive semidefinite within tolerance".into(),
            ));
        }
        let rank = numerical_rank(&w, rank_tol);
        let (shifted_inv, trace_inv) = if epsilon > 0.0 {
            let m = shifted_inverse(&w, epsilon);
            let t = m.trace();
            (Some(m), Some(t))
        } else {
            (None, None)
        };
        Ok(Self {
            w,
            epsilon,
            shifted_inv,
            trace_inv,
            rank,
        })
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// M = (W + eps I)^-1; `None` when eps = 0.
    pub fn shifted_inverse(&self) -> Option<&DMatrix<f64>> {
        self.shifted_inv.as_ref()
    }

    /// trace(M); `None` when eps = 0.
    pub fn trace_inv(&self) -> Option<f64> {
        self.trace_inv
    }

    /// Numerical rank of W as of construction or the last `refresh_rank`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn refresh_rank(&mut self, tol: f64) -> usize {
        self.rank = numerical_rank(&self.w, tol);
        self.rank
    }

    /// Rebuild M and trace(M) from W by direct factorization.
    pub fn recompute_inverse(&mut self) {
        if self.epsilon > 0.0 {
            let m = shifted_inverse(&self.w, self.epsilon);
            self.trace_inv = Some(m.trace());
            self.shifted_inv = Some(m);
        }
    }

    /// Add `v v^T` to W, maintaining M and trace(M) by the Sherman-Morrison
    /// identity. Returns the realized decrease of trace(M). Falls back to a
    /// full refactorization if the update denominator degenerates.
    pub fn apply_rank_one(&mut self, v: &DVector<f64>) -> Result<f64> {
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidArgument(
                "rank-one updates require epsilon > 0".into(),
            ));
        }
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "update vector has length {}, state dimension is {}",
                v.len(),
                self.n()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("update vector".into()));
        }
        self.w.syger(1.0, v, v, 1.0);
        // syger touches only the lower triangle; mirror it.
        self.w.fill_upper_triangle_with_lower_triangle();

        let m = self.shifted_inv.as_ref().expect("epsilon > 0");
        let w_v = m * v;
        let denom = 1.0 + v.dot(&w_v);
        if denom > 0.0 && denom.is_finite() {
            let gain = w_v.norm_squared() / denom;
            let m = self.shifted_inv.as_mut().expect("epsilon > 0");
            m.syger(-1.0 / denom, &w_v, &w_v, 1.0);
            m.fill_upper_triangle_with_lower_triangle();
            let t = self.trace_inv.expect("epsilon > 0");
            self.trace_inv = Some(t - gain);
            Ok(gain)
        } else {
            // Should not happen for PSD W and eps > 0; rebuild and report the
            // realized change.
            let before = self.trace_inv.expect("epsilon > 0");
            self.recompute_inverse();
            let after = self.trace_inv.expect("epsilon > 0");
            if !after.is_finite() {
                return Err(Error::NumericalBreakdown(format!(
                    "shifted inverse diverged after rank-one update (denom = {denom})"
                )));
            }
            Ok(before - after)
        }
    }
}

/// Sparse-controllability verdict with intermediate ranks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SparseControllability {
    pub n: usize,
    pub s: usize,
    /// rank of [B, AB, ..., A^(n-1) B]
    pub kalman_rank: usize,
    pub a_rank: usize,
    /// n - rank(A): the smallest per-step sparsity that can work
    pub min_sparsity: usize,
    /// the pair (A, B) is controllable
    pub controllable: bool,
    /// both conditions hold
    pub satisfied: bool,
}

/// The scheduled controllability matrix
/// `[A^(K-1) B_{S_0} | A^(K-2) B_{S_1} | ... | B_{S_{K-1}}]`,
/// blocks ordered by time step, columns within a block by ascending actuator
/// index.
pub fn controllability_matrix(
    sys: &LinearSystem,
    schedule: &ActuatorSchedule,
) -> Result<DMatrix<f64>> {
    schedule.validate_for(sys)?;
    let n = sys.n();
    let horizon = schedule.len();
    let total_cols = schedule.selected_count();
    let mut c = DMatrix::zeros(n, total_cols);
    let mut col = 0;
    for (t, step) in schedule.steps().iter().enumerate() {
        if step.is_empty() {
            continue;
        }
        let block = sys.power_owned(horizon - 1 - t) * sys.input_submatrix(step);
        c.view_mut((0, col), (n, step.len())).copy_from(&block);
        col += step.len();
    }
    Ok(c)
}

/// The scheduled Gramian `W = sum_t A^(K-1-t) B_{S_t} B_{S_t}^T (A^(K-1-t))^T`
/// as a [`GramianState`] with caller-supplied regularizer.
pub fn gramian(sys: &LinearSystem, schedule: &ActuatorSchedule, epsilon: f64) -> Result<GramianState> {
    gramian_with_tol(sys, schedule, epsilon, DEFAULT_RANK_TOL)
}

pub fn gramian_with_tol(
    sys: &LinearSystem,
    schedule: &ActuatorSchedule,
    epsilon: f64,
    rank_tol: f64,
) -> Result<GramianState> {
    schedule.validate_for(sys)?;
    let n = sys.n();
    let horizon = schedule.len();
    let mut w = DMatrix::zeros(n, n);
    for (t, step) in schedule.steps().iter().enumerate() {
        if step.is_empty() {
            continue;
        }
        let block = sys.power_owned(horizon - 1 - t) * sys.input_submatrix(step);
        w += &block * block.transpose();
    }
    w = (&w + w.transpose()) * 0.5;
    GramianState::from_matrix(w, epsilon, rank_tol)
}

/// The epsilon-auxiliary energy `trace((W + eps I)^-1)`.
pub fn epsilon_auxiliary_energy(state: &GramianState) -> Result<f64> {
    if state.epsilon() <= 0.0 {
        return Err(Error::InvalidArgument(
            "epsilon-auxiliary energy requires epsilon > 0".into(),
        ));
    }
    Ok(state.trace_inv().expect("epsilon > 0"))
}

/// Check the two sparse-controllability conditions: (A, B) controllable and
/// `s >= n - rank(A)`.
pub fn is_sparse_controllable(
    sys: &LinearSystem,
    s: usize,
    tol: f64,
) -> Result<SparseControllability> {
    if s < 1 || s > sys.m() {
        return Err(Error::InvalidArgument(format!(
            "sparsity {s} outside [1, {}]",
            sys.m()
        )));
    }
    let n = sys.n();
    let m = sys.m();
    let mut kalman = DMatrix::zeros(n, n * m);
    for k in 0..n {
        kalman
            .view_mut((0, k * m), (n, m))
            .copy_from(&(sys.power(k) * sys.b()));
    }
    let kalman_rank = numerical_rank(&kalman, tol);
    let a_rank = numerical_rank(sys.a(), tol);
    let min_sparsity = n - a_rank;
    let controllable = kalman_rank == n;
    Ok(SparseControllability {
        n,
        s,
        kalman_rank,
        a_rank,
        min_sparsity,
        controllable,
        satisfied: controllable && s >= min_sparsity,
    })
}

/// Bounds on the minimum horizon that can achieve controllability:
/// `ceil(n/s) <= K <= min(q ceil(rank(B)/s), n - s + 1)` with q the degree of
/// the minimal polynomial of A.
pub fn horizon_bounds(sys: &LinearSystem, s: usize, tol: f64) -> Result<(usize, usize)> {
    let check = is_sparse_controllable(sys, s, tol)?;
    if !check.satisfied {
        return Err(Error::InvalidArgument(format!(
            "system is not {s}-sparse controllable (kalman rank {}, rank(A) = {})",
            check.kalman_rank, check.a_rank
        )));
    }
    let n = sys.n();
    let q = minimal_polynomial_degree(sys.a(), tol);
    let rank_b = numerical_rank(sys.b(), tol);
    let lower = n.div_ceil(s);
    let upper = (q * rank_b.div_ceil(s)).min(n.saturating_sub(s) + 1);
    Ok((lower, upper))
}

/// Degree of the minimal polynomial of A: the smallest q for which
/// {I, A, ..., A^q}, vectorized, are linearly dependent at tolerance `tol`.
pub fn minimal_polynomial_degree(a: &DMatrix<f64>, tol: f64) -> usize {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "A must be square");
    let mut powers: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n)];
    for q in 1..=n {
        let next = powers.last().unwrap() * a;
        powers.push(next);
        let mut stacked = DMatrix::zeros(n * n, q + 1);
        for (c, p) in powers.iter().enumerate() {
            for (r, &x) in p.iter().enumerate() {
                stacked[(r, c)] = x;
            }
        }
        if numerical_rank(&stacked, tol) < q + 1 {
            return q;
        }
    }
    // Cayley-Hamilton guarantees dependence by q = n.
    n
}

/// Re-export of [`linalg::numerical_rank`]; the rank convention lives there.
pub fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    linalg::numerical_rank(m, tol)
}
