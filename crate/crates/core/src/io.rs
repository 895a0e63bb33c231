//! On-disk formats: JSON for structured inputs and outputs, CSV for tables.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lds::{ActuatorSchedule, LinearSystem};
use crate::synthesis::{InputSequence, Trajectory};

/// System descriptor: `{"n": .., "m": .., "A": [row-major], "B": [row-major]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

impl SystemFile {
    pub fn from_system(sys: &LinearSystem) -> Self {
        Self {
            n: sys.n(),
            m: sys.m(),
            a: row_major(sys.a()),
            b: row_major(sys.b()),
        }
    }

    pub fn into_system(self) -> Result<LinearSystem> {
        if self.a.len() != self.n * self.n {
            return Err(Error::DimensionMismatch(format!(
                "A has {} entries, expected {}",
                self.a.len(),
                self.n * self.n
            )));
        }
        if self.b.len() != self.n * self.m {
            return Err(Error::DimensionMismatch(format!(
                "B has {} entries, expected {}",
                self.b.len(),
                self.n * self.m
            )));
        }
        LinearSystem::new(
            DMatrix::from_row_slice(self.n, self.n, &self.a),
            DMatrix::from_row_slice(self.n, self.m, &self.b),
        )
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Schedule file: `{"s": .., "steps": [[1-based actuator indices], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub s: usize,
    pub steps: Vec<Vec<usize>>,
}

impl ScheduleFile {
    pub fn from_schedule(schedule: &ActuatorSchedule) -> Self {
        Self {
            s: schedule.sparsity(),
            steps: schedule
                .steps()
                .iter()
                .map(|set| set.iter().copied().collect())
                .collect(),
        }
    }

    pub fn into_schedule(self) -> Result<ActuatorSchedule> {
        ActuatorSchedule::from_vecs(&self.steps, self.s)
    }
}

/// Input sequence file: `{"inputs": [[u_1 .. u_m], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputsFile {
    pub inputs: Vec<Vec<f64>>,
}

impl InputsFile {
    pub fn from_inputs(inputs: &InputSequence) -> Self {
        Self {
            inputs: inputs
                .inputs()
                .iter()
                .map(|u| u.iter().copied().collect())
                .collect(),
        }
    }
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let bytes = std::fs::read(path.as_ref())?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

pub fn load_system(path: impl AsRef<Path>) -> Result<LinearSystem> {
    load_json::<SystemFile>(path)?.into_system()
}

pub fn save_system(path: impl AsRef<Path>, sys: &LinearSystem) -> Result<()> {
    save_json(path, &SystemFile::from_system(sys))
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<ActuatorSchedule> {
    load_json::<ScheduleFile>(path)?.into_schedule()
}

pub fn save_schedule(path: impl AsRef<Path>, schedule: &ActuatorSchedule) -> Result<()> {
    save_json(path, &ScheduleFile::from_schedule(schedule))
}

/// Load a bare JSON array as a vector.
pub fn load_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let values: Vec<f64> = load_json(path)?;
    Ok(DVector::from_vec(values))
}

pub fn save_inputs(path: impl AsRef<Path>, inputs: &InputSequence) -> Result<()> {
    save_json(path, &InputsFile::from_inputs(inputs))
}

/// Trajectory CSV: header `k,x_1,...,x_n`, one row per state.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states().first().map_or(0, |x| x.len());
    let mut out = String::from("k");
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push('\n');
    for (k, x) in traj.states().iter().enumerate() {
        out.push_str(&k.to_string());
        for v in x.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn save_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}
