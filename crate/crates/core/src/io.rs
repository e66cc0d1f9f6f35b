//! JSON encodings for states, pure states and channels.
//!
//! Matrices are row-major lists of rows, each entry a `[re, im]` pair:
//!
//! ```json
//! {"dim": 2, "matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]}
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{ChannelError, KrausChannel};
use crate::linalg::Matrix;
use crate::states::{DensityMatrix, PureState, StateError};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{what}: declared {declared}, found {found}")]
    Shape {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("invalid state: {0}")]
    State(#[from] StateError),
    #[error("invalid channel: {0}")]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dim: usize,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PureJson {
    pub dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixJson>,
}

fn encode(m: &Matrix<f64>) -> MatrixJson {
    m.to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn decode(rows: &MatrixJson, what: &'static str, nrows: usize, ncols: usize) -> Result<Matrix<f64>, IoError> {
    if rows.len() != nrows {
        return Err(IoError::Shape {
            what,
            declared: nrows,
            found: rows.len(),
        });
    }
    let mut data = Vec::with_capacity(nrows * ncols);
    for row in rows {
        if row.len() != ncols {
            return Err(IoError::Shape {
                what,
                declared: ncols,
                found: row.len(),
            });
        }
        data.extend(row.iter().map(|&[re, im]| Complex::new(re, im)));
    }
    Ok(Matrix::from_vec(nrows, ncols, data).map_err(StateError::from)?)
}

impl From<&DensityMatrix<f64>> for StateJson {
    fn from(rho: &DensityMatrix<f64>) -> Self {
        Self {
            dim: rho.dim(),
            matrix: encode(rho.matrix()),
        }
    }
}

impl StateJson {
    /// Decodes and validates.
    pub fn to_state(&self) -> Result<DensityMatrix<f64>, IoError> {
        let m = decode(&self.matrix, "state rows/columns", self.dim, self.dim)?;
        Ok(DensityMatrix::validate(m)?)
    }
}

impl From<&PureState<f64>> for PureJson {
    fn from(psi: &PureState<f64>) -> Self {
        Self {
            dim: psi.dim(),
            amplitudes: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl PureJson {
    pub fn to_pure(&self) -> Result<PureState<f64>, IoError> {
        if self.amplitudes.len() != self.dim {
            return Err(IoError::Shape {
                what: "amplitudes",
                declared: self.dim,
                found: self.amplitudes.len(),
            });
        }
        let amps = self.amplitudes.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        Ok(PureState::new(amps)?)
    }
}

impl From<&KrausChannel<f64>> for ChannelJson {
    fn from(ch: &KrausChannel<f64>) -> Self {
        Self {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus: ch.kraus_ops().iter().map(encode).collect(),
        }
    }
}

impl ChannelJson {
    pub fn to_channel(&self) -> Result<KrausChannel<f64>, IoError> {
        let ops = self
            .kraus
            .iter()
            .map(|k| decode(k, "Kraus operator rows/columns", self.dim_out, self.dim_in))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KrausChannel::new(ops)?)
    }
}

pub fn state_from_str(s: &str) -> Result<DensityMatrix<f64>, IoError> {
    serde_json::from_str::<StateJson>(s)?.to_state()
}

pub fn pure_from_str(s: &str) -> Result<PureState<f64>, IoError> {
    serde_json::from_str::<PureJson>(s)?.to_pure()
}

pub fn channel_from_str(s: &str) -> Result<KrausChannel<f64>, IoError> {
    serde_json::from_str::<ChannelJson>(s)?.to_channel()
}

pub fn state_to_string(rho: &DensityMatrix<f64>) -> String {
    to_pretty(&StateJson::from(rho))
}

pub fn pure_to_string(psi: &PureState<f64>) -> String {
    to_pretty(&PureJson::from(psi))
}

pub fn channel_to_string(ch: &KrausChannel<f64>) -> String {
    to_pretty(&ChannelJson::from(ch))
}

/// Pretty JSON for types whose serialization cannot fail.
pub fn to_pretty<S: Serialize>(value: &S) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_state(path: &Path) -> Result<DensityMatrix<f64>, IoError> {
    state_from_str(&read_to_string(path)?)
}

pub fn write_state(path: &Path, rho: &DensityMatrix<f64>) -> Result<(), IoError> {
    write_string(path, &state_to_string(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::random_channel;
    use crate::rng;
    use crate::states::{random_density, random_pure};

    #[test]
    fn round_trips_are_exact() {
        let mut r = rng::stream(71, 0);
        for d in 2..=4 {
            let rho: DensityMatrix<f64> = random_density(d, &mut r).unwrap();
            assert_eq!(state_from_str(&state_to_string(&rho)).unwrap(), rho);
            let psi: PureState<f64> = random_pure(d, &mut r).unwrap();
            assert_eq!(pure_from_str(&pure_to_string(&psi)).unwrap(), psi);
            let ch: KrausChannel<f64> = random_channel(d, 2, &mut r).unwrap();
            assert_eq!(channel_from_str(&channel_to_string(&ch)).unwrap(), ch);
        }
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(state_from_str("{\"dim\": 2,"), Err(IoError::Json(_))));
        assert!(matches!(
            state_from_str("{\"dim\": 2, \"matrix\": [], \"x\": 1}"),
            Err(IoError::Json(_))
        ));
        assert!(matches!(
            state_from_str("{\"dim\": 2, \"matrix\": [[[1,0],[0,0]]]}"),
            Err(IoError::Shape {
                declared: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            state_from_str("{\"dim\": 2, \"matrix\": [[[1,0],[0,0]],[[0,0],[1,0]]]}"),
            Err(IoError::State(StateError::Invalid(_)))
        ));
        assert!(matches!(
            pure_from_str("{\"dim\": 2, \"amplitudes\": [[1,0],[1,0]]}"),
            Err(IoError::State(StateError::NotNormalized { .. }))
        ));
        let half = "{\"dim_in\": 2, \"dim_out\": 2, \"kraus\": [[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]]}";
        assert!(matches!(
            channel_from_str(half),
            Err(IoError::Channel(ChannelError::Incomplete { .. }))
        ));
    }

    #[test]
    fn example_document_parses() {
        let rho =
            state_from_str("{\"dim\": 2, \"matrix\": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]}").unwrap();
        assert_eq!(rho, DensityMatrix::basis(2, 0).unwrap());
    }
}
