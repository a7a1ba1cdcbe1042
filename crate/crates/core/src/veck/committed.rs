use blstrs::{G1Affine, Scalar};

use crate::algebra::{interpolate_consecutive, Polynomial};
use crate::kzg::{self, Crs};
use crate::{Error, Result};

/// A file as evaluations at `0..=ell`, its interpolant and commitment.
#[derive(Clone, Debug)]
pub struct CommittedFile {
    evals: Vec<Scalar>,
    poly: Polynomial,
    commitment: G1Affine,
}

impl CommittedFile {
    pub fn new(crs: &Crs, evals: Vec<Scalar>) -> Result<Self> {
        if evals.is_empty() {
            return Err(Error::domain("a file needs at least one symbol"));
        }
        let poly = interpolate_consecutive(&evals)?;
        let commitment = kzg::commit(crs, &poly)?;
        Ok(Self { evals, poly, commitment })
    }

    /// Degree bound `ell`; the file has `ell + 1` symbols.
    pub fn ell(&self) -> usize {
        self.evals.len() - 1
    }

    pub fn evals(&self) -> &[Scalar] {
        &self.evals
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn commitment(&self) -> G1Affine {
        self.commitment
    }
}
