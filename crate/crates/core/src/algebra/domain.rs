use std::collections::HashSet;

use ff::PrimeField;

use crate::{Error, Result};

/// Ordered set of pairwise-distinct evaluation points.
///
/// Domains built from integer indices remember them, so callers can map a
/// point back to its codeword position and the interpolation routines can
/// take the fast path for `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalDomain<F> {
    points: Vec<F>,
    indices: Option<Vec<u64>>,
}

impl<F: PrimeField> EvalDomain<F> {
    /// Arbitrary field points; duplicates are rejected.
    pub fn new(points: Vec<F>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.to_repr().as_ref().to_vec()) {
                return Err(Error::domain("duplicate evaluation point"));
            }
        }
        Ok(Self { points, indices: None })
    }

    /// The integers `0..n`.
    pub fn range(n: usize) -> Self {
        Self {
            points: (0..n as u64).map(F::from).collect(),
            indices: Some((0..n as u64).collect()),
        }
    }

    /// Integer points in the given order. Indices must be distinct and
    /// smaller than the field characteristic (always true for `u64` over the
    /// pairing field).
    pub fn from_indices(indices: &[u64]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(dup) = indices.iter().find(|i| !seen.insert(**i)) {
            return Err(Error::domain(format!("duplicate index {dup}")));
        }
        let points: Vec<F> = indices.iter().map(|&i| F::from(i)).collect();
        // Indices that wrap around a small characteristic collide as points.
        let domain = Self::new(points)?;
        Ok(Self { indices: Some(indices.to_vec()), ..domain })
    }

    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn indices(&self) -> Option<&[u64]> {
        self.indices.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when the domain is exactly `0, 1, .., len-1` in order.
    pub fn is_prefix_range(&self) -> bool {
        self.indices
            .as_ref()
            .is_some_and(|ix| ix.iter().enumerate().all(|(k, &i)| i == k as u64))
    }
}
