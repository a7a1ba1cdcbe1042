//! KZG polynomial commitments with single and batch openings.
//!
//! Generic over a [`PairingBackend`]; the rest of the crate instantiates it
//! with BLS12-381 through `blstrs`.

mod backend;
mod crs;
mod fixed_base;

pub use backend::PairingBackend;
pub use blstrs::Bls12;
pub use crs::Crs;
pub use fixed_base::FixedBaseTable;

use ff::Field;
use group::prime::PrimeCurveAffine;
use group::Curve;

use crate::algebra::{interpolate, vanishing, EvalDomain, Polynomial};
use crate::{Error, Result};

/// A commitment is a single G1 point.
pub type Commitment<E = Bls12> = <E as pairing::Engine>::G1Affine;
/// Opening proofs, single or batched, are quotient commitments.
pub type OpeningProof<E = Bls12> = <E as pairing::Engine>::G1Affine;
pub type BatchProof<E = Bls12> = <E as pairing::Engine>::G1Affine;

fn check_degree<E: PairingBackend>(crs: &Crs<E>, p: &Polynomial<E::Fr>) -> Result<()> {
    match p.degree() {
        Some(d) if d > crs.max_degree() => Err(Error::DegreeTooLarge { degree: d, max: crs.max_degree() }),
        _ => Ok(()),
    }
}

pub fn commit<E: PairingBackend>(crs: &Crs<E>, p: &Polynomial<E::Fr>) -> Result<Commitment<E>> {
    check_degree(crs, p)?;
    Ok(E::msm_g1(crs.g1_powers(), p.coeffs()).to_affine())
}

/// Commitment in G2, used to hand a verifier `V_S(tau)` directly.
pub fn commit_g2<E: PairingBackend>(crs: &Crs<E>, p: &Polynomial<E::Fr>) -> Result<E::G2Affine> {
    check_degree(crs, p)?;
    Ok(E::msm_g2(crs.g2_powers(), p.coeffs()).to_affine())
}

/// Returns `p(point)` and a proof of that evaluation.
pub fn open<E: PairingBackend>(
    crs: &Crs<E>,
    p: &Polynomial<E::Fr>,
    point: &E::Fr,
) -> Result<(E::Fr, OpeningProof<E>)> {
    check_degree(crs, p)?;
    let (q, value) = p.div_linear(point);
    Ok((value, commit(crs, &q)?))
}

/// Accepts iff `e(C - v*g1, g2) = e(proof, g2^tau - point*g2)`.
pub fn verify<E: PairingBackend>(
    crs: &Crs<E>,
    c: &Commitment<E>,
    point: &E::Fr,
    value: &E::Fr,
    proof: &OpeningProof<E>,
) -> bool {
    let g1 = crs.g1_powers()[0];
    let g2 = crs.g2_powers()[0];
    let lhs = (c.to_curve() - g1 * value).to_affine();
    let shifted = (crs.g2_powers()[1].to_curve() - g2 * point).to_affine();
    E::pairing_product_is_one(&[(lhs, g2), (-*proof, shifted)])
}

/// G2 analogue of [`open`]: proves `p(point)` for a G2 commitment.
pub fn open_g2<E: PairingBackend>(
    crs: &Crs<E>,
    p: &Polynomial<E::Fr>,
    point: &E::Fr,
) -> Result<(E::Fr, E::G2Affine)> {
    check_degree(crs, p)?;
    let (q, value) = p.div_linear(point);
    Ok((value, commit_g2(crs, &q)?))
}

/// Accepts iff `e(g1, C - v*g2) = e(g1^tau - point*g1, proof)`.
pub fn verify_g2<E: PairingBackend>(
    crs: &Crs<E>,
    c: &E::G2Affine,
    point: &E::Fr,
    value: &E::Fr,
    proof: &E::G2Affine,
) -> bool {
    let g1 = crs.g1_powers()[0];
    let g2 = crs.g2_powers()[0];
    let rhs = (c.to_curve() - g2 * value).to_affine();
    let shifted = (crs.g1_powers()[1].to_curve() - g1 * point).to_affine();
    E::pairing_product_is_one(&[(g1, rhs), (-shifted, *proof)])
}

/// Proof that `p` agrees with its own interpolant on `points`: the
/// commitment to `(p - p_S) / V_S`.
pub fn batch_open<E: PairingBackend>(
    crs: &Crs<E>,
    p: &Polynomial<E::Fr>,
    points: &EvalDomain<E::Fr>,
) -> Result<BatchProof<E>> {
    check_degree(crs, p)?;
    if points.is_empty() {
        return Err(Error::domain("batch opening needs at least one point"));
    }
    let (q, _) = p.div_rem(&vanishing(points.points()))?;
    commit(crs, &q)
}

/// `g2^{V_S(tau)}` for the vanishing polynomial of `points`.
pub fn vanishing_g2<E: PairingBackend>(crs: &Crs<E>, points: &EvalDomain<E::Fr>) -> Result<E::G2Affine> {
    commit_g2(crs, &vanishing(points.points()))
}

/// Checks `e(C / g1^{p_S(tau)}, g2) = e(proof, g2^{V_S(tau)})`, computing
/// both sides from the reference string.
pub fn batch_verify<E: PairingBackend>(
    crs: &Crs<E>,
    c: &Commitment<E>,
    points: &EvalDomain<E::Fr>,
    values: &[E::Fr],
    proof: &BatchProof<E>,
) -> Result<bool> {
    check_lengths(points, values)?;
    if points.len() > crs.max_degree() {
        return Ok(false);
    }
    let vs = vanishing_g2(crs, points)?;
    batch_verify_with_vanishing(crs, c, points, values, proof, &vs)
}

/// [`batch_verify`] with `g2^{V_S(tau)}` supplied by the caller. When all
/// values are zero nothing here depends on the size of `points`.
pub fn batch_verify_with_vanishing<E: PairingBackend>(
    crs: &Crs<E>,
    c: &Commitment<E>,
    points: &EvalDomain<E::Fr>,
    values: &[E::Fr],
    proof: &BatchProof<E>,
    vanishing_at_tau: &E::G2Affine,
) -> Result<bool> {
    check_lengths(points, values)?;
    let lhs = if values.iter().all(|v| bool::from(v.is_zero())) {
        *c
    } else {
        let interp = interpolate(points, values)?;
        if interp.degree().is_some_and(|d| d > crs.max_degree()) {
            return Ok(false);
        }
        (c.to_curve() - E::msm_g1(crs.g1_powers(), interp.coeffs())).to_affine()
    };
    let g2 = crs.g2_powers()[0];
    Ok(E::pairing_product_is_one(&[(lhs, g2), (-*proof, *vanishing_at_tau)]))
}

fn check_lengths<F>(points: &EvalDomain<F>, values: &[F]) -> Result<()>
where
    F: ff::PrimeField,
{
    if points.len() != values.len() {
        return Err(Error::domain(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    Ok(())
}
