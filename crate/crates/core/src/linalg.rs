use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest acceptable condition estimate before a system is called singular.
pub const CONDITION_LIMIT: f64 = 1e14;

/// Solve `J x = b` for symmetric negative definite `J`. The Cholesky factor
/// of `-J` doubles as the definiteness check; `(max L_ii / min L_ii)^2` is a
/// lower bound on the 2-norm condition number.
pub fn solve_negative_definite(j: &DMatrix<f64>, b: &[f64], t: f64) -> Result<Vec<f64>> {
    let neg = -j;
    let chol = neg.cholesky().ok_or(Error::NearSingular { t })?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo > 0.0) || (hi / lo).powi(2) > CONDITION_LIMIT {
        return Err(Error::NearSingular { t });
    }
    let rhs = -DVector::from_column_slice(b);
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NearSingular { t });
    }
    Ok(x.iter().copied().collect())
}

/// `J - s 1 1^T` with `s = trace(-J) / N`, which makes a symmetric negative
/// semidefinite `J` with null vector `1` definite while leaving its action on
/// mean-zero vectors unchanged.
pub fn gauge_fixed(j: &DMatrix<f64>) -> DMatrix<f64> {
    let n = j.nrows();
    let s = -j.trace() / n as f64;
    j.map(|v| v - s)
}

/// General dense solve by LU with partial pivoting.
pub fn solve_lu(a: &DMatrix<f64>, b: &[f64], t: f64) -> Result<Vec<f64>> {
    let x = a
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or(Error::NearSingular { t })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NearSingular { t });
    }
    Ok(x.iter().copied().collect())
}
