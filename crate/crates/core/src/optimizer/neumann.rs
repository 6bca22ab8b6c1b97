use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMat, CVec};

/// First-order update `X - X Δ X` of `X = A^-1` for the perturbation
/// `A + diag(delta)`.
pub fn neumann_apply(x: &CMat, delta: &CVec) -> Result<CMat> {
    if !x.is_square() || x.nrows() != delta.len() {
        return Err(Error::Dimension(format!(
            "{}x{} inverse with a length-{} increment",
            x.nrows(),
            x.ncols(),
            delta.len()
        )));
    }
    let mut dx = x.clone();
    for (r, d) in delta.iter().enumerate() {
        dx.row_mut(r).iter_mut().for_each(|z| *z *= *d);
    }
    let norm = spectral_norm(&dx);
    if !(norm < 1.0) {
        return Err(Error::NeumannPrecondition { norm });
    }
    Ok(x - x * dx)
}
