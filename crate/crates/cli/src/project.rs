use asc_jets::{lift, ExprAst};

use crate::error::CliError;

pub const PROJECTION_TOL: f64 = 1e-12;
pub const MAX_NEWTON_STEPS: usize = 50;

/// Newton iteration along the coordinate gradient of `s` until `|s| < tol`.
pub fn project_to_surface(point: &[f64], s: &ExprAst, tol: f64) -> Result<Vec<f64>, CliError> {
    let mut p = point.to_vec();
    let mut residual = s.eval(&p);
    for _ in 0..MAX_NEWTON_STEPS {
        if !residual.is_finite() {
            break;
        }
        if residual.abs() < tol {
            return Ok(p);
        }
        let jet = lift(s, &p, 1).map_err(|_| CliError::ProjectionDiverged { iterations: 0, residual })?;
        let grad: Vec<f64> = (0..p.len())
            .map(|i| jet.partial(i).map(|d| d.value()))
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::ProjectionDiverged { iterations: 0, residual })?;
        let norm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !(norm_sq > 1e-24) {
            break;
        }
        for (x, g) in p.iter_mut().zip(&grad) {
            *x -= residual * g / norm_sq;
        }
        residual = s.eval(&p);
    }
    if residual.abs() < tol {
        return Ok(p);
    }
    Err(CliError::ProjectionDiverged { iterations: MAX_NEWTON_STEPS, residual })
}
