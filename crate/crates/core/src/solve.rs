//! Solution of `S_s φ = g` and conditioning evidence for the discrete
//! operator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::BoundaryOperator;
use crate::error::{Error, Result};
use crate::linalg::{lanczos_extremes, lu_solve_transpose};
use crate::surface::Density;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Dense,
    Iterative,
}

/// Options of [`solve_density`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: SolveMethod::Dense, tol: 1e-10, max_iter: 2000 }
    }
}

/// Extreme singular values of the weighted-symmetrized operator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConditionReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub cond: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub density: Density,
    /// `‖Aφ - g‖₂ / ‖g‖₂`.
    pub residual: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub cond: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

/// Matrices whose smallest singular value falls below this fraction of the
/// largest are treated as singular.
const SINGULAR_RATIO: f64 = 1e-13;

const LANCZOS_DIM: usize = 120;
const LANCZOS_TOL: f64 = 1e-9;

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let bn = b.norm();
    let r = (a * x - b).norm();
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

/// Extreme singular values of `B = W^{1/2} K W^{1/2}` by Lanczos on `BᵀB`
/// (largest) and on `(BᵀB)^{-1}` through one LU factorization (smallest).
pub fn condition_report(op: &BoundaryOperator) -> Result<ConditionReport> {
    let b = op.weighted_symmetrize();
    condition_of(&b)
}

pub fn condition_of(b: &DMatrix<f64>) -> Result<ConditionReport> {
    let n = b.nrows();
    let bt = b.transpose();
    let (_, hi) = lanczos_extremes(|x| &bt * (b * x), n, LANCZOS_DIM, LANCZOS_TOL);
    let sigma_max = hi.sqrt();
    let lu = b.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let mut failed = false;
    let (_, inv_hi) = lanczos_extremes(
        |x| match lu_solve_transpose(&lu, x).and_then(|y| lu.solve(&y)) {
            Some(v) => v,
            None => {
                failed = true;
                DVector::zeros(n)
            }
        },
        n,
        LANCZOS_DIM,
        LANCZOS_TOL,
    );
    if failed || !(inv_hi > 0.0) || !inv_hi.is_finite() {
        return Err(Error::Singular { sigma_min: 0.0 });
    }
    let sigma_min = 1.0 / inv_hi.sqrt();
    Ok(ConditionReport { sigma_min, sigma_max, cond: sigma_max / sigma_min })
}

/// Result of the positive-definiteness test of `(B + Bᵀ)/2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DefinitenessReport {
    pub positive_definite: bool,
    /// Smallest eigenvalue (only when positive definite).
    pub lambda_min: Option<f64>,
    pub lambda_max: f64,
}

/// Checks positive definiteness of the symmetric part by Cholesky and
/// estimates its extreme eigenvalues.
pub fn definiteness(op: &BoundaryOperator) -> DefinitenessReport {
    let b = op.weighted_symmetrize();
    let sym = (&b + b.transpose()) * 0.5;
    let n = sym.nrows();
    let (_, lambda_max) = lanczos_extremes(|x| &sym * x, n, LANCZOS_DIM, LANCZOS_TOL);
    match sym.cholesky() {
        Some(ch) => {
            let (_, inv_hi) = lanczos_extremes(|x| ch.solve(x), n, LANCZOS_DIM, LANCZOS_TOL);
            DefinitenessReport { positive_definite: true, lambda_min: Some(1.0 / inv_hi), lambda_max }
        }
        None => DefinitenessReport { positive_definite: false, lambda_min: None, lambda_max },
    }
}

/// Solves `A φ = g`.
///
/// `Dense` factors `A` with partial pivoting. `Iterative` works on the
/// weighted-symmetrized system `B y = W^{1/2} g`, `φ = W^{-1/2} y`: conjugate
/// gradients on the symmetric part of `B`, wrapped in a defect-correction
/// loop that absorbs the small antisymmetric part left by the local
/// corrections.
pub fn solve_density(op: &BoundaryOperator, g: &Density, options: SolverOptions) -> Result<SolveReport> {
    if g.mesh_key() != op.mesh_key() || g.len() != op.len() {
        return Err(Error::MeshMismatch);
    }
    if !(options.tol > 0.0) {
        return Err(Error::Domain(format!("solver tolerance {} must be positive", options.tol)));
    }
    let cond = condition_report(op)?;
    if cond.sigma_min < SINGULAR_RATIO * cond.sigma_max {
        return Err(Error::Singular { sigma_min: cond.sigma_min });
    }
    let a = op.matrix();
    let rhs = DVector::from_column_slice(g.values());
    let (x, iterations) = match options.method {
        SolveMethod::Dense => {
            let lu = a.clone().lu();
            let x = lu.solve(&rhs).ok_or(Error::Singular { sigma_min: cond.sigma_min })?;
            (x, 0)
        }
        SolveMethod::Iterative => iterative(op, &rhs, options)?,
    };
    let residual = relative_residual(a, &x, &rhs);
    if options.method == SolveMethod::Dense && residual > options.tol.max(1e-8) {
        return Err(Error::Singular { sigma_min: cond.sigma_min });
    }
    Ok(SolveReport {
        density: Density::from_parts(op.mesh_key(), x.as_slice().to_vec()),
        residual,
        sigma_min: cond.sigma_min,
        sigma_max: cond.sigma_max,
        cond: cond.cond,
        method: options.method,
        iterations,
    })
}

fn iterative(op: &BoundaryOperator, rhs: &DVector<f64>, options: SolverOptions) -> Result<(DVector<f64>, usize)> {
    let b = op.weighted_symmetrize();
    let sym = (&b + b.transpose()) * 0.5;
    let sq = DVector::from_iterator(op.len(), op.weights().iter().map(|w| w.sqrt()));
    let f = rhs.component_mul(&sq);
    let fnorm = f.norm();
    let mut y = DVector::zeros(op.len());
    let mut total = 0;
    if fnorm == 0.0 {
        return Ok((y, 0));
    }
    // stop slightly below the requested tolerance in the weighted norm
    let target = 0.1 * options.tol;
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let r = &f - &b * &y;
        residual = r.norm() / fnorm;
        if residual <= target {
            let x = y.component_div(&sq);
            return Ok((x, total));
        }
        let budget = options.max_iter.saturating_sub(total);
        if budget == 0 {
            break;
        }
        let (dy, its) = conjugate_gradient(&sym, &r, 0.1 * target.max(1e-15) / residual, budget);
        total += its;
        y += dy;
    }
    Err(Error::NoConvergence { iterations: total, residual })
}

/// Plain CG on a symmetric positive definite matrix, relative tolerance.
pub fn conjugate_gradient(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> (DVector<f64>, usize) {
    let bn = b.norm();
    let mut x = DVector::zeros(b.len());
    if bn == 0.0 {
        return (x, 0);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let tol = tol.max(1e-15);
    for k in 0..max_iter {
        let ap = a * &p;
        let step = rr / p.dot(&ap);
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_new = r.dot(&r);
        if rr_new.sqrt() <= tol * bn {
            return (x, k + 1);
        }
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    (x, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceMesh;
    use approx::assert_relative_eq;

    #[test]
    fn cg_solves_spd_system() {
        let a = DMatrix::from_fn(30, 30, |i, j| if i == j { 3.0 } else { 1.0 / (1.0 + (i as f64 - j as f64).abs()) });
        let b = DVector::from_fn(30, |i, _| (i as f64).sin());
        let (x, its) = conjugate_gradient(&a, &b, 1e-13, 100);
        assert!(its < 100);
        assert!((&a * x - b).norm() < 1e-11);
    }

    #[test]
    fn newtonian_extremes_on_sphere() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 12, 24).unwrap();
        let op = BoundaryOperator::assemble(&m, 2.0).unwrap();
        let c = condition_report(&op).unwrap();
        assert_relative_eq!(c.sigma_max, 4.0 * std::f64::consts::PI.powi(2), max_relative = 1e-3);
        assert!(c.cond >= 1.0 && c.sigma_min > 0.0);
    }

    #[test]
    fn dense_and_iterative_agree() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 12, 24).unwrap();
        let op = BoundaryOperator::assemble(&m, 1.5).unwrap();
        let g = Density::from_fn(&m, |x, _| 1.0 + x[2] - 0.5 * x[0] * x[1]);
        let tol = 1e-10;
        let d = solve_density(&op, &g, SolverOptions { method: SolveMethod::Dense, tol, max_iter: 2000 }).unwrap();
        let it = solve_density(&op, &g, SolverOptions { method: SolveMethod::Iterative, tol, max_iter: 2000 }).unwrap();
        assert!(it.residual <= tol && it.iterations > 0);
        let diff = d.density.values().iter().zip(it.density.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = d.density.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff <= 10.0 * tol * scale * d.cond, "{diff}");
    }

    #[test]
    fn rejects_foreign_density() {
        let m = SurfaceMesh::sphere(1.0, [0.0; 3], 12, 24).unwrap();
        let other = SurfaceMesh::sphere(1.0, [0.0; 3], 13, 26).unwrap();
        let op = BoundaryOperator::assemble(&m, 1.5).unwrap();
        assert!(matches!(
            solve_density(&op, &Density::zeros(&other), SolverOptions::default()),
            Err(Error::MeshMismatch)
        ));
    }
}
