//! Small dense linear-algebra helpers: Lanczos extreme eigenvalues and
//! transposed solves with an existing LU factorization.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, LU};

/// Extreme eigenvalues `(min, max)` of a symmetric operator given by its
/// action, using Lanczos with full reorthogonalization.
///
/// Iterates until both extreme Ritz values are stable to `rel_tol` or the
/// Krylov space reaches `max_dim`.
pub fn lanczos_extremes(
    mut apply: impl FnMut(&DVector<f64>) -> DVector<f64>,
    n: usize,
    max_dim: usize,
    rel_tol: f64,
) -> (f64, f64) {
    let max_dim = max_dim.min(n).max(1);
    // deterministic, non-special start vector
    let mut q = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_75).fract() - 0.5));
    q /= q.norm();
    let mut basis: Vec<DVector<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    loop {
        let k = basis.len() - 1;
        let mut w = apply(&basis[k]);
        let a = w.dot(&basis[k]);
        alphas.push(a);
        // full reorthogonalization (twice is enough)
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w.axpy(-c, b, 1.0);
            }
        }
        let beta = w.norm();
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j || j + 1 == i {
                betas[i.min(j)]
            } else {
                0.0
            }
        });
        let ev = SymmetricEigen::new(t).eigenvalues;
        let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let converged = m >= 3
            && ((lo - last.0).abs() <= rel_tol * lo.abs())
            && ((hi - last.1).abs() <= rel_tol * hi.abs());
        last = (lo, hi);
        if converged || m >= max_dim || beta <= 1e-14 * hi.abs().max(1e-300) {
            return last;
        }
        betas.push(beta);
        basis.push(w / beta);
    }
}

/// Solves `Aᵀ x = b` given the LU factorization of `A`.
pub fn lu_solve_transpose(lu: &LU<f64, Dyn, Dyn>, b: &DVector<f64>) -> Option<DVector<f64>> {
    // P A = L U  ⇒  Aᵀ = Uᵀ Lᵀ P
    let l = lu.l();
    let u = lu.u();
    let z = u.tr_solve_upper_triangular(b)?;
    let mut y = l.tr_solve_lower_triangular(&z)?;
    lu.p().inv_permute_rows(&mut y);
    Some(y)
}
