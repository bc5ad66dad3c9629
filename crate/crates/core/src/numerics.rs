//! Minimal dense complex linear algebra for matrices of dimension 2–4.
//!
//! Everything in this crate reduces to a handful of tiny well-scaled systems
//! (all rates in units of γ), so the solvers here are deliberately fixed-size:
//! LU with partial pivoting for resolvent solves, and eigenvalues via the
//! exact characteristic polynomial (Faddeev–LeVerrier) rooted simultaneously
//! with Durand–Kerner. No general N×N machinery.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Pivot threshold for the LU solve, relative to the max-abs entry of A.
const PIVOT_TOL: f64 = 1e-14;
/// Sweep cap for the Durand–Kerner iteration.
const MAX_SWEEPS: usize = 500;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },
    #[error("root finding did not converge within {0} sweeps")]
    NoConvergence(usize),
}

/// Dense square complex matrix, row-major, dimension 2–4.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((2..=4).contains(&dim), "dimension must be 2-4, got {dim}");
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major entries; length must be dim².
    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "need dim^2 entries");
        assert!((2..=4).contains(&dim), "dimension must be 2-4, got {dim}");
        assert!(
            entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "matrix entries must be finite"
        );
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude; the scale used for pivot thresholds.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum();
            }
        }
        out
    }

    /// z·I − A, the matrix of the resolvent system.
    pub fn shifted_from(&self, z: C64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = -*e;
        }
        for i in 0..self.dim {
            out[(i, i)] += z;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Solve A·x = b by LU decomposition with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>, NumericsError> {
    let n = a.dim;
    assert_eq!(b.len(), n, "rhs length must match matrix dimension");
    let threshold = PIVOT_TOL * a.max_abs();

    let mut lu = a.entries.clone();
    let mut x: Vec<C64> = b.to_vec();

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, lu[r * n + col].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot_mag < threshold {
            return Err(NumericsError::SingularMatrix {
                pivot: pivot_mag,
                threshold,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            lu[r * n + col] = factor;
            for j in col + 1..n {
                let sub = factor * lu[col * n + j];
                lu[r * n + j] -= sub;
            }
            let sub = factor * x[col];
            x[r] -= sub;
        }
    }

    for col in (0..n).rev() {
        x[col] /= lu[col * n + col];
        for r in 0..col {
            let sub = lu[r * n + col] * x[col];
            x[r] -= sub;
        }
    }
    Ok(x)
}

/// Eigenvalues (always) and unit-norm eigenvectors (on request).
#[derive(Debug, Clone)]
pub struct EigenSet {
    /// Sorted by (Re, Im) so the set is deterministic for a fixed input.
    pub values: Vec<C64>,
    pub vectors: Option<Vec<Vec<C64>>>,
}

/// All eigenvalues of A as roots of the exact characteristic polynomial.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<EigenSet, NumericsError> {
    let coeffs = characteristic_polynomial(a);
    let mut values = polynomial_roots(&coeffs)?;
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(EigenSet {
        values,
        vectors: None,
    })
}

/// Eigenvalues plus eigenvectors obtained by inverse iteration.
pub fn eigen_decomposition(a: &ComplexMatrix) -> Result<EigenSet, NumericsError> {
    let mut set = eigenvalues(a)?;
    let vectors = set
        .values
        .iter()
        .map(|&lambda| inverse_iteration(a, lambda))
        .collect::<Result<Vec<_>, _>>()?;
    set.vectors = Some(vectors);
    Ok(set)
}

/// Monic characteristic polynomial det(λI − A) = λⁿ + c₁λⁿ⁻¹ + … + cₙ
/// via the Faddeev–LeVerrier recurrence. Exact up to rounding at these sizes.
fn characteristic_polynomial(a: &ComplexMatrix) -> Vec<C64> {
    let n = a.dim;
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(C64::new(1.0, 0.0));

    let mut mk = a.clone();
    let mut ck = -mk.trace();
    coeffs.push(ck);
    for k in 2..=n {
        let mut shifted = mk;
        for i in 0..n {
            shifted[(i, i)] += ck;
        }
        mk = a.matmul(&shifted);
        ck = -mk.trace() / k as f64;
        coeffs.push(ck);
    }
    coeffs
}

fn horner(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// |c₀|·|z|ⁿ + |c₁|·|z|ⁿ⁻¹ + … — the natural magnitude scale of p at z,
/// used for a backward-error stopping test.
fn poly_scale(coeffs: &[C64], z: C64) -> f64 {
    let r = z.norm();
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Roots of a monic polynomial (descending coefficients) by simultaneous
/// Durand–Kerner iteration.
pub(crate) fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>, NumericsError> {
    let n = coeffs.len() - 1;
    assert!(n >= 1);
    // Cauchy-style inclusion radius for the starting circle.
    let radius = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rot = C64::new(0.4, 0.9); // standard non-symmetric seed angle
    let mut z: Vec<C64> = (0..n).map(|k| radius * rot.powu(k as u32 + 1)).collect();

    for _ in 0..MAX_SWEEPS {
        // Classical simultaneous update: every correction uses the previous
        // sweep's iterates, which keeps the root sum tied to the trace.
        let prev = z.clone();
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let p = horner(coeffs, prev[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= prev[i] - prev[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = C64::new(1e-300, 0.0);
            }
            let step = p / denom;
            z[i] = prev[i] - step;
            max_step = max_step.max(step.norm());
        }
        let z_scale = 1.0 + z.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if max_step <= 1e-14 * z_scale {
            return Ok(z);
        }
        // Clustered (near-multiple) roots stall on step size while the
        // residuals are already at the rounding floor.
        if z
            .iter()
            .all(|&w| horner(coeffs, w).norm() <= 1e-13 * poly_scale(coeffs, w))
            && max_step <= 1e-6 * z_scale
        {
            return Ok(z);
        }
    }
    Err(NumericsError::NoConvergence(MAX_SWEEPS))
}

/// Unit eigenvector for a converged eigenvalue by shifted inverse iteration.
fn inverse_iteration(a: &ComplexMatrix, lambda: C64) -> Result<Vec<C64>, NumericsError> {
    let n = a.dim;
    let scale = 1.0 + a.max_abs();
    // Deterministic, direction-free start vector.
    let mut v: Vec<C64> = (0..n)
        .map(|k| C64::new(1.0 + 0.3 * k as f64, 0.7 - 0.2 * k as f64))
        .collect();
    normalize(&mut v);

    let mut jitter = 1e-12 * scale;
    for _attempt in 0..4 {
        let shift = lambda + C64::new(jitter, jitter);
        let m = a.shifted_from(shift);
        let mut w = v.clone();
        let mut ok = true;
        for _ in 0..3 {
            match solve(&m, &w) {
                Ok(next) => {
                    w = next;
                    normalize(&mut w);
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(w);
        }
        jitter *= 100.0;
    }
    Err(NumericsError::NoConvergence(4))
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag(values: &[C64]) -> ComplexMatrix {
        let n = values.len();
        let mut m = ComplexMatrix::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[test]
    fn solve_identity_passes_rhs_through() {
        let a = ComplexMatrix::identity(4);
        let b = [c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(-1.0, 0.0)];
        let x = solve(&a, &b).unwrap();
        for (xi, bi) in x.iter().zip(b.iter()) {
            assert_abs_diff_eq!(xi.re, bi.re, epsilon = 1e-15);
            assert_abs_diff_eq!(xi.im, bi.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn solve_diagonal() {
        let a = diag(&[c(2.0, 0.0), c(4.0, 0.0), c(8.0, 0.0), c(16.0, 0.0)]);
        let b = [c(2.0, 0.0), c(4.0, 0.0), c(8.0, 0.0), c(16.0, 0.0)];
        let x = solve(&a, &b).unwrap();
        for xi in &x {
            assert_abs_diff_eq!(xi.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(xi.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn solve_reconstructs_known_solution() {
        // b = A·x* for a fixed well-conditioned A; residual contract 1e-10.
        let a = ComplexMatrix::from_entries(
            4,
            vec![
                c(4.0, 1.0),
                c(-1.0, 0.5),
                c(0.3, -0.2),
                c(0.0, 0.7),
                c(1.1, -0.4),
                c(5.0, 0.0),
                c(-0.6, 0.1),
                c(0.2, 0.0),
                c(0.0, 0.9),
                c(0.4, -1.2),
                c(6.0, -1.0),
                c(-0.3, 0.3),
                c(0.8, 0.0),
                c(-0.2, 0.6),
                c(1.0, 1.0),
                c(3.5, 0.5),
            ],
        );
        let x_star = [c(1.0, -2.0), c(0.5, 0.5), c(-3.0, 0.1), c(0.0, 1.0)];
        let b = a.matvec(&x_star);
        let x = solve(&a, &b).unwrap();
        for (xi, xs) in x.iter().zip(x_star.iter()) {
            assert!((xi - xs).norm() < 1e-10);
        }
        let resid: f64 = a
            .matvec(&x)
            .iter()
            .zip(b.iter())
            .map(|(l, r)| (l - r).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let bnorm = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(resid <= 1e-12 * (a.max_abs() * xnorm + bnorm));
    }

    #[test]
    fn solve_rejects_singular() {
        let mut a = ComplexMatrix::zeros(3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 0)] = c(2.0, 0.0);
        a[(1, 1)] = c(4.0, 0.0); // row2 = 2·row1
        a[(2, 2)] = c(1.0, 0.0);
        let b = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            solve(&a, &b),
            Err(NumericsError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn eigenvalues_of_diagonal_matrix() {
        let a = diag(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)]);
        let set = eigenvalues(&a).unwrap();
        let expected = [c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0)];
        for (got, want) in set.values.iter().zip(expected.iter()) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn eigenvalues_of_rotation_generator() {
        // [[0,1],[-1,0]] has eigenvalues ±i; their real parts are pure
        // rounding noise, so match as a set rather than by sort order.
        let mut a = ComplexMatrix::zeros(2);
        a[(0, 1)] = c(1.0, 0.0);
        a[(1, 0)] = c(-1.0, 0.0);
        let set = eigenvalues(&a).unwrap();
        for want in [c(0.0, -1.0), c(0.0, 1.0)] {
            let dist = set
                .values
                .iter()
                .map(|v| (v - want).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(dist < 1e-12, "no eigenvalue near {want}");
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let a = ComplexMatrix::from_entries(
            4,
            vec![
                c(-2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 3.0),
                c(0.0, -3.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, -3.0),
                c(0.0, 3.0),
                c(0.0, 3.0),
                c(0.0, -3.0),
                c(-1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, -3.0),
                c(0.0, 3.0),
                c(0.0, 0.0),
                c(-1.0, 0.0),
            ],
        );
        let set = eigenvalues(&a).unwrap();
        let sum: C64 = set.values.iter().sum();
        assert!((sum - a.trace()).norm() < 1e-9);
        // Driven two-level generator: one conservation mode at zero.
        let smallest = set
            .values
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        assert!(smallest < 1e-10, "conservation mode should sit at 0");
    }

    #[test]
    fn eigenvalue_residuals_are_polynomial_roots() {
        let a = ComplexMatrix::from_entries(
            3,
            vec![
                c(1.0, 0.5),
                c(2.0, 0.0),
                c(0.0, -1.0),
                c(0.0, 1.0),
                c(-2.0, 0.0),
                c(0.5, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(3.0, -0.5),
            ],
        );
        let coeffs = characteristic_polynomial(&a);
        let max_coef = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let set = eigenvalues(&a).unwrap();
        for &lambda in &set.values {
            assert!(horner(&coeffs, lambda).norm() <= 1e-9 * max_coef);
        }
    }

    #[test]
    fn eigenvectors_satisfy_eigen_equation() {
        let a = ComplexMatrix::from_entries(
            3,
            vec![
                c(2.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(-1.0, 0.0),
                c(0.5, 0.0),
                c(0.3, 0.0),
                c(0.0, 0.0),
                c(4.0, 0.0),
            ],
        );
        let set = eigen_decomposition(&a).unwrap();
        let vectors = set.vectors.as_ref().unwrap();
        for (lambda, v) in set.values.iter().zip(vectors.iter()) {
            let av = a.matvec(v);
            let resid: f64 = av
                .iter()
                .zip(v.iter())
                .map(|(avi, vi)| (avi - lambda * vi).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-10 * a.max_abs(), "residual {resid}");
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn repeated_eigenvalues_converge_to_cluster() {
        // (λ-1)² roots: Durand-Kerner stalls on steps but the residual
        // criterion accepts the rounding-floor cluster.
        let mut a = ComplexMatrix::identity(2);
        a[(0, 1)] = c(1e-8, 0.0);
        let set = eigenvalues(&a).unwrap();
        for v in &set.values {
            assert!((v - c(1.0, 0.0)).norm() < 1e-3);
        }
        let sum: C64 = set.values.iter().sum();
        assert!((sum - a.trace()).norm() < 1e-9);
    }
}
