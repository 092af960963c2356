//! Dense spectrum of the reduced generator.

use crate::error::{FsiError, Result};
use crate::generator::Generator;
use crate::sparse::{dot, norm2, Csr, LuSolver};

pub const DEFAULT_CAP: usize = 6000;
/// Eigenvalues with modulus at most this are counted as zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// `(re, im)`, sorted by decreasing real part, then by imaginary part.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Index of the minimum-modulus eigenvalue.
    pub zero_index: usize,
    /// `−max Re λ` over the remaining eigenvalues.
    pub gap: f64,
    /// `|⟨v, n0⟩_H| / (‖v‖_H ‖n0‖_H)` for the eigenvector `v` of the zero eigenvalue.
    pub alignment: f64,
    /// How many eigenvalues have modulus at most [`ZERO_TOL`].
    pub near_zero: usize,
}

impl SpectrumReport {
    pub fn zero_eigenvalue(&self) -> (f64, f64) {
        self.eigenvalues[self.zero_index]
    }

    /// True when every eigenvalue other than the zero one has negative real part.
    pub fn stable_off_null(&self) -> bool {
        self.gap > 0.0
    }
}

pub fn spectrum(generator: &Generator, n0: &[f64], cap: usize) -> Result<SpectrumReport> {
    spectrum_of(&generator.a, generator.gram(), n0, cap)
}

/// Eigenvalues of `a` plus the alignment of its minimum-modulus eigenvector
/// with `n0` in the metric `gram`. The eigenvector comes from inverse
/// iteration about the identified eigenvalue.
pub fn spectrum_of(a: &Csr, gram: &Csr, n0: &[f64], cap: usize) -> Result<SpectrumReport> {
    let n = a.nrows();
    if n > cap {
        return Err(FsiError::Capacity { order: n, cap });
    }
    if n == 0 || n0.len() != n {
        return Err(FsiError::Dimension("spectrum needs a nonempty square matrix and matching n0".into()));
    }
    let mut dense = faer::Mat::<f64>::zeros(n, n);
    for (i, j, v) in a.triplets() {
        dense[(i, j)] += v;
    }
    let ev = dense
        .eigenvalues()
        .map_err(|e| FsiError::Solver(format!("eigenvalue iteration failed: {e:?}")))?;
    let mut eigenvalues: Vec<(f64, f64)> = ev.iter().map(|z| (z.re, z.im)).collect();
    eigenvalues.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.total_cmp(&y.1)));
    let modulus = |z: &(f64, f64)| z.0.hypot(z.1);
    let zero_index = (0..n)
        .min_by(|&i, &j| modulus(&eigenvalues[i]).total_cmp(&modulus(&eigenvalues[j])))
        .unwrap_or(0);
    let gap = -eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != zero_index)
        .map(|(_, z)| z.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let near_zero = eigenvalues.iter().filter(|z| modulus(z) <= ZERO_TOL).count();

    let z = eigenvalues[zero_index];
    let alignment = if z.1 == 0.0 {
        let v = inverse_iteration(a, z.0)?;
        let nn = dot(n0, &gram.mul_vec(n0)).sqrt();
        let vv = dot(&v, &gram.mul_vec(&v)).sqrt();
        dot(&v, &gram.mul_vec(n0)).abs() / (nn * vv)
    } else {
        // a complex pair cannot align with a real null vector
        0.0
    };
    Ok(SpectrumReport {
        eigenvalues,
        zero_index,
        gap,
        alignment,
        near_zero,
    })
}

fn inverse_iteration(a: &Csr, lambda: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let scale = a.triplets().iter().fold(0.0f64, |m, t| m.max(t.2.abs())).max(1.0);
    let shift = lambda + 1e-9 * scale;
    let shifted = a.add_scaled(1.0, &Csr::identity(n), -shift);
    let lu = LuSolver::new(&shifted)?;
    let mut v: Vec<f64> = (0..n).map(|k| 1.0 + (k % 7) as f64 * 0.1).collect();
    for _ in 0..4 {
        let (x, _) = lu.solve(&v);
        let nx = norm2(&x);
        if !(nx.is_finite() && nx > 0.0) {
            return Err(FsiError::Solver("inverse iteration broke down".into()));
        }
        v = x.iter().map(|xi| xi / nx).collect();
    }
    Ok(v)
}
