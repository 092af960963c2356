//! Elliptic solves shared by the null-space construction and the multiplier
//! ledger: the clamped beam inverse, the Neumann problem and the Leray split.
//!
//! The Neumann operator is the variational Laplacian `Gradᵀ Wo Grad`, so
//! `⟨Grad f, Grad ψ⟩ = ⟨f, rhs⟩` holds exactly for any `f`. The same
//! factorization serves the Helmholtz split, which makes the projector
//! `Wo`-orthogonal by construction.

use crate::calculus::DiscreteCalculus;
use crate::error::{FsiError, Result};
use crate::grid::{BeamField, ScalarField, VectorField};
use crate::sparse::{Csr, LuSolver};

const SOLVE_TOL: f64 = 1e-12;

/// Inverse of the clamped beam operator `D4`.
#[derive(Debug)]
pub struct BeamSolver {
    lu: LuSolver,
}

impl BeamSolver {
    pub fn new(calc: &DiscreteCalculus) -> Result<Self> {
        // positive-definite by construction; the LU would fail on a singular matrix
        Ok(Self {
            lu: LuSolver::new(&calc.stiffness)?,
        })
    }

    /// Returns `w` with `D4 w = rhs` and clamped ends.
    pub fn solve(&self, calc: &DiscreteCalculus, rhs: &BeamField) -> Result<BeamField> {
        if !rhs.is_finite() {
            return Err(FsiError::Config("beam load is not finite".into()));
        }
        let b: Vec<f64> = rhs
            .interior()
            .iter()
            .zip(&calc.wb[1..])
            .map(|(f, h)| f * h)
            .collect();
        let (w, res) = self.lu.solve(&b);
        if res > SOLVE_TOL {
            return Err(FsiError::Solver(format!("beam solve residual {res:.3e}")));
        }
        Ok(BeamField::from_interior(&calc.geom, &w))
    }
}

/// Interior source and interface flux of the auxiliary Neumann problem.
#[derive(Debug, Clone)]
pub struct NeumannData {
    pub f: ScalarField,
    pub g: BeamField,
}

#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub psi: ScalarField,
    /// `‖ψ‖_{H¹,h} + ‖ψ‖`
    pub norm_surrogate: f64,
    /// `norm_surrogate / (‖f‖ + ‖g‖)`, or zero for vanishing data.
    pub bound_ratio: f64,
}

/// `u = Pu + Grad q` with `Pu` weakly solenoidal and `q` of zero mean.
#[derive(Debug, Clone)]
pub struct LerayDecomposition {
    pub pu: VectorField,
    pub q: ScalarField,
    /// `‖q‖ / ‖u‖`, or zero when `u` vanishes.
    pub q_ratio: f64,
}

/// Factorized Neumann Laplacian with one node pinned to remove the constants.
#[derive(Debug)]
pub struct NeumannSolver {
    lu: LuSolver,
    laplacian: Csr,
    keep: Vec<usize>,
}

impl NeumannSolver {
    pub fn new(calc: &DiscreteCalculus) -> Result<Self> {
        let lap = calc
            .dx
            .transpose()
            .scale_cols(&calc.wo)
            .matmul(&calc.dx)
            .add(&calc.dy.transpose().scale_cols(&calc.wo).matmul(&calc.dy));
        let n = calc.geom.n_nodes();
        let keep: Vec<usize> = (1..n).collect();
        let reduced = lap.select_rows(&keep).select_cols(&keep);
        Ok(Self {
            lu: LuSolver::new(&reduced)?,
            laplacian: lap,
            keep,
        })
    }

    /// The assembled `Gradᵀ Wo Grad`.
    pub fn laplacian(&self) -> &Csr {
        &self.laplacian
    }

    /// Compatibility defect `⟨f, 1⟩_Wo + ⟨g, 1⟩_Wb`.
    pub fn defect(calc: &DiscreteCalculus, data: &NeumannData) -> f64 {
        let one = ScalarField::constant(&calc.geom, 1.0);
        let bone = BeamField::constant(&calc.geom, 1.0);
        calc.inner_o(&data.f, &one) + calc.inner_b(&data.g, &bone)
    }

    pub fn solve(&self, calc: &DiscreteCalculus, data: &NeumannData) -> Result<NeumannSolution> {
        let g = &calc.geom;
        let fnorm = calc.inner_o(&data.f, &data.f).sqrt();
        let gnorm = calc.inner_b(&data.g, &data.g).sqrt();
        let defect = Self::defect(calc, data);
        let tol = 1e-10 * (fnorm + gnorm);
        if defect.abs() > tol {
            return Err(FsiError::Compatibility {
                defect: defect.abs(),
                tol,
            });
        }
        let mut rhs: Vec<f64> = data.f.0.iter().zip(&calc.wo).map(|(f, w)| f * w).collect();
        for i in 0..=g.nx {
            rhs[g.top(i)] += calc.hx_w[i] * data.g.0[i];
        }
        let psi = self.solve_raw(calc, &rhs)?;
        let norm_surrogate = calc.h1_norm(&psi) + calc.inner_o(&psi, &psi).sqrt();
        let denom = fnorm + gnorm;
        Ok(NeumannSolution {
            psi,
            norm_surrogate,
            bound_ratio: if denom > 0.0 { norm_surrogate / denom } else { 0.0 },
        })
    }

    /// Solves `Gradᵀ Wo Grad ψ = rhs` for compatible `rhs`, zero-mean normalized.
    fn solve_raw(&self, calc: &DiscreteCalculus, rhs: &[f64]) -> Result<ScalarField> {
        let b: Vec<f64> = self.keep.iter().map(|&k| rhs[k]).collect();
        let (x, res) = self.lu.solve(&b);
        if res > SOLVE_TOL {
            return Err(FsiError::Solver(format!("Neumann solve residual {res:.3e}")));
        }
        let mut psi = vec![0.0; rhs.len()];
        for (k, v) in self.keep.iter().zip(x) {
            psi[*k] = v;
        }
        let area: f64 = calc.wo.iter().sum();
        let mean = crate::sparse::dot(&calc.wo, &psi) / area;
        psi.iter_mut().for_each(|v| *v -= mean);
        Ok(ScalarField(psi))
    }

    /// Helmholtz split of `u` on the shared factorization.
    pub fn leray(&self, calc: &DiscreteCalculus, u: &VectorField) -> Result<LerayDecomposition> {
        if !u.is_finite() {
            return Err(FsiError::Config("velocity field is not finite".into()));
        }
        let wu1: Vec<f64> = u.u1.0.iter().zip(&calc.wo).map(|(a, w)| a * w).collect();
        let wu2: Vec<f64> = u.u2.0.iter().zip(&calc.wo).map(|(a, w)| a * w).collect();
        let rhs: Vec<f64> = calc
            .dx
            .transpose()
            .mul_vec(&wu1)
            .iter()
            .zip(calc.dy.transpose().mul_vec(&wu2))
            .map(|(a, b)| a + b)
            .collect();
        let q = self.solve_raw(calc, &rhs)?;
        let gq = calc.grad(&q);
        let pu = VectorField {
            u1: ScalarField(u.u1.0.iter().zip(&gq.u1.0).map(|(a, b)| a - b).collect()),
            u2: ScalarField(u.u2.0.iter().zip(&gq.u2.0).map(|(a, b)| a - b).collect()),
        };
        let un = calc.inner_ov(u, u).sqrt();
        let qn = calc.inner_o(&q, &q).sqrt();
        Ok(LerayDecomposition {
            pu,
            q,
            q_ratio: if un > 0.0 { qn / un } else { 0.0 },
        })
    }
}

/// Weak solenoidality defect `max |Gradᵀ Wo v|`, scaled by the node weights:
/// zero iff `⟨v, Grad φ⟩ = 0` for every `φ`. At interior nodes this is
/// exactly `Div v`.
pub fn weak_divergence(calc: &DiscreteCalculus, v: &VectorField) -> ScalarField {
    let wv1: Vec<f64> = v.u1.0.iter().zip(&calc.wo).map(|(a, w)| a * w).collect();
    let wv2: Vec<f64> = v.u2.0.iter().zip(&calc.wo).map(|(a, w)| a * w).collect();
    let g: Vec<f64> = calc
        .dx
        .transpose()
        .mul_vec(&wv1)
        .iter()
        .zip(calc.dy.transpose().mul_vec(&wv2))
        .zip(&calc.wo)
        .map(|((a, b), w)| -(a + b) / w)
        .collect();
    ScalarField(g)
}
