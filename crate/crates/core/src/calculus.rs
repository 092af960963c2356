//! Summation-by-parts difference operators and trapezoid quadrature.
//!
//! The one-dimensional first derivative is the diagonal-norm SBP pair
//! `D = H⁻¹Q` with `Q + Qᵀ = diag(−1, 0, …, 0, 1)`: central differences in
//! the interior, one-sided closures at the ends, `H` the trapezoid weights.
//! Two-dimensional operators are tensor products, so every discrete Green
//! identity used by the energy bookkeeping holds to rounding.
//!
//! The beam uses a ghost-node second difference `D2` with the clamped
//! conditions eliminated and builds the fourth difference as
//! `D4 = Wb⁻¹ D2ᵀ Wb D2`, which makes `⟨D4 w, v⟩ = ⟨D2 w, D2 v⟩` an identity.

use crate::error::{FsiError, Result};
use crate::grid::{BeamField, Geometry, ScalarField, State, VectorField};
use crate::sparse::{wdot, Csr};

/// Lamé coefficients, drag, and the pressure stabilization weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub nu: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Weight `α` of the `α h²`-scaled compact pressure Laplacian in the
    /// continuity equation. Central differences do not see odd-even pressure
    /// modes, so with `α = 0` the generator has four zero eigenvalues.
    pub pstab: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            eta: 1.0,
            pstab: 1.0,
        }
    }
}

impl Coefficients {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nu.is_finite()
            && self.nu > 0.0
            && self.lambda.is_finite()
            && self.lambda >= 0.0
            && self.eta.is_finite()
            && self.eta > 0.0
            && self.pstab.is_finite()
            && self.pstab >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(FsiError::Config(format!(
                "need nu > 0, lambda >= 0, eta > 0, pstab >= 0; got nu={}, lambda={}, eta={}, pstab={}",
                self.nu, self.lambda, self.eta, self.pstab
            )))
        }
    }
}

/// 1-D SBP first derivative on `n + 1` nodes with spacing `h`.
pub fn sbp_first_derivative(n: usize, h: f64) -> (Csr, Vec<f64>) {
    let mut t = Vec::with_capacity(2 * n + 2);
    t.push((0, 0, -1.0 / h));
    t.push((0, 1, 1.0 / h));
    for i in 1..n {
        t.push((i, i - 1, -0.5 / h));
        t.push((i, i + 1, 0.5 / h));
    }
    t.push((n, n - 1, -1.0 / h));
    t.push((n, n, 1.0 / h));
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    (Csr::from_triplets(n + 1, n + 1, &t), w)
}

/// Compact Neumann stiffness `(1/h)·tridiag(−1, 2, −1)` with unit end diagonals.
fn compact_stiffness(n: usize, h: f64) -> Csr {
    let mut t = Vec::with_capacity(4 * n);
    for e in 0..n {
        t.push((e, e, 1.0 / h));
        t.push((e + 1, e + 1, 1.0 / h));
        t.push((e, e + 1, -1.0 / h));
        t.push((e + 1, e, -1.0 / h));
    }
    Csr::from_triplets(n + 1, n + 1, &t)
}

/// The assembled difference and quadrature operators for one geometry.
#[derive(Debug, Clone)]
pub struct DiscreteCalculus {
    pub geom: Geometry,
    pub coef: Coefficients,
    /// x-derivative on flow nodes.
    pub dx: Csr,
    /// y-derivative on flow nodes.
    pub dy: Csr,
    /// Flow quadrature weights (trapezoid tensor product).
    pub wo: Vec<f64>,
    /// 1-D trapezoid weights along x and y.
    pub hx_w: Vec<f64>,
    pub hy_w: Vec<f64>,
    /// Beam trapezoid weights, endpoints included.
    pub wb: Vec<f64>,
    /// Beam second difference: interior displacements to all beam nodes.
    pub d2: Csr,
    /// Beam stiffness `D2ᵀ Wb D2` on interior nodes.
    pub stiffness: Csr,
    /// Beam slope (central, zero at the clamped ends) on interior nodes.
    pub slope: Csr,
    /// Strain operator `[u1; u2] → [ε11; ε22; ε12]`.
    pub strain_op: Csr,
    /// Constitutive map `ε → σ` on the stacked strain components.
    pub constitutive: Csr,
    /// Divergence of a stacked stress `[σ11; σ22; σ12]`.
    pub stress_div_op: Csr,
    /// `hx²·(Hy ⊗ Sx) + hy²·(Sy ⊗ Hx)`: symmetric, semidefinite, kernel = constants.
    pub pressure_stiffness: Csr,
}

impl DiscreteCalculus {
    pub fn new(geom: &Geometry, coef: Coefficients) -> Result<Self> {
        coef.validate()?;
        let g = *geom;
        let n = g.n_nodes();
        let (d1x, hx_w) = sbp_first_derivative(g.nx, g.hx);
        let (d1y, hy_w) = sbp_first_derivative(g.ny, g.hy);
        let dx = kron_identity_left(&d1x, g.ny + 1);
        let dy = kron_identity_right(&d1y, g.nx + 1);
        let wo: Vec<f64> = (0..=g.ny)
            .flat_map(|j| hx_w.iter().map(|wx| wx * hy_w[j]).collect::<Vec<_>>())
            .collect();

        let nb = g.nx - 1;
        let h2 = g.hx * g.hx;
        let mut t = Vec::new();
        for i in 0..=g.nx {
            for (j, c) in [(i as isize - 1, 1.0), (i as isize, -2.0), (i as isize + 1, 1.0)] {
                // ghost nodes mirror across the clamped ends
                let jj = if j < 0 {
                    1
                } else if j as usize > g.nx {
                    g.nx - 1
                } else {
                    j as usize
                };
                if (1..g.nx).contains(&jj) {
                    t.push((i, jj - 1, c / h2));
                }
            }
        }
        let d2 = Csr::from_triplets(g.nx + 1, nb, &t);
        let wb = hx_w.clone();
        let stiffness = d2.transpose().scale_cols(&wb).matmul(&d2);
        let mut t = Vec::new();
        for k in 0..nb {
            if k > 0 {
                t.push((k, k - 1, -0.5 / g.hx));
            }
            if k + 1 < nb {
                t.push((k, k + 1, 0.5 / g.hx));
            }
        }
        let slope = Csr::from_triplets(nb, nb, &t);

        let strain_op = Csr::block(
            &[n, n, n],
            &[n, n],
            &[
                (0, 0, &dx),
                (1, 1, &dy),
                (2, 0, &dy.scale(0.5)),
                (2, 1, &dx.scale(0.5)),
            ],
        );
        let id = Csr::identity(n);
        let two_nu = 2.0 * coef.nu;
        let lam = coef.lambda;
        let constitutive = Csr::block(
            &[n, n, n],
            &[n, n, n],
            &[
                (0, 0, &id.scale(two_nu + lam)),
                (0, 1, &id.scale(lam)),
                (1, 0, &id.scale(lam)),
                (1, 1, &id.scale(two_nu + lam)),
                (2, 2, &id.scale(two_nu)),
            ],
        );
        let stress_div_op = Csr::block(
            &[n, n],
            &[n, n, n],
            &[(0, 0, &dx), (0, 2, &dy), (1, 1, &dy), (1, 2, &dx)],
        );
        let hy_rows: Vec<f64> = (0..n).map(|k| hy_w[k / (g.nx + 1)]).collect();
        let hx_rows: Vec<f64> = (0..n).map(|k| hx_w[k % (g.nx + 1)]).collect();
        let pressure_stiffness = kron_identity_left(&compact_stiffness(g.nx, g.hx), g.ny + 1)
            .scale_rows(&hy_rows)
            .scale(g.hx * g.hx)
            .add(
                &kron_identity_right(&compact_stiffness(g.ny, g.hy), g.nx + 1)
                    .scale_rows(&hx_rows)
                    .scale(g.hy * g.hy),
            );
        Ok(Self {
            geom: g,
            coef,
            dx,
            dy,
            wo,
            hx_w,
            hy_w,
            wb,
            d2,
            stiffness,
            slope,
            strain_op,
            constitutive,
            stress_div_op,
            pressure_stiffness,
        })
    }

    pub fn grad(&self, p: &ScalarField) -> VectorField {
        VectorField {
            u1: ScalarField(self.dx.mul_vec(&p.0)),
            u2: ScalarField(self.dy.mul_vec(&p.0)),
        }
    }

    pub fn div(&self, u: &VectorField) -> ScalarField {
        let a = self.dx.mul_vec(&u.u1.0);
        let b = self.dy.mul_vec(&u.u2.0);
        ScalarField(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    /// Strain components `[ε11, ε22, ε12]`.
    pub fn strain(&self, u: &VectorField) -> [ScalarField; 3] {
        split3(self.strain_op.mul_vec(&u.stacked()))
    }

    /// Stress components `[σ11, σ22, σ12]`.
    pub fn stress(&self, u: &VectorField) -> [ScalarField; 3] {
        let e = self.strain_op.mul_vec(&u.stacked());
        split3(self.constitutive.mul_vec(&e))
    }

    pub fn stress_div(&self, u: &VectorField) -> VectorField {
        let s = self.constitutive.mul_vec(&self.strain_op.mul_vec(&u.stacked()));
        VectorField::from_stacked(&self.stress_div_op.mul_vec(&s))
    }

    /// `⟨σ(u), ε(v)⟩` with the quadrature `Wo`.
    pub fn elastic_form(&self, u: &VectorField, v: &VectorField) -> f64 {
        let [s11, s22, s12] = self.stress(u);
        let [e11, e22, e12] = self.strain(v);
        wdot(&self.wo, &s11.0, &e11.0)
            + wdot(&self.wo, &s22.0, &e22.0)
            + 2.0 * wdot(&self.wo, &s12.0, &e12.0)
    }

    /// Matrix of the elastic form on stacked velocities: `vᵀ K u = ⟨σ(u), ε(v)⟩`.
    pub fn elastic_matrix(&self) -> Csr {
        let mut w = self.wo.clone();
        w.extend_from_slice(&self.wo);
        w.extend(self.wo.iter().map(|x| 2.0 * x));
        self.strain_op
            .transpose()
            .scale_cols(&w)
            .matmul(&self.constitutive)
            .matmul(&self.strain_op)
    }

    /// `α pᵀ S p`, the energy removed by the pressure stabilization.
    pub fn pressure_dissipation(&self, p: &ScalarField) -> f64 {
        self.coef.pstab * crate::sparse::dot(&p.0, &self.pressure_stiffness.mul_vec(&p.0))
    }

    pub fn inner_o(&self, a: &ScalarField, b: &ScalarField) -> f64 {
        wdot(&self.wo, &a.0, &b.0)
    }

    pub fn inner_ov(&self, a: &VectorField, b: &VectorField) -> f64 {
        self.inner_o(&a.u1, &b.u1) + self.inner_o(&a.u2, &b.u2)
    }

    pub fn inner_b(&self, a: &BeamField, b: &BeamField) -> f64 {
        wdot(&self.wb, &a.0, &b.0)
    }

    /// Boundary sum `Σ_{∂O} weight · f · (u·n)`.
    pub fn boundary_flux(&self, f: &ScalarField, u: &VectorField) -> f64 {
        let g = &self.geom;
        let mut s = 0.0;
        for j in 0..=g.ny {
            let (l, r) = (g.idx(0, j), g.idx(g.nx, j));
            s += self.hy_w[j] * (f.0[r] * u.u1.0[r] - f.0[l] * u.u1.0[l]);
        }
        for i in 0..=g.nx {
            let (b, t) = (g.idx(i, 0), g.idx(i, g.ny));
            s += self.hx_w[i] * (f.0[t] * u.u2.0[t] - f.0[b] * u.u2.0[b]);
        }
        s
    }

    /// Boundary sum `Σ_{∂O} weight · (σ(u) n)·v`.
    pub fn traction_flux(&self, u: &VectorField, v: &VectorField) -> f64 {
        let g = &self.geom;
        let [s11, s22, s12] = self.stress(u);
        let (v1, v2) = (&v.u1.0, &v.u2.0);
        let mut s = 0.0;
        for j in 0..=g.ny {
            let (l, r) = (g.idx(0, j), g.idx(g.nx, j));
            s += self.hy_w[j]
                * ((s11.0[r] * v1[r] + s12.0[r] * v2[r]) - (s11.0[l] * v1[l] + s12.0[l] * v2[l]));
        }
        for i in 0..=g.nx {
            let (b, t) = (g.idx(i, 0), g.idx(i, g.ny));
            s += self.hx_w[i]
                * ((s12.0[t] * v1[t] + s22.0[t] * v2[t]) - (s12.0[b] * v1[b] + s22.0[b] * v2[b]));
        }
        s
    }

    /// Restriction of a flow field to the interface `y = 0`.
    pub fn trace_top(&self, f: &ScalarField) -> BeamField {
        let g = &self.geom;
        BeamField((0..=g.nx).map(|i| f.0[g.top(i)]).collect())
    }

    /// Restriction to the rigid part `S` of the boundary, in node order.
    pub fn trace_rigid(&self, f: &ScalarField) -> Vec<f64> {
        let g = &self.geom;
        (0..=g.ny)
            .flat_map(|j| (0..=g.nx).map(move |i| (i, j)))
            .filter(|&(i, j)| i == 0 || j == 0 || i == g.nx)
            .map(|(i, j)| f.0[g.idx(i, j)])
            .collect()
    }

    /// Beam second difference at all nodes of a clamped displacement.
    pub fn beam_d2(&self, w: &BeamField) -> BeamField {
        BeamField(self.d2.mul_vec(w.interior()))
    }

    /// Beam fourth difference `Wb⁻¹ D2ᵀ Wb D2 w`; zero at the clamped ends.
    pub fn beam_d4(&self, w: &BeamField) -> BeamField {
        let kw = self.stiffness.mul_vec(w.interior());
        let inner: Vec<f64> = kw.iter().zip(&self.wb[1..]).map(|(k, h)| k / h).collect();
        BeamField::from_interior(&self.geom, &inner)
    }

    /// Beam slope (central, zero at the clamped ends).
    pub fn beam_slope(&self, w: &BeamField) -> BeamField {
        BeamField::from_interior(&self.geom, &self.slope.mul_vec(w.interior()))
    }

    /// Energy inner product `⟨p,p'⟩ + ⟨u,u'⟩ + ⟨D2w, D2w'⟩ + ⟨v,v'⟩`.
    pub fn inner_h(&self, a: &State, b: &State) -> Result<f64> {
        a.check_grid(&self.geom)?;
        b.check_grid(&self.geom)?;
        Ok(self.inner_o(&a.p, &b.p)
            + self.inner_ov(&a.u, &b.u)
            + self.inner_b(&self.beam_d2(&a.w), &self.beam_d2(&b.w))
            + self.inner_b(&a.v, &b.v))
    }

    pub fn norm_h(&self, a: &State) -> Result<f64> {
        Ok(self.inner_h(a, a)?.sqrt())
    }

    /// Discrete H¹ norm `(‖f‖² + ‖Grad f‖²)^½`.
    pub fn h1_norm(&self, f: &ScalarField) -> f64 {
        let g = self.grad(f);
        (self.inner_o(f, f) + self.inner_ov(&g, &g)).sqrt()
    }

    /// Relative residuals of the discrete Green identities for one pair of
    /// random-like inputs: `[grad/div, elasticity, beam symmetry]`.
    pub fn green_residuals(
        &self,
        p: &ScalarField,
        u: &VectorField,
        v: &VectorField,
        w1: &BeamField,
        w2: &BeamField,
    ) -> [f64; 3] {
        let gp = self.grad(p);
        let lhs = self.inner_ov(&gp, u) + self.inner_o(p, &self.div(u));
        let rhs = self.boundary_flux(p, u);
        let scale1 = self.inner_ov(&gp, &gp).sqrt() * self.inner_ov(u, u).sqrt()
            + self.inner_o(p, p).sqrt() * self.inner_o(&self.div(u), &self.div(u)).sqrt();
        let r1 = (lhs - rhs).abs() / scale1.max(f64::MIN_POSITIVE);

        let sd = self.stress_div(u);
        let lhs = self.inner_ov(&sd, v);
        let a = self.elastic_form(u, v);
        let t = self.traction_flux(u, v);
        let scale2 = self.inner_ov(&sd, &sd).sqrt() * self.inner_ov(v, v).sqrt() + a.abs() + t.abs();
        let r2 = (lhs + a - t).abs() / scale2.max(f64::MIN_POSITIVE);

        let d4 = self.beam_d4(w1);
        let lhs = self.inner_b(&d4, w2);
        let rhs = self.inner_b(&self.beam_d2(w1), &self.beam_d2(w2));
        let scale3 = self.inner_b(&d4, &d4).sqrt() * self.inner_b(w2, w2).sqrt() + rhs.abs();
        let r3 = (lhs - rhs).abs() / scale3.max(f64::MIN_POSITIVE);
        [r1, r2, r3]
    }
}

fn split3(v: Vec<f64>) -> [ScalarField; 3] {
    let n = v.len() / 3;
    [
        ScalarField(v[..n].to_vec()),
        ScalarField(v[n..2 * n].to_vec()),
        ScalarField(v[2 * n..].to_vec()),
    ]
}

/// `I_m ⊗ D`: apply `D` along x (fastest index) in each of `m` rows.
fn kron_identity_left(d: &Csr, m: usize) -> Csr {
    let n = d.nrows();
    let mut t = Vec::with_capacity(m * d.nnz());
    for j in 0..m {
        for (r, c, v) in d.triplets() {
            t.push((j * n + r, j * n + c, v));
        }
    }
    Csr::from_triplets(m * n, m * n, &t)
}

/// `D ⊗ I_m`: apply `D` along y (slow index) in each of `m` columns.
fn kron_identity_right(d: &Csr, m: usize) -> Csr {
    let n = d.nrows();
    let mut t = Vec::with_capacity(m * d.nnz());
    for (r, c, v) in d.triplets() {
        for i in 0..m {
            t.push((r * m + i, c * m + i, v));
        }
    }
    Csr::from_triplets(m * n, m * n, &t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calc(n: usize) -> DiscreteCalculus {
        DiscreteCalculus::new(&Geometry::unit(n).unwrap(), Coefficients::default()).unwrap()
    }

    #[test]
    fn sbp_property_holds() {
        let (d, h) = sbp_first_derivative(8, 0.125);
        let q = d.scale_rows(&h);
        let s = q.add(&q.transpose()).to_dense();
        for (i, row) in s.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let expect = match (i, j) {
                    (0, 0) => -1.0,
                    (8, 8) => 1.0,
                    _ => 0.0,
                };
                assert!((v - expect).abs() < 1e-14, "({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn gradient_annihilates_constants() {
        let c = calc(16);
        let g = c.grad(&ScalarField::constant(&c.geom, 3.5));
        assert!(g.u1.max_abs() < 1e-12 && g.u2.max_abs() < 1e-12);
    }

    #[test]
    fn quadrature_integrates_constants() {
        let g = Geometry::new(2.0, 0.5, 12, 10).unwrap();
        let c = DiscreteCalculus::new(&g, Coefficients::default()).unwrap();
        let one = ScalarField::constant(&g, 1.0);
        assert!((c.inner_o(&one, &one) - 1.0).abs() < 1e-14);
        let b = BeamField::constant(&g, 1.0);
        assert!((c.inner_b(&b, &b) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let g = Geometry::unit(8).unwrap();
        for coef in [
            Coefficients { nu: 0.0, ..Default::default() },
            Coefficients { lambda: -1.0, ..Default::default() },
            Coefficients { eta: 0.0, ..Default::default() },
            Coefficients { pstab: -1.0, ..Default::default() },
        ] {
            assert!(matches!(DiscreteCalculus::new(&g, coef), Err(FsiError::Config(_))));
        }
    }

    #[test]
    fn beam_symmetry_on_polynomial() {
        let c = calc(16);
        let w = c.geom.sample_beam(|x| x * x * (1.0 - x) * (1.0 - x));
        let lhs = c.inner_b(&c.beam_d4(&w), &w);
        let d2 = c.beam_d2(&w);
        let rhs = c.inner_b(&d2, &d2);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn elastic_matrix_matches_form() {
        let c = calc(8);
        let u = VectorField {
            u1: c.geom.sample(|x, y| (x * y).sin()),
            u2: c.geom.sample(|x, y| x * x - y),
        };
        let v = VectorField {
            u1: c.geom.sample(|x, y| x + 2.0 * y * y),
            u2: c.geom.sample(|x, y| (x - y).cos()),
        };
        let k = c.elastic_matrix();
        let direct = c.elastic_form(&u, &v);
        let via = crate::sparse::dot(&v.stacked(), &k.mul_vec(&u.stacked()));
        assert!((direct - via).abs() < 1e-12 * direct.abs().max(1.0));
        assert!(c.elastic_form(&u, &u) >= 0.0);
    }
}
