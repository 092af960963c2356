//! The semigroup generator `A` on the reduced state space.
//!
//! The boundary conditions are imposed by elimination: `u1` vanishes on the
//! side walls, `u2` on the bottom wall, and on the interface `u2` is slaved to
//! the beam through `u2 = v + κ U1 ∂x w`. What remains is
//!
//! ```text
//! reduced = [p (all nodes), u1 (free), u2 (free), w (interior), v (interior)]
//! ```
//!
//! and `A = F·T`, where `T` expands a reduced vector to the full nodal layout
//! and `F` is the Galerkin right-hand side obtained by testing the momentum
//! and plate equations with the same constrained space. The interface fluid
//! mass `Wo|top` is lumped with the plate mass. With this choice the energy
//! rate is an exact algebraic identity, see [`Generator::energy_rates`].

use crate::ambient::AmbientField;
use crate::calculus::DiscreteCalculus;
use crate::elliptic::BeamSolver;
use crate::error::{FsiError, Result};
use crate::grid::{BeamField, Geometry, ScalarField, State, VectorField};
use crate::sparse::{dot, Csr};

/// Bookkeeping between the full nodal layout and the reduced unknowns.
///
/// Full layout: `[p, u1, u2, w_int, v_int]` with `3·Np + 2·nb` entries.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub geom: Geometry,
    pub n_nodes: usize,
    pub n_beam: usize,
    pub u1_free: Vec<usize>,
    pub u2_free: Vec<usize>,
    red_to_full: Vec<usize>,
}

impl DofMap {
    pub fn new(geom: &Geometry) -> Self {
        let g = *geom;
        let np = g.n_nodes();
        let nb = g.nx - 1;
        let mut u1_free = Vec::new();
        let mut u2_free = Vec::new();
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                if i != 0 && i != g.nx {
                    u1_free.push(g.idx(i, j));
                }
                if j != 0 && j != g.ny {
                    u2_free.push(g.idx(i, j));
                }
            }
        }
        let mut red_to_full: Vec<usize> = (0..np).collect();
        red_to_full.extend(u1_free.iter().map(|k| np + k));
        red_to_full.extend(u2_free.iter().map(|k| 2 * np + k));
        red_to_full.extend((0..2 * nb).map(|m| 3 * np + m));
        Self {
            geom: g,
            n_nodes: np,
            n_beam: nb,
            u1_free,
            u2_free,
            red_to_full,
        }
    }

    pub fn reduced_len(&self) -> usize {
        self.red_to_full.len()
    }

    pub fn full_len(&self) -> usize {
        3 * self.n_nodes + 2 * self.n_beam
    }

    pub fn off_u1(&self) -> usize {
        self.n_nodes
    }

    pub fn off_u2(&self) -> usize {
        self.n_nodes + self.u1_free.len()
    }

    pub fn off_w(&self) -> usize {
        self.off_u2() + self.u2_free.len()
    }

    pub fn off_v(&self) -> usize {
        self.off_w() + self.n_beam
    }

    /// Full vector of a state; beam endpoints are dropped.
    pub fn full_from_state(&self, s: &State) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.full_len());
        f.extend_from_slice(&s.p.0);
        f.extend_from_slice(&s.u.u1.0);
        f.extend_from_slice(&s.u.u2.0);
        f.extend_from_slice(s.w.interior());
        f.extend_from_slice(s.v.interior());
        f
    }

    pub fn state_from_full(&self, f: &[f64]) -> State {
        let (np, nb) = (self.n_nodes, self.n_beam);
        State {
            p: ScalarField(f[..np].to_vec()),
            u: VectorField {
                u1: ScalarField(f[np..2 * np].to_vec()),
                u2: ScalarField(f[2 * np..3 * np].to_vec()),
            },
            w: BeamField::from_interior(&self.geom, &f[3 * np..3 * np + nb]),
            v: BeamField::from_interior(&self.geom, &f[3 * np + nb..]),
        }
    }

    /// Picks the reduced unknowns out of a full vector; slaved entries are ignored.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.red_to_full.iter().map(|&k| full[k]).collect()
    }
}

/// Energy-rate decomposition at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRates {
    /// `⟨A s, s⟩_H` evaluated directly.
    pub total: f64,
    /// `a(u,u) + η‖u‖² + α pᵀSp`, nonnegative.
    pub dissipation: f64,
    /// The pressure stabilization share `α pᵀSp` of `dissipation`.
    pub pressure_dissipation: f64,
    /// `½ Σ Wo·Div U·(p² + |u|²)`.
    pub sdiv: f64,
    /// `κ Σ λ·U1·∂x w` from the interface constraint force.
    pub skappa: f64,
}

impl EnergyRates {
    /// `total − (−dissipation + sdiv + skappa)`; zero up to rounding.
    pub fn balance_residual(&self) -> f64 {
        self.total - (-self.dissipation + self.sdiv + self.skappa)
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub kappa: f64,
    pub dofs: DofMap,
    /// Reduced generator, `reduced × reduced`.
    pub a: Csr,
    /// `T`, `full × reduced`.
    pub expand: Csr,
    /// Skew advection `½(U·Grad + Div(U ·) − Div U)`, `Np × Np`.
    pub advection: Csr,
    /// `R = DivᵀWo p − (K_ela + ηWo + Wo·Adv) u`, `2Np × full`.
    momentum: Csr,
    /// Interface fluid mass `Wo` at interior top nodes.
    mtop: Vec<f64>,
    u1_top: Vec<f64>,
    /// `Gramᵀ` of the energy product on reduced vectors.
    gram: Csr,
}

impl Generator {
    pub fn assemble(calc: &DiscreteCalculus, ambient: &AmbientField, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(FsiError::Config(format!("kappa must be finite, got {kappa}")));
        }
        let g = calc.geom;
        if ambient.u.u1.0.len() != g.n_nodes() {
            return Err(FsiError::Dimension("ambient field on a different grid".into()));
        }
        let dofs = DofMap::new(&g);
        let (np, nb) = (dofs.n_nodes, dofs.n_beam);
        let nfull = dofs.full_len();
        let nred = dofs.reduced_len();
        let eta = calc.coef.eta;

        let u1 = &ambient.u.u1.0;
        let u2 = &ambient.u.u2.0;
        let advection = calc
            .dx
            .scale_rows(u1)
            .add(&calc.dy.scale_rows(u2))
            .add(&calc.dx.scale_cols(u1))
            .add(&calc.dy.scale_cols(u2))
            .sub(&Csr::diag(&ambient.div_u.0))
            .scale(0.5);

        let u1_top: Vec<f64> = (1..g.nx).map(|i| u1[g.top(i)]).collect();
        let mtop: Vec<f64> = (1..g.nx).map(|i| calc.wo[g.top(i)]).collect();
        let wb_int = &calc.wb[1..g.nx];

        // T
        let mut t = Vec::with_capacity(nred + 4 * nb);
        for k in 0..np {
            t.push((k, k, 1.0));
        }
        for (r, &k) in dofs.u1_free.iter().enumerate() {
            t.push((np + k, dofs.off_u1() + r, 1.0));
        }
        for (r, &k) in dofs.u2_free.iter().enumerate() {
            t.push((2 * np + k, dofs.off_u2() + r, 1.0));
        }
        for m in 0..nb {
            let row = 2 * np + g.top(m + 1);
            t.push((row, dofs.off_v() + m, 1.0));
            if kappa != 0.0 {
                for (c, s) in calc.slope.row(m) {
                    t.push((row, dofs.off_w() + c, kappa * u1_top[m] * s));
                }
            }
            t.push((3 * np + m, dofs.off_w() + m, 1.0));
            t.push((3 * np + nb + m, dofs.off_v() + m, 1.0));
        }
        let expand = Csr::from_triplets(nfull, nred, &t);

        // R on the full layout
        let wo2: Vec<f64> = calc.wo.iter().chain(calc.wo.iter()).copied().collect();
        let div_t_wo = Csr::block(
            &[np, np],
            &[np],
            &[
                (0, 0, &calc.dx.transpose().scale_cols(&calc.wo)),
                (1, 0, &calc.dy.transpose().scale_cols(&calc.wo)),
            ],
        );
        let adv2 = Csr::block(&[np, np], &[np, np], &[(0, 0, &advection), (1, 1, &advection)]);
        let u_block = calc
            .elastic_matrix()
            .add(&Csr::diag(&wo2).scale(eta))
            .add(&adv2.scale_rows(&wo2))
            .scale(-1.0);
        let momentum = Csr::block(
            &[2 * np],
            &[np, 2 * np, nb, nb],
            &[(0, 0, &div_t_wo), (0, 1, &u_block)],
        );

        // F
        let inv_wo: Vec<f64> = calc.wo.iter().map(|w| 1.0 / w).collect();
        let neg_adv = advection
            .add(&calc.pressure_stiffness.scale(calc.coef.pstab).scale_rows(&inv_wo))
            .scale(-1.0);
        let neg_dx = calc.dx.scale(-1.0);
        let neg_dy = calc.dy.scale(-1.0);
        let fp = Csr::block(
            &[np],
            &[np, np, np, nb, nb],
            &[(0, 0, &neg_adv), (0, 1, &neg_dx), (0, 2, &neg_dy)],
        );
        let f_u1 = momentum.select_rows(&dofs.u1_free).scale_rows(
            &dofs.u1_free.iter().map(|&k| inv_wo[k]).collect::<Vec<_>>(),
        );
        let f_u2 = momentum
            .select_rows(&dofs.u2_free.iter().map(|k| np + k).collect::<Vec<_>>())
            .scale_rows(&dofs.u2_free.iter().map(|&k| inv_wo[k]).collect::<Vec<_>>());
        let f_w = Csr::block(&[nb], &[np, np, np, nb, nb], &[(0, 4, &Csr::identity(nb))]);
        let top_rows: Vec<usize> = (1..g.nx).map(|i| np + g.top(i)).collect();
        let coupling = calc
            .slope
            .scale_rows(&mtop.iter().zip(&u1_top).map(|(m, a)| -kappa * m * a).collect::<Vec<_>>());
        let plate = Csr::block(
            &[nb],
            &[np, np, np, nb, nb],
            &[(0, 3, &calc.stiffness.scale(-1.0)), (0, 4, &coupling)],
        )
        .add(&momentum.select_rows(&top_rows));
        let inv_mass: Vec<f64> = wb_int.iter().zip(&mtop).map(|(b, m)| 1.0 / (b + m)).collect();
        let f_v = plate.scale_rows(&inv_mass);
        let f = Csr::block(
            &[np, dofs.u1_free.len(), dofs.u2_free.len(), nb, nb],
            &[nfull],
            &[(0, 0, &fp), (1, 0, &f_u1), (2, 0, &f_u2), (3, 0, &f_w), (4, 0, &f_v)],
        );
        let a = f.matmul(&expand);

        let mut mh = calc.wo.clone();
        mh.extend_from_slice(&wo2);
        let metric = Csr::block(
            &[3 * np, nb, nb],
            &[3 * np, nb, nb],
            &[(0, 0, &Csr::diag(&mh)), (1, 1, &calc.stiffness), (2, 2, &Csr::diag(wb_int))],
        );
        let gram = expand.transpose().matmul(&metric).matmul(&expand);

        Ok(Self {
            kappa,
            dofs,
            a,
            expand,
            advection,
            momentum,
            mtop,
            u1_top,
            gram,
        })
    }

    pub fn order(&self) -> usize {
        self.dofs.reduced_len()
    }

    pub fn reduce(&self, s: &State) -> Vec<f64> {
        self.dofs.restrict(&self.dofs.full_from_state(s))
    }

    /// `T r` as a state: the slaved interface velocity is filled in.
    pub fn expand_state(&self, r: &[f64]) -> State {
        self.dofs.state_from_full(&self.expand.mul_vec(r))
    }

    pub fn apply_reduced(&self, r: &[f64]) -> Vec<f64> {
        self.a.mul_vec(r)
    }

    /// `A s`; only the reduced unknowns of `s` are read.
    pub fn apply(&self, s: &State) -> State {
        self.expand_state(&self.apply_reduced(&self.reduce(s)))
    }

    /// Energy inner product on reduced vectors.
    pub fn inner_h(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &self.gram.mul_vec(b))
    }

    /// Symmetric positive definite Gram matrix of [`Self::inner_h`].
    pub fn gram(&self) -> &Csr {
        &self.gram
    }

    /// Largest violation of the eliminated boundary conditions in `s`.
    pub fn constraint_defect(&self, s: &State) -> f64 {
        let t = self.expand_state(&self.reduce(s));
        let d = s.axpy(-1.0, &t);
        let m = |f: &[f64]| f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        m(&d.p.0).max(m(&d.u.u1.0)).max(m(&d.u.u2.0)).max(m(&d.w.0)).max(m(&d.v.0))
    }

    /// Interface constraint force `λ = Mtop·∂t u2|top − R|top` (interior beam nodes).
    pub fn constraint_force(&self, r: &[f64]) -> Vec<f64> {
        let g = &self.dofs.geom;
        let np = self.dofs.n_nodes;
        let full = self.expand.mul_vec(r);
        let rate = self.expand.mul_vec(&self.a.mul_vec(r));
        (1..g.nx)
            .enumerate()
            .map(|(m, i)| {
                let k = g.top(i);
                let rk: f64 = self.momentum.row(np + k).map(|(c, v)| v * full[c]).sum();
                self.mtop[m] * rate[2 * np + k] - rk
            })
            .collect()
    }

    /// Direct and decomposed energy rate at reduced state `r`.
    pub fn energy_rates(&self, calc: &DiscreteCalculus, ambient: &AmbientField, r: &[f64]) -> EnergyRates {
        let total = self.inner_h(&self.a.mul_vec(r), r);
        let s = self.expand_state(r);
        let u = &s.u;
        let pressure_dissipation = calc.pressure_dissipation(&s.p);
        let dissipation =
            calc.elastic_form(u, u) + calc.coef.eta * calc.inner_ov(u, u) + pressure_dissipation;
        let sdiv = 0.5
            * calc
                .wo
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    w * ambient.div_u.0[k] * (s.p.0[k].powi(2) + u.u1.0[k].powi(2) + u.u2.0[k].powi(2))
                })
                .sum::<f64>();
        let skappa = if self.kappa == 0.0 {
            0.0
        } else {
            let lam = self.constraint_force(r);
            let sw = calc.slope.mul_vec(s.w.interior());
            self.kappa
                * lam
                    .iter()
                    .zip(&self.u1_top)
                    .zip(&sw)
                    .map(|((l, a), b)| l * a * b)
                    .sum::<f64>()
        };
        EnergyRates {
            total,
            dissipation,
            pressure_dissipation,
            sdiv,
            skappa,
        }
    }
}

/// The one-dimensional null space spanned by `n0 = [1, 0, Å⁻¹(1), 0]`.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub n0: State,
    norm2: f64,
}

impl NullSpace {
    pub fn new(calc: &DiscreteCalculus, beam: &BeamSolver) -> Result<Self> {
        let g = &calc.geom;
        let w = beam.solve(calc, &BeamField::constant(g, 1.0))?;
        let n0 = State {
            p: ScalarField::constant(g, 1.0),
            u: VectorField::zeros(g),
            w,
            v: BeamField::zeros(g),
        };
        let norm2 = calc.inner_h(&n0, &n0)?;
        Ok(Self { n0, norm2 })
    }

    /// `‖A n0‖_H / ‖n0‖_H`.
    pub fn residual(&self, calc: &DiscreteCalculus, generator: &Generator) -> Result<f64> {
        let an = generator.apply(&self.n0);
        Ok(calc.norm_h(&an)? / self.norm2.sqrt())
    }

    /// `⟨s, n0⟩_H`, which equals [`charge`].
    pub fn coordinate(&self, calc: &DiscreteCalculus, s: &State) -> Result<f64> {
        calc.inner_h(s, &self.n0)
    }

    /// H-orthogonal projection onto the complement of `n0`.
    pub fn project_off(&self, calc: &DiscreteCalculus, s: &State) -> Result<State> {
        let c = self.coordinate(calc, s)? / self.norm2;
        Ok(s.axpy(-c, &self.n0))
    }
}

/// `Q(s) = ⟨p, 1⟩ + ⟨w, 1⟩_Wb`.
pub fn charge(calc: &DiscreteCalculus, s: &State) -> f64 {
    calc.wo.iter().zip(&s.p.0).map(|(a, b)| a * b).sum::<f64>()
        + calc.wb.iter().zip(&s.w.0).map(|(a, b)| a * b).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::Preset;
    use crate::calculus::Coefficients;

    fn setup(n: usize, preset: Preset, kappa: f64) -> (DiscreteCalculus, AmbientField, Generator) {
        let c = DiscreteCalculus::new(&Geometry::unit(n).unwrap(), Coefficients::default()).unwrap();
        let f = AmbientField::preset(&c, preset, 1.0).unwrap();
        let g = Generator::assemble(&c, &f, kappa).unwrap();
        (c, f, g)
    }

    #[test]
    fn reduced_order_on_16x16() {
        let (_, _, g) = setup(16, Preset::Zero, 0.0);
        // 289 + 15·17 + 17·15 + 15 + 15
        assert_eq!(g.order(), 289 + 255 + 255 + 30);
        assert_eq!(g.a.nrows(), g.order());
    }

    #[test]
    fn expansion_satisfies_constraints() {
        let (_, _, g) = setup(8, Preset::SolenoidalVortex, 1.0);
        let r: Vec<f64> = (0..g.order()).map(|k| ((k * 37 % 11) as f64) - 5.0).collect();
        let s = g.expand_state(&r);
        assert!(g.constraint_defect(&s) < 1e-14);
        assert_eq!(g.reduce(&s), r);
    }

    #[test]
    fn energy_balance_is_exact() {
        for (preset, kappa) in [(Preset::Zero, 0.0), (Preset::SmallDiv, 1.0), (Preset::SolenoidalVortex, 1.0)] {
            let (c, f, g) = setup(8, preset, kappa);
            let r: Vec<f64> = (0..g.order()).map(|k| ((k * 7919 % 23) as f64) / 11.0 - 1.0).collect();
            let e = g.energy_rates(&c, &f, &r);
            assert!(e.dissipation > 0.0);
            assert!(e.balance_residual().abs() <= 1e-10 * e.dissipation, "{e:?}");
        }
    }

    #[test]
    fn gram_matches_state_inner_product() {
        let (c, _, g) = setup(8, Preset::SmallDiv, 1.0);
        let r: Vec<f64> = (0..g.order()).map(|k| (k as f64 * 0.37).sin()).collect();
        let s = g.expand_state(&r);
        let direct = c.inner_h(&s, &s).unwrap();
        assert!((g.inner_h(&r, &r) - direct).abs() < 1e-11 * direct);
    }

    #[test]
    fn null_vector_in_kernel() {
        let (c, _, g) = setup(16, Preset::SolenoidalVortex, 1.0);
        let beam = BeamSolver::new(&c).unwrap();
        let ns = NullSpace::new(&c, &beam).unwrap();
        assert!(ns.residual(&c, &g).unwrap() < 1e-10);
        let s = ns.n0.scaled(2.0);
        let q = ns.coordinate(&c, &s).unwrap();
        assert!((q - charge(&c, &s)).abs() < 1e-12 * q.abs());
        let off = ns.project_off(&c, &s).unwrap();
        assert!(charge(&c, &off).abs() < 1e-12);
    }
}
