//! Term-by-term ledger of the pressure multiplier `Grad ψ(p, w)` and the
//! plate multiplier `w` along a stored trajectory.
//!
//! All time integrals use the midpoint rule on consecutive stored states,
//! which matches the Crank–Nicolson update. With that choice the product
//! rule, the pressure recovery relation, the stress Green identity and the
//! plate identity are exact; the only approximate entry is the
//! time-centered momentum residual, which is `O(dt²)`.

use crate::ambient::AmbientField;
use crate::calculus::DiscreteCalculus;
use crate::elliptic::{NeumannData, NeumannSolver};
use crate::error::{FsiError, Result};
use crate::evolve::Trajectory;
use crate::generator::Generator;
use crate::grid::{BeamField, ScalarField, State, VectorField};

/// Young parameter in the final absorption step.
pub const EPSILON: f64 = 0.5;

/// Admissible charge relative to the size of the initial `(p, w)`.
const COMPAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultiplierLedger {
    pub steps: usize,

    /// `[⟨u, Grad ψ⟩]₀ᵀ`
    pub product_boundary: f64,
    /// `∫⟨u_t, Grad ψ⟩`
    pub product_time_derivative: f64,
    /// `∫⟨u, Grad ψ_t⟩`
    pub product_multiplier_rate: f64,
    /// `|∫⟨u_t,Gψ⟩ + ∫⟨u,Gψ_t⟩ − [⟨u,Gψ⟩]₀ᵀ|`
    pub product_residual: f64,

    /// `∫⟨u, Grad ψ(Ũ·Grad p, 0)⟩`, `Ũ·Grad p` with its mean removed.
    pub advective_pairing: f64,
    /// `∫⟨q(u), Ũ·Grad p⟩` from the Leray split.
    pub advective_q_pairing: f64,
    /// Largest `‖q(u)‖ / ‖u‖` seen.
    pub q_ratio_max: f64,

    /// `∫⟨Grad p, Grad ψ⟩`
    pub pressure_gradient_pairing: f64,
    /// `∫‖p‖²`
    pub pressure_recovery: f64,
    /// `∫⟨p, w⟩_Ω`, the boundary pairing of the recovery relation.
    pub pressure_boundary: f64,

    /// `−∫⟨StressDiv u, Grad ψ⟩`
    pub stress_pairing: f64,
    /// `∫⟨σ(u), ε(Grad ψ)⟩`
    pub stress_volume: f64,
    /// `∫⟨σ(u)n, Grad ψ⟩_∂O`
    pub stress_boundary: f64,

    /// `∫⟨U·∇u + ηu, Grad ψ⟩` (skew advection form)
    pub lower_order: f64,

    /// `Σ|⟨r_n, Grad ψ_n⟩| / Σ|⟨Grad p_n, Grad ψ_n⟩|` over interior nodes,
    /// `r_n` the time-centered momentum residual.
    pub momentum_residual: f64,

    /// `∫‖D2 w‖²`
    pub plate_potential: f64,
    /// `∫‖v‖²`
    pub plate_kinetic: f64,
    /// `−[⟨v, w⟩]₀ᵀ`
    pub plate_boundary: f64,
    /// `∫⟨λ, w⟩` with `λ` the interface constraint force.
    pub interface_work: f64,
    /// `|potential − (boundary + kinetic − interface_work)|`
    pub plate_residual: f64,

    /// `∫‖v‖²_Ω`
    pub trace_beam: f64,
    /// `∫‖u2|_Ω‖²`
    pub trace_fluid: f64,

    /// `∫E`
    pub energy_integral: f64,
    /// `E(T) + E(0)`
    pub energy_endpoints: f64,
    /// `∫ a(u,u) + η‖u‖² + α pᵀSp`
    pub dissipation: f64,
    /// `∫ √d · √E`
    pub cross_term: f64,
    pub psi_u: f64,
    /// Smallest `C` with `∫E ≤ C(Ψ[E(T)+E(0)] + ∫√d√E + D)`.
    pub observability_constant: f64,
    /// `C₀ = C`
    pub c0: f64,
    /// `C_ε = C + C²/(4ε)`
    pub c_eps: f64,
    /// `C₀Ψ[E(T)+E(0)] + C_ε D − (1−ε)∫E`
    pub slack: f64,
    /// `∫E / E(0)`
    pub datko_ratio: f64,
}

impl MultiplierLedger {
    pub fn trace_residual(&self) -> f64 {
        (self.trace_beam - self.trace_fluid).abs()
    }

    pub fn pressure_residual(&self) -> f64 {
        (self.pressure_gradient_pairing - self.pressure_recovery - self.pressure_boundary).abs()
    }

    pub fn stress_residual(&self) -> f64 {
        (self.stress_pairing - self.stress_volume + self.stress_boundary).abs()
    }

    pub fn advective_residual(&self) -> f64 {
        (self.advective_pairing - self.advective_q_pairing).abs()
    }

    /// `(label, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("steps", self.steps as f64),
            ("product_boundary", self.product_boundary),
            ("product_time_derivative", self.product_time_derivative),
            ("product_multiplier_rate", self.product_multiplier_rate),
            ("product_residual", self.product_residual),
            ("advective_pairing", self.advective_pairing),
            ("advective_q_pairing", self.advective_q_pairing),
            ("q_ratio_max", self.q_ratio_max),
            ("pressure_gradient_pairing", self.pressure_gradient_pairing),
            ("pressure_recovery", self.pressure_recovery),
            ("pressure_boundary", self.pressure_boundary),
            ("pressure_residual", self.pressure_residual()),
            ("stress_pairing", self.stress_pairing),
            ("stress_volume", self.stress_volume),
            ("stress_boundary", self.stress_boundary),
            ("stress_residual", self.stress_residual()),
            ("lower_order", self.lower_order),
            ("momentum_residual", self.momentum_residual),
            ("plate_potential", self.plate_potential),
            ("plate_kinetic", self.plate_kinetic),
            ("plate_boundary", self.plate_boundary),
            ("interface_work", self.interface_work),
            ("plate_residual", self.plate_residual),
            ("trace_beam", self.trace_beam),
            ("trace_fluid", self.trace_fluid),
            ("trace_residual", self.trace_residual()),
            ("energy_integral", self.energy_integral),
            ("energy_endpoints", self.energy_endpoints),
            ("dissipation", self.dissipation),
            ("cross_term", self.cross_term),
            ("psi_u", self.psi_u),
            ("observability_constant", self.observability_constant),
            ("c0", self.c0),
            ("c_eps", self.c_eps),
            ("epsilon", EPSILON),
            ("slack", self.slack),
            ("datko_ratio", self.datko_ratio),
        ]
    }
}

struct Level {
    state: State,
    grad_psi: VectorField,
    /// `‖p‖ + ‖w‖`
    size: f64,
}

fn interior_pairing(calc: &DiscreteCalculus, a: &VectorField, b: &VectorField) -> f64 {
    let g = &calc.geom;
    let mut s = 0.0;
    for j in 1..g.ny {
        for i in 1..g.nx {
            let k = g.idx(i, j);
            s += calc.wo[k] * (a.u1.0[k] * b.u1.0[k] + a.u2.0[k] * b.u2.0[k]);
        }
    }
    s
}

fn vadd(a: &VectorField, b: &VectorField, sa: f64, sb: f64) -> VectorField {
    let f = |x: &ScalarField, y: &ScalarField| {
        ScalarField(x.0.iter().zip(&y.0).map(|(p, q)| sa * p + sb * q).collect())
    };
    VectorField {
        u1: f(&a.u1, &b.u1),
        u2: f(&a.u2, &b.u2),
    }
}

fn advect(generator: &Generator, u: &VectorField) -> VectorField {
    VectorField {
        u1: ScalarField(generator.advection.mul_vec(&u.u1.0)),
        u2: ScalarField(generator.advection.mul_vec(&u.u2.0)),
    }
}

/// Builds the ledger from a trajectory that holds every step (`stride = 1`).
pub fn multiplier_report(
    calc: &DiscreteCalculus,
    ambient: &AmbientField,
    generator: &Generator,
    neumann: &NeumannSolver,
    trajectory: &Trajectory,
) -> Result<MultiplierLedger> {
    let n_levels = trajectory.states.len();
    if trajectory.stride != 1 || n_levels < 2 {
        return Err(FsiError::Ledger(
            "the multiplier ledger needs every step of the trajectory (stride 1, at least one step)".into(),
        ));
    }
    let dt = trajectory.times[1] - trajectory.times[0];
    for w in trajectory.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(FsiError::Ledger("trajectory times are not uniform".into()));
        }
    }
    let mut acc = LedgerAccumulator::new(calc, ambient, generator, neumann, dt)?;
    for s in &trajectory.states {
        acc.push(s)?;
    }
    acc.finish()
}

/// Streaming form of [`multiplier_report`]: feed every state in order.
pub struct LedgerAccumulator<'a> {
    calc: &'a DiscreteCalculus,
    ambient: &'a AmbientField,
    generator: &'a Generator,
    neumann: &'a NeumannSolver,
    dt: f64,
    nonzero_u: bool,
    first: Option<Level>,
    /// The last two levels, oldest first.
    window: Vec<Level>,
    ledger: MultiplierLedger,
    residual_num: f64,
    residual_den: f64,
}

impl<'a> LedgerAccumulator<'a> {
    pub fn new(
        calc: &'a DiscreteCalculus,
        ambient: &'a AmbientField,
        generator: &'a Generator,
        neumann: &'a NeumannSolver,
        dt: f64,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(FsiError::Ledger(format!("bad time step {dt}")));
        }
        Ok(Self {
            calc,
            ambient,
            generator,
            neumann,
            dt,
            nonzero_u: ambient.u.u1.max_abs() > 0.0 || ambient.u.u2.max_abs() > 0.0,
            first: None,
            window: Vec::with_capacity(3),
            ledger: MultiplierLedger {
                psi_u: ambient.psi_u,
                ..Default::default()
            },
            residual_num: 0.0,
            residual_den: 0.0,
        })
    }

    /// Solves for `ψ(p, w)`. The charge of a decaying run is conserved only
    /// up to rounding of the initial data, so the compatibility defect is
    /// judged against the first level's size and then removed from `p`.
    fn level(&self, s: &State) -> Result<Level> {
        let calc = self.calc;
        let size = calc.inner_o(&s.p, &s.p).sqrt() + calc.inner_b(&s.w, &s.w).sqrt();
        let scale = self.first.as_ref().map_or(size, |f| f.size).max(size);
        let defect = NeumannSolver::defect(calc, &NeumannData { f: s.p.clone(), g: s.w.clone() });
        let tol = COMPAT_TOL * scale;
        if defect.abs() > tol {
            return Err(FsiError::Ledger(format!(
                "state is not off the null space: compatibility defect {:.3e} > {tol:.3e}",
                defect.abs()
            )));
        }
        let shift = defect / calc.wo.iter().sum::<f64>();
        let data = NeumannData {
            f: ScalarField(s.p.0.iter().map(|v| v - shift).collect()),
            g: s.w.clone(),
        };
        let psi = self.neumann.solve(calc, &data)?.psi;
        Ok(Level {
            grad_psi: calc.grad(&psi),
            state: s.clone(),
            size,
        })
    }

    pub fn push(&mut self, s: &State) -> Result<()> {
        let level = self.level(s)?;
        if self.first.is_none() {
            self.first = Some(Level {
                state: level.state.clone(),
                grad_psi: level.grad_psi.clone(),
                size: level.size,
            });
        }
        let mut window = std::mem::take(&mut self.window);
        if let Some(prev) = window.last() {
            self.interval(prev, &level)?;
        }
        if window.len() == 2 {
            self.centered(&window[0], &window[1], &level);
            window.remove(0);
        }
        window.push(level);
        self.window = window;
        Ok(())
    }

    /// Midpoint contributions of one step.
    fn interval(&mut self, a: &Level, b: &Level) -> Result<()> {
        let (calc, dt, eta) = (self.calc, self.dt, self.calc.coef.eta);
        let l = &mut self.ledger;
        l.steps += 1;
        let mid = a.state.axpy(1.0, &b.state).scaled(0.5);
        let gpsi = vadd(&a.grad_psi, &b.grad_psi, 0.5, 0.5);
        let du = vadd(&b.state.u, &a.state.u, 1.0, -1.0);
        let dgpsi = vadd(&b.grad_psi, &a.grad_psi, 1.0, -1.0);
        let u = &mid.u;

        l.product_time_derivative += calc.inner_ov(&du, &gpsi);
        l.product_multiplier_rate += calc.inner_ov(u, &dgpsi);

        let gp = calc.grad(&mid.p);
        l.pressure_gradient_pairing += dt * calc.inner_ov(&gp, &gpsi);
        l.pressure_recovery += dt * calc.inner_o(&mid.p, &mid.p);
        l.pressure_boundary += dt * calc.inner_b(&calc.trace_top(&mid.p), &mid.w);

        l.stress_pairing -= dt * calc.inner_ov(&calc.stress_div(u), &gpsi);
        l.stress_volume += dt * calc.elastic_form(u, &gpsi);
        l.stress_boundary += dt * calc.traction_flux(u, &gpsi);

        let lower = vadd(&advect(self.generator, u), u, 1.0, eta);
        l.lower_order += dt * calc.inner_ov(&lower, &gpsi);

        if self.nonzero_u {
            let amb = &self.ambient.u;
            let ugp: Vec<f64> = (0..gp.u1.0.len())
                .map(|k| amb.u1.0[k] * gp.u1.0[k] + amb.u2.0[k] * gp.u2.0[k])
                .collect();
            let area: f64 = calc.wo.iter().sum();
            let mean = crate::sparse::dot(&calc.wo, &ugp) / area;
            let f = ScalarField(ugp.iter().map(|v| v - mean).collect());
            let sol = self.neumann.solve(
                calc,
                &NeumannData {
                    f: f.clone(),
                    g: BeamField::zeros(&calc.geom),
                },
            )?;
            let split = self.neumann.leray(calc, u)?;
            l.advective_pairing += dt * calc.inner_ov(u, &calc.grad(&sol.psi));
            l.advective_q_pairing += dt * calc.inner_o(&split.q, &f);
            l.q_ratio_max = l.q_ratio_max.max(split.q_ratio);
        }

        let d2 = calc.beam_d2(&mid.w);
        l.plate_potential += dt * calc.inner_b(&d2, &d2);
        l.plate_kinetic += dt * calc.inner_b(&mid.v, &mid.v);
        let r = self.generator.reduce(&mid);
        let lam = self.generator.constraint_force(&r);
        l.interface_work += dt * lam.iter().zip(mid.w.interior()).map(|(x, y)| x * y).sum::<f64>();

        let top = calc.trace_top(&u.u2);
        l.trace_beam += dt * calc.inner_b(&mid.v, &mid.v);
        l.trace_fluid += dt * calc.inner_b(&top, &top);

        let d = self.generator.energy_rates(calc, self.ambient, &r).dissipation;
        let e_mid = 0.5 * calc.inner_h(&mid, &mid)?;
        l.energy_integral += dt * e_mid;
        l.dissipation += dt * d;
        l.cross_term += dt * d.max(0.0).sqrt() * e_mid.sqrt();
        Ok(())
    }

    /// Time-centered momentum residual at the middle level.
    fn centered(&mut self, prev: &Level, cur: &Level, next: &Level) {
        let (calc, dt) = (self.calc, self.dt);
        let s = &cur.state;
        let ut = vadd(&next.state.u, &prev.state.u, 0.5 / dt, -0.5 / dt);
        let gp = calc.grad(&s.p);
        let sd = calc.stress_div(&s.u);
        let rest = vadd(&advect(self.generator, &s.u), &s.u, 1.0, calc.coef.eta);
        let r = vadd(&vadd(&ut, &gp, 1.0, 1.0), &vadd(&rest, &sd, 1.0, -1.0), 1.0, 1.0);
        self.residual_num += interior_pairing(calc, &r, &cur.grad_psi).abs();
        self.residual_den += interior_pairing(calc, &gp, &cur.grad_psi).abs();
    }

    pub fn finish(self) -> Result<MultiplierLedger> {
        let calc = self.calc;
        let (first, last) = match (&self.first, self.window.last()) {
            (Some(f), Some(l)) if self.ledger.steps > 0 => (f, l),
            _ => return Err(FsiError::Ledger("the ledger needs at least one step".into())),
        };
        let mut l = self.ledger.clone();
        l.product_boundary = calc.inner_ov(&last.state.u, &last.grad_psi)
            - calc.inner_ov(&first.state.u, &first.grad_psi);
        l.product_residual =
            (l.product_time_derivative + l.product_multiplier_rate - l.product_boundary).abs();
        l.plate_boundary = -(calc.inner_b(&last.state.v, &last.state.w)
            - calc.inner_b(&first.state.v, &first.state.w));
        l.plate_residual =
            (l.plate_potential - (l.plate_boundary + l.plate_kinetic - l.interface_work)).abs();
        l.momentum_residual = if self.residual_den > 0.0 {
            self.residual_num / self.residual_den
        } else {
            0.0
        };

        let e0 = 0.5 * calc.inner_h(&first.state, &first.state)?;
        let et = 0.5 * calc.inner_h(&last.state, &last.state)?;
        l.energy_endpoints = e0 + et;
        let denom = l.psi_u * l.energy_endpoints + l.cross_term + l.dissipation;
        l.observability_constant = if denom > 0.0 { l.energy_integral / denom } else { 0.0 };
        l.c0 = l.observability_constant;
        l.c_eps = l.c0 + l.c0 * l.c0 / (4.0 * EPSILON);
        l.slack = l.c0 * l.psi_u * l.energy_endpoints + l.c_eps * l.dissipation
            - (1.0 - EPSILON) * l.energy_integral;
        l.datko_ratio = if e0 > 0.0 { l.energy_integral / e0 } else { 0.0 };

        if !l.rows().iter().all(|(_, v)| v.is_finite()) {
            return Err(FsiError::Ledger("non-finite ledger entry".into()));
        }
        Ok(l)
    }
}
