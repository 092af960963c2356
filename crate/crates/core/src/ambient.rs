//! Ambient fields `U` about which the flow is linearized.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::calculus::DiscreteCalculus;
use crate::elliptic::BeamSolver;
use crate::error::{FsiError, Result};
use crate::grid::{BeamField, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Zero,
    SolenoidalVortex,
    SmallDiv,
    /// Built from explicit components rather than a named preset.
    Custom,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Zero => "zero",
            Preset::SolenoidalVortex => "solenoidal-vortex",
            Preset::SmallDiv => "small-div",
            Preset::Custom => "custom",
        })
    }
}

impl FromStr for Preset {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Preset::Zero),
            "solenoidal-vortex" => Ok(Preset::SolenoidalVortex),
            "small-div" => Ok(Preset::SmallDiv),
            other => Err(FsiError::Config(format!("unknown ambient preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AmbientField {
    pub u: VectorField,
    /// Discrete divergence `Div U`; this is what enters the generator.
    pub div_u: ScalarField,
    /// `max |Div U − div U|` against the analytic divergence, when known.
    pub div_defect: Option<f64>,
    /// Norm surrogate `1 + ‖U‖_{H¹,h} + ‖U‖_∞`.
    pub psi_u: f64,
    pub preset: Preset,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcReport {
    pub max_defect: f64,
    pub pass: bool,
}

impl AmbientField {
    pub fn preset(calc: &DiscreteCalculus, preset: Preset, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(FsiError::Config(format!(
                "ambient amplitude must be finite and nonnegative, got {amplitude}"
            )));
        }
        let g = calc.geom;
        let (l1, l2) = (g.l1, g.l2);
        match preset {
            Preset::Zero => Self::finish(calc, VectorField::zeros(&g), Some(0.0), preset, amplitude),
            Preset::SolenoidalVortex => {
                let phi = |x: f64, y: f64| {
                    let sx = (PI * x / l1).sin();
                    let sy = (PI * y / l2).sin();
                    sx * sx * sy * sy
                };
                let mut f = Self::from_stream_function(calc, phi, true, amplitude)?;
                f.preset = preset;
                Ok(f)
            }
            Preset::SmallDiv => {
                let u1 = g.sample(|x, y| amplitude * x * (l1 - x) * y * (y + l2));
                let exact = g.sample(|x, y| amplitude * (l1 - 2.0 * x) * y * (y + l2));
                let mut u1 = u1;
                zero_normal(calc, &mut u1, true);
                let u = VectorField { u1, u2: ScalarField::zeros(&g) };
                let div_u = calc.div(&u);
                let defect = max_diff(&div_u, &exact);
                let mut f = Self::finish(calc, u, None, preset, amplitude)?;
                f.div_defect = Some(defect);
                Ok(f)
            }
            Preset::Custom => Err(FsiError::Config(
                "custom ambient fields are built with AmbientField::from_components".into(),
            )),
        }
    }

    /// `U = amplitude · (Dy φ, −Dx φ)` for a stream function sampled on the
    /// nodes and forced to vanish on the boundary. With `clamp`, the first
    /// interior ring is zeroed too, so `φ` and its one-sided normal difference
    /// vanish on `∂O` and `U` is zero on the whole boundary.
    pub fn from_stream_function(
        calc: &DiscreteCalculus,
        phi: impl Fn(f64, f64) -> f64,
        clamp: bool,
        amplitude: f64,
    ) -> Result<Self> {
        let g = calc.geom;
        let mut s = g.sample(phi);
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let ring = i.min(j).min(g.nx - i).min(g.ny - j);
                if ring == 0 || (clamp && ring == 1) {
                    s.0[g.idx(i, j)] = 0.0;
                }
            }
        }
        let dphi = calc.grad(&s);
        let u = VectorField {
            u1: ScalarField(dphi.u2.0.iter().map(|v| amplitude * v).collect()),
            u2: ScalarField(dphi.u1.0.iter().map(|v| -amplitude * v).collect()),
        };
        Self::finish(calc, u, Some(0.0), Preset::Custom, amplitude)
    }

    /// Wraps explicit components; rejects fields with a normal component on `∂O`.
    pub fn from_components(calc: &DiscreteCalculus, u: VectorField) -> Result<Self> {
        Self::finish(calc, u, None, Preset::Custom, 1.0)
    }

    fn finish(
        calc: &DiscreteCalculus,
        u: VectorField,
        analytic_div: Option<f64>,
        preset: Preset,
        amplitude: f64,
    ) -> Result<Self> {
        let g = calc.geom;
        if u.u1.0.len() != g.n_nodes() || u.u2.0.len() != g.n_nodes() {
            return Err(FsiError::Dimension("ambient field on the wrong grid".into()));
        }
        if !u.is_finite() {
            return Err(FsiError::Config("ambient field is not finite".into()));
        }
        let normal = max_normal_component(calc, &u);
        let scale = 1.0 + u.u1.max_abs().max(u.u2.max_abs());
        if normal > 1e-12 * scale {
            return Err(FsiError::Config(format!(
                "ambient field has normal boundary component {normal:.3e}; U·n = 0 is required"
            )));
        }
        let div_u = calc.div(&u);
        let div_defect = analytic_div.map(|d| div_u.0.iter().fold(0.0f64, |m, v| m.max((v - d).abs())));
        let h1 = (calc.h1_norm(&u.u1).powi(2) + calc.h1_norm(&u.u2).powi(2)).sqrt();
        let sup = u.u1.max_abs().max(u.u2.max_abs());
        Ok(Self {
            u,
            div_u,
            div_defect,
            psi_u: 1.0 + h1 + sup,
            preset,
            amplitude,
        })
    }

    /// Tangential trace `U1` on the interface.
    pub fn tangential_trace(&self, calc: &DiscreteCalculus) -> BeamField {
        calc.trace_top(&self.u.u1)
    }

    pub fn max_abs_div(&self) -> f64 {
        self.div_u.max_abs()
    }
}

/// Largest `|U·n|` over boundary nodes.
pub fn max_normal_component(calc: &DiscreteCalculus, u: &VectorField) -> f64 {
    let g = calc.geom;
    let mut m = 0.0f64;
    for j in 0..=g.ny {
        m = m.max(u.u1.0[g.idx(0, j)].abs()).max(u.u1.0[g.idx(g.nx, j)].abs());
    }
    for i in 0..=g.nx {
        m = m.max(u.u2.0[g.idx(i, 0)].abs()).max(u.u2.0[g.idx(i, g.ny)].abs());
    }
    m
}

/// Checks `U·∇Å⁻¹(1) = 0` on the interface using the beam slope.
pub fn check_cc(calc: &DiscreteCalculus, beam: &BeamSolver, field: &AmbientField) -> Result<CcReport> {
    let w = beam.solve(calc, &BeamField::constant(&calc.geom, 1.0))?;
    let slope = calc.beam_slope(&w);
    let trace = field.tangential_trace(calc);
    let max_defect = trace
        .0
        .iter()
        .zip(&slope.0)
        .fold(0.0f64, |m, (a, b)| m.max((a * b).abs()));
    Ok(CcReport {
        max_defect,
        pass: max_defect <= 1e-8 * field.psi_u,
    })
}

fn zero_normal(calc: &DiscreteCalculus, u1: &mut ScalarField, sides: bool) {
    let g = calc.geom;
    if sides {
        for j in 0..=g.ny {
            u1.0[g.idx(0, j)] = 0.0;
            u1.0[g.idx(g.nx, j)] = 0.0;
        }
    }
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.0.iter().zip(&b.0).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
