//! Rectangular flow domain, beam interface and the discrete fields living on them.
//!
//! The flow domain is `[0, L1] × [−L2, 0]`. The beam occupies the top edge
//! `y = 0`; the remaining three edges are rigid. Nodes are enumerated
//! row-major with x fastest: node `(i, j)` has index `j * (nx + 1) + i`,
//! `x = i·hx`, `y = −L2 + j·hy`, so the interface is row `j = ny`.

use crate::error::{FsiError, Result};

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub l1: f64,
    pub l2: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Geometry {
    pub fn new(l1: f64, l2: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(l1.is_finite() && l1 > 0.0 && l2.is_finite() && l2 > 0.0) {
            return Err(FsiError::Config(format!(
                "domain lengths must be positive, got L1={l1}, L2={l2}"
            )));
        }
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(FsiError::Config(format!(
                "need at least {MIN_CELLS} cells per direction, got nx={nx}, ny={ny}"
            )));
        }
        Ok(Self {
            l1,
            l2,
            nx,
            ny,
            hx: l1 / nx as f64,
            hy: l2 / ny as f64,
        })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n)
    }

    /// Number of flow nodes.
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    /// Number of beam nodes, endpoints included.
    pub fn n_beam(&self) -> usize {
        self.nx + 1
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.l2 + j as f64 * self.hy
    }

    /// Index of the interface node above beam node `i`.
    pub fn top(&self, i: usize) -> usize {
        self.idx(i, self.ny)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Samples `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut v = Vec::with_capacity(self.n_nodes());
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                v.push(f(self.x(i), self.y(j)));
            }
        }
        ScalarField(v)
    }

    pub fn sample_beam(&self, f: impl Fn(f64) -> f64) -> BeamField {
        BeamField((0..=self.nx).map(|i| f(self.x(i))).collect())
    }

    pub fn same_grid(&self, other: &Geometry) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.l1.to_bits() == other.l1.to_bits()
            && self.l2.to_bits() == other.l2.to_bits()
    }
}

/// Nodal values on the flow grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

/// Two nodal components `(u1, u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

/// Nodal values on the beam, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamField(pub Vec<f64>);

impl ScalarField {
    pub fn zeros(g: &Geometry) -> Self {
        Self(vec![0.0; g.n_nodes()])
    }

    pub fn constant(g: &Geometry, c: f64) -> Self {
        Self(vec![c; g.n_nodes()])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn zeros(g: &Geometry) -> Self {
        Self {
            u1: ScalarField::zeros(g),
            u2: ScalarField::zeros(g),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    /// Concatenated `[u1, u2]`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut v = self.u1.0.clone();
        v.extend_from_slice(&self.u2.0);
        v
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self {
            u1: ScalarField(v[..n].to_vec()),
            u2: ScalarField(v[n..].to_vec()),
        }
    }
}

impl BeamField {
    pub fn zeros(g: &Geometry) -> Self {
        Self(vec![0.0; g.n_beam()])
    }

    pub fn constant(g: &Geometry, c: f64) -> Self {
        Self(vec![c; g.n_beam()])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Interior values (endpoints dropped).
    pub fn interior(&self) -> &[f64] {
        &self.0[1..self.0.len() - 1]
    }

    /// Rebuilds a clamped field from interior values; endpoints are zero.
    pub fn from_interior(g: &Geometry, inner: &[f64]) -> Self {
        debug_assert_eq!(inner.len(), g.nx - 1);
        let mut v = Vec::with_capacity(g.n_beam());
        v.push(0.0);
        v.extend_from_slice(inner);
        v.push(0.0);
        Self(v)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The solution quadruple `[p, u, w, v]`: pressure, velocity, beam
/// displacement and beam velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub p: ScalarField,
    pub u: VectorField,
    pub w: BeamField,
    pub v: BeamField,
}

impl State {
    pub fn zeros(g: &Geometry) -> Self {
        Self {
            p: ScalarField::zeros(g),
            u: VectorField::zeros(g),
            w: BeamField::zeros(g),
            v: BeamField::zeros(g),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.u.is_finite() && self.w.is_finite() && self.v.is_finite()
    }

    pub fn check_grid(&self, g: &Geometry) -> Result<()> {
        let n = g.n_nodes();
        let nb = g.n_beam();
        if self.p.0.len() != n
            || self.u.u1.0.len() != n
            || self.u.u2.0.len() != n
            || self.w.0.len() != nb
            || self.v.0.len() != nb
        {
            return Err(FsiError::Dimension(format!(
                "state does not live on a {}x{} grid",
                g.nx, g.ny
            )));
        }
        Ok(())
    }

    /// Flattened `[p, u1, u2, w, v]` with full beam fields.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.p.0);
        out.extend_from_slice(&self.u.u1.0);
        out.extend_from_slice(&self.u.u2.0);
        out.extend_from_slice(&self.w.0);
        out.extend_from_slice(&self.v.0);
        out
    }

    pub fn unflatten(g: &Geometry, flat: &[f64]) -> Result<Self> {
        let n = g.n_nodes();
        let nb = g.n_beam();
        if flat.len() != 3 * n + 2 * nb {
            return Err(FsiError::Dimension(format!(
                "expected {} values, got {}",
                3 * n + 2 * nb,
                flat.len()
            )));
        }
        Ok(Self {
            p: ScalarField(flat[..n].to_vec()),
            u: VectorField {
                u1: ScalarField(flat[n..2 * n].to_vec()),
                u2: ScalarField(flat[2 * n..3 * n].to_vec()),
            },
            w: BeamField(flat[3 * n..3 * n + nb].to_vec()),
            v: BeamField(flat[3 * n + nb..].to_vec()),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map2(self, |x, _| a * x)
    }

    pub fn axpy(&self, a: f64, other: &State) -> Self {
        self.map2(other, |x, y| x + a * y)
    }

    fn map2(&self, other: &State, f: impl Fn(f64, f64) -> f64) -> Self {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Self {
            p: ScalarField(zip(&self.p.0, &other.p.0)),
            u: VectorField {
                u1: ScalarField(zip(&self.u.u1.0, &other.u.u1.0)),
                u2: ScalarField(zip(&self.u.u2.0, &other.u.u2.0)),
            },
            w: BeamField(zip(&self.w.0, &other.w.0)),
            v: BeamField(zip(&self.v.0, &other.v.0)),
        }
    }
}
