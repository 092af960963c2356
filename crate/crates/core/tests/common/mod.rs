#![allow(dead_code)]

use fsistab::ambient::{AmbientField, Preset};
use fsistab::calculus::{Coefficients, DiscreteCalculus};
use fsistab::elliptic::BeamSolver;
use fsistab::generator::{Generator, NullSpace};
use fsistab::grid::{BeamField, Geometry, ScalarField, State, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn calc(n: usize) -> DiscreteCalculus {
    calc_rect(1.0, 1.0, n, n)
}

pub fn calc_rect(l1: f64, l2: f64, nx: usize, ny: usize) -> DiscreteCalculus {
    DiscreteCalculus::new(&Geometry::new(l1, l2, nx, ny).unwrap(), Coefficients::default()).unwrap()
}

pub struct Fixture {
    pub calc: DiscreteCalculus,
    pub ambient: AmbientField,
    pub generator: Generator,
    pub beam: BeamSolver,
    pub null: NullSpace,
}

pub fn fixture(n: usize, preset: Preset, kappa: f64) -> Fixture {
    let calc = calc(n);
    let ambient = AmbientField::preset(&calc, preset, 1.0).unwrap();
    let generator = Generator::assemble(&calc, &ambient, kappa).unwrap();
    let beam = BeamSolver::new(&calc).unwrap();
    let null = NullSpace::new(&calc, &beam).unwrap();
    Fixture { calc, ambient, generator, beam, null }
}

pub struct Sampler(ChaCha8Rng);

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.gen_range(-1.0..=1.0)
    }

    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.0.gen_range(lo..=hi)
    }

    pub fn scalar(&mut self, g: &Geometry) -> ScalarField {
        ScalarField((0..g.n_nodes()).map(|_| self.uniform()).collect())
    }

    pub fn vector(&mut self, g: &Geometry) -> VectorField {
        VectorField { u1: self.scalar(g), u2: self.scalar(g) }
    }

    /// Random clamped beam field.
    pub fn beam(&mut self, g: &Geometry) -> BeamField {
        let inner: Vec<f64> = (0..g.nx - 1).map(|_| self.uniform()).collect();
        BeamField::from_interior(g, &inner)
    }

    pub fn state(&mut self, g: &Geometry) -> State {
        State { p: self.scalar(g), u: self.vector(g), w: self.beam(g), v: self.beam(g) }
    }
}

/// Smooth off-null data: a cosine pressure mode, everything else at rest.
pub fn smooth_state(f: &Fixture) -> State {
    let g = f.calc.geom;
    let mut s = State::zeros(&g);
    s.p = g.sample(|x, y| (std::f64::consts::PI * x / g.l1).cos() * (std::f64::consts::PI * y / g.l2).cos());
    let s = f.null.project_off(&f.calc, &s).unwrap();
    f.generator.expand_state(&f.generator.reduce(&s))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
