//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::fs;
use std::time::{Duration, Instant};

use common::{calc, calc_rect, fixture, Fixture, Sampler};
use fsistab::ambient::{check_cc, AmbientField, Preset};
use fsistab::analyze::{datko_check, decay_fit, multiplier_report, spectrum, LedgerAccumulator, MultiplierLedger};
use fsistab::config::{parse_config, RunConfig};
use fsistab::elliptic::{weak_divergence, BeamSolver, NeumannData, NeumannSolver};
use fsistab::evolve::{evolve, evolve_with, EnergyTrace, EvolveOptions};
use fsistab::generator::Generator;
use fsistab::grid::{BeamField, ScalarField, VectorField};
use fsistab::init::random_state;
use fsistab::run::{decay_artifacts, run_subcommand, Model, Subcommand, FIT_WINDOW};

/// `E(T)/E(0)` of the pilot decay run was 3.6605e-15.
const DECAY_FIXTURE: f64 = 3.7e-15;

const DECAY_CONFIG: &str = "nx = 32\nny = 32\nkappa = 0\npreset = zero\n\
                            dt = 0.0009765625\nT = 20\nstride = 1000000\ninit = random-offnull(1)\n";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let mut v = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        v.pass &= took < limit;
        v.detail = format!("{}; runtime {:.2}s (limit {}s)", v.detail, took.as_secs_f64(), limit.as_secs());
    } else {
        v.detail = format!("{}; runtime {:.2}s", v.detail, took.as_secs_f64());
    }
    v
}

fn criterion_1() -> Verdict {
    let mut rng = Sampler::new(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (nx, ny) = (rng.int(8, 64), rng.int(8, 64));
        let c = calc_rect(1.0 + rng.uniform().abs(), 1.0 + rng.uniform().abs(), nx, ny);
        let g = c.geom;
        let r = c.green_residuals(&rng.scalar(&g), &rng.vector(&g), &rng.vector(&g), &rng.beam(&g), &rng.beam(&g));
        worst = r.iter().fold(worst, |m, &x| m.max(x));
    }
    verdict(worst <= 1e-12, format!("max relative residual {worst:.3e} over 100 pairs"))
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for n in [16, 32] {
        let f = fixture(n, Preset::Zero, 0.0);
        worst = worst.max(f.null.residual(&f.calc, &f.generator).unwrap());
    }
    let f = fixture(16, Preset::SolenoidalVortex, 1.0);
    let r1 = f.null.residual(&f.calc, &f.generator).unwrap();
    let cc = check_cc(&f.calc, &f.beam, &f.ambient).unwrap();
    verdict(
        worst <= 1e-10 && r1 <= 1e-10 && cc.max_defect <= 1e-12,
        format!("A0 residual {worst:.3e}, A1 residual {r1:.3e}, cc defect {:.3e}", cc.max_defect),
    )
}

fn step_residual(tr: &EnergyTrace) -> f64 {
    tr.max_abs_step_residual() / tr.energy[0].max(1.0)
}

fn criterion_3() -> Verdict {
    let opts = EvolveOptions { dt: 1.0 / 64.0, t_final: 5.0, stride: usize::MAX };
    let mut worst = 0.0f64;
    for kappa in [0.0, 1.0] {
        for preset in [Preset::Zero, Preset::SolenoidalVortex] {
            let f = fixture(32, preset, kappa);
            let s0 = random_state(&f.generator, 3);
            let tr = evolve(&f.calc, &f.ambient, &f.generator, &s0, opts).unwrap().trace;
            worst = worst.max(step_residual(&tr));
        }
    }
    // the vortex has U1 = 0 on the interface, so the control needs a slip field
    let c = calc(32);
    let slip = AmbientField::from_stream_function(&c, |x, y| (PI * x).sin() * (PI * y).sin(), false, 1.0).unwrap();
    let gen = Generator::assemble(&c, &slip, 1.0).unwrap();
    let s0 = random_state(&gen, 3);
    let tr = evolve(&c, &slip, &gen, &s0, opts).unwrap().trace;
    let with_term = step_residual(&tr);
    let broken = (0..tr.step_residual.len())
        .map(|n| (tr.step_residual[n] + tr.skappa[n + 1] - tr.skappa[n]).abs())
        .fold(0.0f64, f64::max)
        / tr.energy[0].max(1.0);
    verdict(
        worst <= 1e-12 && with_term <= 1e-12 && broken > 1e-6,
        format!("max step residual {worst:.3e}; slip field {with_term:.3e}, without kappa term {broken:.3e}"),
    )
}

fn criterion_4() -> Verdict {
    let f = fixture(32, Preset::Zero, 0.0);
    let mut worst = 0.0f64;
    let opts = EvolveOptions { dt: 1.0 / 64.0, t_final: 10.0, stride: usize::MAX };
    evolve_with(&f.calc, &f.ambient, &f.generator, &f.null.n0, opts, |s| {
        worst = worst.max(f.calc.norm_h(&s.axpy(-1.0, &f.null.n0))?);
        Ok(())
    })
    .unwrap();
    verdict(worst <= 1e-8, format!("max H-distance from n0 {worst:.3e}"))
}

fn criterion_5() -> Verdict {
    let f = fixture(32, Preset::SolenoidalVortex, 0.0);
    let s0 = random_state(&f.generator, 5);
    let opts = EvolveOptions { dt: 1.0 / 64.0, t_final: 10.0, stride: usize::MAX };
    let tr = evolve(&f.calc, &f.ambient, &f.generator, &s0, opts).unwrap().trace;
    let q0 = tr.charge[0];
    let drift = tr.charge.iter().fold(0.0f64, |m, q| m.max((q - q0).abs()));
    verdict(drift <= 1e-10, format!("Q(0) = {q0:.6e}, max drift {drift:.3e}"))
}

struct DecayRun {
    cfg: RunConfig,
    trace: EnergyTrace,
    ledger: MultiplierLedger,
}

fn decay_run(out: &std::path::Path) -> DecayRun {
    let mut cfg = parse_config(DECAY_CONFIG).unwrap();
    cfg.out = out.to_path_buf();
    let m = Model::build(&cfg).unwrap();
    let s0 = m.initial_state(&cfg).unwrap();
    let neumann = NeumannSolver::new(&m.calc).unwrap();
    let mut acc = LedgerAccumulator::new(&m.calc, &m.ambient, &m.generator, &neumann, cfg.dt).unwrap();
    let opts = EvolveOptions { dt: cfg.dt, t_final: cfg.t_final, stride: cfg.stride };
    let ev = evolve_with(&m.calc, &m.ambient, &m.generator, &s0, opts, |s| acc.push(s)).unwrap();
    let ledger = acc.finish().unwrap();
    DecayRun { cfg, trace: ev.trace, ledger }
}

fn criterion_6(run: &DecayRun) -> Verdict {
    let tr = &run.trace;
    let e0 = tr.energy[0];
    let increase = tr.max_energy_increase() / e0;
    let fit = decay_fit(&tr.times, &tr.energy, FIT_WINDOW).unwrap();
    let ratio = tr.energy[tr.len() - 1] / e0;
    let datko = datko_check(&tr.times, &tr.energy).unwrap();
    verdict(
        increase <= 1e-10 && fit.state_rate > 0.0 && fit.rsq >= 0.95 && ratio <= DECAY_FIXTURE && datko.pass,
        format!(
            "max rise {increase:.1e}, omega {:.4}, rsq {:.5}, E(T)/E0 {ratio:.4e} (fixture {DECAY_FIXTURE:.1e}), \
             Cstar {:.5} vs {:.5}",
            fit.state_rate, fit.rsq, datko.cstar, datko.cstar_half
        ),
    )
}

fn criterion_7() -> Verdict {
    let f = fixture(16, Preset::Zero, 0.0);
    let n0 = f.generator.reduce(&f.null.n0);
    let rep = spectrum(&f.generator, &n0, 6000).unwrap();
    let s0 = f.null.project_off(&f.calc, &random_state(&f.generator, 1)).unwrap();
    let opts = EvolveOptions { dt: 1.0 / 256.0, t_final: 20.0, stride: usize::MAX };
    let tr = evolve(&f.calc, &f.ambient, &f.generator, &s0, opts).unwrap().trace;
    let fit = decay_fit(&tr.times, &tr.energy, FIT_WINDOW).unwrap();
    let target = 2.0 * rep.gap;
    let rel = (fit.energy_rate - target).abs() / target;
    verdict(
        rep.near_zero == 1 && rep.stable_off_null() && rep.alignment >= 1.0 - 1e-6 && rel <= 0.2,
        format!(
            "{} near-zero, gap {:.5}, alignment deficit {:.1e}, energy rate {:.4} vs 2*gap {:.4} ({:.1}%)",
            rep.near_zero,
            rep.gap,
            (1.0 - rep.alignment).max(0.0),
            fit.energy_rate,
            target,
            100.0 * rel
        ),
    )
}

fn l2(c: &fsistab::calculus::DiscreteCalculus, a: &ScalarField, b: &ScalarField) -> f64 {
    let d = ScalarField(a.0.iter().zip(&b.0).map(|(p, q)| p - q).collect());
    c.inner_o(&d, &d).sqrt()
}

fn neumann_error(n: usize) -> f64 {
    let c = calc(n);
    let g = c.geom;
    let f = g.sample(|x, y| 2.0 * PI * PI * (PI * x).cos() * (PI * y).cos());
    let sol = NeumannSolver::new(&c).unwrap().solve(&c, &NeumannData { f, g: BeamField::zeros(&g) }).unwrap();
    l2(&c, &sol.psi, &g.sample(|x, y| (PI * x).cos() * (PI * y).cos()))
}

fn beam_error(n: usize) -> f64 {
    let c = calc(n);
    let w = BeamSolver::new(&c).unwrap().solve(&c, &BeamField::constant(&c.geom, 1.0)).unwrap();
    let exact = c.geom.sample_beam(|x| x * x * (1.0 - x) * (1.0 - x) / 24.0);
    let d = BeamField(w.0.iter().zip(&exact.0).map(|(a, b)| a - b).collect());
    c.inner_b(&d, &d).sqrt()
}

fn criterion_8() -> Verdict {
    let rn = neumann_error(16) / neumann_error(32);
    let rb = beam_error(16) / beam_error(32);
    let c = calc(24);
    let u = Sampler::new(8).vector(&c.geom);
    let s = NeumannSolver::new(&c).unwrap();
    let a = s.leray(&c, &u).unwrap();
    let b = s.leray(&c, &a.pu).unwrap();
    let un = c.inner_ov(&u, &u).sqrt();
    let diff = VectorField {
        u1: ScalarField(a.pu.u1.0.iter().zip(&b.pu.u1.0).map(|(x, y)| x - y).collect()),
        u2: ScalarField(a.pu.u2.0.iter().zip(&b.pu.u2.0).map(|(x, y)| x - y).collect()),
    };
    let idem = c.inner_ov(&diff, &diff).sqrt() / un;
    let sol = weak_divergence(&c, &a.pu).max_abs() / un;
    let orth = c.inner_ov(&a.pu, &c.grad(&a.q)).abs() / (un * un);
    let order = |r: f64| (3.5..=4.5).contains(&r);
    verdict(
        order(rn) && order(rb) && idem <= 1e-10 && sol <= 1e-10 && orth <= 1e-10,
        format!(
            "Neumann ratio {rn:.3}, beam ratio {rb:.3}; Leray idempotence {idem:.1e}, divergence {sol:.1e}, \
             orthogonality {orth:.1e}"
        ),
    )
}

fn smooth_ledger(f: &Fixture, n: usize) -> MultiplierLedger {
    let s0 = common::smooth_state(f);
    let opts = EvolveOptions { dt: 0.5 / n as f64, t_final: 0.5, stride: 1 };
    let ev = evolve(&f.calc, &f.ambient, &f.generator, &s0, opts).unwrap();
    let neu = NeumannSolver::new(&f.calc).unwrap();
    multiplier_report(&f.calc, &f.ambient, &f.generator, &neu, &ev.trajectory).unwrap()
}

fn criterion_9(run: &DecayRun) -> Verdict {
    let ledgers: Vec<MultiplierLedger> =
        [8, 16, 32].iter().map(|&n| smooth_ledger(&fixture(n, Preset::Zero, 0.0), n)).collect();
    let ratios: Vec<f64> = ledgers.windows(2).map(|w| w[0].momentum_residual / w[1].momentum_residual).collect();
    let trace = ledgers
        .iter()
        .chain(std::iter::once(&run.ledger))
        .map(|l| l.trace_residual() / l.trace_beam.max(1.0))
        .fold(0.0f64, f64::max);
    let slack = run.ledger.slack;
    verdict(
        trace <= 1e-10 && ratios.iter().all(|&r| r >= 3.0) && slack >= 0.0,
        format!(
            "trace identity {trace:.1e}, residual ratios {:.3} and {:.3}, slack {slack:.4e} (C0 {:.4e}, C_eps {:.4e})",
            ratios[0], ratios[1], run.ledger.c0, run.ledger.c_eps
        ),
    )
}

fn criterion_10(run: &DecayRun, first: &std::path::Path, second: &std::path::Path) -> Verdict {
    decay_artifacts(&run.cfg, &run.trace).unwrap();
    let mut cfg = parse_config(DECAY_CONFIG).unwrap();
    cfg.out = second.to_path_buf();
    run_subcommand(Subcommand::Decay, &cfg).unwrap();
    let mut same = true;
    let mut sizes = Vec::new();
    for name in ["energy.csv", "decay.csv"] {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        same &= a == b;
        sizes.push(format!("{name} {} bytes", a.len()));
    }
    verdict(same, format!("{}; identical: {same}", sizes.join(", ")))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("first"), dir.path().join("second"));
    let secs = Duration::from_secs;
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "discrete Green identities", timed(Some(secs(10)), criterion_1)),
        (2, "null vector", timed(Some(secs(5)), criterion_2)),
        (3, "energy balance", timed(Some(secs(60)), criterion_3)),
        (4, "null vector is a rest state", timed(None, criterion_4)),
        (5, "charge conservation", timed(None, criterion_5)),
    ];
    let start = Instant::now();
    let run = decay_run(&first);
    let shared = start.elapsed().as_secs_f64();
    results.push((6, "energy decay", timed(None, || criterion_6(&run))));
    results.push((7, "spectrum", timed(Some(secs(120)), criterion_7)));
    results.push((8, "elliptic convergence and Leray projection", timed(None, criterion_8)));
    results.push((9, "multiplier ledger", timed(None, || criterion_9(&run))));
    results.push((10, "determinism", timed(None, || criterion_10(&run, &first, &second))));

    println!("decay run with ledger: {shared:.1}s");
    let mut failed = 0;
    for (n, name, v) in &results {
        println!("criterion {n:>2} {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
