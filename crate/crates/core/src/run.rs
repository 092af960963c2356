//! Subcommand orchestration and CSV emission.
//!
//! Every CSV starts with `# config <resolved config>`, then a header row,
//! then rows with floats printed as `{:.17e}`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ambient::{check_cc, AmbientField, CcReport, Preset};
use crate::analyze::{datko_check, decay_fit, spectrum, LedgerAccumulator};
use crate::calculus::{Coefficients, DiscreteCalculus};
use crate::config::RunConfig;
use crate::elliptic::{weak_divergence, BeamSolver, NeumannData, NeumannSolver};
use crate::error::{FsiError, Result};
use crate::evolve::{cn_step, evolve, evolve_with, EnergyTrace, EvolveOptions};
use crate::generator::{Generator, NullSpace};
use crate::grid::{BeamField, Geometry, ScalarField, State, VectorField};
use crate::init::{initial_state, random_state};

/// Fit window as fractions of `T`.
pub const FIT_WINDOW: (f64, f64) = (0.1, 0.9);
const NULL_TOL: f64 = 1e-10;
const BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Spectrum,
    Nullspace,
    Decay,
    Diagnose,
    Selftest,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Simulate,
        Subcommand::Spectrum,
        Subcommand::Nullspace,
        Subcommand::Decay,
        Subcommand::Diagnose,
        Subcommand::Selftest,
    ];
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Spectrum => "spectrum",
            Subcommand::Nullspace => "nullspace",
            Subcommand::Decay => "decay",
            Subcommand::Diagnose => "diagnose",
            Subcommand::Selftest => "selftest",
        })
    }
}

impl FromStr for Subcommand {
    type Err = FsiError;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| FsiError::Config(format!("unknown subcommand `{s}`")))
    }
}

/// What a subcommand produced. `pass = false` means the run completed but a
/// numerical check did not hold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    /// `(name, value)` lines for the console.
    pub summary: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn note(&mut self, name: &str, value: impl fmt::Display) {
        self.summary.push((name.to_string(), value.to_string()));
    }

    fn num(&mut self, name: &str, value: f64) {
        self.note(name, format_args!("{value:.6e}"));
    }
}

/// Exit code of a finished subcommand: 0 pass, 1 validation error, 2 numerical failure.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.pass => 0,
        Ok(_) => 2,
        Err(e) if e.is_validation() => 1,
        Err(_) => 2,
    }
}

/// Operators built from a configuration.
pub struct Model {
    pub calc: DiscreteCalculus,
    pub ambient: AmbientField,
    pub generator: Generator,
    pub beam: BeamSolver,
    pub null: NullSpace,
}

impl Model {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        let calc = DiscreteCalculus::new(&cfg.geometry, cfg.coefficients)?;
        let ambient = AmbientField::preset(&calc, cfg.preset, cfg.amplitude)?;
        let generator = Generator::assemble(&calc, &ambient, cfg.kappa)?;
        let beam = BeamSolver::new(&calc)?;
        let null = NullSpace::new(&calc, &beam)?;
        Ok(Self { calc, ambient, generator, beam, null })
    }

    pub fn initial_state(&self, cfg: &RunConfig) -> Result<State> {
        initial_state(&self.calc, &self.generator, &self.null, &cfg.init)
    }

    fn options(cfg: &RunConfig) -> EvolveOptions {
        EvolveOptions { dt: cfg.dt, t_final: cfg.t_final, stride: cfg.stride }
    }
}

pub fn run_subcommand(cmd: Subcommand, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Subcommand::Simulate => simulate(cfg),
        Subcommand::Spectrum => spectrum_cmd(cfg),
        Subcommand::Nullspace => nullspace(cfg),
        Subcommand::Decay => decay(cfg),
        Subcommand::Diagnose => diagnose(cfg),
        Subcommand::Selftest => selftest(cfg),
    }
}

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let s0 = m.initial_state(cfg)?;
    let ev = evolve(&m.calc, &m.ambient, &m.generator, &s0, Model::options(cfg))?;
    let mut out = Outcome::default();
    out.files.push(write_energy_csv(cfg, &ev.trace)?);
    let path = output_path(cfg, "final_state.txt")?;
    crate::state_io::write_state(&path, &m.calc.geom, &ev.final_state)?;
    out.files.push(path);
    energy_summary(&mut out, &ev.trace);
    Ok(out)
}

fn energy_summary(out: &mut Outcome, trace: &EnergyTrace) {
    let e0 = trace.energy[0];
    let worst = trace.max_abs_step_residual();
    out.num("E0", e0);
    out.num("E_final", *trace.energy.last().unwrap_or(&e0));
    out.num("max_step_residual", worst);
    out.num("max_balance", trace.max_abs_balance());
    out.pass = worst <= BALANCE_TOL * e0.max(1.0);
}

fn spectrum_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let n0 = m.generator.reduce(&m.null.n0);
    let rep = spectrum(&m.generator, &n0, cfg.eig_cap)?;
    let mut out = Outcome::default();
    let rows = rep.eigenvalues.iter().map(|&(re, im)| vec![re, im]);
    out.files.push(write_csv(cfg, "eigenvalues.csv", &["re", "im"], rows)?);
    let (zre, zim) = rep.zero_eigenvalue();
    let table = [
        ("order", m.generator.order() as f64),
        ("near_zero", rep.near_zero as f64),
        ("zero_re", zre),
        ("zero_im", zim),
        ("gap", rep.gap),
        ("alignment", rep.alignment),
    ];
    out.files.push(write_table(cfg, "spectrum.csv", &table)?);
    for (k, v) in table {
        out.num(k, v);
    }
    out.pass = rep.near_zero == 1 && rep.stable_off_null();
    Ok(out)
}

fn nullspace(cfg: &RunConfig) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let residual = m.null.residual(&m.calc, &m.generator)?;
    let CcReport { max_defect, pass: cc_pass } = check_cc(&m.calc, &m.beam, &m.ambient)?;
    let table = [("residual", residual), ("cc_defect", max_defect), ("cc_pass", f64::from(u8::from(cc_pass)))];
    let mut out = Outcome::default();
    out.files.push(write_table(cfg, "nullspace.csv", &table)?);
    out.num("residual", residual);
    out.num("cc_defect", max_defect);
    out.note("cc_pass", cc_pass);
    out.pass = residual <= NULL_TOL && (cfg.kappa == 0.0 || cc_pass);
    Ok(out)
}

fn decay(cfg: &RunConfig) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let s0 = m.initial_state(cfg)?;
    let ev = evolve(&m.calc, &m.ambient, &m.generator, &s0, Model::options(cfg))?;
    decay_artifacts(cfg, &ev.trace)
}

/// Fits the trace, runs the Datko check and writes `energy.csv` and `decay.csv`.
pub fn decay_artifacts(cfg: &RunConfig, tr: &EnergyTrace) -> Result<Outcome> {
    let fit = decay_fit(&tr.times, &tr.energy, FIT_WINDOW)?;
    let datko = datko_check(&tr.times, &tr.energy)?;
    let e0 = tr.energy[0];
    let ratio = tr.energy.last().copied().unwrap_or(e0) / e0;
    let table = [
        ("amplitude", fit.amplitude),
        ("state_rate", fit.state_rate),
        ("energy_rate", fit.energy_rate),
        ("rsq", fit.rsq),
        ("window_lo", fit.window.0),
        ("window_hi", fit.window.1),
        ("samples", fit.samples as f64),
        ("energy_ratio", ratio),
        ("max_energy_increase", tr.max_energy_increase()),
        ("cstar", datko.cstar),
        ("cstar_half", datko.cstar_half),
        ("datko_pass", f64::from(u8::from(datko.pass))),
    ];
    let mut out = Outcome::default();
    out.files.push(write_energy_csv(cfg, tr)?);
    out.files.push(write_table(cfg, "decay.csv", &table)?);
    for (k, v) in table {
        out.num(k, v);
    }
    out.pass = fit.state_rate > 0.0 && datko.pass;
    Ok(out)
}

fn diagnose(cfg: &RunConfig) -> Result<Outcome> {
    let m = Model::build(cfg)?;
    let s0 = m.initial_state(cfg)?;
    let neumann = NeumannSolver::new(&m.calc)?;
    let mut acc = LedgerAccumulator::new(&m.calc, &m.ambient, &m.generator, &neumann, cfg.dt)?;
    evolve_with(&m.calc, &m.ambient, &m.generator, &s0, Model::options(cfg), |s| acc.push(s))?;
    let ledger = acc.finish()?;
    let rows = ledger.rows();
    let mut out = Outcome::default();
    out.files.push(write_table(cfg, "ledger.csv", &rows)?);
    for k in ["trace_residual", "momentum_residual", "c0", "c_eps", "slack"] {
        if let Some((_, v)) = rows.iter().find(|(n, _)| *n == k) {
            out.num(k, *v);
        }
    }
    out.pass = ledger.slack >= 0.0;
    Ok(out)
}

/// One named invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.value <= self.tol
    }
}

/// Invariant suites on the configured grid with default coefficients.
pub fn self_checks(geom: &Geometry) -> Result<Vec<Check>> {
    let calc = DiscreteCalculus::new(geom, Coefficients::default())?;
    let g = &calc.geom;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    let mut scalar = || ScalarField((0..g.n_nodes()).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    let (p, q) = (scalar(), scalar());
    let u = VectorField { u1: q, u2: scalar() };
    let v = VectorField { u1: scalar(), u2: scalar() };
    let w1 = BeamField::from_interior(g, &scalar().0[..g.nx - 1]);
    let w2 = BeamField::from_interior(g, &scalar().0[..g.nx - 1]);
    let [green, elastic, beam_sym] = calc.green_residuals(&p, &u, &v, &w1, &w2);
    let mut checks = vec![
        Check { name: "green_grad_div", value: green, tol: 1e-12 },
        Check { name: "green_elasticity", value: elastic, tol: 1e-12 },
        Check { name: "beam_symmetry", value: beam_sym, tol: 1e-12 },
        Check {
            name: "grad_constant",
            value: {
                let gc = calc.grad(&ScalarField::constant(g, 3.0));
                gc.u1.max_abs().max(gc.u2.max_abs())
            },
            tol: 1e-12,
        },
    ];

    let neumann = NeumannSolver::new(&calc)?;
    let split = neumann.leray(&calc, &u)?;
    let again = neumann.leray(&calc, &split.pu)?;
    let un = calc.inner_ov(&u, &u).sqrt();
    checks.push(Check {
        name: "leray_idempotent",
        value: calc.inner_ov(&vsub(&again.pu, &split.pu), &vsub(&again.pu, &split.pu)).sqrt() / un,
        tol: 1e-10,
    });
    checks.push(Check {
        name: "leray_solenoidal",
        value: weak_divergence(&calc, &split.pu).max_abs() / un,
        tol: 1e-10,
    });
    let mean = crate::sparse::dot(&calc.wo, &p.0) / calc.wo.iter().sum::<f64>();
    let f = ScalarField(p.0.iter().map(|x| x - mean).collect());
    let sol = neumann.solve(&calc, &NeumannData { f: f.clone(), g: BeamField::zeros(g) })?;
    let lap = neumann.laplacian().mul_vec(&sol.psi.0);
    let wf: Vec<f64> = f.0.iter().zip(&calc.wo).map(|(a, b)| a * b).collect();
    let res = lap.iter().zip(&wf).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    checks.push(Check {
        name: "neumann_residual",
        value: res / wf.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        tol: 1e-10,
    });

    let beam = BeamSolver::new(&calc)?;
    let null = NullSpace::new(&calc, &beam)?;
    for (name, preset, kappa) in [
        ("null_residual_k0", Preset::Zero, 0.0),
        ("null_residual_k1_vortex", Preset::SolenoidalVortex, 1.0),
    ] {
        let amb = AmbientField::preset(&calc, preset, 1.0)?;
        let gen = Generator::assemble(&calc, &amb, kappa)?;
        checks.push(Check { name, value: null.residual(&calc, &gen)?, tol: NULL_TOL });
        if kappa == 0.0 {
            let fixed = cn_step(&gen, &null.n0, g.hx.min(g.hy) / 2.0)?;
            let d = fixed.axpy(-1.0, &null.n0);
            checks.push(Check {
                name: "cn_fixed_point",
                value: calc.norm_h(&d)? / calc.norm_h(&null.n0)?,
                tol: 1e-10,
            });
        }
        let s0 = random_state(&gen, 11);
        let dt = g.hx.min(g.hy) / 2.0;
        let ev = evolve(&calc, &amb, &gen, &s0, EvolveOptions { dt, t_final: 16.0 * dt, stride: 16 })?;
        let name = if kappa == 0.0 { "energy_balance_k0" } else { "energy_balance_k1_vortex" };
        checks.push(Check {
            name,
            value: ev.trace.max_abs_step_residual() / ev.trace.energy[0].max(1.0),
            tol: BALANCE_TOL,
        });
    }

    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
    let energy: Vec<f64> = times.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
    let fit = decay_fit(&times, &energy, FIT_WINDOW)?;
    checks.push(Check { name: "decay_fit_rate", value: (fit.energy_rate - 2.0).abs(), tol: 1e-9 });

    let zero = AmbientField::preset(&calc, Preset::Zero, 0.0)?;
    let sample = random_state(&Generator::assemble(&calc, &zero, 0.0)?, 3);
    let text = crate::state_io::format_state(g, &sample)?;
    let again = crate::state_io::format_state(g, &crate::state_io::parse_state(&text, g)?)?;
    checks.push(Check { name: "state_roundtrip", value: if again == text { 0.0 } else { 1.0 }, tol: 0.0 });
    Ok(checks)
}

fn selftest(cfg: &RunConfig) -> Result<Outcome> {
    let checks = self_checks(&cfg.geometry)?;
    let mut out = Outcome { pass: true, ..Default::default() };
    for c in &checks {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        out.note(c.name, format_args!("{verdict} {:.3e} (tol {:.1e})", c.value, c.tol));
        out.pass &= c.pass();
    }
    Ok(out)
}

fn vsub(a: &VectorField, b: &VectorField) -> VectorField {
    let d = |x: &ScalarField, y: &ScalarField| ScalarField(x.0.iter().zip(&y.0).map(|(p, q)| p - q).collect());
    VectorField { u1: d(&a.u1, &b.u1), u2: d(&a.u2, &b.u2) }
}

fn output_path(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    Ok(cfg.out.join(name))
}

/// Writes a numeric CSV under the configured output directory.
pub fn write_csv(
    cfg: &RunConfig,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<PathBuf> {
    let path = output_path(cfg, name)?;
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "# config {}", cfg.resolved())?;
    writeln!(f, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    Ok(path)
}

fn write_table(cfg: &RunConfig, name: &str, rows: &[(&str, f64)]) -> Result<PathBuf> {
    let path = output_path(cfg, name)?;
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(f, "# config {}", cfg.resolved())?;
    writeln!(f, "quantity,value")?;
    for (k, v) in rows {
        writeln!(f, "{k},{v:.17e}")?;
    }
    f.flush()?;
    Ok(path)
}

/// Columns `t,E,D,Sdiv,Skappa,Q,balance_residual`.
pub fn write_energy_csv(cfg: &RunConfig, tr: &EnergyTrace) -> Result<PathBuf> {
    let rows = (0..tr.len()).map(|k| {
        vec![tr.times[k], tr.energy[k], tr.dissipation[k], tr.sdiv[k], tr.skappa[k], tr.charge[k], tr.balance[k]]
    });
    write_csv(cfg, "energy.csv", &["t", "E", "D", "Sdiv", "Skappa", "Q", "balance_residual"], rows)
}

/// Reads a config file, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => crate::config::parse_config(""),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| FsiError::Config(format!("cannot read config {}: {e}", p.display())))?;
            crate::config::parse_config(&text)
        }
    }
}
