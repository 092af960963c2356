//! Exponential decay fit and the Datko integral test.

use crate::error::{FsiError, Result};

/// Energy floor below which samples are dropped from the fit, relative to `E(0)`.
pub const FLOOR: f64 = 1e-14;
const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `M` in `‖S(t)s‖_H ≤ M e^{−ωt} ‖s‖_H`.
    pub amplitude: f64,
    /// `ω` for the state norm.
    pub state_rate: f64,
    /// Decay rate of the energy, `2ω`.
    pub energy_rate: f64,
    pub rsq: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares line through `(t, ln E)` on `[lo·T, hi·T]`.
pub fn decay_fit(times: &[f64], energy: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != energy.len() || times.is_empty() {
        return Err(FsiError::DegenerateFit("empty or mismatched trace".into()));
    }
    let e0 = energy[0];
    if !(e0 > 0.0) {
        return Err(FsiError::DegenerateFit("initial energy is zero".into()));
    }
    let t_end = times[times.len() - 1];
    let (lo, hi) = (window.0 * t_end, window.1 * t_end);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energy)
        .filter(|&(&t, &e)| t >= lo && t <= hi && e > FLOOR * e0)
        .map(|(&t, &e)| (t, e.ln()))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(FsiError::DegenerateFit(format!(
            "only {} usable samples in the fit window",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    // a flat line is a perfect fit
    let rsq = if syy > 1e-300 { 1.0 - sse / syy } else { 1.0 };
    Ok(DecayFit {
        amplitude: (intercept.exp() / e0).sqrt(),
        state_rate: -0.5 * slope,
        energy_rate: -slope,
        rsq,
        window: (lo, hi),
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatkoReport {
    /// `∫₀ᵀ E / E(0)`
    pub cstar: f64,
    /// Same integral over `[0, T/2]`.
    pub cstar_half: f64,
    pub pass: bool,
}

/// Trapezoid integral of `E` up to time `t_max`, divided by `E(0)`.
pub fn datko_constant(times: &[f64], energy: &[f64], t_max: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        if times[k] > t_max * (1.0 + 1e-12) {
            break;
        }
        acc += 0.5 * (times[k] - times[k - 1]) * (energy[k] + energy[k - 1]);
    }
    acc / energy[0]
}

/// Passes when the Datko constant over `[0,T]` and `[0,T/2]` agree within 5%.
pub fn datko_check(times: &[f64], energy: &[f64]) -> Result<DatkoReport> {
    if times.len() < 3 || times.len() != energy.len() {
        return Err(FsiError::DegenerateFit("trace too short for the Datko check".into()));
    }
    if !(energy[0] > 0.0) {
        return Err(FsiError::DegenerateFit("initial energy is zero".into()));
    }
    let t_end = times[times.len() - 1];
    let cstar = datko_constant(times, energy, t_end);
    let cstar_half = datko_constant(times, energy, 0.5 * t_end);
    Ok(DatkoReport {
        cstar,
        cstar_half,
        pass: (cstar - cstar_half).abs() < 0.05 * cstar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t * k as f64 / n as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(10.0, 1000);
        let e: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let f = decay_fit(&t, &e, (0.1, 0.9)).unwrap();
        assert!((f.state_rate - 1.0).abs() < 1e-10);
        assert!((f.energy_rate - 2.0).abs() < 1e-10);
        assert!((f.amplitude - 1.0).abs() < 1e-8);
        assert!(f.rsq >= 1.0 - 1e-12);
    }

    #[test]
    fn constant_energy() {
        let t = grid(10.0, 100);
        let e = vec![0.7; t.len()];
        let f = decay_fit(&t, &e, (0.1, 0.9)).unwrap();
        assert!(f.energy_rate.abs() < 1e-10);
        let d = datko_check(&t, &e).unwrap();
        assert!(!d.pass);
        assert!((d.cstar - 10.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let t = grid(1.0, 20);
        assert!(decay_fit(&t, &vec![0.0; 21], (0.1, 0.9)).is_err());
        assert!(decay_fit(&t[..5], &[1.0; 5], (0.1, 0.9)).is_err());
    }

    #[test]
    fn datko_limit() {
        let t = grid(20.0, 20000);
        let e: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
        let d = datko_check(&t, &e).unwrap();
        assert!((d.cstar - 0.5).abs() < 1e-6);
        assert!(d.pass);
    }
}
