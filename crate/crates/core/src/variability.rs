//! Device-to-device variability folded into one log-normal factor on the
//! gamma scale parameter.
//!
//! Device `i` switches with scale θ·exp(σ·Zᵢ), Zᵢ ~ N(0, 1). The array BER
//! at a pulse duration is the population mean of the per-device BER,
//! integrated with Gauss–Hermite quadrature.

use crate::error::{CalibrationError, SolveError};
use crate::solve::{bisect_decreasing, bracket_upper};
use crate::switching::{SwitchingModel, DEFAULT_MAX_PULSE_NS};

pub const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// The spread that keeps BER 1e-10 at 20.5 ns.
pub const DEFAULT_VARIABILITY_ANCHOR: (f64, f64) = (1e-10, 20.5);

/// How a population of device BERs collapses into one array BER.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrayBerMode {
    /// Mean device BER.
    Mean,
    /// BER of the device `z` standard deviations slow (worst-case style).
    Percentile { z: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariabilityModel {
    sigma_scale: f64,
    mode: ArrayBerMode,
    max_pulse_ns: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl VariabilityModel {
    pub fn new(sigma_scale: f64, quadrature_order: usize) -> Self {
        assert!(sigma_scale >= 0.0 && sigma_scale.is_finite(), "sigma_scale must be >= 0");
        assert!(quadrature_order >= 1, "quadrature order must be >= 1");
        let (nodes, weights) = gauss_hermite(quadrature_order);
        Self {
            sigma_scale,
            mode: ArrayBerMode::Mean,
            max_pulse_ns: DEFAULT_MAX_PULSE_NS,
            nodes,
            weights,
        }
    }

    /// No variability at all.
    pub fn none() -> Self {
        Self::new(0.0, 1)
    }

    pub fn with_mode(mut self, mode: ArrayBerMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_pulse_ns(mut self, max_pulse_ns: f64) -> Self {
        self.max_pulse_ns = max_pulse_ns;
        self
    }

    pub fn sigma_scale(&self) -> f64 {
        self.sigma_scale
    }
    pub fn quadrature_order(&self) -> usize {
        self.nodes.len()
    }
    pub fn mode(&self) -> ArrayBerMode {
        self.mode
    }
    pub fn max_pulse_ns(&self) -> f64 {
        self.max_pulse_ns
    }

    /// Array-level BER at pulse duration `t_ns`.
    pub fn array_ber(&self, switch: &SwitchingModel, t_ns: f64) -> f64 {
        if self.sigma_scale == 0.0 {
            return switch.ber_at(t_ns);
        }
        match self.mode {
            ArrayBerMode::Mean => {
                let s = std::f64::consts::SQRT_2 * self.sigma_scale;
                let sum: f64 = self
                    .nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(&x, &w)| w * switch.ber_at_scaled(t_ns, (s * x).exp()))
                    .sum();
                (sum / std::f64::consts::PI.sqrt()).clamp(0.0, 1.0)
            }
            ArrayBerMode::Percentile { z } => switch.ber_at_scaled(t_ns, (self.sigma_scale * z).exp()),
        }
    }

    /// Bisection inverse of [`Self::array_ber`] in log-BER space.
    pub fn tpulse_for_array_ber(&self, switch: &SwitchingModel, target_ber: f64) -> Result<f64, SolveError> {
        if !(target_ber > 0.0 && target_ber < 1.0) {
            return Err(SolveError::TargetOutOfRange(target_ber));
        }
        if self.sigma_scale == 0.0 {
            let t = switch.tpulse_for_ber(target_ber)?;
            if t > self.max_pulse_ns {
                return Err(SolveError::Unreachable { target: target_ber, max_t_ns: self.max_pulse_ns });
            }
            return Ok(t);
        }
        let target = target_ber.ln();
        let f = |t: f64| self.array_ber(switch, t).ln();
        let start = switch.tpulse_for_ber(target_ber)?.min(self.max_pulse_ns);
        let hi = bracket_upper(f, target, start, self.max_pulse_ns)
            .ok_or(SolveError::Unreachable { target: target_ber, max_t_ns: self.max_pulse_ns })?;
        Ok(bisect_decreasing(f, target, 0.0, hi, 1e-14))
    }
}

/// Options for [`calibrate_variability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariabilityCalibration {
    pub quadrature_order: usize,
    pub max_sigma: f64,
    pub max_pulse_ns: f64,
    /// Relative agreement required between the solved and anchor duration.
    pub tolerance: f64,
    /// Aggregation the spread is fitted under.
    pub mode: ArrayBerMode,
}

impl Default for VariabilityCalibration {
    fn default() -> Self {
        Self {
            quadrature_order: DEFAULT_QUADRATURE_ORDER,
            max_sigma: 2.0,
            max_pulse_ns: DEFAULT_MAX_PULSE_NS,
            tolerance: 1e-3,
            mode: ArrayBerMode::Mean,
        }
    }
}

/// Solves for the spread σ at which the array needs `anchor_t_ns` to reach
/// `anchor_ber`.
pub fn calibrate_variability(
    switch: &SwitchingModel,
    anchor_ber: f64,
    anchor_t_ns: f64,
    opts: &VariabilityCalibration,
) -> Result<VariabilityModel, CalibrationError> {
    let deterministic = switch.tpulse_for_ber(anchor_ber)?;
    let build = |sigma: f64| VariabilityModel::new(sigma, opts.quadrature_order)
            .with_max_pulse_ns(opts.max_pulse_ns)
            .with_mode(opts.mode);
    if ((anchor_t_ns - deterministic) / deterministic).abs() <= opts.tolerance {
        return Ok(build(0.0));
    }
    if anchor_t_ns < deterministic {
        return Err(CalibrationError::AnchorBelowDeterministic {
            t_ns: anchor_t_ns,
            deterministic_t_ns: deterministic,
        });
    }
    let no_solution = CalibrationError::NoVariabilitySolution {
        ber: anchor_ber,
        t_ns: anchor_t_ns,
        max_sigma: opts.max_sigma,
    };
    // Required duration grows with σ; an unreachable target counts as too long.
    let t_of = |sigma: f64| match build(sigma).tpulse_for_array_ber(switch, anchor_ber) {
        Ok(t) => Ok(t),
        Err(SolveError::Unreachable { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    };
    if t_of(opts.max_sigma)? < anchor_t_ns {
        return Err(no_solution);
    }
    let (mut lo, mut hi) = (0.0, opts.max_sigma);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if t_of(mid)? < anchor_t_ns {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let model = build(sigma);
    let t = model.tpulse_for_array_ber(switch, anchor_ber)?;
    if ((t - anchor_t_ns) / anchor_t_ns).abs() > opts.tolerance {
        return Err(no_solution);
    }
    Ok(model)
}

/// Gauss–Hermite nodes and weights for ∫ f(x) e^{-x²} dx, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
