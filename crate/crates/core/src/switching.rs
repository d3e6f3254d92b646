//! Gamma-distributed switching time of a single junction at fixed pulse
//! amplitude.
//!
//! A pulse of duration `T` fails to switch the junction when the switching
//! time exceeds `T`, so the bit error rate is the gamma survival function
//! `BER(T) = Q(k, T / θ)`. The model is fitted to a set of published
//! (duration, BER) operating points in log10-BER space.

use std::fmt::Write as _;

use crate::error::{CalibrationError, DomainError, SolveError};
use crate::gamma::{ln_upper_reg_gamma, upper_reg_gamma};
use crate::solve::{bisect_decreasing, bracket_upper, golden_min};

/// Reported BERs are clamped from below to this value; the gamma tail is
/// extrapolation past the fitted anchors.
pub const BER_REPORT_FLOOR: f64 = 1e-14;

/// Overdrive ratio V/Vc at which every experiment runs.
pub const DEFAULT_V_RATIO: f64 = 2.0;

/// Largest pulse any solver will consider, in ns.
pub const DEFAULT_MAX_PULSE_NS: f64 = 200.0;

/// Clamp a BER for reporting.
pub fn report_ber(ber: f64) -> f64 {
    ber.max(BER_REPORT_FLOOR)
}

/// Programming pulse: amplitude and duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub v_pulse_mv: f64,
    pub t_pulse_ns: f64,
}

impl PulseSpec {
    pub fn new(v_pulse_mv: f64, t_pulse_ns: f64) -> Result<Self, DomainError> {
        if !(v_pulse_mv > 0.0 && v_pulse_mv.is_finite()) {
            return Err(DomainError::new("pulse voltage must be > 0", v_pulse_mv));
        }
        if !(t_pulse_ns >= 0.0 && t_pulse_ns.is_finite()) {
            return Err(DomainError::new("pulse duration must be >= 0", t_pulse_ns));
        }
        Ok(Self { v_pulse_mv, t_pulse_ns })
    }
}

/// A published operating point: a pulse of `t_ns` gives bit error rate `ber`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub t_ns: f64,
    pub ber: f64,
}

impl Anchor {
    pub const fn new(t_ns: f64, ber: f64) -> Self {
        Self { t_ns, ber }
    }
}

/// The four variability-free operating points at 2.0·Vc: 15 ns for 1e-10,
/// and the 37 %, 45 % and 53 % duration reductions for 1e-4, 1e-3 and 1e-2.
pub const DEFAULT_ANCHORS: [Anchor; 4] = [
    Anchor::new(15.0, 1e-10),
    Anchor::new(9.45, 1e-4),
    Anchor::new(8.25, 1e-3),
    Anchor::new(7.05, 1e-2),
];

/// Fit quality at one anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorResidual {
    pub ber: f64,
    pub anchor_t_ns: f64,
    pub fitted_t_ns: f64,
}

impl AnchorResidual {
    /// (fitted − anchor) / anchor.
    pub fn t_error_fraction(&self) -> f64 {
        (self.fitted_t_ns - self.anchor_t_ns) / self.anchor_t_ns
    }
}

/// Gamma switching-time distribution at one overdrive ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingModel {
    shape_k: f64,
    scale_theta_ns: f64,
    v_ratio: f64,
    delay_ns: f64,
    fit_residuals: Vec<AnchorResidual>,
}

impl SwitchingModel {
    pub fn new(shape_k: f64, scale_theta_ns: f64, v_ratio: f64) -> Result<Self, DomainError> {
        if !(shape_k > 0.0 && shape_k.is_finite()) {
            return Err(DomainError::new("shape k must be > 0", shape_k));
        }
        if !(scale_theta_ns > 0.0 && scale_theta_ns.is_finite()) {
            return Err(DomainError::new("scale theta must be > 0", scale_theta_ns));
        }
        if !(v_ratio > 0.0 && v_ratio.is_finite()) {
            return Err(DomainError::new("voltage ratio must be > 0", v_ratio));
        }
        Ok(Self {
            shape_k,
            scale_theta_ns,
            v_ratio,
            delay_ns: 0.0,
            fit_residuals: Vec::new(),
        })
    }

    /// Adds an incubation delay before which no switching can happen
    /// (three-parameter gamma). Diagnostic only.
    pub fn with_delay(mut self, delay_ns: f64) -> Result<Self, DomainError> {
        if !(delay_ns >= 0.0 && delay_ns.is_finite()) {
            return Err(DomainError::new("delay must be >= 0", delay_ns));
        }
        self.delay_ns = delay_ns;
        Ok(self)
    }

    pub fn shape_k(&self) -> f64 {
        self.shape_k
    }
    pub fn scale_theta_ns(&self) -> f64 {
        self.scale_theta_ns
    }
    pub fn v_ratio(&self) -> f64 {
        self.v_ratio
    }
    pub fn delay_ns(&self) -> f64 {
        self.delay_ns
    }
    pub fn fit_residuals(&self) -> &[AnchorResidual] {
        &self.fit_residuals
    }

    /// Mean switching time, k·θ (plus the delay, if any).
    pub fn mean_ns(&self) -> f64 {
        self.delay_ns + self.shape_k * self.scale_theta_ns
    }

    /// Skewness of the switching-time distribution, 2/√k.
    pub fn skewness(&self) -> f64 {
        2.0 / self.shape_k.sqrt()
    }

    /// Probability that a pulse of `t_ns` fails to switch the junction.
    pub fn ber_at(&self, t_ns: f64) -> f64 {
        self.ber_at_scaled(t_ns, 1.0)
    }

    /// BER of a device whose scale parameter is multiplied by `scale_factor`.
    pub(crate) fn ber_at_scaled(&self, t_ns: f64, scale_factor: f64) -> f64 {
        let x = (t_ns - self.delay_ns) / (self.scale_theta_ns * scale_factor);
        if !(x > 0.0) {
            return 1.0;
        }
        upper_reg_gamma(self.shape_k, x).expect("validated shape")
    }

    /// ln BER, finite far past where [`Self::ber_at`] underflows.
    pub fn ln_ber_at(&self, t_ns: f64) -> f64 {
        let x = (t_ns - self.delay_ns) / self.scale_theta_ns;
        if !(x > 0.0) {
            return 0.0;
        }
        ln_upper_reg_gamma(self.shape_k, x).expect("validated shape")
    }

    /// Pulse duration whose BER equals `target_ber`; exact inverse of
    /// [`Self::ber_at`].
    pub fn tpulse_for_ber(&self, target_ber: f64) -> Result<f64, SolveError> {
        if !(target_ber > 0.0 && target_ber < 1.0) {
            return Err(SolveError::TargetOutOfRange(target_ber));
        }
        let x = inverse_upper_reg_gamma(self.shape_k, target_ber)?;
        Ok(self.delay_ns + x * self.scale_theta_ns)
    }

    /// Rescales the model to another overdrive ratio through `hook`, keeping
    /// skewness (hence shape) constant.
    ///
    /// Approximation, uncalibrated: only the fitted ratio is anchored to data.
    pub fn at_voltage_ratio(&self, v_ratio: f64, hook: &dyn MeanVoltageHook) -> Result<Self, DomainError> {
        let mean = hook.mean_ns(self.shape_k * self.scale_theta_ns, self.v_ratio, v_ratio)?;
        let mut out = Self::new(self.shape_k, mean / self.shape_k, v_ratio)?;
        out.delay_ns = self.delay_ns;
        Ok(out)
    }

    /// `key = value` dump: shape_k, scale_theta, v_ratio, delay and residuals.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "shape_k = {:.17e}", self.shape_k);
        let _ = writeln!(s, "scale_theta = {:.17e}", self.scale_theta_ns);
        let _ = writeln!(s, "v_ratio = {}", self.v_ratio);
        let _ = writeln!(s, "delay_ns = {}", self.delay_ns);
        let _ = writeln!(s, "mean_ns = {:.9}", self.mean_ns());
        let _ = writeln!(s, "skewness = {:.9}", self.skewness());
        let residuals: Vec<String> = self
            .fit_residuals
            .iter()
            .map(|r| format!("{:e}:{}:{}", r.ber, r.anchor_t_ns, r.fitted_t_ns))
            .collect();
        let _ = writeln!(s, "residuals = {}", residuals.join(","));
        s
    }

    /// Parses a dump written by [`Self::to_kv`]. Derived keys (mean, skewness)
    /// are ignored.
    pub fn from_kv(text: &str) -> Result<Self, ParseError> {
        let mut k = None;
        let mut theta = None;
        let mut v_ratio = None;
        let mut delay = 0.0;
        let mut residuals = Vec::new();
        for (lineno, line) in content_lines(text) {
            let (key, value) = line
                .split_once('=')
                .ok_or(ParseError::Syntax { line: lineno, msg: "expected key = value" })?;
            let value = value.trim();
            match key.trim() {
                "shape_k" => k = Some(parse_f64(value, lineno)?),
                "scale_theta" => theta = Some(parse_f64(value, lineno)?),
                "v_ratio" => v_ratio = Some(parse_f64(value, lineno)?),
                "delay_ns" => delay = parse_f64(value, lineno)?,
                "mean_ns" | "skewness" => {}
                "residuals" => {
                    for item in value.split(',').filter(|s| !s.trim().is_empty()) {
                        let parts: Vec<&str> = item.split(':').collect();
                        if parts.len() != 3 {
                            return Err(ParseError::Syntax { line: lineno, msg: "residual must be ber:anchor_t:fitted_t" });
                        }
                        residuals.push(AnchorResidual {
                            ber: parse_f64(parts[0], lineno)?,
                            anchor_t_ns: parse_f64(parts[1], lineno)?,
                            fitted_t_ns: parse_f64(parts[2], lineno)?,
                        });
                    }
                }
                other => return Err(ParseError::UnknownKey { line: lineno, key: other.to_string() }),
            }
        }
        let missing = |name| ParseError::MissingKey(name);
        let mut model = Self::new(
            k.ok_or_else(|| missing("shape_k"))?,
            theta.ok_or_else(|| missing("scale_theta"))?,
            v_ratio.ok_or_else(|| missing("v_ratio"))?,
        )
        .map_err(ParseError::Domain)?
        .with_delay(delay)
        .map_err(ParseError::Domain)?;
        model.fit_residuals = residuals;
        Ok(model)
    }
}

/// Mean switching time as a function of overdrive ratio.
pub trait MeanVoltageHook {
    fn mean_ns(&self, fitted_mean_ns: f64, fitted_v_ratio: f64, v_ratio: f64) -> Result<f64, DomainError>;
}

/// μ(v) ∝ 1 / (v − 1), v = V/Vc. Approximation, uncalibrated.
#[derive(Debug, Clone, Copy, Default)]
pub struct InverseOverdrive;

impl MeanVoltageHook for InverseOverdrive {
    fn mean_ns(&self, fitted_mean_ns: f64, fitted_v_ratio: f64, v_ratio: f64) -> Result<f64, DomainError> {
        if !(v_ratio > 1.0) {
            return Err(DomainError::new("overdrive ratio must exceed 1", v_ratio));
        }
        Ok(fitted_mean_ns * (fitted_v_ratio - 1.0) / (v_ratio - 1.0))
    }
}

/// Solves Q(k, x) = q for x, in log space.
pub fn inverse_upper_reg_gamma(k: f64, q: f64) -> Result<f64, SolveError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SolveError::TargetOutOfRange(q));
    }
    let target = q.ln();
    let f = |x: f64| ln_upper_reg_gamma(k, x).expect("x >= 0");
    // Q(k, x) decays at least like e^-x/2 past x = 2k + ln-scale, so this
    // limit is never hit for representable targets.
    let limit = 4.0 * (k + 10.0) - 2.0 * target;
    let hi = bracket_upper(f, target, k.max(1.0), limit)
        .ok_or(SolveError::Unreachable { target: q, max_t_ns: f64::INFINITY })?;
    Ok(bisect_decreasing(f, target, 0.0, hi, 1e-15))
}

/// Options for [`calibrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub v_ratio: f64,
    /// Largest allowed |fitted T − anchor T| / anchor T.
    pub residual_bound: f64,
    /// Also fit an incubation delay (three-parameter gamma).
    pub fit_delay: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            v_ratio: DEFAULT_V_RATIO,
            residual_bound: 0.05,
            fit_delay: false,
        }
    }
}

/// Fits a two-parameter gamma model to `anchors` at the default ratio.
pub fn calibrate(anchors: &[Anchor]) -> Result<SwitchingModel, CalibrationError> {
    calibrate_with(anchors, &CalibrationOptions::default())
}

/// Least-squares fit of (k, θ) minimizing Σ (log10 BER_model − log10 BER_anchor)².
///
/// The outer search runs on ln k (coarse scan, then golden section around the
/// best scan point). For each k the inner search runs on ln θ: every anchor
/// term is monotone in θ with its zero at θ_i = T_i / Q⁻¹(k, BER_i), so the
/// minimizer lies in [min θ_i, max θ_i].
pub fn calibrate_with(anchors: &[Anchor], opts: &CalibrationOptions) -> Result<SwitchingModel, CalibrationError> {
    validate_anchors(anchors)?;
    let (k, theta, delay) = if opts.fit_delay {
        fit_with_delay(anchors)?
    } else {
        let (k, theta, _) = fit_two_param(anchors)?;
        (k, theta, 0.0)
    };
    let mut model = SwitchingModel::new(k, theta, opts.v_ratio)
        .and_then(|m| m.with_delay(delay))
        .map_err(SolveError::from)?;
    let mut residuals = Vec::with_capacity(anchors.len());
    for a in anchors {
        let fitted = model.tpulse_for_ber(a.ber)?;
        let r = AnchorResidual {
            ber: a.ber,
            anchor_t_ns: a.t_ns,
            fitted_t_ns: fitted,
        };
        if r.t_error_fraction().abs() > opts.residual_bound {
            return Err(CalibrationError::ResidualBound {
                ber: a.ber,
                anchor_t_ns: a.t_ns,
                fitted_t_ns: fitted,
                bound: opts.residual_bound,
            });
        }
        residuals.push(r);
    }
    model.fit_residuals = residuals;
    Ok(model)
}

fn validate_anchors(anchors: &[Anchor]) -> Result<(), CalibrationError> {
    if anchors.len() < 2 {
        return Err(CalibrationError::TooFewAnchors { need: 2, got: anchors.len() });
    }
    for a in anchors {
        if !(a.t_ns > 0.0 && a.t_ns.is_finite()) {
            return Err(CalibrationError::InvalidAnchor { t_ns: a.t_ns, ber: a.ber, why: "duration must be > 0" });
        }
        if !(a.ber > 0.0 && a.ber < 1.0) {
            return Err(CalibrationError::InvalidAnchor { t_ns: a.t_ns, ber: a.ber, why: "BER must lie in (0, 1)" });
        }
    }
    let mut sorted = anchors.to_vec();
    sorted.sort_by(|a, b| a.t_ns.total_cmp(&b.t_ns));
    if sorted.windows(2).any(|w| !(w[1].t_ns > w[0].t_ns && w[1].ber < w[0].ber)) {
        return Err(CalibrationError::NotMonotone);
    }
    Ok(())
}

fn sum_sq_log10(k: f64, theta: f64, anchors: &[Anchor], delay: f64) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let x = (a.t_ns - delay) / theta;
            let model = ln_upper_reg_gamma(k, x.max(0.0)).expect("k > 0");
            let d = (model - a.ber.ln()) / std::f64::consts::LN_10;
            d * d
        })
        .sum()
}

/// Best ln θ for fixed k; returns (θ, objective).
fn best_theta(k: f64, anchors: &[Anchor], delay: f64) -> Result<(f64, f64), SolveError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in anchors {
        let x = inverse_upper_reg_gamma(k, a.ber)?;
        let th = ((a.t_ns - delay) / x).ln();
        lo = lo.min(th);
        hi = hi.max(th);
    }
    if hi - lo < 1e-15 {
        let th = lo.exp();
        return Ok((th, sum_sq_log10(k, th, anchors, delay)));
    }
    let (ln_th, f) = golden_min(|t| sum_sq_log10(k, t.exp(), anchors, delay), lo, hi, 1e-13);
    Ok((ln_th.exp(), f))
}

const LN_K_MIN: f64 = -2.302_585_092_994_046; // ln 0.1
const LN_K_MAX: f64 = 7.600_902_459_542_082; // ln 2000
const K_SCAN_POINTS: usize = 64;

fn fit_two_param(anchors: &[Anchor]) -> Result<(f64, f64, f64), CalibrationError> {
    fit_two_param_shifted(anchors, 0.0)
}

fn fit_two_param_shifted(anchors: &[Anchor], delay: f64) -> Result<(f64, f64, f64), CalibrationError> {
    let step = (LN_K_MAX - LN_K_MIN) / (K_SCAN_POINTS - 1) as f64;
    let mut scan = Vec::with_capacity(K_SCAN_POINTS);
    for i in 0..K_SCAN_POINTS {
        let ln_k = LN_K_MIN + step * i as f64;
        let (_, f) = best_theta(ln_k.exp(), anchors, delay)?;
        scan.push(f);
    }
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let lo = LN_K_MIN + step * best.saturating_sub(1) as f64;
    let hi = LN_K_MIN + step * (best + 1).min(K_SCAN_POINTS - 1) as f64;
    let mut err = None;
    let (ln_k, _) = golden_min(
        |ln_k| match best_theta(ln_k.exp(), anchors, delay) {
            Ok((_, f)) => f,
            Err(e) => {
                err = Some(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e.into());
    }
    let k = ln_k.exp();
    let (theta, f) = best_theta(k, anchors, delay)?;
    Ok((k, theta, f))
}

fn fit_with_delay(anchors: &[Anchor]) -> Result<(f64, f64, f64), CalibrationError> {
    let t_min = anchors.iter().map(|a| a.t_ns).fold(f64::INFINITY, f64::min);
    let upper = 0.95 * t_min;
    let steps = 24;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=steps {
        let d = upper * i as f64 / steps as f64;
        let (_, _, f) = fit_two_param_shifted(anchors, d)?;
        if f < best.1 {
            best = (d, f);
        }
    }
    let h = upper / steps as f64;
    let (d, _) = golden_min(
        |d| fit_two_param_shifted(anchors, d).map(|r| r.2).unwrap_or(f64::INFINITY),
        (best.0 - h).max(0.0),
        (best.0 + h).min(upper),
        1e-9,
    );
    let (k, theta, _) = fit_two_param_shifted(anchors, d)?;
    Ok((k, theta, d))
}

/// Error reading an anchor file or model dump.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: &'static str },
    #[error("line {line}: invalid number {text:?}")]
    Number { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("missing key {0}")]
    MissingKey(&'static str),
    #[error(transparent)]
    Domain(DomainError),
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_f64(s: &str, line: usize) -> Result<f64, ParseError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ParseError::Number { line, text: s.trim().to_string() })
}

/// Parses anchors: one `t_pulse_ns<TAB>ber` pair per line, `#` comments.
pub fn parse_anchors(text: &str) -> Result<Vec<Anchor>, ParseError> {
    content_lines(text)
        .map(|(line, l)| {
            let mut it = l.split('\t').map(str::trim).filter(|s| !s.is_empty());
            let (t, b) = match (it.next(), it.next(), it.next()) {
                (Some(t), Some(b), None) => (t, b),
                _ => return Err(ParseError::Syntax { line, msg: "expected t_pulse_ns<TAB>ber" }),
            };
            Ok(Anchor::new(parse_f64(t, line)?, parse_f64(b, line)?))
        })
        .collect()
}

/// Inverse of [`parse_anchors`].
pub fn format_anchors(anchors: &[Anchor]) -> String {
    let mut s = String::from("# t_pulse_ns\tber\n");
    for a in anchors {
        let _ = writeln!(s, "{}\t{:e}", a.t_ns, a.ber);
    }
    s
}
