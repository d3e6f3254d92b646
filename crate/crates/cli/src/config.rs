//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers, `#` comments. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use stmram::memory::{Encoding, FixedPointFormat, Scheme};
use stmram::nn::TrainConfig;
use stmram::switching::{parse_anchors, Anchor};
use stmram::variability::ArrayBerMode;
use stmram::CalibrationInputs;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key {key:?} in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key {key:?} in [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },
    #[error("line {line}: bad value for {key}: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything a CLI command needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub calibration: CalibrationInputs,
    pub use_variability: bool,
    pub train: TrainConfig,
    pub n_seeds: usize,
    pub mnist_dir: PathBuf,
    pub test_limit: Option<usize>,
    /// Scheme trained by the `train` command.
    pub run_scheme: Scheme,
    pub energy_bers: Vec<f64>,
    pub uniform_bers: Vec<f64>,
    pub tier_n_lsb: Vec<u32>,
    pub tier_lsb_bers: Vec<f64>,
    pub tier_ber_hsb: f64,
    pub baseline_ber: f64,
    pub out: Option<PathBuf>,
    pub seed_base: u64,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            calibration: CalibrationInputs::default(),
            use_variability: true,
            train: TrainConfig::default(),
            n_seeds: 5,
            mnist_dir: PathBuf::from("data/mnist"),
            test_limit: None,
            run_scheme: Scheme::Uniform { ber: 1e-10 },
            energy_bers: (1..=10).rev().map(|e| 10f64.powi(-e)).collect(),
            uniform_bers: vec![1e-10, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 3e-1],
            tier_n_lsb: vec![4, 6, 8, 10, 12, 14],
            tier_lsb_bers: vec![1e-2, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            tier_ber_hsb: 1e-2,
            baseline_ber: 1e-10,
            out: None,
            seed_base: 1,
            jobs: 1,
        }
    }
}

struct Value<'a> {
    line: usize,
    key: &'a str,
    text: &'a str,
}

impl Value<'_> {
    fn err(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::Value { line: self.line, key: self.key.to_string(), msg: msg.into() }
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        self.text.parse::<f64>().map_err(|_| self.err(format!("expected a number, got {:?}", self.text)))
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.text.parse::<usize>().map_err(|_| self.err(format!("expected a count, got {:?}", self.text)))
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.text.parse::<u64>().map_err(|_| self.err(format!("expected an integer, got {:?}", self.text)))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.text {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(self.err(format!("expected true/false, got {other:?}"))),
        }
    }

    fn list<T>(&self, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
        self.text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse(s).ok_or_else(|| self.err(format!("bad list item {s:?}"))))
            .collect()
    }

    fn f64_list(&self) -> Result<Vec<f64>, ConfigError> {
        self.list(|s| s.parse().ok())
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "device",
        &[
            "diameter_nm",
            "storage_thickness_nm",
            "saturation_magnetization_t",
            "resistance_area_ohm_um2",
            "tmr",
            "v_critical_mv",
            "delta_e_kt",
        ],
    ),
    ("switching", &["anchors", "anchors_file", "v_ratio", "residual_bound", "fit_delay"]),
    ("energy", &["v_pulse_mv", "anchor_t_ns", "anchor_energy_pj"]),
    (
        "variability",
        &["enabled", "anchor_ber", "anchor_t_ns", "quadrature_order", "max_sigma", "max_pulse_ns", "mode", "percentile_z"],
    ),
    ("format", &["fractional_bits", "encoding"]),
    (
        "train",
        &[
            "mnist_dir",
            "minibatch",
            "epochs",
            "learning_rate",
            "n_seeds",
            "train_limit",
            "test_limit",
            "scheme",
            "ber",
            "n_lsb",
            "ber_hsb",
            "ber_lsb",
        ],
    ),
    ("sweep", &["energy_bers", "uniform_bers", "n_lsb", "lsb_bers", "ber_hsb", "baseline_ber"]),
    ("output", &["out", "seed_base", "jobs"]),
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses `text`; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(name) = l.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax { line, msg: "unterminated section header".into() })?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::UnknownSection { line, section: name.to_string() });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = l
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, msg: "expected key = value".into() })?;
            let key = key.trim();
            let sec = section
                .clone()
                .ok_or_else(|| ConfigError::Syntax { line, msg: "key outside of any [section]".into() })?;
            let known = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                return Err(ConfigError::UnknownKey { line, section: sec, key: key.to_string() });
            }
            if entries.insert((sec.clone(), key.to_string()), (line, value.trim().to_string())).is_some() {
                return Err(ConfigError::DuplicateKey { line, section: sec, key: key.to_string() });
            }
        }

        let mut cfg = Self::default();
        let get = |s: &str, k: &'static str| {
            entries.get(&(s.to_string(), k.to_string())).map(|(line, text)| Value { line: *line, key: k, text })
        };
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        let dev = &mut cfg.calibration.device;
        for (key, slot) in [
            ("diameter_nm", &mut dev.diameter_nm),
            ("storage_thickness_nm", &mut dev.storage_thickness_nm),
            ("saturation_magnetization_t", &mut dev.saturation_magnetization_t),
            ("resistance_area_ohm_um2", &mut dev.resistance_area_ohm_um2),
            ("tmr", &mut dev.tmr),
            ("v_critical_mv", &mut dev.v_critical_mv),
            ("delta_e_kt", &mut dev.delta_e_kt),
        ] {
            if let Some(v) = get("device", key) {
                *slot = v.f64()?;
            }
        }

        let cal = &mut cfg.calibration;
        match (get("switching", "anchors"), get("switching", "anchors_file")) {
            (Some(_), Some(v)) => return Err(v.err("give either anchors or anchors_file, not both")),
            (Some(v), None) => {
                cal.anchors = v.list(|item| {
                    let (t, b) = item.split_once(':')?;
                    Some(Anchor::new(t.trim().parse().ok()?, b.trim().parse().ok()?))
                })?;
            }
            (None, Some(v)) => {
                let path = resolve(v.text);
                if !path.is_file() {
                    return Err(v.err(format!("anchors file {} does not exist", path.display())));
                }
                let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                cal.anchors = parse_anchors(&text).map_err(|e| v.err(e.to_string()))?;
            }
            (None, None) => {}
        }
        if let Some(v) = get("switching", "v_ratio") {
            cal.switching.v_ratio = v.f64()?;
        }
        if let Some(v) = get("switching", "residual_bound") {
            cal.switching.residual_bound = v.f64()?;
        }
        if let Some(v) = get("switching", "fit_delay") {
            cal.switching.fit_delay = v.bool()?;
        }
        if let Some(v) = get("energy", "v_pulse_mv") {
            cal.v_pulse_mv = v.f64()?;
        }
        if let Some(v) = get("energy", "anchor_t_ns") {
            cal.energy_anchor_ns = v.f64()?;
        }
        if let Some(v) = get("energy", "anchor_energy_pj") {
            cal.energy_anchor_pj = v.f64()?;
        }
        if let Some(v) = get("variability", "enabled") {
            cfg.use_variability = v.bool()?;
        }
        let cal = &mut cfg.calibration;
        if let Some(v) = get("variability", "anchor_ber") {
            cal.variability_anchor.0 = v.f64()?;
        }
        if let Some(v) = get("variability", "anchor_t_ns") {
            cal.variability_anchor.1 = v.f64()?;
        }
        if let Some(v) = get("variability", "quadrature_order") {
            cal.variability.quadrature_order = v.usize()?;
        }
        if let Some(v) = get("variability", "max_sigma") {
            cal.variability.max_sigma = v.f64()?;
        }
        if let Some(v) = get("variability", "max_pulse_ns") {
            cal.variability.max_pulse_ns = v.f64()?;
        }
        let z = get("variability", "percentile_z").map(|v| v.f64()).transpose()?;
        if let Some(v) = get("variability", "mode") {
            cal.variability.mode = match v.text {
                "mean" => ArrayBerMode::Mean,
                "percentile" => ArrayBerMode::Percentile { z: z.ok_or_else(|| v.err("percentile mode needs percentile_z"))? },
                other => return Err(v.err(format!("expected mean or percentile, got {other:?}"))),
            };
        }

        if let Some(v) = get("format", "fractional_bits") {
            let f = v.usize()?;
            cfg.train.format =
                FixedPointFormat::new(f as u32).ok_or_else(|| v.err("fractional bits must lie in 1..=15"))?;
        }
        if let Some(v) = get("format", "encoding") {
            let enc = match v.text {
                "sign_magnitude" => Encoding::SignMagnitude,
                "twos_complement" => Encoding::TwosComplement,
                other => return Err(v.err(format!("expected sign_magnitude or twos_complement, got {other:?}"))),
            };
            cfg.train.format = cfg.train.format.with_encoding(enc);
        }

        if let Some(v) = get("train", "mnist_dir") {
            cfg.mnist_dir = resolve(v.text);
        }
        if let Some(v) = get("train", "minibatch") {
            cfg.train.minibatch = v.usize()?;
        }
        if let Some(v) = get("train", "epochs") {
            cfg.train.epochs = v.usize()?;
        }
        if let Some(v) = get("train", "learning_rate") {
            cfg.train.learning_rate = v.f64()?;
        }
        if let Some(v) = get("train", "n_seeds") {
            cfg.n_seeds = v.usize()?;
        }
        if let Some(v) = get("train", "train_limit") {
            cfg.train.train_limit = Some(v.usize()?);
        }
        if let Some(v) = get("train", "test_limit") {
            cfg.test_limit = Some(v.usize()?);
        }
        let ber = get("train", "ber").map(|v| v.f64()).transpose()?;
        let n_lsb = get("train", "n_lsb").map(|v| v.usize()).transpose()?;
        let ber_hsb = get("train", "ber_hsb").map(|v| v.f64()).transpose()?;
        let ber_lsb = get("train", "ber_lsb").map(|v| v.f64()).transpose()?;
        match get("train", "scheme") {
            None => {
                if let Some(b) = ber {
                    cfg.run_scheme = Scheme::Uniform { ber: b };
                }
            }
            Some(v) => {
                cfg.run_scheme = match v.text {
                    "uniform" => Scheme::Uniform { ber: ber.ok_or_else(|| v.err("uniform scheme needs ber"))? },
                    "two_tier" => Scheme::TwoTier {
                        n_lsb: n_lsb.ok_or_else(|| v.err("two_tier scheme needs n_lsb"))? as u32,
                        ber_hsb: ber_hsb.ok_or_else(|| v.err("two_tier scheme needs ber_hsb"))?,
                        ber_lsb: ber_lsb.ok_or_else(|| v.err("two_tier scheme needs ber_lsb"))?,
                    },
                    other => return Err(v.err(format!("expected uniform or two_tier, got {other:?}"))),
                };
            }
        }

        if let Some(v) = get("sweep", "energy_bers") {
            cfg.energy_bers = v.f64_list()?;
        }
        if let Some(v) = get("sweep", "uniform_bers") {
            cfg.uniform_bers = v.f64_list()?;
        }
        if let Some(v) = get("sweep", "n_lsb") {
            cfg.tier_n_lsb = v.list(|s| s.parse().ok())?;
        }
        if let Some(v) = get("sweep", "lsb_bers") {
            cfg.tier_lsb_bers = v.f64_list()?;
        }
        if let Some(v) = get("sweep", "ber_hsb") {
            cfg.tier_ber_hsb = v.f64()?;
        }
        if let Some(v) = get("sweep", "baseline_ber") {
            cfg.baseline_ber = v.f64()?;
        }

        if let Some(v) = get("output", "out") {
            cfg.out = Some(resolve(v.text));
        }
        if let Some(v) = get("output", "seed_base") {
            cfg.seed_base = v.u64()?;
        }
        if let Some(v) = get("output", "jobs") {
            cfg.jobs = v.usize()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let unit = |b: f64| b > 0.0 && b <= 1.0;
        if self.energy_bers.is_empty() || self.uniform_bers.is_empty() {
            return bad("BER grids must be non-empty");
        }
        if self.tier_n_lsb.is_empty() || self.tier_lsb_bers.is_empty() {
            return bad("two-tier grids must be non-empty");
        }
        if self.energy_bers.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return bad("energy_bers must lie in (0, 1)");
        }
        if !self.uniform_bers.iter().chain(&self.tier_lsb_bers).all(|&b| unit(b)) || !unit(self.tier_ber_hsb) {
            return bad("programming BERs must lie in (0, 1]");
        }
        if self.tier_n_lsb.iter().any(|&n| n > 16) {
            return bad("n_lsb must be at most 16");
        }
        if !(self.baseline_ber > 0.0 && self.baseline_ber < 1.0) {
            return bad("baseline_ber must lie in (0, 1)");
        }
        if self.train.minibatch == 0 || self.train.epochs == 0 || self.n_seeds == 0 {
            return bad("minibatch, epochs and n_seeds must be >= 1");
        }
        if !(self.train.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.jobs == 0 {
            return bad("jobs must be >= 1");
        }
        if self.calibration.anchors.len() < 2 {
            return bad("at least two switching anchors are required");
        }
        Ok(())
    }
}
