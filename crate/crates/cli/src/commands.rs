use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stmram::experiment::{train_and_evaluate, CSV_HEADER};
use stmram::memory::{MemoryError, ProgrammingProfile, Scheme};
use stmram::mnist::{load_dataset, DataError, Dataset, Split};
use stmram::switching::report_ber;
use stmram::{CalibratedModels, CalibrationError};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{row_key, timestamp_line, OrderedSink, Previous, ResumeError};

pub const ENERGY_CURVE_HEADER: &str =
    "target_ber,t_pulse_ns,energy_pj,variability_flag,saving_vs_baseline,increase_vs_no_variability";

/// Fields of a result row that identify its configuration.
const KEY_FIELDS: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Resume(#[from] ResumeError),
    #[error("calibration failed: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("cannot build programming profile: {0}")]
    Profile(#[from] MemoryError),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Resume(_) => 2,
            CliError::Calibration(_) | CliError::Profile(_) => 3,
            CliError::Data(_) => 4,
            CliError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Command-line overrides layered on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub epochs: Option<usize>,
    pub no_variability: bool,
    pub resume: bool,
}

pub struct Context {
    pub cfg: ExperimentConfig,
    pub resume: bool,
}

impl Context {
    pub fn new(mut cfg: ExperimentConfig, o: &Overrides) -> Result<Self, CliError> {
        if let Some(p) = &o.out {
            cfg.out = Some(p.clone());
        }
        if let Some(s) = o.seed {
            cfg.seed_base = s;
        }
        if let Some(j) = o.jobs {
            cfg.jobs = j;
        }
        if let Some(e) = o.epochs {
            cfg.train.epochs = e;
        }
        if o.no_variability {
            cfg.use_variability = false;
        }
        cfg.validate()?;
        Ok(Self { cfg, resume: o.resume })
    }

    fn out_path(&self, default: &str) -> PathBuf {
        self.cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn models(&self) -> Result<CalibratedModels, CliError> {
        let m = CalibratedModels::calibrate(&self.cfg.calibration)?;
        Ok(if self.cfg.use_variability { m } else { m.without_variability() })
    }

    fn data(&self) -> Result<(Dataset, Dataset), CliError> {
        let train = load_dataset(&self.cfg.mnist_dir, Split::Train)?;
        let mut test = load_dataset(&self.cfg.mnist_dir, Split::Test)?;
        if let Some(n) = self.cfg.test_limit {
            test = test.truncated(n);
        }
        Ok((train, test))
    }

    /// Identifies everything that influences training rows.
    fn settings_line(&self, command: &str) -> String {
        let c = &self.cfg;
        format!(
            "# settings: command={command} seed_base={} n_seeds={} epochs={} minibatch={} learning_rate={} \
             fractional_bits={} encoding={} train_limit={} test_limit={} variability={}",
            c.seed_base,
            c.n_seeds,
            c.train.epochs,
            c.train.minibatch,
            c.train.learning_rate,
            c.train.format.fractional_bits(),
            c.train.format.encoding().name(),
            c.train.train_limit.map_or("all".to_string(), |n| n.to_string()),
            c.test_limit.map_or("all".to_string(), |n| n.to_string()),
            c.use_variability,
        )
    }
}

/// Fits the model stack and writes the parameters plus the anchor residuals.
pub fn calibrate(ctx: &Context) -> Result<(), CliError> {
    let models = ctx.models()?;
    let mut text = format!("{}\n", timestamp_line());
    text.push_str(&models.to_kv());
    text.push_str("\n[residuals]\n# anchor_ber\tanchor_t_ns\tfitted_t_ns\trelative_error\n");
    for r in models.switching.fit_residuals() {
        text.push_str(&format!(
            "# {:e}\t{:.6}\t{:.6}\t{:+.6}\n",
            r.ber,
            r.anchor_t_ns,
            r.fitted_t_ns,
            r.t_error_fraction()
        ));
    }
    let path = ctx.out_path("calibration.txt");
    write_file(&path, &text)?;
    eprintln!(
        "fitted k = {:.6}, theta = {:.6} ns, sigma = {:.6}; wrote {}",
        models.switching.shape_k(),
        models.switching.scale_theta_ns(),
        models.variability.sigma_scale(),
        path.display()
    );
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Pulse duration and energy over the BER grid, with and without
/// variability. With variability disabled both rows of a BER agree.
pub fn energy_curve(ctx: &Context) -> Result<(), CliError> {
    let with = ctx.models()?;
    let without = with.without_variability();
    let base = ctx.cfg.baseline_ber;
    let mut text = format!("{}\n{}\n", timestamp_line(), ENERGY_CURVE_HEADER);
    for &b in &ctx.cfg.energy_bers {
        let e_plain = without.energy_for_ber(b, false).map_err(CalibrationError::from)?;
        for (flag, m) in [(0, &without), (1, &with)] {
            let t = m.tpulse_for(b, true).map_err(CalibrationError::from)?;
            let e = m.pulse_energy_pj(t);
            let e_base = m.energy_for_ber(base, true).map_err(CalibrationError::from)?;
            text.push_str(&format!(
                "{:e},{:.6},{:.6},{},{:.6},{:.6}\n",
                report_ber(b),
                t,
                e,
                flag,
                1.0 - e / e_base,
                e / e_plain - 1.0
            ));
        }
    }
    let path = ctx.out_path("energy_curve.csv");
    write_file(&path, &text)?;
    eprintln!("wrote {} ({} BER points)", path.display(), ctx.cfg.energy_bers.len());
    Ok(())
}

fn grid_key(s: &Scheme) -> String {
    let (n, hsb, lsb) = s.tiers();
    format!("{},{},{:e},{:e}", s.name(), n, hsb, lsb)
}

/// Trains every scheme in `grid` and writes one row per scheme in grid order.
fn sweep(ctx: &Context, command: &str, default_out: &str, grid: &[Scheme]) -> Result<(), CliError> {
    let models = ctx.models()?;
    let use_var = ctx.cfg.use_variability;
    let baseline = ProgrammingProfile::make(Scheme::Uniform { ber: ctx.cfg.baseline_ber }, &models, use_var)?;
    let profiles = grid
        .iter()
        .map(|&s| ProgrammingProfile::make(s, &models, use_var))
        .collect::<Result<Vec<_>, _>>()?;

    let path = ctx.out_path(default_out);
    let settings = ctx.settings_line(command);
    let previous = if ctx.resume {
        Previous::load(&path, &settings, CSV_HEADER, KEY_FIELDS)?
    } else {
        Previous::default()
    };
    let todo: Vec<usize> = (0..grid.len()).filter(|&i| previous.get(&grid_key(&grid[i])).is_none()).collect();
    let data = if todo.is_empty() { None } else { Some(ctx.data()?) };

    let sink = OrderedSink::create(&path, &settings, CSV_HEADER).map_err(io_err(&path))?;
    for (i, s) in grid.iter().enumerate() {
        if let Some(row) = previous.get(&grid_key(s)) {
            sink.push(i, row.to_string()).map_err(io_err(&path))?;
        }
    }
    if previous.len() > 0 {
        eprintln!("resuming: {} of {} points already done", grid.len() - todo.len(), grid.len());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.cfg.jobs)
        .build()
        .expect("thread pool");
    let cfg = &ctx.cfg;
    pool.install(|| {
        todo.par_iter().try_for_each(|&i| {
            let (train, test) = data.as_ref().expect("loaded whenever work remains");
            let report = train_and_evaluate(&cfg.train, &profiles[i], cfg.seed_base, cfg.n_seeds, train, test, 1);
            let row = report.csv_row(baseline.word_energy_pj());
            debug_assert_eq!(row_key(&row, KEY_FIELDS), grid_key(&grid[i]));
            eprintln!("{}: rr {:.4} (min {:.4}, max {:.4})", grid[i], report.recognition_rate, report.rr_min, report.rr_max);
            sink.push(i, row).map_err(io_err(&path))
        })
    })?;
    eprintln!("wrote {} rows to {}", sink.written(), path.display());
    Ok(())
}

pub fn sweep_ber(ctx: &Context) -> Result<(), CliError> {
    let grid: Vec<Scheme> = ctx.cfg.uniform_bers.iter().map(|&ber| Scheme::Uniform { ber }).collect();
    sweep(ctx, "sweep-ber", "sweep_ber.csv", &grid)
}

pub fn sweep_tier(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.cfg;
    let grid: Vec<Scheme> = c
        .tier_n_lsb
        .iter()
        .flat_map(|&n_lsb| {
            c.tier_lsb_bers.iter().map(move |&ber_lsb| Scheme::TwoTier { n_lsb, ber_hsb: c.tier_ber_hsb, ber_lsb })
        })
        .collect();
    sweep(ctx, "sweep-tier", "sweep_tier.csv", &grid)
}

/// One configuration, seeds spread over `jobs` threads.
pub fn train(ctx: &Context) -> Result<(), CliError> {
    let models = ctx.models()?;
    let c = &ctx.cfg;
    let baseline = ProgrammingProfile::make(Scheme::Uniform { ber: c.baseline_ber }, &models, c.use_variability)?;
    let profile = ProgrammingProfile::make(c.run_scheme, &models, c.use_variability)?;
    let (train, test) = ctx.data()?;
    let report = train_and_evaluate(&c.train, &profile, c.seed_base, c.n_seeds, &train, &test, c.jobs);
    for (seed, rate) in report.seeds.iter().zip(&report.per_seed_rates) {
        eprintln!("seed {seed}: rr {rate:.4}");
    }
    let row = report.csv_row(baseline.word_energy_pj());
    let path = ctx.out_path("train.csv");
    let text = format!("{}\n{}\n{}\n{}\n", timestamp_line(), ctx.settings_line("train"), CSV_HEADER, row);
    write_file(&path, &text)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{CSV_HEADER}\n{row}").map_err(io_err(Path::new("<stdout>")))?;
    Ok(())
}
