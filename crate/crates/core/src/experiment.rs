//! Multi-seed training experiments and their CSV rows.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::memory::{ProgrammingProfile, Scheme};
use crate::mnist::Dataset;
use crate::nn::{train_run, RunResult, TrainConfig};

/// Header of the per-configuration result row.
pub const CSV_HEADER: &str =
    "scheme,n_lsb,ber_hsb,ber_lsb,seed_count,rr_mean,rr_min,rr_max,energy_per_weight_pj,energy_saving_vs_baseline";

/// Aggregate over seeds of one programming configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub scheme: Scheme,
    pub seeds: Vec<u64>,
    pub per_seed_rates: Vec<f64>,
    pub recognition_rate: f64,
    pub rr_min: f64,
    pub rr_max: f64,
    /// Programming energy of one run (identical for every seed: writes are blind).
    pub total_programming_energy_pj: f64,
    pub energy_per_weight_pj: f64,
    pub word_energy_pj: f64,
    pub runs: Vec<RunResult>,
}

impl TrainReport {
    pub fn from_runs(scheme: Scheme, word_energy_pj: f64, param_count: usize, runs: Vec<RunResult>) -> Self {
        assert!(!runs.is_empty(), "report needs at least one run");
        let rates: Vec<f64> = runs.iter().map(|r| r.recognition_rate).collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total = runs.iter().map(|r| r.energy_pj).sum::<f64>() / runs.len() as f64;
        Self {
            scheme,
            seeds: runs.iter().map(|r| r.seed).collect(),
            per_seed_rates: rates,
            recognition_rate: mean,
            rr_min: min,
            rr_max: max,
            total_programming_energy_pj: total,
            energy_per_weight_pj: total / param_count as f64,
            word_energy_pj,
            runs,
        }
    }

    /// max − min of the per-seed rates.
    pub fn spread(&self) -> f64 {
        self.rr_max - self.rr_min
    }

    /// 1 − this configuration's word energy over the baseline's.
    pub fn saving_vs(&self, baseline_word_energy_pj: f64) -> f64 {
        1.0 - self.word_energy_pj / baseline_word_energy_pj
    }

    /// One CSV row matching [`CSV_HEADER`].
    pub fn csv_row(&self, baseline_word_energy_pj: f64) -> String {
        let (n_lsb, hsb, lsb) = self.scheme.tiers();
        format!(
            "{},{},{:e},{:e},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.scheme.name(),
            n_lsb,
            hsb,
            lsb,
            self.per_seed_rates.len(),
            self.recognition_rate,
            self.rr_min,
            self.rr_max,
            self.energy_per_weight_pj,
            self.saving_vs(baseline_word_energy_pj)
        )
    }
}

/// Runs `seeds` independent trainings on up to `jobs` threads. Results are
/// ordered as `seeds` regardless of scheduling.
pub fn run_seeds(
    cfg: &TrainConfig,
    profile: &ProgrammingProfile,
    seeds: &[u64],
    train: &Dataset,
    test: &Dataset,
    jobs: usize,
) -> Vec<RunResult> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunResult>>> = Mutex::new(vec![None; seeds.len()]);
    let workers = jobs.clamp(1, seeds.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let r = train_run(cfg, profile, seeds[i], train, test);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect()
}

/// `n_seeds` runs seeded `seed_base, seed_base + 1, …`, aggregated.
pub fn train_and_evaluate(
    cfg: &TrainConfig,
    profile: &ProgrammingProfile,
    seed_base: u64,
    n_seeds: usize,
    train: &Dataset,
    test: &Dataset,
    jobs: usize,
) -> TrainReport {
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| seed_base + i).collect();
    let runs = run_seeds(cfg, profile, &seeds, train, test, jobs);
    TrainReport::from_runs(profile.scheme(), profile.word_energy_pj(), cfg.topology.param_count(), runs)
}
