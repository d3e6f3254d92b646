//! Coarse learning-rate search on the fault-free baseline.
//!
//! cargo run --release -p stmram --example lr_grid -- <mnist_dir> [epochs] [seed] [rates...]

use std::path::PathBuf;
use std::time::Instant;

use stmram::memory::{ProgrammingProfile, Scheme};
use stmram::mnist::{load_dataset, Split};
use stmram::nn::{train_run, TrainConfig};
use stmram::CalibratedModels;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = PathBuf::from(args.get(1).map(String::as_str).unwrap_or("data/mnist"));
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let rates: Vec<f64> = if args.len() > 4 {
        args[4..].iter().map(|s| s.parse().expect("learning rate")).collect()
    } else {
        vec![0.01, 0.02, 0.05, 0.1, 0.2]
    };
    let train = load_dataset(&dir, Split::Train).expect("train split");
    let test = load_dataset(&dir, Split::Test).expect("test split");
    let models = CalibratedModels::calibrate_default().expect("calibration");
    let profile = ProgrammingProfile::make(Scheme::Uniform { ber: 1e-10 }, &models, true).expect("profile");
    println!("learning_rate,epochs,seed,recognition_rate,seconds");
    for lr in rates {
        let cfg = TrainConfig { epochs, learning_rate: lr, ..TrainConfig::default() };
        let t0 = Instant::now();
        let r = train_run(&cfg, &profile, seed, &train, &test);
        println!("{lr},{epochs},{seed},{:.4},{:.1}", r.recognition_rate, t0.elapsed().as_secs_f64());
    }
}
