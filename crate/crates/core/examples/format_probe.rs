//! Single-seed training under different word formats.
//!
//! cargo run --release -p stmram --example format_probe -- <epochs> <seed> SPEC...
//!
//! SPEC is `F:ber` (uniform) or `F:n_lsb:ber_lsb` (two-tier, HSB BER 1e-2);
//! prefix F with `tc` for two's complement, e.g. `tc12:1e-2`. MNIST is read
//! from `$MNIST_DIR` or `data/mnist`.

use stmram::memory::{Encoding, ProgrammingProfile, Scheme};
use stmram::mnist::{load_dataset, Split};
use stmram::nn::{train_run, TrainConfig};
use stmram::{CalibratedModels, FixedPointFormat};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 4 {
        eprintln!("usage: format_probe <epochs> <seed> SPEC...");
        std::process::exit(2);
    }
    let epochs: usize = args[1].parse().expect("epochs");
    let seed: u64 = args[2].parse().expect("seed");
    let dir = std::env::var("MNIST_DIR").unwrap_or_else(|_| "data/mnist".into());
    let train = load_dataset(dir.as_ref(), Split::Train).expect("train split");
    let test = load_dataset(dir.as_ref(), Split::Test).expect("test split");
    let models = CalibratedModels::calibrate_default().expect("calibration");
    for spec in &args[3..] {
        let parts: Vec<&str> = spec.split(':').collect();
        let (encoding, f) = match parts[0].strip_prefix("tc") {
            Some(f) => (Encoding::TwosComplement, f),
            None => (Encoding::SignMagnitude, parts[0]),
        };
        let format = FixedPointFormat::new(f.parse().expect("fractional bits")).expect("1..=15").with_encoding(encoding);
        let scheme = match parts[1..] {
            [ber] => Scheme::Uniform { ber: ber.parse().expect("ber") },
            [n, lsb] => Scheme::TwoTier { n_lsb: n.parse().expect("n_lsb"), ber_hsb: 1e-2, ber_lsb: lsb.parse().expect("ber_lsb") },
            _ => panic!("bad spec {spec}"),
        };
        let cfg = TrainConfig { epochs, format, ..TrainConfig::default() };
        let profile = ProgrammingProfile::make(scheme, &models, true).expect("profile");
        let run = train_run(&cfg, &profile, seed, &train, &test);
        let at_limit = run.final_words.iter().filter(|&&w| format.dequantize(w).abs() >= 0.99 * format.max_value()).count();
        println!("{spec} recognition {:.4} weights_at_range_limit {at_limit}", run.recognition_rate);
    }
}
