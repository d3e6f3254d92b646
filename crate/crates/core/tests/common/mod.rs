//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stmram::gamma::upper_reg_gamma;
use stmram::memory::{naive_failure_mask, FastSampler};
use stmram::mnist::{Dataset, Split};
use stmram::nn::{accuracy, gather_batch, gradient, init_params, streams, Topology, TrainConfig, Workspace};

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol || b - a < 1e-9 {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Q(k, x) straight from the defining integrals. With t = u² the integrand
/// 2·u^(2k−1)·e^(−u²) is bounded near 0 for k ≥ 0.5.
pub fn q_oracle(k: f64, x: f64) -> f64 {
    let g = |u: f64| {
        if u == 0.0 {
            if k == 0.5 {
                2.0
            } else {
                0.0
            }
        } else {
            2.0 * u.powf(2.0 * k - 1.0) * (-u * u).exp()
        }
    };
    // negligible beyond u = 40 for k ≤ 50
    let cut = 40.0f64;
    let pieces = |a: f64, b: f64| {
        let n = 64;
        let bounds = |i: usize| (a + (b - a) * i as f64 / n as f64, a + (b - a) * (i + 1) as f64 / n as f64);
        let rough: f64 = (0..n).map(|i| {
            let (lo, hi) = bounds(i);
            simpson(&g, lo, hi, f64::INFINITY)
        }).sum();
        // tolerance relative to the whole integral being computed
        let tol = 1e-14 * rough / n as f64;
        (0..n)
            .map(|i| {
                let (lo, hi) = bounds(i);
                simpson(&g, lo, hi, tol)
            })
            .sum::<f64>()
    };
    pieces(x.sqrt(), cut) / pieces(0.0, cut)
}

/// The 20-point (k, x) grid for the incomplete-gamma oracle.
pub const GAMMA_GRID: [(f64, f64); 20] = [
    (0.5, 0.1),
    (0.5, 3.0),
    (1.0, 0.5),
    (1.0, 7.0),
    (2.0, 1.0),
    (2.5, 0.3),
    (2.5, 6.0),
    (5.0, 2.0),
    (5.0, 5.9),
    (5.0, 6.1),
    (5.0, 15.0),
    (14.917, 4.0),
    (14.917, 15.0),
    (14.917, 15.917),
    (14.917, 30.0),
    (14.917, 53.8),
    (30.0, 20.0),
    (30.0, 45.0),
    (50.0, 40.0),
    (50.0, 60.0),
];

/// Worst error of `upper_reg_gamma` against the oracle on the grid,
/// relative to max(Q, 1e-3).
pub fn gamma_oracle_worst() -> f64 {
    GAMMA_GRID
        .iter()
        .map(|&(k, x)| {
            let want = q_oracle(k, x);
            (upper_reg_gamma(k, x).unwrap() - want).abs() / want.max(1e-3)
        })
        .fold(0.0, f64::max)
}

/// p-value of Pearson's χ² test of homogeneity for two count vectors.
/// Bins with a pooled count under 10 are merged.
pub fn homogeneity_p(a: &[u64], b: &[u64]) -> f64 {
    let (mut ma, mut mb) = (Vec::new(), Vec::new());
    let (mut ra, mut rb) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        if x + y >= 10 {
            ma.push(x);
            mb.push(y);
        } else {
            ra += x;
            rb += y;
        }
    }
    if ra + rb > 0 {
        ma.push(ra);
        mb.push(rb);
    }
    if ma.len() < 2 {
        return 1.0;
    }
    let (na, nb) = (ma.iter().sum::<u64>() as f64, mb.iter().sum::<u64>() as f64);
    let n = na + nb;
    let mut chi2 = 0.0;
    for (&x, &y) in ma.iter().zip(&mb) {
        let pooled = (x + y) as f64;
        for (obs, total) in [(x as f64, na), (y as f64, nb)] {
            let e = pooled * total / n;
            chi2 += (obs - e) * (obs - e) / e;
        }
    }
    let df = (ma.len() - 1) as f64;
    upper_reg_gamma(df / 2.0, chi2 / 2.0).unwrap()
}

/// Failure-count and failure-position histograms over `draws` words with
/// random relevant masks (always including both end bits).
pub fn failure_histograms(bers: &[f64; 16], draws: usize, fast: bool, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let mut masks = ChaCha8Rng::seed_from_u64(1000 + seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = FastSampler::new(bers, &mut rng);
    let (mut counts, mut positions) = (vec![0u64; 17], vec![0u64; 16]);
    for _ in 0..draws {
        let relevant: u16 = masks.random::<u16>() | 0x8001;
        let failed =
            if fast { sampler.sample(&mut rng, relevant) } else { naive_failure_mask(&mut rng, bers, relevant) };
        assert_eq!(failed & !relevant, 0, "failure outside the relevant mask");
        counts[failed.count_ones() as usize] += 1;
        for (b, p) in positions.iter_mut().enumerate() {
            *p += u64::from(failed >> b & 1);
        }
    }
    (counts, positions)
}

/// Smallest p-value of the count and position tests, fast vs naive.
pub fn sampler_equivalence_p(bers: &[f64; 16], draws: usize, seed: u64) -> f64 {
    let (fc, fp) = failure_histograms(bers, draws, true, seed);
    let (nc, np) = failure_histograms(bers, draws, false, seed + 1);
    homogeneity_p(&fc, &nc).min(homogeneity_p(&fp, &np))
}

/// Noisy bar images: the bar's row encodes the label.
pub fn synthetic(n: usize, seed: u64, split: Split) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = vec![0.0; n * 784];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = rng.random_range(0..10u8);
        labels.push(label);
        let img = &mut images[i * 784..(i + 1) * 784];
        for px in img.iter_mut() {
            *px = rng.random_range(0.0..0.2);
        }
        let row = 3 + 2 * label as usize;
        for c in 4..24 {
            img[row * 28 + c] = 1.0;
        }
    }
    Dataset { images, labels, split }
}

pub fn small_config() -> TrainConfig {
    TrainConfig {
        topology: Topology::new(784, 24, 10),
        epochs: 2,
        ..TrainConfig::default()
    }
}

/// The training protocol with plain quantized storage instead of a store.
pub fn dense_reference(cfg: &TrainConfig, seed: u64, train: &Dataset, test: &Dataset) -> (Vec<u16>, f64) {
    let topo = cfg.topology;
    let fmt = cfg.format;
    let mut words: Vec<u16> = init_params(&topo, &mut streams::init(seed)).iter().map(|&w| fmt.quantize(w)).collect();
    let mut shuffle = streams::shuffle(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let bs = cfg.minibatch;
    let mut ws = Workspace::new(&topo, bs);
    let (mut x, mut t) = (vec![0.0; bs * topo.input], vec![0.0; bs * topo.output]);
    let mut grad = vec![0.0; words.len()];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(bs) {
            gather_batch(train, chunk, topo.output, &mut x, &mut t);
            let params: Vec<f64> = words.iter().map(|&w| fmt.dequantize(w)).collect();
            gradient(&topo, &params, &x, &t, chunk.len(), &mut ws, &mut grad);
            for ((w, p), g) in words.iter_mut().zip(&params).zip(&grad) {
                *w = fmt.quantize(p - cfg.learning_rate * g);
            }
        }
    }
    let params: Vec<f64> = words.iter().map(|&w| fmt.dequantize(w)).collect();
    (words, accuracy(&topo, &params, test))
}

/// Worst relative disagreement between backprop and central differences
/// (step 1e-5) on a random net.
pub fn finite_difference_worst(topo: Topology, batch: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<f64> = (0..topo.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect();
    let x: Vec<f64> = (0..batch * topo.input).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut t = vec![-1.0; batch * topo.output];
    for k in 0..batch {
        t[k * topo.output + rng.random_range(0..topo.output)] = 1.0;
    }
    let mut ws = Workspace::new(&topo, batch);
    let mut grad = vec![0.0; topo.param_count()];
    gradient(&topo, &params, &x, &t, batch, &mut ws, &mut grad);
    let mut scratch = vec![0.0; topo.param_count()];
    let mut loss = |p: &[f64]| gradient(&topo, p, &x, &t, batch, &mut ws, &mut scratch);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut p = params.clone();
    for j in 0..params.len() {
        p[j] = params[j] + h;
        let up = loss(&p);
        p[j] = params[j] - h;
        let down = loss(&p);
        p[j] = params[j];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-3));
    }
    worst
}

/// Worst |z|-score of the quadrature array BER against a full Monte Carlo of
/// `n` bit writes per target: draw a device (log-normal scale factor), draw
/// its switching time, count pulses too short to switch.
pub fn array_ber_monte_carlo_worst_z(m: &stmram::CalibratedModels, targets: &[f64], n: usize) -> f64 {
    use rand_distr::{Distribution, Gamma, StandardNormal};
    let theta = m.switching.scale_theta_ns();
    let sigma = m.variability.sigma_scale();
    let unit = Gamma::new(m.switching.shape_k(), 1.0).unwrap();
    let mut worst = 0.0f64;
    for (i, &target) in targets.iter().enumerate() {
        let t = m.tpulse_for(target, true).unwrap();
        let p = m.variability.array_ber(&m.switching, t);
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i as u64);
        let mut fails = 0u64;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            fails += u64::from(theta * (sigma * z).exp() * unit.sample(&mut rng) > t);
        }
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        worst = worst.max((fails as f64 - n as f64 * p).abs() / sd);
    }
    worst
}
