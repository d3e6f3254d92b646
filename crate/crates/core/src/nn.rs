//! Two-layer tanh perceptron whose parameters live in an
//! [`ApproxWeightStore`].
//!
//! Parameters are one flat vector: W1 (hidden × input, row-major), b1,
//! W2 (output × hidden, row-major), b2. Training minimizes the mean over
//! the minibatch of ½‖y − t‖² with ±1 one-hot targets. Each step reads the
//! current stored words (reads are exact), computes the full-precision
//! gradient, and writes `quantize(w − lr·g)` back to every parameter.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::memory::{ApproxWeightStore, FixedPointFormat, ProgrammingProfile};
use crate::mnist::Dataset;

/// Layer sizes of the perceptron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Self { input: 784, hidden: 300, output: 10 }
    }
}

impl Topology {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self { input, hidden, output }
    }

    pub fn param_count(&self) -> usize {
        self.hidden * self.input + self.hidden + self.output * self.hidden + self.output
    }

    fn w1(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.input
    }
    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.hidden * self.input;
        s..s + self.hidden
    }
    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.b1().end;
        s..s + self.output * self.hidden
    }
    fn b2(&self) -> std::ops::Range<usize> {
        let s = self.w2().end;
        s..s + self.output
    }
}

/// Uniform ±√(6 / (fan_in + fan_out)) weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(topo: &Topology, rng: &mut R) -> Vec<f64> {
    let mut p = vec![0.0; topo.param_count()];
    let l1 = (6.0 / (topo.input + topo.hidden) as f64).sqrt();
    for w in &mut p[topo.w1()] {
        *w = rng.random_range(-l1..l1);
    }
    let l2 = (6.0 / (topo.hidden + topo.output) as f64).sqrt();
    for w in &mut p[topo.w2()] {
        *w = rng.random_range(-l2..l2);
    }
    p
}

/// C (m×n) = A (m×k) · B (k×n) + beta·C with explicit (row, col) strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs;
    if k > 0 {
        assert!(last(m, k, rsa, csa) < a.len() && last(k, n, rsb, csb) < b.len());
    }
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above bound every element the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Scratch buffers for a batch of up to `batch` examples.
#[derive(Debug, Clone)]
pub struct Workspace {
    batch: usize,
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl Workspace {
    pub fn new(topo: &Topology, batch: usize) -> Self {
        Self {
            batch,
            hidden: vec![0.0; batch * topo.hidden],
            out: vec![0.0; batch * topo.output],
            delta_out: vec![0.0; batch * topo.output],
            delta_hidden: vec![0.0; batch * topo.hidden],
        }
    }

    /// Output activations of the last forward pass, `[batch, output]`.
    pub fn outputs(&self) -> &[f64] {
        &self.out
    }
}

/// Forward pass for `b` examples in `x` (`[b, input]`); activations land in
/// the workspace.
pub fn forward(topo: &Topology, params: &[f64], x: &[f64], b: usize, ws: &mut Workspace) {
    assert!(b <= ws.batch, "batch larger than workspace");
    assert_eq!(params.len(), topo.param_count());
    let (i, h, o) = (topo.input, topo.hidden, topo.output);
    let hid = &mut ws.hidden[..b * h];
    let b1 = &params[topo.b1()];
    for row in hid.chunks_exact_mut(h) {
        row.copy_from_slice(b1);
    }
    gemm(b, i, h, x, (i, 1), &params[topo.w1()], (1, i), 1.0, hid);
    hid.iter_mut().for_each(|v| *v = v.tanh());
    let out = &mut ws.out[..b * o];
    let b2 = &params[topo.b2()];
    for row in out.chunks_exact_mut(o) {
        row.copy_from_slice(b2);
    }
    gemm(b, h, o, hid, (h, 1), &params[topo.w2()], (1, h), 1.0, out);
    out.iter_mut().for_each(|v| *v = v.tanh());
}

/// Gradient of mean(½‖tanh(W2·tanh(W1·x + b1) + b2) − t‖²) over the batch.
/// Writes `grad` and returns the loss.
pub fn gradient(
    topo: &Topology,
    params: &[f64],
    x: &[f64],
    targets: &[f64],
    b: usize,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> f64 {
    assert_eq!(grad.len(), topo.param_count());
    let (i, h, o) = (topo.input, topo.hidden, topo.output);
    forward(topo, params, x, b, ws);
    let scale = 1.0 / b as f64;
    let mut loss = 0.0;
    for ((d, &y), &t) in ws.delta_out[..b * o].iter_mut().zip(&ws.out[..b * o]).zip(&targets[..b * o]) {
        let e = y - t;
        loss += 0.5 * e * e;
        *d = e * (1.0 - y * y) * scale;
    }
    let delta_out = &ws.delta_out[..b * o];
    let hid = &ws.hidden[..b * h];

    // gW2 = δ2ᵀ · H, gb2 = Σ δ2
    let (g_w1b1, g_w2b2) = grad.split_at_mut(topo.w2().start);
    let (g_w2, g_b2) = g_w2b2.split_at_mut(o * h);
    gemm(o, b, h, delta_out, (1, o), hid, (h, 1), 0.0, g_w2);
    g_b2.fill(0.0);
    for row in delta_out.chunks_exact(o) {
        g_b2.iter_mut().zip(row).for_each(|(g, d)| *g += d);
    }

    // δ1 = (δ2 · W2) ⊙ (1 − h²)
    let dh = &mut ws.delta_hidden[..b * h];
    gemm(b, o, h, delta_out, (o, 1), &params[topo.w2()], (h, 1), 0.0, dh);
    dh.iter_mut().zip(hid).for_each(|(d, &a)| *d *= 1.0 - a * a);

    // gW1 = δ1ᵀ · X, gb1 = Σ δ1
    let (g_w1, g_b1) = g_w1b1.split_at_mut(h * i);
    gemm(h, b, i, dh, (1, h), x, (i, 1), 0.0, g_w1);
    g_b1.fill(0.0);
    for row in dh.chunks_exact(h) {
        g_b1.iter_mut().zip(row).for_each(|(g, d)| *g += d);
    }
    loss * scale
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Fraction of `data` classified correctly.
pub fn accuracy(topo: &Topology, params: &[f64], data: &Dataset) -> f64 {
    const CHUNK: usize = 500;
    let mut ws = Workspace::new(topo, CHUNK);
    let mut correct = 0usize;
    let mut start = 0;
    while start < data.len() {
        let b = CHUNK.min(data.len() - start);
        let x = &data.images[start * topo.input..(start + b) * topo.input];
        forward(topo, params, x, b, &mut ws);
        for (k, scores) in ws.out[..b * topo.output].chunks_exact(topo.output).enumerate() {
            if argmax(scores) == data.labels[start + k] as usize {
                correct += 1;
            }
        }
        start += b;
    }
    if data.is_empty() {
        0.0
    } else {
        correct as f64 / data.len() as f64
    }
}

/// Hyper-parameters of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub topology: Topology,
    pub minibatch: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub format: FixedPointFormat,
    /// Use only the first `n` training images (None = all).
    pub train_limit: Option<usize>,
}

/// Chosen by a coarse grid search over {0.01, 0.02, 0.05, 0.1, 0.2} on the
/// fault-free baseline (see README); 0.2 diverges.
pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            topology: Topology::default(),
            minibatch: 10,
            epochs: 5,
            learning_rate: DEFAULT_LEARNING_RATE,
            format: FixedPointFormat::default(),
            train_limit: None,
        }
    }
}

/// RNG streams derived from a run seed.
pub mod streams {
    use super::*;

    pub fn init(seed: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(0);
        r
    }
    pub fn shuffle(seed: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(1);
        r
    }
    pub fn memory(seed: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(2);
        r
    }
}

/// Fills `x` and `t` with the examples at `indices`.
pub fn gather_batch(data: &Dataset, indices: &[usize], outputs: usize, x: &mut [f64], t: &mut [f64]) {
    let px = data.images.len() / data.len().max(1);
    for (k, &idx) in indices.iter().enumerate() {
        x[k * px..(k + 1) * px].copy_from_slice(&data.images[idx * px..(idx + 1) * px]);
        let row = &mut t[k * outputs..(k + 1) * outputs];
        row.fill(-1.0);
        row[data.labels[idx] as usize] = 1.0;
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub recognition_rate: f64,
    pub energy_pj: f64,
    pub words_written: u64,
    pub final_words: Vec<u16>,
}

/// Trains one network from `seed` with its parameters in an approximate
/// store programmed with `profile`, then scores it on `test`.
pub fn train_run(cfg: &TrainConfig, profile: &ProgrammingProfile, seed: u64, train: &Dataset, test: &Dataset) -> RunResult {
    let topo = cfg.topology;
    let n_train = cfg.train_limit.map_or(train.len(), |n| n.min(train.len()));
    let init = init_params(&topo, &mut streams::init(seed));
    let mut store = ApproxWeightStore::from_values_with_rng(&init, cfg.format, profile.clone(), streams::memory(seed));
    let mut shuffle_rng = streams::shuffle(seed);

    let np = topo.param_count();
    let mut params = vec![0.0; np];
    let mut grad = vec![0.0; np];
    let mut targets = vec![0u16; np];
    let bs = cfg.minibatch;
    let mut ws = Workspace::new(&topo, bs);
    let mut x = vec![0.0; bs * topo.input];
    let mut t = vec![0.0; bs * topo.output];
    let mut order: Vec<usize> = (0..n_train).collect();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(bs) {
            let b = chunk.len();
            gather_batch(train, chunk, topo.output, &mut x, &mut t);
            store.read_all_into(&mut params);
            gradient(&topo, &params, &x, &t, b, &mut ws, &mut grad);
            for ((tw, &w), &g) in targets.iter_mut().zip(&params).zip(&grad) {
                *tw = cfg.format.quantize(w - cfg.learning_rate * g);
            }
            store.program_all(&targets).expect("targets sized to the store");
        }
    }
    store.read_all_into(&mut params);
    RunResult {
        seed,
        recognition_rate: accuracy(&topo, &params, test),
        energy_pj: store.ledger().total_pj(),
        words_written: store.ledger().words_written(),
        final_words: store.words().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::Split;

    fn central_difference_check(topo: Topology, b: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..topo.param_count()).map(|_| rng.random_range(-0.8..0.8)).collect();
        let x: Vec<f64> = (0..b * topo.input).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut t = vec![-1.0; b * topo.output];
        for k in 0..b {
            t[k * topo.output + rng.random_range(0..topo.output)] = 1.0;
        }
        let mut ws = Workspace::new(&topo, b);
        let mut grad = vec![0.0; topo.param_count()];
        gradient(&topo, &params, &x, &t, b, &mut ws, &mut grad);
        let loss = |p: &[f64], ws: &mut Workspace| {
            let mut g = vec![0.0; p.len()];
            gradient(&topo, p, &x, &t, b, ws, &mut g)
        };
        let h = 1e-5;
        let mut worst = 0.0f64;
        for j in 0..params.len() {
            let mut p = params.clone();
            p[j] += h;
            let up = loss(&p, &mut ws);
            p[j] -= 2.0 * h;
            let down = loss(&p, &mut ws);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[j]).abs() / fd.abs().max(grad[j].abs()).max(1e-3);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for seed in 0..3 {
            let err = central_difference_check(Topology::new(6, 4, 3), 5, seed);
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn parameter_count() {
        assert_eq!(Topology::default().param_count(), 238_510);
        let t = Topology::new(6, 4, 3);
        assert_eq!(t.b2().end, t.param_count());
    }

    #[test]
    fn zero_weights_predict_class_zero() {
        let topo = Topology::new(4, 3, 10);
        let params = vec![0.0; topo.param_count()];
        let mut ws = Workspace::new(&topo, 1);
        forward(&topo, &params, &[0.2, 0.4, 0.6, 0.8], 1, &mut ws);
        assert!(ws.outputs()[..10].iter().all(|&s| s == 0.0));
        assert_eq!(argmax(&ws.outputs()[..10]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.5, -1.0]), 1);
    }

    #[test]
    fn forward_matches_scalar_reference() {
        let topo = Topology::new(5, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p: Vec<f64> = (0..topo.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..2 * 5).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut ws = Workspace::new(&topo, 2);
        forward(&topo, &p, &x, 2, &mut ws);
        for b in 0..2 {
            let xb = &x[b * 5..(b + 1) * 5];
            let hid: Vec<f64> = (0..4)
                .map(|j| (p[20 + j] + (0..5).map(|i| p[j * 5 + i] * xb[i]).sum::<f64>()).tanh())
                .collect();
            for k in 0..3 {
                let y = (p[36 + k] + (0..4).map(|j| p[24 + k * 4 + j] * hid[j]).sum::<f64>()).tanh();
                assert!((ws.outputs()[b * 3 + k] - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn learns_a_separable_toy_problem() {
        // two classes keyed on which half of the input is bright
        let topo = Topology::new(8, 6, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200;
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for k in 0..n {
            let c = k % 2;
            for i in 0..8 {
                let bright = (i < 4) == (c == 0);
                images.push(if bright { rng.random_range(0.6..1.0) } else { rng.random_range(0.0..0.3) });
            }
            labels.push(c as u8);
        }
        let data = Dataset { images, labels, split: Split::Train };
        let cfg = TrainConfig {
            topology: topo,
            minibatch: 10,
            epochs: 5,
            learning_rate: 0.1,
            format: FixedPointFormat::default(),
            train_limit: None,
        };
        let profile = ProgrammingProfile::constant(0.0, 0.0).unwrap();
        let r = train_run(&cfg, &profile, 1, &data, &data);
        assert!(r.recognition_rate > 0.95, "{}", r.recognition_rate);
        assert_eq!(r.words_written, (5 * 20 * topo.param_count()) as u64);
    }
}
