//! Write-failure sampling.
//!
//! A write only matters at bit positions where the target differs from the
//! stored value (the "relevant" mask); a pulse toward the state already held
//! is a no-op whatever its outcome. Each relevant bit fails independently
//! with the BER of its position.
//!
//! [`naive_failure_mask`] draws one uniform per relevant bit and is the
//! reference. [`FastSampler`] produces the same distribution with far fewer
//! draws by grouping bit positions that share a BER:
//!
//! - BER ≤ 1e-3: the relevant bit-writes of a group, across all words in
//!   write order (least significant first within a word), form one Bernoulli
//!   stream. The sampler keeps a geometric skip count to the next failure and
//!   only touches the RNG when a failure actually happens.
//! - BER > 1e-3: per word, the number of failures among the `n` relevant bits
//!   of the group is drawn from Binomial(n, p) by inverting a precomputed CDF,
//!   then that many positions are picked uniformly without replacement.
//! - BER 0 and BER 1 need no randomness.

use rand::Rng;

use super::fixed::WORD_BITS;

const BITS: usize = WORD_BITS as usize;

/// Groups at or below this BER use geometric skipping.
pub const GEOMETRIC_MAX_BER: f64 = 1e-3;

/// Per-bit reference sampler.
pub fn naive_failure_mask<R: Rng + ?Sized>(rng: &mut R, bers: &[f64; BITS], relevant: u16) -> u16 {
    let mut out = 0u16;
    let mut rest = relevant;
    while rest != 0 {
        let b = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        if rng.random::<f64>() < bers[b] {
            out |= 1 << b;
        }
    }
    out
}

#[derive(Debug, Clone)]
enum GroupKind {
    Always,
    Geometric {
        /// ln(1 − p)
        ln_keep: f64,
        /// Relevant bit-writes still to pass before the next failure.
        skip: u64,
    },
    Binomial {
        /// cdf[n][f] = P(failures ≤ f | n relevant bits)
        cdf: Box<[[f64; BITS + 1]; BITS + 1]>,
    },
}

#[derive(Debug, Clone)]
struct Group {
    mask: u16,
    kind: GroupKind,
}

/// Stateful fast sampler for one BER profile.
#[derive(Debug, Clone)]
pub struct FastSampler {
    groups: Vec<Group>,
}

impl FastSampler {
    /// Builds the groups for `bers`; draws the initial skip counts from `rng`.
    pub fn new<R: Rng + ?Sized>(bers: &[f64; BITS], rng: &mut R) -> Self {
        let mut distinct: Vec<(f64, u16)> = Vec::new();
        for (b, &p) in bers.iter().enumerate() {
            match distinct.iter_mut().find(|(q, _)| *q == p) {
                Some((_, m)) => *m |= 1 << b,
                None => distinct.push((p, 1 << b)),
            }
        }
        let groups = distinct
            .into_iter()
            .filter(|&(p, _)| p > 0.0)
            .map(|(p, mask)| {
                let kind = if p >= 1.0 {
                    GroupKind::Always
                } else if p <= GEOMETRIC_MAX_BER {
                    let ln_keep = (-p).ln_1p();
                    GroupKind::Geometric { ln_keep, skip: draw_skip(rng, ln_keep) }
                } else {
                    GroupKind::Binomial { cdf: binomial_cdf_table(p) }
                };
                Group { mask, kind }
            })
            .collect();
        Self { groups }
    }

    /// Failed positions among `relevant`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, relevant: u16) -> u16 {
        let mut out = 0u16;
        for g in &mut self.groups {
            let m = relevant & g.mask;
            if m == 0 {
                continue;
            }
            match &mut g.kind {
                GroupKind::Always => out |= m,
                GroupKind::Geometric { ln_keep, skip } => {
                    let n = m.count_ones() as u64;
                    if *skip >= n {
                        *skip -= n;
                        continue;
                    }
                    let mut rest = m;
                    loop {
                        let pos = nth_set_bit(rest, *skip as u32);
                        out |= 1 << pos;
                        rest &= !(((2u32 << pos) - 1) as u16);
                        *skip = draw_skip(rng, *ln_keep);
                        let left = rest.count_ones() as u64;
                        if *skip >= left {
                            *skip -= left;
                            break;
                        }
                    }
                }
                GroupKind::Binomial { cdf } => {
                    let n = m.count_ones() as usize;
                    let row = &cdf[n];
                    let u = rng.random::<f64>();
                    let mut f = 0;
                    while f < n && u >= row[f] {
                        f += 1;
                    }
                    out |= place(rng, m, n, f);
                }
            }
        }
        out
    }
}

/// Picks `f` of the `n` set bits of `m` uniformly without replacement.
#[inline]
fn place<R: Rng + ?Sized>(rng: &mut R, m: u16, n: usize, f: usize) -> u16 {
    if f == 0 {
        return 0;
    }
    if f == n {
        return m;
    }
    let mut pos = [0u8; BITS];
    let mut rest = m;
    for p in pos.iter_mut().take(n) {
        *p = rest.trailing_zeros() as u8;
        rest &= rest - 1;
    }
    // partial Fisher–Yates over the smaller of the chosen / unchosen sets
    let k = f.min(n - f);
    let mut chosen = 0u16;
    for i in 0..k {
        let j = rng.random_range(i..n);
        pos.swap(i, j);
        chosen |= 1 << pos[i];
    }
    if k == f {
        chosen
    } else {
        m & !chosen
    }
}

fn draw_skip<R: Rng + ?Sized>(rng: &mut R, ln_keep: f64) -> u64 {
    // U in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let s = (u.ln() / ln_keep).floor();
    if s >= u64::MAX as f64 {
        u64::MAX
    } else {
        s as u64
    }
}

/// Position of the `idx`-th (0-based) set bit of `m`, counting from bit 0.
#[inline]
fn nth_set_bit(mut m: u16, idx: u32) -> u32 {
    for _ in 0..idx {
        m &= m - 1;
    }
    m.trailing_zeros()
}

fn binomial_cdf_table(p: f64) -> Box<[[f64; BITS + 1]; BITS + 1]> {
    let mut t = Box::new([[1.0; BITS + 1]; BITS + 1]);
    for n in 0..=BITS {
        let mut acc = 0.0;
        let mut binom = 1.0f64;
        for f in 0..=n {
            if f > 0 {
                binom = binom * (n - f + 1) as f64 / f as f64;
            }
            acc += binom * p.powi(f as i32) * (1.0 - p).powi((n - f) as i32);
            t[n][f] = acc;
        }
        // guard against rounding leaving u ≥ cdf[n][n]
        t[n][n] = 1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut zero = FastSampler::new(&[0.0; BITS], &mut rng);
        let mut one = FastSampler::new(&[1.0; BITS], &mut rng);
        for m in [0u16, 1, 0xBEEF, 0xFFFF] {
            assert_eq!(zero.sample(&mut rng, m), 0);
            assert_eq!(one.sample(&mut rng, m), m);
            assert_eq!(naive_failure_mask(&mut rng, &[0.0; BITS], m), 0);
            assert_eq!(naive_failure_mask(&mut rng, &[1.0; BITS], m), m);
        }
    }

    #[test]
    fn failures_stay_inside_relevant_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut bers = [1e-4; BITS];
        bers[..6].copy_from_slice(&[0.5, 0.5, 0.9, 0.9, 0.05, 1e-2]);
        let mut s = FastSampler::new(&bers, &mut rng);
        for i in 0..100_000u32 {
            let m = (i.wrapping_mul(2_654_435_761) >> 7) as u16;
            assert_eq!(s.sample(&mut rng, m) & !m, 0);
        }
    }

    #[test]
    fn nth_bit() {
        assert_eq!(nth_set_bit(0b1011_0100, 0), 2);
        assert_eq!(nth_set_bit(0b1011_0100, 1), 4);
        assert_eq!(nth_set_bit(0b1011_0100, 3), 7);
        assert_eq!(nth_set_bit(0x8000, 0), 15);
    }

    #[test]
    fn cdf_rows_are_monotone_and_end_at_one() {
        let t = binomial_cdf_table(0.3);
        for n in 0..=BITS {
            for f in 1..=n {
                assert!(t[n][f] >= t[n][f - 1]);
            }
            assert_eq!(t[n][n], 1.0);
        }
        assert!((t[2][0] - 0.49).abs() < 1e-15);
        assert!((t[2][1] - 0.91).abs() < 1e-15);
    }

    #[test]
    fn geometric_path_rate() {
        // 4e6 relevant bit-writes at p = 1e-3: mean 4000 failures, σ ≈ 63
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = FastSampler::new(&[1e-3; BITS], &mut rng);
        let mut fails = 0u64;
        for _ in 0..250_000 {
            fails += s.sample(&mut rng, 0xFFFF).count_ones() as u64;
        }
        assert!((fails as f64 - 4000.0).abs() < 5.0 * 63.2, "{fails}");
    }
}
