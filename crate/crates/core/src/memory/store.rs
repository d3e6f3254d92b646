use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fixed::{Encoding, FixedPointFormat};
use super::profile::ProgrammingProfile;
use super::sampler::{naive_failure_mask, FastSampler};
use super::MemoryError;

const SNAPSHOT_MAGIC: &[u8; 4] = b"AMEM";
const SNAPSHOT_VERSION: u32 = 1;

/// Cumulative programming energy, Neumaier-compensated.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyLedger {
    sum: f64,
    compensation: f64,
    words_written: u64,
}

impl EnergyLedger {
    fn add(&mut self, energy_pj: f64, words: u64) {
        let t = self.sum + energy_pj;
        if self.sum.abs() >= energy_pj.abs() {
            self.compensation += (self.sum - t) + energy_pj;
        } else {
            self.compensation += (energy_pj - t) + self.sum;
        }
        self.sum = t;
        self.words_written += words;
    }

    pub fn total_pj(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn words_written(&self) -> u64 {
        self.words_written
    }
}

/// Which failure sampler the store drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    #[default]
    Fast,
    /// One uniform draw per relevant bit; slow, reference only.
    Naive,
}

/// Array of 16-bit words with stochastic ST-MRAM write semantics.
///
/// Every write pulses all 16 bits (blind write) and is billed the full word
/// energy. A bit whose pulse fails keeps its previous value. Reads are exact
/// and free.
#[derive(Debug, Clone)]
pub struct ApproxWeightStore {
    words: Vec<u16>,
    format: FixedPointFormat,
    profile: ProgrammingProfile,
    bers: [f64; 16],
    word_energy_pj: f64,
    sampler: FastSampler,
    kind: SamplerKind,
    rng: ChaCha8Rng,
    ledger: EnergyLedger,
}

impl ApproxWeightStore {
    /// Store holding `initial` words. Initialization is not a programming
    /// event and costs nothing.
    pub fn new(initial: Vec<u16>, format: FixedPointFormat, profile: ProgrammingProfile, seed: u64) -> Self {
        Self::with_rng(initial, format, profile, ChaCha8Rng::seed_from_u64(seed))
    }

    /// Like [`Self::new`] with an explicit generator stream.
    pub fn with_rng(initial: Vec<u16>, format: FixedPointFormat, profile: ProgrammingProfile, mut rng: ChaCha8Rng) -> Self {
        let bers = profile.bers();
        let sampler = FastSampler::new(&bers, &mut rng);
        Self {
            words: initial,
            format,
            word_energy_pj: profile.word_energy_pj(),
            bers,
            profile,
            sampler,
            kind: SamplerKind::Fast,
            rng,
            ledger: EnergyLedger::default(),
        }
    }

    /// Store initialized with the quantized `values`.
    pub fn from_values(values: &[f64], format: FixedPointFormat, profile: ProgrammingProfile, seed: u64) -> Self {
        let words = values.iter().map(|&v| format.quantize(v)).collect();
        Self::new(words, format, profile, seed)
    }

    pub fn from_values_with_rng(
        values: &[f64],
        format: FixedPointFormat,
        profile: ProgrammingProfile,
        rng: ChaCha8Rng,
    ) -> Self {
        let words = values.iter().map(|&v| format.quantize(v)).collect();
        Self::with_rng(words, format, profile, rng)
    }

    pub fn with_sampler(mut self, kind: SamplerKind) -> Self {
        self.kind = kind;
        self
    }

    /// Switches to another profile; the RNG stream continues.
    pub fn set_profile(&mut self, profile: ProgrammingProfile) {
        self.bers = profile.bers();
        self.word_energy_pj = profile.word_energy_pj();
        self.sampler = FastSampler::new(&self.bers, &mut self.rng);
        self.profile = profile;
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u16] {
        &self.words
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn profile(&self) -> &ProgrammingProfile {
        &self.profile
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn read(&self, index: usize) -> Result<u16, MemoryError> {
        self.words
            .get(index)
            .copied()
            .ok_or(MemoryError::IndexOutOfRange { index, len: self.words.len() })
    }

    pub fn read_value(&self, index: usize) -> Result<f64, MemoryError> {
        Ok(self.format.dequantize(self.read(index)?))
    }

    /// Dequantizes every word into `out`.
    pub fn read_all_into(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.words.len(), "output length must match store length");
        for (o, &w) in out.iter_mut().zip(&self.words) {
            *o = self.format.dequantize(w);
        }
    }

    #[inline]
    fn write_one(&mut self, index: usize, target: u16) {
        let stored = self.words[index];
        let relevant = stored ^ target;
        if relevant == 0 {
            return;
        }
        let failed = match self.kind {
            SamplerKind::Fast => self.sampler.sample(&mut self.rng, relevant),
            SamplerKind::Naive => naive_failure_mask(&mut self.rng, &self.bers, relevant),
        };
        // failed bits keep the stored value, which differs from target there
        self.words[index] = target ^ failed;
    }

    /// Programs one word.
    pub fn program_word(&mut self, index: usize, target: u16) -> Result<(), MemoryError> {
        if index >= self.words.len() {
            return Err(MemoryError::IndexOutOfRange { index, len: self.words.len() });
        }
        self.write_one(index, target);
        self.ledger.add(self.word_energy_pj, 1);
        Ok(())
    }

    /// Programs every word, in index order.
    pub fn program_all(&mut self, targets: &[u16]) -> Result<(), MemoryError> {
        if targets.len() != self.words.len() {
            return Err(MemoryError::LengthMismatch { expected: self.words.len(), got: targets.len() });
        }
        for (i, &t) in targets.iter().enumerate() {
            self.write_one(i, t);
        }
        let n = targets.len() as u64;
        self.ledger.add(self.word_energy_pj * n as f64, n);
        Ok(())
    }

    /// Snapshot: 16-byte header {"AMEM", version, word count, F | encoding<<16}
    /// in little-endian (encoding 0 = sign-magnitude, 1 = two's complement),
    /// then the words as little-endian u16.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), MemoryError> {
        let count = u32::try_from(self.words.len()).map_err(|_| MemoryError::SnapshotTooLarge(self.words.len()))?;
        let mut buf = Vec::with_capacity(16 + 2 * self.words.len());
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        buf.extend_from_slice(&count.to_le_bytes());
        let enc = match self.format.encoding() {
            Encoding::SignMagnitude => 0u32,
            Encoding::TwosComplement => 1,
        };
        buf.extend_from_slice(&(self.format.fractional_bits() | enc << 16).to_le_bytes());
        for &word in &self.words {
            buf.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Replaces the stored words with a snapshot taken with the same format.
    pub fn restore_snapshot<R: Read>(&mut self, r: R) -> Result<(), MemoryError> {
        let (format, words) = read_snapshot(r)?;
        if format != self.format {
            return Err(MemoryError::FormatMismatch {
                expected: self.format,
                got: format,
            });
        }
        self.words = words;
        Ok(())
    }
}

/// Parses a snapshot written by [`ApproxWeightStore::write_snapshot`].
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(FixedPointFormat, Vec<u16>), MemoryError> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|_| MemoryError::SnapshotTruncated)?;
    if &header[0..4] != SNAPSHOT_MAGIC {
        return Err(MemoryError::SnapshotMagic);
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != SNAPSHOT_VERSION {
        return Err(MemoryError::SnapshotVersion(version));
    }
    let count = word(8) as usize;
    let f = word(12);
    let encoding = match f >> 16 {
        0 => Encoding::SignMagnitude,
        1 => Encoding::TwosComplement,
        _ => return Err(MemoryError::SnapshotFormat(f)),
    };
    let format = FixedPointFormat::new(f & 0xFFFF).ok_or(MemoryError::SnapshotFormat(f))?.with_encoding(encoding);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 2 * count {
        return Err(MemoryError::SnapshotTruncated);
    }
    let words = payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok((format, words))
}
