use std::fmt;

use crate::error::SolveError;
use crate::models::CalibratedModels;

use super::fixed::WORD_BITS;
use super::MemoryError;

const BITS: usize = WORD_BITS as usize;

/// How programming precision is spread over the bit positions of a word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Every bit programmed for the same BER.
    Uniform { ber: f64 },
    /// The `n_lsb` least significant bits at `ber_lsb`, the rest at `ber_hsb`.
    TwoTier { n_lsb: u32, ber_hsb: f64, ber_lsb: f64 },
    /// Per-bit values supplied directly (tests, fault-free references).
    Custom,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Uniform { .. } => "uniform",
            Scheme::TwoTier { .. } => "two_tier",
            Scheme::Custom => "custom",
        }
    }

    /// (n_lsb, ber_hsb, ber_lsb); uniform schemes report 0 LSBs.
    pub fn tiers(&self) -> (u32, f64, f64) {
        match *self {
            Scheme::Uniform { ber } => (0, ber, ber),
            Scheme::TwoTier { n_lsb, ber_hsb, ber_lsb } => (n_lsb, ber_hsb, ber_lsb),
            Scheme::Custom => (0, f64::NAN, f64::NAN),
        }
    }

    /// Target BER of bit `bit` (0 = least significant).
    fn ber_of(&self, bit: usize) -> f64 {
        match *self {
            Scheme::Uniform { ber } => ber,
            Scheme::TwoTier { n_lsb, ber_hsb, ber_lsb } => {
                if bit < n_lsb as usize {
                    ber_lsb
                } else {
                    ber_hsb
                }
            }
            Scheme::Custom => unreachable!("custom profiles are built from explicit bits"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Uniform { ber } => write!(f, "uniform(ber={ber:e})"),
            Scheme::TwoTier { n_lsb, ber_hsb, ber_lsb } => {
                write!(f, "two_tier(n_lsb={n_lsb}, ber_hsb={ber_hsb:e}, ber_lsb={ber_lsb})")
            }
            Scheme::Custom => write!(f, "custom"),
        }
    }
}

/// Programming of one bit position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitProgram {
    pub t_pulse_ns: f64,
    pub ber: f64,
    pub energy_pj: f64,
}

/// Per-bit programming of a 16-bit word; index 0 is the least significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammingProfile {
    bits: [BitProgram; BITS],
    scheme: Scheme,
}

impl ProgrammingProfile {
    /// Fills every bit from the calibrated models. A BER of exactly 1 means
    /// no pulse at all (zero duration, zero energy).
    pub fn make(scheme: Scheme, models: &CalibratedModels, use_variability: bool) -> Result<Self, MemoryError> {
        match scheme {
            Scheme::TwoTier { n_lsb, .. } if n_lsb > WORD_BITS => return Err(MemoryError::InvalidLsbCount(n_lsb)),
            Scheme::Custom => return Err(MemoryError::CustomScheme),
            _ => {}
        }
        let mut cache: Vec<(f64, BitProgram)> = Vec::new();
        let mut bits = [BitProgram { t_pulse_ns: 0.0, ber: 1.0, energy_pj: 0.0 }; BITS];
        for (b, slot) in bits.iter_mut().enumerate() {
            let ber = scheme.ber_of(b);
            if let Some((_, p)) = cache.iter().find(|(k, _)| *k == ber) {
                *slot = *p;
                continue;
            }
            let p = bit_program(ber, models, use_variability)?;
            cache.push((ber, p));
            *slot = p;
        }
        Ok(Self { bits, scheme })
    }

    /// Explicit per-bit BERs with a flat per-bit energy.
    pub fn custom(bers: [f64; BITS], energy_per_bit_pj: f64) -> Result<Self, MemoryError> {
        let mut bits = [BitProgram { t_pulse_ns: 0.0, ber: 0.0, energy_pj: energy_per_bit_pj }; BITS];
        for (slot, &ber) in bits.iter_mut().zip(&bers) {
            if !(0.0..=1.0).contains(&ber) {
                return Err(MemoryError::InvalidBer(ber));
            }
            slot.ber = ber;
        }
        Ok(Self { bits, scheme: Scheme::Custom })
    }

    /// All bits at the same BER, flat energy.
    pub fn constant(ber: f64, energy_per_bit_pj: f64) -> Result<Self, MemoryError> {
        Self::custom([ber; BITS], energy_per_bit_pj)
    }

    pub fn bits(&self) -> &[BitProgram; BITS] {
        &self.bits
    }

    pub fn bers(&self) -> [f64; BITS] {
        self.bits.map(|b| b.ber)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Energy of one blind 16-bit write.
    pub fn word_energy_pj(&self) -> f64 {
        self.bits.iter().map(|b| b.energy_pj).sum()
    }
}

fn bit_program(ber: f64, models: &CalibratedModels, use_variability: bool) -> Result<BitProgram, MemoryError> {
    if !(ber > 0.0 && ber <= 1.0) {
        return Err(MemoryError::InvalidBer(ber));
    }
    if ber == 1.0 {
        return Ok(BitProgram { t_pulse_ns: 0.0, ber: 1.0, energy_pj: 0.0 });
    }
    let t = models.tpulse_for(ber, use_variability).map_err(|e| match e {
        SolveError::TargetOutOfRange(b) => MemoryError::InvalidBer(b),
        other => MemoryError::Solve(other),
    })?;
    Ok(BitProgram {
        t_pulse_ns: t,
        ber: models.ber_for(t, use_variability),
        energy_pj: models.pulse_energy_pj(t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn models() -> &'static CalibratedModels {
        static M: OnceLock<CalibratedModels> = OnceLock::new();
        M.get_or_init(|| CalibratedModels::calibrate_default().unwrap())
    }

    #[test]
    fn uniform_energy_is_sixteen_bits() {
        let m = models();
        let p = ProgrammingProfile::make(Scheme::Uniform { ber: 1e-10 }, m, true).unwrap();
        let e = m.energy_for_ber(1e-10, true).unwrap();
        assert!((p.word_energy_pj() - 16.0 * e).abs() < 1e-12);
        for b in p.bits() {
            assert!((b.ber / 1e-10 - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn two_tier_layout() {
        let p = ProgrammingProfile::make(
            Scheme::TwoTier { n_lsb: 10, ber_hsb: 1e-2, ber_lsb: 0.5 },
            models(),
            true,
        )
        .unwrap();
        for (i, b) in p.bits().iter().enumerate() {
            let want = if i < 10 { 0.5 } else { 1e-2 };
            assert!((b.ber / want - 1.0).abs() < 1e-6, "bit {i}");
        }
        assert!(p.bits()[0].t_pulse_ns < p.bits()[15].t_pulse_ns);
    }

    #[test]
    fn zero_lsb_two_tier_is_uniform() {
        let a = ProgrammingProfile::make(Scheme::TwoTier { n_lsb: 0, ber_hsb: 1e-3, ber_lsb: 0.7 }, models(), true)
            .unwrap();
        let b = ProgrammingProfile::make(Scheme::Uniform { ber: 1e-3 }, models(), true).unwrap();
        assert_eq!(a.bits(), b.bits());
    }

    #[test]
    fn never_updated_bits_cost_nothing() {
        let p = ProgrammingProfile::make(Scheme::TwoTier { n_lsb: 8, ber_hsb: 1e-2, ber_lsb: 1.0 }, models(), true)
            .unwrap();
        assert!(p.bits()[..8].iter().all(|b| b.energy_pj == 0.0 && b.ber == 1.0));
    }

    #[test]
    fn invalid_inputs() {
        let m = models();
        assert!(matches!(
            ProgrammingProfile::make(Scheme::Uniform { ber: 0.0 }, m, true),
            Err(MemoryError::InvalidBer(_))
        ));
        assert!(matches!(
            ProgrammingProfile::make(Scheme::Uniform { ber: 1.5 }, m, true),
            Err(MemoryError::InvalidBer(_))
        ));
        assert!(matches!(
            ProgrammingProfile::make(Scheme::TwoTier { n_lsb: 17, ber_hsb: 1e-2, ber_lsb: 0.5 }, m, true),
            Err(MemoryError::InvalidLsbCount(17))
        ));
        assert!(ProgrammingProfile::constant(-0.1, 1.0).is_err());
    }
}
