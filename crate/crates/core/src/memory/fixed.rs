/// How negative values are laid out in the 16-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Bit 15 is the sign, bits 0..15 the magnitude. A weight crossing zero
    /// toggles only the sign and its low magnitude bits.
    #[default]
    SignMagnitude,
    /// A zero crossing toggles every high bit, so one failed high-bit write
    /// there leaves the weight near the range limit.
    TwosComplement,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::SignMagnitude => "sign_magnitude",
            Encoding::TwosComplement => "twos_complement",
        }
    }
}

/// 16-bit fixed point with `fractional_bits` below the binary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointFormat {
    fractional_bits: u32,
    encoding: Encoding,
}

pub const WORD_BITS: u32 = 16;

impl Default for FixedPointFormat {
    fn default() -> Self {
        Self { fractional_bits: 12, encoding: Encoding::default() }
    }
}

impl FixedPointFormat {
    pub fn new(fractional_bits: u32) -> Option<Self> {
        (1..WORD_BITS).contains(&fractional_bits).then_some(Self { fractional_bits, encoding: Encoding::default() })
    }

    pub fn with_encoding(self, encoding: Encoding) -> Self {
        Self { encoding, ..self }
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn total_bits(&self) -> u32 {
        WORD_BITS
    }

    pub fn fractional_bits(&self) -> u32 {
        self.fractional_bits
    }

    /// Quantization step 2^-F.
    pub fn step(&self) -> f64 {
        1.0 / self.scale()
    }

    #[inline]
    fn scale(&self) -> f64 {
        (1u32 << self.fractional_bits) as f64
    }

    pub fn min_value(&self) -> f64 {
        match self.encoding {
            Encoding::SignMagnitude => -self.max_value(),
            Encoding::TwosComplement => i16::MIN as f64 * self.step(),
        }
    }

    pub fn max_value(&self) -> f64 {
        i16::MAX as f64 * self.step()
    }

    /// Round to nearest (ties to even), saturating at the representable
    /// range. NaN maps to zero. In sign-magnitude, values that round to zero
    /// keep their sign bit.
    #[inline]
    pub fn quantize(&self, x: f64) -> u16 {
        // 1.5·2^52: adding and subtracting it rounds ties to even for
        // |v| < 2^51 under the default rounding mode, without a libm call
        const ROUNDER: f64 = 6_755_399_441_055_744.0;
        match self.encoding {
            Encoding::TwosComplement => {
                let v = (x * self.scale()).clamp(i16::MIN as f64, i16::MAX as f64);
                let rounded = (v + ROUNDER) - ROUNDER;
                // `as` sends NaN to 0
                (rounded as i16) as u16
            }
            Encoding::SignMagnitude => {
                if x.is_nan() {
                    return 0;
                }
                let v = (x.abs() * self.scale()).min(i16::MAX as f64);
                let magnitude = ((v + ROUNDER) - ROUNDER) as u16;
                magnitude | u16::from(x.is_sign_negative()) << 15
            }
        }
    }

    #[inline]
    pub fn dequantize(&self, word: u16) -> f64 {
        match self.encoding {
            Encoding::TwosComplement => word as i16 as f64 * self.step(),
            Encoding::SignMagnitude => {
                let magnitude = (word & 0x7FFF) as f64 * self.step();
                if word & 0x8000 != 0 {
                    -magnitude
                } else {
                    magnitude
                }
            }
        }
    }

    pub fn dequantize_f32(&self, word: u16) -> f32 {
        self.dequantize(word) as f32
    }
}
