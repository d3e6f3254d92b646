//! Programming energy of a single pulse.

use crate::device::DeviceParams;
use crate::error::CalibrationError;
use crate::switching::PulseSpec;

/// Supply-side operating point: the pulse amplitude used for every write.
pub const DEFAULT_V_PULSE_MV: f64 = 381.0;

/// Reference energy: 0.48 pJ for a 15 ns pulse at 381 mV.
pub const DEFAULT_ENERGY_ANCHOR_PJ: f64 = 0.48;
pub const DEFAULT_ENERGY_ANCHOR_NS: f64 = 15.0;

/// E = calibration_factor · V² · T / r_effective.
///
/// The factor absorbs driver overhead and the resistance change during the
/// pulse; only ratios of durations reach the neural-network results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub r_effective_ohm: f64,
    pub calibration_factor: f64,
}

impl EnergyModel {
    /// Bare resistive model (factor 1) on the junction's parallel resistance.
    pub fn uncalibrated(device: &DeviceParams) -> Self {
        Self {
            r_effective_ohm: device.r_parallel_ohm(),
            calibration_factor: 1.0,
        }
    }

    /// Sets the factor so that `pulse` costs exactly `energy_pj`.
    pub fn calibrate(device: &DeviceParams, pulse: PulseSpec, energy_pj: f64) -> Result<Self, CalibrationError> {
        if !(energy_pj > 0.0 && energy_pj.is_finite()) {
            return Err(CalibrationError::NonPositiveEnergy(energy_pj));
        }
        let bare = Self::uncalibrated(device).pulse_energy_pj(pulse);
        if !(bare > 0.0) {
            return Err(CalibrationError::InvalidAnchor {
                t_ns: pulse.t_pulse_ns,
                ber: f64::NAN,
                why: "energy anchor needs a pulse of non-zero duration",
            });
        }
        Ok(Self {
            r_effective_ohm: device.r_parallel_ohm(),
            calibration_factor: energy_pj / bare,
        })
    }

    /// Energy of one pulse in pJ.
    pub fn pulse_energy_pj(&self, pulse: PulseSpec) -> f64 {
        // mV² · ns / Ω = 1e-15 J = 1e-3 pJ
        self.calibration_factor * pulse.v_pulse_mv * pulse.v_pulse_mv * pulse.t_pulse_ns / self.r_effective_ohm * 1e-3
    }
}
