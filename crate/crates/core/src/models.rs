//! The calibrated model stack: switching statistics, pulse energy and
//! device variability, queried together as "what does BER b cost".

use crate::device::DeviceParams;
use crate::energy::{EnergyModel, DEFAULT_ENERGY_ANCHOR_NS, DEFAULT_ENERGY_ANCHOR_PJ, DEFAULT_V_PULSE_MV};
use crate::error::{CalibrationError, SolveError};
use crate::switching::{calibrate_with, Anchor, CalibrationOptions, PulseSpec, SwitchingModel, DEFAULT_ANCHORS};
use crate::variability::{calibrate_variability, VariabilityCalibration, VariabilityModel, DEFAULT_VARIABILITY_ANCHOR};

/// Everything needed to calibrate the stack.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationInputs {
    pub device: DeviceParams,
    pub anchors: Vec<Anchor>,
    pub switching: CalibrationOptions,
    pub v_pulse_mv: f64,
    pub energy_anchor_ns: f64,
    pub energy_anchor_pj: f64,
    /// (BER, duration) the device population must meet.
    pub variability_anchor: (f64, f64),
    pub variability: VariabilityCalibration,
}

impl Default for CalibrationInputs {
    fn default() -> Self {
        Self {
            device: DeviceParams::default(),
            anchors: DEFAULT_ANCHORS.to_vec(),
            switching: CalibrationOptions::default(),
            v_pulse_mv: DEFAULT_V_PULSE_MV,
            energy_anchor_ns: DEFAULT_ENERGY_ANCHOR_NS,
            energy_anchor_pj: DEFAULT_ENERGY_ANCHOR_PJ,
            variability_anchor: DEFAULT_VARIABILITY_ANCHOR,
            variability: VariabilityCalibration::default(),
        }
    }
}

/// Calibrated switching, energy and variability models at one pulse amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedModels {
    pub device: DeviceParams,
    pub switching: SwitchingModel,
    pub energy: EnergyModel,
    pub variability: VariabilityModel,
    pub v_pulse_mv: f64,
}

impl CalibratedModels {
    pub fn calibrate(inputs: &CalibrationInputs) -> Result<Self, CalibrationError> {
        inputs.device.validate().map_err(SolveError::from)?;
        let switching = calibrate_with(&inputs.anchors, &inputs.switching)?;
        let pulse = PulseSpec::new(inputs.v_pulse_mv, inputs.energy_anchor_ns).map_err(SolveError::from)?;
        let energy = EnergyModel::calibrate(&inputs.device, pulse, inputs.energy_anchor_pj)?;
        let (ber, t) = inputs.variability_anchor;
        let variability = calibrate_variability(&switching, ber, t, &inputs.variability)?;
        Ok(Self {
            device: inputs.device,
            switching,
            energy,
            variability,
            v_pulse_mv: inputs.v_pulse_mv,
        })
    }

    /// Default anchors throughout.
    pub fn calibrate_default() -> Result<Self, CalibrationError> {
        Self::calibrate(&CalibrationInputs::default())
    }

    /// Same stack with device variability switched off.
    pub fn without_variability(&self) -> Self {
        let mut out = self.clone();
        out.variability = VariabilityModel::new(0.0, self.variability.quadrature_order())
            .with_max_pulse_ns(self.variability.max_pulse_ns());
        out
    }

    /// Pulse duration meeting `target_ber`, with or without variability.
    pub fn tpulse_for(&self, target_ber: f64, use_variability: bool) -> Result<f64, SolveError> {
        if use_variability {
            self.variability.tpulse_for_array_ber(&self.switching, target_ber)
        } else {
            self.switching.tpulse_for_ber(target_ber)
        }
    }

    /// BER actually delivered by a pulse of `t_ns`.
    pub fn ber_for(&self, t_ns: f64, use_variability: bool) -> f64 {
        if use_variability {
            self.variability.array_ber(&self.switching, t_ns)
        } else {
            self.switching.ber_at(t_ns)
        }
    }

    pub fn pulse_energy_pj(&self, t_ns: f64) -> f64 {
        self.energy.pulse_energy_pj(PulseSpec {
            v_pulse_mv: self.v_pulse_mv,
            t_pulse_ns: t_ns,
        })
    }

    /// Energy of one bit write programmed for `target_ber`.
    pub fn energy_for_ber(&self, target_ber: f64, use_variability: bool) -> Result<f64, SolveError> {
        Ok(self.pulse_energy_pj(self.tpulse_for(target_ber, use_variability)?))
    }

    /// 1 − E(b) / E(baseline).
    pub fn saving_vs(&self, target_ber: f64, baseline_ber: f64, use_variability: bool) -> Result<f64, SolveError> {
        Ok(1.0 - self.energy_for_ber(target_ber, use_variability)? / self.energy_for_ber(baseline_ber, use_variability)?)
    }

    /// `key = value` report of all fitted parameters.
    pub fn to_kv(&self) -> String {
        let mut s = String::from("[switching]\n");
        s.push_str(&self.switching.to_kv());
        s.push_str("\n[energy]\n");
        s.push_str(&format!("v_pulse_mv = {}\n", self.v_pulse_mv));
        s.push_str(&format!("r_effective_ohm = {:.6}\n", self.energy.r_effective_ohm));
        s.push_str(&format!("calibration_factor = {:.9}\n", self.energy.calibration_factor));
        s.push_str("\n[variability]\n");
        s.push_str(&format!("sigma_scale = {:.9}\n", self.variability.sigma_scale()));
        s.push_str(&format!("quadrature_order = {}\n", self.variability.quadrature_order()));
        s.push_str(&format!("max_pulse_ns = {}\n", self.variability.max_pulse_ns()));
        s
    }
}
