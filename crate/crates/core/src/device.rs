//! Magnetic tunnel junction constants.

use crate::error::DomainError;

/// Geometry and electrical constants of one MTJ cell.
///
/// Defaults describe a perpendicular-anisotropy junction at a 32 nm node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub diameter_nm: f64,
    pub storage_thickness_nm: f64,
    /// Saturation magnetization, in tesla per µ0.
    pub saturation_magnetization_t: f64,
    /// Resistance-area product, Ω·µm².
    pub resistance_area_ohm_um2: f64,
    /// Tunnel magnetoresistance as a ratio (1.5 = 150 %).
    pub tmr: f64,
    pub v_critical_mv: f64,
    /// Retention barrier in units of kB·T.
    pub delta_e_kt: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            diameter_nm: 32.0,
            storage_thickness_nm: 1.3,
            saturation_magnetization_t: 1.58,
            resistance_area_ohm_um2: 4.0,
            tmr: 1.5,
            v_critical_mv: 190.0,
            delta_e_kt: 70.0,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let positive = [
            ("diameter must be > 0", self.diameter_nm),
            ("storage thickness must be > 0", self.storage_thickness_nm),
            ("saturation magnetization must be > 0", self.saturation_magnetization_t),
            ("resistance-area product must be > 0", self.resistance_area_ohm_um2),
            ("TMR must be > 0", self.tmr),
            ("critical voltage must be > 0", self.v_critical_mv),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DomainError::new(what, v));
            }
        }
        if !(self.delta_e_kt >= 1.0 && self.delta_e_kt.is_finite()) {
            return Err(DomainError::new("energy barrier must be >= 1 kT", self.delta_e_kt));
        }
        let r = self.r_parallel_ohm();
        if !(r > 0.0 && r.is_finite()) {
            return Err(DomainError::new("parallel resistance must be finite and > 0", r));
        }
        Ok(())
    }

    /// Junction area in µm².
    pub fn area_um2(&self) -> f64 {
        let radius_um = self.diameter_nm * 1e-3 / 2.0;
        std::f64::consts::PI * radius_um * radius_um
    }

    /// Parallel-state resistance R_P = RA / area.
    pub fn r_parallel_ohm(&self) -> f64 {
        self.resistance_area_ohm_um2 / self.area_um2()
    }

    /// Anti-parallel resistance R_P · (1 + TMR).
    pub fn r_antiparallel_ohm(&self) -> f64 {
        self.r_parallel_ohm() * (1.0 + self.tmr)
    }

    /// Pulse amplitude for a given overdrive ratio V / Vc.
    pub fn pulse_voltage_mv(&self, v_ratio: f64) -> f64 {
        v_ratio * self.v_critical_mv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parallel_resistance() {
        let d = DeviceParams::default();
        d.validate().unwrap();
        // 4 Ω·µm² over π·(0.016 µm)²
        assert!((d.r_parallel_ohm() - 4973.6).abs() < 0.1, "{}", d.r_parallel_ohm());
        assert!((d.r_antiparallel_ohm() / d.r_parallel_ohm() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_fields() {
        let mut d = DeviceParams::default();
        d.tmr = 0.0;
        assert!(d.validate().is_err());
        let mut d = DeviceParams::default();
        d.delta_e_kt = 0.5;
        assert!(d.validate().is_err());
        let mut d = DeviceParams::default();
        d.diameter_nm = f64::NAN;
        assert!(d.validate().is_err());
    }
}
