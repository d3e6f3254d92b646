mod common;

use stmram::switching::PulseSpec;
use stmram::variability::{calibrate_variability, VariabilityCalibration, VariabilityModel};
use stmram::{CalibratedModels, DeviceParams, EnergyModel};

fn models() -> CalibratedModels {
    CalibratedModels::calibrate_default().unwrap()
}

#[test]
fn quadrature_matches_monte_carlo() {
    let z = common::array_ber_monte_carlo_worst_z(&models(), &[1e-2, 1e-3, 1e-4, 1e-5], 10_000_000);
    assert!(z <= 3.0, "worst z = {z}");
}

#[test]
fn quadrature_is_converged_in_the_deep_tail() {
    let m = models();
    let t = m.tpulse_for(1e-10, true).unwrap();
    let fine = VariabilityModel::new(m.variability.sigma_scale(), 180);
    let a = m.variability.array_ber(&m.switching, t);
    let b = fine.array_ber(&m.switching, t);
    assert!((a / b - 1.0).abs() < 1e-6, "{a:e} vs {b:e}");
}

#[test]
fn variability_anchor_and_validation_point() {
    let m = models();
    assert!(m.variability.sigma_scale() > 0.0);
    let t10 = m.tpulse_for(1e-10, true).unwrap();
    assert!((t10 / 20.5 - 1.0).abs() < 0.05, "{t10}");
    let t4 = m.tpulse_for(1e-4, true).unwrap();
    assert!((t4 / (1.176 * 9.45) - 1.0).abs() < 0.07, "{t4}");
}

#[test]
fn zero_spread_reduces_to_the_switching_model() {
    let m = models();
    let none = VariabilityModel::new(0.0, 64);
    for t in [3.0, 7.0, 12.0, 18.0] {
        assert_eq!(none.array_ber(&m.switching, t), m.switching.ber_at(t));
    }
    let t = m.switching.tpulse_for_ber(1e-6).unwrap();
    let cal = calibrate_variability(&m.switching, 1e-6, t, &VariabilityCalibration::default()).unwrap();
    assert_eq!(cal.sigma_scale(), 0.0);
}

#[test]
fn variability_penalty_sign_and_growth() {
    let m = models();
    for ber in [1e-3, 1e-4, 1e-6, 1e-8, 1e-10] {
        assert!(m.tpulse_for(ber, true).unwrap() > m.tpulse_for(ber, false).unwrap(), "BER {ber}");
    }
    let increase = |ber: f64| m.energy_for_ber(ber, true).unwrap() / m.energy_for_ber(ber, false).unwrap() - 1.0;
    assert!(increase(1e-10) > increase(1e-4));
    assert!((0.12..=0.24).contains(&increase(1e-4)), "{}", increase(1e-4));
}

#[test]
fn energy_decreases_with_target_ber() {
    let m = models();
    for use_var in [false, true] {
        let mut last = f64::INFINITY;
        for e in 1..=10 {
            let energy = m.energy_for_ber(10f64.powi(-11 + e), use_var).unwrap();
            assert!(energy < last);
            last = energy;
        }
    }
}

#[test]
fn energy_is_linear_in_duration() {
    let dev = DeviceParams::default();
    let e = EnergyModel::calibrate(&dev, PulseSpec::new(381.0, 15.0).unwrap(), 0.48).unwrap();
    let at = |t: f64| e.pulse_energy_pj(PulseSpec::new(381.0, t).unwrap());
    assert!((at(15.0) - 0.48).abs() < 1e-15);
    assert!((at(7.05) - 0.2256).abs() < 1e-12);
    for a in [0.0, 0.25, 1.0, 3.7, 10.0] {
        assert!((at(a * 4.0) - a * at(4.0)).abs() <= 1e-15 * (1.0 + at(a * 4.0)));
    }
}
