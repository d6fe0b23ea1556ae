//! Fixtures shared by the solver benchmarks.

use ncfet_core::circuits::{Inverter, RingOscillator, TransientConfig};
use ncfet_core::fet::Polarity;
use ncfet_core::nc_device::{NcFet, Transistor};
use ncfet_core::presets;

pub fn nc_device(a_fe_nm2: f64) -> NcFet {
    presets::nc_fet(Polarity::N, a_fe_nm2).expect("default NC device")
}

pub fn inverter(nc: bool, v_dd: f64) -> Inverter {
    let device = |pol| {
        if nc {
            Transistor::NegativeCapacitance(presets::nc_fet(pol, presets::A_FE_NM2).expect("NC device"))
        } else {
            Transistor::Conventional(presets::fet(pol).expect("FET"))
        }
    };
    Inverter::new(device(Polarity::N), device(Polarity::P), v_dd).expect("inverter")
}

pub fn ring(nc: bool, v_dd: f64) -> RingOscillator {
    RingOscillator::new(presets::STAGES, presets::C_WIRE, inverter(nc, v_dd)).expect("ring")
}

/// Transient settings that cover about `periods` oscillation periods.
pub fn short_transient(ro: &RingOscillator, periods: f64) -> TransientConfig {
    let mut cfg = TransientConfig::for_ring(ro).expect("transient settings");
    cfg.t_stop *= periods / 20.0;
    cfg
}
