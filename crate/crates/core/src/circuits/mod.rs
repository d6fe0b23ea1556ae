//! Inverter DC analysis and ring-oscillator transients.

mod energy;
mod inverter;
mod ring;

pub use energy::{energy_delay_sweep, iso_delay_reduction, longest_common_delay, EnergyDelayRow, Variant};
pub use inverter::{inverter_vtc, vtc_metrics, Inverter, VtcMetrics, VtcRow};
pub use ring::{estimate_period, ro_metrics, ro_transient, RingOscillator, RoMetrics, TransientConfig, TransientTrace};
