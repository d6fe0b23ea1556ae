//! Physical constants and the unit conversions used by config files.
//!
//! Everything inside the crate is SI. Config files speak the units device
//! engineers quote: nm, nm², eV, fF, µC/cm², MV/cm, ns, ps, fs.

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Relative permittivity of SiO2, used for EOT-based capacitance.
pub const EPS_SIO2: f64 = 3.9;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Thermal voltage kT/q at the given temperature.
pub fn thermal_voltage(kelvin: f64) -> f64 {
    BOLTZMANN * kelvin / ELEMENTARY_CHARGE
}

pub const NM: f64 = 1e-9;
pub const NM2: f64 = 1e-18;
pub const FF: f64 = 1e-15;
pub const NS: f64 = 1e-9;
pub const PS: f64 = 1e-12;
pub const FS: f64 = 1e-15;
/// 1 µC/cm² expressed in C/m².
pub const UC_PER_CM2: f64 = 1e-2;
/// 1 MV/cm expressed in V/m.
pub const MV_PER_CM: f64 = 1e8;
/// Work function differences map one-to-one onto threshold shifts.
pub const VOLT_PER_EV: f64 = 1.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_voltage_at_room_temperature() {
        let vt = thermal_voltage(300.0);
        assert!((vt - 0.025_852).abs() < 1e-6);
    }

    #[test]
    fn area_conversion_round_trip() {
        let a = 500.0 * NM2;
        assert_eq!(a, 5e-16);
        assert_eq!(a / NM2, 500.0);
    }
}
