//! Default device parameters used when a configuration leaves them out.

use std::sync::OnceLock;

use crate::error::Result;
use crate::ferroelectric::{calibrate_lk, FerroGeometry, LkModel};
use crate::fet::{calibrate_fet, FetGeometry, FetParams, FetTargets, Polarity};
use crate::nc_device::NcFet;
use crate::units::{MV_PER_CM, NM, NM2, UC_PER_CM2};

pub const P_R: f64 = 17.0 * UC_PER_CM2;
pub const E_C: f64 = 1.1 * MV_PER_CM;
pub const GAMMA: f64 = 0.0;
pub const T_FE: f64 = 5.0 * NM;
/// Kinetic coefficient (Ω·m); `ρ·T_FE/A_FE = 500 Ω` at 500 nm².
pub const RHO: f64 = 5e-5;
pub const V_DD: f64 = 0.7;
pub const C_WIRE: f64 = 3e-15;
pub const STAGES: usize = 7;
/// Film area of single-device experiments (nm²).
pub const A_FE_NM2: f64 = 700.0;
/// Film areas of the area-family experiments (nm²).
pub const A_FE_FAMILY_NM2: [f64; 4] = [2000.0, 1000.0, 700.0, 500.0];
pub const V_DD_LIST: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
/// Work function shift of NC devices that brings their threshold back
/// below the conventional one at [`A_FE_NM2`] (eV, N-device sense).
pub const NC_WF_SHIFT: f64 = -0.025;

/// Default film of the given area (m²).
pub fn lk_model(a_fe: f64) -> Result<LkModel> {
    Ok(LkModel::new(
        calibrate_lk(P_R, E_C, GAMMA, RHO)?,
        FerroGeometry::new(T_FE, a_fe)?,
    ))
}

/// Surrogate calibrated to the default targets of its polarity.
pub fn fet(polarity: Polarity) -> Result<FetParams> {
    static N: OnceLock<FetParams> = OnceLock::new();
    static P: OnceLock<FetParams> = OnceLock::new();
    let cell = match polarity {
        Polarity::N => &N,
        Polarity::P => &P,
    };
    if let Some(p) = cell.get() {
        return Ok(*p);
    }
    let p = calibrate_fet(
        &FetTargets::default_for(polarity),
        &FetParams::seed(polarity, FetGeometry::default()),
    )?;
    Ok(*cell.get_or_init(|| p))
}

/// Default NC device of the given polarity and film area (nm²).
pub fn nc_fet(polarity: Polarity, a_fe_nm2: f64) -> Result<NcFet> {
    NcFet::new(fet(polarity)?, lk_model(a_fe_nm2 * NM2)?)
}
