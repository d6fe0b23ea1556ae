//! Landau-Khalatnikov model of the ferroelectric gate capacitor.
//!
//! The static field is the odd polynomial `E(P) = 2αP + 4βP³ + 6γP⁵`; the
//! kinetic term `ρ·dP/dt` is handled by the transient integrator. A film of
//! thickness `t_fe` and area `a_fe` turns this into a charge-controlled
//! voltage source `V_FE(Q) = t_fe·E(Q/a_fe)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::roots;

/// Static (`alpha`, `beta`, `gamma`) and kinetic (`rho`) LK coefficients, SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkCoefficients {
    /// V·m/C, negative.
    pub alpha: f64,
    /// V·m⁵/C³.
    pub beta: f64,
    /// V·m⁹/C⁵, non-negative.
    pub gamma: f64,
    /// V·m·s/C (Ω·m), positive.
    pub rho: f64,
}

impl LkCoefficients {
    pub fn new(alpha: f64, beta: f64, gamma: f64, rho: f64) -> Result<Self> {
        if !(alpha < 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be negative, got {alpha:e}")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be >= 0, got {gamma:e}")));
        }
        if gamma == 0.0 && !(beta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta must be positive when gamma = 0, got {beta:e}"
            )));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!("rho must be positive, got {rho:e}")));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            rho,
        })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.alpha, self.beta, self.gamma, self.rho).map(|_| ())
    }

    /// Static LK field `2αP + 4βP³ + 6γP⁵` in V/m.
    #[inline]
    pub fn e_field(&self, p: f64) -> f64 {
        let p2 = p * p;
        p * (2.0 * self.alpha + p2 * (4.0 * self.beta + 6.0 * self.gamma * p2))
    }

    /// `dE/dP`.
    #[inline]
    pub fn de_dp(&self, p: f64) -> f64 {
        let p2 = p * p;
        2.0 * self.alpha + p2 * (12.0 * self.beta + 30.0 * self.gamma * p2)
    }

    /// Positive nonzero root of `E(P)`.
    pub fn remnant_polarization(&self) -> f64 {
        positive_quadratic_root(6.0 * self.gamma, 4.0 * self.beta, 2.0 * self.alpha).sqrt()
    }

    /// Polarization where `dE/dP = 0`, the edge of the negative-slope lobe.
    pub fn inflection_polarization(&self) -> f64 {
        positive_quadratic_root(30.0 * self.gamma, 12.0 * self.beta, 2.0 * self.alpha).sqrt()
    }

    /// Magnitude of the field extremum on the inner lobe.
    pub fn coercive_field(&self) -> f64 {
        -self.e_field(self.inflection_polarization())
    }
}

/// Positive root of `a·x² + b·x + c` with `c < 0` and `a ≥ 0`.
fn positive_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = (b * b - 4.0 * a * c).sqrt();
    if b >= 0.0 {
        -2.0 * c / (b + disc)
    } else {
        (-b + disc) / (2.0 * a)
    }
}

/// Calibrates the static coefficients from remnant polarization and
/// coercive field at a fixed `gamma`.
///
/// With `gamma = 0` the closed forms `α = −(3√3/4)·E_c/P_r` and
/// `β = (3√3/8)·E_c/P_r³` apply. Otherwise `α` is tied to `β` by `E(P_r) = 0`
/// and `β` is found by bisection on the lobe extremum.
pub fn calibrate_lk(p_r: f64, e_c: f64, gamma: f64, rho: f64) -> Result<LkCoefficients> {
    if !(p_r > 0.0) || !(e_c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "remnant polarization and coercive field must be positive (p_r = {p_r:e}, e_c = {e_c:e})"
        )));
    }
    if !(gamma >= 0.0) || !(rho > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need gamma >= 0 and rho > 0 (gamma = {gamma:e}, rho = {rho:e})"
        )));
    }
    let k = 3.0 * 3f64.sqrt();
    if gamma == 0.0 {
        let alpha = -(k / 4.0) * e_c / p_r;
        let beta = (k / 8.0) * e_c / (p_r * p_r * p_r);
        return LkCoefficients::new(alpha, beta, 0.0, rho);
    }

    let r2 = p_r * p_r;
    let alpha_of = |beta: f64| -2.0 * beta * r2 - 3.0 * gamma * r2 * r2;
    let coercive_of = |beta: f64| {
        let c = LkCoefficients {
            alpha: alpha_of(beta),
            beta,
            gamma,
            rho,
        };
        c.coercive_field()
    };
    // alpha < 0 requires beta > -1.5·gamma·P_r²; the coercive field vanishes there
    let lo = -1.5 * gamma * r2;
    let mut hi = (k / 8.0) * e_c / (p_r * r2);
    let mut grow = 0;
    while coercive_of(hi) < e_c {
        hi = 2.0 * hi.abs() + 1.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::non_convergence("LK calibration", "beta bracket"));
        }
    }
    let scale = hi.abs().max(lo.abs());
    let beta = roots::bisect(|b| coercive_of(b) - e_c, lo, hi, 1e-17 * scale)
        .ok_or_else(|| Error::non_convergence("LK calibration", format!("gamma = {gamma:e}")))?;
    let coeffs = LkCoefficients::new(alpha_of(beta), beta, gamma, rho)?;
    let achieved = coeffs.coercive_field();
    if ((achieved - e_c) / e_c).abs() > 1e-9 {
        return Err(Error::non_convergence(
            "LK calibration",
            format!("coercive field residual {:e}", achieved - e_c),
        ));
    }
    Ok(coeffs)
}

/// Ferroelectric film thickness and area (m, m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerroGeometry {
    pub t_fe: f64,
    pub a_fe: f64,
}

impl FerroGeometry {
    pub fn new(t_fe: f64, a_fe: f64) -> Result<Self> {
        if !(t_fe > 0.0) || !(a_fe > 0.0) {
            return Err(Error::InvalidInput(format!(
                "ferroelectric thickness and area must be positive (t_fe = {t_fe:e}, a_fe = {a_fe:e})"
            )));
        }
        Ok(Self { t_fe, a_fe })
    }
}

/// A ferroelectric capacitor: LK coefficients plus film geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkModel {
    pub coeffs: LkCoefficients,
    pub geom: FerroGeometry,
}

/// Ferroelectric state; the charge is the single source of truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerroState {
    pub q: f64,
    pub p: f64,
}

impl LkModel {
    pub fn new(coeffs: LkCoefficients, geom: FerroGeometry) -> Self {
        Self { coeffs, geom }
    }

    /// Same film, different area.
    pub fn with_area(&self, a_fe: f64) -> Result<Self> {
        Ok(Self {
            coeffs: self.coeffs,
            geom: FerroGeometry::new(self.geom.t_fe, a_fe)?,
        })
    }

    pub fn state(&self, q: f64) -> FerroState {
        FerroState {
            q,
            p: q / self.geom.a_fe,
        }
    }

    /// Static voltage across the film for charge `q`.
    #[inline]
    pub fn v_fe_static(&self, q: f64) -> f64 {
        self.geom.t_fe * self.coeffs.e_field(q / self.geom.a_fe)
    }

    /// `dV_FE/dQ`; its inverse is the (signed) film capacitance.
    #[inline]
    pub fn dv_fe_dq(&self, q: f64) -> f64 {
        self.geom.t_fe * self.coeffs.de_dp(q / self.geom.a_fe) / self.geom.a_fe
    }

    /// Equivalent series resistance of the kinetic term, `ρ·t_fe/a_fe`.
    pub fn kinetic_resistance(&self) -> f64 {
        self.coeffs.rho * self.geom.t_fe / self.geom.a_fe
    }

    /// Classifies a point query on the S-curve.
    pub fn classify_region(&self, q: f64) -> SCurveRegion {
        let p = q / self.geom.a_fe;
        let quadrant = quadrant_of(p, self.v_fe_static(q), Quadrant::II);
        SCurveRegion::new(quadrant, self.dv_fe_dq(q))
    }

    /// Classification for consecutive rows of a table: zero polarization
    /// keeps the previous row's quadrant.
    pub fn classify_region_after(&self, q: f64, previous: Quadrant) -> SCurveRegion {
        let p = q / self.geom.a_fe;
        let quadrant = quadrant_of(p, self.v_fe_static(q), previous);
        SCurveRegion::new(quadrant, self.dv_fe_dq(q))
    }

    /// Uniform table of the S-curve over `[p_min, p_max]`.
    pub fn s_curve_table(&self, p_min: f64, p_max: f64, points: usize) -> Result<Vec<SCurveRow>> {
        if points < 2 || !(p_min < p_max) {
            return Err(Error::InvalidInput(format!(
                "s-curve table needs points >= 2 and p_min < p_max (got {points}, [{p_min:e}, {p_max:e}])"
            )));
        }
        let span = p_max - p_min;
        let last = (points - 1) as f64;
        let mut rows = Vec::with_capacity(points);
        let mut previous = Quadrant::II;
        for i in 0..points {
            let p = if i == points - 1 {
                p_max
            } else {
                p_min + span * (i as f64) / last
            };
            let q = p * self.geom.a_fe;
            let e = self.coeffs.e_field(p);
            let v_fe = self.geom.t_fe * e;
            let slope = self.dv_fe_dq(q);
            let quadrant = quadrant_of(p, v_fe, previous);
            previous = quadrant;
            rows.push(SCurveRow {
                p,
                q,
                e,
                v_fe,
                c_fe: 1.0 / slope,
                region: SCurveRegion::new(quadrant, slope),
            });
        }
        Ok(rows)
    }
}

/// Quadrant in the (V_FE, P) plane: I = (+,+), II = (−,+), III = (−,−),
/// IV = (+,−). Zero V_FE resolves to the NC-branch quadrant of the sign of
/// P; zero P takes `at_zero_p`.
fn quadrant_of(p: f64, v_fe: f64, at_zero_p: Quadrant) -> Quadrant {
    if p == 0.0 {
        return at_zero_p;
    }
    match (p > 0.0, v_fe) {
        (true, v) if v > 0.0 => Quadrant::I,
        (true, _) => Quadrant::II,
        (false, v) if v < 0.0 => Quadrant::III,
        (false, _) => Quadrant::IV,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

/// Whether the film lowers (Diminution) or raises (Amplification) the
/// internal gate voltage relative to the applied gate voltage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Diminution,
    Amplification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    NegativeCapacitance,
    PositiveCapacitance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SCurveRegion {
    pub quadrant: Quadrant,
    pub mode: Mode,
    pub branch: Branch,
}

impl SCurveRegion {
    /// Region for a quadrant and the local slope `dV_FE/dQ`.
    pub fn new(quadrant: Quadrant, dv_dq: f64) -> Self {
        let mode = match quadrant {
            Quadrant::I | Quadrant::IV => Mode::Diminution,
            Quadrant::II | Quadrant::III => Mode::Amplification,
        };
        let branch = if dv_dq < 0.0 {
            Branch::NegativeCapacitance
        } else {
            Branch::PositiveCapacitance
        };
        Self { quadrant, mode, branch }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrant::I => "I",
            Quadrant::II => "II",
            Quadrant::III => "III",
            Quadrant::IV => "IV",
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Diminution => "diminution",
            Mode::Amplification => "amplification",
        })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::NegativeCapacitance => "nc",
            Branch::PositiveCapacitance => "pc",
        })
    }
}

/// One row of the S-curve table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SCurveRow {
    pub p: f64,
    pub q: f64,
    pub e: f64,
    pub v_fe: f64,
    /// Signed film capacitance `1/(dV_FE/dQ)`.
    pub c_fe: f64,
    pub region: SCurveRegion,
}
