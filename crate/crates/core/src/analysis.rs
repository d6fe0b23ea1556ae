//! Metric extraction from sweep tables.

use crate::error::{Error, Result};
use crate::nc_device::SweepTable;

/// Default current window for the subthreshold swing (A).
pub const SS_WINDOW: (f64, f64) = (1e-11, 1e-7);
/// Default current window for iso-current hysteresis (A).
pub const HYSTERESIS_WINDOW: (f64, f64) = (1e-10, 1e-4);
/// Output conductance ratio below which a curve counts as saturated.
pub const SATURATION_RATIO: f64 = 0.05;
const HYSTERESIS_LEVELS: usize = 401;

/// Summary metrics of one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceMetrics {
    /// mV/dec.
    pub ss_min: f64,
    pub v_t: f64,
    /// mV/V, signed.
    pub dibl: f64,
    pub hysteresis: f64,
    pub i_on: f64,
    pub i_off: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationReport {
    pub saturates: bool,
    pub gds_ratio: f64,
}

/// Minimum swing over adjacent rows whose currents both lie in the window.
pub fn extract_ss(table: &SweepTable, i_lo: f64, i_hi: f64) -> Result<f64> {
    let pts = table.ascending();
    let inside = |i: f64| i >= i_lo && i <= i_hi;
    pts.windows(2)
        .filter(|w| inside(w[0].1) && inside(w[1].1))
        .filter_map(|w| {
            let dlog = w[1].1.log10() - w[0].1.log10();
            (dlog > 0.0).then(|| (w[1].0 - w[0].0) / dlog * 1000.0)
        })
        .reduce(f64::min)
        .ok_or(Error::WindowEmpty { lo: i_lo, hi: i_hi })
}

/// Voltage where `|i|` first reaches `level` going up the swept axis, by
/// linear interpolation in log-current.
fn voltage_at_current(pts: &[(f64, f64)], level: f64) -> Option<f64> {
    let l = level.ln();
    pts.windows(2).find_map(|w| {
        let (v0, i0) = w[0];
        let (v1, i1) = w[1];
        if !(i0 > 0.0 && i1 > 0.0) {
            return None;
        }
        let (l0, l1) = (i0.ln(), i1.ln());
        if l0 == l && l1 == l {
            return Some(v0);
        }
        if (l0 <= l && l <= l1) || (l1 <= l && l <= l0) {
            Some(v0 + (v1 - v0) * (l - l0) / (l1 - l0))
        } else {
            None
        }
    })
}

/// `|i|` at swept voltage `v`, interpolated in log-current.
pub fn current_at(table: &SweepTable, v: f64) -> Option<f64> {
    let pts = table.ascending();
    pts.windows(2).find_map(|w| {
        let (v0, i0) = w[0];
        let (v1, i1) = w[1];
        if v < v0 || v > v1 {
            return None;
        }
        if v == v0 {
            return Some(i0);
        }
        if v == v1 {
            return Some(i1);
        }
        if i0 > 0.0 && i1 > 0.0 {
            let t = (v - v0) / (v1 - v0);
            Some((i0.ln() + t * (i1.ln() - i0.ln())).exp())
        } else {
            Some(i0 + (i1 - i0) * (v - v0) / (v1 - v0))
        }
    })
}

/// Constant-current threshold: the gate voltage where `|i_ds|` reaches
/// `i_crit`.
pub fn extract_vt(table: &SweepTable, i_crit: f64) -> Result<f64> {
    voltage_at_current(&table.ascending(), i_crit).ok_or(Error::CriterionNotCrossed(i_crit))
}

/// Threshold shift per volt of drain bias, mV/V. Positive when the
/// threshold falls as the drain bias rises.
pub fn extract_dibl(table_lin: &SweepTable, table_sat: &SweepTable, i_crit: f64) -> Result<f64> {
    let vt_lin = extract_vt(table_lin, i_crit)?;
    let vt_sat = extract_vt(table_sat, i_crit)?;
    if vt_lin == vt_sat {
        return Ok(0.0);
    }
    let (vd_lin, vd_sat) = match (table_lin.v_ds(), table_sat.v_ds()) {
        (Some(a), Some(b)) if a != b => (a, b),
        _ => {
            return Err(Error::InvalidInput(
                "DIBL needs two gate sweeps at different drain biases".into(),
            ))
        }
    };
    Ok((vt_lin - vt_sat) / (vd_sat.abs() - vd_lin.abs()) * 1000.0)
}

/// Largest iso-current gate-voltage gap between an up and a down sweep,
/// over log-spaced currents in the part of `[i_lo, i_hi]` both sweeps span.
pub fn hysteresis_width(up: &SweepTable, down: &SweepTable, i_lo: f64, i_hi: f64) -> Result<f64> {
    let a = up.ascending();
    let b = down.ascending();
    let span = |pts: &[(f64, f64)]| {
        pts.iter()
            .filter(|p| p.1 > 0.0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)))
    };
    let (a_lo, a_hi) = span(&a);
    let (b_lo, b_hi) = span(&b);
    let lo = i_lo.max(a_lo).max(b_lo);
    let hi = i_hi.min(a_hi).min(b_hi);
    if !(lo < hi) {
        return Err(Error::WindowEmpty { lo: i_lo, hi: i_hi });
    }
    let (ll, lh) = (lo.ln(), hi.ln());
    let mut width = 0.0f64;
    for k in 0..HYSTERESIS_LEVELS {
        let level = (ll + (lh - ll) * k as f64 / (HYSTERESIS_LEVELS - 1) as f64).exp();
        if let (Some(va), Some(vb)) = (voltage_at_current(&a, level), voltage_at_current(&b, level)) {
            width = width.max((va - vb).abs());
        }
    }
    Ok(width)
}

/// Maximal intervals of the swept voltage over which the current falls.
pub fn detect_ndr(table: &SweepTable) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = table.ascending_signed();
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for w in pts.windows(2) {
        let falling = w[1].1 < w[0].1;
        match (falling, open) {
            (true, None) => open = Some(w[0].0),
            (false, Some(start)) => {
                out.push((start, w[0].0));
                open = None;
            }
            _ => {}
        }
    }
    if let (Some(start), Some(last)) = (open, pts.last()) {
        out.push((start, last.0));
    }
    out
}

/// Output conductance at `v_dd` relative to the steepest part of the
/// output characteristic.
pub fn saturation_check(table: &SweepTable, v_dd: f64) -> Result<SaturationReport> {
    let pts = table.ascending_signed();
    let slopes: Vec<(f64, f64, f64)> = pts
        .windows(2)
        .map(|w| (w[0].0, w[1].0, (w[1].1 - w[0].1) / (w[1].0 - w[0].0)))
        .collect();
    let end = slopes
        .iter()
        .rev()
        .find(|s| s.0 < v_dd.abs() + 1e-12 && s.1 >= v_dd.abs() - 1e-12)
        .ok_or_else(|| Error::InvalidInput(format!("output sweep does not reach v_dd = {v_dd} V")))?;
    let max = slopes.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidInput("output characteristic never rises".into()));
    }
    let gds_ratio = end.2 / max;
    Ok(SaturationReport {
        saturates: gds_ratio < SATURATION_RATIO,
        gds_ratio,
    })
}

/// Metrics from a saturation up/down pair and a linear-region up sweep.
/// `v_dd` locates the on and off currents on the saturation sweep.
pub fn device_metrics(
    sat_up: &SweepTable,
    sat_down: &SweepTable,
    lin_up: &SweepTable,
    v_dd: f64,
    i_crit: f64,
) -> Result<DeviceMetrics> {
    let missing = |v: f64| Error::InvalidInput(format!("sweep does not cover v_gs = {v} V"));
    Ok(DeviceMetrics {
        ss_min: extract_ss(sat_up, SS_WINDOW.0, SS_WINDOW.1)?,
        v_t: extract_vt(sat_up, i_crit)?,
        dibl: extract_dibl(lin_up, sat_up, i_crit)?,
        hysteresis: hysteresis_width(sat_up, sat_down, HYSTERESIS_WINDOW.0, HYSTERESIS_WINDOW.1)?,
        i_on: current_at(sat_up, v_dd).ok_or_else(|| missing(v_dd))?,
        i_off: current_at(sat_up, 0.0).ok_or_else(|| missing(0.0))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nc_device::{Direction, OperatingPoint, SweepAxis};

    fn row(v_gs: f64, v_ds: f64, i: f64) -> OperatingPoint {
        OperatingPoint {
            v_gs,
            v_ds,
            v_int: v_gs,
            v_fe: 0.0,
            q: 0.0,
            p: 0.0,
            i_ds: i,
            region: None,
            converged: true,
            iterations: 0,
        }
    }

    fn gate_table(v_ds: f64, pts: impl Iterator<Item = (f64, f64)>) -> SweepTable {
        SweepTable {
            axis: SweepAxis::Gate { v_ds },
            direction: Direction::Up,
            rows: pts.map(|(v, i)| row(v, v_ds, i)).collect(),
        }
    }

    fn drain_table(pts: impl Iterator<Item = (f64, f64)>) -> SweepTable {
        SweepTable {
            axis: SweepAxis::Drain { v_gs: 0.7 },
            direction: Direction::Up,
            rows: pts.map(|(v, i)| row(0.7, v, i)).collect(),
        }
    }

    fn grid(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(move |k| lo + k as f64 * step)
    }

    /// Decade per `ss` mV, through `i0` at `v0`.
    fn exponential(v: f64, ss: f64, v0: f64, i0: f64) -> f64 {
        i0 * 10f64.powf((v - v0) / (ss / 1000.0))
    }

    #[test]
    fn ideal_exponential_swing() {
        let t = gate_table(0.7, grid(-0.2, 0.4, 1e-3).map(|v| (v, exponential(v, 60.0, 0.0, 1e-9))));
        let ss = extract_ss(&t, 1e-11, 1e-7).unwrap();
        assert!((ss - 60.0).abs() < 0.1, "{ss}");
    }

    #[test]
    fn swing_needs_rows_in_window() {
        let t = gate_table(0.7, grid(0.0, 0.1, 1e-3).map(|v| (v, 1e-3 + v)));
        assert!(matches!(extract_ss(&t, 1e-11, 1e-7), Err(Error::WindowEmpty { .. })));
    }

    #[test]
    fn threshold_at_exact_crossing() {
        let i_crit = 4.7e-7;
        let t = gate_table(
            0.7,
            grid(0.0, 0.5, 1e-3).map(|v| (v, exponential(v, 70.0, 0.25, i_crit))),
        );
        assert!((extract_vt(&t, i_crit).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(extract_vt(&t, 1.0), Err(Error::CriterionNotCrossed(_))));
    }

    #[test]
    fn dibl_of_shifted_curves() {
        let i_crit = 1e-7;
        // threshold falls 20 mV between 0.05 V and 0.55 V: 40 mV/V
        let lin = gate_table(
            0.05,
            grid(0.0, 0.5, 1e-3).map(|v| (v, exponential(v, 70.0, 0.25, i_crit))),
        );
        let sat = gate_table(
            0.55,
            grid(0.0, 0.5, 1e-3).map(|v| (v, exponential(v, 70.0, 0.23, i_crit))),
        );
        let d = extract_dibl(&lin, &sat, i_crit).unwrap();
        assert!((d - 40.0).abs() < 1e-6, "{d}");
        assert_eq!(extract_dibl(&lin, &lin, i_crit).unwrap(), 0.0);
        assert!(extract_dibl(&sat, &sat, i_crit).unwrap() == 0.0);
    }

    #[test]
    fn hysteresis_of_shifted_pair() {
        let up = gate_table(0.7, grid(0.0, 0.6, 1e-3).map(|v| (v, exponential(v, 70.0, 0.3, 1e-7))));
        let down = gate_table(0.7, grid(0.0, 0.6, 1e-3).map(|v| (v, exponential(v, 70.0, 0.28, 1e-7))));
        assert_eq!(hysteresis_width(&up, &up, 1e-10, 1e-6).unwrap(), 0.0);
        let h = hysteresis_width(&up, &down, 1e-10, 1e-6).unwrap();
        assert!((h - 0.02).abs() < 1e-9, "{h}");
        assert!(matches!(
            hysteresis_width(&up, &down, 1.0, 2.0),
            Err(Error::WindowEmpty { .. })
        ));
    }

    #[test]
    fn ndr_of_hump() {
        let pts = [
            (0.0, 0.0),
            (0.1, 1.0),
            (0.2, 2.0),
            (0.3, 1.5),
            (0.4, 1.0),
            (0.5, 1.2),
            (0.6, 1.4),
        ];
        let t = drain_table(pts.into_iter());
        assert_eq!(detect_ndr(&t), vec![(0.2, 0.4)]);
        let mono = drain_table(grid(0.0, 0.7, 0.01).map(|v| (v, v.sqrt())));
        assert!(detect_ndr(&mono).is_empty());
    }

    #[test]
    fn resistor_never_saturates() {
        let t = drain_table(grid(0.0, 0.7, 0.01).map(|v| (v, v / 1e4)));
        let s = saturation_check(&t, 0.7).unwrap();
        assert!((s.gds_ratio - 1.0).abs() < 1e-9);
        assert!(!s.saturates);
        let flat = drain_table(grid(0.0, 0.7, 0.01).map(|v| (v, 1.0 - (-v / 0.05).exp())));
        assert!(saturation_check(&flat, 0.7).unwrap().saturates);
        assert!(saturation_check(&flat, 0.9).is_err());
    }

    #[test]
    fn current_interpolates_in_log() {
        let t = gate_table(0.7, [(0.0, 1e-9), (0.1, 1e-7)].into_iter());
        let i = current_at(&t, 0.05).unwrap();
        assert!((i / 1e-8 - 1.0).abs() < 1e-12);
        assert!(current_at(&t, 0.2).is_none());
    }

    fn surrogate_dibl(sigma: f64) -> f64 {
        use crate::fet::{Polarity, DIBL_LIN_VDS};
        use crate::nc_device::{SweepWindow, Transistor};
        let mut fet = crate::presets::fet(Polarity::N).unwrap();
        fet.sigma_dibl = sigma;
        let dev = Transistor::Conventional(fet);
        let w = SweepWindow::new(-0.3, 0.9, 1e-3).unwrap();
        let lin = dev.sweep_idvg(&w, DIBL_LIN_VDS, Direction::Up).unwrap();
        let sat = dev.sweep_idvg(&w, 0.7, Direction::Up).unwrap();
        extract_dibl(&lin, &sat, fet.geom.vt_criterion_current()).unwrap()
    }

    #[test]
    fn surrogate_dibl_slope_is_recovered() {
        let d = surrogate_dibl(0.03);
        assert!((d - 30.0).abs() <= 2.0, "extracted {d:.2} mV/V");
    }

    #[test]
    fn surrogate_dibl_slope_is_recovered_over_zero_slope_reference() {
        let d = surrogate_dibl(0.03) - surrogate_dibl(0.0);
        assert!((d - 30.0).abs() <= 2.0, "extracted difference {d:.2} mV/V");
    }
}
