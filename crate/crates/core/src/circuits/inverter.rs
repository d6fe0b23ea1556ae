use crate::error::{Error, Result};
use crate::nc_device::{Direction, SweepWindow, TerminalEval, Transistor};
use crate::roots;

const SCAN_STEP: f64 = 1e-3;
const MARCH_STEP_MIN: f64 = 1e-4;
const MARCH_STEP_MAX: f64 = 1e-2;
/// KCL residual tolerance at the output node (A).
const KCL_TOL: f64 = 1e-15;

/// CMOS inverter: pull-down N device, pull-up P device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverter {
    pub nfet: Transistor,
    pub pfet: Transistor,
    pub v_dd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtcRow {
    pub v_in: f64,
    pub v_out: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VtcMetrics {
    pub gain_max: f64,
    pub v_m: f64,
    pub nm_h: f64,
    pub nm_l: f64,
    pub vtc_hysteresis: f64,
}

/// Device continuation state: last internal gate voltage of each device.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PairState {
    pub n: Option<f64>,
    pub p: Option<f64>,
}

impl Inverter {
    pub fn new(nfet: Transistor, pfet: Transistor, v_dd: f64) -> Result<Self> {
        if !(v_dd > 0.0) {
            return Err(Error::InvalidInput(format!("v_dd must be positive, got {v_dd}")));
        }
        Ok(Self { nfet, pfet, v_dd })
    }

    /// Pull-down and pull-up evaluations with gate at `v_in` and drains at
    /// `v_out`.
    pub(crate) fn devices(&self, v_in: f64, v_out: f64, state: &PairState) -> Result<(TerminalEval, TerminalEval)> {
        let n = self.nfet.eval(v_in, v_out, state.n)?;
        let p = self.pfet.eval(v_in - self.v_dd, v_out - self.v_dd, state.p)?;
        Ok((n, p))
    }

    /// Net current leaving the output node and its slope in `v_out`.
    fn kcl(&self, v_in: f64, v_out: f64, state: &mut PairState) -> Result<(f64, f64)> {
        let (n, p) = self.devices(v_in, v_out, state)?;
        state.n = n.v_int;
        state.p = p.v_int;
        Ok((n.ids + p.ids, n.dids_dvds + p.dids_dvds))
    }

    /// Output voltage for one input, continuing from `guess`.
    fn solve_output(&self, v_in: f64, guess: Option<f64>, state: &mut PairState) -> Result<f64> {
        let fail = || Error::non_convergence("inverter output", format!("v_in = {v_in} V"));
        let (lo, hi, f_lo) = match guess {
            Some(g) => {
                let mut x = g;
                let (mut fx, dfx) = self.kcl(v_in, x, state)?;
                if fx == 0.0 {
                    return Ok(x);
                }
                let dir = -fx.signum();
                let mut step = if dfx > 0.0 {
                    (1.5 * fx.abs() / dfx).clamp(1e-9, MARCH_STEP_MIN)
                } else {
                    MARCH_STEP_MIN
                };
                let lower = -0.1 * self.v_dd;
                let upper = 1.1 * self.v_dd;
                loop {
                    let next = (x + dir * step).clamp(lower, upper);
                    let mut trial = *state;
                    let (fn_, _) = self.kcl(v_in, next, &mut trial)?;
                    if fn_ == 0.0 || fn_.signum() != fx.signum() {
                        break (x, next, fx);
                    }
                    if next == x {
                        return Err(fail());
                    }
                    *state = trial;
                    x = next;
                    fx = fn_;
                    step = (step * 1.5).min(MARCH_STEP_MAX);
                }
            }
            None => {
                let n = (self.v_dd / SCAN_STEP).round() as usize;
                let mut x = 0.0;
                let (mut fx, _) = self.kcl(v_in, x, state)?;
                let mut found = None;
                for k in 1..=n {
                    let next = if k == n { self.v_dd } else { k as f64 * SCAN_STEP };
                    let mut trial = *state;
                    let (fn_, _) = self.kcl(v_in, next, &mut trial)?;
                    if fx == 0.0 || fn_.signum() != fx.signum() {
                        found = Some((x, next, fx));
                        break;
                    }
                    *state = trial;
                    x = next;
                    fx = fn_;
                }
                found.ok_or_else(fail)?
            }
        };
        if f_lo == 0.0 {
            return Ok(lo);
        }
        let start = *state;
        let mut inner = start;
        let scale = f_lo.abs().max(1e-12);
        let (v, _) = roots::safeguarded_newton(
            |v| {
                let mut s = start;
                match self.kcl(v_in, v, &mut s) {
                    Ok(r) => {
                        inner = s;
                        r
                    }
                    Err(_) => (f64::NAN, f64::NAN),
                }
            },
            lo,
            hi,
            f_lo,
            0.5 * (lo + hi),
            KCL_TOL.max(1e-13 * scale),
            200,
        )
        .ok_or_else(fail)?;
        *state = inner;
        Ok(v)
    }
}

/// Voltage transfer characteristic by continuation in the input voltage.
pub fn inverter_vtc(inv: &Inverter, window: &SweepWindow, direction: Direction) -> Result<Vec<VtcRow>> {
    let mut rows: Vec<VtcRow> = Vec::new();
    let mut state = PairState::default();
    for v_in in window.points(direction) {
        let guess = rows.last().map(|r| r.v_out);
        let v_out = inv
            .solve_output(v_in, guess, &mut state)
            .map_err(|e| e.context(format!("inverter VTC at v_in = {v_in} V")))?;
        let mut check = state;
        let (f, _) = inv.kcl(v_in, v_out, &mut check)?;
        let (n, _) = inv.devices(v_in, v_out, &state)?;
        rows.push(VtcRow {
            v_in,
            v_out,
            converged: f.abs() <= KCL_TOL.max(1e-9 * n.ids.abs()),
        });
    }
    Ok(rows)
}

fn ascending(rows: &[VtcRow]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = rows.iter().map(|r| (r.v_in, r.v_out)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

/// Central-difference slopes at interior points.
fn slopes(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    pts.windows(3)
        .map(|w| (w[1].0, (w[2].1 - w[0].1) / (w[2].0 - w[0].0)))
        .collect()
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    match pts.windows(2).find(|w| w[0].0 <= x && x <= w[1].0) {
        Some(w) if w[1].0 > w[0].0 => w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0),
        Some(w) => w[0].1,
        None => f64::NAN,
    }
}

/// Gain, switching threshold, noise margins and up/down hysteresis. The
/// switching threshold and noise margins come from the up sweep.
pub fn vtc_metrics(up: &[VtcRow], down: &[VtcRow], v_dd: f64) -> Result<VtcMetrics> {
    let a = ascending(up);
    let b = ascending(down);
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::DegenerateVtc("need at least three points per sweep".into()));
    }
    let covers = |pts: &[(f64, f64)]| pts[0].0 <= 1e-12 && pts[pts.len() - 1].0 >= v_dd - 1e-12;
    if !covers(&a) || !covers(&b) {
        return Err(Error::DegenerateVtc(format!("sweeps must cover [0, {v_dd}] V")));
    }
    let sa = slopes(&a);
    let sb = slopes(&b);
    let gain_max = sa.iter().chain(sb.iter()).map(|s| s.1.abs()).fold(0.0, f64::max);

    let v_m = a
        .windows(2)
        .find_map(|w| {
            let d0 = w[0].1 - w[0].0;
            let d1 = w[1].1 - w[1].0;
            (d0 >= 0.0 && d1 <= 0.0).then(|| {
                if d0 == d1 {
                    w[0].0
                } else {
                    w[0].0 + (w[1].0 - w[0].0) * d0 / (d0 - d1)
                }
            })
        })
        .ok_or_else(|| Error::DegenerateVtc("output never crosses the input".into()))?;

    // unity-gain points: first and last crossings of slope = -1
    let cross = |s0: &(f64, f64), s1: &(f64, f64)| {
        let (g0, g1) = (s0.1 + 1.0, s1.1 + 1.0);
        if g0 == g1 {
            s0.0
        } else {
            s0.0 + (s1.0 - s0.0) * g0 / (g0 - g1)
        }
    };
    let v_il = sa
        .windows(2)
        .find(|w| w[0].1 > -1.0 && w[1].1 <= -1.0)
        .map(|w| cross(&w[0], &w[1]));
    let v_ih = sa
        .windows(2)
        .rev()
        .find(|w| w[0].1 <= -1.0 && w[1].1 > -1.0)
        .map(|w| cross(&w[0], &w[1]));
    let (v_il, v_ih) = match (v_il, v_ih) {
        (Some(l), Some(h)) => (l, h),
        _ => return Err(Error::DegenerateVtc("no unity-gain pair".into())),
    };
    let v_oh = interpolate(&a, v_il);
    let v_ol = interpolate(&a, v_ih);

    let mut vtc_hysteresis = 0.0f64;
    for p in &a {
        let q = interpolate(&b, p.0);
        if q.is_finite() {
            vtc_hysteresis = vtc_hysteresis.max((p.1 - q).abs());
        }
    }
    Ok(VtcMetrics {
        gain_max,
        v_m,
        nm_h: v_oh - v_ih,
        nm_l: v_il - v_ol,
        vtc_hysteresis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fet::Polarity;
    use crate::presets;

    fn conventional() -> Inverter {
        Inverter::new(
            Transistor::Conventional(presets::fet(Polarity::N).unwrap()),
            Transistor::Conventional(presets::fet(Polarity::P).unwrap()),
            0.7,
        )
        .unwrap()
    }

    fn synthetic(v_m: f64, k: f64, v_dd: f64, step: f64, shift: f64) -> Vec<VtcRow> {
        let n = (v_dd / step).round() as usize;
        (0..=n)
            .map(|i| {
                let v_in = i as f64 * step;
                VtcRow {
                    v_in,
                    v_out: 0.5 * v_dd * (1.0 - ((v_in - v_m - shift) * k).tanh()),
                    converged: true,
                }
            })
            .collect()
    }

    #[test]
    fn conventional_vtc_swings_rail_to_rail() {
        let inv = conventional();
        let w = SweepWindow::new(0.0, 0.7, 5e-3).unwrap();
        let up = inverter_vtc(&inv, &w, Direction::Up).unwrap();
        assert!(up.iter().all(|r| r.converged));
        assert!((up[0].v_out - 0.7).abs() < 2e-3);
        assert!(up.last().unwrap().v_out < 2e-3);
        assert!(up.windows(2).all(|w| w[1].v_out <= w[0].v_out + 1e-12));
        let again = inverter_vtc(&inv, &w, Direction::Up).unwrap();
        assert_eq!(up, again);
        let down = inverter_vtc(&inv, &w, Direction::Down).unwrap();
        let m = vtc_metrics(&up, &down, 0.7).unwrap();
        assert!(m.gain_max > 10.0);
        assert!(m.vtc_hysteresis < 1e-6);
        assert!(m.v_m > 0.2 && m.v_m < 0.5);
        assert!(m.nm_h > 0.0 && m.nm_l > 0.0);
    }

    #[test]
    fn metrics_of_tanh_curve() {
        let (v_dd, k) = (1.0, 20.0);
        let up = synthetic(0.5, k, v_dd, 1e-3, 0.0);
        let mut down = up.clone();
        down.reverse();
        let m = vtc_metrics(&up, &down, v_dd).unwrap();
        // slope of 0.5·v_dd·tanh at the centre is 0.5·v_dd·k
        assert!((m.gain_max / (0.5 * v_dd * k) - 1.0).abs() < 1e-3);
        assert!((m.v_m - 0.5).abs() < 1e-6);
        assert!((m.nm_h - m.nm_l).abs() < 1e-6);
        assert_eq!(m.vtc_hysteresis, 0.0);
        let shifted = synthetic(0.5, k, v_dd, 1e-3, 0.02);
        let h = vtc_metrics(&up, &shifted, v_dd).unwrap().vtc_hysteresis;
        assert!(h > 0.1 && h < 0.5 * v_dd, "{h}");
    }

    #[test]
    fn degenerate_tables_are_rejected() {
        let up = synthetic(0.5, 20.0, 1.0, 1e-3, 0.0);
        assert!(matches!(vtc_metrics(&up[..2], &up, 1.0), Err(Error::DegenerateVtc(_))));
        assert!(matches!(
            vtc_metrics(&up[..500], &up, 1.0),
            Err(Error::DegenerateVtc(_))
        ));
        let flat: Vec<VtcRow> = up.iter().map(|r| VtcRow { v_out: 0.3, ..*r }).collect();
        assert!(vtc_metrics(&flat, &flat, 1.0).is_err());
        assert!(Inverter::new(conventional().nfet, conventional().pfet, 0.0).is_err());
    }
}
