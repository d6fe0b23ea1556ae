//! Ferroelectric gate stack in series with the surrogate FET, coupled by
//! charge balance: the film carries the internal gate charge and
//! `V_gs = V_int + V_FE`.

use rayon::prelude::*;

use crate::analysis;
use crate::error::{Error, Result};
use crate::ferroelectric::{LkModel, Quadrant, SCurveRegion};
use crate::fet::{FetEval, FetParams, Polarity};
use crate::roots;
use crate::units::NM2;

/// Bias magnitude accepted by the static solvers (V).
pub const BIAS_LIMIT: f64 = 2.0;
/// Residual tolerance of the charge-balance equation (V).
pub const COUPLING_TOL: f64 = 1e-12;
/// Cells of the uniform scan used by [`NcFet::find_all_roots`].
pub const SCAN_CELLS: usize = 4000;
/// Roots closer than this are the same root (V).
pub const DISTINCT_ROOTS: f64 = 1e-6;
/// Sweep hysteresis above this counts as unstable (V).
pub const HYSTERESIS_THRESHOLD: f64 = 1e-3;

const FRESH_SCAN_START: f64 = -1.0;
const FRESH_SCAN_STEP: f64 = 1e-3;
const MARCH_STEP_MIN: f64 = 5e-4;
const MARCH_STEP_MAX: f64 = 1e-2;
const REFINE_MAX_ITER: usize = 200;

/// NC VNW-FET: a ferroelectric capacitor in series with the FET gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcFet {
    pub fet: FetParams,
    pub lk: LkModel,
}

/// One self-consistent bias solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub v_gs: f64,
    pub v_ds: f64,
    pub v_int: f64,
    pub v_fe: f64,
    pub q: f64,
    /// Film polarization; zero without a film.
    pub p: f64,
    pub i_ds: f64,
    /// S-curve region of the film, `None` without a film.
    pub region: Option<SCurveRegion>,
    pub converged: bool,
    pub iterations: usize,
}

/// Terminal current and gate charge of a solved NC device with their
/// sensitivities to the external terminal voltages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcEval {
    pub op: OperatingPoint,
    pub dids_dvgs: f64,
    pub dids_dvds: f64,
    pub dq_dvgs: f64,
    pub dq_dvds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

/// Which terminal a sweep varies; the other one is held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepAxis {
    Gate { v_ds: f64 },
    Drain { v_gs: f64 },
}

/// Uniform voltage grid for sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepWindow {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepWindow {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(start < stop) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sweep needs start < stop and step > 0 (got {start}, {stop}, {step})"
            )));
        }
        Ok(Self { start, stop, step })
    }

    /// Grid points in sweep order. Points are `start + k·step`, so repeated
    /// sweeps share bit-identical abscissae.
    pub fn points(&self, direction: Direction) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        let mut v: Vec<f64> = (0..n).map(|k| self.start + k as f64 * self.step).collect();
        if direction == Direction::Down {
            v.reverse();
        }
        v
    }
}

/// Rows of a continuation sweep in the order they were solved.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub direction: Direction,
    pub rows: Vec<OperatingPoint>,
}

impl SweepTable {
    /// Value of the swept terminal voltage for a row.
    pub fn swept(&self, row: &OperatingPoint) -> f64 {
        match self.axis {
            SweepAxis::Gate { .. } => row.v_gs,
            SweepAxis::Drain { .. } => row.v_ds,
        }
    }

    /// `(swept voltage, |i_ds|)` pairs in ascending voltage order.
    pub fn ascending(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (self.swept(r), r.i_ds.abs())).collect();
        if self.direction == Direction::Down {
            pts.reverse();
        }
        pts
    }

    /// `(swept voltage, i_ds)` pairs in ascending voltage order, keeping
    /// the sign of the current.
    pub fn ascending_signed(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (self.swept(r), r.i_ds)).collect();
        if self.direction == Direction::Down {
            pts.reverse();
        }
        pts
    }

    /// Fixed drain bias of a gate sweep.
    pub fn v_ds(&self) -> Option<f64> {
        match self.axis {
            SweepAxis::Gate { v_ds } => Some(v_ds),
            SweepAxis::Drain { .. } => None,
        }
    }
}

/// Crossover of the transfer curves of several film areas.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorResult {
    pub v_a: f64,
    pub spread: f64,
    pub q_zero_v: f64,
    /// Crossing of each adjacent area pair.
    pub crossings: Vec<f64>,
}

fn check_bias(v_gs: f64, v_ds: f64) -> Result<()> {
    if !(v_gs.abs() <= BIAS_LIMIT) || !(v_ds.abs() <= BIAS_LIMIT) {
        return Err(Error::InvalidInput(format!(
            "bias outside ±{BIAS_LIMIT} V (v_gs = {v_gs}, v_ds = {v_ds})"
        )));
    }
    Ok(())
}

impl NcFet {
    pub fn new(fet: FetParams, lk: LkModel) -> Result<Self> {
        fet.validate()?;
        lk.coeffs.validate()?;
        Ok(Self { fet, lk })
    }

    /// Same device with a different film area (m²).
    pub fn with_area(&self, a_fe: f64) -> Result<Self> {
        Ok(Self {
            fet: self.fet,
            lk: self.lk.with_area(a_fe)?,
        })
    }

    /// Film area in nm².
    pub fn area_nm2(&self) -> f64 {
        self.lk.geom.a_fe / NM2
    }

    /// Charge-balance residual `v_int + V_FE(Q_g(v_int)) − v_gs`, its
    /// derivative in `v_int`, and the FET evaluation at `v_int`.
    pub fn residual(&self, v_int: f64, v_gs: f64, v_ds: f64) -> Result<(f64, f64, FetEval)> {
        let e = self.fet.eval(v_int, v_ds)?;
        let g = v_int + self.lk.v_fe_static(e.qg) - v_gs;
        let dg = 1.0 + self.lk.dv_fe_dq(e.qg) * e.dqg_dvgs;
        Ok((g, dg, e))
    }

    fn g(&self, v_int: f64, v_gs: f64, v_ds: f64) -> (f64, f64) {
        match self.residual(v_int, v_gs, v_ds) {
            Ok((g, dg, _)) => (g, dg),
            Err(_) => (f64::NAN, f64::NAN),
        }
    }

    fn point(
        &self,
        v_int: f64,
        v_gs: f64,
        v_ds: f64,
        iterations: usize,
        previous: Option<Quadrant>,
    ) -> Result<OperatingPoint> {
        let e = self.fet.eval(v_int, v_ds)?;
        let v_fe = self.lk.v_fe_static(e.qg);
        let converged = (v_int + v_fe - v_gs).abs() <= 1e-9;
        let region = match previous {
            Some(prev) => self.lk.classify_region_after(e.qg, prev),
            None => self.lk.classify_region(e.qg),
        };
        Ok(OperatingPoint {
            v_gs,
            v_ds,
            v_int,
            v_fe,
            q: e.qg,
            p: e.qg / self.lk.geom.a_fe,
            i_ds: e.ids,
            region: Some(region),
            converged,
            iterations,
        })
    }

    fn refine(&self, lo: f64, hi: f64, f_lo: f64, v_gs: f64, v_ds: f64) -> Result<(f64, usize)> {
        roots::safeguarded_newton(
            |v| self.g(v, v_gs, v_ds),
            lo,
            hi,
            f_lo,
            0.5 * (lo + hi),
            COUPLING_TOL,
            REFINE_MAX_ITER,
        )
        .ok_or_else(|| Error::non_convergence("charge balance", format!("v_gs = {v_gs} V, v_ds = {v_ds} V")))
    }

    /// Ascending 1 mV scan for the first sign change.
    fn scan_bracket(&self, v_gs: f64, v_ds: f64) -> Result<(f64, f64, f64, usize)> {
        let mut x = FRESH_SCAN_START;
        let mut gx = self.g(x, v_gs, v_ds).0;
        let mut evals = 1;
        if gx > 0.0 {
            x = -BIAS_LIMIT;
            gx = self.g(x, v_gs, v_ds).0;
            evals += 1;
        }
        if gx == 0.0 {
            return Ok((x, x, gx, evals));
        }
        let n = ((BIAS_LIMIT - x) / FRESH_SCAN_STEP).round() as usize;
        let start = x;
        for k in 1..=n {
            let next = if k == n {
                BIAS_LIMIT
            } else {
                start + k as f64 * FRESH_SCAN_STEP
            };
            let gn = self.g(next, v_gs, v_ds).0;
            evals += 1;
            if gn.is_nan() {
                break;
            }
            if gn.signum() != gx.signum() || gn == 0.0 {
                return Ok((x, next, gx, evals));
            }
            x = next;
            gx = gn;
        }
        Err(Error::non_convergence(
            "charge balance",
            format!("no sign change in [-2, 2] V at v_gs = {v_gs} V, v_ds = {v_ds} V"),
        ))
    }

    /// March from `guess` against the sign of the residual until it changes
    /// sign. The first crossing met this way is the nearest root on the
    /// descent side, which is always a stable (ascending) crossing.
    fn march_bracket(&self, guess: f64, v_gs: f64, v_ds: f64) -> Result<(f64, f64, f64, usize)> {
        let mut x = guess.clamp(-BIAS_LIMIT, BIAS_LIMIT);
        let (mut gx, dg) = self.g(x, v_gs, v_ds);
        let mut evals = 1;
        if gx == 0.0 {
            return Ok((x, x, gx, evals));
        }
        if gx.is_nan() {
            return self.scan_bracket(v_gs, v_ds);
        }
        let dir = -gx.signum();
        // a Newton-sized first step when the root is close by
        let mut step = if dg > 0.0 {
            (1.5 * gx.abs() / dg).clamp(MARCH_STEP_MIN * 1e-3, MARCH_STEP_MIN)
        } else {
            MARCH_STEP_MIN
        };
        loop {
            let next = (x + dir * step).clamp(-BIAS_LIMIT, BIAS_LIMIT);
            let gn = self.g(next, v_gs, v_ds).0;
            evals += 1;
            if gn.is_nan() {
                break;
            }
            if gn.signum() != gx.signum() || gn == 0.0 {
                return Ok((x, next, gx, evals));
            }
            if next == x {
                break;
            }
            x = next;
            gx = gn;
            step = (step * 1.5).min(MARCH_STEP_MAX);
        }
        let (lo, hi, f_lo, more) = self.scan_bracket(v_gs, v_ds)?;
        Ok((lo, hi, f_lo, evals + more))
    }

    /// Self-consistent operating point. With a guess the nearest stable
    /// root on the descent side of the guess is returned (continuation);
    /// without one, the first root of an ascending scan from −1 V.
    pub fn solve_static(&self, v_gs: f64, v_ds: f64, guess: Option<f64>) -> Result<OperatingPoint> {
        self.solve_static_after(v_gs, v_ds, guess, None)
    }

    fn solve_static_after(
        &self,
        v_gs: f64,
        v_ds: f64,
        guess: Option<f64>,
        previous: Option<Quadrant>,
    ) -> Result<OperatingPoint> {
        check_bias(v_gs, v_ds)?;
        let (lo, hi, f_lo, evals) = match guess {
            Some(g) => self.march_bracket(g, v_gs, v_ds)?,
            None => self.scan_bracket(v_gs, v_ds)?,
        };
        let (v_int, iters) = if lo == hi {
            (lo, 0)
        } else {
            self.refine(lo, hi, f_lo, v_gs, v_ds)?
        };
        self.point(v_int, v_gs, v_ds, evals + iters, previous)
    }

    /// Solves and returns terminal sensitivities for circuit Newton loops.
    pub fn eval(&self, v_gs: f64, v_ds: f64, guess: Option<f64>) -> Result<NcEval> {
        let op = self.solve_static(v_gs, v_ds, guess)?;
        let e = self.fet.eval(op.v_int, v_ds)?;
        let dvfe = self.lk.dv_fe_dq(e.qg);
        let dg = 1.0 + dvfe * e.dqg_dvgs;
        let dvint_dvgs = 1.0 / dg;
        let dvint_dvds = -dvfe * e.dqg_dvds / dg;
        Ok(NcEval {
            op,
            dids_dvgs: e.dids_dvgs * dvint_dvgs,
            dids_dvds: e.dids_dvds + e.dids_dvgs * dvint_dvds,
            dq_dvgs: e.dqg_dvgs * dvint_dvgs,
            dq_dvds: e.dqg_dvds + e.dqg_dvgs * dvint_dvds,
        })
    }

    /// Every root of the charge balance on `[−2, 2]` V, sorted.
    pub fn find_all_roots(&self, v_gs: f64, v_ds: f64) -> Result<Vec<OperatingPoint>> {
        check_bias(v_gs, v_ds)?;
        let h = 2.0 * BIAS_LIMIT / SCAN_CELLS as f64;
        let grid: Vec<(f64, f64)> = (0..=SCAN_CELLS)
            .map(|k| {
                let x = -BIAS_LIMIT + k as f64 * h;
                (x, self.g(x, v_gs, v_ds).0)
            })
            .collect();
        let mut found: Vec<f64> = Vec::new();
        let mut push = |v: f64| {
            if found.last().is_none_or(|&last| v - last > DISTINCT_ROOTS) {
                found.push(v);
            }
        };
        for w in grid.windows(2) {
            let ((x0, g0), (x1, g1)) = (w[0], w[1]);
            if g0 == 0.0 {
                push(x0);
            } else if g1 != 0.0 && g0.signum() != g1.signum() {
                let (v, _) = self.refine(x0, x1, g0, v_gs, v_ds)?;
                push(v);
            }
        }
        if let Some(&(x, g)) = grid.last() {
            if g == 0.0 {
                push(x);
            }
        }
        if found.is_empty() {
            return Err(Error::non_convergence(
                "charge balance",
                format!("no root on [-2, 2] V at v_gs = {v_gs} V, v_ds = {v_ds} V"),
            ));
        }
        found.into_iter().map(|v| self.point(v, v_gs, v_ds, 0, None)).collect()
    }

    fn sweep(&self, axis: SweepAxis, window: &SweepWindow, direction: Direction) -> Result<SweepTable> {
        sweep_with(axis, window, direction, |v_gs, v_ds, last| {
            self.solve_static_after(
                v_gs,
                v_ds,
                last.map(|r| r.v_int),
                last.and_then(|r| r.region).map(|r| r.quadrant),
            )
        })
    }

    /// Transfer characteristic by continuation in `v_gs`.
    pub fn sweep_idvg(&self, window: &SweepWindow, v_ds: f64, direction: Direction) -> Result<SweepTable> {
        self.sweep(SweepAxis::Gate { v_ds }, window, direction)
    }

    /// Output characteristic by continuation in `v_ds`.
    pub fn sweep_idvd(&self, window: &SweepWindow, v_gs: f64) -> Result<SweepTable> {
        self.sweep(SweepAxis::Drain { v_gs }, window, Direction::Up)
    }

    /// Up and down transfer sweeps, run concurrently.
    pub fn sweep_idvg_pair(&self, window: &SweepWindow, v_ds: f64) -> Result<(SweepTable, SweepTable)> {
        let (up, down) = rayon::join(
            || self.sweep_idvg(window, v_ds, Direction::Up),
            || self.sweep_idvg(window, v_ds, Direction::Down),
        );
        Ok((up?, down?))
    }

    /// Up/down sweep hysteresis over the current window `[i_lo, i_hi]`.
    pub fn sweep_hysteresis(&self, window: &SweepWindow, v_ds: f64, i_lo: f64, i_hi: f64) -> Result<f64> {
        let (up, down) = self.sweep_idvg_pair(window, v_ds)?;
        analysis::hysteresis_width(&up, &down, i_lo, i_hi)
    }
}

fn sweep_with<F>(axis: SweepAxis, window: &SweepWindow, direction: Direction, solve: F) -> Result<SweepTable>
where
    F: Fn(f64, f64, Option<&OperatingPoint>) -> Result<OperatingPoint>,
{
    let mut rows: Vec<OperatingPoint> = Vec::new();
    for v in window.points(direction) {
        let (v_gs, v_ds) = match axis {
            SweepAxis::Gate { v_ds } => (v, v_ds),
            SweepAxis::Drain { v_gs } => (v_gs, v),
        };
        let row = solve(v_gs, v_ds, rows.last()).map_err(|e| {
            e.context(match axis {
                SweepAxis::Gate { .. } => format!("gate sweep at v_gs = {v_gs} V"),
                SweepAxis::Drain { .. } => format!("drain sweep at v_ds = {v_ds} V"),
            })
        })?;
        rows.push(row);
    }
    Ok(SweepTable { axis, direction, rows })
}

/// Operating point of a FET without a film.
pub fn conventional_point(fet: &FetParams, v_gs: f64, v_ds: f64) -> Result<OperatingPoint> {
    let e = fet.eval(v_gs, v_ds)?;
    Ok(OperatingPoint {
        v_gs,
        v_ds,
        v_int: v_gs,
        v_fe: 0.0,
        q: e.qg,
        p: 0.0,
        i_ds: e.ids,
        region: None,
        converged: true,
        iterations: 0,
    })
}

/// Gate voltage where the FET gate charge vanishes; every film area leaves
/// the internal gate untouched there.
pub fn charge_neutral_gate_voltage(fet: &FetParams, v_ds: f64) -> Result<f64> {
    let f = |v: f64| fet.q_gate(v, v_ds).unwrap_or(f64::NAN);
    roots::bisect(f, -BIAS_LIMIT, BIAS_LIMIT, 1e-13).ok_or(Error::NoCrossing(format!(
        "gate charge has no zero in [-2, 2] V at v_ds = {v_ds} V"
    )))
}

/// Crossover of the transfer curves of neighbouring film areas (nm²).
pub fn attractor_estimate(
    fet: &FetParams,
    lk_base: &LkModel,
    a_fe_list: &[f64],
    v_ds: f64,
    window: &SweepWindow,
) -> Result<AttractorResult> {
    if a_fe_list.len() < 2 {
        return Err(Error::InvalidInput(
            "attractor estimate needs at least two areas".into(),
        ));
    }
    let devices: Vec<NcFet> = a_fe_list
        .iter()
        .map(|&a| NcFet::new(*fet, lk_base.with_area(a * NM2)?))
        .collect::<Result<_>>()?;
    let tables: Vec<SweepTable> = devices
        .par_iter()
        .map(|d| d.sweep_idvg(window, v_ds, Direction::Up))
        .collect::<Result<_>>()?;
    let crossings: Vec<f64> = (0..devices.len() - 1)
        .into_par_iter()
        .map(|k| pair_crossing(&devices[k], &tables[k], &devices[k + 1], &tables[k + 1], v_ds))
        .collect::<Result<_>>()?;
    let v_a = crossings.iter().sum::<f64>() / crossings.len() as f64;
    let (min, max) = crossings
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        });
    Ok(AttractorResult {
        v_a,
        spread: max - min,
        q_zero_v: charge_neutral_gate_voltage(fet, v_ds)?,
        crossings,
    })
}

fn pair_crossing(a: &NcFet, ta: &SweepTable, b: &NcFet, tb: &SweepTable, v_ds: f64) -> Result<f64> {
    let diff = |ra: &OperatingPoint, rb: &OperatingPoint| ra.i_ds.abs().ln() - rb.i_ds.abs().ln();
    let k = ta
        .rows
        .windows(2)
        .zip(tb.rows.windows(2))
        .position(|(wa, wb)| {
            let d0 = diff(&wa[0], &wb[0]);
            let d1 = diff(&wa[1], &wb[1]);
            d0.is_finite() && d1.is_finite() && (d0 == 0.0 || d0.signum() != d1.signum())
        })
        .ok_or_else(|| {
            Error::NoCrossing(format!(
                "areas {:.1} and {:.1} nm² do not cross in the sweep window",
                a.area_nm2(),
                b.area_nm2()
            ))
        })?;
    let (lo, hi) = (ta.rows[k].v_gs, ta.rows[k + 1].v_gs);
    let (ga, gb) = (ta.rows[k].v_int, tb.rows[k].v_int);
    let f = |v: f64| -> f64 {
        let ia = a.solve_static(v, v_ds, Some(ga)).map(|r| r.i_ds.abs().ln());
        let ib = b.solve_static(v, v_ds, Some(gb)).map(|r| r.i_ds.abs().ln());
        match (ia, ib) {
            (Ok(x), Ok(y)) => x - y,
            _ => f64::NAN,
        }
    };
    roots::bisect(f, lo, hi, 1e-12)
        .ok_or_else(|| Error::NoCrossing(format!("crossing refinement failed between {lo} and {hi} V")))
}

/// Smallest stable film area (nm²), by bisection on the sweep-hysteresis
/// predicate between `search_lo` (hysteretic) and `search_hi` (not).
pub fn critical_area(
    template: &NcFet,
    search_lo: f64,
    search_hi: f64,
    v_ds: f64,
    window: &SweepWindow,
    current_window: (f64, f64),
) -> Result<f64> {
    if !(search_lo > 0.0 && search_lo < search_hi) {
        return Err(Error::InvalidInput(format!(
            "critical area search needs 0 < lo < hi (got {search_lo}, {search_hi})"
        )));
    }
    let unstable = |a: f64| -> Result<bool> {
        let dev = template.with_area(a * NM2)?;
        Ok(dev.sweep_hysteresis(window, v_ds, current_window.0, current_window.1)? > HYSTERESIS_THRESHOLD)
    };
    let (at_lo, at_hi) = rayon::join(|| unstable(search_lo), || unstable(search_hi));
    if !at_lo? || at_hi? {
        return Err(Error::PredicateNotBracketed(format!(
            "hysteresis must exceed 1 mV at {search_lo} nm² and not at {search_hi} nm²"
        )));
    }
    let (mut lo, mut hi) = (search_lo, search_hi);
    while (hi - lo) > 2e-3 * lo {
        let mid = (lo * hi).sqrt();
        if unstable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// A transistor as seen by circuit solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transistor {
    Conventional(FetParams),
    NegativeCapacitance(NcFet),
}

/// Terminal quantities of a transistor with sensitivities. `q` is the
/// charge on the external gate terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalEval {
    pub ids: f64,
    pub q: f64,
    pub dids_dvgs: f64,
    pub dids_dvds: f64,
    pub dq_dvgs: f64,
    pub dq_dvds: f64,
    /// Internal gate voltage of an NC device.
    pub v_int: Option<f64>,
}

impl Transistor {
    pub fn fet(&self) -> &FetParams {
        match self {
            Transistor::Conventional(f) => f,
            Transistor::NegativeCapacitance(d) => &d.fet,
        }
    }

    pub fn polarity(&self) -> Polarity {
        self.fet().polarity
    }

    pub fn is_nc(&self) -> bool {
        matches!(self, Transistor::NegativeCapacitance(_))
    }

    fn sweep(&self, axis: SweepAxis, window: &SweepWindow, direction: Direction) -> Result<SweepTable> {
        match self {
            Transistor::Conventional(f) => sweep_with(axis, window, direction, |v_gs, v_ds, _| {
                conventional_point(f, v_gs, v_ds)
            }),
            Transistor::NegativeCapacitance(d) => d.sweep(axis, window, direction),
        }
    }

    pub fn sweep_idvg(&self, window: &SweepWindow, v_ds: f64, direction: Direction) -> Result<SweepTable> {
        self.sweep(SweepAxis::Gate { v_ds }, window, direction)
    }

    pub fn sweep_idvd(&self, window: &SweepWindow, v_gs: f64) -> Result<SweepTable> {
        self.sweep(SweepAxis::Drain { v_gs }, window, Direction::Up)
    }

    pub fn sweep_idvg_pair(&self, window: &SweepWindow, v_ds: f64) -> Result<(SweepTable, SweepTable)> {
        let (up, down) = rayon::join(
            || self.sweep_idvg(window, v_ds, Direction::Up),
            || self.sweep_idvg(window, v_ds, Direction::Down),
        );
        Ok((up?, down?))
    }

    /// Static evaluation; `guess` seeds the NC continuation.
    pub fn eval(&self, v_gs: f64, v_ds: f64, guess: Option<f64>) -> Result<TerminalEval> {
        match self {
            Transistor::Conventional(f) => {
                let e = f.eval(v_gs, v_ds)?;
                Ok(TerminalEval {
                    ids: e.ids,
                    q: e.qg,
                    dids_dvgs: e.dids_dvgs,
                    dids_dvds: e.dids_dvds,
                    dq_dvgs: e.dqg_dvgs,
                    dq_dvds: e.dqg_dvds,
                    v_int: None,
                })
            }
            Transistor::NegativeCapacitance(d) => {
                let e = d.eval(v_gs, v_ds, guess)?;
                Ok(TerminalEval {
                    ids: e.op.i_ds,
                    q: e.op.q,
                    dids_dvgs: e.dids_dvgs,
                    dids_dvds: e.dids_dvds,
                    dq_dvgs: e.dq_dvgs,
                    dq_dvds: e.dq_dvds,
                    v_int: Some(e.op.v_int),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{hysteresis_width, HYSTERESIS_WINDOW};
    use crate::ferroelectric::{calibrate_lk, FerroGeometry, Mode};
    use crate::presets;

    fn device(a_nm2: f64) -> NcFet {
        presets::nc_fet(Polarity::N, a_nm2).unwrap()
    }

    fn window(step: f64) -> SweepWindow {
        SweepWindow::new(-0.3, 0.9, step).unwrap()
    }

    /// Zero of the gate charge by plain bisection.
    fn charge_zero(fet: &FetParams, v_ds: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.5);
        assert!(fet.q_gate(lo, v_ds).unwrap() < 0.0 && fet.q_gate(hi, v_ds).unwrap() > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fet.q_gate(mid, v_ds).unwrap() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn assert_coupled(d: &NcFet, r: &OperatingPoint) {
        assert!(r.converged);
        assert!((r.v_int + r.v_fe - r.v_gs).abs() <= 1e-9, "{r:?}");
        let q = d.fet.q_gate(r.v_int, r.v_ds).unwrap();
        assert!((r.q - q).abs() <= 1e-24 + 1e-9 * q.abs(), "{r:?}");
        assert!((d.lk.v_fe_static(r.q) - r.v_fe).abs() <= 1e-9);
    }

    #[test]
    fn huge_film_is_transparent() {
        let d = device(1e6);
        for &(v_gs, v_ds) in &[(0.0, 0.7), (0.2, 0.05), (0.3, 0.7), (0.7, 0.7), (0.7, 0.3)] {
            let r = d.solve_static(v_gs, v_ds, None).unwrap();
            let i = d.fet.ids(v_gs, v_ds).unwrap();
            assert!((r.i_ds / i - 1.0).abs() < 1e-3);
            if v_gs <= 0.3 {
                assert!((r.v_int - v_gs).abs() < 1e-4);
            }
        }
        // the film voltage vanishes as 1/A
        let far = device(1e7).solve_static(0.7, 0.05, None).unwrap();
        let near = d.solve_static(0.7, 0.05, None).unwrap();
        assert!((near.v_fe / far.v_fe - 10.0).abs() < 0.05);
    }

    #[test]
    fn film_is_idle_at_zero_gate_charge() {
        let v_ds = 0.7;
        let v0 = charge_zero(&presets::fet(Polarity::N).unwrap(), v_ds);
        for a in [500.0, 2000.0] {
            let r = device(a).solve_static(v0, v_ds, None).unwrap();
            assert!(r.v_fe.abs() < 1e-9, "{r:?}");
            assert!((r.v_int - v0).abs() < 1e-9);
        }
    }

    #[test]
    fn amplification_above_attractor() {
        let d = device(500.0);
        let r = d.solve_static(0.5, 0.7, None).unwrap();
        assert!(r.v_int > r.v_gs);
        assert_eq!(r.region.unwrap().mode, Mode::Amplification);
        assert!(d.solve_static(2.5, 0.7, None).is_err());
    }

    #[test]
    fn root_counts() {
        let big = device(2000.0);
        for v in [-0.2, 0.1, 0.2, 0.5] {
            assert_eq!(big.find_all_roots(v, 0.7).unwrap().len(), 1);
        }
        let small = device(80.0);
        let counts: Vec<usize> = (0..=60)
            .map(|k| small.find_all_roots(-0.3 + 0.02 * k as f64, 0.7).unwrap().len())
            .collect();
        assert!(counts.iter().all(|c| c % 2 == 1), "{counts:?}");
        assert!(counts.contains(&3), "{counts:?}");
    }

    #[test]
    fn solver_root_is_in_scan_list() {
        let d = device(120.0);
        for k in 0..25 {
            let v_gs = -0.3 + 0.05 * k as f64;
            for guess in [None, Some(-0.5), Some(0.8)] {
                let r = d.solve_static(v_gs, 0.7, guess).unwrap();
                let all = d.find_all_roots(v_gs, 0.7).unwrap();
                assert!(all.iter().any(|x| (x.v_int - r.v_int).abs() < 1e-8), "v_gs {v_gs}");
            }
        }
    }

    #[test]
    fn sweep_rows_obey_coupling_and_region_rules() {
        let d = device(500.0);
        let w = window(5e-3);
        let up = d.sweep_idvg(&w, 0.7, Direction::Up).unwrap();
        let v_a = charge_zero(&d.fet, 0.7);
        for r in &up.rows {
            assert_coupled(&d, r);
            let g = r.region.unwrap();
            match g.mode {
                Mode::Diminution => assert!(r.v_int < r.v_gs - 1e-9 || r.v_fe.abs() < 1e-9),
                Mode::Amplification => assert!(r.v_int > r.v_gs + 1e-9 || r.v_fe.abs() < 1e-9),
            }
            if r.v_gs < v_a - 1e-6 {
                assert_eq!(g.quadrant, Quadrant::IV, "{r:?}");
            } else if r.v_gs > v_a + 1e-6 {
                assert_eq!(g.quadrant, Quadrant::II, "{r:?}");
            }
        }
        let vs: Vec<f64> = up.rows.iter().map(|r| r.v_gs).collect();
        assert!(vs.windows(2).all(|w| w[1] > w[0]));
        let down = d.sweep_idvg(&w, 0.7, Direction::Down).unwrap();
        assert!(down.rows.windows(2).all(|w| w[1].v_gs < w[0].v_gs));
    }

    #[test]
    fn output_sweeps() {
        let d = device(500.0);
        let w = SweepWindow::new(0.0, 0.7, 5e-3).unwrap();
        let t = d.sweep_idvd(&w, 0.1).unwrap();
        assert_eq!(t.rows[0].i_ds, 0.0);
        assert!(!crate::analysis::detect_ndr(&t).is_empty());
        let conv = Transistor::Conventional(d.fet).sweep_idvd(&w, 0.1).unwrap();
        assert!(conv.rows.windows(2).all(|w| w[1].i_ds >= w[0].i_ds));
        assert!(conv.rows.iter().all(|r| r.region.is_none() && r.v_fe == 0.0));
    }

    #[test]
    fn attractor_current_matches_bare_device() {
        let base = device(2000.0);
        let r = attractor_estimate(&base.fet, &base.lk, &[2000.0, 1000.0, 700.0, 500.0], 0.7, &window(2e-3)).unwrap();
        assert!(r.spread >= 0.0 && r.spread < 2e-3);
        let i_nc = device(700.0).solve_static(r.v_a, 0.7, None).unwrap().i_ds;
        let i = base.fet.ids(r.v_a, 0.7).unwrap();
        assert!((i_nc / i - 1.0).abs() < 5e-3);
        assert!(attractor_estimate(&base.fet, &base.lk, &[500.0], 0.7, &window(2e-3)).is_err());
    }

    #[test]
    fn critical_area_brackets_the_hysteresis_onset() {
        let w = window(2e-3);
        let d = device(500.0);
        let a = critical_area(&d, 50.0, 2000.0, 0.7, &w, HYSTERESIS_WINDOW).unwrap();
        let hyst = |area: f64| {
            let dev = d.with_area(area * NM2).unwrap();
            let (u, v) = dev.sweep_idvg_pair(&w, 0.7).unwrap();
            hysteresis_width(&u, &v, HYSTERESIS_WINDOW.0, HYSTERESIS_WINDOW.1).unwrap()
        };
        assert!(hyst(1.1 * a) < HYSTERESIS_THRESHOLD);
        assert!(hyst(0.9 * a) > HYSTERESIS_THRESHOLD);
        // a weaker film loses matching at a larger area
        let weak = NcFet::new(
            d.fet,
            LkModel::new(
                calibrate_lk(0.8 * presets::P_R, presets::E_C, 0.0, presets::RHO).unwrap(),
                FerroGeometry::new(presets::T_FE, 500.0 * NM2).unwrap(),
            ),
        )
        .unwrap();
        let a_weak = critical_area(&weak, 50.0, 2000.0, 0.7, &w, HYSTERESIS_WINDOW).unwrap();
        assert!(a_weak > a, "{a_weak} vs {a}");
        assert!(matches!(
            critical_area(&d, 1000.0, 2000.0, 0.7, &w, HYSTERESIS_WINDOW),
            Err(Error::PredicateNotBracketed(_))
        ));
    }

    #[test]
    fn terminal_sensitivities_match_differences() {
        let t = Transistor::NegativeCapacitance(device(700.0));
        let (v_gs, v_ds) = (0.35, 0.4);
        let e = t.eval(v_gs, v_ds, None).unwrap();
        let h = 1e-6;
        let at = |g: f64, d: f64| t.eval(g, d, e.v_int).unwrap();
        let fd_g = (at(v_gs + h, v_ds).ids - at(v_gs - h, v_ds).ids) / (2.0 * h);
        let fd_d = (at(v_gs, v_ds + h).ids - at(v_gs, v_ds - h).ids) / (2.0 * h);
        let fq_g = (at(v_gs + h, v_ds).q - at(v_gs - h, v_ds).q) / (2.0 * h);
        let fq_d = (at(v_gs, v_ds + h).q - at(v_gs, v_ds - h).q) / (2.0 * h);
        assert!((e.dids_dvgs / fd_g - 1.0).abs() < 1e-4);
        assert!((e.dids_dvds / fd_d - 1.0).abs() < 1e-4);
        assert!((e.dq_dvgs / fq_g - 1.0).abs() < 1e-4);
        assert!((e.dq_dvds / fq_d - 1.0).abs() < 1e-4);
    }

    #[test]
    fn window_validation() {
        assert!(SweepWindow::new(0.0, 1.0, 0.0).is_err());
        assert!(SweepWindow::new(1.0, 0.0, 0.1).is_err());
        let w = SweepWindow::new(0.0, 0.01, 1e-3).unwrap();
        assert_eq!(w.points(Direction::Up).len(), 11);
        assert_eq!(w.points(Direction::Down)[0], 0.01);
    }
}
