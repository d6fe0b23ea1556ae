use nalgebra::{DMatrix, DVector};

use super::inverter::Inverter;
use crate::error::{Error, Result};
use crate::nc_device::Transistor;

/// Ring of identical inverters; stage `k` drives node `k` from node `k − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingOscillator {
    pub stages: usize,
    pub c_wire: f64,
    pub inverter: Inverter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientConfig {
    pub t_stop: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Residual tolerance of every nodal and film equation (A).
    pub newton_tol: f64,
    pub max_newton: usize,
}

/// Accepted time points of a transient run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrace {
    pub t: Vec<f64>,
    /// One series per node.
    pub v_nodes: Vec<Vec<f64>>,
    /// One series per NC device, in stage order with the pull-down first.
    pub q_fe: Vec<Vec<f64>>,
    pub i_vdd: Vec<f64>,
    /// Largest residual of each accepted step (A).
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoMetrics {
    pub period: f64,
    pub delay_per_stage: f64,
    pub energy_per_cycle: f64,
    pub cycles: usize,
}

const GROW: f64 = 1.3;
const EASY_ITERATIONS: usize = 3;
const MAX_VOLTAGE_STEP: f64 = 0.1;
const UPDATE_TOL: f64 = 1e-9;
const SETTLE_FRACTION: f64 = 0.3;

impl RingOscillator {
    pub fn new(stages: usize, c_wire: f64, inverter: Inverter) -> Result<Self> {
        if stages < 3 || stages.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "ring needs an odd stage count >= 3, got {stages}"
            )));
        }
        if !(c_wire > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wire capacitance must be positive, got {c_wire:e}"
            )));
        }
        Ok(Self {
            stages,
            c_wire,
            inverter,
        })
    }
}

impl TransientConfig {
    /// Settings scaled to a rough period estimate of `ro`: about 20
    /// estimated periods with at least 1000 steps per period.
    pub fn for_ring(ro: &RingOscillator) -> Result<Self> {
        let period = estimate_period(ro)?;
        Ok(Self {
            t_stop: 20.0 * period,
            dt_init: period * 1e-5,
            dt_min: period * 1e-12,
            dt_max: period / 1000.0,
            newton_tol: 1e-9,
            max_newton: 30,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t_stop > 0.0
            && self.dt_min > 0.0
            && self.dt_min <= self.dt_init
            && self.dt_init <= self.dt_max
            && self.newton_tol > 0.0
            && self.max_newton > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid transient settings {self:?}")))
        }
    }
}

/// Period from the wire charge and the weaker of the two on-currents.
pub fn estimate_period(ro: &RingOscillator) -> Result<f64> {
    let inv = &ro.inverter;
    let v = inv.v_dd;
    let i_n = inv.nfet.eval(v, v, None)?.ids.abs();
    let i_p = inv.pfet.eval(-v, -v, None)?.ids.abs();
    let drive = i_n.min(i_p);
    if !(drive > 0.0) {
        return Err(Error::NoOscillation(format!("no drive current at v_dd = {v} V")));
    }
    Ok(2.0 * ro.stages as f64 * ro.c_wire * v / drive)
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    stage: usize,
    pull_up: bool,
    dev: Transistor,
    /// Position of the internal gate voltage in the unknown vector.
    unknown: Option<usize>,
}

struct Ring<'a> {
    ro: &'a RingOscillator,
    slots: Vec<Slot>,
    n_unknowns: usize,
}

/// Per-step evaluation of every device.
struct DeviceState {
    ids: f64,
    q: f64,
    dids_dvg: f64,
    dids_dvd: f64,
    dq_dvg: f64,
    dq_dvd: f64,
    dvfe_dq: f64,
}

impl<'a> Ring<'a> {
    fn new(ro: &'a RingOscillator) -> Self {
        let inv = &ro.inverter;
        let mut slots = Vec::with_capacity(2 * ro.stages);
        let mut next = ro.stages;
        for stage in 0..ro.stages {
            for (pull_up, dev) in [(false, inv.nfet), (true, inv.pfet)] {
                let unknown = dev.is_nc().then(|| {
                    next += 1;
                    next - 1
                });
                slots.push(Slot {
                    stage,
                    pull_up,
                    dev,
                    unknown,
                });
            }
        }
        Self {
            ro,
            slots,
            n_unknowns: next,
        }
    }

    fn input_node(&self, stage: usize) -> usize {
        (stage + self.ro.stages - 1) % self.ro.stages
    }

    fn source(&self, s: &Slot) -> f64 {
        if s.pull_up {
            self.ro.inverter.v_dd
        } else {
            0.0
        }
    }

    /// Gate-to-source and drain-to-source voltages of a slot.
    fn bias(&self, s: &Slot, x: &DVector<f64>) -> (f64, f64) {
        let src = self.source(s);
        (x[self.input_node(s.stage)] - src, x[s.stage] - src)
    }

    fn eval_slot(&self, s: &Slot, x: &DVector<f64>) -> Result<DeviceState> {
        let (v_gs, v_ds) = self.bias(s, x);
        match (&s.dev, s.unknown) {
            (Transistor::NegativeCapacitance(d), Some(k)) => {
                let e = d.fet.eval(x[k], v_ds)?;
                Ok(DeviceState {
                    ids: e.ids,
                    q: e.qg,
                    dids_dvg: e.dids_dvgs,
                    dids_dvd: e.dids_dvds,
                    dq_dvg: e.dqg_dvgs,
                    dq_dvd: e.dqg_dvds,
                    dvfe_dq: d.lk.dv_fe_dq(e.qg),
                })
            }
            (dev, _) => {
                let e = dev.fet().eval(v_gs, v_ds)?;
                Ok(DeviceState {
                    ids: e.ids,
                    q: e.qg,
                    dids_dvg: e.dids_dvgs,
                    dids_dvd: e.dids_dvds,
                    dq_dvg: e.dqg_dvgs,
                    dq_dvd: e.dqg_dvds,
                    dvfe_dq: 0.0,
                })
            }
        }
    }

    fn eval_all(&self, x: &DVector<f64>) -> Result<Vec<DeviceState>> {
        self.slots.iter().map(|s| self.eval_slot(s, x)).collect()
    }

    /// Backward-Euler residual (A) and Jacobian at `x`.
    fn assemble(
        &self,
        x: &DVector<f64>,
        v_old: &DVector<f64>,
        q_old: &[f64],
        dt: f64,
    ) -> Result<(DVector<f64>, DMatrix<f64>, Vec<DeviceState>)> {
        let n = self.n_unknowns;
        let nodes = self.ro.stages;
        let c = self.ro.c_wire;
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, n);
        for k in 0..nodes {
            r[k] = c * (x[k] - v_old[k]) / dt;
            j[(k, k)] += c / dt;
        }
        let devs = self.eval_all(x)?;
        for (idx, (s, d)) in self.slots.iter().zip(devs.iter()).enumerate() {
            let out = s.stage;
            let gate = self.input_node(s.stage);
            // channel current leaves the output node
            r[out] += d.ids;
            j[(out, out)] += d.dids_dvd;
            match s.unknown {
                Some(u) => j[(out, u)] += d.dids_dvg,
                None => j[(out, gate)] += d.dids_dvg,
            }
            // gate charging current leaves the driving node
            r[gate] += (d.q - q_old[idx]) / dt;
            j[(gate, out)] += d.dq_dvd / dt;
            match s.unknown {
                Some(u) => {
                    j[(gate, u)] += d.dq_dvg / dt;
                    let Transistor::NegativeCapacitance(dev) = &s.dev else {
                        unreachable!("film unknown on a conventional device")
                    };
                    let r_fe = dev.lk.kinetic_resistance();
                    let (v_gs, _) = self.bias(s, x);
                    let v_fe = dev.lk.v_fe_static(d.q);
                    r[u] = (d.q - q_old[idx]) / dt - (v_gs - x[u] - v_fe) / r_fe;
                    j[(u, u)] += d.dq_dvg / dt + (1.0 + d.dvfe_dq * d.dq_dvg) / r_fe;
                    j[(u, out)] += d.dq_dvd / dt + d.dvfe_dq * d.dq_dvd / r_fe;
                    j[(u, gate)] += -1.0 / r_fe;
                }
                None => j[(gate, gate)] += d.dq_dvg / dt,
            }
        }
        Ok((r, j, devs))
    }

    /// Supply current: pull-up channel currents plus pull-up gate charge
    /// drawn through the rail.
    fn supply_current(&self, devs: &[DeviceState], q_old: &[f64], dt: f64) -> f64 {
        self.slots
            .iter()
            .zip(devs.iter())
            .enumerate()
            .filter(|(_, (s, _))| s.pull_up)
            .map(|(idx, (_, d))| -d.ids - (d.q - q_old[idx]) / dt)
            .sum()
    }
}

/// Backward-Euler transient of the ring with polarization dynamics in every
/// NC device.
pub fn ro_transient(ro: &RingOscillator, cfg: &TransientConfig) -> Result<TransientTrace> {
    cfg.validate()?;
    let ring = Ring::new(ro);
    let nodes = ro.stages;
    let v_dd = ro.inverter.v_dd;

    let mut x = DVector::zeros(ring.n_unknowns);
    for k in 0..nodes {
        x[k] = if k % 2 == 0 { 0.9 * v_dd } else { 0.1 * v_dd };
    }
    for s in &ring.slots {
        if let (Transistor::NegativeCapacitance(d), Some(u)) = (&s.dev, s.unknown) {
            let (v_gs, v_ds) = ring.bias(s, &x);
            x[u] = d.solve_static(v_gs, v_ds, None)?.v_int;
        }
    }
    let devs = ring.eval_all(&x)?;
    let mut q: Vec<f64> = devs.iter().map(|d| d.q).collect();
    let nc_slots: Vec<usize> = (0..ring.slots.len())
        .filter(|&i| ring.slots[i].unknown.is_some())
        .collect();

    let mut trace = TransientTrace {
        t: vec![0.0],
        v_nodes: (0..nodes).map(|k| vec![x[k]]).collect(),
        q_fe: nc_slots.iter().map(|&i| vec![q[i]]).collect(),
        i_vdd: vec![-ring
            .slots
            .iter()
            .zip(devs.iter())
            .filter(|(s, _)| s.pull_up)
            .map(|(_, d)| d.ids)
            .sum::<f64>()],
        residual: vec![0.0],
    };

    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    while t < cfg.t_stop {
        let remaining = cfg.t_stop - t;
        // avoid a sliver of a final step
        let h = if remaining < 1.5 * dt { remaining } else { dt };
        match newton_step(&ring, &x, &q, h, cfg)? {
            Some((x_new, devs, iterations, res)) => {
                t = if h == remaining { cfg.t_stop } else { t + h };
                let i_vdd = ring.supply_current(&devs, &q, h);
                x = x_new;
                q = devs.iter().map(|d| d.q).collect();
                trace.t.push(t);
                for k in 0..nodes {
                    trace.v_nodes[k].push(x[k]);
                }
                for (series, &i) in trace.q_fe.iter_mut().zip(nc_slots.iter()) {
                    series.push(q[i]);
                }
                trace.i_vdd.push(i_vdd);
                trace.residual.push(res);
                if iterations <= EASY_ITERATIONS {
                    dt = (dt * GROW).min(cfg.dt_max);
                }
            }
            None => {
                dt *= 0.5;
                if dt < cfg.dt_min {
                    return Err(Error::non_convergence(
                        "ring transient",
                        format!("time step below dt_min at t = {t:e} s"),
                    ));
                }
            }
        }
    }
    let rising = rising_crossings(&trace.t, &trace.v_nodes[0], 0.5 * v_dd, 0.0);
    if rising.is_empty() {
        return Err(Error::NoOscillation(format!(
            "node 0 never crosses v_dd/2 upward within {:e} s",
            cfg.t_stop
        )));
    }
    Ok(trace)
}

type StepResult = Option<(DVector<f64>, Vec<DeviceState>, usize, f64)>;

fn newton_step(ring: &Ring, x0: &DVector<f64>, q_old: &[f64], dt: f64, cfg: &TransientConfig) -> Result<StepResult> {
    let v_old = x0.clone();
    let mut x = x0.clone();
    for iteration in 1..=cfg.max_newton {
        let (r, j, _) = match ring.assemble(&x, &v_old, q_old, dt) {
            Ok(a) => a,
            Err(_) => return Ok(None),
        };
        let Some(mut dx) = j.lu().solve(&(-r)) else {
            return Ok(None);
        };
        let largest = dx.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !largest.is_finite() {
            return Ok(None);
        }
        if largest > MAX_VOLTAGE_STEP {
            dx *= MAX_VOLTAGE_STEP / largest;
        }
        x += &dx;
        if largest <= UPDATE_TOL {
            let (r, _, devs) = match ring.assemble(&x, &v_old, q_old, dt) {
                Ok(a) => a,
                Err(_) => return Ok(None),
            };
            let res = r.amax();
            if res <= cfg.newton_tol {
                return Ok(Some((x, devs, iteration, res)));
            }
        }
    }
    Ok(None)
}

/// Times where `v` crosses `level` upward after `t_from`, by linear
/// interpolation.
fn rising_crossings(t: &[f64], v: &[f64], level: f64, t_from: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..t.len() {
        if t[k - 1] < t_from {
            continue;
        }
        let (a, b) = (v[k - 1] - level, v[k] - level);
        if a < 0.0 && b >= 0.0 {
            out.push(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
        }
    }
    out
}

/// Trapezoidal integral of `y` over `[t0, t1]` with linear interpolation at
/// the ends.
fn integrate(t: &[f64], y: &[f64], t0: f64, t1: f64) -> f64 {
    let at = |x: f64| -> f64 {
        let k = t.partition_point(|&s| s < x).clamp(1, t.len() - 1);
        let w = (x - t[k - 1]) / (t[k] - t[k - 1]);
        y[k - 1] + w * (y[k] - y[k - 1])
    };
    let mut total = 0.0;
    let mut prev = (t0, at(t0));
    for k in 0..t.len() {
        if t[k] <= t0 {
            continue;
        }
        if t[k] >= t1 {
            break;
        }
        total += 0.5 * (prev.1 + y[k]) * (t[k] - prev.0);
        prev = (t[k], y[k]);
    }
    total + 0.5 * (prev.1 + at(t1)) * (t1 - prev.0)
}

/// Period, stage delay and supply energy per cycle from the settled part
/// of a trace (the first 30% of the run is discarded).
pub fn ro_metrics(trace: &TransientTrace, ro: &RingOscillator) -> Result<RoMetrics> {
    let t_end = *trace
        .t
        .last()
        .ok_or_else(|| Error::NoOscillation("empty trace".into()))?;
    let v_dd = ro.inverter.v_dd;
    let rising = rising_crossings(&trace.t, &trace.v_nodes[0], 0.5 * v_dd, SETTLE_FRACTION * t_end);
    if rising.len() < 2 {
        return Err(Error::NoOscillation(format!(
            "{} settled rising crossings of node 0",
            rising.len()
        )));
    }
    let cycles = rising.len() - 1;
    let (t0, t1) = (rising[0], rising[cycles]);
    let period = (t1 - t0) / cycles as f64;
    let energy = v_dd * integrate(&trace.t, &trace.i_vdd, t0, t1);
    Ok(RoMetrics {
        period,
        delay_per_stage: period / (2.0 * ro.stages as f64),
        energy_per_cycle: energy / cycles as f64,
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fet::Polarity;
    use crate::nc_device::Transistor;
    use crate::presets;

    fn ring(v_dd: f64) -> RingOscillator {
        let inv = Inverter::new(
            Transistor::Conventional(presets::fet(Polarity::N).unwrap()),
            Transistor::Conventional(presets::fet(Polarity::P).unwrap()),
            v_dd,
        )
        .unwrap();
        RingOscillator::new(presets::STAGES, presets::C_WIRE, inv).unwrap()
    }

    #[test]
    fn construction_checks() {
        let inv = ring(0.7).inverter;
        assert!(RingOscillator::new(4, 3e-15, inv).is_err());
        assert!(RingOscillator::new(1, 3e-15, inv).is_err());
        assert!(RingOscillator::new(5, 0.0, inv).is_err());
        let mut cfg = TransientConfig::for_ring(&ring(0.7)).unwrap();
        assert!(cfg.validate().is_ok());
        cfg.dt_min = 2.0 * cfg.dt_max;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn conventional_ring_oscillates_with_balanced_charge() {
        let ro = ring(0.7);
        let cfg = TransientConfig::for_ring(&ro).unwrap();
        let tr = ro_transient(&ro, &cfg).unwrap();
        assert!(tr.residual.iter().all(|&r| r <= cfg.newton_tol));
        assert!(tr.q_fe.is_empty());
        let m = ro_metrics(&tr, &ro).unwrap();
        assert!(m.cycles >= 10);
        assert!(m.energy_per_cycle > 0.0);
        assert!((m.delay_per_stage * 2.0 * ro.stages as f64 - m.period).abs() < 1e-24);
        // node voltages repeat after one period: no net charge per cycle
        let t_end = *tr.t.last().unwrap();
        let t0 = 0.5 * t_end;
        let at = |series: &[f64], t: f64| {
            let k = tr.t.partition_point(|&x| x < t).max(1);
            let (ta, tb) = (tr.t[k - 1], tr.t[k]);
            series[k - 1] + (series[k] - series[k - 1]) * (t - ta) / (tb - ta)
        };
        for node in &tr.v_nodes {
            let dv = at(node, t0 + m.period) - at(node, t0);
            assert!(dv.abs() < 0.01 * 0.7, "{dv}");
        }
    }

    #[test]
    fn metrics_of_synthetic_trace() {
        let ro = ring(1.0);
        let period = 1e-9;
        let n = 20_000;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * 10.0 * period / n as f64).collect();
        let v0: Vec<f64> = t
            .iter()
            .map(|&x| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * x / period).sin())
            .collect();
        let tr = TransientTrace {
            v_nodes: vec![v0; ro.stages],
            q_fe: Vec::new(),
            i_vdd: vec![2e-6; t.len()],
            residual: vec![0.0; t.len()],
            t,
        };
        let m = ro_metrics(&tr, &ro).unwrap();
        assert!((m.period / period - 1.0).abs() < 1e-9);
        assert!((m.energy_per_cycle / (1.0 * 2e-6 * period) - 1.0).abs() < 1e-9);
        assert_eq!(m.cycles, 6);
        let flat = TransientTrace {
            v_nodes: vec![vec![0.2; tr.t.len()]; ro.stages],
            ..tr
        };
        assert!(matches!(ro_metrics(&flat, &ro), Err(Error::NoOscillation(_))));
    }
}
