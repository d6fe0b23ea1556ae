use std::fmt;

use rayon::prelude::*;

use super::ring::{ro_metrics, ro_transient, RingOscillator, TransientConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDelayRow {
    pub v_dd: f64,
    pub delay_per_stage: f64,
    pub energy_per_cycle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Conventional,
    NegativeCapacitance,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Conventional => "conventional",
            Variant::NegativeCapacitance => "nc",
        })
    }
}

/// Runs both rings at every supply voltage. `config` gives the transient
/// settings for a ring at its supply voltage. Rows come back sorted by
/// `v_dd`.
pub fn energy_delay_sweep<F>(
    conventional: &RingOscillator,
    nc: &RingOscillator,
    v_dd_list: &[f64],
    config: F,
) -> Result<(Vec<EnergyDelayRow>, Vec<EnergyDelayRow>)>
where
    F: Fn(&RingOscillator) -> Result<TransientConfig> + Sync,
{
    if v_dd_list.is_empty() {
        return Err(Error::InvalidInput("energy-delay sweep needs at least one v_dd".into()));
    }
    if let Some(v) = v_dd_list.iter().find(|&&v| !(v > 0.2)) {
        return Err(Error::InvalidInput(format!(
            "supply voltages must exceed 0.2 V, got {v}"
        )));
    }
    let mut v_dd: Vec<f64> = v_dd_list.to_vec();
    v_dd.sort_by(f64::total_cmp);
    let jobs: Vec<(Variant, f64)> = v_dd
        .iter()
        .flat_map(|&v| [(Variant::Conventional, v), (Variant::NegativeCapacitance, v)])
        .collect();
    let rows: Vec<(Variant, EnergyDelayRow)> = jobs
        .par_iter()
        .map(|&(variant, v)| {
            let template = match variant {
                Variant::Conventional => conventional,
                Variant::NegativeCapacitance => nc,
            };
            let mut ro = *template;
            ro.inverter.v_dd = v;
            let run = || -> Result<EnergyDelayRow> {
                let cfg = config(&ro)?;
                let trace = ro_transient(&ro, &cfg)?;
                let m = ro_metrics(&trace, &ro)?;
                Ok(EnergyDelayRow {
                    v_dd: v,
                    delay_per_stage: m.delay_per_stage,
                    energy_per_cycle: m.energy_per_cycle,
                })
            };
            run()
                .map(|r| (variant, r))
                .map_err(|e| e.context(format!("{variant} ring at v_dd = {v} V")))
        })
        .collect::<Result<_>>()?;
    let pick =
        |variant: Variant| -> Vec<EnergyDelayRow> { rows.iter().filter(|r| r.0 == variant).map(|r| r.1).collect() };
    Ok((pick(Variant::Conventional), pick(Variant::NegativeCapacitance)))
}

/// Energy at `delay` by log-log interpolation along a curve.
fn energy_at(rows: &[EnergyDelayRow], delay: f64) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.delay_per_stage.ln(), r.energy_per_cycle.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (a.0.exp(), b.0.exp()),
        _ => {
            return Err(Error::OutOfRange {
                value: delay,
                lo: f64::NAN,
                hi: f64::NAN,
            })
        }
    };
    let slack = 1e-9 * (hi.ln() - lo.ln()).abs().max(1.0);
    let x = delay.ln();
    if !(x >= lo.ln() - slack && x <= hi.ln() + slack) {
        return Err(Error::OutOfRange { value: delay, lo, hi });
    }
    let x = x.clamp(lo.ln(), hi.ln());
    if pts.len() == 1 {
        return Ok(pts[0].1.exp());
    }
    let w = pts
        .windows(2)
        .find(|w| w[0].0 <= x && x <= w[1].0)
        .ok_or(Error::OutOfRange { value: delay, lo, hi })?;
    let y = if w[1].0 == w[0].0 {
        w[0].1
    } else {
        w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0)
    };
    Ok(y.exp())
}

/// Fractional energy saving `1 − E_nc/E_conv` at equal stage delay.
pub fn iso_delay_reduction(conventional: &[EnergyDelayRow], nc: &[EnergyDelayRow], target_delay: f64) -> Result<f64> {
    Ok(1.0 - energy_at(nc, target_delay)? / energy_at(conventional, target_delay)?)
}

/// Longest stage delay covered by both curves.
pub fn longest_common_delay(conventional: &[EnergyDelayRow], nc: &[EnergyDelayRow]) -> Option<f64> {
    let max = |rows: &[EnergyDelayRow]| rows.iter().map(|r| r.delay_per_stage).reduce(f64::max);
    let min = |rows: &[EnergyDelayRow]| rows.iter().map(|r| r.delay_per_stage).reduce(f64::min);
    let hi = max(conventional)?.min(max(nc)?);
    let lo = min(conventional)?.max(min(nc)?);
    (lo <= hi).then_some(hi)
}
