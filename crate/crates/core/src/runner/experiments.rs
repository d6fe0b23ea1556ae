//! Experiment orchestration: each kind runs its solvers and writes CSV
//! tables plus a manifest into the output directory.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::table::{format_number, write_csv, Cell, Table};
use crate::analysis::{self, HYSTERESIS_WINDOW};
use crate::circuits::{
    energy_delay_sweep, inverter_vtc, iso_delay_reduction, longest_common_delay, ro_metrics, ro_transient, vtc_metrics,
    EnergyDelayRow, Inverter, TransientTrace, Variant, VtcRow,
};
use crate::error::{Error, Result};
use crate::fet::{Polarity, DIBL_LIN_VDS};
use crate::nc_device::{attractor_estimate, critical_area, Direction, SweepTable, SweepWindow, Transistor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SCurve,
    IdVg,
    IdVd,
    Attractor,
    CriticalArea,
    InverterVtc,
    RoTransient,
    EnergyDelay,
    DeviceMetrics,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::SCurve,
        ExperimentKind::IdVg,
        ExperimentKind::IdVd,
        ExperimentKind::Attractor,
        ExperimentKind::CriticalArea,
        ExperimentKind::InverterVtc,
        ExperimentKind::RoTransient,
        ExperimentKind::EnergyDelay,
        ExperimentKind::DeviceMetrics,
    ];

    /// Subcommand name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SCurve => "s-curve",
            ExperimentKind::IdVg => "idvg",
            ExperimentKind::IdVd => "idvd",
            ExperimentKind::Attractor => "attractor",
            ExperimentKind::CriticalArea => "critical-area",
            ExperimentKind::InverterVtc => "inverter-vtc",
            ExperimentKind::RoTransient => "ro-transient",
            ExperimentKind::EnergyDelay => "energy-delay",
            ExperimentKind::DeviceMetrics => "metrics",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown experiment `{s}`")))
    }
}

/// What an experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub kind: ExperimentKind,
    /// File names (relative to the output directory) with data row counts.
    pub files: Vec<(String, usize)>,
    /// Scalar results, also listed in the manifest.
    pub results: Vec<(String, f64)>,
    pub all_converged: bool,
}

pub const MANIFEST: &str = "manifest.toml";

struct Output {
    tables: Vec<(String, Table)>,
    results: Vec<(String, f64)>,
    converged: bool,
}

impl Output {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            results: Vec::new(),
            converged: true,
        }
    }

    fn table(&mut self, name: impl Into<String>, t: Table) {
        self.tables.push((name.into(), t));
    }

    fn result(&mut self, name: &str, v: f64) {
        self.results.push((name.to_string(), v));
    }
}

/// Runs `kind` and writes its tables and the manifest into
/// `cfg.output.dir`.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<RunReport> {
    let out = match kind {
        ExperimentKind::SCurve => s_curve(cfg),
        ExperimentKind::IdVg => idvg(cfg),
        ExperimentKind::IdVd => idvd(cfg),
        ExperimentKind::Attractor => attractor(cfg),
        ExperimentKind::CriticalArea => critical(cfg),
        ExperimentKind::InverterVtc => vtc(cfg),
        ExperimentKind::RoTransient => ro(cfg),
        ExperimentKind::EnergyDelay => energy_delay(cfg),
        ExperimentKind::DeviceMetrics => metrics(cfg),
    }
    .map_err(|e| e.context(format!("{kind} experiment")))?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    for (name, table) in &out.tables {
        write_csv(table, &dir.join(name), cfg.output.precision)?;
        files.push((name.clone(), table.rows.len()));
    }
    let report = RunReport {
        kind,
        files,
        results: out.results,
        all_converged: out.converged,
    };
    write_manifest(&dir.join(MANIFEST), &report, cfg)?;
    Ok(report)
}

fn write_manifest(path: &Path, report: &RunReport, cfg: &ExperimentConfig) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "experiment = \"{}\"", report.kind);
    let _ = writeln!(s, "all_converged = {}", report.all_converged);
    for (name, rows) in &report.files {
        let _ = writeln!(s, "\n[[file]]\nname = \"{name}\"\nrows = {rows}");
    }
    let _ = writeln!(s, "\n[results]");
    for (name, v) in &report.results {
        let _ = writeln!(s, "{name} = {}", format_number(*v, cfg.output.precision));
    }
    let _ = writeln!(s, "\n[config]\ntext = '''\n{}'''", cfg.echo());
    std::fs::write(path, s).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn label(v: f64) -> String {
    format!("{v}")
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Up => "up",
        Direction::Down => "down",
    }
}

fn sweep_table(t: &SweepTable) -> Table {
    let mut out = Table::new(&[
        "v_gs_V",
        "v_ds_V",
        "i_ds_A",
        "v_int_V",
        "v_fe_V",
        "q_C",
        "p_C_per_m2",
        "quadrant",
        "mode",
        "branch",
        "iterations",
    ]);
    for r in &t.rows {
        let (quadrant, mode, branch) = match r.region {
            Some(g) => (g.quadrant.to_string(), g.mode.to_string(), g.branch.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        out.push(vec![
            r.v_gs.into(),
            r.v_ds.into(),
            r.i_ds.into(),
            r.v_int.into(),
            r.v_fe.into(),
            r.q.into(),
            r.p.into(),
            quadrant.into(),
            mode.into(),
            branch.into(),
            r.iterations.into(),
        ]);
    }
    out
}

fn all_converged(t: &SweepTable) -> bool {
    t.rows.iter().all(|r| r.converged)
}

fn s_curve(cfg: &ExperimentConfig) -> Result<Output> {
    let lk = cfg.lk_model(cfg.ferro.a_fe_nm2)?;
    let p_r = lk.coeffs.remnant_polarization();
    let rows = lk.s_curve_table(-2.0 * p_r, 2.0 * p_r, 401)?;
    let mut t = Table::new(&[
        "p_C_per_m2",
        "q_C",
        "e_V_per_m",
        "v_fe_V",
        "c_fe_F",
        "quadrant",
        "mode",
        "branch",
    ]);
    for r in &rows {
        t.push(vec![
            r.p.into(),
            r.q.into(),
            r.e.into(),
            r.v_fe.into(),
            r.c_fe.into(),
            r.region.quadrant.to_string().into(),
            r.region.mode.to_string().into(),
            r.region.branch.to_string().into(),
        ]);
    }
    let mut out = Output::new();
    out.table("s_curve.csv", t);
    out.result("p_r_C_per_m2", p_r);
    out.result("e_c_V_per_m", lk.coeffs.coercive_field());
    Ok(out)
}

/// A device under test with its file label.
struct Dut {
    name: String,
    device: Transistor,
}

fn family(cfg: &ExperimentConfig, areas: &[f64]) -> Result<Vec<Dut>> {
    let mut duts = vec![Dut {
        name: "conventional".into(),
        device: Transistor::Conventional(cfg.fet(Polarity::N)?),
    }];
    for &a in areas {
        duts.push(Dut {
            name: format!("a{}", label(a)),
            device: Transistor::NegativeCapacitance(cfg.nc_fet(Polarity::N, a)?),
        });
    }
    Ok(duts)
}

const METRICS_HEADER: [&str; 7] = [
    "device",
    "ss_mV_dec",
    "v_t_V",
    "dibl_mV_V",
    "hysteresis_V",
    "i_on_A",
    "i_off_A",
];

/// Metrics row and convergence of one device.
fn device_metrics_row(cfg: &ExperimentConfig, dut: &Dut, window: &SweepWindow) -> Result<(Vec<Cell>, bool)> {
    let v_dd = cfg.circuit.v_dd;
    let i_crit = dut.device.fet().geom.vt_criterion_current();
    let (pair, lin) = rayon::join(
        || dut.device.sweep_idvg_pair(window, v_dd),
        || dut.device.sweep_idvg(window, DIBL_LIN_VDS, Direction::Up),
    );
    let ((up, down), lin) = (pair?, lin?);
    let m = analysis::device_metrics(&up, &down, &lin, v_dd, i_crit)
        .map_err(|e| e.context(format!("metrics of {}", dut.name)))?;
    let ok = all_converged(&up) && all_converged(&down) && all_converged(&lin);
    Ok((
        vec![
            dut.name.clone().into(),
            m.ss_min.into(),
            m.v_t.into(),
            m.dibl.into(),
            m.hysteresis.into(),
            m.i_on.into(),
            m.i_off.into(),
        ],
        ok,
    ))
}

fn metrics_table(cfg: &ExperimentConfig, duts: &[Dut], window: &SweepWindow) -> Result<(Table, bool)> {
    let rows: Vec<(Vec<Cell>, bool)> = duts
        .par_iter()
        .map(|d| device_metrics_row(cfg, d, window))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&METRICS_HEADER);
    let mut ok = true;
    for (row, c) in rows {
        t.push(row);
        ok &= c;
    }
    Ok((t, ok))
}

fn idvg(cfg: &ExperimentConfig) -> Result<Output> {
    let window = cfg.gate_window()?;
    let duts = family(cfg, &cfg.ferro.a_fe_list)?;
    let mut jobs = Vec::new();
    for d in &duts {
        for &v_ds in &cfg.sweep.v_ds_list {
            for &dir in &cfg.sweep.directions {
                jobs.push((d, v_ds, dir));
            }
        }
    }
    let tables: Vec<(String, SweepTable)> = jobs
        .par_iter()
        .map(|&(d, v_ds, dir)| {
            let t = d.device.sweep_idvg(&window, v_ds, dir)?;
            let name = format!("idvg_{}_vds{}_{}.csv", d.name, label(v_ds), direction_name(dir));
            Ok((name, t))
        })
        .collect::<Result<_>>()?;
    let mut out = Output::new();
    for (name, t) in &tables {
        out.converged &= all_converged(t);
        out.table(name.clone(), sweep_table(t));
    }
    let (m, ok) = metrics_table(cfg, &duts, &window)?;
    out.converged &= ok;
    out.table("metrics.csv", m);
    Ok(out)
}

fn idvd(cfg: &ExperimentConfig) -> Result<Output> {
    let v_dd = cfg.circuit.v_dd;
    let window = SweepWindow::new(0.0, v_dd, cfg.sweep.step)?;
    let duts = family(cfg, &[cfg.ferro.a_fe_nm2])?;
    let mut jobs = Vec::new();
    for d in &duts {
        for &v_gs in &cfg.sweep.v_gs_list {
            jobs.push((d, v_gs));
        }
    }
    let tables: Vec<(&Dut, f64, SweepTable)> = jobs
        .par_iter()
        .map(|&(d, v_gs)| Ok((d, v_gs, d.device.sweep_idvd(&window, v_gs)?)))
        .collect::<Result<_>>()?;
    let mut out = Output::new();
    let mut ndr = Table::new(&["device", "v_gs_V", "v_ds_start_V", "v_ds_stop_V"]);
    let mut sat = Table::new(&["device", "v_gs_V", "gds_ratio", "saturates"]);
    for (d, v_gs, t) in &tables {
        out.converged &= all_converged(t);
        out.table(format!("idvd_{}_vgs{}.csv", d.name, label(*v_gs)), sweep_table(t));
        for (a, b) in analysis::detect_ndr(t) {
            ndr.push(vec![d.name.clone().into(), (*v_gs).into(), a.into(), b.into()]);
        }
        let s = analysis::saturation_check(t, v_dd)?;
        sat.push(vec![
            d.name.clone().into(),
            (*v_gs).into(),
            s.gds_ratio.into(),
            s.saturates.into(),
        ]);
    }
    out.table("ndr.csv", ndr);
    out.table("saturation.csv", sat);
    Ok(out)
}

fn attractor(cfg: &ExperimentConfig) -> Result<Output> {
    let window = cfg.gate_window()?;
    let areas = &cfg.ferro.a_fe_list;
    let v_ds = cfg.sweep.v_ds_list[0];
    let base = cfg.nc_fet(Polarity::N, areas[0])?;
    let r = attractor_estimate(&base.fet, &base.lk, areas, v_ds, &window)?;
    let mut summary = Table::new(&["v_ds_V", "v_a_V", "spread_V", "q_zero_V"]);
    summary.push(vec![v_ds.into(), r.v_a.into(), r.spread.into(), r.q_zero_v.into()]);
    let mut crossings = Table::new(&["a_fe_a_nm2", "a_fe_b_nm2", "v_cross_V"]);
    for (w, &v) in areas.windows(2).zip(&r.crossings) {
        crossings.push(vec![w[0].into(), w[1].into(), v.into()]);
    }
    let mut out = Output::new();
    out.table("attractor.csv", summary);
    out.table("crossings.csv", crossings);
    out.result("v_a_V", r.v_a);
    out.result("spread_V", r.spread);
    Ok(out)
}

fn critical(cfg: &ExperimentConfig) -> Result<Output> {
    let window = cfg.gate_window()?;
    let v_ds = cfg.sweep.v_ds_list[0];
    let template = cfg.nc_fet(Polarity::N, cfg.ferro.a_fe_nm2)?;
    let a = critical_area(
        &template,
        cfg.ferro.critical_lo_nm2,
        cfg.ferro.critical_hi_nm2,
        v_ds,
        &window,
        HYSTERESIS_WINDOW,
    )?;
    let mut t = Table::new(&["v_ds_V", "a_crit_nm2"]);
    t.push(vec![v_ds.into(), a.into()]);
    let mut out = Output::new();
    out.table("critical_area.csv", t);
    out.result("a_crit_nm2", a);
    Ok(out)
}

fn vtc_table(up: &[VtcRow], down: &[VtcRow]) -> Table {
    let mut t = Table::new(&["v_in_V", "v_out_up_V", "v_out_down_V"]);
    for (u, d) in up.iter().zip(down.iter().rev()) {
        t.push(vec![u.v_in.into(), u.v_out.into(), d.v_out.into()]);
    }
    t
}

fn vtc(cfg: &ExperimentConfig) -> Result<Output> {
    let v_dd = cfg.circuit.v_dd;
    let window = SweepWindow::new(0.0, v_dd, cfg.sweep.step)?;
    let variants: [(Variant, Inverter); 2] = [
        (Variant::Conventional, cfg.conventional_inverter(v_dd)?),
        (Variant::NegativeCapacitance, cfg.nc_inverter(v_dd)?),
    ];
    let runs: Vec<(Variant, Vec<VtcRow>, Vec<VtcRow>)> = variants
        .par_iter()
        .map(|(v, inv)| {
            let up = inverter_vtc(inv, &window, Direction::Up)?;
            let down = inverter_vtc(inv, &window, Direction::Down)?;
            Ok((*v, up, down))
        })
        .collect::<Result<_>>()?;
    let mut out = Output::new();
    let mut summary = Table::new(&["variant", "gain_max", "v_m_V", "nm_h_V", "nm_l_V", "hysteresis_V"]);
    let mut gains = Vec::new();
    for (v, up, down) in &runs {
        out.converged &= up.iter().chain(down.iter()).all(|r| r.converged);
        let m = vtc_metrics(up, down, v_dd).map_err(|e| e.context(format!("{v} inverter")))?;
        gains.push(m.gain_max);
        summary.push(vec![
            v.to_string().into(),
            m.gain_max.into(),
            m.v_m.into(),
            m.nm_h.into(),
            m.nm_l.into(),
            m.vtc_hysteresis.into(),
        ]);
        out.table(format!("vtc_{v}.csv"), vtc_table(up, down));
    }
    out.table("vtc_metrics.csv", summary);
    out.result("gain_ratio", gains[1] / gains[0]);
    Ok(out)
}

fn trace_table(tr: &TransientTrace) -> Table {
    let mut header = vec!["t_s".to_string()];
    header.extend((0..tr.v_nodes.len()).map(|k| format!("v_node{k}_V")));
    header.extend((0..tr.q_fe.len()).map(|k| format!("q_dev{k}_C")));
    header.push("i_vdd_A".into());
    let mut t = Table {
        header,
        rows: Vec::with_capacity(tr.t.len()),
    };
    for i in 0..tr.t.len() {
        let mut row: Vec<Cell> = vec![tr.t[i].into()];
        row.extend(tr.v_nodes.iter().map(|s| Cell::Num(s[i])));
        row.extend(tr.q_fe.iter().map(|s| Cell::Num(s[i])));
        row.push(tr.i_vdd[i].into());
        t.rows.push(row);
    }
    t
}

fn ro(cfg: &ExperimentConfig) -> Result<Output> {
    let v_dd = cfg.circuit.v_dd;
    let rings = [
        (Variant::Conventional, cfg.ring(cfg.conventional_inverter(v_dd)?)?),
        (Variant::NegativeCapacitance, cfg.ring(cfg.nc_inverter(v_dd)?)?),
    ];
    let runs: Vec<(Variant, TransientTrace, crate::circuits::RoMetrics)> = rings
        .par_iter()
        .map(|(v, ro)| {
            let tc = cfg.transient_for(ro)?;
            let tr = ro_transient(ro, &tc).map_err(|e| e.context(format!("{v} ring")))?;
            let m = ro_metrics(&tr, ro).map_err(|e| e.context(format!("{v} ring")))?;
            Ok((*v, tr, m))
        })
        .collect::<Result<_>>()?;
    let mut out = Output::new();
    let mut summary = Table::new(&["variant", "v_dd_V", "period_s", "delay_s", "energy_J", "cycles"]);
    for (v, tr, m) in &runs {
        summary.push(vec![
            v.to_string().into(),
            v_dd.into(),
            m.period.into(),
            m.delay_per_stage.into(),
            m.energy_per_cycle.into(),
            m.cycles.into(),
        ]);
        out.table(format!("trace_{v}.csv"), trace_table(tr));
    }
    out.table("ro_metrics.csv", summary);
    Ok(out)
}

fn energy_delay(cfg: &ExperimentConfig) -> Result<Output> {
    let v = cfg.circuit.v_dd;
    let conv = cfg.ring(cfg.conventional_inverter(v)?)?;
    let nc = cfg.ring(cfg.nc_inverter(v)?)?;
    let (c_rows, n_rows) = energy_delay_sweep(&conv, &nc, &cfg.circuit.v_dd_list, |ro| cfg.transient_for(ro))?;
    let mut t = Table::new(&["v_dd_V", "delay_s", "energy_J", "variant"]);
    let mut push = |rows: &[EnergyDelayRow], variant: Variant| {
        for r in rows {
            t.push(vec![
                r.v_dd.into(),
                r.delay_per_stage.into(),
                r.energy_per_cycle.into(),
                variant.to_string().into(),
            ]);
        }
    };
    push(&c_rows, Variant::Conventional);
    push(&n_rows, Variant::NegativeCapacitance);
    let mut out = Output::new();
    out.table("energy_delay.csv", t);
    let mut iso = Table::new(&["delay_s", "reduction"]);
    if let Some(d) = longest_common_delay(&c_rows, &n_rows) {
        let r = iso_delay_reduction(&c_rows, &n_rows, d)?;
        iso.push(vec![d.into(), r.into()]);
        out.result("iso_delay_s", d);
        out.result("iso_delay_reduction", r);
    }
    out.table("iso_delay.csv", iso);
    Ok(out)
}

fn metrics(cfg: &ExperimentConfig) -> Result<Output> {
    let window = cfg.gate_window()?;
    let duts = family(cfg, &[cfg.ferro.a_fe_nm2])?;
    let (m, ok) = metrics_table(cfg, &duts, &window)?;
    let mut out = Output::new();
    out.converged = ok;
    out.table("metrics.csv", m);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::parse_config;

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("fig3".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn s_curve_run_writes_table_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let set = format!("output.dir={}", toml::Value::String(dir.path().display().to_string()));
        let cfg = parse_config("", &[set]).unwrap();
        let report = run_experiment(&cfg, ExperimentKind::SCurve).unwrap();
        assert_eq!(report.files, vec![("s_curve.csv".to_string(), 401)]);
        assert!(report.all_converged);
        let text = std::fs::read_to_string(dir.path().join("s_curve.csv")).unwrap();
        assert!(text.starts_with("p_C_per_m2,q_C,e_V_per_m,v_fe_V,c_fe_F,quadrant,mode,branch\n"));
        let manifest: toml::Table = std::fs::read_to_string(dir.path().join(MANIFEST))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(manifest["experiment"].as_str(), Some("s-curve"));
        let echo = manifest["config"]["text"].as_str().unwrap();
        assert!(parse_config(echo, &[]).unwrap().same_settings(&cfg));
    }
}
