//! Experiment configuration: a TOML file with the sections `[ferro]`,
//! `[fet.n]`, `[fet.p]`, `[circuit]`, `[sweep]`, `[transient]` and
//! `[output]`. Values are kept in the units the keys name (nm, nm², eV,
//! fF, µC/cm², MV/cm, ns, ps, fs); conversion to SI happens when models are
//! built, so the echoed file reproduces the config exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::circuits::{Inverter, RingOscillator, TransientConfig};
use crate::error::{Error, Result};
use crate::ferroelectric::{calibrate_lk, FerroGeometry, LkModel};
use crate::fet::{calibrate_fet, FetGeometry, FetParams, FetTargets, Polarity};
use crate::nc_device::{Direction, NcFet, SweepWindow, Transistor};
use crate::presets;
use crate::units::{FF, FS, MV_PER_CM, NM, NM2, NS, PS, UC_PER_CM2};

/// Where a config value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Set in the config file.
    File,
    /// Set with a `--set` override.
    Override,
    /// Built-in default that reproduces a published device value.
    Published,
    /// Built-in default chosen by this tool.
    Default,
}

impl Source {
    fn tag(self) -> &'static str {
        match self {
            Source::File => "file",
            Source::Override => "set",
            Source::Published => "published",
            Source::Default => "default",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FerroConfig {
    pub p_r_uc_cm2: f64,
    pub e_c_mv_cm: f64,
    pub gamma: f64,
    /// Ω·m.
    pub rho: f64,
    pub t_fe_nm: f64,
    /// Film area of single-device experiments.
    pub a_fe_nm2: f64,
    /// Film areas of family experiments.
    pub a_fe_list: Vec<f64>,
    /// Search bracket of the critical-area experiment.
    pub critical_lo_nm2: f64,
    pub critical_hi_nm2: f64,
}

/// Surrogate parameters: either calibration targets or explicit values.
#[derive(Debug, Clone, PartialEq)]
pub enum FetModelConfig {
    Targets {
        i_off_a: f64,
        i_on_a: f64,
        ss_mv_dec: f64,
        dibl_mv_v: f64,
        v_dd: f64,
    },
    Explicit {
        v_t0_v: f64,
        n_slope: f64,
        sigma_dibl: f64,
        i_sp_a: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetConfig {
    pub model: FetModelConfig,
    /// Work function of the conventional device.
    pub wf_ev: f64,
    /// Work function of the NC device.
    pub nc_wf_ev: f64,
    pub wf_ref_ev: f64,
    pub r_sd_ohm: f64,
    pub l_g_nm: f64,
    pub d_nw_nm: f64,
    pub eot_nm: f64,
    pub l_ov_nm: f64,
    pub n_wires: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitConfig {
    pub stages: usize,
    pub c_wire_ff: f64,
    pub v_dd: f64,
    pub v_dd_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub v_gs_start: f64,
    pub v_gs_stop: f64,
    pub step: f64,
    /// Drain biases of transfer sweeps.
    pub v_ds_list: Vec<f64>,
    /// Gate biases of output sweeps.
    pub v_gs_list: Vec<f64>,
    pub directions: Vec<Direction>,
}

/// Transient settings; unset step and stop times scale with the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientSettings {
    pub t_stop_ns: Option<f64>,
    pub dt_init_ps: Option<f64>,
    pub dt_min_fs: Option<f64>,
    pub dt_max_ps: Option<f64>,
    pub newton_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub precision: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ferro: FerroConfig,
    pub fet_n: FetConfig,
    pub fet_p: FetConfig,
    pub circuit: CircuitConfig,
    pub sweep: SweepConfig,
    pub transient: TransientSettings,
    pub output: OutputConfig,
    /// Source of every key, by dotted name.
    pub sources: BTreeMap<String, Source>,
}

const SECTIONS: [&str; 8] = [
    "ferro",
    "fet",
    "fet.n",
    "fet.p",
    "circuit",
    "sweep",
    "transient",
    "output",
];

/// Reads `path` and applies `overrides` (`KEY=VALUE` with dotted keys).
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

/// Parses config text and applies `overrides`.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
    let mut overridden = Vec::new();
    for o in overrides {
        let key = apply_override(&mut table, o)?;
        overridden.push(key);
    }
    let mut r = Reader {
        table,
        sources: BTreeMap::new(),
        overridden,
    };
    let cfg = r.read()?;
    r.reject_unknown()?;
    let cfg = ExperimentConfig {
        sources: r.sources,
        ..cfg
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let offset = e.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map(|l| l.chars().count()).unwrap_or(0) + 1;
    Error::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<String> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| Error::Validation {
        key: spec.to_string(),
        constraint: "override must look like KEY=VALUE".into(),
    })?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Validation {
            key: key.to_string(),
            constraint: "override key must be SECTION.KEY".into(),
        });
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| Error::Validation {
            key: key.to_string(),
            constraint: format!("`{part}` is not a section"),
        })?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(key.to_string())
}

struct Reader {
    table: toml::Table,
    sources: BTreeMap<String, Source>,
    overridden: Vec<String>,
}

impl Reader {
    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        let mut parts = key.split('.').peekable();
        let mut node = &self.table;
        while let Some(part) = parts.next() {
            let v = node.get(part)?;
            if parts.peek().is_none() {
                return Some(v);
            }
            node = v.as_table()?;
        }
        None
    }

    fn take(&mut self, key: &str) -> Option<toml::Value> {
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop()?;
        let mut node = &mut self.table;
        for part in parts {
            node = node.get_mut(part)?.as_table_mut()?;
        }
        let v = node.remove(last)?;
        let src = if self.overridden.iter().any(|o| o == key) {
            Source::Override
        } else {
            Source::File
        };
        self.sources.insert(key.to_string(), src);
        Some(v)
    }

    fn mark(&mut self, key: &str, src: Source) {
        self.sources.insert(key.to_string(), src);
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(x)),
            Some(toml::Value::Integer(i)) => Ok(Some(i as f64)),
            Some(_) => Err(invalid(key, "must be a number")),
        }
    }

    fn f64_or(&mut self, key: &str, default: f64, src: Source) -> Result<f64> {
        match self.f64_opt(key)? {
            Some(x) => Ok(x),
            None => {
                self.mark(key, src);
                Ok(default)
            }
        }
    }

    fn int_or(&mut self, key: &str, default: i64, src: Source) -> Result<i64> {
        match self.take(key) {
            None => {
                self.mark(key, src);
                Ok(default)
            }
            Some(toml::Value::Integer(i)) => Ok(i),
            Some(_) => Err(invalid(key, "must be an integer")),
        }
    }

    fn list_opt(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(x) => Ok(*x),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(invalid(key, "must be a list of numbers")),
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
            Some(toml::Value::Float(x)) => Ok(Some(vec![x])),
            Some(toml::Value::Integer(i)) => Ok(Some(vec![i as f64])),
            Some(_) => Err(invalid(key, "must be a list of numbers")),
        }
    }

    fn list_or(&mut self, key: &str, default: &[f64], src: Source) -> Result<Vec<f64>> {
        match self.list_opt(key)? {
            Some(v) => Ok(v),
            None => {
                self.mark(key, src);
                Ok(default.to_vec())
            }
        }
    }

    fn read(&mut self) -> Result<ExperimentConfig> {
        use Source::{Default as D, Published as P};
        let ferro = FerroConfig {
            p_r_uc_cm2: self.f64_or("ferro.p_r_uC_cm2", presets::P_R / UC_PER_CM2, D)?,
            e_c_mv_cm: self.f64_or("ferro.e_c_MV_cm", presets::E_C / MV_PER_CM, D)?,
            gamma: self.f64_or("ferro.gamma", presets::GAMMA, D)?,
            rho: self.f64_or("ferro.rho", presets::RHO, D)?,
            t_fe_nm: self.f64_or("ferro.t_fe_nm", presets::T_FE / NM, D)?,
            a_fe_nm2: self.f64_or("ferro.a_fe_nm2", presets::A_FE_NM2, D)?,
            a_fe_list: self.list_or("ferro.a_fe_list", &presets::A_FE_FAMILY_NM2, P)?,
            critical_lo_nm2: self.f64_or("ferro.critical_lo_nm2", 50.0, D)?,
            critical_hi_nm2: self.f64_or("ferro.critical_hi_nm2", 2000.0, D)?,
        };
        let fet_n = self.read_fet(Polarity::N)?;
        let fet_p = self.read_fet(Polarity::P)?;
        let v_dd = self.f64_or("circuit.v_dd", presets::V_DD, D)?;
        let circuit = CircuitConfig {
            stages: usize::try_from(self.int_or("circuit.stages", presets::STAGES as i64, P)?)
                .map_err(|_| invalid("circuit.stages", "must be positive"))?,
            c_wire_ff: self.f64_or("circuit.c_wire_fF", (presets::C_WIRE / FF * 1e6).round() / 1e6, P)?,
            v_dd,
            v_dd_list: self.list_or("circuit.v_dd_list", &presets::V_DD_LIST, D)?,
        };
        let v_ds_default = [v_dd];
        let sweep = SweepConfig {
            v_gs_start: self.f64_or("sweep.v_gs_start", -0.3, D)?,
            v_gs_stop: self.f64_or("sweep.v_gs_stop", 0.9, D)?,
            step: self.f64_or("sweep.step", 1e-3, D)?,
            v_ds_list: self.list_or("sweep.v_ds_list", &v_ds_default, D)?,
            v_gs_list: self.list_or("sweep.v_gs_list", &[0.1, 0.2, 0.3, 0.5, v_dd], D)?,
            directions: self.read_directions()?,
        };
        let transient = TransientSettings {
            t_stop_ns: self.f64_opt("transient.t_stop_ns")?,
            dt_init_ps: self.f64_opt("transient.dt_init_ps")?,
            dt_min_fs: self.f64_opt("transient.dt_min_fs")?,
            dt_max_ps: self.f64_opt("transient.dt_max_ps")?,
            newton_tol: self.f64_or("transient.newton_tol", 1e-9, D)?,
        };
        for key in ["t_stop_ns", "dt_init_ps", "dt_min_fs", "dt_max_ps"] {
            let full = format!("transient.{key}");
            if !self.sources.contains_key(&full) {
                self.mark(&full, D);
            }
        }
        let dir = match self.take("output.dir") {
            None => {
                self.mark("output.dir", D);
                PathBuf::from("out")
            }
            Some(toml::Value::String(s)) => PathBuf::from(s),
            Some(_) => return Err(invalid("output.dir", "must be a string")),
        };
        let precision = usize::try_from(self.int_or("output.precision", 9, D)?)
            .map_err(|_| invalid("output.precision", "must be positive"))?;
        Ok(ExperimentConfig {
            ferro,
            fet_n,
            fet_p,
            circuit,
            sweep,
            transient,
            output: OutputConfig { dir, precision },
            sources: BTreeMap::new(),
        })
    }

    fn read_directions(&mut self) -> Result<Vec<Direction>> {
        let key = "sweep.directions";
        match self.take(key) {
            None => {
                self.mark(key, Source::Default);
                Ok(vec![Direction::Up, Direction::Down])
            }
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v.as_str() {
                    Some("up") => Ok(Direction::Up),
                    Some("down") => Ok(Direction::Down),
                    _ => Err(invalid(key, "entries must be \"up\" or \"down\"")),
                })
                .collect(),
            Some(_) => Err(invalid(key, "must be a list of \"up\"/\"down\"")),
        }
    }

    fn read_fet(&mut self, polarity: Polarity) -> Result<FetConfig> {
        use Source::{Default as D, Published as P};
        let s = match polarity {
            Polarity::N => "fet.n",
            Polarity::P => "fet.p",
        };
        let k = |name: &str| format!("{s}.{name}");
        let seed = FetParams::seed(polarity, FetGeometry::default());
        let explicit_keys = ["v_t0_V", "n_slope", "sigma_dibl", "i_sp_A"];
        let target_keys = ["i_off_A", "i_on_A", "ss_mV_dec", "dibl_mV_V", "target_v_dd"];
        let has = |r: &Reader, names: &[&str]| names.iter().any(|n| r.lookup(&k(n)).is_some());
        let model = if has(self, &explicit_keys) {
            if has(self, &target_keys) {
                return Err(invalid(
                    s,
                    "give either calibration targets or explicit parameters, not both",
                ));
            }
            let mut get = |name: &str| -> Result<f64> {
                self.f64_opt(&k(name))?
                    .ok_or_else(|| invalid(&k(name), "required when explicit parameters are given"))
            };
            FetModelConfig::Explicit {
                v_t0_v: get("v_t0_V")?,
                n_slope: get("n_slope")?,
                sigma_dibl: get("sigma_dibl")?,
                i_sp_a: get("i_sp_A")?,
            }
        } else {
            let t = FetTargets::default_for(polarity);
            FetModelConfig::Targets {
                i_off_a: self.f64_or(&k("i_off_A"), t.i_off, D)?,
                i_on_a: self.f64_or(&k("i_on_A"), t.i_on, D)?,
                ss_mv_dec: self.f64_or(&k("ss_mV_dec"), t.ss_target, D)?,
                dibl_mv_v: self.f64_or(&k("dibl_mV_V"), t.dibl_target, D)?,
                v_dd: self.f64_or(&k("target_v_dd"), t.v_dd, D)?,
            }
        };
        let wf_ref_ev = self.f64_or(&k("wf_ref_eV"), seed.wf_ref, D)?;
        let wf_ev = self.f64_or(&k("wf_eV"), wf_ref_ev, D)?;
        let nc_wf_default = ((wf_ev + polarity.sign() * presets::NC_WF_SHIFT) * 1e6).round() / 1e6;
        let nc_wf_ev = self.f64_or(&k("nc_wf_eV"), nc_wf_default, D)?;
        let g = seed.geom;
        let nm = |x: f64| (x / NM * 1e6).round() / 1e6;
        Ok(FetConfig {
            model,
            wf_ev,
            nc_wf_ev,
            wf_ref_ev,
            r_sd_ohm: self.f64_or(&k("r_sd_ohm"), seed.r_sd, P)?,
            l_g_nm: self.f64_or(&k("l_g_nm"), nm(g.l_g), P)?,
            d_nw_nm: self.f64_or(&k("d_nw_nm"), nm(g.d_nw), P)?,
            eot_nm: self.f64_or(&k("eot_nm"), nm(g.eot), P)?,
            l_ov_nm: self.f64_or(&k("l_ov_nm"), nm(g.l_ov), P)?,
            n_wires: u32::try_from(self.int_or(&k("n_wires"), g.n_wires as i64, P)?)
                .map_err(|_| invalid(&k("n_wires"), "must be a positive integer"))?,
        })
    }

    fn reject_unknown(&self) -> Result<()> {
        fn walk(prefix: &str, t: &toml::Table, out: &mut Vec<String>) {
            for (k, v) in t {
                let full = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                match v {
                    toml::Value::Table(inner) if SECTIONS.contains(&full.as_str()) => walk(&full, inner, out),
                    _ => out.push(full),
                }
            }
        }
        let mut left = Vec::new();
        walk("", &self.table, &mut left);
        match left.first() {
            Some(key) => Err(invalid(key, "unknown key")),
            None => Ok(()),
        }
    }
}

fn invalid(key: &str, constraint: &str) -> Error {
    Error::Validation {
        key: key.to_string(),
        constraint: constraint.to_string(),
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, &format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    /// Built-in configuration.
    pub fn defaults() -> Result<Self> {
        parse_config("", &[])
    }

    fn validate(&self) -> Result<()> {
        let f = &self.ferro;
        positive("ferro.p_r_uC_cm2", f.p_r_uc_cm2)?;
        positive("ferro.e_c_MV_cm", f.e_c_mv_cm)?;
        positive("ferro.rho", f.rho)?;
        positive("ferro.t_fe_nm", f.t_fe_nm)?;
        positive("ferro.a_fe_nm2", f.a_fe_nm2)?;
        positive("ferro.critical_lo_nm2", f.critical_lo_nm2)?;
        if !(f.critical_hi_nm2 > f.critical_lo_nm2) {
            return Err(invalid("ferro.critical_hi_nm2", "must exceed critical_lo_nm2"));
        }
        if !(f.gamma >= 0.0) {
            return Err(invalid("ferro.gamma", "must be non-negative"));
        }
        if f.a_fe_list.is_empty() {
            return Err(invalid("ferro.a_fe_list", "must not be empty"));
        }
        for &a in &f.a_fe_list {
            positive("ferro.a_fe_list", a)?;
        }
        for (s, fc) in [("fet.n", &self.fet_n), ("fet.p", &self.fet_p)] {
            let k = |n: &str| format!("{s}.{n}");
            match fc.model {
                FetModelConfig::Targets {
                    i_off_a,
                    i_on_a,
                    ss_mv_dec,
                    dibl_mv_v,
                    v_dd,
                } => {
                    positive(&k("i_off_A"), i_off_a)?;
                    positive(&k("i_on_A"), i_on_a)?;
                    positive(&k("ss_mV_dec"), ss_mv_dec)?;
                    positive(&k("target_v_dd"), v_dd)?;
                    if !(dibl_mv_v >= 0.0) {
                        return Err(invalid(&k("dibl_mV_V"), "must be non-negative"));
                    }
                }
                FetModelConfig::Explicit {
                    n_slope,
                    sigma_dibl,
                    i_sp_a,
                    ..
                } => {
                    if !(n_slope >= 1.0) {
                        return Err(invalid(&k("n_slope"), "must be at least 1"));
                    }
                    if !(sigma_dibl >= 0.0) {
                        return Err(invalid(&k("sigma_dibl"), "must be non-negative"));
                    }
                    positive(&k("i_sp_A"), i_sp_a)?;
                }
            }
            positive(&k("wf_eV"), fc.wf_ev)?;
            positive(&k("nc_wf_eV"), fc.nc_wf_ev)?;
            positive(&k("wf_ref_eV"), fc.wf_ref_ev)?;
            if !(fc.r_sd_ohm >= 0.0) {
                return Err(invalid(&k("r_sd_ohm"), "must be non-negative"));
            }
            positive(&k("l_g_nm"), fc.l_g_nm)?;
            positive(&k("d_nw_nm"), fc.d_nw_nm)?;
            positive(&k("eot_nm"), fc.eot_nm)?;
            positive(&k("l_ov_nm"), fc.l_ov_nm)?;
            if fc.n_wires == 0 {
                return Err(invalid(&k("n_wires"), "must be at least 1"));
            }
        }
        let c = &self.circuit;
        if c.stages < 3 || c.stages.is_multiple_of(2) {
            return Err(invalid("circuit.stages", "must be odd and at least 3"));
        }
        positive("circuit.c_wire_fF", c.c_wire_ff)?;
        positive("circuit.v_dd", c.v_dd)?;
        if c.v_dd_list.is_empty() {
            return Err(invalid("circuit.v_dd_list", "must not be empty"));
        }
        for &v in &c.v_dd_list {
            positive("circuit.v_dd_list", v)?;
        }
        let s = &self.sweep;
        positive("sweep.step", s.step)?;
        if !(s.v_gs_stop > s.v_gs_start) {
            return Err(invalid("sweep.v_gs_stop", "must exceed v_gs_start"));
        }
        if s.v_ds_list.is_empty() {
            return Err(invalid("sweep.v_ds_list", "must not be empty"));
        }
        if s.v_gs_list.is_empty() {
            return Err(invalid("sweep.v_gs_list", "must not be empty"));
        }
        if s.directions.is_empty() {
            return Err(invalid("sweep.directions", "must not be empty"));
        }
        let t = &self.transient;
        for (k, v) in [
            ("transient.t_stop_ns", t.t_stop_ns),
            ("transient.dt_init_ps", t.dt_init_ps),
            ("transient.dt_min_fs", t.dt_min_fs),
            ("transient.dt_max_ps", t.dt_max_ps),
        ] {
            if let Some(v) = v {
                positive(k, v)?;
            }
        }
        positive("transient.newton_tol", t.newton_tol)?;
        if self.output.precision == 0 || self.output.precision > 17 {
            return Err(invalid("output.precision", "must lie in 1..=17"));
        }
        Ok(())
    }

    /// Film model of the given area (nm²).
    pub fn lk_model(&self, a_fe_nm2: f64) -> Result<LkModel> {
        let f = &self.ferro;
        Ok(LkModel::new(
            calibrate_lk(f.p_r_uc_cm2 * UC_PER_CM2, f.e_c_mv_cm * MV_PER_CM, f.gamma, f.rho)?,
            FerroGeometry::new(f.t_fe_nm * NM, a_fe_nm2 * NM2)?,
        ))
    }

    pub fn fet_config(&self, polarity: Polarity) -> &FetConfig {
        match polarity {
            Polarity::N => &self.fet_n,
            Polarity::P => &self.fet_p,
        }
    }

    /// Conventional surrogate at its configured work function.
    pub fn fet(&self, polarity: Polarity) -> Result<FetParams> {
        let base = self.fet_base(polarity)?;
        Ok(base.with_workfunction(self.fet_config(polarity).wf_ev))
    }

    /// Surrogate under the NC film at the NC work function.
    pub fn nc_fet(&self, polarity: Polarity, a_fe_nm2: f64) -> Result<NcFet> {
        let base = self.fet_base(polarity)?;
        NcFet::new(
            base.with_workfunction(self.fet_config(polarity).nc_wf_ev),
            self.lk_model(a_fe_nm2)?,
        )
    }

    /// Surrogate at its reference work function.
    fn fet_base(&self, polarity: Polarity) -> Result<FetParams> {
        let c = self.fet_config(polarity);
        let geom = FetGeometry {
            l_g: c.l_g_nm * NM,
            d_nw: c.d_nw_nm * NM,
            eot: c.eot_nm * NM,
            l_ov: c.l_ov_nm * NM,
            n_wires: c.n_wires,
        };
        let mut seed = FetParams::seed(polarity, geom);
        seed.wf_ref = c.wf_ref_ev;
        seed.wf = c.wf_ref_ev;
        seed.r_sd = c.r_sd_ohm;
        match c.model {
            FetModelConfig::Targets {
                i_off_a,
                i_on_a,
                ss_mv_dec,
                dibl_mv_v,
                v_dd,
            } => {
                let targets = FetTargets {
                    i_off: i_off_a,
                    i_on: i_on_a,
                    ss_target: ss_mv_dec,
                    dibl_target: dibl_mv_v,
                    v_dd,
                };
                let default_seed = FetParams::seed(polarity, FetGeometry::default());
                if targets == FetTargets::default_for(polarity) && seed == default_seed {
                    presets::fet(polarity)
                } else {
                    calibrate_fet(&targets, &seed)
                }
            }
            FetModelConfig::Explicit {
                v_t0_v,
                n_slope,
                sigma_dibl,
                i_sp_a,
            } => {
                let p = FetParams {
                    v_t0: v_t0_v,
                    n_slope,
                    sigma_dibl,
                    i_sp: i_sp_a,
                    ..seed
                };
                p.validate()?;
                Ok(p)
            }
        }
    }

    pub fn conventional_inverter(&self, v_dd: f64) -> Result<Inverter> {
        Inverter::new(
            Transistor::Conventional(self.fet(Polarity::N)?),
            Transistor::Conventional(self.fet(Polarity::P)?),
            v_dd,
        )
    }

    pub fn nc_inverter(&self, v_dd: f64) -> Result<Inverter> {
        let a = self.ferro.a_fe_nm2;
        Inverter::new(
            Transistor::NegativeCapacitance(self.nc_fet(Polarity::N, a)?),
            Transistor::NegativeCapacitance(self.nc_fet(Polarity::P, a)?),
            v_dd,
        )
    }

    pub fn ring(&self, inverter: Inverter) -> Result<RingOscillator> {
        RingOscillator::new(self.circuit.stages, self.circuit.c_wire_ff * FF, inverter)
    }

    /// Transient settings for `ro`; unset values come from the ring's
    /// estimated period.
    pub fn transient_for(&self, ro: &RingOscillator) -> Result<TransientConfig> {
        let auto = TransientConfig::for_ring(ro)?;
        let t = &self.transient;
        let cfg = TransientConfig {
            t_stop: t.t_stop_ns.map_or(auto.t_stop, |v| v * NS),
            dt_init: t.dt_init_ps.map_or(auto.dt_init, |v| v * PS),
            dt_min: t.dt_min_fs.map_or(auto.dt_min, |v| v * FS),
            dt_max: t.dt_max_ps.map_or(auto.dt_max, |v| v * PS),
            newton_tol: t.newton_tol,
            max_newton: auto.max_newton,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gate_window(&self) -> Result<SweepWindow> {
        SweepWindow::new(self.sweep.v_gs_start, self.sweep.v_gs_stop, self.sweep.step)
    }

    /// Config text that parses back to this configuration. Each line
    /// carries the source of its value.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let section = |name: &str, out: &mut String| {
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
        };
        let src = |key: &str| self.sources.get(key).copied().unwrap_or(Source::File).tag();
        let line = |out: &mut String, key: &str, value: String| {
            let name = key.rsplit('.').next().unwrap_or(key);
            let _ = writeln!(out, "{name} = {value}  # source={}", src(key));
        };
        let f = &self.ferro;
        section("ferro", &mut out);
        line(&mut out, "ferro.p_r_uC_cm2", num(f.p_r_uc_cm2));
        line(&mut out, "ferro.e_c_MV_cm", num(f.e_c_mv_cm));
        line(&mut out, "ferro.gamma", num(f.gamma));
        line(&mut out, "ferro.rho", num(f.rho));
        line(&mut out, "ferro.t_fe_nm", num(f.t_fe_nm));
        line(&mut out, "ferro.a_fe_nm2", num(f.a_fe_nm2));
        line(&mut out, "ferro.a_fe_list", list(&f.a_fe_list));
        line(&mut out, "ferro.critical_lo_nm2", num(f.critical_lo_nm2));
        line(&mut out, "ferro.critical_hi_nm2", num(f.critical_hi_nm2));
        for (s, c) in [("fet.n", &self.fet_n), ("fet.p", &self.fet_p)] {
            section(s, &mut out);
            let k = |n: &str| format!("{s}.{n}");
            match c.model {
                FetModelConfig::Targets {
                    i_off_a,
                    i_on_a,
                    ss_mv_dec,
                    dibl_mv_v,
                    v_dd,
                } => {
                    line(&mut out, &k("i_off_A"), num(i_off_a));
                    line(&mut out, &k("i_on_A"), num(i_on_a));
                    line(&mut out, &k("ss_mV_dec"), num(ss_mv_dec));
                    line(&mut out, &k("dibl_mV_V"), num(dibl_mv_v));
                    line(&mut out, &k("target_v_dd"), num(v_dd));
                }
                FetModelConfig::Explicit {
                    v_t0_v,
                    n_slope,
                    sigma_dibl,
                    i_sp_a,
                } => {
                    line(&mut out, &k("v_t0_V"), num(v_t0_v));
                    line(&mut out, &k("n_slope"), num(n_slope));
                    line(&mut out, &k("sigma_dibl"), num(sigma_dibl));
                    line(&mut out, &k("i_sp_A"), num(i_sp_a));
                }
            }
            line(&mut out, &k("wf_eV"), num(c.wf_ev));
            line(&mut out, &k("nc_wf_eV"), num(c.nc_wf_ev));
            line(&mut out, &k("wf_ref_eV"), num(c.wf_ref_ev));
            line(&mut out, &k("r_sd_ohm"), num(c.r_sd_ohm));
            line(&mut out, &k("l_g_nm"), num(c.l_g_nm));
            line(&mut out, &k("d_nw_nm"), num(c.d_nw_nm));
            line(&mut out, &k("eot_nm"), num(c.eot_nm));
            line(&mut out, &k("l_ov_nm"), num(c.l_ov_nm));
            line(&mut out, &k("n_wires"), c.n_wires.to_string());
        }
        let c = &self.circuit;
        section("circuit", &mut out);
        line(&mut out, "circuit.stages", c.stages.to_string());
        line(&mut out, "circuit.c_wire_fF", num(c.c_wire_ff));
        line(&mut out, "circuit.v_dd", num(c.v_dd));
        line(&mut out, "circuit.v_dd_list", list(&c.v_dd_list));
        let s = &self.sweep;
        section("sweep", &mut out);
        line(&mut out, "sweep.v_gs_start", num(s.v_gs_start));
        line(&mut out, "sweep.v_gs_stop", num(s.v_gs_stop));
        line(&mut out, "sweep.step", num(s.step));
        line(&mut out, "sweep.v_ds_list", list(&s.v_ds_list));
        line(&mut out, "sweep.v_gs_list", list(&s.v_gs_list));
        let dirs: Vec<String> = s
            .directions
            .iter()
            .map(|d| match d {
                Direction::Up => "\"up\"".to_string(),
                Direction::Down => "\"down\"".to_string(),
            })
            .collect();
        line(&mut out, "sweep.directions", format!("[{}]", dirs.join(", ")));
        let t = &self.transient;
        section("transient", &mut out);
        for (key, v) in [
            ("transient.t_stop_ns", t.t_stop_ns),
            ("transient.dt_init_ps", t.dt_init_ps),
            ("transient.dt_min_fs", t.dt_min_fs),
            ("transient.dt_max_ps", t.dt_max_ps),
        ] {
            match v {
                Some(v) => line(&mut out, key, num(v)),
                None => {
                    let name = key.rsplit('.').next().unwrap_or(key);
                    let _ = writeln!(out, "# {name} = auto  # source={}", src(key));
                }
            }
        }
        line(&mut out, "transient.newton_tol", num(t.newton_tol));
        section("output", &mut out);
        line(
            &mut out,
            "output.dir",
            toml::Value::String(self.output.dir.display().to_string()).to_string(),
        );
        line(&mut out, "output.precision", self.output.precision.to_string());
        out
    }

    /// True when both configs describe the same experiment, whatever the
    /// sources of their values.
    pub fn same_settings(&self, other: &Self) -> bool {
        let strip = |c: &Self| Self {
            sources: BTreeMap::new(),
            ..c.clone()
        };
        strip(self) == strip(other)
    }
}

/// Shortest text that reads back as the same `f64`, in TOML float syntax.
fn num(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn list(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "))
}
