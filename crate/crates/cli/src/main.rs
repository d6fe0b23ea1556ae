use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncfet_core::runner::{load_config, parse_config, run_experiment, ExperimentConfig, ExperimentKind};

/// Device and circuit experiments for negative-capacitance nanowire FETs.
#[derive(Parser, Debug)]
#[command(name = "ncfet-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Config file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Dotted-key override, e.g. `ferro.a_fe_nm2=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the effective config and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Static polarization/voltage curve of the film.
    SCurve(Common),
    /// Transfer characteristics over the film-area family.
    Idvg(Common),
    /// Output characteristics with NDR and saturation reports.
    Idvd(Common),
    /// Common crossing point of the area family.
    Attractor(Common),
    /// Smallest film area without sweep hysteresis.
    CriticalArea(Common),
    /// Inverter transfer curves, gain and hysteresis.
    InverterVtc(Common),
    /// Ring oscillator transient.
    RoTransient(Common),
    /// Ring oscillator energy and delay over supply voltages.
    EnergyDelay(Common),
    /// Device metrics of the conventional and NC devices.
    Metrics(Common),
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::SCurve(c) => (ExperimentKind::SCurve, c),
            Command::Idvg(c) => (ExperimentKind::IdVg, c),
            Command::Idvd(c) => (ExperimentKind::IdVd, c),
            Command::Attractor(c) => (ExperimentKind::Attractor, c),
            Command::CriticalArea(c) => (ExperimentKind::CriticalArea, c),
            Command::InverterVtc(c) => (ExperimentKind::InverterVtc, c),
            Command::RoTransient(c) => (ExperimentKind::RoTransient, c),
            Command::EnergyDelay(c) => (ExperimentKind::EnergyDelay, c),
            Command::Metrics(c) => (ExperimentKind::DeviceMetrics, c),
        }
    }
}

fn config(common: &Common) -> ncfet_core::Result<ExperimentConfig> {
    let mut set = common.set.clone();
    if let Some(dir) = &common.out {
        let quoted = toml_string(&dir.display().to_string());
        set.push(format!("output.dir={quoted}"));
    }
    match &common.config {
        Some(path) => load_config(path, &set),
        None => parse_config("", &set),
    }
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("NCFET_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("NCFET_SIM_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (kind, common) = cli.command.split();
    let cfg = match config(&common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if common.print_config {
        print!("{}", cfg.echo());
        return ExitCode::SUCCESS;
    }
    match run_experiment(&cfg, kind) {
        Ok(report) => {
            for (name, rows) in &report.files {
                println!("{} ({rows} rows)", cfg.output.dir.join(name).display());
            }
            for (name, v) in &report.results {
                println!("{name} = {v:e}");
            }
            if report.all_converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("warning: some points did not converge");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let mut msg = e.to_string();
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                src = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
