//! Command-line front end for the `slowlight` library.
//!
//! [`run`] takes the argument list and output streams explicitly so the whole
//! binary can be driven from tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use slowlight::analytic::analytic_velocity;
use slowlight::dispersion::{scan_dispersion, DEFAULT_DEPTH};
use slowlight::hierarchy::{
    classify_behavior, converge_in_order, estimate_group_velocity, ConvergenceOptions,
};
use slowlight::io::{read_config, render_config, trajectory_files, write_files, ConfigFile};
use slowlight::model::default_z_max;
use slowlight::{simulate, DecayModel, Error, Grid, PhysicalParams, SimulationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "slowlight",
    version,
    about = "Light retrieval from a stationary spin-wave grating"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write intensity maps, strength and peak tracks.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Group velocity against truncation order 1..=N.
    Vgroup {
        config: PathBuf,
        #[arg(long)]
        ell_max: usize,
        /// Largest change between successive orders counted as flat, in
        /// units of c Ω_c²/g²N.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Number of trailing orders that must be flat.
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Wavenumbers of both probe branches over a frequency range.
    Dispersion {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega_max: f64,
        #[arg(long)]
        points: usize,
        /// Continued-fraction depth.
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Behaviour class and remaining strength over a list of decay
    /// coefficients (`a=...`) or initial widths (`l0=...`).
    Sweep {
        config: PathBuf,
        /// `a=v1,v2,...` or `l0=v1,v2,...`.
        #[arg(long)]
        vary: String,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Closed-form splitting speeds for orders 1..=N.
    Analytic {
        #[arg(long)]
        ell_max: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.69)]
        omega_c: f64,
        #[arg(long, default_value_t = 138.0)]
        g2n: f64,
    },
}

#[derive(Debug, Args)]
struct OutputArg {
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl OutputArg {
    fn resolve(&self, file: &ConfigFile) -> Option<PathBuf> {
        self.output.clone().or_else(|| file.output_dir.clone())
    }
}

type CliResult = Result<(), String>;

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit code: 0 on success, 1 on a failed run and 2 on
/// a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().ansi().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Simulate { config, out: dir } => cmd_simulate(&config, &dir, out),
        Command::Vgroup {
            config,
            ell_max,
            tolerance,
            window,
            out: dir,
        } => cmd_vgroup(&config, ell_max, ConvergenceOptions { tolerance, window }, &dir, out),
        Command::Dispersion {
            config,
            omega_min,
            omega_max,
            points,
            depth,
            out: dir,
        } => cmd_dispersion(&config, omega_min, omega_max, points, depth, &dir, out),
        Command::Sweep { config, vary, out: dir } => cmd_sweep(&config, &vary, &dir, out),
        Command::Analytic {
            ell_max,
            gamma,
            omega_c,
            g2n,
        } => cmd_analytic(ell_max, gamma, omega_c, g2n, out),
    }
}

fn load(path: &Path) -> Result<ConfigFile, String> {
    read_config(path).map_err(|e| match e {
        Error::Config(c) => format!("{}:\n{c}", path.display()),
        other => other.to_string(),
    })
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())
}

fn save(dir: Option<&Path>, files: &[(&str, Vec<u8>)], out: &mut dyn Write) -> CliResult {
    let Some(dir) = dir else { return Ok(()) };
    let written = write_files(dir, files).map_err(|e| e.to_string())?;
    for path in written {
        emit(out, &format!("wrote {}\n", path.display()))?;
    }
    Ok(())
}

fn cmd_simulate(path: &Path, dir: &OutputArg, out: &mut dyn Write) -> CliResult {
    let file = load(path)?;
    let target = dir.resolve(&file).unwrap_or_else(|| PathBuf::from("output"));
    let cfg = &file.simulation;
    let traj = simulate(cfg).map_err(|e| e.to_string())?;

    let behavior = classify_behavior(&traj, None);
    let mut summary = String::new();
    writeln!(summary, "ell = {}", cfg.ell).unwrap();
    writeln!(summary, "behavior = {:?}", behavior.kind).unwrap();
    writeln!(summary, "final_separation = {:.6}", behavior.evidence).unwrap();
    writeln!(summary, "max_separation = {:.6}", behavior.max_separation).unwrap();
    match behavior.onset {
        Some(t) => writeln!(summary, "splitting_onset = {t:.6}").unwrap(),
        None => writeln!(summary, "splitting_onset =").unwrap(),
    }
    match estimate_group_velocity(&traj) {
        Ok(v) => writeln!(summary, "group_velocity = {:.6} +- {:.6}", v.value, v.stderr).unwrap(),
        Err(e) => writeln!(summary, "group_velocity = ({e})").unwrap(),
    }
    let last = traj.strength_series.last().copied().unwrap_or(0.0);
    writeln!(summary, "final_strength = {last:.6e}").unwrap();

    let mut files = trajectory_files(&traj);
    files.push(("config.txt", render_config(cfg, None).into_bytes()));
    files.push(("summary.txt", summary.clone().into_bytes()));
    emit(out, &summary)?;
    save(Some(&target), &files, out)
}

fn cmd_vgroup(
    path: &Path,
    ell_max: usize,
    options: ConvergenceOptions,
    dir: &OutputArg,
    out: &mut dyn Write,
) -> CliResult {
    if ell_max == 0 {
        return Err("--ell-max must be >= 1".into());
    }
    let file = load(path)?;
    let target = dir.resolve(&file);
    let schedule: Vec<usize> = (1..=ell_max).collect();
    let report =
        converge_in_order(&file.simulation, &schedule, &options).map_err(|e| e.to_string())?;
    let params = &file.simulation.params;

    let mut csv = String::from("ell,vg,stderr,c0_exact,note\n");
    for (ell, estimate) in &report.curve {
        let c0 = analytic_velocity(*ell, params)
            .map(|a| a.c0_exact_paper)
            .map_err(|e| e.to_string())?;
        match estimate {
            Ok(v) => writeln!(csv, "{ell},{:.8e},{:.8e},{c0:.8e},", v.value, v.stderr),
            Err(msg) => writeln!(csv, "{ell},,,{c0:.8e},{}", msg.replace(',', ";")),
        }
        .unwrap();
    }
    emit(out, &csv)?;
    match report.plateau {
        Some(p) => emit(out, &format!("plateau = {p:.6}\n"))?,
        None => emit(out, "plateau = (not converged)\n")?,
    }
    save(target.as_deref(), &[("vgroup.csv", csv.into_bytes())], out)
}

fn cmd_dispersion(
    path: &Path,
    omega_min: f64,
    omega_max: f64,
    points: usize,
    depth: usize,
    dir: &OutputArg,
    out: &mut dyn Write,
) -> CliResult {
    if points == 0 {
        return Err("--points must be >= 1".into());
    }
    if !(omega_min.is_finite() && omega_max.is_finite()) || omega_max < omega_min {
        return Err("need finite --omega-min <= --omega-max".into());
    }
    let file = load(path)?;
    let target = dir.resolve(&file);
    let cfg = &file.simulation;
    let omegas: Vec<f64> = if points == 1 {
        vec![omega_min]
    } else {
        let step = (omega_max - omega_min) / (points - 1) as f64;
        (0..points).map(|i| omega_min + step * i as f64).collect()
    };
    let scan = scan_dispersion(&omegas, &cfg.params, &cfg.decay, depth);
    let c = cfg.params.c();
    let gamma = cfg.params.gamma();

    let mut csv =
        String::from("omega,re_k_plus,im_k_plus,re_k_minus,im_k_minus,error\n");
    for (w, point) in omegas.iter().zip(&scan) {
        match point {
            Ok(p) => {
                let (kp, km) = (p.k_plus * c / gamma, p.k_minus * c / gamma);
                writeln!(
                    csv,
                    "{w:.8e},{:.8e},{:.8e},{:.8e},{:.8e},",
                    kp.re, kp.im, km.re, km.im
                )
            }
            Err(e) => writeln!(csv, "{w:.8e},,,,,{}", e.to_string().replace(',', ";")),
        }
        .unwrap();
    }
    emit(out, &csv)?;
    save(target.as_deref(), &[("dispersion.csv", csv.into_bytes())], out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Varied {
    DecayCoefficient,
    Width,
}

fn parse_vary(spec: &str) -> Result<(Varied, Vec<f64>), String> {
    let (key, list) = spec
        .split_once('=')
        .ok_or_else(|| format!("--vary expects `a=...` or `l0=...`, got `{spec}`"))?;
    let which = match key.trim() {
        "a" => Varied::DecayCoefficient,
        "l0" => Varied::Width,
        other => return Err(format!("cannot vary `{other}` (expected a or l0)")),
    };
    let values = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("bad value `{}` in --vary", v.trim()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((which, values))
}

/// Configuration for one sweep point. Widening the pulse grows the domain
/// when the base one would let the pulses reach the boundary.
fn sweep_config(base: &SimulationConfig, which: Varied, value: f64) -> Result<SimulationConfig, Error> {
    let mut cfg = base.clone();
    match which {
        Varied::DecayCoefficient => cfg.decay = DecayModel::ColdLinear { a: value },
        Varied::Width => {
            cfg.l0 = value;
            let g = &base.grid;
            let needed = default_z_max(&base.params, value.abs(), g.total_time());
            if needed > g.z_max() {
                cfg.grid = Grid::resolve(
                    &base.params,
                    needed,
                    g.dz(),
                    g.courant(&base.params),
                    g.total_time(),
                    g.snapshot_stride(),
                )?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_sweep(path: &Path, vary: &str, dir: &OutputArg, out: &mut dyn Write) -> CliResult {
    let (which, values) = parse_vary(vary)?;
    let file = load(path)?;
    let target = dir.resolve(&file);
    let name = match which {
        Varied::DecayCoefficient => "a",
        Varied::Width => "l0",
    };

    let configs = values
        .iter()
        .map(|&v| sweep_config(&file.simulation, which, v).map_err(|e| format!("{name}={v}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let runs = configs
        .par_iter()
        .zip(&values)
        .map(|(cfg, v)| simulate(cfg).map_err(|e| format!("{name}={v}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = format!("{name},behavior,final_separation,max_separation,onset,final_strength\n");
    let mut series = format!("{name},t,I\n");
    for (v, traj) in values.iter().zip(&runs) {
        let b = classify_behavior(traj, None);
        let onset = b.onset.map(|t| format!("{t:.8e}")).unwrap_or_default();
        let last = traj.strength_series.last().copied().unwrap_or(0.0);
        writeln!(
            table,
            "{v},{:?},{:.8e},{:.8e},{onset},{last:.8e}",
            b.kind, b.evidence, b.max_separation
        )
        .unwrap();
        for (t, i) in traj.times.iter().zip(&traj.strength_series) {
            writeln!(series, "{v},{t:.8e},{i:.8e}").unwrap();
        }
    }
    emit(out, &table)?;
    save(
        target.as_deref(),
        &[
            ("sweep.csv", table.into_bytes()),
            ("sweep_strength.csv", series.into_bytes()),
        ],
        out,
    )
}

fn cmd_analytic(ell_max: usize, gamma: f64, omega_c: f64, g2n: f64, out: &mut dyn Write) -> CliResult {
    if ell_max == 0 {
        return Err("--ell-max must be >= 1".into());
    }
    let params = PhysicalParams::new(gamma, omega_c, g2n).map_err(|e| e.to_string())?;
    let mut table = String::from("ell,c0_exact,c0_slowlight,c0_exact_paper,c0_slowlight_paper\n");
    for ell in 1..=ell_max {
        let a = analytic_velocity(ell, &params).map_err(|e| e.to_string())?;
        writeln!(
            table,
            "{ell},{:.8e},{:.8e},{:.8e},{:.8e}",
            a.c0_exact, a.c0_slowlight, a.c0_exact_paper, a.c0_slowlight_paper
        )
        .unwrap();
    }
    emit(out, &table)
}
