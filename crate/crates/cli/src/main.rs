//! `sturm`: forward spectra, reconstructions from spectral or Cauchy data,
//! and perturbation sweeps.
//!
//! Exit codes: 0 ok, 2 input error, 3 I/O error, 4 solver error,
//! 5 verification failure. Failures print one line to stderr:
//!   error kind=<Kind> message="<text>"

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sturm_core::cauchy::{cauchy_from_problem, invert_from_cauchy_report, CauchyOptions};
use sturm_core::config::Config;
use sturm_core::error::{Category, Error, Result};
use sturm_core::inverse::{check_verification, invert_report, InverseOptions, ReconstructionResult};
use sturm_core::io;
use sturm_core::spectrum::{forward_spectrum, SpectrumOptions};
use sturm_core::sweep::{run_sweep, Family, SweepOptions};

#[derive(Parser, Debug)]
#[command(name = "sturm", version, about = "Forward and inverse Sturm-Liouville problems with polynomial boundary conditions")]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// contour nodes per circle
    #[arg(long, global = true)]
    m_q: Option<usize>,
    /// number of eigenvalues to compute
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// integrator tolerance
    #[arg(long, global = true)]
    tol_ode: Option<f64>,
    /// reciprocal condition floor for the main equation
    #[arg(long, global = true)]
    cond_floor: Option<f64>,
    /// head verification tolerance
    #[arg(long, global = true)]
    verify_tol: Option<f64>,
    /// largest contour size (in sqrt(lambda)) used for tail truncation
    #[arg(long, global = true)]
    max_contour_rho: Option<f64>,
    /// Legendre terms for G and J
    #[arg(long, global = true)]
    k_f: Option<usize>,
    /// sweep worker threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// sigma grid size for `model`
    #[arg(long, global = true)]
    n_x: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, clusters and weight numbers of a problem
    Forward {
        problem: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reconstruct a problem from spectral data and a model problem
    Invert {
        tilde: PathBuf,
        spectral: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// per-x diagnostics table (default: OUT with a .csv extension)
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Generalized Cauchy data
    #[command(subcommand)]
    Cauchy(CauchyCommand),
    /// Reconstruct from perturbed data at several scales
    Sweep {
        tilde: PathBuf,
        /// family:index, e.g. shift-eigenvalue:1, scale-weight:2,
        /// split-cluster:1, cauchy-constant:0
        #[arg(long)]
        family: String,
        /// comma-separated scales t
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        scales: Vec<f64>,
        #[arg(short, long)]
        out: PathBuf,
        /// log-log plot data (default: OUT with a .plot.csv suffix)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Write one of the built-in model problems
    Model {
        /// zero-p0, double-p1, coprime-p1, smooth-p0, smooth-p1
        name: String,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum CauchyCommand {
    /// Fit Cauchy data to a problem
    Extract {
        problem: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reconstruct a problem from Cauchy data and a model problem
    Invert {
        tilde: PathBuf,
        cauchy: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut c = match &cli.config {
        Some(p) => Config::parse_unchecked(&io::read_text(p)?)?,
        None => Config::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = o.m_q {
        c.contour.m_q = v;
    }
    if let Some(v) = o.n_max {
        c.spectrum.n_max = v;
    }
    if let Some(v) = o.tol_ode {
        c.forward.tol_ode = v;
    }
    if let Some(v) = o.cond_floor {
        c.inverse.cond_floor = v;
    }
    if let Some(v) = o.verify_tol {
        c.inverse.verify_tol = v;
    }
    if let Some(v) = o.max_contour_rho {
        c.inverse.max_contour_rho = v;
    }
    if let Some(v) = o.k_f {
        c.cauchy.k_f = v;
    }
    if let Some(v) = o.workers {
        c.sweep.workers = v;
    }
    if let Some(v) = o.n_x {
        c.forward.n_x = v;
    }
    c.validate()?;
    Ok(c)
}

fn with_ext(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.with_extension("").into_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_reconstruction(r: &ReconstructionResult, out: &Path, diag: Option<&PathBuf>) -> Result<()> {
    io::write_text(out, &io::reconstruction_to_json(r)?)?;
    let dpath = diag.cloned().unwrap_or_else(|| with_ext(out, ".csv"));
    io::write_text(&dpath, &io::diagnostics_csv(r))?;
    let d = &r.diagnostics;
    println!("N = {}  delta = {:.3e}  tail = {:.3e}  min rcond = {:.3e}", d.n_cut, d.delta, d.tail_l2, d.min_condition);
    if let Some(v) = d.verification {
        println!(
            "verification {}: lambda err {:.3e}, alpha rel err {:.3e}{}",
            if v.passed { "PASS" } else { "FAIL" },
            v.lambda_err,
            v.alpha_rel_err,
            d.cauchy_residual.map(|c| format!(", Cauchy residual {c:.3e}")).unwrap_or_default()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Forward { problem, out } => {
            let pr = io::read_problem(problem)?;
            let sd = forward_spectrum(&pr, &SpectrumOptions::from(&cfg))?;
            io::write_text(out, &io::spectral_to_json(&sd)?)?;
            println!("{:>4}  {:>24}  {:>24}  {:>24}  {:>24}  {:>2}", "n", "Re lambda", "Im lambda", "Re alpha", "Im alpha", "m");
            for (i, (l, a)) in sd.eigenvalues.iter().zip(&sd.weights).enumerate() {
                let m = sd.multiplicity_at(i);
                println!("{:>4}  {:>24.16e}  {:>24.16e}  {:>24.16e}  {:>24.16e}  {m:>2}", i + 1, l.re, l.im, a.re, a.im);
            }
            println!("head cut N = {}", sd.n_head);
        }
        Command::Invert { tilde, spectral, out, diagnostics } => {
            let t = io::read_problem(tilde)?;
            let sd = io::read_spectral(spectral)?;
            let run = invert_report(&t, &sd, &InverseOptions::from(&cfg))?;
            write_reconstruction(&run.result, out, diagnostics.as_ref())?;
            check_verification(&run.result)?;
        }
        Command::Cauchy(CauchyCommand::Extract { problem, out }) => {
            let pr = io::read_problem(problem)?;
            let cd = cauchy_from_problem(&pr, &CauchyOptions::from(&cfg))?;
            io::write_text(out, &io::cauchy_to_json(&cd, cfg.cauchy.n_samples)?)?;
            println!(
                "fit residual: Delta0 {:.3e}, Delta1 {:.3e}, held-out {:.3e} (k_f = {})",
                cd.fit.residual_0,
                cd.fit.residual_1,
                cd.fit.held_out,
                cd.k_f()
            );
        }
        Command::Cauchy(CauchyCommand::Invert { tilde, cauchy, out, diagnostics }) => {
            let t = io::read_problem(tilde)?;
            let cd = io::read_cauchy(cauchy)?;
            let r = invert_from_cauchy_report(&t, &cd, &InverseOptions::from(&cfg), &CauchyOptions::from(&cfg))?;
            write_reconstruction(&r.run.result, out, diagnostics.as_ref())?;
            check_verification(&r.run.result)?;
        }
        Command::Sweep { tilde, family, scales, out, plot } => {
            let fam: Family = family.parse()?;
            let t = io::read_problem(tilde)?;
            let rep = run_sweep(&t, fam, scales, &SweepOptions::from(&cfg))?;
            io::write_text(out, &rep.rows_csv())?;
            let ppath = plot.clone().unwrap_or_else(|| with_ext(out, ".plot.csv"));
            io::write_text(&ppath, &rep.plot_csv())?;
            for l in &rep.linearity {
                let devs: Vec<String> = l.deviations.iter().map(|d| d.map_or("-".into(), |v| format!("{v:+.3}"))).collect();
                println!("{:<10} {} [{}]", l.quantity, if l.passed { "linear" } else { "NOT linear" }, devs.join(" "));
            }
        }
        Command::Model { name, out } => {
            let pr = sturm_core::presets::preset(name, cfg.forward.n_x)?;
            io::write_text(out, &io::problem_to_json(&pr)?)?;
        }
    }
    Ok(())
}

fn report(kind: &str, message: &str) {
    let msg = serde_json::to_string(message).unwrap_or_else(|_| "\"?\"".into());
    eprintln!("error kind={kind} message={msg}");
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        Category::Input => 2,
        Category::Io => 3,
        Category::Solver => 4,
        Category::Verification => 5,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            report("UsageError", first);
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            if let Error::FitResidualTooLarge(_) = e {
                eprintln!("hint: raise --k-f");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
