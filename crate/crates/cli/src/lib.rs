//! Command-line front end for `pnp-stability`.
//!
//! Exit codes: 0 on success, 1 when a check fails or a violation is found,
//! 2 on usage or I/O errors.

pub mod repro;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pnp_stability::io::read_matrix;
use pnp_stability::matrix::{validate_stochastic, DEFAULT_STOCHASTIC_TOL};
use pnp_stability::operators::{make_family, OperatorFamily, OperatorKind, Which};
use pnp_stability::pnp::{pgd_pnp_run, random_problem};
use pnp_stability::stability::{
    profile, run_campaign, run_suite, stability_threshold, CampaignConfig, Generator, Theorem,
    ThresholdParams,
};

use repro::{repro, ExampleId};

#[derive(Debug, Parser)]
#[command(
    name = "pnpstab",
    version,
    about = "Spectral stability of plug-and-play operators"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    P,
    R,
}

impl From<FamilyArg> for Which {
    fn from(f: FamilyArg) -> Which {
        match f {
            FamilyArg::P => Which::P,
            FamilyArg::R => Which::R,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SuiteArg {
    DblStochastic,
    Inpainting,
    AlphaBeta,
    Conjecture,
}

impl From<SuiteArg> for Theorem {
    fn from(s: SuiteArg) -> Theorem {
        match s {
            SuiteArg::DblStochastic => Theorem::DblStochastic,
            SuiteArg::Inpainting => Theorem::Inpainting,
            SuiteArg::AlphaBeta => Theorem::AlphaBeta,
            SuiteArg::Conjecture => Theorem::Conjecture,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum GeneratorArg {
    Imaging,
    GeneralPsd,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Generator {
        match g {
            GeneratorArg::Imaging => Generator::Imaging,
            GeneratorArg::GeneralPsd => Generator::GeneralPsd,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Inpainting,
    Deblur,
    Superres,
}

impl From<KindArg> for OperatorKind {
    fn from(k: KindArg) -> OperatorKind {
        match k {
            KindArg::Inpainting => OperatorKind::Inpainting,
            KindArg::Deblur => OperatorKind::Deblurring,
            KindArg::Superres => OperatorKind::Superresolution,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral radii of P(t) and R(t) on a uniform grid, as CSV.
    Profile {
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// First step size at which the family loses stability.
    Threshold {
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, ignore_case = true)]
        which: FamilyArg,
        #[arg(long)]
        scan_max: f64,
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long)]
        bisect_tol: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded property suite for one of the stability results.
    Check {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        trials: usize,
        /// Largest dimension; instances cycle through 2..=n.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        grid_steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized search for counterexamples to the step-size conjecture.
    Fuzz {
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "imaging")]
        generator: GeneratorArg,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the proximal-gradient PnP iteration on a seeded problem.
    Pnp {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reproduce a worked example, or `all` of them.
    Repro {
        #[arg(long)]
        example: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_family(w: &Path, b: &Path) -> Result<OperatorFamily> {
    let wm = read_matrix(w).with_context(|| format!("reading {}", w.display()))?;
    let bm = read_matrix(b).with_context(|| format!("reading {}", b.display()))?;
    let w = validate_stochastic(&wm, DEFAULT_STOCHASTIC_TOL)
        .with_context(|| format!("{} is not stochastic", w.display()))?;
    Ok(make_family(w, bm)?)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Executes a parsed command; `Ok(false)` signals a failed check.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Profile {
            w,
            b,
            tmin,
            tmax,
            steps,
            out,
        } => {
            let family = load_family(&w, &b)?;
            write(&out, &profile(&family, tmin, tmax, steps)?.to_csv())?;
            Ok(true)
        }
        Command::Threshold {
            w,
            b,
            which,
            scan_max,
            grid_step,
            bisect_tol,
            eps0,
            out,
        } => {
            let family = load_family(&w, &b)?;
            let defaults = ThresholdParams::new(scan_max);
            let params = ThresholdParams {
                grid_step: grid_step.unwrap_or(defaults.grid_step),
                bisect_tol: bisect_tol.unwrap_or(defaults.bisect_tol),
                eps0: eps0.unwrap_or(defaults.eps0),
                ..defaults
            };
            let report = stability_threshold(&family, which.into(), params)?;
            let text = serde_json::to_string_pretty(&report)?;
            write(&out, &text)?;
            println!("{}", serde_json::to_string(&report)?);
            Ok(true)
        }
        Command::Check {
            suite,
            trials,
            n,
            seed,
            grid_steps,
            out,
        } => {
            let report = run_suite(suite.into(), trials, 2, n, seed, grid_steps)?;
            let mut text = String::new();
            for trial in &report.trials {
                text.push_str(&serde_json::to_string(trial)?);
                text.push('\n');
            }
            let summary = json!({ "summary": {
                "suite": report.theorem,
                "trials": report.trials.len(),
                "violations": report.violations,
                "hypotheses_unmet": report.hypotheses_unmet,
                "pass": report.pass,
            }});
            text.push_str(&serde_json::to_string(&summary)?);
            text.push('\n');
            write(&out, &text)?;
            println!("{}", serde_json::to_string(&summary["summary"])?);
            Ok(report.pass)
        }
        Command::Fuzz {
            trials,
            n_min,
            n_max,
            generator,
            seed,
            workers,
            out,
        } => {
            let campaign = run_campaign(&CampaignConfig {
                trials,
                n_min,
                n_max,
                generators: vec![generator.into()],
                base_seed: seed,
                workers,
            })?;
            write(&out, &campaign.to_json_lines()?)?;
            let s = &campaign.summary;
            println!("{}", serde_json::to_string(s)?);
            for c in &s.certificates {
                eprintln!(
                    "violation: seed {} n {} {} t = {} rho = {}",
                    c.seed, c.n, c.certificate.which, c.certificate.t, c.certificate.rho
                );
            }
            Ok(s.violation == 0)
        }
        Command::Pnp {
            kind,
            n,
            t,
            seed,
            max_iter,
            tol,
            out,
        } => {
            let (problem, _) = random_problem(kind.into(), n, t, seed)?;
            let x0 = vec![0.0; problem.n()];
            let trace = pgd_pnp_run(&problem, &x0, max_iter, tol)?;
            write(&out, &trace.to_csv())?;
            let rho = pnp_stability::eigen::spectral_radius(&problem.iteration_matrix()?)?.radius;
            println!(
                "{}",
                json!({
                    "converged": trace.converged,
                    "iterations": trace.iterations,
                    "estimated_rate": trace.estimated_rate,
                    "rho_P": rho,
                })
            );
            Ok(trace.converged)
        }
        Command::Repro { example, out } => {
            let ids = if example == "all" {
                ExampleId::ALL.to_vec()
            } else {
                vec![example.parse::<ExampleId>()?]
            };
            let mut all = true;
            for id in ids {
                let report = repro(id, &out)?;
                println!("{} {id}", if report.overall_pass { "PASS" } else { "FAIL" });
                for c in report.checks.iter().filter(|c| !c.pass) {
                    println!(
                        "  failed: {} expected {} computed {}",
                        c.name, c.expected, c.computed
                    );
                }
                all &= report.overall_pass;
            }
            Ok(all)
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
