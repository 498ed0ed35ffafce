//! Command-line interface: analyze / verify / derivative / sample-cone /
//! kummer over a line-oriented problem-file format.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fullstab::criteria::CriterionMode;
use fullstab_cli::{commands, parse, report};
use report::Format;

#[derive(Parser)]
#[command(
    name = "fullstab",
    about = "Certifies primal-dual full stability of KKT pairs in generalized nonlinear programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Coderivative,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem file path.
    #[arg(long)]
    problem: String,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// KKT admissibility tolerance.
    #[arg(long, default_value_t = fullstab::tol::KKT_TOLERANCE)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Full analytic stability certification.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Assert plain variational sufficiency.
        #[arg(long)]
        assume_varsuff: bool,
        /// Assert strong variational sufficiency.
        #[arg(long)]
        assume_strong_varsuff: bool,
    },
    /// Independent numeric verification by sampling experiments.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Localization ball radius.
        #[arg(long)]
        delta: Option<f64>,
        /// Parameter perturbation radius.
        #[arg(long)]
        radius: Option<f64>,
        /// Sample count per ladder rung.
        #[arg(long)]
        samples: Option<usize>,
        /// Seed for the counter-based generators.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-axis grid resolution of the localized solver.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Ladder growth factor flagged as diverging.
        #[arg(long, default_value_t = fullstab::tol::LADDER_FACTOR)]
        ladder_factor: f64,
        /// Input-distance filter divisor for modulus pairs.
        #[arg(long, default_value_t = fullstab::tol::PAIR_FILTER_DIVISOR)]
        pair_filter: f64,
    },
    /// Per-index slopes, cone graphs, and directional fibers.
    Derivative {
        #[command(flatten)]
        common: CommonArgs,
        /// Derivative graph flavor.
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
        /// Primal direction, e.g. "1 0" (defaults to zero).
        #[arg(long)]
        xprime: Option<String>,
        /// Shift direction (defaults to zero).
        #[arg(long)]
        uprime: Option<String>,
    },
    /// Sampled-cone validation against the analytic graphs.
    SampleCone {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generalized-equation localization check.
    Kummer {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_direction(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad direction component '{t}'"))
        })
        .collect()
}

fn load(path: &str) -> Result<parse::ProblemFile, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    parse::parse_problem_file(&text).map_err(|diags| {
        diags
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&CommonArgs, Box<dyn FnOnce(&parse::ProblemFile, &commands::CommonFlags) -> report::Report>) =
        match &cli.command {
            Command::Analyze {
                common,
                assume_varsuff,
                assume_strong_varsuff,
            } => {
                let (av, asv) = (*assume_varsuff, *assume_strong_varsuff);
                (
                    common,
                    Box::new(move |file, flags| commands::analyze(file, flags, av, asv)),
                )
            }
            Command::Verify {
                common,
                delta,
                radius,
                samples,
                seed,
                resolution,
                ladder_factor,
                pair_filter,
            } => {
                let (delta, radius, samples, seed) = (*delta, *radius, *samples, *seed);
                let (resolution, ladder_factor, pair_filter) =
                    (*resolution, *ladder_factor, *pair_filter);
                (
                    common,
                    Box::new(move |file, flags| {
                        let mut vf = commands::VerifyFlags::default();
                        // file-embedded defaults, overridden by flags
                        if let Some(d) = file.delta {
                            vf.delta = d;
                        }
                        if let Some(r) = file.radius {
                            vf.radius = r;
                        }
                        if let Some(s) = file.samples {
                            vf.samples = s;
                        }
                        if let Some(s) = file.seed {
                            vf.seed = s;
                        }
                        if let Some(d) = delta {
                            vf.delta = d;
                        }
                        if let Some(r) = radius {
                            vf.radius = r;
                        }
                        if let Some(s) = samples {
                            vf.samples = s;
                        }
                        if let Some(s) = seed {
                            vf.seed = s;
                        }
                        vf.resolution = resolution;
                        vf.ladder_factor = ladder_factor;
                        vf.pair_filter = pair_filter;
                        commands::verify(file, flags, &vf)
                    }),
                )
            }
            Command::Derivative {
                common,
                mode,
                xprime,
                uprime,
            } => {
                let mode = match mode {
                    ModeArg::Strict => CriterionMode::Strict,
                    ModeArg::Coderivative => CriterionMode::Coderivative,
                };
                let (xp, up) = (xprime.clone(), uprime.clone());
                (
                    common,
                    Box::new(move |file, flags| {
                        let xp = match xp.as_deref().map(parse_direction).transpose() {
                            Ok(v) => v,
                            Err(e) => {
                                eprintln!("{e}");
                                return report::Report::new(3);
                            }
                        };
                        let up = match up.as_deref().map(parse_direction).transpose() {
                            Ok(v) => v,
                            Err(e) => {
                                eprintln!("{e}");
                                return report::Report::new(3);
                            }
                        };
                        commands::derivative(file, flags, mode, xp, up)
                    }),
                )
            }
            Command::SampleCone {
                common,
                samples,
                seed,
            } => {
                let (samples, seed) = (*samples, *seed);
                (
                    common,
                    Box::new(move |file, flags| commands::sample_cone(file, flags, samples, seed)),
                )
            }
            Command::Kummer { common } => (
                common,
                Box::new(|file, flags| commands::kummer(file, flags)),
            ),
        };

    let format = match common.format {
        FormatArg::Text => Format::Text,
        FormatArg::Tsv => Format::Tsv,
    };
    let flags = commands::CommonFlags {
        format,
        tol: common.tol,
    };
    let file = match load(&common.problem) {
        Ok(f) => f,
        Err(diags) => {
            eprintln!("{diags}");
            return ExitCode::from(3);
        }
    };
    let report = run(&file, &flags);
    print!("{}", report.emit(format));
    if report.exit_code == 3 {
        eprintln!("input error; see report");
    }
    ExitCode::from(report.exit_code as u8)
}
