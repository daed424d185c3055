//! `voxcalc`: batch front end for identity checks, Zhu algebra presentations
//! and module construction. Every run writes one report and exits with 0 when
//! all verdicts pass, 1 when a check fails and 2 on errors or unstable
//! cutoffs.

mod build;
mod check;
mod report;
mod spec;
mod zhu;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use report::{Report, Status};
use spec::{Backend, ModuleSpec};

#[derive(Parser)]
#[command(
    name = "voxcalc",
    version,
    about = "Exact checks for vertex algebra modules"
)]
struct Cli {
    /// `heisenberg` or `virasoro:c=<rational>`.
    #[arg(long, global = true, default_value = "heisenberg")]
    backend: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest slack tried when stabilizing a truncation.
    #[arg(long, global = true)]
    slack_ceiling: Option<u32>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check identity files; with no paths, the built-in corpus.
    Check {
        /// Element slots in V range over weights up to this.
        #[arg(long, default_value_t = 3)]
        weight: u32,
        /// Element slots in W range over degrees up to this.
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Degree bound for index boxes and the `cutoff` keyword.
        #[arg(long, default_value_t = 4)]
        box_degree: u32,
        /// Fock module weights, comma separated (Heisenberg only).
        #[arg(long, default_value = "0,1,-1/2")]
        lambda: String,
        /// Check a seeded random subsample of this many assignments.
        #[arg(long)]
        sample: Option<usize>,
        /// Corrupt one action-table entry, chosen by this seed.
        #[arg(long)]
        mutate: Option<u64>,
        paths: Vec<PathBuf>,
    },
    /// Truncated presentation of the Zhu algebra A(V).
    Zhu {
        #[arg(long, default_value_t = 3)]
        cutoff: u32,
    },
    /// Build S(M) for an A(V)-module M and verify it.
    BuildModule {
        /// `scalar:λ=<r>`, `jordan2:λ=<r>`, `zero` or `file:<path.json>`.
        #[arg(long, default_value = "scalar:λ=0")]
        module: String,
        #[arg(long, default_value_t = 5)]
        degree: u32,
        /// Weight bound for the associativity audit and the action digest.
        #[arg(long, default_value_t = 2)]
        weight: u32,
    },
}

fn run(cli: &Cli) -> Report {
    let fail = |command: &str, config: Vec<(String, String)>, e: voxcalc::error::Error| {
        let mut r = Report::new(command, config);
        r.verdict("configuration", Status::Error, Some(e.to_string()));
        r
    };
    let backend = match Backend::parse(&cli.backend) {
        Ok(b) => b,
        Err(e) => return fail("", vec![("backend".into(), cli.backend.clone())], e),
    };
    match &cli.command {
        Command::Check {
            weight,
            degree,
            box_degree,
            lambda,
            sample,
            mutate,
            paths,
        } => {
            let lambdas = match check::parse_lambdas(lambda) {
                Ok(l) => l,
                Err(e) => return fail("check", vec![("lambda".into(), lambda.clone())], e),
            };
            let args = check::CheckArgs {
                backend,
                weight: *weight,
                degree: *degree,
                box_degree: *box_degree,
                lambdas,
                sample: *sample,
                mutate: *mutate,
                seed: cli.seed,
                paths: paths.clone(),
            };
            let mut r = Report::new("check", check::config(&args, &cli.backend));
            if let Err(e) = check::run(&args, &mut r) {
                r.verdict("check", Status::Error, Some(e.to_string()));
            }
            r
        }
        Command::Zhu { cutoff } => {
            let args = zhu::ZhuArgs {
                backend,
                cutoff: *cutoff,
                slack_ceiling: cli.slack_ceiling.unwrap_or(8),
            };
            let config = vec![
                ("backend".into(), cli.backend.clone()),
                ("cutoff".into(), cutoff.to_string()),
                ("slack-ceiling".into(), args.slack_ceiling.to_string()),
            ];
            let mut r = Report::new("zhu", config);
            if let Err(e) = zhu::run(&args, &mut r) {
                r.verdict("zhu", Status::Error, Some(e.to_string()));
            }
            r
        }
        Command::BuildModule {
            module,
            degree,
            weight,
        } => {
            let module = match ModuleSpec::parse(module) {
                Ok(m) => m,
                Err(e) => return fail("build-module", vec![("module".into(), module.clone())], e),
            };
            let args = build::BuildArgs {
                backend,
                module,
                degree: *degree,
                slack_ceiling: cli.slack_ceiling.unwrap_or(12),
                weight: *weight,
            };
            let config = vec![
                ("backend".into(), cli.backend.clone()),
                ("module".into(), args.module.render()),
                ("degree".into(), degree.to_string()),
                ("weight".into(), weight.to_string()),
                ("slack-ceiling".into(), args.slack_ceiling.to_string()),
            ];
            let mut r = Report::new("build-module", config);
            if let Err(e) = build::run(&args, &mut r) {
                r.verdict("build-module", Status::Error, Some(e.to_string()));
            }
            r
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("VOXCALC_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let report = run(&cli);
    let text = match cli.format {
        Format::Text => report.render_text(),
        Format::Json => report.render_json(),
    };
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("voxcalc: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code() as u8)
}
