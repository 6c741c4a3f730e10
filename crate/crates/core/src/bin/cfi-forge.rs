use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use cfi_forge::error::{Error, Result};
use cfi_forge::pipeline::commands::{cmd_play, cmd_solve, cmd_verify, read_graph, Game, MatchSpec, PlayMode};
use cfi_forge::pipeline::criteria::Level;
use cfi_forge::pipeline::generate::cmd_generate;
use cfi_forge::pipeline::suite::cmd_suite;
use cfi_forge::pipeline::{Bundle, Config, Exit, Format, RunManifest};

#[derive(Parser)]
#[command(name = "cfi-forge", version, about = "Compressed CFI instances, ISO formulas and exact game solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the grid, compression, CFI pairs, twinned pairs and ISO formula.
    Generate(Common),
    /// Solve a game on two graph documents.
    Solve(SolveArgs),
    /// Scripted robber against greedy cops on the configured grid.
    Play(PlayArgs),
    /// Check a transcript, or every manifest and transcript under a bundle.
    Verify { path: PathBuf },
    /// Run the acceptance criteria.
    Suite(SuiteArgs),
}

/// Flags shared with the configuration file; a flag overrides the file.
#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// Coprime window; alone it selects the full-size grid.
    #[arg(long)]
    w: Option<u64>,
    /// Desk-scale grid with `4·k·q` columns.
    #[arg(long)]
    desk_q: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Allow grids above the size guard.
    #[arg(long)]
    huge: bool,
    /// Record wall-clock times (outputs then differ between runs).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Dimacs,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    game: GameArg,
    /// Graph document for G.
    #[arg(long = "g")]
    g: PathBuf,
    /// Graph document for H.
    #[arg(long = "h")]
    h: PathBuf,
    #[arg(long)]
    k: usize,
    /// Also decide whether Spoiler wins within this many rounds.
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameArg {
    Pebble,
    PebbleSearch,
    Blocking,
    ProverDelayer,
    Refutation,
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "compressed")]
    mode: ModeArg,
    /// Cops plus roadblocks; defaults to k.
    #[arg(long)]
    pieces: Option<usize>,
    #[arg(long, default_value_t = 10)]
    rounds: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Compressed,
    Blocking,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, value_enum, default_value = "smoke")]
    level: LevelArg,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Smoke,
    Full,
}

fn config(c: &Common) -> Result<Config> {
    let mut base = Config::from_env()?;
    if c.w.is_some() && c.desk_q.is_none() {
        base.desk_q = None;
    }
    Ok(base.overlay(Config {
        k: c.k,
        t: c.t,
        w: c.w,
        desk_q: c.desk_q,
        seed: c.seed,
        out: c.out.clone(),
        format: c.format.map(|f| match f {
            FormatArg::Json => Format::Json,
            FormatArg::Dimacs => Format::Dimacs,
        }),
        jobs: c.jobs,
        huge: c.huge.then_some(true),
        timings: c.timings.then_some(true),
    }))
}

fn out_dir(out: Option<PathBuf>, command: &str) -> PathBuf {
    out.unwrap_or_else(|| Path::new("cfi-forge-out").join(command))
}

fn write(bundle: &Bundle, dir: &Path) -> Result<()> {
    bundle.write(dir)?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<Exit> {
    match cli.command {
        Command::Generate(c) => {
            let cfg = config(&c)?;
            let params = cfg.params()?;
            eprintln!("{}", params.estimate());
            for w in params.warnings() {
                eprintln!("warning: {w}");
            }
            let gen = cmd_generate(&params, cfg.format.unwrap_or(Format::Json), cfg.huge.unwrap_or(false))?;
            for c in &gen.checks {
                println!("{} {} {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            write(&gen.bundle, &out_dir(cfg.out, "generate"))?;
            Ok(if gen.pass() { Exit::Pass } else { Exit::Violation })
        }
        Command::Solve(a) => {
            let (g, gb) = read_graph(&a.g)?;
            let (h, hb) = read_graph(&a.h)?;
            let game = match a.game {
                GameArg::Pebble => Game::Pebble,
                GameArg::PebbleSearch => Game::PebbleSearch,
                GameArg::Blocking => Game::Blocking,
                GameArg::ProverDelayer => Game::ProverDelayer,
                GameArg::Refutation => Game::Refutation,
            };
            let report = cmd_solve(game, &g, &h, a.k, a.rounds, a.timings)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(dir) = a.out {
                let mut bundle = Bundle::new();
                bundle.add_json("report.json", &report)?;
                let mut m = RunManifest::new("solve", json!({ "game": game, "k": a.k, "rounds": a.rounds }));
                m.input("g", &gb);
                m.input("h", &hb);
                bundle.seal(m)?;
                write(&bundle, &dir)?;
            }
            Ok(Exit::Pass)
        }
        Command::Play(a) => {
            let cfg = config(&a.common)?;
            let params = cfg.params()?;
            eprintln!("{}", params.estimate());
            let mode = match a.mode {
                ModeArg::Compressed => PlayMode::Compressed,
                ModeArg::Blocking => PlayMode::Blocking,
            };
            let spec = MatchSpec { mode, pieces: a.pieces.unwrap_or(params.k), rounds: a.rounds };
            let (tr, bundle) = cmd_play(&params, &spec)?;
            println!("robber survived {} of {} rounds", tr.survived(), spec.rounds);
            write(&bundle, &out_dir(cfg.out, "play"))?;
            Ok(Exit::Pass)
        }
        Command::Verify { path } => {
            let report = cmd_verify(&path)?;
            for c in &report.checks {
                println!("{} {} {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if report.pass() { Exit::Pass } else { Exit::Violation })
        }
        Command::Suite(a) => {
            let cfg = Config::from_env()?;
            let jobs = a.jobs.unwrap_or(cfg.jobs());
            let level = match a.level {
                LevelArg::Smoke => Level::Smoke,
                LevelArg::Full => Level::Full,
            };
            let run = cmd_suite(level, jobs, a.timings)?;
            for r in &run.reports {
                println!("{}", r.line());
            }
            write(&run.bundle, &out_dir(a.out.or(cfg.out), "suite"))?;
            Ok(if run.pass() { Exit::Pass } else { Exit::Violation })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(exit) => ExitCode::from(exit.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::StateSpaceTooLarge { .. } = e {
                eprintln!("hint: pass --huge to build it anyway");
            }
            ExitCode::from(Exit::of_error(&e).code() as u8)
        }
    }
}
