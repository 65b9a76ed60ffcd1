use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use navstream::catalog::{fmt_view, CatalogFile};
use navstream::environment::navigation::steps_per_segment;
use navstream::environment::{convert_neubot, Channel, MarkovChannel, NavigationKind, NavigationModel};
use navstream::experiment::{
    resolve_set, resolve_trace, run_sweep, sweep_presets, write_atomic, ChannelSpec, ExperimentSpec,
    BUDGET_CSV_HEADER,
};
use navstream::oracle::{check_corpus, solve_exhaustive_with};
use navstream::session::{aggregate, run_session, Environment, PredictionMode, SessionConfig};
use navstream::{solve, Algorithm, NavigationWindow, SolveError};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

#[derive(Parser)]
#[command(name = "navstream", version, about = "Multiview representation selection experiments")]
struct Cli {
    /// Base seed for every random process.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Commands print to stdout when it is absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SetArgs {
    /// Preset id (L1, L2, L3, optimized-*) or catalog TOML path.
    #[arg(long, default_value = "L1")]
    set: String,
    #[arg(long)]
    video: String,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one segment.
    Solve {
        #[command(flatten)]
        set: SetArgs,
        /// Navigation window, `left:right`.
        #[arg(long)]
        window: String,
        #[arg(long)]
        budget: f64,
        /// optimal, greedy, view, rate or 2views.
        #[arg(long, default_value = "optimal")]
        algo: String,
        /// Viewpoint the user is expected at; used by `rate`.
        #[arg(long)]
        predicted_view: Option<f64>,
    },
    /// Simulate one streaming session.
    Session {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value = "optimal")]
        algo: String,
        /// markov:<p_c>, trace:sample or trace:<path>.
        #[arg(long, default_value = "markov:0.5")]
        channel: String,
        /// static, uniform or nonuniform:<p_n>.
        #[arg(long, default_value = "uniform")]
        navigation: String,
        #[arg(long, default_value_t = 5.0)]
        start_view: f64,
        #[arg(long, default_value_t = 50)]
        segments: usize,
        /// exact or ewma.
        #[arg(long, default_value = "exact")]
        prediction: String,
        #[arg(long, default_value_t = 2.0)]
        segment_duration: f64,
        #[arg(long, default_value_t = 1)]
        lookahead: u32,
        #[arg(long, default_value_t = 20.0)]
        buffer_reference: f64,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long, default_value_t = navstream::environment::DEFAULT_RHO)]
        rho: f64,
    },
    /// Run an experiment spec.
    Sweep {
        /// Experiment TOML file.
        spec: Option<PathBuf>,
        /// Checked-in spec instead of a file.
        #[arg(long, conflicts_with = "spec")]
        preset: Option<String>,
        #[arg(long)]
        nav_runs: Option<usize>,
        #[arg(long)]
        channel_runs: Option<usize>,
        #[arg(long)]
        segments: Option<usize>,
    },
    /// Cross-check the dynamic program against exhaustive search.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Convert a Neubot speed-test CSV into a throughput trace.
    TraceConvert {
        input: PathBuf,
        /// Destination file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Random small-instance corpus.
    Check {
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Let the oracle score plans that do not span the window.
        #[arg(long)]
        unconstrained: bool,
    },
    /// List every selection of a small catalog with its verdict.
    Enumerate {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        window: String,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        unconstrained: bool,
    },
}

struct Exit {
    code: u8,
    error: anyhow::Error,
}

type Outcome = Result<(), Exit>;

fn config(error: impl Into<anyhow::Error>) -> Exit {
    Exit {
        code: EXIT_CONFIG,
        error: error.into(),
    }
}

fn failure(error: impl Into<anyhow::Error>) -> Exit {
    Exit {
        code: EXIT_FAILURE,
        error: error.into(),
    }
}

fn solve_exit(e: SolveError) -> Exit {
    let code = match e {
        SolveError::Infeasible { .. } | SolveError::Uncoverable => EXIT_INFEASIBLE,
        SolveError::InvalidBudget(_) | SolveError::TooLarge(_) => EXIT_CONFIG,
        SolveError::Distortion(_) => EXIT_FAILURE,
    };
    Exit {
        code,
        error: e.into(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::Solve {
            set,
            window,
            budget,
            algo,
            predicted_view,
        } => cmd_solve(&set, &window, budget, &algo, predicted_view, cli.out.as_deref()),
        Command::Session {
            set,
            algo,
            channel,
            navigation,
            start_view,
            segments,
            prediction,
            segment_duration,
            lookahead,
            buffer_reference,
            kappa,
            rho,
        } => {
            let prediction = match prediction.as_str() {
                "exact" => PredictionMode::Exact,
                "ewma" => PredictionMode::Ewma,
                other => return Err(config(anyhow!("prediction `{other}` (expected exact|ewma)"))),
            };
            let cfg = SessionConfig {
                algo: parse_algo(&algo)?,
                segment_duration,
                lookahead_segments: lookahead,
                buffer_reference,
                kappa,
                num_segments: segments,
                rho,
                prediction,
                ..SessionConfig::default()
            };
            cmd_session(&set, cfg, &channel, &navigation, start_view, seed, cli.out.as_deref())
        }
        Command::Sweep {
            spec,
            preset,
            nav_runs,
            channel_runs,
            segments,
        } => {
            let (text, base) = match (spec, preset) {
                (Some(path), None) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(config)?;
                    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                    (text, base)
                }
                (None, Some(id)) => {
                    let text = sweep_presets::text(&id).ok_or_else(|| {
                        let ids: Vec<_> = sweep_presets::ALL.iter().map(|(k, _)| *k).collect();
                        config(anyhow!("unknown sweep preset `{id}` (known: {})", ids.join(", ")))
                    })?;
                    (text.to_string(), PathBuf::from("."))
                }
                _ => return Err(config(anyhow!("give a spec file or --preset"))),
            };
            let mut spec: ExperimentSpec = text.parse().map_err(config)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            if let Some(sess) = spec.session.as_mut() {
                if let Some(n) = nav_runs {
                    sess.nav_runs = n;
                }
                if let Some(n) = channel_runs {
                    sess.channel_runs = n;
                }
                if let Some(n) = segments {
                    sess.num_segments = n;
                }
                if sess.nav_runs == 0 || sess.channel_runs == 0 || sess.num_segments == 0 {
                    return Err(config(anyhow!("run and segment counts must be at least 1")));
                }
            }
            let out = cli.out.unwrap_or_else(|| PathBuf::from("out"));
            cmd_sweep(&spec, &base, &out, cli.workers)
        }
        Command::Oracle { command } => match command {
            OracleCommand::Check {
                count,
                unconstrained,
            } => cmd_oracle_check(count, seed, !unconstrained),
            OracleCommand::Enumerate {
                set,
                window,
                budget,
                unconstrained,
            } => cmd_oracle_enumerate(&set, &window, budget, !unconstrained, cli.out.as_deref()),
        },
        Command::TraceConvert { input, output } => cmd_trace_convert(&input, output.as_deref()),
    }
}

fn parse_algo(s: &str) -> Result<Algorithm, Exit> {
    s.parse::<Algorithm>().map_err(|e| config(anyhow!(e)))
}

fn load(set: &SetArgs) -> Result<CatalogFile, Exit> {
    let file = resolve_set(&set.set, Path::new(".")).map_err(config)?;
    file.profile(&set.video).map_err(config)?;
    Ok(file)
}

fn emit(out: Option<&Path>, name: &str, body: &str) -> Outcome {
    match out {
        Some(dir) => {
            let path = dir.join(name);
            write_atomic(&path, body).map_err(failure)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => stdout(body),
    }
}

/// A closed pipe downstream (`| head`) is not an error.
fn stdout(body: &str) -> Outcome {
    match io::stdout().lock().write_all(body.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(failure(anyhow::Error::new(e).context("writing stdout")))
        }
        _ => Ok(()),
    }
}

fn join(xs: impl Iterator<Item = u32>, sep: &str) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn cmd_solve(
    set: &SetArgs,
    window: &str,
    budget: f64,
    algo: &str,
    predicted_view: Option<f64>,
    out: Option<&Path>,
) -> Outcome {
    let algo = parse_algo(algo)?;
    let file = load(set)?;
    let grid = &file.catalog.grid;
    let w = NavigationWindow::parse(grid, window).map_err(config)?;
    let predicted = predicted_view
        .map(|u| grid.index_of(u))
        .transpose()
        .map_err(config)?;
    let profile = file.profile(&set.video).map_err(config)?;
    let plan = solve(algo, &file.catalog, profile, &w, budget, predicted).map_err(solve_exit)?;

    let mut text = String::new();
    let _ = writeln!(text, "algo        {algo}");
    let _ = writeln!(text, "window      {}", w.label(grid));
    let _ = writeln!(text, "views       {}", join(plan.views(), " "));
    let _ = writeln!(text, "rates_kbps  {}", join(plan.rates(), " "));
    let _ = writeln!(text, "total_kbps  {}", plan.total_rate);
    let _ = writeln!(text, "distortion  {:.6}", plan.distortion);
    let row = format!(
        "{BUDGET_CSV_HEADER}\n{},{},{},{},{algo},{},{},{},{:.6},0\n",
        set.set,
        set.video,
        w.label(grid),
        budget,
        join(plan.views(), ";"),
        join(plan.rates(), ";"),
        plan.total_rate,
        plan.distortion
    );
    match out {
        Some(_) => {
            stdout(&text)?;
            emit(out, "solve.csv", &row)
        }
        None => stdout(&format!("{text}\n{row}")),
    }
}

fn cmd_session(
    set: &SetArgs,
    cfg: SessionConfig,
    channel: &str,
    navigation: &str,
    start_view: f64,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    cfg.validate().map_err(config)?;
    let file = load(set)?;
    let grid = file.catalog.grid;
    let kind: NavigationKind = navigation.parse().map_err(config)?;
    let start = grid.index_of(start_view).map_err(config)?;
    let nav = NavigationModel::new(
        kind,
        &grid,
        start,
        steps_per_segment(cfg.rho, cfg.segment_duration, &grid),
        seed,
    )
    .map_err(config)?;
    let channel = match channel.parse::<ChannelSpec>().map_err(config)? {
        ChannelSpec::Markov(p) => Channel::Markov(MarkovChannel::reference(p, seed).map_err(config)?),
        ChannelSpec::Trace(path) => Channel::Trace(resolve_trace(&path, Path::new(".")).map_err(config)?),
    };
    let rec = run_session(
        &cfg,
        &file.catalog,
        file.profile(&set.video).map_err(config)?,
        Environment {
            channel,
            navigation: nav,
        },
    )
    .map_err(failure)?;
    let summary = aggregate(std::slice::from_ref(&rec), 1.0).expect("non-empty session");
    let mut s = String::new();
    let _ = writeln!(s, "mean distortion  {:.6}", summary.mean_distortion);
    let _ = writeln!(s, "mean variation   {:.6}", summary.mean_variation);
    let _ = writeln!(s, "rebuffers        {} ({:.3} s)", summary.rebuffer_count, summary.rebuffer_s);
    let _ = writeln!(s, "mean buffer      {:.3} s", summary.mean_buffer_s);
    let _ = writeln!(s, "sentinels        {}", summary.sentinel_count);
    eprint!("{s}");
    emit(out, "session.csv", &rec.to_csv())
}

fn cmd_sweep(spec: &ExperimentSpec, base: &Path, out: &Path, workers: usize) -> Outcome {
    let report = run_sweep(spec, base, out, workers).map_err(|e| match e {
        navstream::experiment::ExperimentError::Config(_) => config(e),
        other => failure(other),
    })?;
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    if report.failures.is_empty() {
        eprintln!("{} cells ok", report.cells);
        return Ok(());
    }
    for f in &report.failures {
        eprintln!("failed cell {}: {}", f.cell, f.error);
    }
    Err(Exit {
        code: EXIT_PARTIAL,
        error: anyhow!("{} of {} cells failed", report.failures.len(), report.cells),
    })
}

fn cmd_oracle_check(count: usize, seed: u64, constrained: bool) -> Outcome {
    if count == 0 {
        return Err(config(anyhow!("the corpus needs at least one instance")));
    }
    let r = check_corpus(count, seed, constrained);
    let mut text = format!(
        "instances {} compared {} max_gap {:e} min_gap {:e}{}\n",
        r.instances,
        r.compared,
        r.max_gap,
        r.min_gap,
        r.worst_seed.map(|s| format!(" worst_seed {s}")).unwrap_or_default()
    );
    if r.passed() {
        text.push_str("ok\n");
        return stdout(&text);
    }
    for (s, why) in &r.failures {
        let _ = writeln!(text, "seed {s}: {why}");
    }
    stdout(&text)?;
    Err(failure(anyhow!("{} instances disagree", r.failures.len())))
}

fn cmd_oracle_enumerate(
    set: &SetArgs,
    window: &str,
    budget: f64,
    constrained: bool,
    out: Option<&Path>,
) -> Outcome {
    let file = load(set)?;
    let w = NavigationWindow::parse(&file.catalog.grid, window).map_err(config)?;
    let mut csv = String::from("ordinal,views,rates_kbps,total_rate,verdict,distortion\n");
    let result = solve_exhaustive_with(
        &file.catalog,
        file.profile(&set.video).map_err(config)?,
        &w,
        budget,
        constrained,
        |e| {
            let d = if e.distortion.is_nan() {
                String::new()
            } else {
                format!("{:.6}", e.distortion)
            };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{d}",
                e.ordinal,
                join(e.items.iter().map(|r| r.view), ";"),
                join(e.items.iter().map(|r| r.rate), ";"),
                e.total_rate,
                e.verdict.as_str()
            );
        },
    );
    match result {
        Ok(o) => {
            emit(out, "enumeration.csv", &csv)?;
            eprintln!(
                "{} enumerated, {} scored, best {} at {:.6}",
                o.enumerated,
                o.scored,
                o.plan
                    .items
                    .iter()
                    .map(|r| format!("{}@{}", fmt_view(r.view as f64), r.rate))
                    .collect::<Vec<_>>()
                    .join(" "),
                o.plan.distortion
            );
            Ok(())
        }
        Err(e @ SolveError::TooLarge(_)) => Err(config(e)),
        Err(e) => {
            emit(out, "enumeration.csv", &csv)?;
            Err(solve_exit(e))
        }
    }
}

fn cmd_trace_convert(input: &Path, output: Option<&Path>) -> Outcome {
    let reader = fs::File::open(input)
        .with_context(|| format!("opening {}", input.display()))
        .map_err(config)?;
    let trace = convert_neubot(io::BufReader::new(reader)).map_err(config)?;
    let csv = trace.to_csv();
    match output {
        Some(path) => {
            fs::write(path, csv)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(failure)?;
            eprintln!("{} samples -> {}", trace.samples().len(), path.display());
            Ok(())
        }
        None => stdout(&csv),
    }
}
