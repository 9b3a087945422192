//! `lift-moments`: reports on random lifts of a multigraph.
//!
//! Every report is a JSON document `{version, config, result}`; the config is
//! the fully resolved run configuration, so a report can be regenerated from
//! its own header. Exit codes: 0 success, 2 invalid input or usage, 3 budget
//! exceeded, 1 any other failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lift_moments::first_moment::{
    asymptotic_first_moment, exact_first_moment, first_moment_report, fractional_pm, MomentReport,
};
use lift_moments::laplace::DEFAULT_CAP;
use lift_moments::lattice::{first_moment_lattice, second_moment_lattice};
use lift_moments::nb_walks::{a4_check, cycle_series, ssc_constant, walk_counts};
use lift_moments::second_moment::{asymptotic_second_moment, exact_second_moment, second_moment_report};
use lift_moments::sim::monte_carlo_moments;
use lift_moments::sim::oracle::{exhaustive_lift_oracle, DEFAULT_ORACLE_CAP};
use lift_moments::{Error, MaximizeOptions, Multigraph, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "lift-moments", version = VERSION, about = "Perfect matchings in random lifts of multigraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CommandName {
    Analyze,
    FirstMoment,
    SecondMoment,
    Cycles,
    SscCheck,
    Simulate,
    Exact,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph summary, lattices, moment asymptotics and the conditioning check.
    Analyze(Common),
    /// Exact and asymptotic E[X] over an n grid.
    FirstMoment(Common),
    /// Exact and asymptotic E[X^2] over an n grid.
    SecondMoment(Common),
    /// Non-backtracking walk counts and cycle statistics up to kmax.
    Cycles(Common),
    /// Compares lim E[X^2]/E[X]^2 with the conditioning constant.
    SscCheck(Common),
    /// Monte Carlo estimates on sampled lifts (requires --seed).
    Simulate(Common),
    /// Exact E[X] and E[X^2], optionally against all lifts.
    Exact(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Common {
    /// Graph document `{"g": <int>, "edges": [[i, j], ...]}`.
    #[arg(long)]
    graph: PathBuf,
    /// Lift size for simulate and exact (default 30 and 2).
    #[arg(long)]
    n: Option<u64>,
    /// Comma-separated lift sizes (default 2,4,6,8,10,12 for the first
    /// moment, 1,2 for the second moment).
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    /// Random seed; required by simulate, also seeds optimizer restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest cycle length (default 20; 6 for simulate, which allows at most 12).
    #[arg(long)]
    kmax: Option<usize>,
    /// Enumeration budget in search nodes for exact sums.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Also enumerate all lifts for exact (budget: (n!)^h <= 10^6).
    #[arg(long)]
    oracle: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// The resolved configuration, embedded in every report.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: CommandName,
    graph: String,
    n: Option<u64>,
    n_grid: Option<Vec<u64>>,
    trials: Option<usize>,
    seed: u64,
    kmax: Option<usize>,
    cap: u64,
    oracle: bool,
    out: Option<String>,
    format: Format,
    threads: usize,
}

fn resolve(command: CommandName, c: &Common) -> Result<RunConfig, Error> {
    use CommandName::*;
    if c.threads == 0 {
        return Err(Error::InvalidConfig("--threads must be at least 1".into()));
    }
    let seed = match (command, c.seed) {
        (Simulate, None) => return Err(Error::InvalidConfig("simulate requires --seed".into())),
        (_, s) => s.unwrap_or(0),
    };
    let n = match command {
        Simulate => Some(c.n.unwrap_or(30)),
        Exact if c.n_grid.is_none() => Some(c.n.unwrap_or(2)),
        _ => None,
    };
    let n_grid = match command {
        FirstMoment => Some(c.n_grid.clone().unwrap_or_else(|| vec![2, 4, 6, 8, 10, 12])),
        SecondMoment => Some(c.n_grid.clone().unwrap_or_else(|| vec![1, 2])),
        Exact => c.n_grid.clone(),
        _ => None,
    };
    let kmax = match command {
        Cycles | Analyze => Some(c.kmax.unwrap_or(20)),
        Simulate => Some(c.kmax.unwrap_or(6)),
        _ => None,
    };
    if kmax == Some(0) {
        return Err(Error::InvalidConfig("--kmax must be at least 1".into()));
    }
    let csv_ok = matches!(command, FirstMoment | SecondMoment | Cycles | Simulate);
    if c.format == Format::Csv && !csv_ok {
        return Err(Error::InvalidConfig("csv output is available for first-moment, second-moment, cycles and simulate".into()));
    }
    Ok(RunConfig {
        command,
        graph: c.graph.display().to_string(),
        n,
        n_grid,
        trials: (command == Simulate).then_some(c.trials),
        seed,
        kmax,
        cap: c.cap,
        oracle: c.oracle && command == Exact,
        out: c.out.as_ref().map(|p| p.display().to_string()),
        format: c.format,
        threads: c.threads,
    })
}

struct Output {
    json: Value,
    csv: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, csv: None }
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(x)?)
}

fn optimizer(cfg: &RunConfig) -> MaximizeOptions {
    MaximizeOptions { seed: cfg.seed, ..Default::default() }
}

/// Runs a fallible section; failures other than invalid input become a note.
fn section<T: Serialize>(f: impl FnOnce() -> Result<T, Error>) -> Result<Value, Error> {
    match f() {
        Ok(v) => to_value(&v),
        Err(e @ (Error::NotRegular | Error::DegreeTooSmall(_) | Error::Hypothesis(_) | Error::Budget { .. })) => {
            Ok(json!({ "unavailable": e.to_string() }))
        }
        Err(e) => Err(e),
    }
}

fn analyze(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let opts = optimizer(cfg);
    let kmax = cfg.kmax.unwrap_or(20);
    let fpm = fractional_pm(graph).map(|z| z.iter().map(ToString::to_string).collect::<Vec<_>>());
    Ok(Output::json(json!({
        "graph": {
            "g": graph.vertex_count(),
            "h": graph.edge_count(),
            "regular_degree": graph.regular_degree(),
            "bipartite": graph.is_bipartite(),
            "fractional_perfect_matching": fpm,
        },
        "first_moment_lattice": section(|| first_moment_lattice(graph))?,
        "second_moment_lattice": section(|| second_moment_lattice(graph))?,
        "first_moment": section(|| asymptotic_first_moment(graph, &opts))?,
        "second_moment": section(|| asymptotic_second_moment(graph, &opts))?,
        "cycles": section(|| cycle_series(graph, kmax))?,
        "ssc": section(|| ssc_constant(graph, kmax))?,
        "a4_check": section(|| a4_check(graph, &opts))?,
    })))
}

fn moment_csv(report: &MomentReport) -> String {
    let mut out = String::from("n,allowed_by_z,exact_num,exact_den,asymptotic,ratio\n");
    for r in &report.rows {
        let (num, den) = r
            .exact
            .as_ref()
            .map_or((String::new(), String::new()), |q| (q.numer().to_string(), q.denom().to_string()));
        out.push_str(&format!(
            "{},{},{num},{den},{:.14e},{}\n",
            r.n,
            r.allowed_by_z,
            r.asymptotic_value_at_n,
            r.ratio.clone().unwrap_or_default()
        ));
    }
    out
}

fn first_moment(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let grid = cfg.n_grid.as_deref().unwrap_or(&[]);
    let report = first_moment_report(graph, grid, cfg.cap, &optimizer(cfg))?;
    Ok(Output {
        json: to_value(&report)?,
        csv: Some(moment_csv(&report)),
    })
}

fn second_moment(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let grid = cfg.n_grid.as_deref().unwrap_or(&[]);
    let (report, asym) = second_moment_report(graph, grid, cfg.cap, &optimizer(cfg))?;
    let mut json = to_value(&report)?;
    if let Some(a) = asym {
        json["maximizer"] = to_value(&a.maximizer)?;
        json["lattice"] = to_value(&a.lattice)?;
        json["det_exact"] = to_value(&lift_moments::report::Exact(a.det_exact))?;
    }
    Ok(Output {
        json,
        csv: Some(moment_csv(&report)),
    })
}

fn cycles(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let kmax = cfg.kmax.unwrap_or(20);
    let walks = walk_counts(graph, kmax)?;
    let series = section(|| cycle_series(graph, kmax))?;
    let mut csv = String::from("k,w_k,lambda_k,delta_k,mu_k\n");
    if let Ok(s) = cycle_series(graph, kmax) {
        for r in &s.rows {
            csv.push_str(&format!("{},{},{},{},{}\n", r.k, r.w_k, r.lambda_k, r.delta_k, r.mu_k));
        }
    } else {
        csv = String::from("k,w_k\n");
        for (i, w) in walks.trace.iter().enumerate() {
            csv.push_str(&format!("{},{w}\n", i + 1));
        }
    }
    Ok(Output {
        json: json!({ "walk_counts": walks, "series": series }),
        csv: Some(csv),
    })
}

fn ssc_check(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let a4 = a4_check(graph, &optimizer(cfg))?;
    let ssc = ssc_constant(graph, 20)?;
    Ok(Output::json(json!({
        "lhs": a4.lhs,
        "rhs": a4.rhs,
        "pass": a4.pass,
        "check": a4,
        "ssc": ssc,
    })))
}

fn simulate(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let n = cfg.n.unwrap_or(30) as usize;
    let report = monte_carlo_moments(graph, n, cfg.trials.unwrap_or(2000), cfg.kmax.unwrap_or(6), cfg.seed)?;
    let csv = report.to_csv();
    Ok(Output {
        json: to_value(&report)?,
        csv: Some(csv),
    })
}

fn exact(graph: &Multigraph, cfg: &RunConfig) -> Result<Output, Error> {
    let grid = match (&cfg.n_grid, cfg.n) {
        (Some(g), _) => g.clone(),
        (None, n) => vec![n.unwrap_or(2)],
    };
    let regular = graph.regular_degree().is_some_and(|d| d >= 3);
    let mut rows = Vec::new();
    for n in grid {
        let first = exact_first_moment(graph, n, cfg.cap)?;
        let second = if regular { Some(exact_second_moment(graph, n, cfg.cap)?) } else { None };
        let mut row = json!({ "n": n, "first_moment": first, "second_moment": second });
        if cfg.oracle {
            let oracle = exhaustive_lift_oracle(graph, n as usize, 0, DEFAULT_ORACLE_CAP)?;
            row["oracle"] = json!({
                "lifts": oracle.lifts,
                "e_x": to_value(&lift_moments::report::Exact(oracle.e_x.clone()))?,
                "e_x2": to_value(&lift_moments::report::Exact(oracle.e_x2.clone()))?,
                "first_moment_equal": oracle.e_x == first.value,
                "second_moment_equal": second.as_ref().map(|s| s.value == oracle.e_x2),
            });
        }
        rows.push(row);
    }
    Ok(Output::json(json!({ "rows": rows })))
}

fn run(command: CommandName, common: &Common) -> Result<String, Error> {
    let cfg = resolve(command, common)?;
    let graph = Multigraph::load(&common.graph)?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    let output = match command {
        CommandName::Analyze => analyze(&graph, &cfg)?,
        CommandName::FirstMoment => first_moment(&graph, &cfg)?,
        CommandName::SecondMoment => second_moment(&graph, &cfg)?,
        CommandName::Cycles => cycles(&graph, &cfg)?,
        CommandName::SscCheck => ssc_check(&graph, &cfg)?,
        CommandName::Simulate => simulate(&graph, &cfg)?,
        CommandName::Exact => exact(&graph, &cfg)?,
    };
    match (cfg.format, output.csv) {
        (Format::Csv, Some(csv)) => {
            // CSV has no room for a header object; the config goes in comment lines.
            let header = serde_json::to_string(&json!({ "version": VERSION, "config": cfg }))?;
            Ok(format!("# {header}\n{csv}"))
        }
        _ => {
            let doc = json!({ "version": VERSION, "config": cfg, "result": output.json });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget { .. } => 3,
        Error::Parse(_)
        | Error::EmptyGraph
        | Error::LoopEdge { .. }
        | Error::VertexOutOfRange { .. }
        | Error::Disconnected
        | Error::NotRegular
        | Error::DegreeTooSmall(_)
        | Error::InvalidConfig(_)
        | Error::Dimension(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, common) = match &cli.command {
        Command::Analyze(c) => (CommandName::Analyze, c),
        Command::FirstMoment(c) => (CommandName::FirstMoment, c),
        Command::SecondMoment(c) => (CommandName::SecondMoment, c),
        Command::Cycles(c) => (CommandName::Cycles, c),
        Command::SscCheck(c) => (CommandName::SscCheck, c),
        Command::Simulate(c) => (CommandName::Simulate, c),
        Command::Exact(c) => (CommandName::Exact, c),
    };
    let result = run(name, common).and_then(|text| match &common.out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
