mod output;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use typeb::enumerate::{enumerate_with_cap, Node, StatTotals, DEFAULT_MAX_SIZE};
use typeb::expect::{to_f64, FormulaTable};
use typeb::pasep::{self, PasepParams, PasepState};
use typeb::sample::{self, stream_rng, UChainTable};
use typeb::verify::{self, fraction, Check};
use typeb::{grid_to_history, BorderPath, Grid, StatRecord, Statistic, Tableau};

use output::{open_output, write_json, write_records, Format};

#[derive(Debug, Parser)]
#[command(name = "typeb", version, about = "Type-B permutation tableaux toolkit")]
struct Cli {
    /// Output format for tables and reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the random commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check tableaux (or grids with --grid), one per line.
    Validate {
        /// Input file; stdin if omitted or "-".
        input: Option<PathBuf>,
        /// Read grid text (rows separated by '/', '.' for an empty row).
        #[arg(long)]
        grid: bool,
    },
    /// Write every tableau of size n, one per line, in canonical order.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Size limit; raise it explicitly for n above the default.
        #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
        max_size: usize,
    },
    /// Per-tableau statistics with exact means.
    Stats {
        /// Input file; stdin if omitted or "-".
        input: Option<PathBuf>,
    },
    /// Compare closed forms with exhaustive enumeration.
    Verify {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Comma-separated subset of checks (default: all).
        #[arg(long, value_delimiter = ',')]
        which: Vec<Check>,
    },
    /// Exact closed-form values for one size.
    Formulas {
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo estimates of statistics.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Comma-separated statistics (default: all).
        #[arg(long, value_delimiter = ',')]
        stat: Vec<Statistic>,
        #[arg(long, value_enum, default_value_t = Method::Weighted)]
        method: Method,
        /// Independent RNG streams.
        #[arg(long, default_value_t = 8)]
        streams: u64,
        /// Write the uniformly sampled tableaux instead of estimates.
        #[arg(long)]
        emit: bool,
    },
    /// Map borders or tableaux to PASEP states.
    PasepMap {
        /// Border (S/W string) or tableau text; stdin lines if none given.
        inputs: Vec<String>,
    },
    /// Stationary distribution of the PASEP on a few sites.
    PasepStationary {
        #[arg(long)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
    },
    /// Event-by-event PASEP simulation from the empty state.
    PasepSimulate {
        #[arg(long)]
        sites: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        #[arg(long)]
        horizon: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Uniform child at each step with importance weights.
    Weighted,
    /// Exact uniform sampler.
    Uniform,
}

/// Error plus the exit status it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<typeb::Error>() {
            Some(typeb::Error::ResourceCap { .. }) => 3,
            _ => 2,
        };
        Failure { code, error }
    }
}

impl From<typeb::Error> for Failure {
    fn from(e: typeb::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let out_path = cli.out.as_deref();
    match &cli.command {
        Command::Validate { input, grid } => validate(cli, input.as_deref(), *grid),
        Command::Enumerate { n, max_size } => enumerate(out_path, *n, *max_size),
        Command::Stats { input } => stats(cli, input.as_deref()),
        Command::Verify { n_max, which } => verify_cmd(cli, *n_max, which),
        Command::Formulas { n } => formulas(cli, *n),
        Command::Sample {
            n,
            samples,
            stat,
            method,
            streams,
            emit,
        } => sample_cmd(cli, *n, *samples, stat, *method, *streams, *emit),
        Command::PasepMap { inputs } => pasep_map(cli, inputs),
        Command::PasepStationary {
            sites,
            alpha,
            beta,
            q,
        } => pasep_stationary(cli, *sites, PasepParams::new(*alpha, *beta, *q)?),
        Command::PasepSimulate {
            sites,
            alpha,
            beta,
            q,
            horizon,
        } => pasep_simulate(cli, *sites, PasepParams::new(*alpha, *beta, *q)?, *horizon),
    }
}

/// Input lines with their 1-based numbers; `#` lines are skipped. Empty lines
/// are kept because the empty string is the size-0 tableau.
fn read_lines(input: Option<&Path>) -> anyhow::Result<Vec<(usize, String)>> {
    let reader: Box<dyn BufRead> = match input {
        Some(p) if p != Path::new("-") => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("cannot open {}", p.display()))?,
        )),
        _ => Box::new(BufReader::new(io::stdin().lock())),
    };
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r').trim();
        if !line.starts_with('#') {
            lines.push((i + 1, line.to_string()));
        }
    }
    Ok(lines)
}

#[derive(Serialize)]
struct ValidateRow {
    line: usize,
    input: String,
    valid: bool,
    canonical: String,
    detail: String,
}

const VALIDATE_HEADERS: &[&str] = &["line", "input", "valid", "canonical", "detail"];

fn validate(cli: &Cli, input: Option<&Path>, grid: bool) -> Outcome {
    let mut rows = Vec::new();
    for (line, text) in read_lines(input)? {
        let (valid, canonical, detail) = if grid {
            check_grid(&text)
        } else {
            match text.parse::<Tableau>() {
                Ok(t) => (true, t.to_string(), format!("U_n = {}", t.unrestricted())),
                Err(e) => (false, String::new(), e.to_string()),
            }
        };
        rows.push(ValidateRow {
            line,
            input: text,
            valid,
            canonical,
            detail,
        });
    }
    let mut out = open_output(cli.out.as_deref())?;
    write_records(&mut out, cli.format, VALIDATE_HEADERS, &rows)?;
    out.flush()?;
    Ok(u8::from(rows.iter().any(|r| !r.valid)))
}

fn check_grid(text: &str) -> (bool, String, String) {
    let grid: Grid = match text.parse() {
        Ok(g) => g,
        Err(e) => return (false, String::new(), e.to_string()),
    };
    match grid.validate() {
        Err(e) => (false, String::new(), e.to_string()),
        Ok(report) if !report.is_ok() => {
            let list: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            (false, String::new(), list.join("; "))
        }
        Ok(_) => match grid_to_history(&grid) {
            Ok(h) => (true, h.to_string(), String::new()),
            Err(e) => (false, String::new(), e.to_string()),
        },
    }
}

fn enumerate(out_path: Option<&Path>, n: usize, max_size: usize) -> Outcome {
    let mut out = open_output(out_path)?;
    let mut write_error = None;
    let count = enumerate_with_cap(n, max_size, &mut |node: &Node<'_>| {
        if write_error.is_none() {
            if let Err(e) = writeln!(out, "{}", node.history()) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    out.flush()?;
    eprintln!("{count} tableaux of size {n}");
    Ok(0)
}

#[derive(Serialize)]
struct StatRow {
    line: usize,
    tableau: String,
    n: usize,
    rows: usize,
    columns: usize,
    unrestricted: usize,
    diagonal_ones: usize,
    ss_pairs: usize,
    ww_pairs: usize,
    sw_pairs: usize,
    ws_pairs: usize,
    g_trace: String,
}

const STAT_HEADERS: &[&str] = &[
    "line",
    "tableau",
    "n",
    "rows",
    "columns",
    "unrestricted",
    "diagonal_ones",
    "ss_pairs",
    "ww_pairs",
    "sw_pairs",
    "ws_pairs",
    "g_trace",
];

impl StatRow {
    fn new(line: usize, tableau: String, s: &StatRecord) -> Self {
        let g: Vec<String> = s
            .g_trace
            .iter()
            .map(|g| g.map_or("-".to_string(), |v| v.to_string()))
            .collect();
        StatRow {
            line,
            tableau,
            n: s.n,
            rows: s.rows,
            columns: s.columns,
            unrestricted: s.unrestricted,
            diagonal_ones: s.diagonal_ones,
            ss_pairs: s.ss_pairs,
            ww_pairs: s.ww_pairs,
            sw_pairs: s.sw_pairs,
            ws_pairs: s.ws_pairs,
            g_trace: g.join(" "),
        }
    }
}

#[derive(Serialize)]
struct MeanRow {
    statistic: Statistic,
    total: u64,
    count: u64,
    mean: String,
    decimal: f64,
}

fn stats(cli: &Cli, input: Option<&Path>) -> Outcome {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut totals = StatTotals::default();
    for (line, text) in read_lines(input)? {
        let t: Tableau = text
            .parse()
            .map_err(|e| anyhow!("line {line}: {e}"))?;
        let s = t.stats();
        totals.add(&s);
        rows.push(StatRow::new(line, t.to_string(), &s));
        records.push(s);
    }
    let means: Vec<MeanRow> = if totals.count == 0 {
        Vec::new()
    } else {
        Statistic::ALL
            .iter()
            .map(|&stat| {
                let mean = totals.mean(stat);
                MeanRow {
                    statistic: stat,
                    total: totals.total(stat),
                    count: totals.count,
                    mean: fraction(&mean),
                    decimal: to_f64(&mean),
                }
            })
            .collect()
    };

    let mut out = open_output(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => {
            write_records(&mut out, Format::Csv, STAT_HEADERS, &rows)?;
            for m in &means {
                writeln!(out, "# mean {} = {} ({})", m.statistic, m.mean, m.decimal)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                records: &'a [StatRecord],
                count: u64,
                means: &'a [MeanRow],
            }
            write_json(
                &mut out,
                &Report {
                    records: &records,
                    count: totals.count,
                    means: &means,
                },
            )?;
        }
    }
    out.flush()?;
    Ok(0)
}

const VERIFY_HEADERS: &[&str] = &[
    "statistic",
    "n",
    "k",
    "param",
    "closed_form",
    "brute",
    "closed_form_decimal",
    "brute_decimal",
    "matches",
    "expected_match",
    "ok",
];

fn verify_cmd(cli: &Cli, n_max: usize, which: &[Check]) -> Outcome {
    let which = if which.is_empty() { &Check::ALL[..] } else { which };
    let rows = verify::run(n_max, which)?;
    let records: Vec<_> = rows.iter().map(|r| r.record()).collect();
    let mut out = open_output(cli.out.as_deref())?;
    write_records(&mut out, cli.format, VERIFY_HEADERS, &records)?;
    out.flush()?;
    let bad = rows.iter().filter(|r| !r.ok()).count();
    let flagged = rows.iter().filter(|r| !r.expected_match).count();
    eprintln!(
        "{} rows, {bad} unexpected, {flagged} variant rows expected to differ",
        rows.len()
    );
    Ok(u8::from(bad > 0))
}

fn formulas(cli: &Cli, n: usize) -> Outcome {
    let table = FormulaTable::new(n)?;
    let mut out = open_output(cli.out.as_deref())?;
    let headers = ["n", "statistic", "k", "numerator", "denominator", "decimal"];
    write_records(&mut out, cli.format, &headers, &table.records())?;
    out.flush()?;
    Ok(0)
}

const ESTIMATE_HEADERS: &[&str] = &[
    "statistic",
    "n",
    "num_samples",
    "seed",
    "mean",
    "std_error",
    "effective_sample_size",
    "mean_weight",
    "weight_std_error",
];

fn sample_cmd(
    cli: &Cli,
    n: usize,
    samples: u64,
    stat: &[Statistic],
    method: Method,
    streams: u64,
    emit: bool,
) -> Outcome {
    let stats = if stat.is_empty() { &Statistic::ALL[..] } else { stat };
    let mut out = open_output(cli.out.as_deref())?;
    if emit {
        let table = UChainTable::build(n)?;
        let mut rng = stream_rng(cli.seed, 0);
        for _ in 0..samples {
            writeln!(out, "{}", sample::sample_uniform_history(&table, &mut rng))?;
        }
        out.flush()?;
        return Ok(0);
    }
    let reports = match method {
        Method::Weighted => sample::estimate_many(n, stats, samples, cli.seed, streams)?,
        Method::Uniform => sample::estimate_uniform(n, stats, samples, cli.seed, streams)?,
    };
    write_records(&mut out, cli.format, ESTIMATE_HEADERS, &reports)?;
    out.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct MapRow {
    input: String,
    border: String,
    state: String,
    sites: String,
    filled: usize,
    filled_pairs: usize,
    empty_pairs: usize,
}

fn pasep_map(cli: &Cli, inputs: &[String]) -> Outcome {
    let inputs: Vec<String> = if inputs.is_empty() {
        read_lines(None)?.into_iter().map(|(_, l)| l).collect()
    } else {
        inputs.to_vec()
    };
    let mut rows = Vec::new();
    for text in inputs {
        let border = match text.parse::<BorderPath>() {
            Ok(b) => b,
            Err(_) => text
                .parse::<Tableau>()
                .map(|t| t.border().clone())
                .map_err(|e| anyhow!("{text:?}: {e}"))?,
        };
        let state = pasep::border_to_state(&border);
        let summary = pasep::occupancy_summary(&state);
        rows.push(MapRow {
            input: text,
            border: border.to_string(),
            state: state.to_string(),
            sites: state.bitstring(),
            filled: summary.filled,
            filled_pairs: summary.filled_pairs,
            empty_pairs: summary.empty_pairs,
        });
    }
    let mut out = open_output(cli.out.as_deref())?;
    let headers = [
        "input",
        "border",
        "state",
        "sites",
        "filled",
        "filled_pairs",
        "empty_pairs",
    ];
    write_records(&mut out, cli.format, &headers, &rows)?;
    out.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct SiteRow {
    site: usize,
    occupancy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
}

fn by_state(m: usize, values: impl Iterator<Item = f64>) -> BTreeMap<String, f64> {
    values
        .enumerate()
        .map(|(i, v)| (PasepState::from_index(i, m).bitstring(), v))
        .collect()
}

fn pasep_stationary(cli: &Cli, sites: usize, params: PasepParams) -> Outcome {
    let st = pasep::stationary(sites, &params)?;
    let marginals = st.site_marginals();
    let mut out = open_output(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => {
            let rows: Vec<SiteRow> = marginals
                .iter()
                .enumerate()
                .map(|(i, &occupancy)| SiteRow {
                    site: i + 1,
                    occupancy,
                    std_error: None,
                })
                .collect();
            write_records(&mut out, Format::Csv, &["site", "occupancy"], &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                sites: usize,
                params: PasepParams,
                residual: f64,
                probabilities: BTreeMap<String, f64>,
                site_occupancy: Vec<f64>,
            }
            write_json(
                &mut out,
                &Report {
                    sites,
                    params,
                    residual: st.residual,
                    probabilities: by_state(sites, st.probabilities.iter().copied()),
                    site_occupancy: marginals,
                },
            )?;
        }
    }
    out.flush()?;
    Ok(0)
}

fn pasep_simulate(cli: &Cli, sites: usize, params: PasepParams, horizon: f64) -> Outcome {
    let report = pasep::simulate(sites, &params, horizon, cli.seed)?;
    let mut out = open_output(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => {
            let rows: Vec<SiteRow> = report
                .occupancy
                .iter()
                .zip(&report.occupancy_std_error)
                .enumerate()
                .map(|(i, (&occupancy, &se))| SiteRow {
                    site: i + 1,
                    occupancy,
                    std_error: Some(se),
                })
                .collect();
            write_records(&mut out, Format::Csv, &["site", "occupancy", "std_error"], &rows)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                sites: usize,
                params: PasepParams,
                horizon: f64,
                seed: u64,
                events: u64,
                site_occupancy: Vec<f64>,
                site_std_error: Vec<f64>,
                visit_counts: BTreeMap<String, u64>,
            }
            let visits = report
                .visit_counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (PasepState::from_index(i, sites).bitstring(), c))
                .collect();
            write_json(
                &mut out,
                &Report {
                    sites,
                    params,
                    horizon,
                    seed: cli.seed,
                    events: report.events,
                    site_occupancy: report.occupancy,
                    site_std_error: report.occupancy_std_error,
                    visit_counts: visits,
                },
            )?;
        }
    }
    out.flush()?;
    Ok(0)
}
