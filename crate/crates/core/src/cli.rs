//! Command-line driver: `compute`, `aggregate`, `simulate` and `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aggregate::{Aggregator, IntervalPolicy, IntervalRecord};
use crate::domain::{CallRecord, Preference, RoutingGroup, Timestamp, VendorId};
use crate::error::Error;
use crate::rejection::{compute_rejection, QualityInput, DEFAULT_LOAD_MIN};
use crate::report::{render_calc_breakdown, render_interval_table, TableFormat};
use crate::sim::{run_scenario, sweep, ScenarioConfig, ScenarioResult};
use crate::store::{self, IntervalCounters, MemoryStore, Store, TimeRange};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "acd-routing",
    version,
    about = "Quality-driven call routing toolkit"
)]
pub struct Cli {
    /// Seed for every random draw; overrides a scenario file's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rejection calculator for one pair of ACDs.
    Compute(ComputeArgs),
    /// Replay interval ticks over a CDR CSV file.
    Aggregate(AggregateArgs),
    /// Run a closed-loop traffic simulation.
    Simulate(SimulateArgs),
    /// Render the interval table from a saved history.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// ACD of both routes in minutes, e.g. `8.67,0.6`; `-` marks an absent ACD.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    pub acd: Vec<String>,
    /// Billing preferences (1-9) of both routes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub pref: Vec<u8>,
    #[arg(long, default_value_t = DEFAULT_LOAD_MIN)]
    pub load_min: f64,
    /// Labels used in the detail lines.
    #[arg(long, value_delimiter = ',', default_values = ["A", "B"])]
    pub vendors: Vec<String>,
    /// Also write `calc.txt` and `calc.html` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    #[arg(long, default_value_t = DEFAULT_LOAD_MIN)]
    pub load_min: f64,
    #[arg(long, default_value_t = 10)]
    pub tick_min: i64,
    #[arg(long, default_value_t = 20)]
    pub min_interval_min: i64,
    #[arg(long, default_value_t = 20)]
    pub min_calls: u64,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// CDR CSV (`call_id,vendor,connect_time,disconnect_time,duration_s,cause,rejected`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// The two vendor ids; inferred from the file when omitted.
    #[arg(long, value_delimiter = ',')]
    pub vendors: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',', default_values_t = [9u8, 8u8])]
    pub pref: Vec<u8>,
    #[command(flatten)]
    pub interval: IntervalArgs,
    #[arg(long, default_value = "37410")]
    pub prefix: String,
    /// Start of the first interval (`YYYY-MM-DD HH:MM:SS`); defaults to the
    /// earliest record, rounded down to the tick period.
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Bundled scenario name (honest_vs_fas, identical_honest).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Accept every call at the clones (negative control).
    #[arg(long)]
    pub disable_admission: bool,
    /// Also run this many consecutive seeds and write `sweep.json`.
    #[arg(long)]
    pub sweep: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `interval_history.json` written by `aggregate` or `simulate`.
    #[arg(long)]
    pub history: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// html, csv or json; all three when omitted.
    #[arg(long)]
    pub format: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Validation(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a, out),
        Command::Aggregate(a) => cmd_aggregate(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn pair<'a, T>(name: &str, values: &'a [T]) -> CliResult<&'a [T; 2]> {
    values.try_into().map_err(|_| {
        CliError::Usage(format!(
            "--{name} takes exactly two values, got {}",
            values.len()
        ))
    })
}

fn prefs(values: &[u8]) -> CliResult<[Preference; 2]> {
    let [a, b] = *pair("pref", values)?;
    Ok([Preference::new(a)?, Preference::new(b)?])
}

fn parse_acd(s: &str) -> CliResult<Option<f64>> {
    match s.trim() {
        "-" | "" | "null" | "NULL" => Ok(None),
        v => v
            .parse::<f64>()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("ACD {v:?}: {e}"))),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_compute(args: &ComputeArgs, out: &mut dyn Write) -> CliResult {
    let [a, b] = pair("acd", &args.acd)?;
    let acd = [parse_acd(a)?, parse_acd(b)?];
    let input = QualityInput::new(acd, prefs(&args.pref)?, args.load_min)?;
    let result = compute_rejection(&input)?;
    let names = pair("vendors", &args.vendors)?;

    let mut text = String::new();
    let mut lines = |label: &str, values: [String; 2]| {
        for (name, v) in names.iter().zip(values) {
            text.push_str(&format!("{label}[{name}] = {v}\n"));
        }
    };
    lines("Pref", input.pref.map(|p| p.to_string()));
    lines(
        "ACD",
        input
            .acd_min
            .map(|a| a.map_or("NULL".to_string(), |a| a.to_string())),
    );
    if let Some(b) = result.balance {
        lines("Rank", b.rank.map(|r| r.to_string()));
        lines("Load", b.load.map(|l| l.to_string()));
    }
    lines(
        "Reject",
        result.reject_pct_rounded().map(|r| format!("{r:.2}%")),
    );
    text.insert_str(0, &format!("Load_min = {}\n", input.load_min));
    let breakdown = render_calc_breakdown(&result, &input);
    text.push('\n');
    text.push_str(&breakdown.to_text());
    out.write_all(text.as_bytes())?;

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        write_file(dir, "calc.txt", &text)?;
        write_file(dir, "calc.html", &breakdown.to_html())?;
    }
    Ok(())
}

/// Closed-interval history and rows from replaying ticks over `records`.
pub struct Replay {
    pub history: Vec<IntervalRecord>,
    pub store: MemoryStore,
}

/// Replays the tick schedule over a CDR set. Admission counters are
/// rebuilt from the attempts by connect time: every attempt counts as
/// received, flagged ones also as rejected.
pub fn replay_ticks(
    records: Vec<CallRecord>,
    group: RoutingGroup,
    policy: IntervalPolicy,
    load_min: f64,
    prefix: &str,
    start: Option<Timestamp>,
) -> crate::error::Result<Replay> {
    policy.validate()?;
    let mut records = records;
    // Canonical order makes the result independent of file row order.
    records.sort_by(|a, b| {
        (
            a.disconnect_time,
            a.connect_time,
            &a.call_id,
            a.vendor,
            a.rejected_by_router,
        )
            .cmp(&(
                b.disconnect_time,
                b.connect_time,
                &b.call_id,
                b.vendor,
                b.rejected_by_router,
            ))
    });
    let first = records.iter().map(|r| r.connect_time).min();
    let last = records.iter().map(|r| r.disconnect_time).max();
    let period = policy.tick_period_s;
    let start = match (start, first) {
        (Some(s), _) => s,
        (None, Some(f)) => Timestamp(f.0.div_euclid(period) * period),
        (None, None) => {
            return Ok(Replay {
                history: Vec::new(),
                store: MemoryStore::new(),
            })
        }
    };
    let mut arrivals: Vec<(Timestamp, usize, bool)> = records
        .iter()
        .filter_map(|r| {
            group
                .index_of(r.vendor)
                .ok()
                .map(|i| (r.connect_time, i, r.rejected_by_router))
        })
        .filter(|(t, _, _)| *t >= start)
        .collect();
    arrivals.sort();

    let store = MemoryStore::with_cdrs(records)?;
    let counters = IntervalCounters::new();
    let mut aggregator = Aggregator::new(policy, group, load_min, prefix, start)?;
    let last = last.unwrap_or(start);
    let mut next_arrival = 0;
    let mut now = start.plus_seconds(period);
    while now.0 <= last.0 + period {
        while next_arrival < arrivals.len() && arrivals[next_arrival].0 < now {
            let (_, idx, rejected) = arrivals[next_arrival];
            counters.add(idx, 1, u64::from(rejected));
            next_arrival += 1;
        }
        aggregator.on_tick(now, &store, &counters)?;
        now = now.plus_seconds(period);
    }
    Ok(Replay {
        history: aggregator.finish(&counters),
        store,
    })
}

fn infer_vendors(records: &[CallRecord]) -> CliResult<[VendorId; 2]> {
    let ids: std::collections::BTreeSet<VendorId> = records.iter().map(|r| r.vendor).collect();
    let ids: Vec<_> = ids.into_iter().collect();
    match ids.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage(format!(
            "expected exactly two vendors in the file, found {}; pass --vendors",
            ids.len()
        ))),
    }
}

fn write_history_outputs(
    dir: &Path,
    history: &[IntervalRecord],
    acd_rows: &[store::AcdRow],
) -> CliResult {
    let mut acd = Vec::new();
    store::write_acd_rows(&mut acd, acd_rows)?;
    fs::write(dir.join("acd_vendors.csv"), acd)?;
    let mut json = serde_json::to_string_pretty(history).map_err(Error::from)?;
    json.push('\n');
    write_file(dir, "interval_history.json", &json)?;
    for format in [TableFormat::Html, TableFormat::Csv, TableFormat::Json] {
        let doc = render_interval_table(history, format)?;
        write_file(dir, &format!("interval_table.{}", format.extension()), &doc)?;
    }
    Ok(())
}

fn cmd_aggregate(args: &AggregateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let file = fs::File::open(&args.input)?;
    let (records, errors) = store::read_cdrs(file);
    if !errors.is_empty() {
        for e in &errors {
            let _ = writeln!(err, "{}: {e}", args.input.display());
        }
        return Err(CliError::Runtime(Error::Validation(format!(
            "{} malformed row(s)",
            errors.len()
        ))));
    }
    let policy = IntervalPolicy {
        tick_period_s: args.interval.tick_min * 60,
        min_age_s: args.interval.min_interval_min * 60,
        min_calls: args.interval.min_calls,
    };
    let prefs = prefs(&args.pref)?;
    let vendors = match &args.vendors {
        Some(v) => pair("vendors", v)?.map(VendorId),
        None if records.is_empty() => [VendorId(0), VendorId(1)],
        None => infer_vendors(&records)?,
    };
    let group = RoutingGroup::new(vendors, prefs)?;
    let start = args.start.as_deref().map(Timestamp::parse).transpose()?;
    let replay = replay_ticks(
        records,
        group,
        policy,
        args.interval.load_min,
        &args.prefix,
        start,
    )?;

    fs::create_dir_all(&args.out_dir)?;
    let rows = replay.store.acd_rows()?;
    write_history_outputs(&args.out_dir, &replay.history, &rows)?;
    writeln!(out, "closed intervals: {}", replay.history.len())?;
    for rec in &replay.history {
        let reject = rec.result.reject_pct_rounded();
        let mut line = rec.closed_at.to_string();
        for (s, reject) in rec.stats.iter().zip(reject) {
            let acd = s.acd_min.map_or("NULL".to_string(), |a| format!("{a:.2}"));
            line.push_str(&format!(
                "  {}: calls={} acd={acd} reject={reject:.2}",
                s.vendor, s.calls
            ));
        }
        writeln!(out, "{line}")?;
    }
    let cdr_count = replay.store.query_cdrs(None, TimeRange::all())?.len();
    writeln!(out, "records: {cdr_count}")?;
    Ok(())
}

fn load_scenario(args: &SimulateArgs, seed: Option<u64>) -> CliResult<ScenarioConfig> {
    let mut config = match (&args.scenario, &args.preset) {
        (Some(path), _) => ScenarioConfig::from_toml(&fs::read_to_string(path)?)?,
        (None, Some(name)) => ScenarioConfig::bundled(name)?,
        (None, None) => ScenarioConfig::bundled("honest_vs_fas")?,
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if args.disable_admission {
        config.admission_enabled = false;
    }
    Ok(config)
}

pub fn write_scenario_outputs(dir: &Path, result: &ScenarioResult) -> crate::error::Result<()> {
    fs::create_dir_all(dir)?;
    let mut cdrs = Vec::new();
    store::write_cdrs(&mut cdrs, &result.cdrs)?;
    fs::write(dir.join("cdrs.csv"), cdrs)?;

    let mut decisions = String::from("time,call_id,vendor,decision,code\n");
    for d in &result.decision_log {
        let (kind, code) = match d.decision {
            crate::admission::Decision::Accept => ("accept", String::new()),
            crate::admission::Decision::Reject(c) => ("reject", c.to_string()),
        };
        decisions.push_str(&format!(
            "{},{},{},{kind},{code}\n",
            d.time, d.call_id, d.vendor
        ));
    }
    fs::write(dir.join("decisions.csv"), decisions)?;

    let mut summary = serde_json::to_string_pretty(&serde_json::json!({
        "summary": result.summary(),
        "target_log": result.target_log,
        "traffic_share": result.traffic_share,
        "cold_start_answered": result.cold_start_answered,
    }))?;
    summary.push('\n');
    fs::write(dir.join("summary.json"), summary)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, out: &mut dyn Write) -> CliResult {
    let config = load_scenario(args, seed)?;
    let result = run_scenario(&config)?;
    write_scenario_outputs(&args.out_dir, &result)?;
    write_history_outputs(&args.out_dir, &result.interval_history, &result.acd_rows)?;

    let s = result.summary();
    writeln!(out, "scenario {} seed {}", s.name, s.seed)?;
    writeln!(
        out,
        "routed calls: {}  cdrs: {}  closed intervals: {}",
        s.routed_calls, s.cdrs, s.closed_intervals
    )?;
    if let Some(t) = s.final_reject_pct {
        writeln!(
            out,
            "final reject targets: {}={:.2}% {}={:.2}%",
            s.vendors[0], t[0], s.vendors[1], t[1]
        )?;
    }
    if let Some(t) = s.steady_reject_pct {
        writeln!(
            out,
            "steady reject targets: {}={:.2}% {}={:.2}%",
            s.vendors[0], t[0], s.vendors[1], t[1]
        )?;
    }
    if let Some(m) = s.steady_minutes_share {
        writeln!(
            out,
            "steady answered-minute share: {}={:.1}% {}={:.1}%",
            s.vendors[0],
            m[0] * 100.0,
            s.vendors[1],
            m[1] * 100.0
        )?;
    }

    if let Some(n) = args.sweep {
        let seeds: Vec<u64> = (0..n).map(|k| config.seed + k).collect();
        let summaries = sweep(&config, &seeds)?;
        let mut json = serde_json::to_string_pretty(&summaries).map_err(Error::from)?;
        json.push('\n');
        write_file(&args.out_dir, "sweep.json", &json)?;
        writeln!(
            out,
            "sweep: {} seeds written to sweep.json",
            summaries.len()
        )?;
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> CliResult {
    let formats: Vec<TableFormat> = if args.format.is_empty() {
        vec![TableFormat::Html, TableFormat::Csv, TableFormat::Json]
    } else {
        args.format
            .iter()
            .map(|f| f.parse())
            .collect::<crate::error::Result<_>>()?
    };
    let history: Vec<IntervalRecord> =
        serde_json::from_str(&fs::read_to_string(&args.history)?).map_err(Error::from)?;
    fs::create_dir_all(&args.out_dir)?;
    for format in formats {
        let name = format!("interval_table.{}", format.extension());
        write_file(
            &args.out_dir,
            &name,
            &render_interval_table(&history, format)?,
        )?;
        writeln!(out, "wrote {name}")?;
    }
    Ok(())
}
