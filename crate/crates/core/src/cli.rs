//! `irc-lab` command line: one subcommand per experiment, JSON-lines on
//! stdout and an optional CSV table.
//!
//! Exit codes: 0 success, 1 a verification reported a failure, 2 invalid
//! input, 3 a size cap was hit, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::actions::{
    alternating_generators, cyclic_generator, orbit_stat, rblock_containment, sunny_side_up, symmetric_generators,
    transitivity_check, Event, Mode, OrbitSource, PermutationWindow, RblockInstance, RblockMode, Sampling,
    ShiftWindow, TransitivityMode,
};
use crate::caps::Caps;
use crate::error::Error;
use crate::estimator::{accumulate, mass_near_finite, mass_near_full};
use crate::hyperspace::{
    binomial, count_covering_subsets, covering_fraction_bound, finitary_occupancy_law, TreeProfile,
};
use crate::symbolic::{chacon_len, forbidden_distance_check, Word};
use crate::torus::{
    berend_peres, dilation_density, divisibility_fraction, extract_j, weyl_discrepancy, Alpha, DigitSet, Growth,
    Resolution, Sequence,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "irc-lab", version, about = "Finite-resolution experiments on invariant random compact sets")]
pub struct Cli {
    #[command(subcommand)]
    command: Group,

    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory receiving `<command>.jsonl` and `<command>.csv`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Path of the CSV table.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Chacon blocks and orbit statistics.
    #[command(subcommand)]
    Chacon(ChaconCmd),
    /// Finite-level hyperspace combinatorics.
    #[command(subcommand)]
    Hyperspace(HyperspaceCmd),
    /// Permutation actions on cylinder sets.
    #[command(subcommand)]
    Actions(ActionsCmd),
    /// Circle dilations.
    #[command(subcommand)]
    Torus(TorusCmd),
    /// Empirical measures on level sets.
    #[command(subcommand)]
    Estimate(EstimateCmd),
}

#[derive(Subcommand, Debug)]
enum ChaconCmd {
    /// Start differences of a pattern inside b_1 .. b_N.
    VerifySpacing(VerifySpacing),
    /// D, E or Z statistic over a window of shifts of Y.
    OrbitStats(OrbitStats),
}

#[derive(Subcommand, Debug)]
enum HyperspaceCmd {
    /// r-subsets of level-(k+i) cells meeting every level-k cell.
    CountCovers(CountCovers),
    /// Law of the level-m image of k tree-uniform points.
    Occupancy(Occupancy),
}

#[derive(Subcommand, Debug)]
enum ActionsCmd {
    /// Orbit check on r-sets or r-tuples.
    Transitivity(Transitivity),
    /// Z_k for sunny-side-up sets under prefix permutations.
    Zk(Zk),
    /// Probability that a random alpha-set sits in an r-block.
    Rblock(Rblock),
}

#[derive(Subcommand, Debug)]
enum TorusCmd {
    /// Fraction of n in F_m with nY eps-dense.
    DilateDensity(DilateDensity),
    /// J-set extraction over a Folner horizon.
    ExtractJ(ExtractJ),
    /// Berend-Peres construction and condensation statistics.
    BerendPeres(BerendPeresArgs),
    /// Star discrepancy of s_i alpha mod 1.
    Weyl(Weyl),
}

#[derive(Subcommand, Debug)]
enum EstimateCmd {
    /// Empirical measure of a window of images.
    Accumulate(Accumulate),
}

#[derive(Args, Debug, Serialize)]
struct VerifySpacing {
    #[arg(long, default_value_t = 8)]
    max_level: u32,
    #[arg(long, default_value = "0010")]
    pattern: String,
    /// Distances to test (default: elements of L below |b_N| - 4).
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<u64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum EventCode {
    D,
    E,
    Z,
}

#[derive(Args, Debug, Serialize)]
struct OrbitStats {
    #[arg(long, default_value_t = 4)]
    level: usize,
    /// Number of elements of L building Y.
    #[arg(long, default_value_t = 3)]
    l_count: usize,
    #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
    start: i64,
    /// Exclusive end (default |b_6| - |b_3| - 4).
    #[arg(long, allow_negative_numbers = true)]
    end: Option<i64>,
    #[arg(long, value_enum, default_value_t = EventCode::D)]
    mode: EventCode,
    #[arg(long, default_value_t = 5)]
    eps_exp: u32,
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum SidesArg {
    One,
    Two,
}

#[derive(Args, Debug, Serialize)]
struct CountCovers {
    /// Alphabet size.
    #[arg(long)]
    n: u8,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    r: u64,
    #[arg(long, value_enum, default_value_t = SidesArg::One)]
    sides: SidesArg,
}

#[derive(Args, Debug, Serialize)]
struct Occupancy {
    #[arg(long)]
    n: u8,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Monte Carlo sample count; the exact law when absent.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, value_enum, default_value_t = SidesArg::One)]
    sides: SidesArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum GroupKind {
    Sym,
    Cyclic,
    Alt,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum TransitivityArg {
    Set,
    Tuple,
}

#[derive(Args, Debug, Serialize)]
struct Transitivity {
    #[arg(long, value_enum, default_value_t = GroupKind::Sym)]
    group: GroupKind,
    /// Number of cells permuted.
    #[arg(long)]
    points: usize,
    /// Checked for every r in 1..=points when absent.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum, default_value_t = TransitivityArg::Tuple)]
    mode: TransitivityArg,
}

#[derive(Args, Debug, Serialize)]
struct Zk {
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 2)]
    k_max: usize,
    /// Random group elements per k; exhaustive when absent.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 3)]
    eps_exp: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum RblockArg {
    Exact,
    Mc,
    Bound,
}

#[derive(Args, Debug, Serialize)]
struct Rblock {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    alpha: u64,
    #[arg(long)]
    r: u64,
    #[arg(long, value_enum, default_value_t = RblockArg::Exact)]
    mode: RblockArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct DigitArgs {
    #[arg(long, default_value_t = 3)]
    base: u8,
    /// Allowed digits, the same at every position.
    #[arg(long, value_delimiter = ',', default_value = "0,2")]
    digits: Vec<u8>,
    /// Forbidden words as digit strings, e.g. `11`.
    #[arg(long, value_delimiter = ',')]
    forbidden: Vec<String>,
}

impl DigitArgs {
    fn build(&self) -> crate::Result<DigitSet> {
        let forbidden = self
            .forbidden
            .iter()
            .map(|w| Word::parse(w, self.base).map(|w| w.symbols().to_vec()))
            .collect::<crate::Result<Vec<_>>>()?;
        DigitSet::new(self.base, &self.digits, &forbidden)
    }
}

#[derive(Args, Debug, Serialize)]
struct DilateDensity {
    #[command(flatten)]
    set: DigitArgs,
    /// Largest Folner index; every m in m_min..=m is reported.
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    m_min: usize,
    #[arg(long, default_value = "1/20")]
    eps: String,
    #[arg(long, default_value_t = 6)]
    margin: u32,
}

#[derive(Args, Debug, Serialize)]
struct ExtractJ {
    #[command(flatten)]
    set: DigitArgs,
    #[arg(long, default_value_t = 4)]
    horizon: usize,
    /// Thresholds 1/r for r = 1..=r_max.
    #[arg(long, default_value_t = 16)]
    r_max: u32,
    #[arg(long, default_value_t = 6)]
    margin: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum GrowthArg {
    True,
    Scaled,
}

#[derive(Args, Debug, Serialize)]
struct BerendPeresArgs {
    #[arg(long, default_value_t = 3)]
    i_max: usize,
    #[arg(long, value_enum, default_value_t = GrowthArg::True)]
    growth: GrowthArg,
    /// Folner index for the statistics.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Number of terms of the truncated set.
    #[arg(long, default_value_t = 3)]
    t: usize,
    #[arg(long, default_value = "1/4")]
    delta: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum SequenceArg {
    Naturals,
    Squares,
    Custom,
}

#[derive(Args, Debug, Serialize)]
struct Weyl {
    #[arg(long, value_enum, default_value_t = SequenceArg::Squares)]
    sequence: SequenceArg,
    /// Terms of a custom sequence.
    #[arg(long, value_delimiter = ',')]
    terms: Vec<u64>,
    /// `sqrtD`, `golden` or `p/q`; several values give a vector.
    #[arg(long, value_delimiter = ',', default_value = "sqrt2")]
    alpha: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Grid resolution of the box estimate for vector alpha.
    #[arg(long, default_value_t = 16)]
    grid: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum SourceArg {
    Chacon,
    Prefix,
}

#[derive(Args, Debug, Serialize)]
struct Accumulate {
    #[arg(long, value_enum, default_value_t = SourceArg::Chacon)]
    source: SourceArg,
    #[arg(long, default_value_t = 4)]
    level: usize,
    #[arg(long, default_value_t = 3)]
    l_count: usize,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    start: i64,
    #[arg(long, default_value_t = 100, allow_negative_numbers = true)]
    end: i64,
    /// Prefix length for the prefix source.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 3)]
    eps_exp: u32,
    #[arg(long, default_value_t = 1)]
    r: usize,
}

/// Collected output of one run.
struct Output {
    command: String,
    config: Value,
    lines: Vec<String>,
    csv_header: Vec<String>,
    csv_rows: Vec<Vec<String>>,
    failed: bool,
}

impl Output {
    fn new(command: &str, config: Value) -> Self {
        Output {
            command: command.to_string(),
            config,
            lines: Vec::new(),
            csv_header: Vec::new(),
            csv_rows: Vec::new(),
            failed: false,
        }
    }

    fn record(&mut self, kind: &str, result: impl Serialize) -> crate::Result<()> {
        let result = serde_json::to_value(result).map_err(|e| Error::invalid(e.to_string()))?;
        let line = json!({
            "command": self.command,
            "record": kind,
            "config": self.config,
            "result": result,
        });
        self.lines.push(line.to_string());
        Ok(())
    }

    fn header(&mut self, cols: &[&str]) {
        self.csv_header = cols.iter().map(|s| s.to_string()).collect();
    }

    fn row(&mut self, cells: Vec<String>) {
        self.csv_rows.push(cells);
    }
}

/// Runs the command line and returns the process exit code.
pub fn main() -> i32 {
    run(std::env::args_os().collect())
}

pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let caps = match Caps::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let result = pool.install(|| dispatch(&cli, &caps));
    match result {
        Ok(out) => match write_output(&cli, &out) {
            Ok(()) => {
                if out.failed {
                    EXIT_VERIFY
                } else {
                    EXIT_OK
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_cap() {
                EXIT_CAP
            } else {
                EXIT_INVALID
            }
        }
    }
}

/// Appends the values of a JSON config file as flags that are not already given.
fn merge_config(mut argv: Vec<OsString>) -> crate::Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::invalid(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::invalid(format!("bad config {path}: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Error::invalid("config must be a JSON object"));
    };
    for (key, val) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            continue;
        }
        let given = strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue;
        }
        let text = match val {
            Value::Bool(true) => {
                argv.push(flag.into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s,
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        argv.push(format!("{flag}={text}").into());
    }
    Ok(argv)
}

fn write_output(cli: &Cli, out: &Output) -> std::io::Result<()> {
    use std::io::Write;
    let mut jsonl = String::new();
    for line in &out.lines {
        jsonl.push_str(line);
        jsonl.push('\n');
    }
    std::io::stdout().write_all(jsonl.as_bytes())?;
    let stem = out.command.replace(' ', "-");
    let mut csv_path = cli.csv.clone();
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.jsonl")), &jsonl)?;
        csv_path.get_or_insert_with(|| dir.join(format!("{stem}.csv")));
    }
    if let Some(path) = csv_path {
        if !out.csv_header.is_empty() {
            write_csv(&path, &out.csv_header, &out.csv_rows)?;
        }
    }
    Ok(())
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

fn config_of(cli: &Cli, caps: &Caps, args: impl Serialize) -> Value {
    json!({
        "seed": cli.seed,
        "caps": caps,
        "args": serde_json::to_value(args).unwrap_or(Value::Null),
    })
}

fn parse_rational(s: &str) -> crate::Result<BigRational> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|_| Error::invalid(format!("`{s}` is not a rational number")))
}

fn dispatch(cli: &Cli, caps: &Caps) -> crate::Result<Output> {
    match &cli.command {
        Group::Chacon(ChaconCmd::VerifySpacing(a)) => verify_spacing(cli, caps, a),
        Group::Chacon(ChaconCmd::OrbitStats(a)) => chacon_orbit_stats(cli, caps, a),
        Group::Hyperspace(HyperspaceCmd::CountCovers(a)) => count_covers(cli, caps, a),
        Group::Hyperspace(HyperspaceCmd::Occupancy(a)) => occupancy(cli, caps, a),
        Group::Actions(ActionsCmd::Transitivity(a)) => transitivity(cli, caps, a),
        Group::Actions(ActionsCmd::Zk(a)) => zk(cli, caps, a),
        Group::Actions(ActionsCmd::Rblock(a)) => rblock(cli, caps, a),
        Group::Torus(TorusCmd::DilateDensity(a)) => dilate_density(cli, caps, a),
        Group::Torus(TorusCmd::ExtractJ(a)) => torus_extract_j(cli, caps, a),
        Group::Torus(TorusCmd::BerendPeres(a)) => torus_berend_peres(cli, caps, a),
        Group::Torus(TorusCmd::Weyl(a)) => weyl(cli, caps, a),
        Group::Estimate(EstimateCmd::Accumulate(a)) => estimate(cli, caps, a),
    }
}

fn verify_spacing(cli: &Cli, caps: &Caps, a: &VerifySpacing) -> crate::Result<Output> {
    let mut out = Output::new("chacon verify-spacing", config_of(cli, caps, a));
    let pattern = Word::parse(&a.pattern, 2)?;
    let check_gaps = a.pattern == "0010";
    out.header(&["level", "block_len", "occurrences", "distances", "forbidden_hits", "gaps", "ok"]);
    for level in 1..=a.max_level {
        let len = chacon_len(level);
        let distances: Vec<u64> = match &a.distances {
            Some(d) => d.clone(),
            None => crate::symbolic::chacon_l(level.max(2))
                .into_iter()
                .filter(|&l| l + 4 < len)
                .collect(),
        };
        let rep = forbidden_distance_check(level, &pattern, Some(&distances), caps)?;
        let gaps: Vec<usize> = rep.gap_set().into_iter().collect();
        let gaps_ok = !check_gaps || gaps.iter().all(|g| *g == 4 || *g == 5);
        let ok = rep.forbidden_hits.is_empty() && gaps_ok;
        out.failed |= !ok;
        out.record(
            "level",
            json!({
                "level": level,
                "block_len": len,
                "occurrences": rep.starts.len(),
                "distances": distances,
                "forbidden_hits": rep.forbidden_hits,
                "gaps": gaps,
                "gaps_ok": gaps_ok,
                "ok": ok,
            }),
        )?;
        out.row(vec![
            level.to_string(),
            len.to_string(),
            rep.starts.len().to_string(),
            join(&distances),
            rep.forbidden_hits.len().to_string(),
            join(&gaps),
            ok.to_string(),
        ]);
    }
    Ok(out)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn event_of(code: EventCode, eps_exp: u32, r: Option<usize>) -> crate::Result<Event> {
    Ok(match code {
        EventCode::D => Event::Far { eps_exp },
        EventCode::Z => Event::Near { eps_exp },
        EventCode::E => Event::FarFromFinite {
            r: r.ok_or_else(|| Error::invalid("mode E needs --r"))?,
            eps_exp,
        },
    })
}

fn chacon_orbit_stats(cli: &Cli, caps: &Caps, a: &OrbitStats) -> crate::Result<Output> {
    let mut out = Output::new("chacon orbit-stats", config_of(cli, caps, a));
    let end = a.end.unwrap_or((chacon_len(6) - chacon_len(3) - 4) as i64);
    let src = ShiftWindow::chacon(a.level, a.l_count, a.start, end, caps)?;
    let stat = orbit_stat(&src, event_of(a.mode, a.eps_exp, a.r)?)?;
    out.header(&crate::actions::OrbitStat::CSV_HEADER);
    out.row(stat.csv_row().to_vec());
    out.record("orbit_stat", &stat)?;
    Ok(out)
}

fn profile_of(n: u8, sides: SidesArg) -> crate::Result<TreeProfile> {
    match sides {
        SidesArg::One => TreeProfile::one_sided(n),
        SidesArg::Two => TreeProfile::two_sided(n),
    }
}

fn count_covers(cli: &Cli, caps: &Caps, a: &CountCovers) -> crate::Result<Output> {
    let mut out = Output::new("hyperspace count-covers", config_of(cli, caps, a));
    let profile = profile_of(a.n, a.sides)?;
    let c = count_covering_subsets(&profile, a.k, a.i, a.r)?;
    let bound = covering_fraction_bound(&profile, a.k, a.r)?;
    let fraction = c.fraction();
    let holds = fraction.as_ref().is_none_or(|f| *f >= bound);
    out.failed |= !holds;
    let ratio = format!("{}/{}", c.count, c.total);
    out.header(&["k", "i", "r", "count", "total", "ratio", "bound"]);
    out.row(vec![
        a.k.to_string(),
        a.i.to_string(),
        a.r.to_string(),
        c.count.to_string(),
        c.total.to_string(),
        ratio.clone(),
        bound.to_string(),
    ]);
    out.record(
        "covering_count",
        json!({
            "ratio": ratio,
            "count": c.count.to_string(),
            "total": c.total.to_string(),
            "oversized": c.oversized,
            "fraction": fraction.map(|f| f.to_string()),
            "bound": bound.to_string(),
            "bound_holds": holds,
        }),
    )?;
    Ok(out)
}

fn occupancy(cli: &Cli, caps: &Caps, a: &Occupancy) -> crate::Result<Output> {
    let mut out = Output::new("hyperspace occupancy", config_of(cli, caps, a));
    let profile = profile_of(a.n, a.sides)?;
    let law = finitary_occupancy_law(&profile, a.k, a.m, a.samples, cli.seed, caps)?;
    let emp = law.as_empirical()?;
    out.header(&["cells", "weight"]);
    for (set, w) in emp.atoms() {
        let cells: Vec<String> = set.cells().iter().map(|c| c.to_string()).collect();
        out.row(vec![cells.join(" "), w.to_string()]);
    }
    out.record("law", &emp)?;
    Ok(out)
}

fn transitivity(cli: &Cli, caps: &Caps, a: &Transitivity) -> crate::Result<Output> {
    let mut out = Output::new("actions transitivity", config_of(cli, caps, a));
    let gens = match a.group {
        GroupKind::Sym => symmetric_generators(a.points),
        GroupKind::Cyclic => vec![cyclic_generator(a.points)],
        GroupKind::Alt => alternating_generators(a.points),
    };
    if gens.is_empty() {
        return Err(Error::invalid("the group needs at least three points"));
    }
    let mode = match a.mode {
        TransitivityArg::Set => TransitivityMode::Set,
        TransitivityArg::Tuple => TransitivityMode::Tuple,
    };
    let rs: Vec<usize> = match a.r {
        Some(r) => vec![r],
        None => (1..=a.points).collect(),
    };
    out.header(&["group", "points", "r", "mode", "transitive"]);
    for r in rs {
        let t = transitivity_check(&gens, r, mode, caps)?;
        out.row(vec![
            format!("{:?}", a.group).to_lowercase(),
            a.points.to_string(),
            r.to_string(),
            format!("{:?}", a.mode).to_lowercase(),
            t.to_string(),
        ]);
        out.record("transitivity", json!({ "r": r, "transitive": t }))?;
    }
    Ok(out)
}

fn zk(cli: &Cli, caps: &Caps, a: &Zk) -> crate::Result<Output> {
    let mut out = Output::new("actions zk", config_of(cli, caps, a));
    if a.k_min == 0 || a.k_max < a.k_min {
        return Err(Error::invalid("need 1 <= k_min <= k_max"));
    }
    let mut header = crate::actions::OrbitStat::CSV_HEADER.to_vec();
    header.insert(0, "k");
    header.push("formula");
    out.header(&header);
    let profile = TreeProfile::one_sided(2)?;
    for k in a.k_min..=a.k_max {
        let level = k.max(a.eps_exp as usize);
        let y = sunny_side_up(level)?;
        let sampling = match a.samples {
            Some(samples) => Sampling::Sampled {
                samples,
                seed: cli.seed.wrapping_add(k as u64),
            },
            None => Sampling::Exhaustive,
        };
        let src = PermutationWindow::new(y, k, 2, Mode::Prefix, sampling, caps)?;
        let stat = orbit_stat(&src, Event::Near { eps_exp: a.eps_exp })?;
        // gY at level k is a uniform (k+1)-subset; the event asks it to meet every level-eps cell
        let formula = (k >= a.eps_exp as usize)
            .then(|| {
                count_covering_subsets(&profile, a.eps_exp as usize, k - a.eps_exp as usize, k as u64 + 1).map(|c| {
                    BigRational::new(BigInt::from(c.count), BigInt::from(binomial(1 << k, k as u64 + 1)))
                })
            })
            .transpose()?;
        let mut row = stat.csv_row().to_vec();
        row.insert(0, k.to_string());
        row.push(formula.as_ref().map(|f| f.to_string()).unwrap_or_default());
        out.row(row);
        out.record(
            "zk",
            json!({
                "k": k,
                "stat": stat,
                "formula": formula.map(|f| f.to_string()),
            }),
        )?;
    }
    Ok(out)
}

fn rblock(cli: &Cli, caps: &Caps, a: &Rblock) -> crate::Result<Output> {
    let mut out = Output::new("actions rblock", config_of(cli, caps, a));
    let inst = RblockInstance {
        n: a.n,
        m: a.m,
        k: a.k,
        alpha: a.alpha,
        r: a.r,
    };
    let mode = match a.mode {
        RblockArg::Exact => RblockMode::Exact,
        RblockArg::Mc => RblockMode::MonteCarlo {
            samples: a.samples,
            seed: cli.seed,
        },
        RblockArg::Bound => RblockMode::Bound,
    };
    let res = rblock_containment(&inst, mode)?;
    if let (RblockArg::Exact, Some(b)) = (a.mode, &res.bounds) {
        let ok = res.probability <= b.counting && (b.vacuous || res.probability <= b.envelope);
        out.failed |= !ok;
    }
    out.header(&["n", "m", "k", "alpha", "r", "probability", "counting_bound", "envelope", "vacuous"]);
    let b = res.bounds.as_ref();
    out.row(vec![
        a.n.to_string(),
        a.m.to_string(),
        a.k.to_string(),
        a.alpha.to_string(),
        a.r.to_string(),
        res.probability.to_string(),
        b.map(|b| b.counting.to_string()).unwrap_or_default(),
        b.map(|b| b.envelope.to_string()).unwrap_or_default(),
        b.map(|b| b.vacuous.to_string()).unwrap_or_default(),
    ]);
    out.record("rblock", &res)?;
    Ok(out)
}

fn dilate_density(cli: &Cli, caps: &Caps, a: &DilateDensity) -> crate::Result<Output> {
    let mut out = Output::new("torus dilate-density", config_of(cli, caps, a));
    let y = a.set.build()?;
    let eps = parse_rational(&a.eps)?;
    let res = Resolution { margin: a.margin };
    out.header(&["m", "n", "m'", "max_gap", "verdict", "ambiguous"]);
    for m in a.m_min.max(1)..=a.m {
        let d = dilation_density(&y, m, &eps, res, caps)?;
        for row in &d.rows {
            out.row(vec![
                m.to_string(),
                row.n.to_string(),
                row.level.to_string(),
                row.max_gap.to_string(),
                row.verdict.as_str().to_string(),
                row.ambiguous.to_string(),
            ]);
        }
        out.record(
            "density",
            json!({
                "m": d.m,
                "eps": d.eps.to_string(),
                "total": d.total,
                "dense": d.dense,
                "ambiguous": d.ambiguous,
                "fraction": d.fraction.to_string(),
            }),
        )?;
    }
    Ok(out)
}

fn torus_extract_j(cli: &Cli, caps: &Caps, a: &ExtractJ) -> crate::Result<Output> {
    let mut out = Output::new("torus extract-j", config_of(cli, caps, a));
    let y = a.set.build()?;
    let j = extract_j(&y, a.horizon, a.r_max, Resolution { margin: a.margin }, caps)?;
    out.failed |= !j.all_ok();
    if let Some(w) = &j.warning {
        eprintln!("warning: {w}");
    }
    out.header(&["m", "r", "folner_size", "j_m", "j_in_f", "density", "density_floor", "sup_gap", "ok"]);
    for t in &j.trace {
        out.row(vec![
            t.m.to_string(),
            t.r.map(|r| r.to_string()).unwrap_or_default(),
            t.folner_size.to_string(),
            t.j_m.to_string(),
            t.j_in_f.to_string(),
            t.density.to_string(),
            t.density_floor.as_ref().map(|f| f.to_string()).unwrap_or_default(),
            t.sup_gap.as_ref().map(|f| f.to_string()).unwrap_or_default(),
            (t.density_ok && t.gap_ok).to_string(),
        ]);
    }
    out.record("extraction", &j)?;
    Ok(out)
}

fn torus_berend_peres(cli: &Cli, caps: &Caps, a: &BerendPeresArgs) -> crate::Result<Output> {
    let mut out = Output::new("torus berend-peres", config_of(cli, caps, a));
    let growth = match a.growth {
        GrowthArg::True => Growth::True,
        GrowthArg::Scaled => Growth::Scaled,
    };
    let bp = berend_peres(a.i_max, growth, caps)?;
    if bp.flagged {
        eprintln!("warning: the scaled growth rule does not satisfy the construction's conditions");
    }
    out.record("construction", &bp)?;
    let delta = parse_rational(&a.delta)?;
    let t = a.t.min(bp.q.len());
    let stat = bp.condensation_stat(a.m, &delta, t, caps)?;
    out.record("condensation", &stat)?;
    out.header(&["i", "m", "t", "divisible", "violations", "max_distance", "bound"]);
    for i in 1..=bp.q.len() {
        let check = bp.check_implication(i, a.m, t, caps)?;
        // the growth conditions only control n up to max F_{2 m_i}
        let in_range = a.m <= bp.valid_folner_index(i);
        if growth == Growth::True && in_range {
            out.failed |= check.violations > 0;
        }
        out.row(vec![
            i.to_string(),
            a.m.to_string(),
            t.to_string(),
            check.divisible.to_string(),
            check.violations.to_string(),
            check.max_distance.as_ref().map(|d| d.to_string()).unwrap_or_default(),
            check.bound.to_string(),
        ]);
        out.record("implication", json!({ "check": check, "in_range": in_range }))?;
    }
    for s in 0..=a.m {
        let d = divisibility_fraction(a.m, s, caps)?;
        out.failed |= !d.matches;
        out.record("divisibility", &d)?;
    }
    Ok(out)
}

fn weyl(cli: &Cli, caps: &Caps, a: &Weyl) -> crate::Result<Output> {
    let mut out = Output::new("torus weyl", config_of(cli, caps, a));
    let seq = match a.sequence {
        SequenceArg::Naturals => Sequence::Naturals,
        SequenceArg::Squares => Sequence::Squares,
        SequenceArg::Custom => Sequence::Custom(a.terms.clone()),
    };
    let alpha = a.alpha.iter().map(|s| s.parse::<Alpha>()).collect::<crate::Result<Vec<_>>>()?;
    let r = weyl_discrepancy(&seq, &alpha, a.n, a.grid)?;
    if r.rational_alpha {
        eprintln!("warning: rational alpha; the points do not equidistribute");
    }
    out.header(&["sequence", "alpha", "n", "discrepancy", "rational_alpha"]);
    out.row(vec![
        r.sequence.clone(),
        r.alpha.join(" "),
        r.n.to_string(),
        format!("{:.12e}", r.discrepancy),
        r.rational_alpha.to_string(),
    ]);
    out.record("weyl", &r)?;
    Ok(out)
}

fn estimate(cli: &Cli, caps: &Caps, a: &Accumulate) -> crate::Result<Output> {
    let mut out = Output::new("estimate accumulate", config_of(cli, caps, a));
    let source: Box<dyn OrbitSource> = match a.source {
        SourceArg::Chacon => Box::new(ShiftWindow::chacon(a.level, a.l_count, a.start, a.end, caps)?),
        SourceArg::Prefix => {
            let sampling = match a.samples {
                Some(samples) => Sampling::Sampled { samples, seed: cli.seed },
                None => Sampling::Exhaustive,
            };
            Box::new(PermutationWindow::new(sunny_side_up(a.level)?, a.k, 2, Mode::Prefix, sampling, caps)?)
        }
    };
    let emp = accumulate(source.as_ref())?;
    let near_full = mass_near_full(&emp, source.space(), a.eps_exp)?;
    let near_finite = mass_near_finite(&emp, a.r, a.eps_exp)?;
    out.header(&["cells", "weight"]);
    for (set, w) in emp.atoms() {
        let cells: Vec<String> = set.cells().iter().map(|c| c.to_string()).collect();
        out.row(vec![cells.join(" "), w.to_string()]);
    }
    out.record("empirical", &emp)?;
    out.record(
        "masses",
        json!({
            "near_full": near_full.to_string(),
            "near_finite": near_finite.to_string(),
            "eps_exp": a.eps_exp,
            "r": a.r,
        }),
    )?;
    Ok(out)
}
