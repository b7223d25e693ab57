//! The `gelation` command line.
//!
//! Settings come from three layers: built-in defaults, an optional JSON
//! config file (`--config`) and flags, later layers winning field by field.
//! A config file looks like
//!
//! ```json
//! {"k": 2, "V": [[0, 1], [1, 0]], "alpha": [15, 2], "t": [0.5, 1.0], "nmax": 40}
//! ```
//!
//! Every table is written as CSV (after a `# gelation-csv <table> v1` line) or,
//! with `--json`, as one JSON object with the same columns.
//!
//! Exit codes: 0 success, 1 a `compare` tolerance failure, 2 bad input,
//! 3 a solver that did not converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::branching::{
    extinction_fixed_point, extinction_series, simulate_branching_replicas, BranchingCaps,
    MeanMatrix,
};
use crate::census::ClusterCensus;
use crate::coalescent_sim::run_replicas;
use crate::compare::{compare, PAIRS, ROUTES};
use crate::error::{Error, Result};
use crate::graph_sim::sample_graph_replicas;
use crate::lambert_euler::invert;
use crate::model::{
    classify, gelation_time, spectral_radius, ClusterSize, ModelConfig, ModelParams,
};
use crate::smoluchowski::{default_nmax, total_mass, zeta, ClusterDistribution};

pub const EXIT_OK: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;

const DEFAULT_N: u64 = 10_000;
const DEFAULT_MC_REPLICAS: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "gelation",
    version,
    about = "Cluster sizes, gelation and extinction for the vector multiplicative coalescent"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config: model (`k`, `V`, `alpha`) plus defaults for any flag
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Interaction matrix, rows separated by ';', e.g. "0,1;1,0"
    #[arg(long = "v", global = true, value_name = "ROWS")]
    pub v: Option<String>,
    /// Initial densities, e.g. "15,2"
    #[arg(long, global = true, value_name = "LIST")]
    pub alpha: Option<String>,
    /// Time point (repeatable)
    #[arg(
        long = "t",
        global = true,
        value_name = "FLOAT",
        allow_hyphen_values = true
    )]
    pub t: Vec<f64>,
    /// Evenly spaced times in (LO, HI], as LO:HI:POINTS; LO may be `tgel`
    #[arg(long, global = true, value_name = "SPEC")]
    pub grid: Option<String>,
    /// Largest total cluster size in truncated sums
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// System scale for the simulators
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    /// Branching simulation: generation cap
    #[arg(long, global = true)]
    pub max_generations: Option<u64>,
    /// Branching simulation: population at which a lineage counts as surviving
    #[arg(long, global = true)]
    pub population_cap: Option<u64>,
    /// Write the table here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Gelation time, spectral radius and the phase of each time point
    Geltime,
    /// Check inversion, branching fixed point, series and mass against each other
    Compare,
    /// Solve y e^{-Vy} = alpha t e^{-V alpha t} for the smallest root
    Invert,
    /// Truncated total mass of finite clusters
    Mass,
    /// Exact cluster densities zeta_x(t) up to nmax
    Clusters,
    /// Extinction probabilities of the associated branching process
    Extinction {
        #[arg(long, value_enum, default_value_t = Method::Analytic)]
        method: Method,
    },
    /// Component census of sampled random multipartite graphs
    SimGraph,
    /// Cluster census of the stochastic coalescent at each time point
    SimCoalescent,
    /// Monte Carlo extinction frequencies per start type
    SimBranching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// fixed point and series
    Analytic,
    FixedPoint,
    Series,
    MonteCarlo,
    All,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: Option<usize>,
    #[serde(rename = "V")]
    pub v: Option<Vec<Vec<f64>>>,
    pub alpha: Option<Vec<f64>>,
    pub t: Option<Times>,
    pub grid: Option<String>,
    pub nmax: Option<usize>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub max_generations: Option<u64>,
    pub population_cap: Option<u64>,
    pub out: Option<PathBuf>,
    pub json: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Times {
    One(f64),
    Many(Vec<f64>),
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("$.{}: {}", path.trim_start_matches('.'), e.inner()))
        })
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub params: ModelParams,
    pub times: Vec<f64>,
    pub nmax: usize,
    pub n: u64,
    pub seed: u64,
    pub replicas: Option<u64>,
    pub caps: BranchingCaps,
    pub out: Option<PathBuf>,
    pub json: bool,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                RunConfig::from_json_str(&text)?
            }
            None => RunConfig::default(),
        };

        let cli_v = args
            .v
            .as_deref()
            .map(|s| parse_matrix(s, "--v"))
            .transpose()?;
        let cli_alpha = args
            .alpha
            .as_deref()
            .map(|s| parse_list(s, "--alpha"))
            .transpose()?;
        let params = match (cli_v.or(file.v), cli_alpha.or(file.alpha)) {
            (None, None) => {
                if file.k.is_some() {
                    return Err(Error::Config(
                        "$.V and $.alpha are required when $.k is given".into(),
                    ));
                }
                ModelParams::single_type()
            }
            (Some(v), Some(alpha)) => {
                let k = if args.v.is_some() || args.alpha.is_some() {
                    alpha.len()
                } else {
                    file.k.unwrap_or(alpha.len())
                };
                ModelConfig { k, v, alpha }.into_params()?
            }
            (None, Some(_)) => return Err(Error::Config("$.V: missing interaction matrix".into())),
            (Some(_), None) => {
                return Err(Error::Config("$.alpha: missing initial densities".into()))
            }
        };

        let (t, grid) = if !args.t.is_empty() || args.grid.is_some() {
            (args.t.clone(), args.grid.clone())
        } else {
            let t = match file.t {
                None => vec![],
                Some(Times::One(t)) => vec![t],
                Some(Times::Many(t)) => t,
            };
            (t, file.grid)
        };
        let mut times = t;
        if let Some(spec) = grid {
            times.extend(parse_grid(&spec, &params)?);
        }
        if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::Config(format!(
                "$.t: times must be finite and >= 0, got {bad}"
            )));
        }

        let nmax = args
            .nmax
            .or(file.nmax)
            .unwrap_or_else(|| default_nmax(params.k()));
        if nmax == 0 {
            return Err(Error::Config("$.nmax: must be >= 1".into()));
        }
        let n = args.n.or(file.n).unwrap_or(DEFAULT_N);
        if n == 0 {
            return Err(Error::Config("$.n: must be >= 1".into()));
        }
        let replicas = args.replicas.or(file.replicas);
        if replicas == Some(0) {
            return Err(Error::Config("$.replicas: must be >= 1".into()));
        }
        let defaults = BranchingCaps::default();
        let caps = BranchingCaps {
            max_generations: args
                .max_generations
                .or(file.max_generations)
                .unwrap_or(defaults.max_generations),
            population_cap: args
                .population_cap
                .or(file.population_cap)
                .unwrap_or(defaults.population_cap),
        };
        Ok(Self {
            params,
            times,
            nmax,
            n,
            seed: args.seed.or(file.seed).unwrap_or(0),
            replicas,
            caps,
            out: args.out.clone().or(file.out),
            json: args.json || file.json.unwrap_or(false),
        })
    }

    fn require_times(&self) -> Result<&[f64]> {
        if self.times.is_empty() {
            Err(Error::Config(
                "$.t: no time given (use --t or --grid)".into(),
            ))
        } else {
            Ok(&self.times)
        }
    }
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{flag}: cannot parse {x:?}: {e}")))
        })
        .collect()
}

fn parse_matrix(s: &str, flag: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';').map(|row| parse_list(row, flag)).collect()
}

/// `LO:HI:POINTS` -> `LO + (HI - LO) i / POINTS` for `i = 1..=POINTS`.
fn parse_grid(spec: &str, params: &ModelParams) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("--grid {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let [lo, hi, points] = parts[..] else {
        return Err(bad("expected LO:HI:POINTS"));
    };
    let lo = if lo.eq_ignore_ascii_case("tgel") {
        gelation_time(params)?
    } else {
        lo.parse().map_err(|_| bad("LO is not a number"))?
    };
    let hi: f64 = hi.parse().map_err(|_| bad("HI is not a number"))?;
    let points: usize = points
        .parse()
        .map_err(|_| bad("POINTS is not a positive integer"))?;
    if points == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad("need finite LO < HI and POINTS >= 1"));
    }
    Ok((1..=points)
        .map(|i| lo + (hi - lo) * i as f64 / points as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => json!(fmt_f64(*x)),
            Cell::U(x) => json!(x),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// Shortest round-trip form, switching to exponent notation far from 1.
fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Only `compare` reports a verdict.
    pub pass: Option<bool>,
}

impl Table {
    fn new(name: &'static str, columns: Vec<String>) -> Self {
        Self {
            name,
            columns,
            rows: vec![],
            pass: None,
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))
                .expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        format!("# gelation-csv {} v1\n{body}", self.name)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::json))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = json!({
            "schema": format!("gelation-json {} v1", self.name),
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(pass) = self.pass {
            doc["pass"] = json!(pass);
        }
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }
}

fn indexed(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |i| format!("{prefix}_{i}"))
}

fn columns<'a>(parts: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    parts.into_iter().map(String::from).collect()
}

fn floats(xs: &[f64]) -> impl Iterator<Item = Cell> + '_ {
    xs.iter().map(|&x| Cell::F(x))
}

fn counts(x: &ClusterSize) -> impl Iterator<Item = Cell> + '_ {
    x.counts().iter().map(|&c| Cell::U(u64::from(c)))
}

pub fn geltime(s: &Settings) -> Result<Table> {
    let t_gel = gelation_time(&s.params)?;
    let rho = spectral_radius(&s.params.v_d_alpha())?;
    let mut table = Table::new("geltime", columns(["t_gel", "rho", "t", "rho_t", "phase"]));
    if s.times.is_empty() {
        table.push(vec![
            Cell::F(t_gel),
            Cell::F(rho),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ]);
    }
    for &t in &s.times {
        let region = classify(&s.params, t)?;
        table.push(vec![
            Cell::F(t_gel),
            Cell::F(rho),
            Cell::F(t),
            Cell::F(region.rho),
            Cell::S(region.phase.to_string()),
        ]);
    }
    Ok(table)
}

pub fn invert_table(s: &Settings) -> Result<Table> {
    let k = s.params.k();
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("y", k));
    cols.extend(columns(["iterations", "residual", "phase", "rho_t"]));
    let mut table = Table::new("invert", cols);
    for &t in s.require_times()? {
        let r = invert(&s.params, t)?;
        let mut row = vec![Cell::F(t)];
        row.extend(floats(&r.y));
        row.extend([
            Cell::U(r.iterations as u64),
            Cell::F(r.residual),
            Cell::S(r.region.phase.to_string()),
            Cell::F(r.region.rho),
        ]);
        table.push(row);
    }
    Ok(table)
}

pub fn mass_table(s: &Settings) -> Result<Table> {
    let k = s.params.k();
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("mass", k));
    cols.extend(columns(["tail_bound", "nmax"]));
    let mut table = Table::new("mass", cols);
    for &t in s.require_times()? {
        let r = total_mass(&s.params, t, s.nmax)?;
        let mut row = vec![Cell::F(t)];
        row.extend(floats(&r.mass));
        row.extend([Cell::F(r.tail_bound), Cell::U(s.nmax as u64)]);
        table.push(row);
    }
    Ok(table)
}

pub fn clusters_table(s: &Settings) -> Result<Table> {
    let k = s.params.k();
    let mut cols = vec!["t".to_string()];
    cols.extend(indexed("x", k));
    cols.push("zeta".into());
    let mut table = Table::new("clusters", cols);
    for &t in s.require_times()? {
        let dist = ClusterDistribution::compute(&s.params, t, s.nmax)?;
        for (x, z) in dist.iter() {
            let mut row = vec![Cell::F(t)];
            row.extend(counts(x));
            row.push(Cell::F(*z));
            table.push(row);
        }
    }
    Ok(table)
}

pub fn compare_table(s: &Settings) -> Result<Table> {
    let k = s.params.k();
    let mut cols = columns(["t", "phase", "rho_t"]);
    for route in ROUTES {
        cols.extend(indexed(route, k));
    }
    for (a, b) in PAIRS {
        cols.push(format!("d_{}_{}", ROUTES[a], ROUTES[b]));
    }
    cols.extend(columns(["tail_bound", "tolerance", "pass"]));
    let mut table = Table::new("compare", cols);
    let report = compare(&s.params, s.require_times()?, s.nmax)?;
    for r in &report.rows {
        let mut row = vec![Cell::F(r.t), Cell::S(r.phase.to_string()), Cell::F(r.rho)];
        for y in &r.routes {
            row.extend(floats(y));
        }
        row.extend(floats(&r.discrepancies));
        row.extend([Cell::F(r.tail_bound), Cell::F(r.tolerance), Cell::B(r.pass)]);
        table.push(row);
    }
    table.pass = Some(report.pass);
    Ok(table)
}

fn mc_replicas(s: &Settings) -> u64 {
    s.replicas.unwrap_or(DEFAULT_MC_REPLICAS)
}

pub fn extinction_table(s: &Settings, method: Method) -> Result<Table> {
    let k = s.params.k();
    let mut cols = columns(["t", "method"]);
    cols.extend(indexed("eta", k));
    cols.extend(columns(["residual_or_tail", "n_replicas"]));
    let mut table = Table::new("extinction", cols);
    let (fp, series, mc) = match method {
        Method::Analytic => (true, true, false),
        Method::FixedPoint => (true, false, false),
        Method::Series => (false, true, false),
        Method::MonteCarlo => (false, false, true),
        Method::All => (true, true, true),
    };
    for &t in s.require_times()? {
        let m = MeanMatrix::from_model(&s.params, t)?;
        if fp {
            let r = extinction_fixed_point(&m)?;
            let mut row = vec![Cell::F(t), Cell::S("fixed_point".into())];
            row.extend(floats(&r.eta));
            row.extend([Cell::F(r.residual), Cell::Empty]);
            table.push(row);
        }
        if series {
            let r = extinction_series(&s.params, t, s.nmax)?;
            let mut row = vec![Cell::F(t), Cell::S("series".into())];
            row.extend(floats(&r.eta));
            row.extend([Cell::F(r.tail_bound), Cell::Empty]);
            table.push(row);
        }
        if mc {
            let replicas = mc_replicas(s);
            let tallies: Vec<_> = (0..k)
                .map(|i| simulate_branching_replicas(&m, i, s.seed, replicas, s.caps))
                .collect();
            let freq: Vec<f64> = tallies.iter().map(|t| t.frequency()).collect();
            let sigma = tallies
                .iter()
                .zip(&freq)
                .map(|(t, &f)| t.sigma(f))
                .fold(0.0, f64::max);
            let mut row = vec![Cell::F(t), Cell::S("monte_carlo".into())];
            row.extend(floats(&freq));
            row.extend([Cell::F(sigma), Cell::U(replicas)]);
            table.push(row);
        }
    }
    Ok(table)
}

fn census_columns(k: usize) -> Vec<String> {
    let mut cols = columns(["seed", "t", "kind"]);
    cols.extend(indexed("x", k));
    cols.extend(columns(["count", "scaled", "zeta"]));
    cols
}

fn push_census(
    table: &mut Table,
    s: &Settings,
    seed: u64,
    t: f64,
    census: &ClusterCensus,
    giant: &[u64],
) {
    for (x, c) in census.iter() {
        let mut row = vec![Cell::U(seed), Cell::F(t), Cell::S("census".into())];
        row.extend(counts(x));
        row.extend([
            Cell::U(c),
            Cell::F(c as f64 / s.n as f64),
            Cell::F(zeta(&s.params, x, t)),
        ]);
        table.push(row);
    }
    let size: u64 = giant.iter().sum();
    let total: u64 = size + census.particles().iter().sum::<u64>();
    let mut row = vec![Cell::U(seed), Cell::F(t), Cell::S("giant".into())];
    row.extend(giant.iter().map(|&g| Cell::U(g)));
    row.extend([Cell::U(1), Cell::F(size as f64 / total as f64), Cell::Empty]);
    table.push(row);
}

/// Moves one copy of the largest cluster (last in graded order) out of the census.
fn split_largest(mut census: ClusterCensus) -> (ClusterCensus, Vec<u64>) {
    let k = census.k();
    let Some(largest) = census.iter().map(|(x, _)| x.clone()).max() else {
        return (census, vec![0; k]);
    };
    let rest: Vec<(ClusterSize, u64)> = census.iter().map(|(x, c)| (x.clone(), c)).collect();
    census = ClusterCensus::new(k);
    for (x, c) in rest {
        let c = if x == largest { c - 1 } else { c };
        census.add(x, c);
    }
    let giant = largest.counts().iter().map(|&c| u64::from(c)).collect();
    (census, giant)
}

pub fn sim_graph_table(s: &Settings) -> Result<Table> {
    let mut table = Table::new("sim-graph", census_columns(s.params.k()));
    let replicas = s.replicas.unwrap_or(1);
    for &t in s.require_times()? {
        for sample in sample_graph_replicas(&s.params, t, s.n, s.seed, replicas)? {
            push_census(
                &mut table,
                s,
                sample.seed,
                t,
                &sample.census,
                &sample.giant.composition,
            );
        }
    }
    Ok(table)
}

pub fn sim_coalescent_table(s: &Settings) -> Result<Table> {
    let mut table = Table::new("sim-coalescent", census_columns(s.params.k()));
    let replicas = s.replicas.unwrap_or(1);
    let times = s.require_times()?;
    let runs = run_replicas(&s.params, s.n, times, s.seed, replicas)?;
    for (r, snapshots) in runs.into_iter().enumerate() {
        for (&t, census) in times.iter().zip(snapshots) {
            let (census, giant) = split_largest(census);
            push_census(&mut table, s, s.seed ^ r as u64, t, &census, &giant);
        }
    }
    Ok(table)
}

pub fn sim_branching_table(s: &Settings) -> Result<Table> {
    let cols = columns([
        "t",
        "start_type",
        "replicas",
        "extinct",
        "survived",
        "frequency",
        "sigma",
        "eta_fixed_point",
    ]);
    let mut table = Table::new("sim-branching", cols);
    let replicas = mc_replicas(s);
    for &t in s.require_times()? {
        let m = MeanMatrix::from_model(&s.params, t)?;
        let eta = extinction_fixed_point(&m)?.eta;
        for (i, &e) in eta.iter().enumerate() {
            let tally = simulate_branching_replicas(&m, i, s.seed, replicas, s.caps);
            table.push(vec![
                Cell::F(t),
                Cell::U(i as u64 + 1),
                Cell::U(replicas),
                Cell::U(tally.extinct),
                Cell::U(tally.survived),
                Cell::F(tally.frequency()),
                Cell::F(tally.sigma(e)),
                Cell::F(e),
            ]);
        }
    }
    Ok(table)
}

pub fn build_table(command: Command, s: &Settings) -> Result<Table> {
    match command {
        Command::Geltime => geltime(s),
        Command::Compare => compare_table(s),
        Command::Invert => invert_table(s),
        Command::Mass => mass_table(s),
        Command::Clusters => clusters_table(s),
        Command::Extinction { method } => extinction_table(s, method),
        Command::SimGraph => sim_graph_table(s),
        Command::SimCoalescent => sim_coalescent_table(s),
        Command::SimBranching => sim_branching_table(s),
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } => EXIT_CONVERGENCE,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return e.exit_code() as u8;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<u8> {
    let settings = Settings::resolve(&cli.common)?;
    let table = build_table(cli.command, &settings)?;
    let text = if settings.json {
        table.to_json()
    } else {
        table.to_csv()
    };
    let io = |e: std::io::Error| Error::Config(format!("writing output: {e}"));
    match &settings.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => stdout.write_all(text.as_bytes()).map_err(io)?,
    }
    Ok(match table.pass {
        Some(true) => {
            let _ = writeln!(stderr, "compare: PASS ({} points)", table.rows.len());
            EXIT_OK
        }
        Some(false) => {
            let failed = table
                .rows
                .iter()
                .filter(|r| r.last() == Some(&Cell::B(false)))
                .count();
            let _ = writeln!(
                stderr,
                "compare: FAIL ({failed} of {} points)",
                table.rows.len()
            );
            EXIT_TOLERANCE
        }
        None => EXIT_OK,
    })
}
