//! Batch front end: compile queries, resolve in three modes, differential
//! fuzzing, and instrumented benchmarking.
//!
//! These functions back the `sgq` binary but are ordinary library calls;
//! integration tests and the runnable examples drive them directly. All
//! human-readable results go to the supplied writer; errors come back as
//! [`CliError`] values (the binary maps them to exit code 2, and semantic
//! mismatches from `diff`/`fuzz` to exit code 1).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::generic_resolver::{brute_force_resolve, resolve, ResolveError, ResolveStats};
use crate::ir::{
    parse_machine, print_machine, run_machine, MachineError, MachineParseError, StateMachine,
};
use crate::label_regex::{Label, LabelRegEx, PathLabel};
use crate::query_model::{validate_order, DataEquiv, DataWf, LabelOrder, Query, QueryError};
use crate::scope_graph::{
    load_graph, save_graph, Datum, Edge, Env, GraphError, ScopeGraph, ScopeId,
};
use crate::specializer::{compile_query, SpecializeError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Query(#[from] QueryError),
    #[error("{0}")]
    Specialize(#[from] SpecializeError),
    #[error("{0}")]
    Machine(#[from] MachineError),
    #[error("{0}")]
    MachineText(#[from] MachineParseError),
    #[error("{0}")]
    Resolve(#[from] ResolveError),
    #[error("{0}")]
    Usage(String),
}

/// Resolution mode of a run report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Generic,
    Specialized,
    BruteForce,
}

impl FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Mode, CliError> {
        match s {
            "generic" => Ok(Mode::Generic),
            "specialized" => Ok(Mode::Specialized),
            "bruteforce" => Ok(Mode::BruteForce),
            other => Err(CliError::Usage(format!(
                "unknown mode `{other}`; expected generic, specialized, or bruteforce"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Generic => "generic",
            Mode::Specialized => "specialized",
            Mode::BruteForce => "bruteforce",
        })
    }
}

/// Result of one resolution run: the environment as sorted rendered path
/// strings, plus counters and wall time.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub mode: Mode,
    pub env: Vec<String>,
    pub stats: ResolveStats,
    pub wall_time_ns: u64,
}

/// Renders an environment as path strings, sorted lexicographically.
pub fn render_env(env: &Env) -> Vec<String> {
    let mut lines: Vec<String> = env.iter().map(|p| p.to_string()).collect();
    lines.sort();
    lines
}

fn read(path: &Path) -> Result<String, CliError> {
    Ok(std::fs::read_to_string(path)?)
}

fn load_inputs(graph_path: &Path, query_path: &Path) -> Result<(ScopeGraph, Query), CliError> {
    let g = load_graph(&read(graph_path)?)?;
    let q = Query::from_json(&read(query_path)?)?;
    Ok((g, q))
}

/// Runs one mode. A specialized run uses `machine` when given, otherwise
/// compiles the query with defaults (`else` iff the equivalence is trivially
/// true, CSE on). A query whose regex denotes the empty language
/// short-circuits to the constant empty environment.
pub fn resolve_in_mode(
    g: &ScopeGraph,
    q: &Query,
    mode: Mode,
    machine: Option<&StateMachine>,
) -> Result<(Env, ResolveStats), CliError> {
    match mode {
        Mode::Generic => Ok(resolve(g, q)?),
        Mode::BruteForce => Ok((brute_force_resolve(g, q)?, ResolveStats::default())),
        Mode::Specialized => {
            if q.regex == LabelRegEx::Empty {
                return Ok((Env::new(), ResolveStats::default()));
            }
            match machine {
                Some(m) => Ok(run_machine(m, g, &q.start, &q.wf, &q.equiv)?),
                None => {
                    let m = compile_query(q, None, true)?;
                    Ok(run_machine(&m, g, &q.start, &q.wf, &q.equiv)?)
                }
            }
        }
    }
}

/// `sgq compile`: compiles a query file to machine text, written to `out`
/// when given, otherwise to the writer.
pub fn cmd_compile(
    query_path: &Path,
    use_else: Option<bool>,
    cse: bool,
    out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let q = Query::from_json(&read(query_path)?)?;
    let machine = compile_query(&q, use_else, cse)?;
    let text = print_machine(&machine);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => w.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `sgq resolve`: resolves and prints environment lines, or the full JSON
/// report with stats. An empty environment is a success.
pub fn cmd_resolve(
    graph_path: &Path,
    query_path: &Path,
    mode: Mode,
    json: bool,
    w: &mut dyn Write,
) -> Result<RunReport, CliError> {
    let (g, q) = load_inputs(graph_path, query_path)?;
    let started = Instant::now();
    let (env, stats) = resolve_in_mode(&g, &q, mode, None)?;
    let wall_time_ns = started.elapsed().as_nanos() as u64;
    let report = RunReport {
        mode,
        env: render_env(&env),
        stats,
        wall_time_ns,
    };
    if json {
        writeln!(
            w,
            "{}",
            serde_json::to_string_pretty(&report).expect("report is serializable")
        )?;
    } else {
        for line in &report.env {
            writeln!(w, "{line}")?;
        }
    }
    Ok(report)
}

/// One named run within a differential comparison.
#[derive(Debug)]
pub struct ModeRun {
    pub name: String,
    pub env: Vec<String>,
    pub stats: ResolveStats,
}

/// Runs the generic algorithm, the brute-force oracle, and every applicable
/// specialization variant (with and without CSE; with and without `else`
/// when the equivalence is trivially true). `machine` replaces the default
/// specialized machine, for harness self-tests.
pub fn run_all_modes(
    g: &ScopeGraph,
    q: &Query,
    machine: Option<&StateMachine>,
) -> Result<Vec<ModeRun>, CliError> {
    let mut runs = Vec::new();
    let (env, stats) = resolve_in_mode(g, q, Mode::Generic, None)?;
    runs.push(ModeRun {
        name: "generic".into(),
        env: render_env(&env),
        stats,
    });
    let (env, stats) = resolve_in_mode(g, q, Mode::BruteForce, None)?;
    runs.push(ModeRun {
        name: "bruteforce".into(),
        env: render_env(&env),
        stats,
    });

    if machine.is_some() {
        let (env, stats) = resolve_in_mode(g, q, Mode::Specialized, machine)?;
        runs.push(ModeRun {
            name: "specialized".into(),
            env: render_env(&env),
            stats,
        });
        return Ok(runs);
    }

    let mut variants: Vec<(&str, Option<bool>, bool)> = vec![
        ("specialized", None, true),
        ("specialized-raw", None, false),
    ];
    if q.equiv.is_trivially_true() {
        variants.push(("specialized-shadow", Some(false), true));
        variants.push(("specialized-shadow-raw", Some(false), false));
    }
    for (name, use_else, cse) in variants {
        let (env, stats) = if q.regex == LabelRegEx::Empty {
            (Env::new(), ResolveStats::default())
        } else {
            let m = compile_query(q, use_else, cse)?;
            run_machine(&m, g, &q.start, &q.wf, &q.equiv)?
        };
        runs.push(ModeRun {
            name: name.into(),
            env: render_env(&env),
            stats,
        });
    }
    Ok(runs)
}

fn report_runs(runs: &[ModeRun], w: &mut dyn Write) -> Result<(), CliError> {
    for run in runs {
        writeln!(w, "[{}] {} path(s)", run.name, run.env.len())?;
        for line in &run.env {
            writeln!(w, "  {line}")?;
        }
    }
    Ok(())
}

/// `sgq diff`: runs all modes and compares environments as sets. Returns
/// whether they all agree; the binary maps disagreement to exit code 1.
pub fn cmd_diff(
    graph_path: &Path,
    query_path: &Path,
    machine_path: Option<&Path>,
    w: &mut dyn Write,
) -> Result<bool, CliError> {
    let (g, q) = load_inputs(graph_path, query_path)?;
    let machine = match machine_path {
        Some(p) => Some(parse_machine(&read(p)?)?),
        None => None,
    };
    let runs = run_all_modes(&g, &q, machine.as_ref())?;
    let agree = runs.iter().all(|r| r.env == runs[0].env);
    if agree {
        writeln!(
            w,
            "all {} modes agree ({} path(s))",
            runs.len(),
            runs[0].env.len()
        )?;
        for line in &runs[0].env {
            writeln!(w, "  {line}")?;
        }
    } else {
        writeln!(w, "MISMATCH between modes:")?;
        report_runs(&runs, w)?;
    }
    Ok(agree)
}

pub struct FuzzOptions {
    pub seed: u64,
    pub cases: u64,
    pub max_scopes: usize,
    pub max_labels: usize,
    pub reproducer_dir: PathBuf,
}

impl Default for FuzzOptions {
    fn default() -> FuzzOptions {
        FuzzOptions {
            seed: 42,
            cases: 100,
            max_scopes: 12,
            max_labels: 3,
            reproducer_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
pub struct FuzzOutcome {
    pub cases_run: u64,
    /// Case index of the first mismatch, when any.
    pub mismatch: Option<u64>,
}

/// One generated differential-test instance.
pub struct FuzzCase {
    pub graph: ScopeGraph,
    pub query: Query,
}

/// `sgq fuzz`: seeded random (graph, query) pairs, each resolved in all
/// modes and compared. The first mismatch is dumped as `graph.json` and
/// `query.json` reproducer files, replayable with `sgq diff`.
pub fn cmd_fuzz(opts: &FuzzOptions, w: &mut dyn Write) -> Result<FuzzOutcome, CliError> {
    for case in 0..opts.cases {
        let FuzzCase { graph, query } =
            gen_fuzz_case(opts.seed, case, opts.max_scopes, opts.max_labels);
        let runs = run_all_modes(&graph, &query, None)?;
        let agree = runs.iter().all(|r| r.env == runs[0].env);
        if !agree {
            let graph_path = opts.reproducer_dir.join("graph.json");
            let query_path = opts.reproducer_dir.join("query.json");
            std::fs::write(&graph_path, save_graph(&graph))?;
            std::fs::write(&query_path, query.to_json())?;
            writeln!(
                w,
                "case {case} (seed {}) MISMATCH; reproducer written to {} and {}",
                opts.seed,
                graph_path.display(),
                query_path.display()
            )?;
            report_runs(&runs, w)?;
            return Ok(FuzzOutcome {
                cases_run: case + 1,
                mismatch: Some(case),
            });
        }
    }
    writeln!(w, "{} cases, all modes agree", opts.cases)?;
    Ok(FuzzOutcome {
        cases_run: opts.cases,
        mismatch: None,
    })
}

pub struct BenchOptions {
    pub iters: u64,
    pub warmup: u64,
    pub csv: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> BenchOptions {
        BenchOptions {
            iters: 20,
            warmup: 5,
            csv: None,
        }
    }
}

/// Five-number summary of per-iteration speedup ratios
/// (generic time / specialized time).
#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub iters: u64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

struct BenchRow {
    mode: Mode,
    iter: u64,
    wall_time_ns: u64,
    stats: ResolveStats,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// `sgq bench`: warmup plus timed iterations of the generic and specialized
/// resolvers on the same inputs, with per-iteration counters, CSV emission,
/// and a five-number speedup summary.
pub fn cmd_bench(
    graph_path: &Path,
    query_path: &Path,
    opts: &BenchOptions,
    w: &mut dyn Write,
) -> Result<BenchSummary, CliError> {
    let (g, q) = load_inputs(graph_path, query_path)?;
    let machine = compile_query(&q, None, true)?;

    for _ in 0..opts.warmup {
        resolve(&g, &q)?;
        run_machine(&machine, &g, &q.start, &q.wf, &q.equiv)?;
    }

    let mut rows: Vec<BenchRow> = Vec::new();
    let mut speedups: Vec<f64> = Vec::new();
    for iter in 0..opts.iters {
        let started = Instant::now();
        let (generic_env, stats) = resolve(&g, &q)?;
        let generic_ns = (started.elapsed().as_nanos() as u64).max(1);
        rows.push(BenchRow {
            mode: Mode::Generic,
            iter,
            wall_time_ns: generic_ns,
            stats,
        });

        let started = Instant::now();
        let (specialized_env, stats) = run_machine(&machine, &g, &q.start, &q.wf, &q.equiv)?;
        let specialized_ns = (started.elapsed().as_nanos() as u64).max(1);
        rows.push(BenchRow {
            mode: Mode::Specialized,
            iter,
            wall_time_ns: specialized_ns,
            stats,
        });
        debug_assert_eq!(specialized_env, generic_env);

        speedups.push(generic_ns as f64 / specialized_ns as f64);
    }

    let mut sorted = speedups.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("speedups are finite"));
    let summary = BenchSummary {
        iters: opts.iters,
        min: percentile(&sorted, 0.0),
        q1: percentile(&sorted, 0.25),
        median: percentile(&sorted, 0.5),
        q3: percentile(&sorted, 0.75),
        max: percentile(&sorted, 1.0),
    };

    if let Some(csv_path) = &opts.csv {
        let mut csv = String::from(
            "mode,iter,wall_time_ns,derivative_count,order_query_count,edges_traversed,shadow_calls\n",
        );
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.mode,
                row.iter,
                row.wall_time_ns,
                row.stats.derivative_count,
                row.stats.order_query_count,
                row.stats.edges_traversed,
                row.stats.shadow_calls
            ));
        }
        csv.push_str(&format!(
            "speedup,summary,{},{},{},{},{}\n",
            summary.min, summary.q1, summary.median, summary.q3, summary.max
        ));
        std::fs::write(csv_path, csv)?;
    }

    writeln!(
        w,
        "{} iterations per mode ({} warmup)",
        opts.iters, opts.warmup
    )?;
    for mode in [Mode::Generic, Mode::Specialized] {
        let times: Vec<u64> = rows
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.wall_time_ns)
            .collect();
        let mean = times.iter().sum::<u64>() / times.len().max(1) as u64;
        let stats = rows
            .iter()
            .find(|r| r.mode == mode)
            .map(|r| r.stats)
            .unwrap_or_default();
        writeln!(
            w,
            "  {mode:<11} mean {mean} ns/iter  (derivatives {}, order queries {}, edges {}, shadows {})",
            stats.derivative_count, stats.order_query_count, stats.edges_traversed, stats.shadow_calls
        )?;
    }
    writeln!(
        w,
        "speedup (generic/specialized): min {:.2}  q1 {:.2}  median {:.2}  q3 {:.2}  max {:.2}",
        summary.min, summary.q1, summary.median, summary.q3, summary.max
    )?;
    Ok(summary)
}

// --- random instance generation -----------------------------------------

fn sid(s: String) -> ScopeId {
    ScopeId::new(s).expect("generated scope names are non-empty")
}

fn lbl(s: &str) -> Label {
    Label::new(s).expect("generated labels are identifiers")
}

const DATUM_NAMES: [&str; 3] = ["x", "y", "z"];

/// Deterministic random scope graph: a lexical chain of body scopes over
/// `P`, declaration leaves over `VAR` with name datums, `I` imports between
/// bodies, and uniform noise edges. Only labels present in `labels` are
/// used.
pub fn gen_random_graph(seed: u64, max_scopes: usize, labels: &[Label]) -> ScopeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_scopes = max_scopes.max(1);
    let n = rng.random_range(1..=max_scopes);
    let scopes: Vec<ScopeId> = (0..n).map(|i| sid(format!("s{i}"))).collect();
    let has = |name: &str| labels.iter().any(|l| l.as_str() == name);

    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut data: BTreeMap<ScopeId, Datum> = BTreeMap::new();
    let pick_name =
        |rng: &mut ChaCha8Rng| Datum::atom(DATUM_NAMES[rng.random_range(0..DATUM_NAMES.len())]);

    let bodies = n.div_ceil(2);
    if has("P") {
        for i in 1..bodies {
            let parent = rng.random_range(0..i);
            edges.insert(Edge::new(
                scopes[i].clone(),
                lbl("P"),
                scopes[parent].clone(),
            ));
        }
    }
    for leaf in bodies..n {
        if has("VAR") {
            let owner = rng.random_range(0..bodies);
            edges.insert(Edge::new(
                scopes[owner].clone(),
                lbl("VAR"),
                scopes[leaf].clone(),
            ));
        }
        let d = pick_name(&mut rng);
        data.insert(scopes[leaf].clone(), d);
    }
    if has("I") && bodies >= 2 {
        for _ in 0..rng.random_range(0..=bodies / 2) {
            let a = rng.random_range(0..bodies);
            let b = rng.random_range(0..bodies);
            if a != b {
                edges.insert(Edge::new(scopes[a].clone(), lbl("I"), scopes[b].clone()));
            }
        }
    }
    for body in scopes.iter().take(bodies) {
        if rng.random_bool(0.25) {
            let d = pick_name(&mut rng);
            data.insert(body.clone(), d);
        }
    }
    if !labels.is_empty() {
        for _ in 0..rng.random_range(0..=n) {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let l = labels[rng.random_range(0..labels.len())].clone();
            edges.insert(Edge::new(scopes[a].clone(), l, scopes[b].clone()));
        }
    }

    ScopeGraph::new(scopes, edges.into_iter().collect(), data)
        .expect("generated graphs are valid by construction")
}

fn random_regex(rng: &mut ChaCha8Rng, labels: &[Label], budget: usize) -> LabelRegEx {
    let pick =
        |rng: &mut ChaCha8Rng| LabelRegEx::Lit(labels[rng.random_range(0..labels.len())].clone());
    if budget <= 1 {
        return pick(rng);
    }
    match rng.random_range(0..10u32) {
        0..=3 => pick(rng),
        4 | 5 => LabelRegEx::concat(
            random_regex(rng, labels, budget / 2),
            random_regex(rng, labels, budget - budget / 2 - 1),
        ),
        6 | 7 => LabelRegEx::union(
            random_regex(rng, labels, budget / 2),
            random_regex(rng, labels, budget - budget / 2 - 1),
        ),
        8 => LabelRegEx::star(random_regex(rng, labels, budget - 1)),
        _ => LabelRegEx::question(random_regex(rng, labels, budget - 1)),
    }
}

fn random_order(rng: &mut ChaCha8Rng, labels: &[Label]) -> LabelOrder {
    let mut pool: Vec<PathLabel> = labels.iter().cloned().map(PathLabel::Edge).collect();
    pool.push(PathLabel::End);
    pool.shuffle(rng);
    // Pairs drawn along one shuffled total order are acyclic by
    // construction, so validation cannot fail.
    let mut pairs = Vec::new();
    if pool.len() >= 2 {
        for _ in 0..rng.random_range(0..=4u32) {
            let i = rng.random_range(0..pool.len() - 1);
            let j = rng.random_range(i + 1..pool.len());
            pairs.push((pool[i].clone(), pool[j].clone()));
        }
    }
    validate_order(pairs).expect("sampled along a total order")
}

/// Deterministic random query over the given labels and start-scope pool:
/// a regex of size at most 8, an irreflexive order possibly involving `$`,
/// and sampled data predicates.
pub fn gen_random_query(seed: u64, labels: &[Label], scopes: &[ScopeId]) -> Query {
    assert!(!labels.is_empty() && !scopes.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regex = random_regex(&mut rng, labels, 8);
    let order = random_order(&mut rng, labels);
    let wf = if rng.random_bool(0.5) {
        DataWf::Any
    } else {
        DataWf::name_eq(DATUM_NAMES[rng.random_range(0..DATUM_NAMES.len())])
    };
    let equiv = if rng.random_bool(0.5) {
        DataEquiv::AlwaysTrue
    } else {
        DataEquiv::SameName
    };
    let start = scopes[rng.random_range(0..scopes.len())].clone();
    Query::new(start, regex, wf, order, equiv)
}

fn label_pool(max_labels: usize) -> Vec<Label> {
    ["P", "VAR", "I"]
        .iter()
        .take(max_labels.clamp(1, 3))
        .map(|s| lbl(s))
        .collect()
}

fn mix_seeds(seed: u64, case: u64) -> u64 {
    // splitmix64 over the combined words.
    let mut z = seed ^ case.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The per-case instance generator behind `fuzz`: identical `(seed, case)`
/// pairs always yield identical instances.
pub fn gen_fuzz_case(seed: u64, case: u64, max_scopes: usize, max_labels: usize) -> FuzzCase {
    let labels = label_pool(max_labels);
    let graph_seed = mix_seeds(seed, case.wrapping_mul(2));
    let query_seed = mix_seeds(seed, case.wrapping_mul(2) + 1);
    let graph = gen_random_graph(graph_seed, max_scopes, &labels);
    let scopes: Vec<ScopeId> = graph.scopes().cloned().collect();
    let query = gen_random_query(query_seed, &labels, &scopes);
    FuzzCase { graph, query }
}

/// A `P`-chain of the given depth (`c0 -P-> c1 -P-> ...`), every scope
/// carrying the datum `x`. With order `$ < P` and a matching
/// well-formedness, an `else`-compiled machine answers at the start scope
/// without traversing a single edge.
pub fn gen_chain_graph(depth: usize) -> ScopeGraph {
    let scopes: Vec<ScopeId> = (0..=depth).map(|i| sid(format!("c{i}"))).collect();
    let edges = (0..depth)
        .map(|i| Edge::new(scopes[i].clone(), lbl("P"), scopes[i + 1].clone()))
        .collect();
    let data = scopes
        .iter()
        .map(|s| (s.clone(), Datum::atom("x")))
        .collect();
    ScopeGraph::new(scopes, edges, data).expect("chain graphs are valid")
}

/// A deterministic module-chain benchmark graph of exactly `total_scopes`
/// scopes, shaped like the module-language example: a lexical `P`-chain of
/// module bodies, each with a `VAR` declaration leaf, importing filler
/// modules over `I` edges. Returns the graph together with the query that
/// resolves an absent name from the deepest body, which forces a full
/// traversal in every mode.
pub fn gen_lm_motif(total_scopes: usize) -> (ScopeGraph, Query) {
    let total_scopes = total_scopes.max(4);
    // Chain depth is capped so resolution recursion stays shallow; the rest
    // of the budget becomes imported filler modules.
    let depth = ((total_scopes - 1) / 2).min(250);
    let filler_count = (total_scopes - 1 - 2 * depth) / 2;
    let mut scopes = vec![sid("root".to_string())];
    let mut edges = Vec::new();
    let mut data = BTreeMap::new();

    let mut bodies = vec![scopes[0].clone()];
    for i in 1..=depth {
        let body = sid(format!("b{i}"));
        let leaf = sid(format!("v{i}"));
        edges.push(Edge::new(body.clone(), lbl("P"), bodies[i - 1].clone()));
        edges.push(Edge::new(body.clone(), lbl("VAR"), leaf.clone()));
        data.insert(
            leaf.clone(),
            Datum::atom(DATUM_NAMES[i % DATUM_NAMES.len()]),
        );
        scopes.push(body.clone());
        scopes.push(leaf);
        bodies.push(body);
    }
    for k in 0..filler_count {
        let body = sid(format!("f{k}"));
        let leaf = sid(format!("fv{k}"));
        let importer = bodies[1 + (k % depth)].clone();
        edges.push(Edge::new(importer, lbl("I"), body.clone()));
        edges.push(Edge::new(body.clone(), lbl("VAR"), leaf.clone()));
        data.insert(
            leaf.clone(),
            Datum::atom(DATUM_NAMES[k % DATUM_NAMES.len()]),
        );
        scopes.push(body);
        scopes.push(leaf);
    }
    // Spend any remaining odd budget on plain leaves under the root.
    let mut extra = 0;
    while scopes.len() < total_scopes {
        let leaf = sid(format!("r{extra}"));
        edges.push(Edge::new(bodies[0].clone(), lbl("VAR"), leaf.clone()));
        data.insert(leaf.clone(), Datum::atom("x"));
        scopes.push(leaf);
        extra += 1;
    }

    let graph = ScopeGraph::new(scopes, edges, data).expect("benchmark graph is valid");
    let query = Query::new(
        bodies[depth].clone(),
        crate::label_regex::parse_regex("P* I? VAR").expect("fixed regex"),
        DataWf::name_eq("needle"),
        validate_order([
            (PathLabel::Edge(lbl("VAR")), PathLabel::Edge(lbl("P"))),
            (PathLabel::Edge(lbl("VAR")), PathLabel::Edge(lbl("I"))),
        ])
        .expect("fixed order"),
        DataEquiv::AlwaysTrue,
    );
    (graph, query)
}
