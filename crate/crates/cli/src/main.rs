//! `ustlab`: exact spanning-tree statistics from the command line.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 invalid input, 3 a size guard tripped.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use ustlab::cumulant::{cumulant_direct, cumulant_via_moments, neighbor_cumulant, neighbor_probability};
use ustlab::degree::{degree_pmf, degree_pmf_joint, kn_degree_closed_form, poisson_limit};
use ustlab::graph::{GraphSource, LatticeFile};
use ustlab::grassmann::wick_audit;
use ustlab::green::{green_auto, green_grounded};
use ustlab::perm::{audit_bijection, audit_surgery, AuditReport, DEFAULT_MAX_PERM};
use ustlab::potential::{PotentialKernel, DEFAULT_QUAD_TOL};
use ustlab::sampler::{mc_estimate, McQuery};
use ustlab::scaling::{convergence_study, lattice_constant, reference_constant};
use ustlab::transfer::{edge_probability, inclusion_exclusion_probability, TransferMatrix};
use ustlab::{
    ContinuumDomain, CumulantOptions, CumulantQuery, DegreeQuery, DirectedEdge, EdgeProbQuery, FiniteGraph,
    LatticeKind, LatticeSpec, Site, StarSet, VertexId,
};

const DEFAULT_MAX_ENUM: usize = 20;
const DEFAULT_MAX_ENUM_JOINT: usize = 24;
const EXACT_LIMIT: usize = 3000;

#[derive(Parser, Debug)]
#[command(
    name = "ustlab",
    version,
    about = "Exact uniform-spanning-tree statistics via transfer currents"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "USTLAB_THREADS")]
    threads: Option<usize>,

    /// RNG seed for sampling and random checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Command-specific tolerance (quadrature, check threshold, ...).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Largest edge set enumerated by subset sums.
    #[arg(long = "max-enum", global = true, default_value_t = DEFAULT_MAX_ENUM)]
    max_enum: usize,

    /// Largest edge set whose permutations are enumerated directly.
    #[arg(long = "max-perm", global = true, default_value_t = DEFAULT_MAX_PERM)]
    max_perm: usize,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
struct Source {
    /// Graph JSON file (explicit vertices/edges, or lattice/width/height).
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
    /// Lattice name: Z2, tri or hex.
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Complete graph on N vertices.
    #[arg(long, value_name = "N")]
    complete: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Green's function of a graph, or the lattice potential kernel a(x, y).
    Green {
        #[command(flatten)]
        src: Source,
        /// Ground at this vertex instead of the default.
        #[arg(long)]
        ground: Option<i64>,
        /// Lattice vector (x, y) at which to evaluate a; needs --lattice.
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        kernel: Option<Vec<i64>>,
    },
    /// P(F ⊆ T, G ∩ T = ∅) by a transfer-current determinant.
    EdgeProb {
        #[command(flatten)]
        src: Source,
        /// Required edges, "u-v,...".
        #[arg(long = "in", default_value = "")]
        present: String,
        /// Forbidden edges, "u-v,...".
        #[arg(long, default_value = "")]
        absent: String,
    },
    /// Degree law at a vertex, a joint degree probability, or the K_n law.
    DegreePmf {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        vertex: Option<i64>,
        /// Joint event "v:k,...".
        #[arg(long)]
        joint: Option<String>,
    },
    /// Joint degree cumulant at a good set, or at two neighbours.
    Cumulant {
        #[command(flatten)]
        src: Source,
        /// "v:k,..."
        #[arg(long)]
        points: String,
        /// Also evaluate through joint moments.
        #[arg(long)]
        oracle: bool,
        /// Two adjacent points: condition on their edge being in or out of T.
        #[arg(long, value_enum)]
        neighbor: Option<Side>,
    },
    /// Lattice constant C_L^(k).
    Constant {
        #[arg(long)]
        lattice: String,
        /// Omit for every k.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Rescaled lattice cumulants on the shrinking-mesh disk versus the limit.
    Converge {
        #[arg(long, default_value = "Z2")]
        lattice: String,
        /// "x1,y1;x2,y2;..."
        #[arg(long, allow_hyphen_values = true)]
        points: String,
        /// "k1,k2,..."
        #[arg(long)]
        k: String,
        /// Decreasing mesh sizes; fractions like 1/8 are accepted.
        #[arg(long, default_value = "1/8,1/12,1/16,1/24")]
        eps: String,
    },
    /// Monte Carlo frequency over Wilson trees, with the exact value when cheap.
    Sample {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long = "in", default_value = "")]
        present: String,
        #[arg(long, default_value = "")]
        absent: String,
        /// Degree event "v:k,..." instead of an edge event.
        #[arg(long)]
        degree: Option<String>,
    },
    /// Both Wick identities on seeded random matrices.
    WickCheck {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Exhaustive surgery or bijection audit on small star sets.
    PermAudit {
        /// "NxS" (N stars of size S) or "s1,s2,...".
        #[arg(long)]
        stars: String,
        #[arg(long, value_enum, default_value = "all")]
        check: AuditKind,
    },
    /// Every tabulated lattice constant against its computed value.
    ReproduceTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AuditKind {
    Surgery,
    Bijection,
    All,
}

struct Failure {
    code: u8,
    msg: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<ustlab::Error> for Failure {
    fn from(e: ustlab::Error) -> Self {
        Failure {
            code: if e.is_guard() { 3 } else { 2 },
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        bad(e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Report {
    value: Value,
    format: Format,
    ok: bool,
}

impl Report {
    fn json(value: Value) -> Self {
        Report {
            value,
            format: Format::Json,
            ok: true,
        }
    }

    fn csv(value: Value) -> Self {
        Report {
            value,
            format: Format::Csv,
            ok: true,
        }
    }

    fn check(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(ok) => ExitCode::from(if ok { 0 } else { 1 }),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Res<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(bad("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| bad(e.to_string()))?;
    }
    let report = dispatch(cli)?;
    let text = match cli.format.unwrap_or(report.format) {
        Format::Json => serde_json::to_string_pretty(&report.value).expect("json") + "\n",
        Format::Csv => to_csv(&report.value),
    };
    match &cli.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(report.ok)
}

fn dispatch(cli: &Cli) -> Res<Report> {
    match &cli.cmd {
        Cmd::Green { src, ground, kernel } => green(cli, src, *ground, kernel.as_deref()),
        Cmd::EdgeProb { src, present, absent } => edge_prob(cli, src, present, absent),
        Cmd::DegreePmf { src, vertex, joint } => degree(cli, src, *vertex, joint.as_deref()),
        Cmd::Cumulant {
            src,
            points,
            oracle,
            neighbor,
        } => cumulant(cli, src, points, *oracle, *neighbor),
        Cmd::Constant { lattice, k } => constant(cli, lattice, *k),
        Cmd::Converge {
            lattice,
            points,
            k,
            eps,
        } => converge(cli, lattice, points, k, eps),
        Cmd::Sample {
            src,
            samples,
            present,
            absent,
            degree,
        } => sample(cli, src, *samples, present, absent, degree.as_deref()),
        Cmd::WickCheck { m, trials } => wick(cli, *m, *trials),
        Cmd::PermAudit { stars, check } => perm_audit(cli, stars, *check),
        Cmd::ReproduceTable => reproduce_table(cli),
    }
}

// ---- input ----

fn build_graph(src: &Source) -> Res<FiniteGraph> {
    let chosen = [src.graph.is_some(), src.lattice.is_some(), src.complete.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if chosen != 1 {
        return Err(bad(
            "give exactly one of --graph, --lattice (with --width/--height), --complete",
        ));
    }
    if let Some(p) = &src.graph {
        return Ok(FiniteGraph::from_json_str(&std::fs::read_to_string(p)?)?);
    }
    if let Some(n) = src.complete {
        return Ok(FiniteGraph::complete(n)?);
    }
    let (Some(width), Some(height)) = (src.width, src.height) else {
        return Err(bad("--lattice needs --width and --height"));
    };
    let file = LatticeFile {
        lattice: src.lattice.clone().expect("checked"),
        width,
        height,
    };
    Ok(GraphSource::Lattice(file).build()?)
}

fn parse_label(s: &str) -> Res<i64> {
    s.trim().parse().map_err(|_| bad(format!("bad vertex label {s:?}")))
}

fn parse_edges(graph: &FiniteGraph, s: &str) -> Res<Vec<DirectedEdge>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            // skip a leading sign so negative labels still split
            let cut = t[1..]
                .find('-')
                .map(|i| i + 1)
                .ok_or_else(|| bad(format!("edge {t:?} is not u-v")))?;
            let u = graph.vertex_by_label(parse_label(&t[..cut])?)?;
            let v = graph.vertex_by_label(parse_label(&t[cut + 1..])?)?;
            Ok(graph.directed(u, v)?)
        })
        .collect()
}

fn parse_points(graph: &FiniteGraph, s: &str) -> Res<Vec<(VertexId, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (v, k) = t
                .split_once(':')
                .ok_or_else(|| bad(format!("point {t:?} is not v:k")))?;
            let k = k.trim().parse().map_err(|_| bad(format!("bad degree in {t:?}")))?;
            Ok((graph.vertex_by_label(parse_label(v)?)?, k))
        })
        .collect()
}

fn parse_num(s: &str) -> Res<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a
            .trim()
            .parse::<f64>()
            .ok()
            .zip(b.trim().parse::<f64>().ok())
            .map(|(a, b)| a / b),
        None => s.parse().ok(),
    };
    v.filter(|x: &f64| x.is_finite())
        .ok_or_else(|| bad(format!("bad number {s:?}")))
}

fn lattice(name: &str) -> Res<LatticeSpec> {
    Ok(LatticeSpec::from_name(name)?)
}

fn table_tolerance(lat: &LatticeSpec) -> f64 {
    match lat.kind {
        LatticeKind::Hexagonal => 1e-6,
        _ => 1e-3,
    }
}

// ---- output ----

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if !s.contains([',', '"', '\n']) => s.clone(),
        Value::String(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::Number(_) | Value::Bool(_) => v.to_string(),
        other => format!("\"{}\"", other.to_string().replace('"', "\"\"")),
    }
}

fn to_csv(v: &Value) -> String {
    let rows: Vec<&Map<String, Value>> = match v {
        Value::Array(a) => a.iter().filter_map(Value::as_object).collect(),
        Value::Object(o) => vec![o],
        other => return csv_cell(other) + "\n",
    };
    let Some(first) = rows.first() else {
        return String::new();
    };
    let keys: Vec<&String> = first.keys().collect();
    let mut s = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = keys
            .iter()
            .map(|k| r.get(*k).map(csv_cell).unwrap_or_default())
            .collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

// ---- commands ----

fn green(cli: &Cli, src: &Source, ground: Option<i64>, kernel: Option<&[i64]>) -> Res<Report> {
    if let Some(xy) = kernel {
        let name = src.lattice.as_deref().ok_or_else(|| bad("--kernel needs --lattice"))?;
        let lat = lattice(name)?;
        let tol = cli.tol.unwrap_or(DEFAULT_QUAD_TOL);
        let a = PotentialKernel::<f64>::with_tol(&lat, tol)?;
        let value = a.value(&Site::new(xy.to_vec()));
        return Ok(Report::json(json!({
            "lattice": lat.name(),
            "x": xy[0],
            "y": xy[1],
            "value": num(value),
            "quad_tol": num(tol),
        })));
    }
    let g = build_graph(src)?;
    if g.vertex_count() > EXACT_LIMIT {
        return Err(bad(format!("dense Green's function limited to {EXACT_LIMIT} vertices")));
    }
    let gf = match ground {
        Some(l) => green_grounded::<f64>(&g, g.vertex_by_label(l)?)?,
        None => green_auto::<f64>(&g)?,
    };
    let labels: Vec<i64> = (0..g.vertex_count()).map(|v| g.label(v)).collect();
    let full = gf.to_matrix();
    let matrix: Vec<Vec<Value>> = full
        .to_nested()
        .into_iter()
        .map(|r| r.into_iter().map(num).collect())
        .collect();
    let mode = match gf.mode() {
        ustlab::green::GreenMode::Dirichlet => json!("dirichlet"),
        ustlab::green::GreenMode::Grounded(r) => json!({ "grounded": g.label(r) }),
    };
    if cli.format == Some(Format::Csv) {
        let mut rows = Vec::new();
        for (i, &u) in labels.iter().enumerate() {
            for (j, &v) in labels.iter().enumerate() {
                rows.push(json!({ "u": u, "v": v, "g": num(full[(i, j)]) }));
            }
        }
        return Ok(Report::csv(Value::Array(rows)));
    }
    Ok(Report::json(
        json!({ "mode": mode, "vertices": labels, "matrix": matrix }),
    ))
}

fn edge_prob(cli: &Cli, src: &Source, present: &str, absent: &str) -> Res<Report> {
    let g = build_graph(src)?;
    let q = EdgeProbQuery::new(parse_edges(&g, present)?, parse_edges(&g, absent)?);
    let mut edges: Vec<DirectedEdge> = q.present.iter().chain(&q.absent).copied().collect();
    edges.sort_unstable_by_key(|e| e.undirected());
    edges.dedup();
    let gf = green_auto::<f64>(&g)?;
    let m = TransferMatrix::new(&g, gf, &edges)?;
    let p = edge_probability(&m, &q)?;
    let cross = inclusion_exclusion_probability(&m, &q, cli.max_enum)?;
    let tol = cli.tol.unwrap_or(1e-10);
    let gap = (p - cross).abs();
    Ok(Report::json(json!({
        "probability": num(p),
        "method": "det",
        "crosscheck": "incl-excl",
        "crosscheck_value": num(cross),
        "abs_gap": num(gap),
        "tolerance": num(tol),
    }))
    .check(gap <= tol))
}

fn degree(cli: &Cli, src: &Source, vertex: Option<i64>, joint: Option<&str>) -> Res<Report> {
    let complete = src.complete;
    if let Some(n) = complete.filter(|_| vertex.is_none() && joint.is_none()) {
        if n < 2 {
            return Err(bad("--complete needs n >= 2"));
        }
        // the exact column only when the star fits the enumeration budget
        let exact = if n - 1 <= cli.max_enum && n <= EXACT_LIMIT {
            let g = FiniteGraph::complete(n)?;
            let m = TransferMatrix::<f64>::for_graph(&g)?;
            Some(degree_pmf(&m, &g, 0, cli.max_enum)?)
        } else {
            None
        };
        let kmax = (n - 1).min(40);
        let rows = (1..=kmax)
            .map(|k| {
                let cf = kn_degree_closed_form::<f64>(n, k)?;
                let pl = poisson_limit::<f64>(k);
                Ok(json!({
                    "k": k,
                    "probability": exact.as_ref().map(|d| num(d.get(k))).unwrap_or(Value::Null),
                    "closed_form": num(cf),
                    "poisson": num(pl),
                    "poisson_gap": num((cf - pl).abs()),
                }))
            })
            .collect::<Res<Vec<_>>>()?;
        return Ok(Report::csv(Value::Array(rows)));
    }
    let g = build_graph(src)?;
    if g.vertex_count() > EXACT_LIMIT {
        return Err(bad(format!("exact transfer matrix limited to {EXACT_LIMIT} vertices")));
    }
    let m = TransferMatrix::<f64>::for_graph(&g)?;
    if let Some(j) = joint {
        let pts = parse_points(&g, j)?;
        let p = degree_pmf_joint(
            &m,
            &g,
            &DegreeQuery::new(pts.clone()),
            cli.max_enum.max(DEFAULT_MAX_ENUM_JOINT),
        )?;
        let labelled: Vec<Value> = pts
            .iter()
            .map(|&(v, k)| json!({ "vertex": g.label(v), "k": k }))
            .collect();
        return Ok(Report::json(json!({ "points": labelled, "probability": num(p) })));
    }
    let v = g.vertex_by_label(vertex.ok_or_else(|| bad("give --vertex, --joint or --complete"))?)?;
    let pmf = degree_pmf(&m, &g, v, cli.max_enum)?;
    let rows: Vec<Value> = (1..=pmf.probs.len())
        .map(|k| json!({ "k": k, "probability": num(pmf.get(k)) }))
        .collect();
    Ok(Report::csv(Value::Array(rows)))
}

fn cumulant(cli: &Cli, src: &Source, points: &str, oracle: bool, neighbor: Option<Side>) -> Res<Report> {
    let g = build_graph(src)?;
    if g.vertex_count() > EXACT_LIMIT {
        return Err(bad(format!("exact transfer matrix limited to {EXACT_LIMIT} vertices")));
    }
    let pts = parse_points(&g, points)?;
    let m = TransferMatrix::<f64>::for_graph(&g)?;
    let opts = CumulantOptions {
        max_perm: cli.max_perm,
        ..CumulantOptions::default()
    };
    if let Some(side) = neighbor {
        let [(v, kv), (w, kw)] = pts[..] else {
            return Err(bad("--neighbor takes exactly two points"));
        };
        let inside = side == Side::In;
        let value = neighbor_cumulant(&m, &g, v, w, kv, kw, inside, opts)?;
        let p = neighbor_probability(&m, &g, v, w, kv, kw, inside, opts)?;
        return Ok(Report::json(json!({
            "value": num(value),
            "edge_in_tree": inside,
            "probability": num(p),
        })));
    }
    let q = CumulantQuery::new(pts);
    let value = cumulant_direct(&m, &g, &q, opts)?;
    let mut out = json!({ "value": num(value) });
    let mut ok = true;
    if oracle {
        let o = cumulant_via_moments(&m, &g, &q)?;
        let tol = cli.tol.unwrap_or(1e-10);
        let gap = (value - o).abs();
        ok = gap <= tol;
        out["oracle_value"] = num(o);
        out["abs_gap"] = num(gap);
        out["tolerance"] = num(tol);
    }
    Ok(Report::json(out).check(ok))
}

fn constant_row(lat: &LatticeSpec, k: usize, tol: Option<f64>) -> Res<(Value, bool)> {
    let c = lattice_constant(lat, k)?;
    let table = reference_constant(lat, k);
    let tol = tol.unwrap_or_else(|| table_tolerance(lat));
    let gap = table.map(|t| (c.value - t).abs());
    let pass = gap.map(|g| g <= tol);
    let row = json!({
        "lattice": c.lattice,
        "k": k,
        "value": num(c.value),
        "table_value": table.map(num),
        "gap": gap.map(num),
        "tolerance": num(tol),
        "pass": pass,
    });
    Ok((row, pass.unwrap_or(true)))
}

fn constant(cli: &Cli, name: &str, k: Option<usize>) -> Res<Report> {
    let lat = lattice(name)?;
    let deg = lat.star_vectors(0).len();
    match k {
        Some(k) => {
            if k == 0 || k > deg {
                return Err(bad(format!("k must lie in 1..={deg}")));
            }
            Ok(Report::json(constant_row(&lat, k, cli.tol)?.0))
        }
        None => {
            let rows = (1..=deg)
                .map(|k| Ok(constant_row(&lat, k, cli.tol)?.0))
                .collect::<Res<Vec<_>>>()?;
            Ok(Report::json(Value::Array(rows)))
        }
    }
}

fn converge(cli: &Cli, name: &str, points: &str, k: &str, eps: &str) -> Res<Report> {
    let lat = lattice(name)?;
    let pts = points
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (x, y) = t
                .split_once(',')
                .ok_or_else(|| bad(format!("point {t:?} is not x,y")))?;
            Ok([parse_num(x)?, parse_num(y)?])
        })
        .collect::<Res<Vec<_>>>()?;
    let ks = k
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("bad degree {t:?}"))))
        .collect::<Res<Vec<_>>>()?;
    if ks.len() != pts.len() {
        return Err(bad("--k needs one degree per point"));
    }
    let ladder = eps.split(',').map(parse_num).collect::<Res<Vec<_>>>()?;
    let opts = CumulantOptions {
        max_perm: cli.max_perm,
        ..CumulantOptions::default()
    };
    let rep = convergence_study(&ContinuumDomain::unit_disk(), &pts, &ks, &lat, &ladder, opts)?;
    if cli.format == Some(Format::Json) {
        let mut v = serde_json::to_value(&rep).expect("json");
        v["gaps_decreasing"] = json!(rep.gaps_decreasing());
        return Ok(Report::json(v));
    }
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "eps": num(r.eps),
                "sites": r.sites,
                "kappa": num(r.kappa),
                "rescaled": num(r.rescaled),
                "target": num(rep.target),
                "gap": num(r.gap),
            })
        })
        .collect();
    Ok(Report::csv(Value::Array(rows)))
}

fn sample(cli: &Cli, src: &Source, samples: usize, present: &str, absent: &str, degree: Option<&str>) -> Res<Report> {
    let g = build_graph(src)?;
    let small = g.vertex_count() <= EXACT_LIMIT;
    let (q, exact) = match degree {
        Some(d) => {
            if !present.is_empty() || !absent.is_empty() {
                return Err(bad("--degree excludes --in/--absent"));
            }
            let pts = parse_points(&g, d)?;
            let exact = if small {
                let m = TransferMatrix::<f64>::for_graph(&g)?;
                degree_pmf_joint(
                    &m,
                    &g,
                    &DegreeQuery::new(pts.clone()),
                    cli.max_enum.max(DEFAULT_MAX_ENUM_JOINT),
                )
                .ok()
            } else {
                None
            };
            (McQuery::Degrees(pts), exact)
        }
        None => {
            let q = EdgeProbQuery::new(parse_edges(&g, present)?, parse_edges(&g, absent)?);
            let exact = if small {
                let mut edges: Vec<DirectedEdge> = q.present.iter().chain(&q.absent).copied().collect();
                edges.sort_unstable_by_key(|e| e.undirected());
                edges.dedup();
                let m = TransferMatrix::new(&g, green_auto::<f64>(&g)?, &edges)?;
                Some(edge_probability(&m, &q)?)
            } else {
                None
            };
            (McQuery::Edges(q), exact)
        }
    };
    let s = mc_estimate(&g, &q, samples, cli.seed)?;
    Ok(Report::json(json!({
        "samples": s.samples,
        "hits": s.hits,
        "estimate": num(s.estimate),
        "se": num(s.se),
        "seed": cli.seed,
        "exact": exact.map(num),
        "sigmas": exact.map(|e| num(s.sigmas(e))),
    })))
}

fn wick(cli: &Cli, m: usize, trials: usize) -> Res<Report> {
    let a = wick_audit(m, trials, cli.seed)?;
    let tol = cli.tol.unwrap_or(1e-12);
    let pass = a.max_dev() <= tol;
    Ok(Report::json(json!({
        "m": a.m,
        "trials": a.trials,
        "seed": cli.seed,
        "max_dev_minor": num(a.max_dev_minor),
        "max_dev_bilinear": num(a.max_dev_bilinear),
        "max_dev": num(a.max_dev()),
        "tolerance": num(tol),
        "pass": pass,
    }))
    .check(pass))
}

fn parse_stars(s: &str) -> Res<Vec<usize>> {
    let sizes: Vec<usize> = match s.split_once(['x', 'X']) {
        Some((n, size)) => {
            let n: usize = n.trim().parse().map_err(|_| bad(format!("bad star spec {s:?}")))?;
            let size: usize = size.trim().parse().map_err(|_| bad(format!("bad star spec {s:?}")))?;
            vec![size; n]
        }
        None => s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| bad(format!("bad star spec {s:?}"))))
            .collect::<Res<_>>()?,
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad("star sizes must be positive"));
    }
    Ok(sizes)
}

fn perm_audit(cli: &Cli, stars: &str, check: AuditKind) -> Res<Report> {
    let sizes = parse_stars(stars)?;
    let set = StarSet::uniform(&sizes)?;
    let p = sizes.iter().copied().max().unwrap_or(0);
    // distinct irrational entries, so any mismatched factor shows up
    let kernel: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| ((7 * i + 3 * j + 2) as f64).sqrt()).collect())
        .collect();
    let mut reports: Vec<AuditReport> = Vec::new();
    if matches!(check, AuditKind::Surgery | AuditKind::All) {
        reports.push(audit_surgery(&set, &kernel, cli.max_perm)?);
    }
    if matches!(check, AuditKind::Bijection | AuditKind::All) {
        reports.push(audit_bijection(&set)?);
    }
    let pass = reports.iter().all(AuditReport::passed);
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "check": r.check,
                "stars": sizes,
                "cases": r.cases,
                "failures": r.failures,
                "pass": r.passed(),
            })
        })
        .collect();
    Ok(Report::json(Value::Array(rows)).check(pass))
}

fn reproduce_table(cli: &Cli) -> Res<Report> {
    let mut rows = Vec::new();
    let mut all = true;
    for (name, kmax) in [("Z2", 4), ("tri", 6), ("hex", 3)] {
        let lat = lattice(name)?;
        for k in 1..=kmax {
            let (row, pass) = constant_row(&lat, k, cli.tol)?;
            all &= pass;
            rows.push(row);
        }
    }
    Ok(Report::json(Value::Array(rows)).check(all))
}
