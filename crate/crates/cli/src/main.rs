use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use iup_core::catalog::{
    continue_problem2, empirical_delta, make_m1_m2, make_ma, make_p4, m1_m2_bundle, BundleJson, CatalogBundle,
    DeltaFeasibility, Family,
};
use iup_core::conditioning::ConditioningProblem;
use iup_core::maps::{build_g_map, AtomJson, ClusterDistribution};
use iup_core::orbit::{cluster, extract_problem, simulate, ExtractOptions, Orbit, BOUNDARY_TOL, MIN_HITS, PLATEAU_FACTOR};
use iup_core::partition::{canonical_alpha, enumerate_atoms};
use iup_core::rational::{format_rational, parse_rational, to_f64, Ext, Rational};
use iup_core::symmetry::Symmetry;
use iup_core::Error;

const EXIT_FAIL: u8 = 2;
const EXIT_ERROR: u8 = 1;
const EXIT_NO_STRUCTURE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "iup", version, about = "Invariant unions of polytopes for coupled expanding maps")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Directory for run manifests (default: next to each output file).
    #[arg(long, global = true)]
    manifest_dir: Option<PathBuf>,
    /// Machine-readable summary on stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Cmd {
    /// Enumerate the atoms of the contiguous-sum partition.
    Partition {
        #[arg(long, conflicts_with = "rho")]
        dim: Option<usize>,
        /// Cluster distribution; its length minus one is the dimension.
        #[arg(long)]
        rho: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the coupled map in floating point and dump the orbit.
    Simulate {
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "43/100")]
        eps: String,
        /// "random:<u64>" or comma-separated coordinates.
        #[arg(long, default_value = "random:0")]
        seed: String,
        #[arg(long, default_value_t = 4000)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        transient: usize,
        #[arg(long, default_value_t = BOUNDARY_TOL)]
        boundary_tol: f64,
        #[arg(long, default_value = "orbit.csv")]
        out: PathBuf,
    },
    /// Extract a conditioning problem from an orbit dump.
    Extract {
        #[arg(long)]
        orbit: PathBuf,
        #[arg(long)]
        rho: Option<String>,
        #[arg(long, default_value = "43/100")]
        eps: String,
        /// atoms.json from `partition`; orbit labels are checked against it.
        #[arg(long)]
        atoms: Option<PathBuf>,
        /// Comma-separated symmetry names used to fold clusters.
        #[arg(long, default_value = "")]
        symmetries: String,
        /// Semicolon-separated points choosing representative clusters.
        #[arg(long)]
        anchors: Option<String>,
        #[arg(long, default_value_t = PLATEAU_FACTOR)]
        plateau_factor: f64,
        #[arg(long, default_value_t = MIN_HITS)]
        min_hits: usize,
        #[arg(long, default_value = "problem.json")]
        out: PathBuf,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Verify candidates against a conditioning problem in exact arithmetic.
    Verify {
        #[arg(long)]
        candidate_bundle: PathBuf,
        /// Defaults to the bundle's own problem.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bracket the ε threshold of a candidate family by bisection.
    Threshold {
        #[arg(long, value_parser = ["ma", "m1m2", "p4", "cont2"])]
        family: String,
        /// JSON object of family parameters, e.g. {"rho":"1/3","a":"2"}.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        lo: Option<String>,
        #[arg(long)]
        hi: Option<String>,
        #[arg(long, default_value = "1/1000000")]
        tol: String,
        /// Extra evenly spaced sweep points between lo and hi.
        #[arg(long, default_value_t = 0)]
        grid: usize,
        /// Sweep CSV (parameter vs pass and minimal margin).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a catalog candidate bundle.
    Catalog {
        #[arg(long, value_parser = ["ma", "m1m2", "p4", "cont2"])]
        which: String,
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a Cmd,
    argv: Vec<String>,
    jobs: usize,
    inputs: Vec<String>,
    outputs: Vec<String>,
    version: &'static str,
    wall_time_s: f64,
    exit_code: u8,
}

/// What a subcommand produced.
struct Outcome {
    exit: u8,
    text: String,
    summary: Map<String, Value>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Outcome {
    fn new(text: impl Into<String>) -> Self {
        Outcome { exit: 0, text: text.into(), summary: Map::new(), inputs: vec![], outputs: vec![] }
    }

    fn field(mut self, k: &str, v: impl Into<Value>) -> Self {
        self.summary.insert(k.into(), v.into());
        self
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(out) => {
            print_summary(&cli, &out);
            if let Err(e) = write_manifests(&cli, &out, start.elapsed().as_secs_f64()) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_ERROR);
            }
            ExitCode::from(out.exit)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let structural = e.downcast_ref::<Error>().is_some_and(|e| {
                matches!(e, Error::NoPlateau | Error::AmbiguousTransition { .. } | Error::UnassignedImage { .. })
            });
            ExitCode::from(if structural { EXIT_NO_STRUCTURE } else { EXIT_ERROR })
        }
    }
}

fn print_summary(cli: &Cli, out: &Outcome) {
    match cli.format {
        None => println!("{}", out.text),
        Some(Format::Json) => println!("{}", Value::Object(out.summary.clone())),
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let keys: Vec<&String> = out.summary.keys().collect();
            let vals: Vec<String> = out
                .summary
                .values()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            let _ = w.write_record(&keys);
            let _ = w.write_record(&vals);
            let _ = w.flush();
        }
    }
}

fn write_manifests(cli: &Cli, out: &Outcome, wall: f64) -> anyhow::Result<()> {
    let m = RunManifest {
        subcommand: &cli.cmd,
        argv: std::env::args().collect(),
        jobs: cli.jobs,
        inputs: out.inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: out.outputs.iter().map(|p| p.display().to_string()).collect(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: wall,
        exit_code: out.exit,
    };
    let body = serde_json::to_string_pretty(&m)?;
    for o in &out.outputs {
        let name = format!("{}.manifest.json", o.file_name().and_then(|s| s.to_str()).unwrap_or("output"));
        let path = match &cli.manifest_dir {
            Some(d) => {
                fs::create_dir_all(d)?;
                d.join(name)
            }
            None => o.with_file_name(name),
        };
        fs::write(&path, &body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.cmd {
        Cmd::Partition { dim, rho, out } => cmd_partition(*dim, rho.as_deref(), out.as_deref()),
        Cmd::Simulate { rho, dim, eps, seed, steps, transient, boundary_tol, out } => {
            cmd_simulate(rho.as_deref(), *dim, eps, seed, *steps, *transient, *boundary_tol, out)
        }
        Cmd::Extract { orbit, rho, eps, atoms, symmetries, anchors, plateau_factor, min_hits, out, report } => cmd_extract(
            orbit,
            rho.as_deref(),
            eps,
            atoms.as_deref(),
            symmetries,
            anchors.as_deref(),
            *plateau_factor,
            *min_hits,
            out,
            report,
        ),
        Cmd::Verify { candidate_bundle, problem, report } => cmd_verify(candidate_bundle, problem.as_deref(), report.as_deref()),
        Cmd::Threshold { family, params, lo, hi, tol, grid, out } => {
            cmd_threshold(cli.jobs, family, params, lo.as_deref(), hi.as_deref(), tol, *grid, out.as_deref())
        }
        Cmd::Catalog { which, params, out } => cmd_catalog(which, params, out.as_deref()),
    }
}

fn rational_list(s: &str) -> anyhow::Result<Vec<Rational>> {
    s.split(',').map(|t| parse_rational(t).map_err(anyhow::Error::from)).collect()
}

fn distribution(rho: Option<&str>, dim: usize) -> anyhow::Result<ClusterDistribution> {
    match rho {
        Some(r) => Ok(ClusterDistribution::new(rational_list(r)?)?),
        None => {
            if dim == 0 {
                bail!("dimension must be at least 1");
            }
            Ok(ClusterDistribution::uniform(dim + 1))
        }
    }
}

fn write_json(path: &Path, v: &impl Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(v)?).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let s = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_partition(dim: Option<usize>, rho: Option<&str>, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let d = match (dim, rho) {
        (Some(d), _) => d,
        (None, Some(r)) => distribution(Some(r), 0)?.d(),
        (None, None) => bail!("give --dim or --rho"),
    };
    if d == 0 || d > 4 {
        bail!("dimension must be between 1 and 4");
    }
    let atoms = enumerate_atoms(d);
    let mut o = Outcome::new(format!("{} atoms", atoms.len())).field("dim", d).field("atoms", atoms.len());
    if let Some(p) = out {
        let list: Vec<AtomJson> = atoms
            .iter()
            .map(|a| AtomJson { label: a.label.clone(), bounds: a.matrix.to_json(), offset: None })
            .collect();
        write_json(p, &json!({ "d": d, "alpha": canonical_alpha(d).to_json(), "atoms": list }))?;
        o.outputs.push(p.to_path_buf());
    }
    Ok(o)
}

fn parse_seed(seed: &str, d: usize) -> anyhow::Result<Vec<f64>> {
    if let Some(n) = seed.strip_prefix("random:") {
        let n: u64 = n.trim().parse().context("seed after random: must be a u64")?;
        let mut rng = ChaCha8Rng::seed_from_u64(n);
        return Ok((0..d).map(|_| rng.gen_range(1e-6..1.0 - 1e-6)).collect());
    }
    let x: Vec<f64> = rational_list(seed)?.iter().map(to_f64).collect();
    if x.len() != d {
        bail!("seed has {} coordinates, map dimension is {d}", x.len());
    }
    Ok(x)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    rho: Option<&str>,
    dim: usize,
    eps: &str,
    seed: &str,
    steps: usize,
    transient: usize,
    boundary_tol: f64,
    out: &Path,
) -> anyhow::Result<Outcome> {
    if steps == 0 {
        bail!("--steps must be at least 1");
    }
    let rho = distribution(rho, dim)?;
    let eps = parse_rational(eps)?;
    let map = build_g_map(&rho, &eps, &canonical_alpha(rho.d()))?;
    let x0 = parse_seed(seed, rho.d())?;
    let orbit = simulate(&map, &x0, steps, transient, boundary_tol)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    orbit.write_csv(fs::File::create(out).with_context(|| format!("creating {}", out.display()))?)?;
    let mut o = Outcome::new(format!("{} points ({} dropped near boundaries)", orbit.points.len(), orbit.dropped))
        .field("points", orbit.points.len())
        .field("dropped", orbit.dropped);
    o.outputs.push(out.to_path_buf());
    Ok(o)
}

fn read_orbit(path: &Path) -> anyhow::Result<Orbit> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let head = rd.headers()?.clone();
    let d = head.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| anyhow!("orbit CSV needs x columns and an atom column"))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let p = (0..d).map(|i| rec[i].trim().parse::<f64>()).collect::<Result<Vec<_>, _>>()?;
        points.push(p);
        labels.push(rec[d].trim().to_string());
    }
    if points.is_empty() {
        bail!("orbit CSV has no points");
    }
    Ok(Orbit { d, seed: vec![], transient: 0, steps: points.len(), points, labels, dropped: 0 })
}

fn parse_points(s: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    s.split(';').map(|p| Ok(rational_list(p)?.iter().map(to_f64).collect())).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_extract(
    orbit_path: &Path,
    rho: Option<&str>,
    eps: &str,
    atoms: Option<&Path>,
    symmetries: &str,
    anchors: Option<&str>,
    plateau_factor: f64,
    min_hits: usize,
    out: &Path,
    report: &Path,
) -> anyhow::Result<Outcome> {
    let orbit = read_orbit(orbit_path)?;
    let rho = distribution(rho, orbit.d)?;
    if rho.d() != orbit.d {
        bail!("orbit dimension {} does not match the distribution", orbit.d);
    }
    let map = build_g_map(&rho, &parse_rational(eps)?, &canonical_alpha(orbit.d))?;
    let mut inputs = vec![orbit_path.to_path_buf()];
    if let Some(a) = atoms {
        let v: Value = read_json(a)?;
        let known: Vec<&str> = v["atoms"].as_array().into_iter().flatten().filter_map(|x| x["label"].as_str()).collect();
        if let Some(bad) = orbit.labels.iter().find(|l| !known.contains(&l.as_str())) {
            bail!("orbit label {bad} is not in {}", a.display());
        }
        inputs.push(a.to_path_buf());
    }
    let syms = symmetries
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Symmetry::lookup(s, &[], orbit.d))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = ExtractOptions { min_hits, anchors: anchors.map(parse_points).transpose()?.unwrap_or_default() };
    let clusters = cluster(&orbit, plateau_factor)?;
    let (problem, rep) = extract_problem(&orbit, clusters, &map, &syms, &opts)?;
    write_json(out, &problem.to_json_value())?;
    write_json(report, &rep)?;
    let mut o = Outcome::new(format!(
        "{} clusters, {} after folding; localisation {:?}",
        rep.clusters.q,
        problem.q,
        problem.localisation
    ))
    .field("clusters", rep.clusters.q)
    .field("q", problem.q);
    o.inputs = inputs;
    o.outputs = vec![out.to_path_buf(), report.to_path_buf()];
    Ok(o)
}

fn cmd_verify(bundle_path: &Path, problem: Option<&Path>, report: Option<&Path>) -> anyhow::Result<Outcome> {
    let bundle = CatalogBundle::from_json(&read_json::<BundleJson>(bundle_path)?)?;
    let mut inputs = vec![bundle_path.to_path_buf()];
    let problem = match problem {
        Some(p) => {
            inputs.push(p.to_path_buf());
            ConditioningProblem::from_json_value(&read_json(p)?)?
        }
        None => bundle.problem.clone(),
    };
    let rep = bundle.verify_against(&problem)?;
    let asiup = bundle.asiup()?;
    let margin = rep.min_margin();
    let mut text = format!("{} (min margin {})", if rep.pass { "PASS" } else { "FAIL" }, margin);
    for v in rep.failures() {
        text.push_str(&format!(
            "\n  {} k={} atom={} {}",
            v.condition,
            v.k,
            v.atom.as_deref().unwrap_or("-"),
            v.detail.as_deref().unwrap_or("")
        ));
    }
    let mut o = Outcome::new(text)
        .field("pass", rep.pass)
        .field("min_margin", margin.to_string())
        .field("asiup", asiup.pass);
    o.exit = if rep.pass { 0 } else { EXIT_FAIL };
    o.inputs = inputs;
    if let Some(r) = report {
        write_json(r, &json!({ "verification": rep, "asiup": asiup }))?;
        o.outputs.push(r.to_path_buf());
    }
    Ok(o)
}

fn param(p: &Value, key: &str) -> anyhow::Result<Option<Rational>> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(parse_rational(s)?)),
        Some(Value::Number(n)) => Ok(Some(parse_rational(&n.to_string())?)),
        Some(other) => bail!("parameter {key} must be a string or number, got {other}"),
    }
}

fn need(p: &Value, key: &str, default: Option<&str>) -> anyhow::Result<Rational> {
    match (param(p, key)?, default) {
        (Some(v), _) => Ok(v),
        (None, Some(d)) => Ok(parse_rational(d)?),
        (None, None) => bail!("missing parameter {key}"),
    }
}

fn delta_param(p: &Value) -> anyhow::Result<Option<[Rational; 5]>> {
    let Some(v) = p.get("delta") else { return Ok(None) };
    let arr = v.as_array().ok_or_else(|| anyhow!("delta must be a list of five values"))?;
    if arr.len() != 5 {
        bail!("delta must have five entries");
    }
    let vals = arr
        .iter()
        .map(|x| match x {
            Value::String(s) => parse_rational(s).map_err(anyhow::Error::from),
            Value::Number(n) => parse_rational(&n.to_string()).map_err(anyhow::Error::from),
            _ => bail!("delta entries must be strings or numbers"),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Some(std::array::from_fn(|i| vals[i].clone())))
}

fn family_of(name: &str, p: &Value) -> anyhow::Result<Family> {
    Ok(match name {
        "ma" => Family::Ma { varrho: need(p, "rho", Some("1/3"))?, a: need(p, "a", Some("2"))? },
        "m1m2" => Family::M1m2,
        "p4" => Family::P4,
        other => bail!("unknown family {other}"),
    })
}

#[derive(Serialize)]
struct SweepRow {
    source: &'static str,
    parameter: String,
    parameter_f64: f64,
    pass: bool,
    min_margin: String,
}

#[allow(clippy::too_many_arguments)]
fn cmd_threshold(
    jobs: usize,
    family: &str,
    params: &str,
    lo: Option<&str>,
    hi: Option<&str>,
    tol: &str,
    grid: usize,
    out: Option<&Path>,
) -> anyhow::Result<Outcome> {
    let p: Value = serde_json::from_str(params).context("--params must be a JSON object")?;
    let tol = parse_rational(tol)?;
    let rows = Mutex::new(Vec::new());
    let record = |source: &'static str, x: &Rational, pass: bool, margin: Ext| {
        rows.lock().unwrap().push(SweepRow {
            source,
            parameter: format_rational(x),
            parameter_f64: to_f64(x),
            pass,
            min_margin: margin.to_string(),
        });
    };
    let (lo, hi, bracket, evaluate): (Rational, Rational, _, Box<dyn Fn(&Rational) -> iup_core::Result<(bool, Ext)> + Sync>) =
        if family == "cont2" {
            let (v, a, e) = (need(&p, "rho", Some("1/3"))?, need(&p, "a", Some("3/2"))?, need(&p, "eps", Some("45/100"))?);
            let negative = p.get("negative").and_then(Value::as_bool).unwrap_or(false);
            let b = empirical_delta(&v, &a, &e, negative, &tol)?;
            let eval = move |d: &Rational| -> iup_core::Result<(bool, Ext)> {
                let d = if negative { -d.clone() } else { d.clone() };
                let r = continue_problem2(&v, &a, &e, &d)?.verify()?;
                Ok((r.pass, r.min_margin()))
            };
            (b.lo.clone(), b.hi.clone(), b, Box::new(eval))
        } else {
            let fam = family_of(family, &p)?;
            let (dlo, dhi) = fam.default_bracket();
            let lo = lo.map(parse_rational).transpose()?.unwrap_or(dlo);
            let hi = hi.map(parse_rational).transpose()?.unwrap_or(dhi);
            let fam2 = fam.clone();
            let b = iup_core::conditioning::bisect_threshold(
                |e| {
                    let (pass, m) = fam.evaluate(e)?;
                    record("bisect", e, pass, m);
                    Ok(pass)
                },
                &lo,
                &hi,
                &tol,
            )?;
            (lo, hi, b, Box::new(move |e: &Rational| fam2.evaluate(e)))
        };
    if grid > 0 {
        let pts: Vec<Rational> = (0..=grid)
            .map(|i| &lo + (&hi - &lo) * Rational::new(i.into(), grid.into()))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
        let res: Vec<iup_core::Result<(bool, Ext)>> = pool.install(|| pts.par_iter().map(|x| evaluate(x)).collect());
        for (x, r) in pts.iter().zip(res) {
            let (pass, m) = r?;
            record("grid", x, pass, m);
        }
    }
    let mut o = Outcome::new(format!(
        "[{}, {}]  ≈ [{:.9}, {:.9}]  ({} evaluations)",
        format_rational(&bracket.lo),
        format_rational(&bracket.hi),
        to_f64(&bracket.lo),
        to_f64(&bracket.hi),
        bracket.evaluations
    ))
    .field("lo", format_rational(&bracket.lo))
    .field("hi", format_rational(&bracket.hi))
    .field("lo_f64", to_f64(&bracket.lo))
    .field("hi_f64", to_f64(&bracket.hi));
    if let Some(path) = out {
        let mut rows = rows.into_inner().unwrap();
        rows.sort_by(|a, b| a.parameter_f64.partial_cmp(&b.parameter_f64).unwrap());
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        o.outputs.push(path.to_path_buf());
    }
    Ok(o)
}

fn cmd_catalog(which: &str, params: &str, out: Option<&Path>) -> anyhow::Result<Outcome> {
    let p: Value = serde_json::from_str(params).context("--params must be a JSON object")?;
    let bundle = match which {
        "ma" => make_ma(&need(&p, "rho", Some("1/3"))?, &need(&p, "a", Some("2"))?, &need(&p, "eps", Some("43/100"))?)?,
        "m1m2" => {
            let eps = need(&p, "eps", Some("2/5"))?;
            let delta = delta_param(&p)?.unwrap_or_else(|| std::array::from_fn(|_| Rational::from_integer(0.into())));
            if p.get("check").and_then(Value::as_bool).unwrap_or(true) {
                make_m1_m2(&DeltaFeasibility::new(&eps, delta)?)?
            } else {
                m1_m2_bundle(&eps, &delta)?
            }
        }
        "p4" => make_p4(&need(&p, "eps", Some("44/100"))?)?,
        "cont2" => continue_problem2(
            &need(&p, "rho", Some("1/3"))?,
            &need(&p, "a", Some("3/2"))?,
            &need(&p, "eps", Some("45/100"))?,
            &need(&p, "delta", Some("0"))?,
        )?,
        other => bail!("unknown catalog entry {other}"),
    };
    let j = bundle.to_json();
    let mut o = Outcome::new(String::new())
        .field("name", bundle.name.clone())
        .field("candidates", bundle.candidates.len());
    match out {
        Some(path) => {
            write_json(path, &j)?;
            o.text = format!("{} candidates written to {}", bundle.candidates.len(), path.display());
            o.outputs.push(path.to_path_buf());
        }
        None => o.text = serde_json::to_string_pretty(&j)?,
    }
    Ok(o)
}
