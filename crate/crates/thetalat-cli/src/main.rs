mod output;

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use thetalat::asymptotics;
use thetalat::corpus::{self, CorpusSpec};
use thetalat::enumeration::{self, EnumerationConfig};
use thetalat::lattice::{Lattice, OrthogonalLattice};
use thetalat::matrix::IntMatrix;
use thetalat::thermo::{self, DiscreteMeasure, ThermoProfile};
use thetalat::theta::{self, ThetaOptions};
use thetalat::{reduction, AuditVerdict, Error};

use output::{emit, emit_lines, Format};

#[derive(Parser)]
#[command(name = "thetalat", version, about = "Lattice invariants, theta series and lattice thermodynamics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Target accuracy for series evaluations.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Maximum number of lattice points an enumeration may accept.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for tables (JSON by default).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl Global {
    fn config(&self) -> EnumerationConfig {
        let mut c = EnumerationConfig::default();
        if let Some(b) = self.budget {
            c.cap = b;
        }
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Covolume, degree, slope, successive minima, covering radius and theta invariants.
    Invariants {
        #[arg(long)]
        lattice: PathBuf,
    },
    /// Korkin–Zolotarev reduced basis with its product bound.
    Reduce {
        #[arg(long)]
        lattice: PathBuf,
    },
    /// θ(t), optionally centered at a point given in basis coordinates.
    Theta {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Option<Vec<f64>>,
        /// Never switch to the dual series.
        #[arg(long)]
        no_poisson: bool,
    },
    /// S(E) with the dual β; `--beta` instead tabulates Ψ, U and Ψ″.
    Entropy {
        #[command(flatten)]
        source: Source,
        #[arg(long = "E", value_delimiter = ',')]
        e: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
    },
    /// Exact log Aₙ(E) by convolution.
    An {
        #[command(flatten)]
        source: Source,
        #[arg(long = "E")]
        e: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Poincaré or Darwin–Fowler estimate of log Aₙ(E), or the contour integral.
    Asymptotic {
        #[command(flatten)]
        source: Source,
        #[arg(long = "E")]
        e: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "df")]
        variant: VariantArg,
        /// Arithmetic unit; detected from the measure when omitted.
        #[arg(long)]
        eta: Option<f64>,
        /// Quadrature nodes to start the contour integral with.
        #[arg(long, default_value_t = 200)]
        quad_points: usize,
        /// Also report the exact value and the ratio.
        #[arg(long)]
        exact: bool,
    },
    /// Run an inequality suite over lattice files, a corpus directory or a fresh corpus.
    Audit {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        lattice: Vec<PathBuf>,
        /// Fresh corpus parameters, used when no files are given.
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        bound: i64,
        /// Energy for the thermo-bounds suite.
        #[arg(long = "E", default_value_t = PI)]
        e: f64,
        #[arg(long, default_value_t = 32)]
        n_max: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
    },
    /// Write seeded random integral lattices to a directory.
    Corpus {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 3)]
        bound: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// (1/n)log Aₙ(E) against S(E) along a list of n (CSV by default).
    Converge {
        #[command(flatten)]
        source: Source,
        #[arg(long = "E")]
        e: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Poincare,
    Df,
    Contour,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Transference,
    Comparison,
    Structure,
    ThermoBounds,
    Reduction,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Builtin {
    Oscillator,
    Geometric,
    Gaussian,
    FlatTorus,
    Lattice,
}

#[derive(Args, Clone)]
struct Source {
    /// Measure JSON file.
    #[arg(long, conflicts_with = "builtin")]
    measure: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<Builtin>,
    #[arg(long, default_value_t = 1.0)]
    planck: f64,
    #[arg(long, default_value_t = 1.0)]
    freq: f64,
    /// Number of ladder levels for the oscillator and geometric measures.
    #[arg(long, default_value_t = 4000)]
    cutoff: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Lattice file for the lattice and flat-torus builtins.
    #[arg(long = "lattice")]
    lattice: Option<PathBuf>,
    /// Smallest β the lattice measure must cover.
    #[arg(long)]
    beta_min: Option<f64>,
}

enum Loaded {
    Atoms(DiscreteMeasure),
    Continuous(ThermoProfile),
}

impl Loaded {
    fn profile(&self) -> ThermoProfile {
        match self {
            Loaded::Atoms(m) => thermo::profile(m),
            Loaded::Continuous(p) => p.clone(),
        }
    }

    fn atoms(self) -> Result<DiscreteMeasure> {
        match self {
            Loaded::Atoms(m) => Ok(m),
            Loaded::Continuous(_) => bail!("this command needs an atomic measure"),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Lattice JSON, or `{"degrees": [...]}` for an orthogonal lattice.
fn load_lattice(path: &Path) -> Result<Lattice> {
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if v.get("degrees").is_some() {
        let o: OrthogonalLattice = serde_json::from_value(v)?;
        return Ok(OrthogonalLattice::new(o.degrees().to_vec())?.to_lattice());
    }
    Ok(Lattice::from_json_str(&text)?)
}

impl Source {
    /// `e_max` is the largest energy the command will ask about; `complete` the energy up to
    /// which lattice atoms must be listed.
    fn load(&self, g: &Global, e_max: f64, complete: f64) -> Result<Loaded> {
        if let Some(path) = &self.measure {
            return Ok(Loaded::Atoms(DiscreteMeasure::from_json_str(&read(path)?)?));
        }
        let lattice = || -> Result<Lattice> {
            load_lattice(self.lattice.as_deref().ok_or_else(|| anyhow!("--lattice is required for this builtin"))?)
        };
        Ok(match self.builtin.ok_or_else(|| anyhow!("give --measure or --builtin"))? {
            Builtin::Oscillator => Loaded::Atoms(thermo::builtin_oscillator(self.planck, self.freq, self.cutoff)?),
            Builtin::Geometric => Loaded::Atoms(thermo::builtin_geometric(self.cutoff)?),
            Builtin::Gaussian => Loaded::Continuous(thermo::builtin_gaussian(self.dim, self.mass)?),
            Builtin::FlatTorus => Loaded::Continuous(thermo::builtin_flat_torus(&lattice()?, self.mass)?),
            Builtin::Lattice => {
                let l = lattice()?;
                let m = match self.beta_min {
                    Some(b) => thermo::from_lattice_with(&l, b, complete, g.config())?,
                    None => thermo::lattice_measure_for(&l, e_max, complete, g.config())?.0,
                };
                Loaded::Atoms(m)
            }
        })
    }

    /// Runs `f`, relisting lattice atoms further out when the measure was cut too early.
    fn with_atoms<T>(&self, g: &Global, e: f64, f: impl Fn(&DiscreteMeasure) -> thetalat::Result<T>) -> Result<T> {
        let mut complete = 0.0;
        loop {
            let m = self.load(g, e, complete)?.atoms()?;
            match f(&m) {
                Err(Error::TruncatedMeasure { needed, .. }) if self.builtin == Some(Builtin::Lattice) && needed > complete => {
                    info!("listing lattice atoms up to energy {needed}");
                    complete = needed;
                }
                Err(Error::TruncatedMeasure { complete, needed }) => {
                    bail!("measure listed only up to energy {complete}, {needed} needed (raise --cutoff)")
                }
                other => return Ok(other?),
            }
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn invariants(g: &Global, path: &Path) -> Result<Vec<Value>> {
    let l = load_lattice(path)?;
    let cfg = g.config();
    let minima = enumeration::successive_minima_with(&l, cfg)?;
    let dual_minima = enumeration::successive_minima_with(&l.dual(), cfg)?;
    let cov = enumeration::covering_radius_bounds(&l)?;
    let opts = ThetaOptions { tol: g.tol, allow_poisson: true, config: cfg };
    let h0 = theta::theta_with(&l, 1.0, None, &opts)?;
    let h1 = theta::theta_with(&l.dual(), 1.0, None, &opts)?;
    let h0_ar = enumeration::h0_ar_f64(&l, 1.0, cfg)?;
    Ok(vec![json!({
        "rank": l.rank(),
        "covolume": l.covolume(),
        "log_covolume": l.log_covolume(),
        "degree": l.degree(),
        "slope": l.slope(),
        "minima": minima.iter().map(|m| m.value).collect::<Vec<_>>(),
        "minima_witnesses": minima.iter().map(|m| m.witness.clone()).collect::<Vec<_>>(),
        "dual_minima": dual_minima.iter().map(|m| m.value).collect::<Vec<_>>(),
        "covering_radius": to_value(&cov),
        "h0_ar": h0_ar,
        "h0_theta": h0.log_value,
        "h1_theta": h1.log_value,
        "theta_error_bound": h0.truncation_error_bound + h1.truncation_error_bound,
    })])
}

fn theta_cmd(g: &Global, path: &Path, ts: &[f64], center: Option<&[f64]>, no_poisson: bool) -> Result<Vec<Value>> {
    let l = load_lattice(path)?;
    if let Some(c) = center {
        if c.len() != l.rank() {
            bail!("center has {} coordinates, lattice rank is {}", c.len(), l.rank());
        }
    }
    let opts = ThetaOptions { tol: g.tol, allow_poisson: !no_poisson, config: g.config() };
    ts.iter()
        .map(|&t| {
            let v = theta::theta_with(&l, t, center, &opts)?;
            Ok(json!({
                "t": v.t,
                "value": v.value,
                "log_value": v.log_value,
                "tail_bound": v.truncation_error_bound,
                "used_poisson": v.used_poisson,
            }))
        })
        .collect()
}

fn entropy_cmd(g: &Global, src: &Source, es: &[f64], betas: &[f64]) -> Result<Vec<Value>> {
    if es.is_empty() == betas.is_empty() {
        bail!("give exactly one of --E and --beta");
    }
    let e_max = es.iter().copied().fold(0.0, f64::max);
    let p = if betas.is_empty() || src.beta_min.is_some() {
        src.load(g, e_max, 0.0)?.profile()
    } else {
        // Tabulating at given β: certify the lattice measure down to the smallest one.
        let mut s = src.clone();
        s.beta_min = Some(betas.iter().copied().fold(f64::INFINITY, f64::min));
        s.load(g, e_max, 0.0)?.profile()
    };
    if !es.is_empty() {
        es.iter().map(|&e| Ok(to_value(&thermo::entropy(&p, e)?))).collect()
    } else {
        betas.iter().map(|&b| Ok(to_value(&p.eval(b)?))).collect()
    }
}

fn an_cmd(g: &Global, src: &Source, e: f64, ns: &[usize]) -> Result<Vec<Value>> {
    // The count is defined for every E; S only inside the certified energy range.
    let s = thermo::entropy(&src.load(g, e, 0.0)?.profile(), e).ok().map(|x| x.s);
    ns.iter()
        .map(|&n| {
            let a = src.with_atoms(g, e, |m| thermo::an_exact(m, e, n))?;
            Ok(json!({
                "n": a.n,
                "E": a.e,
                "log_an": a.log_an,
                "log_an_over_n": a.log_an / n as f64,
                "S": s,
                "degree": a.degree,
                "eta": a.eta,
            }))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn asymptotic_cmd(
    g: &Global,
    src: &Source,
    e: f64,
    n: usize,
    variant: VariantArg,
    eta: Option<f64>,
    quad_points: usize,
    exact: bool,
) -> Result<Vec<Value>> {
    let loaded = src.load(g, e, 0.0)?;
    let p = loaded.profile();
    let eta_of = |l: &Loaded| -> Result<f64> {
        match (eta, l) {
            (Some(v), _) => Ok(v),
            (None, Loaded::Atoms(m)) => asymptotics::detect_eta(m).ok_or_else(|| anyhow!("measure is not arithmetic")),
            (None, Loaded::Continuous(_)) => bail!("--eta is required for a continuous profile"),
        }
    };
    let mut out = match variant {
        VariantArg::Poincare => to_value(&asymptotics::poincare_estimate(&p, e, n)?),
        VariantArg::Df => to_value(&asymptotics::df_estimate(&p, eta_of(&loaded)?, e, n)?),
        VariantArg::Contour => {
            to_value(&src.with_atoms(g, e, |m| asymptotics::df_contour(m, e, n, quad_points))?)
        }
    };
    if exact {
        let log_est = match variant {
            VariantArg::Contour => out["log_value"].as_f64(),
            _ => out["log_estimate"].as_f64(),
        }
        .expect("numeric estimate");
        let log_an = match &loaded {
            Loaded::Continuous(ThermoProfile::Gaussian { dim, mass, deg_shift }) => {
                thermo::gaussian_log_an(*dim, *mass, *deg_shift, e, n)
            }
            _ => src.with_atoms(g, e, |m| thermo::an_exact(m, e, n))?.log_an,
        };
        out["log_an"] = json!(log_an);
        out["ratio"] = json!((log_an - log_est).exp());
    }
    Ok(vec![out])
}

fn converge_cmd(g: &Global, src: &Source, e: f64, ns: &[usize]) -> Result<Vec<Value>> {
    if ns.is_empty() {
        bail!("--n needs at least one value");
    }
    let rep = src.with_atoms(g, e, |m| asymptotics::convergence_report(m, e, ns))?;
    for v in rep.verdicts.iter().filter(|v| v.is_violated()) {
        warn!("{} violated: lhs={} rhs={}", v.name, v.lhs, v.rhs);
    }
    Ok(rep.rows.iter().map(to_value).collect())
}

/// Coordinate sublattices spanned by the first and by the last ⌈n/2⌉ basis vectors.
fn structure_pair(n: usize) -> Result<(IntMatrix, IntMatrix)> {
    let k = n.div_ceil(2);
    let unit = |i: usize| (0..n).map(|j| i64::from(i == j)).collect::<Vec<_>>();
    let f1 = IntMatrix::from_columns(n, &(0..k).map(unit).collect::<Vec<_>>())?;
    let f2 = IntMatrix::from_columns(n, &(n - k..n).map(unit).collect::<Vec<_>>())?;
    Ok((f1, f2))
}

struct AuditParams {
    suite: Suite,
    e: f64,
    n_max: usize,
    eps: f64,
}

fn run_suite(l: &Lattice, a: &AuditParams, cfg: EnumerationConfig) -> thetalat::Result<Vec<AuditVerdict>> {
    match a.suite {
        Suite::Transference => {
            let mut v = theta::transference_audit(l, cfg)?;
            v.push(reduction::reduction_transference_check(l)?);
            Ok(v)
        }
        Suite::Comparison => theta::comparison_audit(l, cfg),
        Suite::Structure => {
            let (f1, f2) = structure_pair(l.rank()).map_err(|e| Error::InvalidInput(e.to_string()))?;
            theta::structure_audit(l, &f1, &f2, cfg)
        }
        Suite::ThermoBounds => {
            let complete = a.n_max as f64 * (a.e + a.eps) * (1.0 + 1e-9);
            let (m, _) = thermo::lattice_measure_for(l, a.e, complete, cfg)?;
            thermo::bounds_suite(&m, a.e, a.n_max, a.eps)
        }
        Suite::Reduction => {
            let red = reduction::hkz_reduce_with(l, cfg)?;
            let ratio = red.product_ratio(l);
            let hermite = reduction::hermite_inequality_holds(l)?;
            Ok(vec![
                AuditVerdict::compare("reduction.product-bound", ratio, 1.0, "prod |v_i| / (D(n) covol)"),
                AuditVerdict::compare(
                    "reduction.hermite-minkowski",
                    if hermite { 0.0 } else { 1.0 },
                    0.0,
                    "lambda_1 <= 2 v_n^(-1/n) covol^(1/n)",
                ),
            ])
        }
    }
}

/// Returns the JSONL lines and whether any verdict was violated and any item failed.
fn audit_cmd(g: &Global, items: Vec<(String, Lattice)>, a: &AuditParams) -> (Vec<Value>, bool, bool) {
    let cfg = g.config();
    let results: Vec<(String, thetalat::Result<Vec<AuditVerdict>>)> =
        items.into_par_iter().map(|(name, l)| { let r = run_suite(&l, a, cfg); (name, r) }).collect();
    let mut lines = Vec::new();
    let (mut violated, mut failed) = (false, false);
    for (item, r) in results {
        match r {
            Ok(vs) => {
                for v in vs {
                    violated |= v.is_violated();
                    let mut obj = json!({ "item": item });
                    if let (Value::Object(o), Value::Object(extra)) = (&mut obj, to_value(&v)) {
                        o.extend(extra);
                    }
                    lines.push(obj);
                }
            }
            Err(e) => {
                failed = true;
                lines.push(json!({ "item": item, "error": e.to_string() }));
            }
        }
    }
    (lines, violated, failed)
}

fn audit_items(g: &Global, corpus_dir: Option<&Path>, files: &[PathBuf], rank: usize, count: usize, bound: i64) -> Result<Vec<(String, Lattice)>> {
    let mut paths: Vec<PathBuf> = files.to_vec();
    if let Some(dir) = corpus_dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        found.sort();
        paths.extend(found);
    }
    if paths.is_empty() {
        let ls = corpus::generate(CorpusSpec { seed: g.seed, rank, count, entry_bound: bound })?;
        return Ok(ls.into_iter().enumerate().map(|(i, l)| (format!("seed{}-{i:03}", g.seed), l)).collect());
    }
    paths.iter().map(|p| Ok((p.display().to_string(), load_lattice(p)?))).collect()
}

fn corpus_cmd(g: &Global, rank: usize, count: usize, bound: i64, out: &Path) -> Result<Vec<Value>> {
    let ls = corpus::generate(CorpusSpec { seed: g.seed, rank, count, entry_bound: bound })?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::with_capacity(ls.len());
    for (i, l) in ls.iter().enumerate() {
        let p = out.join(format!("lattice_r{rank}_{i:03}.json"));
        fs::write(&p, l.to_json_string() + "\n").with_context(|| format!("writing {}", p.display()))?;
        written.push(json!(p.display().to_string()));
    }
    Ok(vec![json!({ "seed": g.seed, "rank": rank, "count": count, "bound": bound, "files": written })])
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(g.threads).build_global()?;
    }
    let fmt = g.format.unwrap_or(Format::Json);
    let rows = match &cli.command {
        Command::Invariants { lattice } => invariants(g, lattice)?,
        Command::Reduce { lattice } => {
            let l = load_lattice(lattice)?;
            vec![reduction::hkz_reduce_with(&l, g.config())?.to_json(&l)]
        }
        Command::Theta { lattice, t, center, no_poisson } => theta_cmd(g, lattice, t, center.as_deref(), *no_poisson)?,
        Command::Entropy { source, e, beta } => entropy_cmd(g, source, e, beta)?,
        Command::An { source, e, n } => an_cmd(g, source, *e, n)?,
        Command::Asymptotic { source, e, n, variant, eta, quad_points, exact } => {
            asymptotic_cmd(g, source, *e, *n, *variant, *eta, *quad_points, *exact)?
        }
        Command::Audit { suite, corpus, lattice, rank, count, bound, e, n_max, eps } => {
            let items = audit_items(g, corpus.as_deref(), lattice, *rank, *count, *bound)?;
            info!("auditing {} lattices", items.len());
            let params = AuditParams { suite: *suite, e: *e, n_max: *n_max, eps: *eps };
            let (lines, violated, failed) = audit_cmd(g, items, &params);
            match g.format {
                Some(f) => emit(&lines, f)?,
                None => emit_lines(&lines)?,
            }
            return Ok(if violated {
                ExitCode::from(1)
            } else if failed {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            });
        }
        Command::Corpus { rank, count, bound, out } => corpus_cmd(g, *rank, *count, *bound, out)?,
        Command::Converge { source, e, n } => {
            emit(&converge_cmd(g, source, *e, n)?, g.format.unwrap_or(Format::Csv))?;
            return Ok(ExitCode::SUCCESS);
        }
    };
    emit(&rows, fmt)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
