use clap::{Args, Parser, Subcommand, ValueEnum};
use compdiv_cli::config::{ExperimentConfig, Measure};
use compdiv_cli::families::{resolve_cache_dir, FamilyStore};
use compdiv_cli::run::divergence_value;
use compdiv_cli::{run, verify_suite, CliError};
use compdiv_core::approx::{bernstein_k, run_trials, HullElement};
use compdiv_core::circuits::{
    build_effect_family, load_family_cache, read_cache_header, save_family_cache, BudgetPolynomial, CacheHeader,
    EffectFamily,
};
use compdiv_core::hyptest::{stein_sequence, TensorPowerBuilder};
use compdiv_core::qmatrix::DensityMatrix;
use compdiv_core::resources::{
    check_continuity, resource_bracket, sep_candidates, BracketOptions, FreeStateSet, ResourceMeasure,
};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "compdiv", version, about = "Divergences and resource measures restricted to efficient measurements")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write the JSON result to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FamilyArgs {
    /// Preset gate set (HTCNOT, HCNOT, CLIFFORDT); defaults to the config's.
    #[arg(long)]
    gate_set: Option<String>,
    /// Budget polynomial coefficients "c0,c1,...".
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    budget_poly: Option<Vec<i64>>,
    #[arg(long)]
    ancillas: Option<usize>,
    #[arg(long)]
    postprocessing: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Tracedist,
    Renyi,
    Relent,
    Maxdiv,
    Conic,
    Fidelity,
    Hilbert,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResourceArg {
    Relent,
    Max,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate a family and write its cache file.
    BuildFamily {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        fam: FamilyArgs,
        /// Output file; defaults to the cache directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one divergence over a cached family.
    Divergence {
        #[arg(long, value_enum)]
        measure: MeasureArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Seeded sampling trials for a convex combination of family members.
    ApproxTrial {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, value_delimiter = ',')]
        indices: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Sample count; defaults to the concentration bound.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Finite-copy hypothesis-testing sequence.
    Stein {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        m_max: usize,
        #[command(flatten)]
        fam: FamilyArgs,
    },
    /// Certified bracket for a resource measure.
    Resource {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        family: PathBuf,
        /// Free-set file; otherwise SEP candidates across --sep "nA,nB".
        #[arg(long)]
        free: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sep: Option<Vec<usize>>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = ResourceArg::Relent)]
        measure: ResourceArg,
    },
    /// Continuity bound for a pair of nearby states.
    Continuity {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        rho2: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        free: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sep: Option<Vec<usize>>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Full-rank free reference state; defaults to the maximally mixed member.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Run the invariant battery and print a pass/fail table.
    Verify,
    /// Execute the pipeline declared in --config.
    Run,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    Ok(c)
}

fn apply_family_args(c: &mut ExperimentConfig, a: &FamilyArgs) -> Result<(), CliError> {
    if let Some(g) = &a.gate_set {
        c.gate_set = compdiv_cli::config::GateSetSpec::Preset(g.clone());
    }
    if let Some(p) = &a.budget_poly {
        c.budget_poly = p.clone();
    }
    if let Some(n) = a.ancillas {
        c.ancillas = n;
    }
    if let Some(p) = a.postprocessing {
        c.postprocessing = p;
    }
    c.validate()
}

fn load_family(path: &Path) -> Result<EffectFamily, CliError> {
    let header = read_cache_header(path)?;
    Ok(load_family_cache(path, &header)?)
}

fn free_set(free: &Option<PathBuf>, sep: &Option<Vec<usize>>, samples: usize, seed: u64) -> Result<FreeStateSet, CliError> {
    match (free, sep.as_deref()) {
        (Some(p), _) => Ok(FreeStateSet::load(p)?),
        (None, Some([a, b])) => Ok(sep_candidates(*a, *b, samples, seed)?),
        _ => Err(CliError::Config("give --free <file> or --sep nA,nB".into())),
    }
}

fn measure(m: MeasureArg) -> Measure {
    match m {
        MeasureArg::Tracedist => Measure::Tracedist,
        MeasureArg::Renyi => Measure::Renyi,
        MeasureArg::Relent => Measure::Relent,
        MeasureArg::Maxdiv => Measure::Maxdiv,
        MeasureArg::Conic => Measure::Conic,
        MeasureArg::Fidelity => Measure::Fidelity,
        MeasureArg::Hilbert => Measure::Hilbert,
    }
}

/// Returns the JSON to print and whether the command succeeded.
fn execute(cli: &Cli) -> Result<(Value, bool), CliError> {
    let mut c = load_config(cli)?;
    let cache_dir = resolve_cache_dir(cli.cache_dir.as_deref(), &c);
    let base = cli.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(".")).to_path_buf();
    Ok(match &cli.cmd {
        Cmd::BuildFamily { n, fam, out } => {
            apply_family_args(&mut c, fam)?;
            let gs = c.gate_set.build()?;
            let opts = c.build_options();
            let f = build_effect_family(*n, &gs, &c.poly(), &opts)?;
            let header = CacheHeader::new(gs.hash(), *n, f.budget(), opts, vec![]);
            let path = match (out, &cache_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(d)) => d.join(format!("family-n{n}-{}.json", header.tag())),
                (None, None) => return Err(CliError::Config("give --out or a cache directory".into())),
            };
            save_family_cache(&path, &header, &f)?;
            let v = json!({
                "path": path, "n": n, "budget": f.budget(), "size": f.len(),
                "span_rank": f.span_rank(), "flags": f.flags(), "gate_set_hash": header.gate_set_hash,
            });
            (v, true)
        }
        Cmd::Divergence { measure: m, alpha, family, rho, sigma } => {
            let f = load_family(family)?;
            let (r, s) = (DensityMatrix::load(rho)?, DensityMatrix::load(sigma)?);
            (divergence_value(measure(*m), *alpha, &r, &s, &f)?, true)
        }
        Cmd::ApproxTrial { family, indices, weights, eps, trials, k } => {
            let f = load_family(family)?;
            let h = HullElement::new(weights.clone(), indices.clone())?;
            let k = match k {
                Some(k) => *k,
                None => bernstein_k(f.n(), 2, *eps)?,
            };
            (serde_json::to_value(run_trials(&h, &f, k, *eps, *trials, c.seed)?)?, true)
        }
        Cmd::Stein { rho, sigma, eps, m_max, fam } => {
            apply_family_args(&mut c, fam)?;
            let (r, s) = (DensityMatrix::load(rho)?, DensityMatrix::load(sigma)?);
            let n = r.num_qubits().ok_or_else(|| CliError::Config("rho is not a qubit state".into()))?;
            let mut store = FamilyStore::from_config(&c, cache_dir)?;
            let base_f = store.family(n, &[])?;
            let mut b = TensorPowerBuilder::new(base_f, BudgetPolynomial::new(c.budget_poly.clone()), store.options.family_cap);
            let seq = stein_sequence(&r, &s, &mut b, *eps, *m_max)?;
            (serde_json::to_value(&seq.reports)?, seq.truncated.is_none())
        }
        Cmd::Resource { rho, family, free, sep, samples, measure: m } => {
            let f = load_family(family)?;
            let fr = free_set(free, sep, *samples, c.seed)?;
            let m = match m {
                ResourceArg::Relent => ResourceMeasure::Relent,
                ResourceArg::Max => ResourceMeasure::Max,
            };
            let b = resource_bracket(&DensityMatrix::load(rho)?, &fr, &f, m, BracketOptions::default())?;
            (serde_json::to_value(b)?, true)
        }
        Cmd::Continuity { rho, rho2, family, free, sep, samples, reference } => {
            let f = load_family(family)?;
            let fr = free_set(free, sep, *samples, c.seed)?;
            let reference = match reference {
                Some(p) => DensityMatrix::load(p)?,
                None => fr
                    .named("maximally_mixed")
                    .cloned()
                    .ok_or_else(|| CliError::Config("free set has no maximally_mixed member; give --reference".into()))?,
            };
            let chk = check_continuity(&DensityMatrix::load(rho)?, &DensityMatrix::load(rho2)?, &fr, &f, &reference)?;
            let holds = chk.holds(c.tolerances.inequality);
            let mut v = serde_json::to_value(&chk)?;
            v["holds"] = json!(holds);
            (v, holds)
        }
        Cmd::Verify => {
            let mut store = FamilyStore::from_config(&c, cache_dir)?;
            let rep = verify_suite(&c, &mut store)?;
            eprint!("{}", rep.table());
            let mut v = rep.body();
            v["timings_ms"] = json!(rep.timings_ms);
            (v, rep.passed())
        }
        Cmd::Run => {
            let rep = run(&c, &base, cache_dir)?;
            let v = serde_json::to_value(&rep)?;
            if let Some(p) = &c.outputs.report {
                std::fs::write(base.join(p), serde_json::to_vec_pretty(&v)?)?;
            }
            (v, true)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok((v, ok)) => {
            let text = serde_json::to_string_pretty(&v).expect("serializable");
            // a closed pipe downstream is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
            if let Some(p) = &cli.json_out {
                if let Err(e) = std::fs::write(p, &text) {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
            if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
