use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use algconn::augment::{augment, augmented_laplacian, AugmentResult, Strategies};
use algconn::config::RunConfig;
use algconn::dense::min_eig_on_complement;
use algconn::graph::{CandidateSet, WeightedGraph};
use algconn::io::{read_edge_list, EdgeList};
use algconn::registry::{lambda2_estimators, opt_oracles, projection_strategies, resistance_backends, OptOptions};
use algconn::report::{emit_report, Report};
use algconn::sdp::{solve_psdp, verify_dual_feasible, verify_primal_feasible, SdpInstance, SolveOptions, SolveStatus};
use algconn::selftest::{run_selftest, SelftestReport};
use algconn::sparsify::{
    default_regularization, run_with_retries, setup_instance, spectral_instance, Certification, IterationRecord,
    SparsifyInstance, SparsifyParams, VectorSource,
};
use algconn::{Error, Result};

#[derive(Parser)]
#[command(name = "algconn", version, about = "Augment a graph to raise its algebraic connectivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add at most O(qk) candidate edges, or certify that no k of them help enough.
    Augment(AugmentArgs),
    /// Run the SDP feasibility solver once at a fixed γ.
    SdpCheck(SdpCheckArgs),
    /// Sparsify weighted candidate edges against a base graph.
    Sparsify(SparsifyArgs),
    /// Spectrally sparsify a single graph.
    SpectralSparsify(SpectralArgs),
    /// Compute a reference optimum with a named oracle.
    Oracle(OracleArgs),
    /// Run quick invariant checks.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct Inputs {
    /// Base graph in edge-list format.
    #[arg(long)]
    graph: PathBuf,
    /// Candidate edges in edge-list format.
    #[arg(long, conflicts_with = "complement")]
    candidates: Option<PathBuf>,
    /// Use every non-edge of the base graph as a candidate.
    #[arg(long)]
    complement: bool,
}

#[derive(Args)]
struct Strategy {
    /// Resistance backend.
    #[arg(long)]
    backend: Option<String>,
    /// Projection strategy.
    #[arg(long)]
    projection: Option<String>,
    /// Shorthand for `--backend approx --projection approx`.
    #[arg(long)]
    approx: bool,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    strategy: Strategy,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta_prime: Option<f64>,
    #[arg(long)]
    c_reject: Option<f64>,
    #[arg(long)]
    retries: Option<usize>,
    /// λ₂ estimator.
    #[arg(long)]
    lambda2: Option<String>,
    /// Use sketched inner products inside the SDP solver.
    #[arg(long)]
    sketch: bool,
}

#[derive(Args)]
struct SdpCheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    delta_prime: Option<f64>,
    #[arg(long)]
    sketch: bool,
}

#[derive(Args)]
struct SparsifyArgs {
    /// Base graph in edge-list format.
    #[arg(long)]
    graph: PathBuf,
    /// Weighted candidate edges in edge-list format.
    #[arg(long)]
    candidates: PathBuf,
    #[command(flatten)]
    strategy: Strategy,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    retries: Option<usize>,
}

#[derive(Args)]
struct SpectralArgs {
    /// Graph in edge-list format.
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    strategy: Strategy,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    retries: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Oracle name: brute or ascent.
    method: String,
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 500)]
    steps: usize,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn apply_strategy(cfg: &mut RunConfig, s: &Strategy) {
    if s.approx {
        cfg.backend = "approx".into();
        cfg.projection = "approx".into();
    }
    if let Some(b) = &s.backend {
        cfg.backend = b.clone();
    }
    if let Some(p) = &s.projection {
        cfg.projection = p.clone();
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load_candidates(g: &WeightedGraph, path: &Path) -> Result<EdgeList> {
    let list = read_edge_list(path)?;
    if list.n != g.n() {
        return Err(Error::Input(format!(
            "{}: candidate file declares n {} but the graph has {} vertices",
            path.display(),
            list.n,
            g.n()
        )));
    }
    Ok(list)
}

fn load_inputs(inputs: &Inputs) -> Result<(WeightedGraph, CandidateSet)> {
    let g = read_edge_list(&inputs.graph)?.to_graph()?;
    let w = match (&inputs.candidates, inputs.complement) {
        (Some(path), _) => CandidateSet::new(&g, &load_candidates(&g, path)?.pairs(), None)?,
        (None, true) => CandidateSet::complement(&g, None)?,
        (None, false) => return Err(Error::Input("give either --candidates <file> or --complement".into())),
    };
    Ok((g, w))
}

fn write_out(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn output_path(common: &Common, cfg: &RunConfig) -> Option<PathBuf> {
    common.json.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from))
}

fn run_augment(a: &AugmentArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common)?;
    apply_strategy(&mut cfg, &a.strategy);
    set(&mut cfg.k, a.k);
    set(&mut cfg.q, a.q);
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.delta_prime, a.delta_prime);
    set(&mut cfg.c_reject, a.c_reject);
    set(&mut cfg.retries, a.retries);
    set(&mut cfg.lambda2, a.lambda2.clone());
    cfg.use_sketch |= a.sketch;
    cfg.validate()?;
    let (g, w) = load_inputs(&a.inputs)?;
    let strategies = Strategies {
        resistance: resistance_backends().create(&cfg.backend)?,
        projection: projection_strategies().create(&cfg.projection)?,
        lambda2: lambda2_estimators().create(&cfg.lambda2)?,
    };
    let rep = augment(&g, &w, &cfg.augment_params(), &strategies)?;
    let code = match rep.result {
        AugmentResult::Accepted(_) => 0,
        AugmentResult::Reject(_) => 2,
    };
    let mut report = Report::new("augment", &cfg, rep.clone()).verify("lambda2_base", min_eig_on_complement(&g.laplacian())?);
    if let AugmentResult::Accepted(acc) = &rep.result {
        let l = augmented_laplacian(&g, &acc.added);
        report = report.verify("lambda2_augmented", min_eig_on_complement(&l)?);
    }
    write_out(&emit_report(&report)?, output_path(&a.common, &cfg).as_deref())?;
    Ok(ExitCode::from(code))
}

fn run_sdp_check(a: &SdpCheckArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common)?;
    set(&mut cfg.k, a.k);
    set(&mut cfg.delta_prime, a.delta_prime);
    cfg.use_sketch |= a.sketch;
    cfg.validate()?;
    let (g, w) = load_inputs(&a.inputs)?;
    let inst = SdpInstance::new(g, w, cfg.k, a.gamma)?;
    let opts = SolveOptions {
        delta_prime: cfg.delta_prime,
        use_sketch: cfg.use_sketch,
        seed: cfg.seed,
        ..SolveOptions::default()
    };
    let res = solve_psdp(&inst, &opts)?;
    let verdict = match &res.status {
        SolveStatus::Feasible { lambda, weights } => {
            verify_primal_feasible(&inst.with_gamma(res.level)?, *lambda, weights, cfg.tolerances.verify)
        }
        SolveStatus::Infeasible { certificate } => verify_dual_feasible(
            &inst,
            &certificate.z,
            certificate.v,
            &certificate.beta,
            cfg.tolerances.verify,
        ),
    };
    let report = Report::new("sdp-check", &cfg, res).verify("verified", if verdict.ok { 1.0 } else { 0.0 });
    write_out(&emit_report(&report)?, output_path(&a.common, &cfg).as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Coefficient {
    u: usize,
    v: usize,
    w: f64,
}

#[derive(Serialize)]
struct SparsifyOutput {
    coefficients: Vec<Coefficient>,
    trace: Vec<IterationRecord>,
    certification: Certification,
    attempts: usize,
    failures: Vec<String>,
    iterations: usize,
    samples: usize,
}

fn sparsify_params(cfg: &RunConfig) -> SparsifyParams {
    SparsifyParams {
        eps: cfg.eps,
        q: cfg.q,
        seed: cfg.seed,
        retries: cfg.retries,
        ..SparsifyParams::default()
    }
}

fn sparsify_and_report(command: &str, inst: &SparsifyInstance, cfg: &RunConfig, out: Option<PathBuf>) -> Result<ExitCode> {
    let params = sparsify_params(cfg);
    let proj = projection_strategies().create(&cfg.projection)?.project(inst, cfg.seed)?;
    let backend = resistance_backends().create(&cfg.backend)?;
    let outcome = match run_with_retries(inst, &proj, &params, backend.as_ref()) {
        Err(e @ Error::RetryExhausted { .. }) => {
            eprintln!("algconn: {e}");
            return Ok(ExitCode::from(3));
        }
        other => other?,
    };
    let coefficients = inst
        .sources()
        .iter()
        .zip(outcome.result.coefficients.iter())
        .filter_map(|(src, &c)| match *src {
            VectorSource::Candidate { u, v, w, .. } if c > 0.0 => Some(Coefficient { u, v, w: c * w }),
            _ => None,
        })
        .collect();
    let cert = outcome.certification.clone();
    let output = SparsifyOutput {
        coefficients,
        trace: outcome.result.trace.clone(),
        certification: outcome.certification,
        attempts: outcome.attempts,
        failures: outcome.failures,
        iterations: outcome.result.iterations,
        samples: outcome.result.samples,
    };
    let report = Report::new(command, cfg, output)
        .verify("lambda_min", cert.lambda_min)
        .verify("lambda_max", cert.lambda_max);
    write_out(&emit_report(&report)?, out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run_sparsify(a: &SparsifyArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common)?;
    apply_strategy(&mut cfg, &a.strategy);
    set(&mut cfg.k, a.k);
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.q, a.q);
    set(&mut cfg.retries, a.retries);
    cfg.validate()?;
    let g = read_edge_list(&a.graph)?.to_graph()?;
    let cands = load_candidates(&g, &a.candidates)?.edges;
    let inst = setup_instance(&g, &cands, default_regularization(&g, &cands), cfg.k)?;
    sparsify_and_report("sparsify", &inst, &cfg, output_path(&a.common, &cfg))
}

fn run_spectral(a: &SpectralArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common)?;
    apply_strategy(&mut cfg, &a.strategy);
    set(&mut cfg.eps, a.eps);
    set(&mut cfg.q, a.q);
    set(&mut cfg.retries, a.retries);
    cfg.validate()?;
    let g = read_edge_list(&a.graph)?.to_graph()?;
    let inst = spectral_instance(&g, default_regularization(&g, &[]))?;
    sparsify_and_report("spectral-sparsify", &inst, &cfg, output_path(&a.common, &cfg))
}

#[derive(Serialize)]
struct OracleOutput {
    method: String,
    lambda: f64,
    weights: Vec<Coefficient>,
}

fn run_oracle(a: &OracleArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&a.common)?;
    set(&mut cfg.k, a.k);
    cfg.validate()?;
    let oracle = opt_oracles().create(&a.method)?;
    let (g, w) = load_inputs(&a.inputs)?;
    let opts = OptOptions {
        steps: a.steps,
        seed: cfg.seed,
    };
    let best = oracle.solve(&g, &w, cfg.k, &opts)?;
    let weights = w
        .edges()
        .iter()
        .zip(&best.weights)
        .map(|(&(u, v), &w)| Coefficient { u, v, w })
        .collect();
    let output = OracleOutput {
        method: oracle.name().into(),
        lambda: best.lambda,
        weights,
    };
    let report = Report::new("oracle", &cfg, output);
    write_out(&emit_report(&report)?, output_path(&a.common, &cfg).as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run_selftest_cmd(c: &Common) -> Result<ExitCode> {
    let cfg = load_config(c)?;
    let rep: SelftestReport = run_selftest(cfg.seed);
    let passed = rep.checks.iter().filter(|c| c.ok).count();
    let ok = rep.all_ok();
    let report = Report::new("selftest", &cfg, rep).verify("passed", passed as f64);
    write_out(&emit_report(&report)?, output_path(c, &cfg).as_deref())?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Augment(a) => run_augment(a),
        Command::SdpCheck(a) => run_sdp_check(a),
        Command::Sparsify(a) => run_sparsify(a),
        Command::SpectralSparsify(a) => run_spectral(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Selftest(c) => run_selftest_cmd(c),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("algconn: {e}");
            match e {
                Error::RetryExhausted { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
