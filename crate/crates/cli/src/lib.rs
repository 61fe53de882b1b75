//! Command dispatch for the `decomap` binary.
//!
//! Every command prints one JSON report on stdout. Exit code 0 means the
//! tested condition holds (inside, satisfied), 1 means it fails, 2 means the
//! request could not be evaluated.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use decomap::cones::{self, ConeSpec};
use decomap::linalg::{self, TensorLayout};
use decomap::maps::{self, MapObject};
use decomap::modular::{self, ModularData};
use decomap::stormer::{self, FaceSpec};
use decomap::tolerances::DEFAULT;
use decomap::{io, Complex64, Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const MAX_COUNT: usize = 100_000;
const MAX_DIM: usize = 6;

#[derive(Debug, Parser, Serialize)]
#[command(name = "decomap", version, about = "Positive maps, modular cones and decomposability tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Residuals of the modular identities for a faithful state.
    ModularCheck(ModularCheck),
    /// Membership of a vector in a closed-form cone.
    ConeMember(ConeMember),
    /// Membership in the convex hull of the natural and transposed tensor cones.
    HullMember(HullMember),
    /// Double-PSD form of sampled intersection-cone vectors.
    Probe(Probe),
    /// CP, co-CP, k-positivity and S_k tests for a map.
    MapAnalyze(MapAnalyze),
    /// Split a map into CP and co-CP parts.
    Decompose(Decompose),
    /// Transfer operator and cone criteria under detailed balance.
    TransferCheck(TransferCheck),
    /// Construct the local decomposition data at a vector.
    StormerBuild(StormerArgs),
    /// Check the local decomposition identity on random inputs.
    StormerVerify(StormerVerify),
    /// Trace conditions versus global equality for a face map on M_2.
    Prop41(Prop41),
}

#[derive(Debug, Args, Serialize)]
pub struct ModularCheck {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConeMember {
    /// State on the whole space; a product state for tensor cones.
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub xi: PathBuf,
    /// Cone as inline JSON, e.g. '{"kind":"vbeta","beta":0.25}'.
    #[arg(long)]
    pub cone: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct HullMember {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub xi: PathBuf,
    /// Tensor dimensions `m,n`.
    #[arg(long)]
    pub dims: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT.max_iter)]
    pub max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Probe {
    #[arg(long)]
    pub dims: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Seeds both the random states and the samples.
    #[arg(long)]
    pub seed: u64,
    /// Use tracial states on both factors.
    #[arg(long)]
    pub tracial: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct MapAnalyze {
    #[arg(long)]
    pub map: PathBuf,
    /// Comma-separated: cp, ccp, kpos=K, sk=K.
    #[arg(long, default_value = "cp,ccp")]
    pub tests: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT.seesaw_restarts)]
    pub restarts: usize,
    /// Trials for the S_k sampler.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Decompose {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT.max_iter)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Natural,
    Transposed,
    Hull,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuxState {
    Tracial,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct TransferCheck {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Criterion that decides the exit code.
    #[arg(long, value_enum, default_value_t = Criterion::Natural)]
    pub criterion: Criterion,
    /// State on the auxiliary factor M_n.
    #[arg(long, value_enum, default_value_t = AuxState::Tracial)]
    pub aux: AuxState,
}

#[derive(Debug, Args, Serialize)]
pub struct StormerArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Face `{"xi": ..., "eta": ...}`; its `eta` is used unless `--eta` is given.
    #[arg(long)]
    pub face: Option<PathBuf>,
    /// Vector `[[re, im], ...]`.
    #[arg(long)]
    pub eta: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StormerVerify {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: StormerArgs,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct Prop41 {
    #[command(flatten)]
    #[serde(flatten)]
    pub target: StormerArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

/// Result of one command.
pub struct Outcome {
    pub satisfied: bool,
    pub seed: Option<u64>,
    pub results: Value,
}

#[derive(Debug, Serialize)]
struct ErrorPayload {
    kind: String,
    message: String,
}

/// The report and the exit code for a parsed request.
pub fn run(cli: &Cli) -> (Value, i32) {
    let start = Instant::now();
    let request = serde_json::to_value(&cli.command).expect("request serializes");
    let outcome = dispatch(&cli.command);
    let wall = start.elapsed().as_millis() as u64;
    let (mut report, code) = match outcome {
        Ok(o) => {
            let code = if o.satisfied { 0 } else { 1 };
            (
                json!({
                    "verdict": if o.satisfied { "satisfied" } else { "violated" },
                    "exit_code": code,
                    "seed": o.seed,
                    "results": o.results,
                }),
                code,
            )
        }
        Err(e) => (
            json!({
                "verdict": "error",
                "exit_code": 2,
                "error": ErrorPayload { kind: e.kind().into(), message: e.to_string() },
            }),
            2,
        ),
    };
    let obj = report.as_object_mut().expect("object");
    obj.insert("request".into(), request);
    obj.insert("version".into(), json!(VERSION));
    obj.insert("wall_time_ms".into(), json!(wall));
    (report, code)
}

/// Report for arguments that failed to parse.
pub fn usage_error(message: &str) -> Value {
    json!({
        "verdict": "error",
        "exit_code": 2,
        "error": ErrorPayload { kind: "UsageError".into(), message: message.trim().into() },
        "version": VERSION,
    })
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::ModularCheck(a) => modular_check(a),
        Command::ConeMember(a) => cone_member(a),
        Command::HullMember(a) => hull_member(a),
        Command::Probe(a) => probe(a),
        Command::MapAnalyze(a) => map_analyze(a),
        Command::Decompose(a) => decompose(a),
        Command::TransferCheck(a) => transfer_check(a),
        Command::StormerBuild(a) => stormer_build(a),
        Command::StormerVerify(a) => stormer_verify(a),
        Command::Prop41(a) => prop41(a),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 && tol <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance {tol} outside (0, 1]")))
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    if n <= MAX_COUNT {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {n} exceeds {MAX_COUNT}")))
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension {n} outside 1..={MAX_DIM}")))
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match parts.as_slice() {
        [Ok(m), Ok(n)] => {
            check_dim(*m)?;
            check_dim(*n)?;
            Ok((*m, *n))
        }
        _ => Err(Error::InvalidParameter(format!("dims must be `m,n`, got {s:?}"))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn load_modular(path: &PathBuf) -> Result<ModularData> {
    let rho = io::parse_matrix_file(path)?;
    check_dim(rho.rows())?;
    modular::build_modular(&rho)
}

/// Modular data for a product state on `M_m ⊗ M_n`, recovered from its marginals.
fn load_product_modular(path: &PathBuf, m: usize, n: usize) -> Result<ModularData> {
    let rho = io::parse_matrix_file(path)?;
    let (a, b) = linalg::bipartite_marginals(&rho, m, n)?;
    let dev = a.kron(&b).distance(&rho);
    if dev > DEFAULT.herm_threshold(rho.frobenius_norm()) {
        return Err(Error::InvalidParameter(format!(
            "tensor cones need a product state; ‖ρ − ρ_A ⊗ ρ_B‖ = {dev:.3e}"
        )));
    }
    Ok(modular::tensor_modular(&modular::build_modular(&a)?, &modular::build_modular(&b)?))
}

fn modular_check(a: &ModularCheck) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("samples", a.samples)?;
    let md = load_modular(&a.rho)?;
    let report = modular::check_identities(&md, a.samples, a.seed);
    Ok(Outcome {
        satisfied: report.all_within(a.tol),
        seed: Some(a.seed),
        results: json!({
            "dim": md.dim(),
            "max_residual": report.max_residual(),
            "identities": to_value(&report),
        }),
    })
}

fn cone_member(a: &ConeMember) -> Result<Outcome> {
    check_tol(a.tol)?;
    let spec: ConeSpec =
        serde_json::from_str(&a.cone).map_err(|e| Error::Parse(format!("cone: {e}")))?;
    let md = match spec.dims() {
        Some([m, n]) => load_product_modular(&a.rho, *m, *n)?,
        Some(d) => return Err(Error::LayoutMismatch(format!("expected 2 factors, got {d:?}"))),
        None => load_modular(&a.rho)?,
    };
    let xi = io::parse_matrix_file(&a.xi)?;
    let (inside, results) = match &spec {
        ConeSpec::Hull { dims } => {
            let h = cones::hull_membership(&md, &xi, &TensorLayout::new(dims.clone()), a.tol, DEFAULT.max_iter)?;
            (h.result.inside, to_value(&h))
        }
        _ => {
            let r = cones::cone_membership(&md, &spec, &xi, a.tol)?;
            (r.inside, to_value(&r))
        }
    };
    Ok(Outcome {
        satisfied: inside,
        seed: None,
        results: json!({ "cone": to_value(&spec), "membership": results }),
    })
}

fn hull_member(a: &HullMember) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("max_iter", a.max_iter)?;
    let (m, n) = parse_dims(&a.dims)?;
    let md = load_product_modular(&a.rho, m, n)?;
    let xi = io::parse_matrix_file(&a.xi)?;
    let h = cones::hull_membership(&md, &xi, &TensorLayout::bipartite(m, n), a.tol, a.max_iter)?;
    Ok(Outcome {
        satisfied: h.result.inside,
        seed: None,
        results: to_value(&h),
    })
}

fn probe(a: &Probe) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("trials", a.trials)?;
    let (m, n) = parse_dims(&a.dims)?;
    let r = cones::probe_finite_dim_equality(m, n, (!a.tracial).then_some(a.seed), a.trials, a.tol)?;
    Ok(Outcome {
        satisfied: r.passed,
        seed: Some(a.seed),
        results: to_value(&r),
    })
}

#[derive(Debug, PartialEq)]
enum MapTest {
    Cp,
    Ccp,
    KPos(usize),
    Sk(usize),
}

fn parse_tests(s: &str) -> Result<Vec<MapTest>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let k = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .ok()
                    .filter(|&k| (1..=MAX_DIM).contains(&k))
                    .ok_or_else(|| Error::InvalidParameter(format!("bad k in test {t:?}")))
            };
            match t.split_once('=') {
                None if t == "cp" => Ok(MapTest::Cp),
                None if t == "ccp" => Ok(MapTest::Ccp),
                Some(("kpos", v)) => Ok(MapTest::KPos(k(v)?)),
                Some(("sk", v)) => Ok(MapTest::Sk(k(v)?)),
                _ => Err(Error::InvalidParameter(format!("unknown test {t:?}"))),
            }
        })
        .collect()
}

fn map_analyze(a: &MapAnalyze) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("restarts", a.restarts)?;
    check_count("trials", a.trials)?;
    let tests = parse_tests(&a.tests)?;
    let phi = io::parse_map_file(&a.map)?;
    let global = maps::global_positivity_test(&phi, a.tol)?;
    let mut all = true;
    let mut verdicts = serde_json::Map::new();
    for t in &tests {
        let (name, pass, detail) = match t {
            MapTest::Cp => (
                "cp".to_string(),
                global.completely_positive,
                json!({ "min_eigenvalue": global.min_choi_eigenvalue }),
            ),
            MapTest::Ccp => (
                "ccp".to_string(),
                global.completely_copositive,
                json!({ "min_eigenvalue": global.min_transposed_choi_eigenvalue }),
            ),
            MapTest::KPos(k) => {
                if *k > phi.dim_in.min(phi.dim_out) {
                    return Err(Error::InvalidParameter(format!("k = {k} exceeds min(m, n)")));
                }
                let v = maps::k_positivity_search(&phi, *k, a.restarts, a.seed, a.tol)?;
                (format!("kpos={k}"), !v.is_violation(), to_value(&v))
            }
            MapTest::Sk(k) => {
                let v = maps::sk_sampler(&phi, *k, a.trials, a.seed, a.tol)?;
                (format!("sk={k}"), !v.is_violation(), to_value(&v))
            }
        };
        all &= pass;
        verdicts.insert(name, json!({ "pass": pass, "detail": detail }));
    }
    Ok(Outcome {
        satisfied: all,
        seed: Some(a.seed),
        results: json!({
            "map": { "label": phi.label, "dim_in": phi.dim_in, "dim_out": phi.dim_out },
            "completely_positive": global.completely_positive,
            "completely_copositive": global.completely_copositive,
            "min_choi_eigenvalue": global.min_choi_eigenvalue,
            "min_transposed_choi_eigenvalue": global.min_transposed_choi_eigenvalue,
            "tests": verdicts,
        }),
    })
}

fn decompose(a: &Decompose) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("max_iter", a.max_iter)?;
    let phi = io::parse_map_file(&a.map)?;
    let d = maps::decompose(&phi, a.tol, a.max_iter)?;
    Ok(Outcome {
        satisfied: d.converged,
        seed: None,
        results: to_value(&d),
    })
}

fn transfer_check(a: &TransferCheck) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("trials", a.trials)?;
    check_dim(a.k)?;
    let phi = io::parse_map_file(&a.map)?;
    let md = load_modular(&a.rho)?;
    let t = maps::transfer_operator(&phi, &md, a.trials, a.seed, a.tol)?;
    let seed = a.seed;
    let random_aux = move |n: usize| -> Result<ModularData> {
        let mut rng = linalg::random::rng(linalg::random::derived_seed(seed, 7919 + n as u64));
        modular::build_modular(&linalg::random::faithful_density(n, 0.02, &mut rng))
    };
    let aux: Option<&dyn Fn(usize) -> Result<ModularData>> = match a.aux {
        AuxState::Tracial => None,
        AuxState::Random => Some(&random_aux),
    };
    let report = maps::cone_criterion_check(&phi, &md, a.k, a.trials, a.seed, a.tol, aux)?;
    let satisfied = match a.criterion {
        Criterion::Natural => report.natural_pass(),
        Criterion::Transposed => report.transposed_pass(),
        Criterion::Hull => report.hull_pass(),
    };
    Ok(Outcome {
        satisfied,
        seed: Some(a.seed),
        results: json!({
            "transfer": {
                "matrix": to_value(&t.matrix),
                "delta_commutation_residual": t.delta_commutation_residual,
                "commutes_with_delta": t.commutes_with_delta,
                "cone_invariance_residual": t.cone_invariance_residual,
                "cone_invariant": t.cone_invariant,
                "db_adjoint": t.db_adjoint.as_ref().map(to_value),
            },
            "criteria": to_value(&report),
            "natural_pass": report.natural_pass(),
            "transposed_pass": report.transposed_pass(),
            "hull_pass": report.hull_pass(),
        }),
    })
}

fn stormer_inputs(a: &StormerArgs) -> Result<(MapObject, Option<FaceSpec>, Vec<Complex64>)> {
    let phi = io::parse_map_file(&a.map)?;
    let face = a.face.as_ref().map(io::parse_face_file).transpose()?;
    let eta = match (&a.eta, &face) {
        (Some(p), _) => io::parse_vector_file(p)?,
        (None, Some(f)) => f.eta.clone(),
        (None, None) => return Err(Error::InvalidParameter("give --eta or --face".into())),
    };
    Ok((phi, face, eta))
}

fn stormer_build(a: &StormerArgs) -> Result<Outcome> {
    let (phi, face, eta) = stormer_inputs(a)?;
    let data = match face {
        Some(f) if a.eta.is_none() => stormer::build_face_decomposition(&phi, &f)?,
        _ => stormer::build_local_decomposition(&phi, &eta)?,
    };
    let jordan = stormer::check_jordan(&data, 20, 0)?;
    Ok(Outcome {
        satisfied: jordan.jordan_residual <= 1e-9,
        seed: None,
        results: json!({ "data": to_value(&data), "jordan": to_value(&jordan) }),
    })
}

fn stormer_verify(a: &StormerVerify) -> Result<Outcome> {
    check_tol(a.tol)?;
    check_count("samples", a.samples)?;
    let (phi, _, eta) = stormer_inputs(&a.target)?;
    let r = stormer::verify_locdec(&phi, &eta, a.samples, a.seed, a.tol)?;
    Ok(Outcome {
        satisfied: r.passed,
        seed: Some(a.seed),
        results: to_value(&r),
    })
}

fn prop41(a: &Prop41) -> Result<Outcome> {
    check_tol(a.tol)?;
    let (phi, face, _) = stormer_inputs(&a.target)?;
    let face = face.ok_or_else(|| Error::InvalidParameter("prop41 needs --face".into()))?;
    let r = stormer::check_prop41(&phi, &face, a.tol)?;
    Ok(Outcome {
        satisfied: r.conditions_hold && r.equality_holds && !r.inconsistent,
        seed: None,
        results: to_value(&r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_list_parsing() {
        assert_eq!(
            parse_tests("cp, ccp,kpos=2,sk=3").unwrap(),
            vec![MapTest::Cp, MapTest::Ccp, MapTest::KPos(2), MapTest::Sk(3)]
        );
        assert!(parse_tests("kpos=0").is_err());
        assert!(parse_tests("cpx").is_err());
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("2,3").unwrap(), (2, 3));
        assert!(parse_dims("2").is_err());
        assert!(parse_dims("2,9").is_err());
    }

    #[test]
    fn tolerances_are_range_checked() {
        assert!(check_tol(1e-9).is_ok());
        assert!(check_tol(0.0).is_err());
        assert!(check_tol(f64::NAN).is_err());
    }
}
