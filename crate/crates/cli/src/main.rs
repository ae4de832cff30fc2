//! `gptsteer`: JSON in, JSON verdicts with certificates out.
//!
//! Exit codes: 0 computed, 1 invalid input, 2 guard exceeded, 3 numerical
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gptsteer_core::acceptance::{self, AcceptanceOptions};
use gptsteer_core::bipartite::{self, UnsteerableVerdict};
use gptsteer_core::choquet::{self, BARYCENTER_TOL};
use gptsteer_core::io::{self, AssemblageFile, BipartiteFile, MeasureFile, TensorFile, WitnessFile};
use gptsteer_core::steering::{self, BISECTION_TOL, MARGINAL_TOL};
use gptsteer_core::{tensor, GptError, Guards, LhsVerdict};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

const EXIT_INVALID: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gptsteer", version, about = "Steerability certificates for polytopic GPTs")]
struct Cli {
    /// Seed for every randomized procedure.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Guard overrides, e.g. `dim=8,subsets=5000000`; replaces GPTSTEER_GUARDS.
    #[arg(long, global = true)]
    guards: Option<String>,
    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum NormKind {
    Steering,
    Injective,
    Projective,
    SigmaProjective,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Tensor norms of a dichotomic tensor, assemblage or bipartite state.
    Norm {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = NormKind::Steering)]
        kind: NormKind,
    },
    /// LHS model or steering witness for an assemblage.
    Lhs { input: PathBuf },
    /// Steering robustness of an assemblage.
    Robustness { input: PathBuf },
    /// Validity and strictness of a dichotomic witness.
    Witness { input: PathBuf },
    /// Whether `nu` is below `mu` in the Choquet order.
    Choquet { nu: PathBuf, mu: PathBuf },
    /// The constant c_mu of a measure at its barycenter.
    Cmu { input: PathBuf },
    /// Monte Carlo c_mu for the uniform measure on the n-sphere.
    McCmu {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Unsteerability of a bipartite state by dichotomic measurements.
    Unsteerable {
        input: PathBuf,
        /// Also run the sufficient operator-norm test with this lower bound
        /// on the steering degree of B.
        #[arg(long)]
        s_lower: Option<f64>,
    },
    /// Random search for measurements that steer a bipartite state.
    Search {
        input: PathBuf,
        /// Outcome counts per setting.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        shapes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        budget: usize,
    },
    /// Runs the acceptance suite.
    Selftest {
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

impl Verb {
    fn name(&self) -> &'static str {
        match self {
            Verb::Norm { .. } => "norm",
            Verb::Lhs { .. } => "lhs",
            Verb::Robustness { .. } => "robustness",
            Verb::Witness { .. } => "witness",
            Verb::Choquet { .. } => "choquet",
            Verb::Cmu { .. } => "cmu",
            Verb::McCmu { .. } => "mc-cmu",
            Verb::Unsteerable { .. } => "unsteerable",
            Verb::Search { .. } => "search",
            Verb::Selftest { .. } => "selftest",
        }
    }
}

enum Failure {
    Input(String),
    Core(GptError),
}

impl From<GptError> for Failure {
    fn from(e: GptError) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_INVALID,
            Failure::Core(GptError::GuardExceeded { .. }) => EXIT_GUARD,
            Failure::Core(GptError::Numerical(_)) => EXIT_NUMERICAL,
            Failure::Core(_) => EXIT_INVALID,
        }
    }

    fn kind(&self) -> &'static str {
        match self.code() {
            EXIT_GUARD => "guard_exceeded",
            EXIT_NUMERICAL => "numerical_failure",
            _ => "invalid_input",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome = Result<(Value, u8), Failure>;

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(v: Value, path: &Path) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    flatten_tagged(serde_json::to_value(x).expect("serializable"))
}

/// Replaces `{"system": id, "coords": [...]}` by the bare coordinate list.
fn flatten_tagged(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            if m.len() == 2 && m.contains_key("system") && m.get("coords").is_some_and(Value::is_array) {
                return m.get("coords").cloned().unwrap();
            }
            Value::Object(m.into_iter().map(|(k, v)| (k, flatten_tagged(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(flatten_tagged).collect()),
        other => other,
    }
}

fn norm(input: &Path, kind: NormKind) -> Outcome {
    let v = read_json(input)?;
    if v.get("coeffs").is_some() {
        let (a, b, st) = parse::<BipartiteFile>(v, input)?.load()?;
        let value = match kind {
            NormKind::Injective => tensor::injective_norm(&a, &b, st.tensor())?,
            NormKind::Projective => tensor::projective_norm(&a, &b, st.tensor())?,
            _ => return Err(Failure::Input("bipartite input supports --kind injective or projective".into())),
        };
        return Ok((json!({ "kind": kind_name(kind), "value": value }), 0));
    }
    let (sys, t) = if v.get("entries").is_some() {
        let (sys, asm) = parse::<AssemblageFile>(v, input)?.load()?;
        let t = asm.to_dichotomic_tensor(&sys)?;
        (sys, t)
    } else {
        parse::<TensorFile>(v, input)?.load()?
    };
    let out = match kind {
        NormKind::Steering => {
            let sn = tensor::steering_norm(&sys, &t)?;
            let mut m = Map::new();
            m.insert("kind".into(), json!("steering"));
            m.insert("value".into(), json!(sn.value));
            m.insert("decomposition".into(), to_value(&sn.decomposition));
            m.insert(
                "witness".into(),
                serde_json::to_value(WitnessFile::from_witness(&sys, t.sigma(), &sn.witness)).unwrap(),
            );
            Value::Object(m)
        }
        NormKind::Injective => json!({ "kind": "injective", "value": tensor::injective_norm_dichotomic(&sys, &t)? }),
        NormKind::SigmaProjective | NormKind::Projective => {
            json!({ "kind": "sigma_projective", "value": tensor::sigma_projective_norm(&sys, &t)? })
        }
    };
    Ok((out, 0))
}

fn kind_name(k: NormKind) -> &'static str {
    match k {
        NormKind::Steering => "steering",
        NormKind::Injective => "injective",
        NormKind::Projective => "projective",
        NormKind::SigmaProjective => "sigma_projective",
    }
}

fn lhs(input: &Path) -> Outcome {
    let (sys, asm) = parse::<AssemblageFile>(read_json(input)?, input)?.load()?;
    let verdict = steering::lhs_check(&sys, &asm)?;
    let mut m = Map::new();
    match &verdict {
        LhsVerdict::Classical { model } => {
            m.insert("verdict".into(), json!("classical"));
            m.insert("model".into(), to_value(model));
            m.insert("max_error".into(), json!(model.max_error(&asm)));
        }
        LhsVerdict::Steerable { witness, dichotomic } => {
            m.insert("verdict".into(), json!("steerable"));
            match dichotomic {
                Some(w) => {
                    m.insert(
                        "witness".into(),
                        serde_json::to_value(WitnessFile::from_witness(&sys, asm.sigma(), w)).unwrap(),
                    );
                    m.insert("general_witness".into(), to_value(witness));
                }
                None => {
                    m.insert("witness".into(), to_value(witness));
                }
            }
            m.insert("witness_value".into(), json!(witness.value(&asm)));
            let rob = steering::robustness(&sys, &asm)?;
            m.insert("robustness".into(), json!(rob.value));
        }
    }
    Ok((Value::Object(m), 0))
}

fn robustness(input: &Path) -> Outcome {
    let (sys, asm) = parse::<AssemblageFile>(read_json(input)?, input)?.load()?;
    Ok((to_value(&steering::robustness(&sys, &asm)?), 0))
}

fn witness(input: &Path) -> Outcome {
    let (sys, sigma, w) = parse::<WitnessFile>(read_json(input)?, input)?.load()?;
    Ok((to_value(&steering::witness_verify(&sys, &w, &sigma)?), 0))
}

fn load_measures(nu: &Path, mu: &Path) -> Result<(gptsteer_core::GptSystem, choquet::SimpleMeasure, choquet::SimpleMeasure), Failure> {
    let mu_file = parse::<MeasureFile>(read_json(mu)?, mu)?;
    let nu_file = parse::<MeasureFile>(read_json(nu)?, nu)?;
    if mu_file.system != nu_file.system {
        return Err(Failure::Input("the two measures are over different systems".into()));
    }
    let (sys, mu_m) = mu_file.load()?;
    let nu_m = nu_file.load_on(&sys)?;
    Ok((sys, nu_m, mu_m))
}

fn choquet_cmd(nu: &Path, mu: &Path, seed: u64) -> Outcome {
    let (sys, nu_m, mu_m) = load_measures(nu, mu)?;
    let verdict = choquet::choquet_below(&sys, &nu_m, &mu_m)?;
    let dual = choquet::choquet_below_dual_check(&sys, &nu_m, &mu_m, 200, seed)?;
    let mut v = to_value(&verdict);
    if let Value::Object(m) = &mut v {
        m.insert("dual_check".into(), to_value(&dual));
    }
    Ok((v, 0))
}

fn cmu(input: &Path) -> Outcome {
    let (sys, mu) = parse::<MeasureFile>(read_json(input)?, input)?.load()?;
    let sigma = mu.barycenter().clone();
    Ok((to_value(&choquet::c_mu(&sys, &sigma, &mu)?), 0))
}

fn unsteerable(input: &Path, s_lower: Option<f64>) -> Outcome {
    let (a, b, st) = parse::<BipartiteFile>(read_json(input)?, input)?.load()?;
    let verdict = bipartite::unsteerable_dichotomic(&a, &b, &st)?;
    let mut v = to_value(&verdict);
    if let (Value::Object(m), UnsteerableVerdict::Steerable { measurements, .. }) = (&mut v, &verdict) {
        m.insert("measurements".into(), json!(io::measurements_to_json(measurements)));
        let asm = bipartite::conditional_assemblage(&a, &b, &st, measurements)?;
        m.insert("robustness".into(), json!(steering::robustness(&b, &asm)?.value));
    }
    if let (Some(s), Value::Object(m)) = (s_lower, &mut v) {
        m.insert("sufficient".into(), to_value(&bipartite::unsteerable_sufficient(&a, &b, &st, s)?));
    }
    Ok((v, 0))
}

fn search(input: &Path, shapes: &[usize], budget: usize, seed: u64) -> Outcome {
    let (a, b, st) = parse::<BipartiteFile>(read_json(input)?, input)?.load()?;
    let out = bipartite::steerability_search(&a, &b, &st, shapes, budget, seed)?;
    let mut v = to_value(&out);
    if let (Value::Object(m), bipartite::SearchOutcome::SteerableBy { measurements, .. }) = (&mut v, &out) {
        m.insert("measurements".into(), json!(io::measurements_to_json(measurements)));
    }
    Ok((v, 0))
}

fn selftest(seed: u64, tolerance_scale: f64, only: &[u8]) -> Outcome {
    let opts = AcceptanceOptions { seed, tolerance_scale };
    let reports: Vec<_> = if only.is_empty() {
        acceptance::run_all(&opts)
    } else {
        only.iter().map(|&k| acceptance::run_one(k, &opts)).collect()
    };
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let passed = reports.iter().all(|r| r.passed);
    let v = json!({ "passed": passed, "criteria": reports });
    Ok((v, 0))
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.verb {
        Verb::Norm { input, kind } => norm(input, *kind),
        Verb::Lhs { input } => lhs(input),
        Verb::Robustness { input } => robustness(input),
        Verb::Witness { input } => witness(input),
        Verb::Choquet { nu, mu } => choquet_cmd(nu, mu, cli.seed),
        Verb::Cmu { input } => cmu(input),
        Verb::McCmu { n, samples } => Ok((to_value(&choquet::c_mu_monte_carlo(*n, *samples, cli.seed)?), 0)),
        Verb::Unsteerable { input, s_lower } => unsteerable(input, *s_lower),
        Verb::Search { input, shapes, budget } => search(input, shapes, *budget, cli.seed),
        Verb::Selftest { tolerance_scale, only } => selftest(cli.seed, *tolerance_scale, only),
    }
}

fn envelope(cli: &Cli, body: (&str, Value)) -> Value {
    let guards = Guards::current();
    json!({
        "tool": "gptsteer",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.verb.name(),
        "seed": cli.seed,
        "tolerances": {
            "marginal": MARGINAL_TOL,
            "barycenter": BARYCENTER_TOL,
            "bisection": BISECTION_TOL,
        },
        "guards": {
            "dim": guards.dim,
            "vertices": guards.vertices,
            "components": guards.components,
            "strategies": guards.strategies,
            "cmu_dim": guards.cmu_dim,
            "subsets": guards.subsets,
            "permutations": guards.permutations,
        },
        body.0: body.1,
    })
}

/// Plain-text rendering of the JSON document: one `path: value` line per
/// scalar leaf.
fn render_text(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                render_text(x, &p, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| x.is_number()) => {
            out.push_str(&format!("{prefix}: {v}\n"));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                render_text(x, &format!("{prefix}[{i}]"), out);
            }
        }
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

fn emit(cli: &Cli, doc: &Value) -> Result<(), String> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(doc).unwrap() + "\n",
        Format::Text => {
            let mut s = String::new();
            render_text(doc, "", &mut s);
            s
        }
    };
    match &cli.output {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = || -> (Value, u8) {
        match dispatch(&cli) {
            Ok((v, code)) => (envelope(&cli, ("result", v)), code),
            Err(f) => {
                let body = json!({ "kind": f.kind(), "message": f.message() });
                (envelope(&cli, ("error", body)), f.code())
            }
        }
    };
    let (doc, code) = match &cli.guards {
        Some(spec) => match Guards::parse(spec) {
            Ok(g) => g.scoped(run),
            Err(e) => {
                let f = Failure::Core(e);
                let body = json!({ "kind": f.kind(), "message": f.message() });
                (envelope(&cli, ("error", body)), f.code())
            }
        },
        None => run(),
    };
    if let Some(Value::Object(err)) = doc.get("error") {
        eprintln!("gptsteer: {}", err["message"].as_str().unwrap_or(""));
    }
    if let Err(e) = emit(&cli, &doc) {
        eprintln!("gptsteer: {e}");
        return ExitCode::from(EXIT_INVALID);
    }
    ExitCode::from(code)
}
