use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chromagap::colouring::{build_transition_matrix_with, eta_apply, line_digraph};
use chromagap::csp::{augment_k, classify_label_cover, isat_value, parse_rational, sat_optimum, to_structures, CspInstance, CspJson};
use chromagap::dkkms::{build_rho1, build_rho2, game_csp, game_instance, rho_quantum_transfer, QuestionSet, XorSystem};
use chromagap::dmr::{dmr_pipeline, DmrOptions};
use chromagap::pultr::{adjunction_oracle, central_apply, left_apply, template_predicates, PultrTemplate, TemplateJson};
use chromagap::qop::{qsat, verify_assignment_with, AssignmentJson, QsatValue, QuantumAssignment, VerifyOptions};
use chromagap::relstruct::{
    chromatic_number_with_budget, find_homomorphism, independence_number, Chromatic, RelStructure, StructureJson,
};
use chromagap_cli::{pipeline_thm14_machinery, pipeline_thm15, Config};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "chromagap", version, about = "Quantum chromatic gaps from label-cover reductions")]
struct Cli {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Budget {
    /// Node budget for exact searches
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a homomorphism X → Y
    Hom { x: PathBuf, y: PathBuf, #[command(flatten)] budget: Budget },
    /// Exact chromatic number up to a cap
    Chromatic { graph: PathBuf, #[arg(long, default_value_t = 8)] cap: usize, #[command(flatten)] budget: Budget },
    /// Exact independence number
    Indep { graph: PathBuf, #[command(flatten)] budget: Budget },
    /// Classical value of a CSP with an optimal assignment
    Sat { csp: PathBuf, #[command(flatten)] budget: Budget },
    /// t-induced value of a label-cover instance
    Isat { csp: PathBuf, #[arg(long)] t: usize, #[command(flatten)] budget: Budget },
    /// Bipartite, projective, d-to-1 and d-to-d structure
    Classify { csp: PathBuf },
    /// Add k copies of each vertex with the identity constraints
    Augment { csp: PathBuf, #[arg(long)] k: usize, #[command(flatten)] out: Output },
    /// Verify a quantum assignment, either X ⇝ᵏ Y or against a CSP
    Qverify(Qverify),
    /// Quantum value of a CSP under an assignment
    Qsat { csp: PathBuf, assignment: PathBuf },
    /// Pultr functors of a template
    Pultr {
        #[arg(value_enum)]
        op: PultrOp,
        template: PathBuf,
        /// Input structure (and target for `check`)
        structures: Vec<PathBuf>,
        #[command(flatten)]
        budget: Budget,
        #[command(flatten)]
        out: Output,
    },
    /// Line digraph δX
    Linedigraph { graph: PathBuf, #[command(flatten)] out: Output },
    /// The colouring reduction ηΦ of a d-to-d instance
    Eta { csp: PathBuf, #[arg(long)] max_vertices: Option<usize>, #[command(flatten)] out: Output },
    /// Certify the transition matrix on [2d]^d
    Transition { #[arg(long, default_value_t = 2)] d: usize },
    /// The label-cover reduction of a 3XOR system
    Rho {
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        ell: usize,
        /// Emit the 1-to-1/2-to-2 intermediate instance instead
        #[arg(long)]
        first: bool,
        #[command(flatten)]
        out: Output,
    },
    /// The n-fold game of a 3XOR system as a CSP
    Game {
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Ask only legitimate tuples
        #[arg(long)]
        legitimate: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Carry a game assignment onto the label-cover reduction
    RhoTransfer {
        system: PathBuf,
        assignment: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        ell: usize,
        #[command(flatten)]
        out: Output,
    },
    /// The three label-cover stages on a d-to-1 instance
    Dmr {
        csp: PathBuf,
        #[arg(long, default_value = "1/2")]
        eps: String,
        #[arg(long, default_value_t = 2)]
        t: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Assignment to carry along, at least 2k-compatible
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Replace (h, ℓ, m), e.g. `12,1,1`
        #[arg(long)]
        stage_parameters: Option<String>,
        #[command(flatten)]
        out: Output,
    },
    /// End-to-end runs
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct Qverify {
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["x", "y"])]
    csp: Option<PathBuf>,
    #[arg(long)]
    assignment: PathBuf,
    /// Defaults to the assignment's own k
    #[arg(long)]
    k: Option<usize>,
    /// Check this many seeded random constraints and pairs
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum PultrOp {
    Gamma,
    Lambda,
    Check,
    Flags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Thm15,
    Thm14,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(value_enum)]
    which: Which,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Verify every constraint instead of a sample
    #[arg(long)]
    full: bool,
    /// Line-digraph iterations for thm14
    #[arg(long, default_value_t = 2)]
    iterations: usize,
    /// Directory for the report and witness files
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn read<T: DeserializeOwned>(p: &Path) -> Result<T> {
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn structure(p: &Path) -> Result<RelStructure> {
    Ok(RelStructure::from_json(&read::<StructureJson>(p)?)?)
}

fn csp(p: &Path) -> Result<CspInstance> {
    Ok(CspInstance::from_json(&read::<CspJson>(p)?)?)
}

fn assignment(p: &Path) -> Result<QuantumAssignment> {
    Ok(QuantumAssignment::from_json(&read::<AssignmentJson>(p)?)?)
}

fn system(p: &Path) -> Result<XorSystem> {
    Ok(XorSystem::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?)
}

fn emit<T: Serialize>(out: &Output, v: &T) -> Result<()> {
    match &out.out {
        Some(p) => std::fs::write(p, serde_json::to_string(v)?).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{}", serde_json::to_string_pretty(v)?);
            Ok(())
        }
    }
}

fn print(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
}

fn chromatic_json(c: Chromatic) -> serde_json::Value {
    match c {
        Chromatic::Exactly(n) => json!(n),
        Chromatic::AboveCap => json!("above cap"),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = Config::load(cli.config.as_deref())?;
    let budget = |b: &Budget| b.budget.or(cfg.budget);
    match cli.command {
        Command::Hom { x, y, budget: b } => {
            let (x, y) = (structure(&x)?, structure(&y)?);
            match find_homomorphism(&x, &y, budget(&b))? {
                Some(h) => print(json!({ "homomorphism": h.to_names(&x, &y) })),
                None => print(json!({ "homomorphism": null })),
            }
        }
        Command::Chromatic { graph, cap, budget: b } => {
            let g = structure(&graph)?;
            print(json!({ "chromatic_number": chromatic_json(chromatic_number_with_budget(&g, cap, budget(&b))?) }));
        }
        Command::Indep { graph, budget: b } => {
            print(json!({ "independence_number": independence_number(&structure(&graph)?, budget(&b))? }));
        }
        Command::Sat { csp: p, budget: b } => {
            let phi = csp(&p)?;
            let (v, f) = sat_optimum(&phi, budget(&b))?;
            let labels: Vec<&str> = f.iter().map(|&l| phi.alphabet()[l as usize].as_str()).collect();
            print(json!({ "sat": v.to_string(), "assignment": phi.variables().iter().zip(labels).collect::<std::collections::BTreeMap<_, _>>() }));
        }
        Command::Isat { csp: p, t, budget: b } => {
            print(json!({ "isat": isat_value(&csp(&p)?, t, budget(&b))?.to_string(), "t": t }));
        }
        Command::Classify { csp: p } => {
            let phi = csp(&p)?;
            let prof = classify_label_cover(&phi)?;
            let names = |vs: &[u32]| vs.iter().map(|&v| phi.variables()[v as usize].clone()).collect::<Vec<_>>();
            let labels = |ls: &[u32]| ls.iter().map(|&l| phi.alphabet()[l as usize].clone()).collect::<Vec<_>>();
            print(json!({
                "bipartite": prof.bipartite.as_ref().map(|(a, b)| json!({ "left": names(a), "right": names(b) })),
                "projective": prof.projective.as_ref().map(|(a, b)| json!({ "left": labels(a), "right": labels(b) })),
                "d_to_1": prof.d_to_1,
                "d_to_d": prof.d_to_d.as_ref().map(|dd| json!({ "d": dd.d, "m": dd.m })),
            }));
        }
        Command::Augment { csp: p, k, out } => emit(&out, &augment_k(&csp(&p)?, k).to_json())?,
        Command::Qverify(a) => {
            let q = assignment(&a.assignment)?;
            let (x, y) = match (&a.csp, &a.x, &a.y) {
                (Some(c), _, _) => to_structures(&csp(c)?),
                (None, Some(x), Some(y)) => (structure(x)?, structure(y)?),
                _ => bail!("give --csp or both --x and --y"),
            };
            let opts = match a.sample {
                Some(n) => VerifyOptions::sampled(n, a.seed),
                None => VerifyOptions::full(),
            };
            let rep = verify_assignment_with(&x, &y, &q, a.k.unwrap_or(q.k), &opts)?;
            print(json!({
                "passed": rep.passed(),
                "summary": rep.summary(),
                "product_violations": rep.product_violations.iter().map(|v| json!({
                    "symbol": v.symbol, "vars": v.vars, "labels": v.labels,
                })).collect::<Vec<_>>(),
                "commutation_violations": rep.commutation_violations.iter().map(|v| json!({
                    "vars": [v.vars.0, v.vars.1], "labels": [v.labels.0, v.labels.1], "distance": v.distance,
                })).collect::<Vec<_>>(),
                "pvm_failures": rep.pvm_failures.iter().map(|(v, _)| v).collect::<Vec<_>>(),
            }));
            return Ok(rep.passed());
        }
        Command::Qsat { csp: p, assignment: a } => match qsat(&csp(&p)?, &assignment(&a)?)? {
            QsatValue::Real(r) => print(json!({ "qsat": r.to_string() })),
            QsatValue::NonReal { re, im } => print(json!({ "qsat": null, "re": re.to_string(), "im": im.to_string() })),
        },
        Command::Pultr { op, template, structures, budget: b, out } => {
            let t = PultrTemplate::from_json(&read::<TemplateJson>(&template)?)?;
            let inputs = structures.iter().map(|p| structure(p)).collect::<Result<Vec<_>>>()?;
            match (op, inputs.as_slice()) {
                (PultrOp::Gamma, [x]) => emit(&out, &central_apply(&t, x, budget(&b))?.structure.to_json())?,
                (PultrOp::Lambda, [x]) => emit(&out, &left_apply(&t, x)?.structure.to_json())?,
                (PultrOp::Check, [x, y]) => {
                    let (l, g) = adjunction_oracle(&t, x, y, budget(&b))?;
                    print(json!({ "lambda_side": l, "gamma_side": g, "agree": l == g }));
                    return Ok(l == g);
                }
                (PultrOp::Flags, []) => {
                    let f = template_predicates(&t);
                    print(json!({ "connected": f.connected, "faithful": f.faithful, "diameter": f.diameter }));
                }
                _ => bail!("wrong number of structures for this operation"),
            }
        }
        Command::Linedigraph { graph, out } => emit(&out, &line_digraph(&structure(&graph)?)?.to_json())?,
        Command::Eta { csp: p, max_vertices, out } => {
            let phi = csp(&p)?;
            let d = classify_label_cover(&phi)?.d_to_d.map(|dd| dd.d).context("instance is not d-to-d")?;
            let t = build_transition_matrix_with(d, &cfg.tolerances)?;
            emit(&out, &eta_apply(&phi, &t, max_vertices.or(cfg.max_vertices))?.to_json())?
        }
        Command::Transition { d } => {
            let t = build_transition_matrix_with(d, &cfg.tolerances)?;
            let s = t.spectrum();
            print(json!({
                "d": d,
                "states": t.len(),
                "row_residual": t.row_residual(),
                "unit_multiplicity": s.unit_multiplicity,
                "second_modulus": s.second_modulus,
                "spectral_gap": 1.0 - s.second_modulus,
            }));
        }
        Command::Rho { system: p, n, ell, first, out } => {
            let s = system(&p)?;
            let r = build_rho1(&s, n, ell, cfg.max_vertices)?;
            let inst = if first { r.instance } else { build_rho2(&r)? };
            emit(&out, &inst.to_json())?
        }
        Command::Game { system: p, n, legitimate, out } => {
            let qs = if legitimate { QuestionSet::Legitimate } else { QuestionSet::All };
            let g = game_instance(&system(&p)?, n, qs, cfg.max_vertices)?;
            emit(&out, &game_csp(&g)?.to_json())?
        }
        Command::RhoTransfer { system: p, assignment: a, n, ell, out } => {
            let s = system(&p)?;
            let r = build_rho1(&s, n, ell, cfg.max_vertices)?;
            emit(&out, &rho_quantum_transfer(&s, &r, &assignment(&a)?)?.to_json())?
        }
        Command::Dmr { csp: p, eps, t, k, assignment: a, stage_parameters, out } => {
            let phi = csp(&p)?;
            let eps = parse_rational(&eps)?;
            let q = a.map(|a| assignment(&a)).transpose()?;
            let stage_parameters = match stage_parameters {
                None => None,
                Some(s) => {
                    let v: Vec<u64> = s.split(',').map(|x| x.trim().parse()).collect::<std::result::Result<_, _>>()?;
                    let [h, l, m] = v[..] else { bail!("--stage-parameters takes h,ℓ,m") };
                    Some((h, l, m))
                }
            };
            let opts = DmrOptions { stage_parameters, max_vertices: cfg.max_vertices, max_constraints: cfg.max_vertices };
            let (inst, w, rep) = dmr_pipeline(&phi, &eps, k, t, q.as_ref(), &opts)?;
            emit(
                &out,
                &json!({ "report": rep.to_json(), "instance": inst.to_json(), "assignment": w.map(|w| w.to_json()) }),
            )?
        }
        Command::Pipeline(a) => {
            let mut cfg = cfg.clone();
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if a.budget.is_some() {
                cfg.budget = a.budget;
            }
            cfg.full |= a.full;
            let rep = match a.which {
                Which::Thm15 => pipeline_thm15(&cfg, a.out_dir.as_deref())?,
                Which::Thm14 => pipeline_thm14_machinery(&cfg, a.iterations, a.out_dir.as_deref())?,
            };
            print!("{}", rep.summary());
            return Ok(rep.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
