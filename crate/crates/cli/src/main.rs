use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cupcap_core::codes::{css_from, CodeConfig, CodeReport, Param, ReportOptions, Weight};
use cupcap_core::complex::{check_regularity, check_sparsity, product_complex, ComplexJson};
use cupcap_core::cupcap::{
    certify_with_form, logical_action_tensor, phase_eval, ChainJson, CupcapError, GateCertificate, GateConfig,
};
use cupcap_core::products::{cap_general, cup_general};
use cupcap_core::sheaf::{cohomology, homology, ChainKind, CochainKind, SheafJson};
use cupcap_core::subdivide::{build_a_sharp, subdivide, ApproxInverse, Pins, PinsJson};
use cupcap_core::{CellPoset, Chain, Cochain, Field, Sheaf, SheafData};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cupcap", version, about = "Sheaf cohomology, cup/cap products and transversal gate certificates")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "CUPCAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell complexes: validation, subdivision, products.
    #[command(subcommand)]
    Complex(ComplexCmd),
    /// Sheaf (co)homology in one degree.
    Homology(HomologyArgs),
    /// Cup products through an approximate inverse.
    Cup(CupArgs),
    /// Cap products through an approximate inverse.
    Cap(CapArgs),
    /// Tanner-sheaf codes on lifted complexes.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Multi-controlled-Z gate certificates.
    #[command(subcommand)]
    Gate(GateCmd),
}

#[derive(Subcommand)]
enum ComplexCmd {
    /// Regularity and sparsity report; exits 2 when the complex is not regular.
    Check {
        complex: PathBuf,
        #[arg(long)]
        sparsity_bound: Option<usize>,
    },
    /// Barycentric subdivision; cell counts, and the complex with `-o`.
    Subdivide {
        complex: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Cartesian product of two complexes.
    Product {
        left: PathBuf,
        right: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// A complex with coefficients: a sheaf file, or the constant sheaf `F_q^d`.
#[derive(Args)]
struct Coefficients {
    complex: PathBuf,
    #[arg(long)]
    sheaf: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    q: u32,
    #[arg(long, default_value_t = 1)]
    stalk_dim: usize,
}

#[derive(Args)]
struct HomologyArgs {
    #[command(flatten)]
    coeffs: Coefficients,
    #[arg(long)]
    degree: usize,
    /// Cohomology instead of homology.
    #[arg(long)]
    cohomology: bool,
}

#[derive(Args)]
struct CupArgs {
    #[command(flatten)]
    coeffs: Coefficients,
    /// Pins for the approximate inverse.
    #[arg(long)]
    pins: Option<PathBuf>,
    /// Left and right cochains.
    #[arg(num_args = 2, required_unless_present = "table")]
    cochains: Vec<PathBuf>,
    /// All nonzero products of indicator cochains of degree `p` and `q`.
    #[arg(long, num_args = 2, value_names = ["P", "Q"], conflicts_with = "cochains")]
    table: Option<Vec<usize>>,
}

#[derive(Args)]
struct CapArgs {
    #[command(flatten)]
    coeffs: Coefficients,
    #[arg(long)]
    pins: Option<PathBuf>,
    /// A cochain with values in `F ⊗ F`, then a chain.
    #[arg(num_args = 2, required_unless_present = "self_caps")]
    inputs: Vec<PathBuf>,
    /// `σ ⌢ σ` for every cell, on one-dimensional stalks.
    #[arg(long, conflicts_with = "inputs")]
    self_caps: bool,
}

#[derive(Subcommand)]
enum CodeCmd {
    /// Builds `X^t_H` and reports its cells.
    Build { config: PathBuf },
    /// CSS parameters of a code config, or of a complex with constant coefficients.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Block,
    Coordinate,
}

#[derive(Args)]
struct ParamsArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    /// Field for a bare complex.
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Enumerate at most `q^dim ≤ 2^cap` vectors for distances.
    #[arg(long, default_value_t = 24)]
    distance_cap: usize,
    #[arg(long, default_value_t = 16)]
    soundness_cap: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = WeightArg::Block)]
    weight: WeightArg,
    /// Exit 4 unless both distances are exact.
    #[arg(long)]
    exact: bool,
}

#[derive(Subcommand)]
enum GateCmd {
    /// Runs the construction and emits a certificate; exits 3 when it does not certify.
    Certify {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Treat the input as a certificate and recompute it.
        #[arg(long)]
        replay: bool,
    },
    /// The logical action tensor of `I_γ` on the constructed classes.
    Tensor { config: PathBuf },
    /// `tr(I_γ(...))` at the given states, or at the constructed classes.
    Phase {
        config: PathBuf,
        /// JSON array with one dense vector per slot.
        #[arg(long)]
        states: Option<PathBuf>,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

type Res<T> = Result<T, Failure>;

fn fail(code: u8, error: anyhow::Error) -> Failure {
    Failure { code, error }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_complex(path: &Path) -> anyhow::Result<Arc<CellPoset>> {
    let json: ComplexJson = read_json(path)?;
    Ok(Arc::new(CellPoset::from_json(&json).with_context(|| format!("invalid complex {}", path.display()))?))
}

fn load_sheaf(c: &Coefficients) -> anyhow::Result<SheafData> {
    let x = load_complex(&c.complex)?;
    match &c.sheaf {
        Some(p) => {
            let json: SheafJson = read_json(p)?;
            Ok(SheafData::from_json(&json, x).with_context(|| format!("invalid sheaf {}", p.display()))?)
        }
        None => Ok(SheafData::constant(x, Field::new(c.q)?, c.stalk_dim)),
    }
}

fn load_approx(x: Arc<CellPoset>, pins: Option<&Path>) -> anyhow::Result<ApproxInverse> {
    let pins = match pins {
        Some(p) => Pins::from_json(&read_json::<PinsJson>(p)?)?,
        None => Pins::default(),
    };
    Ok(build_a_sharp(x, pins)?)
}

fn cmd_complex(cmd: ComplexCmd) -> Res<()> {
    match cmd {
        ComplexCmd::Check { complex, sparsity_bound } => {
            let x = load_complex(&complex)?;
            let reg = check_regularity(&x);
            let sparsity = sparsity_bound.map(|b| check_sparsity(&x, b));
            let passed = reg.passed() && sparsity.as_ref().is_none_or(|s| s.passed);
            emit(
                &json!({
                    "cells": x.len(),
                    "counts": x.counts_by_dim(),
                    "euler_characteristic": x.euler_characteristic(),
                    "regularity": reg,
                    "sparsity": sparsity,
                    "passed": passed,
                }),
                None,
            )?;
            if !passed {
                return Err(fail(2, anyhow!("complex failed validation")));
            }
        }
        ComplexCmd::Subdivide { complex, out } => {
            let x = load_complex(&complex)?;
            let sub = subdivide(x.clone());
            if let Some(p) = &out {
                emit(&sub.poset().to_json(), Some(p))?;
            }
            emit(&json!({ "source_counts": x.counts_by_dim(), "counts": sub.poset().counts_by_dim() }), None)?;
        }
        ComplexCmd::Product { left, right, out } => {
            let (a, b) = (load_complex(&left)?, load_complex(&right)?);
            emit(&product_complex(&a, &b).to_json(), out.as_deref())?;
        }
    }
    Ok(())
}

fn cmd_homology(args: HomologyArgs) -> Res<()> {
    let f = load_sheaf(&args.coeffs)?;
    let (data, reps): (_, Vec<ChainJson>) = if args.cohomology {
        let h = cohomology(&f, args.degree).map_err(anyhow::Error::from)?;
        let reps = (0..h.betti).map(|k| ChainJson::from(&h.rep::<CochainKind>(k))).collect();
        (h, reps)
    } else {
        let h = homology(&f, args.degree).map_err(anyhow::Error::from)?;
        let reps = (0..h.betti).map(|k| ChainJson::from(&h.rep::<ChainKind>(k))).collect();
        (h, reps)
    };
    emit(&json!({ "degree": args.degree, "cohomology": args.cohomology, "betti": data.betti, "representatives": reps }), None)?;
    Ok(())
}

fn indicators(f: &SheafData, p: usize) -> Vec<(Value, Cochain)> {
    let x = f.base();
    if p > x.dim() {
        return Vec::new();
    }
    x.cells_of_dim(p)
        .iter()
        .flat_map(|&c| {
            (0..f.stalk_dim(c)).map(move |i| {
                let mut v = vec![0u8; f.stalk_dim(c)];
                v[i] = 1;
                (json!([c, i]), Cochain::from_entries(p, [(c, v)]))
            })
        })
        .collect()
}

fn cmd_cup(args: CupArgs) -> Res<()> {
    let f = load_sheaf(&args.coeffs)?;
    let approx = load_approx(f.base_arc().clone(), args.pins.as_deref())?;
    if let Some(pq) = args.table {
        let (left, right) = (indicators(&f, pq[0]), indicators(&f, pq[1]));
        let mut rows = Vec::new();
        for (ka, a) in &left {
            for (kb, b) in &right {
                let c = cup_general(&f, &f, &approx, a, b).map_err(anyhow::Error::from)?;
                if !c.is_zero() {
                    rows.push(json!({ "left": ka, "right": kb, "product": ChainJson::from(&c) }));
                }
            }
        }
        emit(&json!({ "nonzero": rows }), None)?;
    } else {
        let a: Cochain = read_json::<ChainJson>(&args.cochains[0])?.to_graded();
        let b: Cochain = read_json::<ChainJson>(&args.cochains[1])?.to_graded();
        a.validate(&f).context("left cochain")?;
        b.validate(&f).context("right cochain")?;
        let c = cup_general(&f, &f, &approx, &a, &b).map_err(anyhow::Error::from)?;
        emit(&ChainJson::from(&c), None)?;
    }
    Ok(())
}

fn cmd_cap(args: CapArgs) -> Res<()> {
    let f = load_sheaf(&args.coeffs)?;
    let x = f.base_arc().clone();
    let approx = load_approx(x.clone(), args.pins.as_deref())?;
    if args.self_caps {
        let mut rows = Vec::new();
        for s in x.cells() {
            if f.stalk_dim(s) != 1 {
                return Err(anyhow!("--self-caps needs one-dimensional stalks, cell {s} has {}", f.stalk_dim(s)).into());
            }
            let d = x.dim_of(s);
            let r = cap_general(
                &f,
                &f,
                &approx,
                &Cochain::from_entries(d, [(s, vec![1])]),
                &Chain::from_entries(d, [(s, vec![1])]),
            )
            .map_err(anyhow::Error::from)?;
            rows.push(json!({ "cell": s, "cap": ChainJson::from(&r), "vertex": approx.vertex(s) }));
        }
        emit(&json!({ "self_caps": rows }), None)?;
    } else {
        let a: Cochain = read_json::<ChainJson>(&args.inputs[0])?.to_graded();
        let c: Chain = read_json::<ChainJson>(&args.inputs[1])?.to_graded();
        c.validate(&f).context("chain")?;
        let r = cap_general(&f, &f, &approx, &a, &c).map_err(anyhow::Error::from)?;
        emit(&ChainJson::from(&r), None)?;
    }
    Ok(())
}

fn cmd_code(cmd: CodeCmd) -> Res<()> {
    match cmd {
        CodeCmd::Build { config } => {
            let cfg: CodeConfig = read_json(&config)?;
            let setup = cfg.build().map_err(anyhow::Error::from)?;
            let lifted = &setup.lifted;
            let x = lifted.complex();
            let predicted: Vec<usize> = (0..=x.dim()).map(|k| lifted.predicted_count(k)).collect();
            let counts = x.counts_by_dim();
            let regular = check_regularity(x).passed();
            emit(
                &json!({
                    "t": lifted.t(),
                    "q": setup.field.q(),
                    "sheets": lifted.group().order(),
                    "x1_counts": setup.x1.poset().counts_by_dim(),
                    "base_counts": lifted.base().counts_by_dim(),
                    "counts": counts,
                    "predicted_counts": predicted,
                    "regular": regular,
                    "local_code_checks": setup.local_codes.iter().map(|h| h.check_dim()).collect::<Vec<_>>(),
                }),
                None,
            )?;
            if counts != predicted || !regular {
                return Err(fail(2, anyhow!("lifted complex failed validation")));
            }
        }
        CodeCmd::Params(args) => {
            let raw: Value = read_json(&args.input)?;
            let code = if raw.get("group").is_some() {
                let cfg: CodeConfig = serde_json::from_value(raw).context("code config")?;
                let setup = cfg.build().map_err(anyhow::Error::from)?;
                let cover = setup.lifted.cover().clone();
                let f = cover.pullback(setup.product().map_err(anyhow::Error::from)?).map_err(anyhow::Error::from)?;
                css_from(&f, args.degree).map_err(anyhow::Error::from)?
            } else {
                let json: ComplexJson = serde_json::from_value(raw).context("complex")?;
                let x = Arc::new(CellPoset::from_json(&json).context("invalid complex")?);
                let f = SheafData::constant(x, Field::new(args.q).map_err(anyhow::Error::from)?, 1);
                css_from(&f, args.degree).map_err(anyhow::Error::from)?
            };
            let opts = ReportOptions {
                distance_cap: args.distance_cap,
                soundness_cap: args.soundness_cap,
                trials: args.trials,
                seed: args.seed,
                soundness_weight: match args.weight {
                    WeightArg::Block => Weight::Block,
                    WeightArg::Coordinate => Weight::Coordinate,
                },
            };
            let report = CodeReport::compute(&code, &opts);
            let d = |p: &Param<_>| match p {
                Param::Exact(d) | Param::UpperBound(d) => Some(cupcap_core::codes::Distance::get(d, Weight::Coordinate)),
                _ => None,
            };
            let exact = report.d_x.exact().is_some() && report.d_z.exact().is_some();
            let dist = match (d(&report.d_x), d(&report.d_z)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            let label = match dist {
                Some(d) if exact => format!("[[{}, {}, {d}]]", report.n, report.k),
                Some(d) => format!("[[{}, {}, ≤{d}]]", report.n, report.k),
                None => format!("[[{}, {}, ?]]", report.n, report.k),
            };
            emit(&json!({ "parameters": label, "report": report }), None)?;
            if args.exact && !exact {
                return Err(fail(4, anyhow!("distance enumeration exceeds the cap of 2^{}", args.distance_cap)));
            }
        }
    }
    Ok(())
}

fn certify_error(e: CupcapError) -> Failure {
    let code = match e {
        CupcapError::EvenSheets(_) | CupcapError::PinFailure(_) | CupcapError::NotCocycle => 3,
        _ => 2,
    };
    fail(code, anyhow::Error::from(e))
}

fn summary(cert: &GateCertificate) -> String {
    let mut s = format!(
        "t = {}, r = {}, s = {}, sheets = {}, pairing = {}, prediction {}, lift checks cup/cap {}/{}",
        cert.t,
        cert.r,
        cert.s,
        cert.sheets,
        cert.pairing,
        if cert.prediction_matches { "matches" } else { "differs" },
        cert.lift_checks.cup,
        cert.lift_checks.cap
    );
    if let Some(f) = &cert.form {
        s += &format!(
            ", form: {} entries, max fan-in {} (bound {}), logical value {}, invariance {}/{} comparisons held",
            f.entries,
            f.fan_in.iter().max().copied().unwrap_or(0),
            f.declared_bound,
            f.logical_value,
            f.invariance.comparisons - f.invariance.failures,
            f.invariance.comparisons
        );
    }
    s + &format!(", {} ms: {}", cert.elapsed_ms, if cert.certified { "CERTIFIED" } else { "NOT CERTIFIED" })
}

fn cmd_gate(cmd: GateCmd) -> Res<()> {
    match cmd {
        GateCmd::Certify { config, out, replay } => {
            if replay {
                let cert: GateCertificate = read_json(&config)?;
                let same = cert.replay().map_err(certify_error)?;
                emit(&json!({ "reproduces": same }), out.as_deref())?;
                if !same {
                    return Err(fail(3, anyhow!("replay differs from the stored certificate")));
                }
                return Ok(());
            }
            let cfg: GateConfig = read_json(&config)?;
            let (cert, _) = certify_with_form(&cfg).map_err(certify_error)?;
            emit(&cert, out.as_deref())?;
            eprintln!("{}", summary(&cert));
            if !cert.certified {
                return Err(fail(3, anyhow!("certificate did not certify")));
            }
        }
        GateCmd::Tensor { config } => {
            let mut cfg: GateConfig = read_json(&config)?;
            cfg.expand_form = true;
            let (cert, form) = certify_with_form(&cfg).map_err(certify_error)?;
            let gf = form.ok_or_else(|| anyhow!("form was not expanded"))?;
            let tensor = logical_action_tensor(&gf.form, &gf.reps).map_err(anyhow::Error::from)?;
            emit(
                &json!({
                    "slots": gf.form.slots(),
                    "entries": gf.form.entries().len(),
                    "fan_in": gf.form.fan_in(),
                    "declared_bound": gf.form.declared_bound(),
                    "digest": gf.form.digest(),
                    "tensor": tensor,
                }),
                None,
            )?;
            if tensor.is_zero() || !cert.certified {
                return Err(fail(3, anyhow!("logical action is trivial or the certificate failed")));
            }
        }
        GateCmd::Phase { config, states } => {
            let mut cfg: GateConfig = read_json(&config)?;
            cfg.expand_form = true;
            let (_, form) = certify_with_form(&cfg).map_err(certify_error)?;
            let gf = form.ok_or_else(|| anyhow!("form was not expanded"))?;
            let vectors: Vec<Vec<u8>> = match &states {
                Some(p) => read_json(p)?,
                None => gf.reps.iter().map(|m| m.col(0)).collect(),
            };
            let slices: Vec<&[u8]> = vectors.iter().map(Vec::as_slice).collect();
            let value = gf.form.eval(&slices).map_err(anyhow::Error::from)?;
            let phase = phase_eval(&gf.form, &slices).map_err(anyhow::Error::from)?;
            emit(&json!({ "value": value, "trace": phase, "sign": if phase == 1 { -1 } else { 1 } }), None)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Res<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be positive").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(anyhow::Error::from)?;
    }
    match cli.command {
        Command::Complex(c) => cmd_complex(c),
        Command::Homology(a) => cmd_homology(a),
        Command::Cup(a) => cmd_cup(a),
        Command::Cap(a) => cmd_cap(a),
        Command::Code(c) => cmd_code(c),
        Command::Gate(c) => cmd_gate(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
