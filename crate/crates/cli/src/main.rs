use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use qtext::classify::{decide_translatable, decide_translatable_q0, Decision};
use qtext::generate::{gen_text, GenMode, GenSpec};
use qtext::graph::{graph_of_text, parameterize, recognize, Recognition, SimpleGraph, WellSplitShape};
use qtext::synth::{clone_classical, realize_graph, translate_with_decision, SynthError, TranslateOptions, DEFAULT_BUDGET};
use qtext::text::{embed_text, null_index_set, text_properties, Text, TextProperties};
use qtext::translation::{check_witness, TranslationWitness};

const EXIT_OK: u8 = 0;
const EXIT_UNTRANSLATABLE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_SEARCH: u8 = 4;

/// Decide translatability of quantum texts and build verified translation witnesses.
///
/// Exit codes: 0 success / translatable, 1 untranslatable, 2 invalid input,
/// 3 verification failed, 4 search failure.
#[derive(Parser, Debug)]
#[command(name = "qtext", version)]
struct Cli {
    /// Report errors on stderr as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a text file and report its properties.
    Validate(InputArgs),
    /// Write the orthogonality graph of a text.
    Graph(InputArgs),
    /// Recognize a graph: class, splitting, forbidden subgraph, shape.
    Analyze(GraphArgs),
    /// Decide whether a text is translatable.
    Classify(ClassifyArgs),
    /// Build a verified translation witness for a text.
    Translate(TranslateArgs),
    /// Build a translatable text with a given orthogonality graph, plus its witness.
    Realize(RealizeArgs),
    /// Check a witness against a text.
    Verify(VerifyArgs),
    /// Generate a text from a generator spec.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Input text file.
    #[arg(short, long)]
    input: PathBuf,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Input graph file.
    #[arg(short, long)]
    graph: PathBuf,
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    io: InputArgs,
    /// Only allow translations with Q = 0.
    #[arg(long)]
    q0: bool,
}

#[derive(Args, Debug)]
struct TranslateArgs {
    #[command(flatten)]
    io: InputArgs,
    /// Random seed for the search.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective evaluations allowed to the search.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Only allow translations with Q = 0.
    #[arg(long)]
    q0: bool,
    /// Force the sign of Q: `+` or `-`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_sign)]
    sign: Option<i8>,
}

#[derive(Args, Debug)]
struct RealizeArgs {
    /// Input graph file.
    #[arg(short, long)]
    graph: PathBuf,
    /// Output text file. Without -o and -w both go to stdout as one object.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output witness file.
    #[arg(short, long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Text file.
    #[arg(short, long)]
    input: PathBuf,
    /// Witness file.
    #[arg(short, long)]
    witness: PathBuf,
    /// Output report file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Generator spec file. Alternatively give --mode and friends.
    #[arg(short, long, conflicts_with_all = ["mode", "n", "z", "graph"])]
    input: Option<PathBuf>,
    /// Output text file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// random_efficient, from_graph, uniform or untranslatable4.
    #[arg(long, value_parser = parse_mode, required_unless_present = "input")]
    mode: Option<GenMode>,
    #[arg(short, long)]
    n: Option<usize>,
    /// Off-diagonal value for uniform texts.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    /// Graph file for from_graph.
    #[arg(short, long)]
    graph: Option<PathBuf>,
    /// Seed (default 0, or the spec file's seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_sign(s: &str) -> Result<i8, String> {
    match s {
        "+" | "+1" | "1" => Ok(1),
        "-" | "-1" => Ok(-1),
        _ => Err(format!("expected + or -, got {s:?}")),
    }
}

fn parse_mode(s: &str) -> Result<GenMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown mode {s:?}"))
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Failure { code: EXIT_INVALID, kind: "invalid_input", message: message.to_string() }
    }
}

type Outcome = Result<u8, Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let data = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&data).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    let io_err = |e: io::Error| Failure { code: EXIT_INVALID, kind: "io", message: e.to_string() };
    match path {
        Some(p) => fs::write(p, s).map_err(|e| io_err(io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => io::stdout().lock().write_all(s.as_bytes()).map_err(io_err),
    }
}

fn synth_failure(e: SynthError) -> Failure {
    let (code, kind) = match &e {
        SynthError::SearchBudgetExhausted { .. } => (EXIT_SEARCH, "search_budget_exhausted"),
        SynthError::VerificationFailed(_) => (EXIT_SEARCH, "verification_failed"),
        SynthError::QTooLarge(_) | SynthError::BadOverlapPattern(_) => (EXIT_SEARCH, "construction_failed"),
        SynthError::SignNotAdmissible(_) => (EXIT_UNTRANSLATABLE, "sign_not_admissible"),
        SynthError::NotWellSplit | SynthError::Untranslatable(_) => (EXIT_UNTRANSLATABLE, "untranslatable"),
        _ => (EXIT_INVALID, "invalid_input"),
    };
    Failure { code, kind, message: e.to_string() }
}

#[derive(Serialize)]
struct ValidateReport {
    n: usize,
    rank: usize,
    #[serde(flatten)]
    properties: TextProperties,
    null_pairs: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    #[serde(flatten)]
    recognition: Recognition,
    shape: Option<WellSplitShape>,
}

#[derive(Serialize)]
struct Realized<'a> {
    text: &'a Text,
    witness: &'a TranslationWitness,
}

fn decision_code(d: &Decision) -> u8 {
    if d.translatable {
        EXIT_OK
    } else {
        EXIT_UNTRANSLATABLE
    }
}

fn validate(a: &InputArgs) -> Outcome {
    let t: Text = read_json(&a.input)?;
    let report = ValidateReport {
        n: t.n(),
        rank: embed_text(&t, false).rank(),
        properties: text_properties(&t),
        null_pairs: null_index_set(&t).pairs.into_iter().collect(),
    };
    emit(&report, a.output.as_deref())?;
    Ok(EXIT_OK)
}

fn graph(a: &InputArgs) -> Outcome {
    let t: Text = read_json(&a.input)?;
    emit(&graph_of_text(&t), a.output.as_deref())?;
    Ok(EXIT_OK)
}

fn analyze(a: &GraphArgs) -> Outcome {
    let g: SimpleGraph = read_json(&a.graph)?;
    let report = AnalyzeReport { recognition: recognize(&g), shape: parameterize(&g).ok() };
    emit(&report, a.output.as_deref())?;
    Ok(EXIT_OK)
}

fn classify(a: &ClassifyArgs) -> Outcome {
    let t: Text = read_json(&a.io.input)?;
    let d = if a.q0 { decide_translatable_q0(&t) } else { decide_translatable(&t).map_err(Failure::invalid)? };
    emit(&d, a.io.output.as_deref())?;
    Ok(decision_code(&d))
}

fn translate(a: &TranslateArgs) -> Outcome {
    let t: Text = read_json(&a.io.input)?;
    if a.q0 {
        if a.sign.is_some() {
            return Err(Failure::invalid("--sign cannot be combined with --q0"));
        }
        let d = decide_translatable_q0(&t);
        if !d.translatable {
            emit(&d, None)?;
            return Ok(EXIT_UNTRANSLATABLE);
        }
        let w = clone_classical(&t, None).map_err(synth_failure)?;
        emit(&w, a.io.output.as_deref())?;
        return Ok(EXIT_OK);
    }
    let opts = TranslateOptions { seed: a.seed, budget: a.budget, sign: a.sign, ..TranslateOptions::default() };
    match translate_with_decision(&t, &opts) {
        Ok((w, _)) => {
            emit(&w, a.io.output.as_deref())?;
            Ok(EXIT_OK)
        }
        // The refusal goes to stdout, never to the witness path.
        Err(SynthError::Untranslatable(d)) => {
            emit(&*d, None)?;
            Ok(EXIT_UNTRANSLATABLE)
        }
        Err(e) => Err(synth_failure(e)),
    }
}

fn realize(a: &RealizeArgs) -> Outcome {
    let g: SimpleGraph = read_json(&a.graph)?;
    let r = realize_graph(&g, a.seed).map_err(synth_failure)?;
    if a.output.is_none() && a.witness.is_none() {
        emit(&Realized { text: &r.text, witness: &r.witness }, None)?;
    } else {
        if let Some(p) = &a.output {
            emit(&r.text, Some(p))?;
        }
        if let Some(p) = &a.witness {
            emit(&r.witness, Some(p))?;
        }
    }
    Ok(EXIT_OK)
}

fn verify(a: &VerifyArgs) -> Outcome {
    let t: Text = read_json(&a.input)?;
    let w: TranslationWitness = read_json(&a.witness)?;
    let report = check_witness(&t, &w).map_err(|e| Failure { code: EXIT_VERIFY, kind: "verification_failed", message: e.to_string() })?;
    let pass = report.pass;
    emit(&report, a.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn gen(a: &GenArgs) -> Outcome {
    let mut spec: GenSpec = match &a.input {
        Some(p) => read_json(p)?,
        None => GenSpec {
            mode: a.mode.expect("clap enforces --mode"),
            n: a.n.unwrap_or(0),
            seed: 0,
            z: a.z,
            graph: a.graph.as_deref().map(read_json).transpose()?,
        },
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let t = gen_text(&spec).map_err(Failure::invalid)?;
    emit(&t, a.output.as_deref())?;
    Ok(EXIT_OK)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Graph(a) => graph(a),
        Command::Analyze(a) => analyze(a),
        Command::Classify(a) => classify(a),
        Command::Translate(a) => translate(a),
        Command::Realize(a) => realize(a),
        Command::Verify(a) => verify(a),
        Command::Gen(a) => gen(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if cli.json {
                let v = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
                eprintln!("{v}");
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
