use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use xorgame::game::{bias_of, chsh_n, simulate_rounds};
use xorgame::rigidity::{self, CertifyOptions};
use xorgame::sdpsolve::{certify_upper, solve_bias, SolveOptions};
use xorgame::{clifford, rounding, BipartiteState, QuantumStrategy, VectorStrategy, XorGame};

#[derive(Parser)]
#[command(name = "xorgame", version, about = "Optimal and low-entanglement strategies for XOR games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a game matrix as JSON.
    Game(GameArgs),
    /// Solve the vector relaxation of a game's bias.
    Solve(SolveArgs),
    /// Turn a vector strategy into observables on a maximally entangled state.
    Lift(LiftArgs),
    /// The optimal CHSH(n) strategy, optionally detuned.
    Slofstra(SlofstraArgs),
    /// Randomized dimension reduction; writes one CSV row per trial.
    Round(RoundArgs),
    /// Play rounds of a game with Born-rule sampling.
    Simulate(SimulateArgs),
    /// Per-pair CHSH(n) biases and residual norms.
    Report(ReportArgs),
    /// Qubit-pair extraction and entropy certificate for CHSH(n).
    Certify(CertifyArgs),
    /// Entanglement entropy of a state or strategy file.
    Entropy(EntropyArgs),
}

#[derive(Args)]
struct Output {
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GameSource {
    /// Game JSON file.
    #[arg(long, conflicts_with = "chsh_n")]
    game: Option<PathBuf>,
    /// Use CHSH(n) instead of a game file.
    #[arg(long)]
    chsh_n: Option<usize>,
}

#[derive(Args)]
struct GameArgs {
    #[arg(long, required_unless_present = "from_csv", conflicts_with = "from_csv")]
    chsh_n: Option<usize>,
    /// Headerless CSV of matrix rows; rescaled so absolute entries sum to 1.
    #[arg(long)]
    from_csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SolveArgs {
    game: PathBuf,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = xorgame::sdpsolve::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = xorgame::sdpsolve::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[arg(long, default_value_t = xorgame::sdpsolve::DEFAULT_RESTARTS)]
    restarts: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct LiftArgs {
    vectors: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SlofstraArgs {
    #[arg(long)]
    n: usize,
    /// Schmidt angle of every EPR pair; π/4 is maximally entangled.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    theta: f64,
    /// Rotate each A_i towards A_{i+1} by this angle.
    #[arg(long, default_value_t = 0.0)]
    tilt: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct RoundArgs {
    strategy: PathBuf,
    #[command(flatten)]
    source: GameSource,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the best trial lifted to a quantum strategy.
    #[arg(long)]
    lift_out: Option<PathBuf>,
    /// CSV path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    strategy: PathBuf,
    #[command(flatten)]
    source: GameSource,
    #[arg(long, default_value_t = 100_000)]
    rounds: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ReportArgs {
    strategy: PathBuf,
    #[arg(long)]
    n: usize,
    /// Write residual matrices to `<prefix>-<name>.csv`.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CertifyArgs {
    strategy: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the pair residual matrix to `<prefix>-pairResiduals.csv`.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct EntropyArgs {
    /// A state file or a strategy file.
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

enum Failure {
    Io(String),
    Schema(String),
    Core(xorgame::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Core(xorgame::Error::Contract(_)) => 3,
            Failure::Core(xorgame::Error::Capacity(_)) => 4,
            Failure::Core(xorgame::Error::Solver(_)) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => format!("io error: {m}"),
            Failure::Schema(m) => format!("schema error: {m}"),
            Failure::Core(e) => e.to_string(),
        }
    }
}

impl From<xorgame::Error> for Failure {
    fn from(e: xorgame::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Reads input files and remembers their bytes for the provenance hash.
#[derive(Default)]
struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Outcome<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.hasher.update(&bytes);
        Ok(bytes)
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Outcome<T> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
    }

    fn game(&mut self, src: &GameSource, fallback: &QuantumStrategy) -> Outcome<XorGame> {
        if let Some(p) = &src.game {
            return self.json(p);
        }
        if let Some(n) = src.chsh_n {
            return Ok(chsh_n(n)?);
        }
        // a strategy with n and n(n−1) questions is read as a CHSH(n) strategy
        let n = fallback.alice().len();
        if n >= 2 && fallback.bob().len() == n * (n - 1) {
            return Ok(chsh_n(n)?);
        }
        Err(Failure::Schema("strategy is not CHSH(n)-shaped; pass --game or --chsh-n".into()))
    }

    fn hash(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

struct Provenance {
    command: &'static str,
    seed: Option<u64>,
    inputs_hash: String,
}

fn with_provenance(payload: impl Serialize, prov: &Provenance) -> Outcome<Value> {
    let value = serde_json::to_value(payload).map_err(|e| Failure::Schema(e.to_string()))?;
    let mut map = match value {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("tool-version".into(), env!("CARGO_PKG_VERSION").into());
    map.insert("command".into(), prov.command.into());
    map.insert("seed".into(), prov.seed.map_or(Value::Null, Value::from));
    map.insert("inputs-hash".into(), prov.inputs_hash.clone().into());
    Ok(Value::Object(map))
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Outcome<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(bytes).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn emit_json(out: Option<&Path>, payload: impl Serialize, prov: &Provenance) -> Outcome<()> {
    let value = with_provenance(payload, prov)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Schema(e.to_string()))?;
    text.push('\n');
    write_bytes(out, text.as_bytes())
}

fn csv_bytes<F>(fill: F) -> Outcome<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| Failure::Io(e.to_string()))?;
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn write_matrix_csv(prefix: &Path, name: &str, rows: &[Vec<f64>]) -> Outcome<()> {
    let bytes = csv_bytes(|w| {
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        Ok(())
    })?;
    let mut file = prefix.as_os_str().to_owned();
    file.push(format!("-{name}.csv"));
    write_bytes(Some(Path::new(&file)), &bytes)
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn run(cmd: Command) -> Outcome<()> {
    let mut inputs = Inputs::default();
    match cmd {
        Command::Game(a) => {
            let game = match (a.chsh_n, &a.from_csv) {
                (Some(n), _) => chsh_n(n)?,
                (None, Some(p)) => {
                    let bytes = inputs.read(p)?;
                    let mut rows = Vec::new();
                    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(&bytes[..]);
                    for rec in rdr.records() {
                        let rec = rec.map_err(|e| Failure::Schema(e.to_string()))?;
                        let row = rec
                            .iter()
                            .map(|f| f.parse::<f64>().map_err(|e| Failure::Schema(format!("bad entry {f:?}: {e}"))))
                            .collect::<Outcome<Vec<f64>>>()?;
                        rows.push(row);
                    }
                    XorGame::normalized(rows)?
                }
                (None, None) => unreachable!("clap requires one game source"),
            };
            let prov = Provenance { command: "game", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), &game, &prov)
        }
        Command::Solve(a) => {
            let game: XorGame = inputs.json(&a.game)?;
            let seed = seed_or_fresh(a.seed);
            let opts = SolveOptions {
                rank: a.rank,
                max_sweeps: a.max_sweeps,
                tol: a.tol,
                restarts: a.restarts,
                seed,
            };
            let sol = solve_bias(&game, &opts)?;
            let mut payload = serde_json::to_value(&sol.strategy).map_err(|e| Failure::Schema(e.to_string()))?;
            if let Value::Object(m) = &mut payload {
                m.insert("converged".into(), sol.converged.into());
                m.insert("sweeps".into(), sol.sweeps.into());
                m.insert("restart".into(), sol.restart.into());
                m.insert("certifiedUpper".into(), certify_upper(&game)?.into());
            }
            let prov = Provenance { command: "solve", seed: Some(seed), inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), payload, &prov)
        }
        Command::Lift(a) => {
            let v: VectorStrategy = inputs.json(&a.vectors)?;
            let q = clifford::tsirelson_lift(&v)?;
            let prov = Provenance { command: "lift", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), &q, &prov)
        }
        Command::Slofstra(a) => {
            let t = std::f64::consts::FRAC_PI_4 - a.theta;
            let q = rigidity::noisy_slofstra(a.n, t, a.tilt)?;
            let prov = Provenance { command: "slofstra", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), &q, &prov)
        }
        Command::Round(a) => {
            let strategy: QuantumStrategy = inputs.json(&a.strategy)?;
            let game = inputs.game(&a.source, &strategy)?;
            let seed = seed_or_fresh(a.seed);
            let run = rounding::reduce_to_quantum(&strategy, &game, a.d, a.trials, seed)?;
            let bytes = csv_bytes(|w| {
                w.write_record(["trial", "alpha", "objective", "resamples"])?;
                for o in &run.outcomes {
                    w.write_record([
                        o.trial.to_string(),
                        o.alpha.to_string(),
                        o.objective.to_string(),
                        o.resamples.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            write_bytes(a.output.as_deref(), &bytes)?;
            let (mean, stderr) = rounding::mean_and_stderr(&run.outcomes);
            let best = &run.outcomes[run.best];
            let hash = inputs.hash();
            let prov = Provenance { command: "round", seed: Some(seed), inputs_hash: hash };
            if let Some(p) = &a.lift_out {
                emit_json(Some(p), &run.strategy, &prov)?;
            }
            if a.output.is_some() {
                let summary = serde_json::json!({
                    "trials": a.trials,
                    "targetD": a.d,
                    "meanObjective": mean,
                    "stderr": stderr,
                    "bestTrial": best.trial,
                    "bestObjective": best.objective,
                });
                emit_json(None, summary, &prov)?;
            }
            Ok(())
        }
        Command::Simulate(a) => {
            let strategy: QuantumStrategy = inputs.json(&a.strategy)?;
            let game = inputs.game(&a.source, &strategy)?;
            let seed = seed_or_fresh(a.seed);
            let sim = simulate_rounds(&strategy, &game, a.rounds, seed)?;
            let mut payload = serde_json::to_value(sim).map_err(|e| Failure::Schema(e.to_string()))?;
            if let Value::Object(m) = &mut payload {
                m.insert("predictedSuccess".into(), bias_of(&strategy, &game)?.success_probability.into());
            }
            let prov = Provenance { command: "simulate", seed: Some(seed), inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), payload, &prov)
        }
        Command::Report(a) => {
            let strategy: QuantumStrategy = inputs.json(&a.strategy)?;
            let rep = rigidity::embedded_chsh_report(&strategy, a.n)?;
            if let Some(prefix) = &a.emit_csv {
                write_matrix_csv(prefix, "pairBiases", &rep.pair_deficits)?;
                write_matrix_csv(prefix, "aliceAnticomm", &rep.alice_anticomm)?;
                write_matrix_csv(prefix, "bobAnticomm", &rep.bob_anticomm)?;
                write_matrix_csv(prefix, "crossConsistency", &rep.cross_consistency)?;
            }
            let prov = Provenance { command: "report", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), &rep, &prov)
        }
        Command::Certify(a) => {
            let strategy: QuantumStrategy = inputs.json(&a.strategy)?;
            let opts = CertifyOptions {
                r: a.r,
                delta: a.delta,
                threshold: a.threshold,
            };
            let cert = rigidity::certify_entropy(&strategy, a.n, &opts)?;
            if let Some(prefix) = &a.emit_csv {
                let working = if cert.padded { rigidity::balance_pad(&strategy)? } else { strategy.clone() };
                let pairs = rigidity::build_qubit_pairs(&working, a.n)?;
                write_matrix_csv(prefix, "pairResiduals", &pairs.pair_residuals)?;
            }
            let prov = Provenance { command: "certify", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), &cert, &prov)
        }
        Command::Entropy(a) => {
            let bytes = inputs.read(&a.input)?;
            let state = match serde_json::from_slice::<QuantumStrategy>(&bytes) {
                Ok(s) => s.state().clone(),
                Err(_) => serde_json::from_slice::<BipartiteState>(&bytes)
                    .map_err(|e| Failure::Schema(format!("{}: neither a strategy nor a state: {e}", a.input.display())))?,
            };
            let bits = rigidity::entanglement_entropy(&state)?;
            let payload = serde_json::json!({
                "entropyBits": bits,
                "dimA": state.dim_a(),
                "dimB": state.dim_b(),
            });
            let prov = Provenance { command: "entropy", seed: None, inputs_hash: inputs.hash() };
            emit_json(a.out.output.as_deref(), payload, &prov)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xorgame: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
