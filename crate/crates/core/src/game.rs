//! XOR games, the CHSH(n) family, and evaluation of quantum strategies.

use rand::Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{contract, Error, Result};
use crate::matcore::{op_abs_signum, BipartiteState, ComplexMatrix, MAX_DIM};
use crate::seeds;

/// Tolerance on `Σ|G_ij| = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance on `A = A†` and `A² = Id` for strategy observables.
pub const OBSERVABLE_TOL: f64 = 1e-9;

/// Number of independent seed partitions used by [`simulate_rounds`].
pub const SIMULATION_PARTITIONS: u64 = 16;

const ROLE_SIMULATION: u64 = 0x51;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameLabels {
    pub alice: Vec<String>,
    pub bob: Vec<String>,
}

/// A two-player XOR game given by a real matrix with `Σ|G_ij| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct XorGame {
    n_a: usize,
    n_b: usize,
    matrix: Vec<f64>,
    labels: Option<GameLabels>,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    #[serde(rename = "nA")]
    n_a: usize,
    #[serde(rename = "nB")]
    n_b: usize,
    matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<GameLabels>,
}

impl XorGame {
    pub fn new(matrix: Vec<Vec<f64>>, labels: Option<GameLabels>) -> Result<Self> {
        let n_a = matrix.len();
        let n_b = matrix.first().map_or(0, Vec::len);
        if n_a == 0 || n_b == 0 {
            return Err(contract("game matrix must be non-empty"));
        }
        if n_a > MAX_DIM || n_b > MAX_DIM {
            return Err(Error::Capacity(format!("{n_a}x{n_b} game exceeds the matrix cap")));
        }
        if matrix.iter().any(|row| row.len() != n_b) {
            return Err(contract("game matrix rows have different lengths"));
        }
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(contract("game matrix entries must be finite"));
        }
        let total: f64 = flat.iter().map(|x| x.abs()).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(contract(format!(
                "sum of |G_ij| must be 1 (got {total:.15})"
            )));
        }
        if let Some(l) = &labels {
            if l.alice.len() != n_a || l.bob.len() != n_b {
                return Err(contract("label counts do not match the game shape"));
            }
        }
        Ok(Self {
            n_a,
            n_b,
            matrix: flat,
            labels,
        })
    }

    /// Rescales an arbitrary nonzero matrix so that `Σ|G_ij| = 1`.
    pub fn normalized(mut matrix: Vec<Vec<f64>>) -> Result<Self> {
        let total: f64 = matrix.iter().flatten().map(|x| x.abs()).sum();
        if !(total > 0.0) {
            return Err(contract("cannot normalize an all-zero game"));
        }
        matrix.iter_mut().flatten().for_each(|x| *x /= total);
        Self::new(matrix, None)
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n_b + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.n_b).map(<[f64]>::to_vec).collect()
    }

    pub fn labels(&self) -> Option<&GameLabels> {
        self.labels.as_ref()
    }

    /// `Σ G_ij c_ij` for a correlation table.
    pub fn evaluate(&self, correlations: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n_a {
            for j in 0..self.n_b {
                total += self.entry(i, j) * correlations[i][j];
            }
        }
        total
    }
}

impl Serialize for XorGame {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GameFile {
            n_a: self.n_a,
            n_b: self.n_b,
            matrix: self.rows(),
            labels: self.labels.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for XorGame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = GameFile::deserialize(d)?;
        if f.matrix.len() != f.n_a || f.matrix.iter().any(|r| r.len() != f.n_b) {
            return Err(D::Error::custom("matrix shape does not match nA/nB"));
        }
        XorGame::new(f.matrix, f.labels).map_err(D::Error::custom)
    }
}

/// Column index of Bob's question `(i, j)` in [`chsh_n`] (zero-based, `i ≠ j`).
pub fn chsh_column(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    i * (n - 1) + if j > i { j - 1 } else { j }
}

/// The CHSH(n) game: `n` Alice questions, `n(n−1)` ordered pairs for Bob in
/// lexicographic order. Entry `(k, (i,j))` is zero unless `k ∈ {i, j}`, and
/// negative exactly when `k = i > j`.
pub fn chsh_n(n: usize) -> Result<XorGame> {
    if n < 2 {
        return Err(contract("CHSH(n) needs n >= 2"));
    }
    let cols = n * (n - 1);
    if cols > MAX_DIM {
        return Err(Error::Capacity(format!("CHSH({n}) has {cols} columns")));
    }
    let w = 1.0 / (2 * cols) as f64;
    let mut matrix = vec![vec![0.0; cols]; n];
    let mut bob = Vec::with_capacity(cols);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let c = chsh_column(n, i, j);
            matrix[i][c] = if i > j { -w } else { w };
            matrix[j][c] = w;
            bob.push(format!("({},{})", i + 1, j + 1));
        }
    }
    let labels = GameLabels {
        alice: (1..=n).map(|k| k.to_string()).collect(),
        bob,
    };
    XorGame::new(matrix, Some(labels))
}

/// Observables for both players together with a shared bipartite state.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumStrategy {
    alice: Vec<ComplexMatrix>,
    bob: Vec<ComplexMatrix>,
    state: BipartiteState,
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    #[serde(rename = "dimA")]
    dim_a: usize,
    #[serde(rename = "dimB")]
    dim_b: usize,
    #[serde(rename = "aliceObs")]
    alice: Vec<ComplexMatrix>,
    #[serde(rename = "bobObs")]
    bob: Vec<ComplexMatrix>,
    state: BipartiteState,
}

impl QuantumStrategy {
    pub fn new(
        alice: Vec<ComplexMatrix>,
        bob: Vec<ComplexMatrix>,
        state: BipartiteState,
    ) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(contract("each player needs at least one observable"));
        }
        for (who, obs, dim) in [("Alice", &alice, state.dim_a()), ("Bob", &bob, state.dim_b())] {
            for (k, o) in obs.iter().enumerate() {
                if o.rows() != dim || o.cols() != dim {
                    return Err(contract(format!(
                        "{who} observable {k} is {}x{}, state side has dimension {dim}",
                        o.rows(),
                        o.cols()
                    )));
                }
                if !o.is_observable(OBSERVABLE_TOL) {
                    return Err(contract(format!(
                        "{who} observable {k} is not Hermitian with square identity"
                    )));
                }
            }
        }
        Ok(Self { alice, bob, state })
    }

    pub fn alice(&self) -> &[ComplexMatrix] {
        &self.alice
    }

    pub fn bob(&self) -> &[ComplexMatrix] {
        &self.bob
    }

    pub fn state(&self) -> &BipartiteState {
        &self.state
    }

    pub fn dim_a(&self) -> usize {
        self.state.dim_a()
    }

    pub fn dim_b(&self) -> usize {
        self.state.dim_b()
    }

    /// `⟨ψ|A_i ⊗ B_j|ψ⟩` for every question pair (real parts).
    pub fn correlations(&self) -> Vec<Vec<f64>> {
        let psi = self.state.coefficients();
        let psi_h = psi.adjoint();
        self.alice
            .par_iter()
            .map(|a| {
                // M = Ψ† A Ψ, then ⟨A ⊗ B⟩ = Σ_{b b'} M_{b b'} B_{b b'}
                let m = &(&psi_h * a) * &psi;
                let m = m.as_nalgebra();
                self.bob
                    .iter()
                    .map(|b| {
                        m.iter()
                            .zip(b.as_nalgebra().iter())
                            .map(|(x, y)| (x * y).re)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Doubles each side's dimension: observables become `A ⊕ (−A)` and the
    /// state sits entirely in the original summand.
    pub fn balance_pad(&self) -> Result<Self> {
        let pad = |ops: &[ComplexMatrix]| -> Result<Vec<ComplexMatrix>> {
            ops.iter().map(|o| o.direct_sum(&(-o))).collect()
        };
        let state = self.state.embed(self.dim_a(), self.dim_b())?;
        Self::new(pad(&self.alice)?, pad(&self.bob)?, state)
    }

    pub fn with_state(&self, state: BipartiteState) -> Result<Self> {
        Self::new(self.alice.clone(), self.bob.clone(), state)
    }

    pub fn with_alice(&self, alice: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(alice, self.bob.clone(), self.state.clone())
    }
}

impl Serialize for QuantumStrategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StrategyFile {
            dim_a: self.dim_a(),
            dim_b: self.dim_b(),
            alice: self.alice.clone(),
            bob: self.bob.clone(),
            state: self.state.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumStrategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = StrategyFile::deserialize(d)?;
        if f.dim_a != f.state.dim_a() || f.dim_b != f.state.dim_b() {
            return Err(D::Error::custom("dimA/dimB do not match the state"));
        }
        QuantumStrategy::new(f.alice, f.bob, f.state).map_err(D::Error::custom)
    }
}

/// A bias together with the matching success probability `(1 + bias)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasValue {
    pub bias: f64,
    #[serde(rename = "successProbability")]
    pub success_probability: f64,
}

impl BiasValue {
    pub fn from_bias(bias: f64) -> Self {
        Self {
            bias,
            success_probability: (1.0 + bias) / 2.0,
        }
    }
}

fn check_shape(strategy: &QuantumStrategy, game: &XorGame) -> Result<()> {
    if strategy.alice.len() != game.n_a || strategy.bob.len() != game.n_b {
        return Err(contract(format!(
            "strategy has {}+{} observables, game needs {}+{}",
            strategy.alice.len(),
            strategy.bob.len(),
            game.n_a,
            game.n_b
        )));
    }
    Ok(())
}

/// `Σ G_ij ⟨ψ|A_i ⊗ B_j|ψ⟩`.
pub fn bias_of(strategy: &QuantumStrategy, game: &XorGame) -> Result<BiasValue> {
    check_shape(strategy, game)?;
    Ok(BiasValue::from_bias(game.evaluate(&strategy.correlations())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub rounds: u64,
    pub wins: u64,
    #[serde(rename = "empiricalSuccess")]
    pub empirical_success: f64,
    pub stderr: f64,
}

struct Cell {
    sign: f64,
    /// Joint outcome probabilities for `(a, b)` in order `(+,+), (+,−), (−,+), (−,−)`.
    joint: [f64; 4],
}

/// Plays `rounds` independent rounds of the game with Born-rule outcomes.
///
/// Question pairs are drawn with probability `|G_ij|`; a round is won when the
/// product of the two ±1 answers equals the sign of `G_ij`. Rounds are split
/// over [`SIMULATION_PARTITIONS`] seed streams so the result does not depend
/// on the thread count.
pub fn simulate_rounds(
    strategy: &QuantumStrategy,
    game: &XorGame,
    rounds: u64,
    seed: u64,
) -> Result<SimulationResult> {
    check_shape(strategy, game)?;
    if rounds == 0 {
        return Err(contract("rounds must be at least 1"));
    }
    let signs = |ops: &[ComplexMatrix]| -> Result<Vec<ComplexMatrix>> {
        ops.iter().map(|o| Ok(op_abs_signum(o)?.signum)).collect()
    };
    let sa = signs(&strategy.alice)?;
    let sb = signs(&strategy.bob)?;
    let id_a = ComplexMatrix::identity(strategy.dim_a());
    let id_b = ComplexMatrix::identity(strategy.dim_b());
    let psi = &strategy.state;
    let mut alice_marg = Vec::with_capacity(sa.len());
    for a in &sa {
        alice_marg.push(psi.expectation(a, &id_b)?.re);
    }
    let mut bob_marg = Vec::with_capacity(sb.len());
    for b in &sb {
        bob_marg.push(psi.expectation(&id_a, b)?.re);
    }
    let signed = QuantumStrategy {
        alice: sa,
        bob: sb,
        state: psi.clone(),
    };
    let corr = signed.correlations();

    let mut cells = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for i in 0..game.n_a {
        for j in 0..game.n_b {
            let g = game.entry(i, j);
            if g == 0.0 {
                continue;
            }
            let (ea, eb, eab) = (alice_marg[i], bob_marg[j], corr[i][j]);
            let p = |a: f64, b: f64| ((1.0 + a * ea + b * eb + a * b * eab) / 4.0).max(0.0);
            cells.push(Cell {
                sign: g.signum(),
                joint: [p(1.0, 1.0), p(1.0, -1.0), p(-1.0, 1.0), p(-1.0, -1.0)],
            });
            acc += g.abs();
            cumulative.push(acc);
        }
    }

    let per = rounds / SIMULATION_PARTITIONS;
    let extra = rounds % SIMULATION_PARTITIONS;
    let wins: u64 = (0..SIMULATION_PARTITIONS)
        .into_par_iter()
        .map(|p| {
            let count = per + u64::from(p < extra);
            let mut rng = seeds::stream(seed, &[ROLE_SIMULATION, p]);
            let mut wins = 0u64;
            for _ in 0..count {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cumulative.partition_point(|&c| c <= u).min(cells.len() - 1);
                let cell = &cells[k];
                let total: f64 = cell.joint.iter().sum();
                let mut v: f64 = rng.random::<f64>() * total;
                let mut outcome = 3;
                for (o, &q) in cell.joint.iter().enumerate() {
                    if v < q {
                        outcome = o;
                        break;
                    }
                    v -= q;
                }
                let product = if outcome == 0 || outcome == 3 { 1.0 } else { -1.0 };
                if product == cell.sign {
                    wins += 1;
                }
            }
            wins
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let p = wins as f64 / rounds as f64;
    Ok(SimulationResult {
        rounds,
        wins,
        empirical_success: p,
        stderr: (p * (1.0 - p) / rounds as f64).sqrt(),
    })
}
