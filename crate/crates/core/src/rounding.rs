//! Randomized dimension reduction of a quantum strategy.
//!
//! Each strategy is first turned into complex unit vectors
//! `x_s = ⟨ψ|A_s ⊗ Id`, `y_t = ⟨ψ|Id ⊗ B_t`. A trial then
//!
//! 1. projects them to `C^d` with i.i.d. signs `g_kp ∈ {1, −1, i, −i}` scaled by `1/√d`,
//! 2. draws one `α` from the hyperbolic secant law and applies the phase twist
//!    `u_s = x'_s/‖x'_s‖ · ‖x'_s‖^{iα}`, `v_t = y'_t/‖y'_t‖ · ‖y'_t‖^{−iα}`,
//! 3. realifies `u ↦ ℜu ⊕ ℑu`, `v ↦ ℜv ⊕ ℑv` so that the real objective
//!    `Σ G_st u_s·v_t` equals `ℜ Σ G_st u_s·v̄_t`.
//!
//! Averaged over `g` and `α` the objective is at least `(1 − 1/d)` times the
//! input bias; the best of several trials is lifted back to observables in
//! dimension `2^d`.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::clifford::tsirelson_lift;
use crate::error::{contract, Error, Result};
use crate::game::{QuantumStrategy, XorGame};
use crate::matcore::{C64, MAX_DIM, ONE, I, ZERO};
use crate::sdpsolve::VectorStrategy;
use crate::seeds;

const ROLE_SIGNS: u64 = 0x61;
const ROLE_TWIST: u64 = 0x62;

/// Norms below this trigger a fresh draw of the projection.
pub const DEGENERATE_NORM: f64 = 1e-14;

const MAX_RESAMPLES: u32 = 64;

/// One draw from the density `½·sech(πα/2)`, whose characteristic function
/// is `sech(t)`. Uses the inverse CDF `α = (2/π)·ln tan(πu/2)`.
pub fn sample_sech(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 && u < 1.0 {
            return 2.0 / PI * (PI * u / 2.0).tan().ln();
        }
    }
}

/// A uniform draw from `{1, −1, i, −i}`.
pub fn quaternary_sign(rng: &mut impl Rng) -> C64 {
    match rng.random_range(0..4u8) {
        0 => ONE,
        1 => -ONE,
        2 => I,
        _ => -I,
    }
}

/// Alice's and Bob's complex vectors.
pub type ComplexVectors = (Vec<Vec<C64>>, Vec<Vec<C64>>);

/// Row vectors `⟨ψ|A_s ⊗ Id` and `⟨ψ|Id ⊗ B_t`, flattened in the state's
/// index order. `Σ G_st x_s·ȳ_t` reproduces the bias.
pub fn strategy_vectors(strategy: &QuantumStrategy) -> Result<ComplexVectors> {
    let psi = strategy.state();
    // ⟨ψ|X is the conjugate of X|ψ⟩ for Hermitian X
    let flatten = |m: crate::matcore::ComplexMatrix| -> Vec<C64> {
        m.row_major_entries().into_iter().map(|z| z.conj()).collect()
    };
    let xs = strategy
        .alice()
        .iter()
        .map(|a| psi.apply_alice(a).map(flatten))
        .collect::<Result<_>>()?;
    let ys = strategy
        .bob()
        .iter()
        .map(|b| psi.apply_bob(b).map(flatten))
        .collect::<Result<_>>()?;
    Ok((xs, ys))
}

/// `Σ_i a_i b_i` without conjugation.
pub fn bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ G_st x_s·ȳ_t`.
pub fn sesquilinear_objective(game: &XorGame, xs: &[Vec<C64>], ys: &[Vec<C64>]) -> C64 {
    let mut total = ZERO;
    for (s, x) in xs.iter().enumerate() {
        for (t, y) in ys.iter().enumerate() {
            let g = game.entry(s, t);
            if g != 0.0 {
                let v: C64 = x.iter().zip(y).map(|(a, b)| a * b.conj()).sum();
                total += v * g;
            }
        }
    }
    total
}

/// `ℜz ⊕ ℑz`.
pub fn realify(z: &[C64]) -> Vec<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect()
}

/// `ℜz ⊕ (−ℑz)`, the partner of [`realify`] for the unconjugated bilinear form.
pub fn realify_conj(z: &[C64]) -> Vec<f64> {
    z.iter().map(|c| c.re).chain(z.iter().map(|c| -c.im)).collect()
}

/// `(1/√d) g z` for a `d × p` sign matrix stored row-major.
pub fn project(signs: &[C64], d: usize, z: &[C64]) -> Vec<C64> {
    let p = z.len();
    let scale = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|k| {
            let row = &signs[k * p..(k + 1) * p];
            row.iter().zip(z).map(|(g, x)| g * x).sum::<C64>() * scale
        })
        .collect()
}

fn norm_c(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `z/‖z‖ · ‖z‖^{iβ}` with `‖z‖^{iβ} = cos(β ln‖z‖) + i sin(β ln‖z‖)`.
fn twist(z: &[C64], beta: f64) -> Vec<C64> {
    let n = norm_c(z);
    let phase = C64::from_polar(1.0, beta * n.ln());
    z.iter().map(|c| c / n * phase).collect()
}

/// Outcome of a single rounding trial.
#[derive(Clone, Debug, Serialize)]
pub struct RoundingOutcome {
    /// Realified unit vectors of dimension `2d`.
    pub reduced: VectorStrategy,
    #[serde(rename = "targetD")]
    pub target_d: usize,
    pub alpha: f64,
    pub seed: u64,
    pub trial: u64,
    /// `ℜ Σ G u·v̄`, equal to the objective of `reduced`.
    pub objective: f64,
    /// Imaginary part of the complex objective before realification.
    #[serde(rename = "imagObjective")]
    pub imag_objective: f64,
    /// Times the projection was redrawn because a projected norm vanished.
    pub resamples: u32,
}

/// Runs trial `trial` of the rounding on precomputed strategy vectors.
pub fn reduce_vectors(
    xs: &[Vec<C64>],
    ys: &[Vec<C64>],
    game: &XorGame,
    d: usize,
    seed: u64,
    trial: u64,
) -> Result<RoundingOutcome> {
    if d == 0 {
        return Err(contract("target dimension d must be at least 1"));
    }
    if xs.len() != game.n_a() || ys.len() != game.n_b() {
        return Err(contract("strategy vectors do not match the game"));
    }
    let p = xs[0].len();
    let mut resamples = 0;
    let (xp, yp) = loop {
        let mut rng = seeds::stream(seed, &[ROLE_SIGNS, trial, u64::from(resamples)]);
        let signs: Vec<C64> = (0..d * p).map(|_| quaternary_sign(&mut rng)).collect();
        let xp: Vec<Vec<C64>> = xs.iter().map(|x| project(&signs, d, x)).collect();
        let yp: Vec<Vec<C64>> = ys.iter().map(|y| project(&signs, d, y)).collect();
        if xp.iter().chain(&yp).all(|v| norm_c(v) >= DEGENERATE_NORM) {
            break (xp, yp);
        }
        resamples += 1;
        if resamples > MAX_RESAMPLES {
            return Err(Error::Solver(format!(
                "projection degenerate after {MAX_RESAMPLES} redraws"
            )));
        }
    };
    let alpha = sample_sech(&mut seeds::stream(seed, &[ROLE_TWIST, trial]));
    let us: Vec<Vec<C64>> = xp.iter().map(|x| twist(x, alpha)).collect();
    let vs: Vec<Vec<C64>> = yp.iter().map(|y| twist(y, -alpha)).collect();
    let complex = sesquilinear_objective(game, &us, &vs);
    let reduced = VectorStrategy::for_game(
        us.iter().map(|u| realify(u)).collect(),
        vs.iter().map(|v| realify(v)).collect(),
        game,
    )?;
    Ok(RoundingOutcome {
        objective: reduced.objective(),
        reduced,
        target_d: d,
        alpha,
        seed,
        trial,
        imag_objective: complex.im,
        resamples,
    })
}

/// A single rounding trial (trial index 0) of `strategy`.
pub fn reduce(
    strategy: &QuantumStrategy,
    game: &XorGame,
    d: usize,
    seed: u64,
) -> Result<RoundingOutcome> {
    let (xs, ys) = strategy_vectors(strategy)?;
    reduce_vectors(&xs, &ys, game, d, seed, 0)
}

/// Trials `0..trials`, in trial order.
pub fn reduce_trials(
    strategy: &QuantumStrategy,
    game: &XorGame,
    d: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<RoundingOutcome>> {
    if trials == 0 {
        return Err(contract("trials must be at least 1"));
    }
    let (xs, ys) = strategy_vectors(strategy)?;
    (0..trials)
        .into_par_iter()
        .map(|t| reduce_vectors(&xs, &ys, game, d, seed, t))
        .collect()
}

/// Mean and standard error of the trial objectives.
pub fn mean_and_stderr(outcomes: &[RoundingOutcome]) -> (f64, f64) {
    let n = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.objective).sum::<f64>() / n;
    if outcomes.len() < 2 {
        return (mean, 0.0);
    }
    let var = outcomes
        .iter()
        .map(|o| (o.objective - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Best-of-trials rounding lifted to observables in dimension `2^d`.
#[derive(Clone, Debug)]
pub struct RoundingRun {
    pub outcomes: Vec<RoundingOutcome>,
    /// Index into `outcomes` of the best trial (lowest index on ties).
    pub best: usize,
    pub strategy: QuantumStrategy,
}

pub fn reduce_to_quantum(
    strategy: &QuantumStrategy,
    game: &XorGame,
    d: usize,
    trials: u64,
    seed: u64,
) -> Result<RoundingRun> {
    if d == 0 {
        return Err(contract("target dimension d must be at least 1"));
    }
    if d >= usize::BITS as usize || (1usize << d) > MAX_DIM {
        return Err(Error::Capacity(format!("local dimension 2^{d} exceeds the cap")));
    }
    let outcomes = reduce_trials(strategy, game, d, trials, seed)?;
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.objective > outcomes[best].objective {
            best = k;
        }
    }
    let lifted = tsirelson_lift(&outcomes[best].reduced)?;
    Ok(RoundingRun {
        outcomes,
        best,
        strategy: lifted,
    })
}
