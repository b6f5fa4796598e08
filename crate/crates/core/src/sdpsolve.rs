//! The vector relaxation of the XOR game bias,
//! `sup Σ G_ij x_i·y_j` over real unit vectors, solved by block-coordinate
//! ascent at a fixed rank.
//!
//! With Bob's vectors fixed the best Alice vector is `normalize(Σ_j G_ij y_j)`,
//! and symmetrically for Bob, so every half-sweep is closed-form and the
//! objective never decreases.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{contract, Result};
use crate::game::XorGame;
use crate::matcore::{herm_eig, ComplexMatrix, C64};
use crate::seeds;

pub const UNIT_TOL: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;
pub const DEFAULT_RESTARTS: usize = 8;

const ROLE_START: u64 = 0x5D;

/// Unit vectors for every question together with their objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorStrategy {
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    objective: f64,
}

#[derive(Serialize, Deserialize)]
struct VectorFile {
    r: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    objective: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl VectorStrategy {
    /// Checks dimensions and unit norms; `objective` is taken as given.
    pub fn new(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, objective: f64) -> Result<Self> {
        let r = xs.first().map_or(0, Vec::len);
        if xs.is_empty() || ys.is_empty() || r == 0 {
            return Err(contract("vector strategy needs non-empty vectors on both sides"));
        }
        for v in xs.iter().chain(&ys) {
            if v.len() != r {
                return Err(contract("all vectors must share one dimension"));
            }
            let n = norm(v);
            if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
                return Err(contract(format!("vector has norm {n}, expected 1")));
            }
        }
        Ok(Self { xs, ys, objective })
    }

    /// Builds the strategy and computes its objective against `game`.
    pub fn for_game(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>, game: &XorGame) -> Result<Self> {
        let mut s = Self::new(xs, ys, 0.0)?;
        if s.xs.len() != game.n_a() || s.ys.len() != game.n_b() {
            return Err(contract("vector counts do not match the game"));
        }
        s.objective = objective(game, &s.xs, &s.ys);
        Ok(s)
    }

    pub fn rank(&self) -> usize {
        self.xs[0].len()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Gram cross-block `x_i·y_j`.
    pub fn cross_gram(&self) -> Vec<Vec<f64>> {
        self.xs
            .iter()
            .map(|x| self.ys.iter().map(|y| dot(x, y)).collect())
            .collect()
    }
}

impl Serialize for VectorStrategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorFile {
            r: self.rank(),
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            objective: self.objective,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VectorStrategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = VectorFile::deserialize(d)?;
        if f.xs.first().map_or(0, Vec::len) != f.r {
            return Err(D::Error::custom("r does not match the vector dimension"));
        }
        VectorStrategy::new(f.xs, f.ys, f.objective).map_err(D::Error::custom)
    }
}

pub fn objective(game: &XorGame, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            let g = game.entry(i, j);
            if g != 0.0 {
                total += g * dot(x, y);
            }
        }
    }
    total
}

/// Largest `r` with `r(r+1)/2 ≤ n_a + n_b` and `r ≤ min(n_a, n_b)`, plus one.
pub fn default_rank(n_a: usize, n_b: usize) -> usize {
    let total = n_a + n_b;
    let mut r = 0;
    while (r + 1) * (r + 2) / 2 <= total {
        r += 1;
    }
    r.min(n_a.min(n_b)) + 1
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub rank: Option<usize>,
    pub max_sweeps: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rank: None,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: DEFAULT_TOL,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// Result of [`solve_bias`]: the best strategy over all restarts.
#[derive(Clone, Debug)]
pub struct Solution {
    pub strategy: VectorStrategy,
    pub converged: bool,
    pub sweeps: usize,
    /// Index of the restart that produced `strategy`.
    pub restart: usize,
}

/// Alternating best-response iteration on unit vectors.
#[derive(Clone, Debug)]
pub struct CoordinateAscent<'g> {
    game: &'g XorGame,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
}

fn random_unit(rng: &mut impl Rng, r: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl<'g> CoordinateAscent<'g> {
    pub fn random_start(game: &'g XorGame, rank: usize, rng: &mut impl Rng) -> Self {
        let xs = (0..game.n_a()).map(|_| random_unit(rng, rank)).collect();
        let ys = (0..game.n_b()).map(|_| random_unit(rng, rank)).collect();
        Self { game, xs, ys }
    }

    pub fn objective(&self) -> f64 {
        objective(self.game, &self.xs, &self.ys)
    }

    /// `x_i ← normalize(Σ_j G_ij y_j)`; a zero update keeps the old `x_i`.
    pub fn update_alice(&mut self) {
        let r = self.xs[0].len();
        for i in 0..self.game.n_a() {
            let mut v = vec![0.0; r];
            for (j, y) in self.ys.iter().enumerate() {
                let g = self.game.entry(i, j);
                if g != 0.0 {
                    v.iter_mut().zip(y).for_each(|(a, b)| *a += g * b);
                }
            }
            let n = norm(&v);
            if n > 0.0 {
                self.xs[i] = v.into_iter().map(|a| a / n).collect();
            }
        }
    }

    /// `y_j ← normalize(Σ_i G_ij x_i)`; a zero update keeps the old `y_j`.
    pub fn update_bob(&mut self) {
        let r = self.ys[0].len();
        for j in 0..self.game.n_b() {
            let mut v = vec![0.0; r];
            for (i, x) in self.xs.iter().enumerate() {
                let g = self.game.entry(i, j);
                if g != 0.0 {
                    v.iter_mut().zip(x).for_each(|(a, b)| *a += g * b);
                }
            }
            let n = norm(&v);
            if n > 0.0 {
                self.ys[j] = v.into_iter().map(|a| a / n).collect();
            }
        }
    }

    /// Runs full sweeps until the per-sweep gain drops below `tol`.
    /// Returns `(sweeps, converged)`.
    pub fn run(&mut self, max_sweeps: usize, tol: f64) -> (usize, bool) {
        let mut prev = self.objective();
        for sweep in 1..=max_sweeps {
            self.update_alice();
            self.update_bob();
            let cur = self.objective();
            if cur - prev < tol {
                return (sweep, true);
            }
            prev = cur;
        }
        (max_sweeps, false)
    }

    pub fn into_strategy(self) -> Result<VectorStrategy> {
        let objective = self.objective();
        VectorStrategy::new(self.xs, self.ys, objective)
    }
}

/// Maximizes the vector relaxation of the bias with seeded random restarts.
pub fn solve_bias(game: &XorGame, opts: &SolveOptions) -> Result<Solution> {
    let rank = opts.rank.unwrap_or_else(|| default_rank(game.n_a(), game.n_b()));
    if rank == 0 {
        return Err(contract("rank must be at least 1"));
    }
    if opts.max_sweeps == 0 || !(opts.tol > 0.0) || opts.restarts == 0 {
        return Err(contract("max_sweeps, tol and restarts must be positive"));
    }
    let runs: Vec<Result<Solution>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeds::stream(opts.seed, &[ROLE_START, k as u64]);
            let mut ca = CoordinateAscent::random_start(game, rank, &mut rng);
            let (sweeps, converged) = ca.run(opts.max_sweeps, opts.tol);
            Ok(Solution {
                strategy: ca.into_strategy()?,
                converged,
                sweeps,
                restart: k,
            })
        })
        .collect();
    let mut best: Option<Solution> = None;
    for run in runs {
        let run = run?;
        // strict improvement keeps the lowest restart index on ties
        if best
            .as_ref()
            .is_none_or(|b| run.strategy.objective > b.strategy.objective)
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// `(n_a' + n_b')/2 · σ_max(G)` where `n_a'`, `n_b'` count the nonzero rows
/// and columns. Upper-bounds the relaxation since
/// `Tr(XᵀGY) ≤ σ_max ‖X‖_F ‖Y‖_F` and all-zero rows/columns never contribute.
pub fn certify_upper(game: &XorGame) -> Result<f64> {
    let rows: Vec<usize> = (0..game.n_a())
        .filter(|&i| (0..game.n_b()).any(|j| game.entry(i, j) != 0.0))
        .collect();
    let cols: Vec<usize> = (0..game.n_b())
        .filter(|&j| (0..game.n_a()).any(|i| game.entry(i, j) != 0.0))
        .collect();
    let (na, nb) = (rows.len(), cols.len());
    let n = na + nb;
    // λ_max of [[0, G], [Gᵀ, 0]] is σ_max(G)
    let block = ComplexMatrix::from_fn(n, n, |p, q| {
        let v = if p < na && q >= na {
            game.entry(rows[p], cols[q - na])
        } else if p >= na && q < na {
            game.entry(rows[q], cols[p - na])
        } else {
            0.0
        };
        C64::new(v, 0.0)
    });
    let lambda_max = herm_eig(&block)?.values[0];
    Ok(n as f64 / 2.0 * lambda_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::chsh_n;
    use crate::CHSH_BIAS;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_game(rng: &mut impl Rng, n_a: usize, n_b: usize) -> XorGame {
        let m = (0..n_a)
            .map(|_| (0..n_b).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        XorGame::normalized(m).unwrap()
    }

    /// Classical bias by enumerating every ±1 assignment.
    fn brute_force_classical(game: &XorGame) -> f64 {
        let (na, nb) = (game.n_a(), game.n_b());
        let mut best = f64::NEG_INFINITY;
        for amask in 0..1u32 << na {
            for bmask in 0..1u32 << nb {
                let s = |m: u32, k: usize| if m >> k & 1 == 1 { -1.0 } else { 1.0 };
                let mut v = 0.0;
                for i in 0..na {
                    for j in 0..nb {
                        v += game.entry(i, j) * s(amask, i) * s(bmask, j);
                    }
                }
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn default_rank_rule() {
        assert_eq!(default_rank(2, 2), 3);
        assert_eq!(default_rank(3, 4), 4);
        assert_eq!(default_rank(6, 30), 7);
        assert_eq!(default_rank(1, 5), 2);
    }

    #[test]
    fn chsh2_reaches_tsirelson() {
        let sol = solve_bias(&chsh_n(2).unwrap(), &SolveOptions::default()).unwrap();
        assert!((sol.strategy.objective() - CHSH_BIAS).abs() < 1e-6, "{sol:?}");
        assert!(sol.converged);
    }

    #[test]
    fn chsh_n_reaches_tsirelson() {
        for n in 3..=5 {
            let sol = solve_bias(&chsh_n(n).unwrap(), &SolveOptions::default()).unwrap();
            assert!((sol.strategy.objective() - CHSH_BIAS).abs() < 1e-4, "n={n}");
        }
    }

    #[test]
    fn rank_one_is_classical() {
        let g = chsh_n(2).unwrap();
        let classical = brute_force_classical(&g);
        assert_eq!(classical, 0.5);
        let opts = SolveOptions {
            rank: Some(1),
            ..SolveOptions::default()
        };
        let sol = solve_bias(&g, &opts).unwrap();
        assert!((sol.strategy.objective() - classical).abs() < 1e-6);
    }

    #[test]
    fn zero_update_keeps_previous_vector() {
        // Alice's second question never matters
        let g = XorGame::new(vec![vec![0.5, 0.5], vec![0.0, 0.0]], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ca = CoordinateAscent::random_start(&g, 3, &mut rng);
        let before = ca.xs[1].clone();
        ca.update_alice();
        assert_eq!(ca.xs[1], before);
        let sol = solve_bias(&g, &SolveOptions::default()).unwrap();
        assert!((sol.strategy.objective() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unconverged_is_flagged() {
        let opts = SolveOptions {
            max_sweeps: 1,
            tol: 1e-300,
            ..SolveOptions::default()
        };
        let sol = solve_bias(&chsh_n(4).unwrap(), &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.sweeps, 1);
    }

    #[test]
    fn half_sweeps_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let g = random_game(&mut rng, 4, 5);
            let mut ca = CoordinateAscent::random_start(&g, 3, &mut rng);
            let mut prev = ca.objective();
            for _ in 0..50 {
                ca.update_alice();
                let a = ca.objective();
                assert!(a >= prev - 1e-12);
                ca.update_bob();
                let b = ca.objective();
                assert!(b >= a - 1e-12);
                prev = b;
            }
        }
    }

    #[test]
    fn solutions_are_feasible_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..20 {
            let g = random_game(&mut rng, 3, 3);
            let opts = SolveOptions {
                seed: k,
                ..SolveOptions::default()
            };
            let sol = solve_bias(&g, &opts).unwrap();
            let s = &sol.strategy;
            for v in s.xs().iter().chain(s.ys()) {
                assert!((norm(v) - 1.0).abs() < 1e-10);
            }
            assert!((objective(&g, s.xs(), s.ys()) - s.objective()).abs() < 1e-10);
            let upper = certify_upper(&g).unwrap();
            assert!(s.objective() <= upper + 1e-9);
            let full = s.objective();
            for rank in 1..default_rank(3, 3) {
                let low = solve_bias(&g, &SolveOptions { rank: Some(rank), ..opts.clone() }).unwrap();
                assert!(full >= low.strategy.objective() - 1e-8, "rank {rank}");
            }
        }
    }

    #[test]
    fn upper_bound_examples() {
        assert!(certify_upper(&chsh_n(2).unwrap()).unwrap() >= CHSH_BIAS);

        let diag = XorGame::normalized(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let sol = solve_bias(&diag, &SolveOptions::default()).unwrap();
        let upper = certify_upper(&diag).unwrap();
        assert!(upper - sol.strategy.objective() >= -1e-12);
        let uniform = XorGame::normalized(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sol = solve_bias(&uniform, &SolveOptions::default()).unwrap();
        assert!(certify_upper(&uniform).unwrap() - sol.strategy.objective() < 1e-6);

        let base = chsh_n(2).unwrap();
        let mut padded = base.rows();
        padded.push(vec![0.0, 0.0]);
        let padded = XorGame::new(padded, None).unwrap();
        assert!((certify_upper(&base).unwrap() - certify_upper(&padded).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn restarts_are_deterministic() {
        let g = chsh_n(3).unwrap();
        let opts = SolveOptions {
            seed: 5,
            ..SolveOptions::default()
        };
        let a = solve_bias(&g, &opts).unwrap();
        let b = solve_bias(&g, &opts).unwrap();
        assert_eq!(a.strategy, b.strategy);
        assert_eq!(a.restart, b.restart);
    }

    #[test]
    fn vector_file_round_trip() {
        let sol = solve_bias(&chsh_n(2).unwrap(), &SolveOptions::default()).unwrap();
        let s = serde_json::to_string(&sol.strategy).unwrap();
        let back: VectorStrategy = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sol.strategy);
        assert!(serde_json::from_str::<VectorStrategy>(r#"{"r":2,"xs":[[1,1]],"ys":[[1,0]],"objective":0}"#).is_err());
    }
}
