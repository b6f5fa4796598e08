//! Rigidity diagnostics for the CHSH(n) family.
//!
//! CHSH(n) restricted to Alice questions `{i, j}` and Bob questions
//! `{(i,j), (j,i)}` is a copy of CHSH. For `i < j` its bias is
//!
//! `β_ij = ¼(⟨A_i B_ij⟩ + ⟨A_j B_ij⟩ + ⟨A_i B_ji⟩ − ⟨A_j B_ji⟩)`
//!
//! and the full bias is the plain average of the `β_ij`. Bob's combinations
//! `B_ij ± B_ji` point along `A_iᵀ` and `A_jᵀ`, which is how Bob-side proxies
//! for Alice's observables are formed.

use std::f64::consts::FRAC_PI_4;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{contract, Result};
use crate::game::{bias_of, chsh_column, chsh_n, QuantumStrategy};
use crate::matcore::{herm_eig, op_abs_signum, svd, BipartiteState, ComplexMatrix, Keep, C64, I, ZERO};
use crate::CHSH_BIAS;

/// Inputs to the repair and tilde constructions must be observables to this tolerance.
pub const INPUT_OBSERVABLE_TOL: f64 = 1e-9;

/// `|Tr X|` at or below this counts as balanced.
pub const BALANCE_TOL: f64 = 1e-8;

/// Largest `m` for which [`select_good_subset`] enumerates all subsets.
pub const EXACT_SUBSET_MAX: usize = 12;

fn require_observable(m: &ComplexMatrix, what: &str) -> Result<()> {
    if !m.is_square() || !m.is_observable(INPUT_OBSERVABLE_TOL) {
        return Err(contract(format!("{what} is not an observable")));
    }
    Ok(())
}

fn require_balanced(m: &ComplexMatrix, what: &str) -> Result<()> {
    if !m.rows().is_multiple_of(2) {
        return Err(contract(format!("{what} acts on an odd dimension; pad first")));
    }
    let tr = m.trace();
    if tr.norm() > BALANCE_TOL {
        return Err(contract(format!(
            "{what} is not balanced (trace {:.3e}); pad first",
            tr.re
        )));
    }
    Ok(())
}

/// Signum of a Hermitian matrix completed by the identity on its kernel.
fn completed_signum(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let parts = op_abs_signum(m)?;
    Ok(&parts.signum + &parts.kernel)
}

/// `(signum(B_ij + B_ji), signum(B_ij − B_ji))`, each made an exact
/// observable by acting as the identity on the kernel.
pub fn tilde_observables(
    bij: &ComplexMatrix,
    bji: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    require_observable(bij, "B_ij")?;
    require_observable(bji, "B_ji")?;
    if bij.rows() != bji.rows() {
        return Err(contract("B_ij and B_ji have different dimensions"));
    }
    Ok((completed_signum(&(bij + bji))?, completed_signum(&(bij - bji))?))
}

/// Per-pair biases and residual norms of a CHSH(n) strategy.
///
/// Matrices are `n × n` indexed by Alice questions. `pair_deficits` is
/// filled above the diagonal only. `cross_consistency[i][j]` compares `A_i`
/// with the Bob-side proxy for `i` built from the pair `{i, j}`.
#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub n: usize,
    pub epsilon: f64,
    #[serde(rename = "pairBiases")]
    pub pair_deficits: Vec<Vec<f64>>,
    #[serde(rename = "aliceAnticomm")]
    pub alice_anticomm: Vec<Vec<f64>>,
    #[serde(rename = "bobAnticomm")]
    pub bob_anticomm: Vec<Vec<f64>>,
    #[serde(rename = "crossConsistency")]
    pub cross_consistency: Vec<Vec<f64>>,
    #[serde(rename = "meanPairBias")]
    pub mean_pair_deficit: f64,
    #[serde(rename = "meanAliceAnticomm")]
    pub mean_alice_anticomm: f64,
    #[serde(rename = "meanBobAnticomm")]
    pub mean_bob_anticomm: f64,
    #[serde(rename = "meanCrossConsistency")]
    pub mean_cross_consistency: f64,
}

impl RigidityReport {
    /// The largest of the three mean residuals.
    pub fn residual_scale(&self) -> f64 {
        self.mean_alice_anticomm
            .max(self.mean_bob_anticomm)
            .max(self.mean_cross_consistency)
    }
}

/// Bob-side proxies for Alice's observables, keyed by pair.
struct PairTildes {
    /// `proxy[i][j]` stands in for `A_i`, built from the pair `{i, j}`.
    proxy: Vec<Vec<Option<ComplexMatrix>>>,
}

fn check_shape(strategy: &QuantumStrategy, n: usize) -> Result<()> {
    if n < 2 {
        return Err(contract("CHSH(n) needs n >= 2"));
    }
    if strategy.alice().len() != n || strategy.bob().len() != n * (n - 1) {
        return Err(contract(format!(
            "strategy has {}/{} observables, CHSH({n}) needs {}/{}",
            strategy.alice().len(),
            strategy.bob().len(),
            n,
            n * (n - 1)
        )));
    }
    Ok(())
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).tuple_combinations().collect()
}

fn pair_tildes(strategy: &QuantumStrategy, n: usize) -> Result<PairTildes> {
    let bob = strategy.bob();
    let computed: Vec<((usize, usize), (ComplexMatrix, ComplexMatrix))> = upper_pairs(n)
        .into_par_iter()
        .map(|(i, j)| {
            let t = tilde_observables(&bob[chsh_column(n, i, j)], &bob[chsh_column(n, j, i)])?;
            Ok(((i, j), t))
        })
        .collect::<Result<_>>()?;
    let mut proxy = vec![vec![None; n]; n];
    for ((i, j), (ti, tj)) in computed {
        proxy[i][j] = Some(ti);
        proxy[j][i] = Some(tj);
    }
    Ok(PairTildes { proxy })
}

impl PairTildes {
    fn get(&self, i: usize, j: usize) -> &ComplexMatrix {
        self.proxy[i][j].as_ref().expect("proxy exists for i != j")
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn embedded_chsh_report(strategy: &QuantumStrategy, n: usize) -> Result<RigidityReport> {
    check_shape(strategy, n)?;
    let game = chsh_n(n)?;
    let epsilon = 1.0 - bias_of(strategy, &game)?.bias / CHSH_BIAS;
    let corr = strategy.correlations();
    let psi = strategy.state();
    let alice = strategy.alice();
    let tildes = pair_tildes(strategy, n)?;

    struct PairRow {
        i: usize,
        j: usize,
        deficit: f64,
        alice_ac: f64,
        bob_ac: f64,
        cross_i: f64,
        cross_j: f64,
    }
    let rows: Vec<PairRow> = upper_pairs(n)
        .into_par_iter()
        .map(|(i, j)| {
            let (cij, cji) = (chsh_column(n, i, j), chsh_column(n, j, i));
            let beta = 0.25 * (corr[i][cij] + corr[j][cij] + corr[i][cji] - corr[j][cji]);
            let (ti, tj) = (tildes.get(i, j), tildes.get(j, i));
            Ok(PairRow {
                i,
                j,
                deficit: 1.0 - beta / CHSH_BIAS,
                alice_ac: psi.alice_norm(&alice[i].anticommutator(&alice[j]))?,
                bob_ac: psi.bob_norm(&ti.anticommutator(tj))?,
                cross_i: psi.consistency(&alice[i], ti)?,
                cross_j: psi.consistency(&alice[j], tj)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut pair_deficits = vec![vec![0.0; n]; n];
    let mut alice_anticomm = vec![vec![0.0; n]; n];
    let mut bob_anticomm = vec![vec![0.0; n]; n];
    let mut cross_consistency = vec![vec![0.0; n]; n];
    for r in &rows {
        pair_deficits[r.i][r.j] = r.deficit;
        alice_anticomm[r.i][r.j] = r.alice_ac;
        alice_anticomm[r.j][r.i] = r.alice_ac;
        bob_anticomm[r.i][r.j] = r.bob_ac;
        bob_anticomm[r.j][r.i] = r.bob_ac;
        cross_consistency[r.i][r.j] = r.cross_i;
        cross_consistency[r.j][r.i] = r.cross_j;
    }
    Ok(RigidityReport {
        n,
        epsilon,
        mean_pair_deficit: mean(rows.iter().map(|r| r.deficit)),
        mean_alice_anticomm: mean(rows.iter().map(|r| r.alice_ac)),
        mean_bob_anticomm: mean(rows.iter().map(|r| r.bob_ac)),
        mean_cross_consistency: mean(rows.iter().flat_map(|r| [r.cross_i, r.cross_j])),
        pair_deficits,
        alice_anticomm,
        bob_anticomm,
        cross_consistency,
    })
}

/// Replaces `z` by the nearest-in-construction observable that anti-commutes
/// exactly with `x`.
///
/// In an eigenbasis of `x` where `x = diag(Id, −Id)`, write `z` in blocks with
/// off-diagonal block `C = W S V†`. The result is `[[0, WV†], [VW†, 0]]` in
/// that basis, rotated back.
pub fn exact_anticommute_repair(
    x: &ComplexMatrix,
    z: &ComplexMatrix,
    state: &BipartiteState,
) -> Result<ComplexMatrix> {
    require_observable(x, "x")?;
    require_observable(z, "z")?;
    require_balanced(x, "x")?;
    require_balanced(z, "z")?;
    let d = x.rows();
    if z.rows() != d {
        return Err(contract("x and z have different dimensions"));
    }
    if state.dim_a() != d {
        return Err(contract("state's A dimension does not match the observables"));
    }
    let h = d / 2;
    let u = herm_eig(x)?.vectors;
    let zb = &(&u.adjoint() * z) * &u;
    let c = zb.block(0, h, h, h);
    let dec = svd(&c)?;
    let polar = &dec.u * &dec.v.adjoint();
    let mut k = ComplexMatrix::zeros(d, d);
    let polar_h = polar.adjoint();
    for r in 0..h {
        for s in 0..h {
            k.set(r, h + s, polar.get(r, s));
            k.set(h + r, s, polar_h.get(r, s));
        }
    }
    let out = &(&u * &k) * &u.adjoint();
    // remove rounding asymmetry so the result passes Hermitian checks downstream
    Ok((&out + &out.adjoint()).scale(0.5))
}

/// `A ↦ A ⊕ (−A)` on both sides with the state in the original summand.
pub fn balance_pad(strategy: &QuantumStrategy) -> Result<QuantumStrategy> {
    strategy.balance_pad()
}

pub fn is_balanced(strategy: &QuantumStrategy) -> bool {
    strategy
        .alice()
        .iter()
        .chain(strategy.bob())
        .all(|o| o.rows() % 2 == 0 && o.trace().norm() <= BALANCE_TOL)
}

/// Exactly anti-commuting qubit observables extracted from triples of
/// Alice's questions, with Bob-side counterparts.
#[derive(Clone, Debug, Serialize)]
pub struct QubitPairs {
    pub m: usize,
    #[serde(rename = "aliceX")]
    pub alice_x: Vec<ComplexMatrix>,
    #[serde(rename = "aliceZ")]
    pub alice_z: Vec<ComplexMatrix>,
    #[serde(rename = "bobX")]
    pub bob_x: Vec<ComplexMatrix>,
    #[serde(rename = "bobZ")]
    pub bob_z: Vec<ComplexMatrix>,
    /// Bob proxy index `j` chosen for each Alice question `i`.
    #[serde(rename = "proxyChoice")]
    pub proxy_choice: Vec<usize>,
    /// `max ‖{X_k, Z_k}‖` over both sides, as operators.
    #[serde(rename = "withinPairAnticomm")]
    pub within_pair_anticomm: Vec<f64>,
    /// `m × m`, entry `(k, l)` is the largest `‖[P_k, Q_l]|ψ⟩‖` over
    /// `P, Q ∈ {X, Z}`, both orders and both sides. Zero on the diagonal.
    #[serde(rename = "pairResiduals")]
    pub pair_residuals: Vec<Vec<f64>>,
    /// Largest `‖(P_k ⊗ Id − Id ⊗ P'_k)|ψ⟩‖` over `P ∈ {X, Z}`.
    pub consistency: Vec<f64>,
    /// Largest `‖(Z − Z̃)|ψ⟩‖` moved by any repair of pair `k`.
    #[serde(rename = "repairShifts")]
    pub repair_shifts: Vec<f64>,
    #[serde(rename = "meanCrossCommutator")]
    pub mean_cross_commutator: f64,
    #[serde(rename = "meanConsistency")]
    pub mean_consistency: f64,
}

struct SideQubits {
    x: Vec<ComplexMatrix>,
    z: Vec<ComplexMatrix>,
    shifts: Vec<f64>,
}

/// `|ψ⟩` seen from the side whose operators act first.
fn repair_shift(z: &ComplexMatrix, zt: &ComplexMatrix, psi: &BipartiteState) -> Result<f64> {
    psi.alice_norm(&(z - zt))
}

/// Two-stage construction on one side. `psi` has this side as its A factor.
/// `reversed` flips operator products, as needed for transposed Bob operators.
fn side_qubits(ops: &[ComplexMatrix], m: usize, psi: &BipartiteState, reversed: bool) -> Result<SideQubits> {
    let prod = |a: &ComplexMatrix, b: &ComplexMatrix| -> ComplexMatrix {
        if reversed {
            (b * a).scale_c(I)
        } else {
            (a * b).scale_c(I)
        }
    };
    let per_pair: Vec<(ComplexMatrix, ComplexMatrix, f64)> = (0..m)
        .into_par_iter()
        .map(|k| {
            let (a1, a2, a3) = (&ops[3 * k], &ops[3 * k + 1], &ops[3 * k + 2]);
            let a1t = exact_anticommute_repair(a2, a1, psi)?;
            let a3t = exact_anticommute_repair(a2, a3, psi)?;
            let x = prod(&a1t, a2);
            let zt = prod(a2, &a3t);
            let z = exact_anticommute_repair(&x, &zt, psi)?;
            let shift = [
                repair_shift(a1, &a1t, psi)?,
                repair_shift(a3, &a3t, psi)?,
                repair_shift(&zt, &z, psi)?,
            ]
            .into_iter()
            .fold(0.0, f64::max);
            Ok((x, z, shift))
        })
        .collect::<Result<_>>()?;
    let mut out = SideQubits {
        x: Vec::with_capacity(m),
        z: Vec::with_capacity(m),
        shifts: Vec::with_capacity(m),
    };
    for (x, z, s) in per_pair {
        out.x.push(x);
        out.z.push(z);
        out.shifts.push(s);
    }
    Ok(out)
}

pub fn build_qubit_pairs(strategy: &QuantumStrategy, n: usize) -> Result<QubitPairs> {
    if n < 3 {
        return Err(contract("qubit pairs need n >= 3"));
    }
    check_shape(strategy, n)?;
    let m = n / 3;
    let psi = strategy.state();
    let alice = strategy.alice();
    let tildes = pair_tildes(strategy, n)?;

    // Bob proxy for A_i: the pair partner j with the smallest consistency residual
    let mut proxy_choice = Vec::with_capacity(n);
    let mut bob_ops = Vec::with_capacity(n);
    for (i, a) in alice.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|&j| j != i) {
            let r = psi.consistency(a, tildes.get(i, j))?;
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((j, r));
            }
        }
        let (j, _) = best.expect("n >= 3 gives a partner");
        proxy_choice.push(j);
        bob_ops.push(tildes.get(i, j).clone());
    }

    let a_side = side_qubits(alice, m, psi, false)?;
    let swapped = psi.swapped();
    let b_side = side_qubits(&bob_ops, m, &swapped, true)?;

    let within_pair_anticomm = (0..m)
        .map(|k| {
            a_side.x[k]
                .anticommutator(&a_side.z[k])
                .norm_op()
                .max(b_side.x[k].anticommutator(&b_side.z[k]).norm_op())
        })
        .collect();

    let mut pair_residuals = vec![vec![0.0; m]; m];
    for (k, l) in (0..m).tuple_combinations() {
        let mut worst: f64 = 0.0;
        for (side, state) in [(&a_side, psi), (&b_side, &swapped)] {
            for p in [&side.x, &side.z] {
                for q in [&side.x, &side.z] {
                    worst = worst
                        .max(state.alice_norm(&p[k].commutator(&q[l]))?)
                        .max(state.alice_norm(&p[l].commutator(&q[k]))?);
                }
            }
        }
        pair_residuals[k][l] = worst;
        pair_residuals[l][k] = worst;
    }

    let consistency: Vec<f64> = (0..m)
        .map(|k| {
            Ok(psi
                .consistency(&a_side.x[k], &b_side.x[k])?
                .max(psi.consistency(&a_side.z[k], &b_side.z[k])?))
        })
        .collect::<Result<_>>()?;
    let repair_shifts = (0..m).map(|k| a_side.shifts[k].max(b_side.shifts[k])).collect();
    let mean_cross_commutator = mean((0..m).tuple_combinations().map(|(k, l)| pair_residuals[k][l]));
    Ok(QubitPairs {
        m,
        mean_consistency: mean(consistency.iter().copied()),
        alice_x: a_side.x,
        alice_z: a_side.z,
        bob_x: b_side.x,
        bob_z: b_side.z,
        proxy_choice,
        within_pair_anticomm,
        pair_residuals,
        consistency,
        repair_shifts,
        mean_cross_commutator,
    })
}

/// A chosen set of qubit pairs and its largest pairwise residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subset {
    pub indices: Vec<usize>,
    #[serde(rename = "maxResidual")]
    pub max_residual: f64,
}

fn check_subset_input(residuals: &[Vec<f64>], r: usize) -> Result<usize> {
    let m = residuals.len();
    if residuals.iter().any(|row| row.len() != m) {
        return Err(contract("residual matrix must be square"));
    }
    if r == 0 {
        return Err(contract("subset size must be at least 1"));
    }
    if r > m {
        return Err(contract(format!("subset size {r} exceeds {m} pairs")));
    }
    Ok(m)
}

fn max_within(residuals: &[Vec<f64>], set: &[usize]) -> f64 {
    set.iter()
        .tuple_combinations()
        .map(|(&a, &b)| residuals[a][b].max(residuals[b][a]))
        .fold(0.0, f64::max)
}

/// Enumerates all `r`-subsets in lexicographic order, keeping the first
/// with the smallest maximum residual.
pub fn select_good_subset_exact(residuals: &[Vec<f64>], r: usize) -> Result<Subset> {
    let m = check_subset_input(residuals, r)?;
    let mut best: Option<Subset> = None;
    for set in (0..m).combinations(r) {
        let v = max_within(residuals, &set);
        if best.as_ref().is_none_or(|b| v < b.max_residual) {
            best = Some(Subset {
                indices: set,
                max_residual: v,
            });
        }
    }
    Ok(best.expect("r <= m gives at least one subset"))
}

/// Repeatedly drops the vertex with the most above-threshold residuals,
/// breaking ties by larger residual sum and then by larger index.
pub fn select_good_subset_greedy(residuals: &[Vec<f64>], r: usize, threshold: f64) -> Result<Subset> {
    let m = check_subset_input(residuals, r)?;
    let w = |a: usize, b: usize| residuals[a][b].max(residuals[b][a]);
    let mut alive: Vec<usize> = (0..m).collect();
    while alive.len() > r {
        let score = |v: usize| {
            let others = alive.iter().filter(|&&u| u != v);
            let degree = others.clone().filter(|&&u| w(u, v) > threshold).count();
            let sum: f64 = others.map(|&u| w(u, v)).sum();
            (degree, sum, v)
        };
        let worst = alive
            .iter()
            .map(|&v| score(v))
            .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)))
            .expect("alive is nonempty")
            .2;
        alive.retain(|&v| v != worst);
    }
    Ok(Subset {
        max_residual: max_within(residuals, &alive),
        indices: alive,
    })
}

/// Exact search for `m ≤ 12`, greedy deletion otherwise.
pub fn select_good_subset(residuals: &[Vec<f64>], r: usize, threshold: f64) -> Result<Subset> {
    if residuals.len() <= EXACT_SUBSET_MAX {
        select_good_subset_exact(residuals, r)
    } else {
        select_good_subset_greedy(residuals, r, threshold)
    }
}

/// Von Neumann entropy of the reduced state, in bits.
pub fn entanglement_entropy(state: &BipartiteState) -> Result<f64> {
    let keep = if state.dim_a() <= state.dim_b() { Keep::A } else { Keep::B };
    let rho = state.partial_trace(keep)?;
    let rho = (&rho + &rho.adjoint()).scale(0.5);
    let values = herm_eig(&rho)?.values;
    Ok(values
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0))
}

/// `r − 4δr + 2δ log₂ δ`.
pub fn fannes_lower_bound(r: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(contract(format!("delta must lie in (0, 1), got {delta}")));
    }
    let r = r as f64;
    Ok(r - 4.0 * delta * r + 2.0 * delta * delta.log2())
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyCertificate {
    #[serde(rename = "entropyBits")]
    pub entropy_bits: f64,
    pub r: usize,
    pub delta: f64,
    #[serde(rename = "fannesLowerBound")]
    pub fannes_lower_bound: f64,
    /// Overall bias deficit of the input strategy.
    pub epsilon: f64,
    /// Largest pairwise residual on the selected subset.
    pub eta: f64,
    pub subset: Vec<usize>,
    /// Whether the input was padded to make every observable balanced.
    pub padded: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct CertifyOptions {
    /// Subset size; defaults to all `⌊n/3⌋` pairs.
    pub r: Option<usize>,
    pub delta: f64,
    /// Edge threshold for greedy selection; defaults to the mean pair residual.
    pub threshold: Option<f64>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            r: None,
            delta: 0.01,
            threshold: None,
        }
    }
}

pub fn certify_entropy(strategy: &QuantumStrategy, n: usize, opts: &CertifyOptions) -> Result<EntropyCertificate> {
    let report = embedded_chsh_report(strategy, n)?;
    let padded = !is_balanced(strategy);
    let working = if padded { balance_pad(strategy)? } else { strategy.clone() };
    let pairs = build_qubit_pairs(&working, n)?;
    let r = opts.r.unwrap_or(pairs.m);
    let threshold = opts.threshold.unwrap_or(pairs.mean_cross_commutator);
    let subset = select_good_subset(&pairs.pair_residuals, r, threshold)?;
    Ok(EntropyCertificate {
        entropy_bits: entanglement_entropy(strategy.state())?,
        r,
        delta: opts.delta,
        fannes_lower_bound: fannes_lower_bound(r, opts.delta)?,
        epsilon: report.epsilon,
        eta: subset.max_residual,
        subset: subset.indices,
        padded,
    })
}

/// `⊗_q (cos θ|00⟩ + sin θ|11⟩)` with `θ = π/4 − t`, grouped as `(A…)(B…)`.
pub fn detuned_epr_state(q: usize, t: f64) -> Result<BipartiteState> {
    let theta = FRAC_PI_4 - t;
    let pair = BipartiteState::new(
        2,
        2,
        vec![C64::new(theta.cos(), 0.0), ZERO, ZERO, C64::new(theta.sin(), 0.0)],
    )?;
    let mut out = BipartiteState::new(1, 1, vec![C64::new(1.0, 0.0)])?;
    for _ in 0..q {
        out = out.tensor(&pair)?;
    }
    Ok(out)
}

/// Replaces the maximally entangled state of a `2^q`-dimensional strategy by
/// the detuned product of EPR pairs.
pub fn schmidt_detune(strategy: &QuantumStrategy, t: f64) -> Result<QuantumStrategy> {
    let d = strategy.dim_a();
    if !d.is_power_of_two() || strategy.dim_b() != d {
        return Err(contract("detuning needs equal power-of-two local dimensions"));
    }
    strategy.with_state(detuned_epr_state(d.trailing_zeros() as usize, t)?)
}

/// `A_i ↦ cos t·A_i + sin t·A_{i+1 mod n}`. Stays an observable whenever
/// consecutive observables anti-commute.
pub fn rotate_alice(strategy: &QuantumStrategy, t: f64) -> Result<QuantumStrategy> {
    let a = strategy.alice();
    let n = a.len();
    let rotated = (0..n)
        .map(|i| &a[i].scale(t.cos()) + &a[(i + 1) % n].scale(t.sin()))
        .collect();
    strategy.with_alice(rotated)
}

/// The optimal CHSH(n) strategy with Schmidt detuning `t` and Alice rotated by `tilt`.
pub fn noisy_slofstra(n: usize, t: f64, tilt: f64) -> Result<QuantumStrategy> {
    let s = crate::clifford::slofstra_strategy(n)?;
    rotate_alice(&schmidt_detune(&s, t)?, tilt)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p]
        .into_iter()
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.log2())
        .sum()
}
