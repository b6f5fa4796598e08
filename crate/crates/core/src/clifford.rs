//! Clifford-algebra generators and the vector-to-observable lift.
//!
//! With `|ψ⟩ = D^{-1/2} Σ|ii⟩` one has `⟨ψ|A ⊗ B|ψ⟩ = Tr(AᵀB)/D`. Alice gets
//! `A = Σ x_k γ_k` and Bob gets `B = (Σ y_k γ_k)ᵀ`, so the correlator is
//! `Tr(γ-combination product)/D = x·y` because the generators are
//! trace-orthonormal.

use crate::error::{contract, Error, Result};
use crate::game::QuantumStrategy;
use crate::matcore::{kron_all, BipartiteState, ComplexMatrix, MAX_DIM};
use crate::sdpsolve::VectorStrategy;

/// Pairwise anti-commuting Hermitian involutions on `C^dim`.
#[derive(Clone, Debug)]
pub struct CliffordBasis {
    pub dim: usize,
    pub generators: Vec<ComplexMatrix>,
}

impl CliffordBasis {
    pub fn r(&self) -> usize {
        self.generators.len()
    }

    /// `Σ c_k γ_k`.
    pub fn combine(&self, coeffs: &[f64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, g) in coeffs.iter().zip(&self.generators) {
            if *c != 0.0 {
                out = &out + &g.scale(*c);
            }
        }
        out
    }
}

fn dim_for(r: usize) -> Result<usize> {
    let q = r / 2;
    let dim = 1usize
        .checked_shl(q as u32)
        .filter(|&d| d <= MAX_DIM && q < usize::BITS as usize)
        .ok_or_else(|| Error::Capacity(format!("{r} generators need dimension 2^{q}")))?;
    Ok(dim)
}

/// Jordan–Wigner generators on `q = ⌊r/2⌋` qubits:
/// `γ_{2k−1} = Z^{⊗(k−1)} X Id^{⊗(q−k)}`, `γ_{2k} = Z^{⊗(k−1)} Y Id^{⊗(q−k)}`,
/// and `Z^{⊗q}` as the last generator when `r` is odd. `r = 1` gives `(1)`.
pub fn clifford_generators(r: usize) -> Result<CliffordBasis> {
    if r == 0 {
        return Err(contract("need at least one generator"));
    }
    let dim = dim_for(r)?;
    let q = r / 2;
    if q == 0 {
        return Ok(CliffordBasis {
            dim: 1,
            generators: vec![ComplexMatrix::identity(1)],
        });
    }
    let (x, y, z, id) = (
        ComplexMatrix::pauli_x(),
        ComplexMatrix::pauli_y(),
        ComplexMatrix::pauli_z(),
        ComplexMatrix::identity(2),
    );
    let string = |k: usize, p: &ComplexMatrix| -> Result<ComplexMatrix> {
        let factors: Vec<&ComplexMatrix> = (0..q)
            .map(|site| match site.cmp(&k) {
                std::cmp::Ordering::Less => &z,
                std::cmp::Ordering::Equal => p,
                std::cmp::Ordering::Greater => &id,
            })
            .collect();
        kron_all(factors)
    };
    let mut generators = Vec::with_capacity(r);
    for k in 0..q {
        generators.push(string(k, &x)?);
        generators.push(string(k, &y)?);
    }
    if r % 2 == 1 {
        generators.push(kron_all(std::iter::repeat_n(&z, q))?);
    }
    Ok(CliffordBasis { dim, generators })
}

/// Observables on a maximally entangled state whose correlators equal the
/// inner products of the given unit vectors.
pub fn tsirelson_lift(vstrat: &VectorStrategy) -> Result<QuantumStrategy> {
    let basis = clifford_generators(vstrat.rank())?;
    let alice = vstrat.xs().iter().map(|x| basis.combine(x)).collect();
    let bob = vstrat
        .ys()
        .iter()
        .map(|y| basis.combine(y).transpose())
        .collect();
    QuantumStrategy::new(alice, bob, BipartiteState::max_entangled(basis.dim)?)
}

/// The optimal CHSH(n) strategy: `A_i = γ_i` and
/// `B_ij = ((−1)^{[j<i]} A_iᵀ + A_jᵀ)/√2` on `2^{⌊n/2⌋}` dimensions.
/// Bob's questions follow the column order of [`crate::game::chsh_n`].
pub fn slofstra_strategy(n: usize) -> Result<QuantumStrategy> {
    if n < 2 {
        return Err(contract("CHSH(n) strategies need n >= 2"));
    }
    let basis = clifford_generators(n)?;
    let alice = basis.generators.clone();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut bob = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let sign = if j < i { -1.0 } else { 1.0 };
            let b = &alice[i].transpose().scale(sign) + &alice[j].transpose();
            bob.push(b.scale(s));
        }
    }
    QuantumStrategy::new(alice, bob, BipartiteState::max_entangled(basis.dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{bias_of, chsh_n};
    use crate::rigidity::entanglement_entropy;
    use crate::sdpsolve::{solve_bias, SolveOptions};
    use crate::CHSH_BIAS;

    fn check_invariants(b: &CliffordBasis) {
        for (k, g) in b.generators.iter().enumerate() {
            assert!(g.is_hermitian(1e-12));
            assert!(g.involution_defect() <= 1e-12);
            for (l, h) in b.generators.iter().enumerate() {
                let tr = (g * h).trace();
                if k == l {
                    assert!((tr.re - b.dim as f64).abs() < 1e-10 && tr.im.abs() < 1e-10);
                } else {
                    assert!(g.anticommutator(h).norm_max() <= 1e-12, "{k} {l}");
                    assert!(tr.norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn generator_examples() {
        let b = clifford_generators(1).unwrap();
        assert_eq!((b.dim, b.r()), (1, 1));

        let b = clifford_generators(2).unwrap();
        assert_eq!(b.dim, 2);
        assert_eq!(b.generators[0], ComplexMatrix::pauli_x());
        assert_eq!(b.generators[1], ComplexMatrix::pauli_y());

        let b = clifford_generators(3).unwrap();
        assert_eq!(b.dim, 2);
        assert_eq!(b.generators[2], ComplexMatrix::pauli_z());

        let b = clifford_generators(5).unwrap();
        assert_eq!(b.dim, 4);
        for r in 1..=9 {
            check_invariants(&clifford_generators(r).unwrap());
        }
    }

    #[test]
    fn generator_capacity() {
        assert!(matches!(clifford_generators(26), Err(Error::Capacity(_))));
        assert_eq!(dim_for(24).unwrap(), 4096);
    }

    #[test]
    fn lift_reproduces_inner_products() {
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let v = VectorStrategy::new(vec![e1.clone()], vec![e1.clone(), e2], 0.0).unwrap();
        let q = tsirelson_lift(&v).unwrap();
        let c = q.correlations();
        assert!((c[0][0] - 1.0).abs() < 1e-12);
        assert!(c[0][1].abs() < 1e-12);
    }

    #[test]
    fn lift_of_optimal_chsh_vectors() {
        let g = chsh_n(2).unwrap();
        let sol = solve_bias(&g, &SolveOptions::default()).unwrap();
        let q = tsirelson_lift(&sol.strategy).unwrap();
        let b = bias_of(&q, &g).unwrap();
        assert!((b.bias - sol.strategy.objective()).abs() < 1e-9);
        assert!((b.bias - CHSH_BIAS).abs() < 1e-6);
        let gram = sol.strategy.cross_gram();
        for (row_c, row_g) in q.correlations().iter().zip(&gram) {
            for (c, g) in row_c.iter().zip(row_g) {
                assert!((c - g).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lift_handles_odd_rank() {
        let s = 1.0 / 3f64.sqrt();
        let v = VectorStrategy::new(
            vec![vec![s, s, s], vec![0.0, 0.0, 1.0]],
            vec![vec![1.0, 0.0, 0.0], vec![0.6, 0.0, 0.8]],
            0.0,
        )
        .unwrap();
        let q = tsirelson_lift(&v).unwrap();
        assert_eq!(q.dim_a(), 2);
        let gram = v.cross_gram();
        for (row_c, row_g) in q.correlations().iter().zip(&gram) {
            for (c, g) in row_c.iter().zip(row_g) {
                assert!((c - g).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slofstra_n2_explicit() {
        let s = slofstra_strategy(2).unwrap();
        assert_eq!(s.alice()[0], ComplexMatrix::pauli_x());
        assert_eq!(s.alice()[1], ComplexMatrix::pauli_y());
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let xt = ComplexMatrix::pauli_x().transpose();
        let yt = ComplexMatrix::pauli_y().transpose();
        assert!(s.bob()[0].approx_eq(&(&xt + &yt).scale(r), 1e-15));
        assert!(s.bob()[1].approx_eq(&(&xt - &yt).scale(r), 1e-15));
        let b = bias_of(&s, &chsh_n(2).unwrap()).unwrap();
        assert!((b.bias - CHSH_BIAS).abs() < 1e-12);
    }

    #[test]
    fn slofstra_bob_observables_are_exact() {
        for n in 2..=6 {
            let s = slofstra_strategy(n).unwrap();
            for b in s.bob() {
                assert!(b.involution_defect() <= 1e-12);
            }
        }
    }

    #[test]
    fn slofstra_n4_anticommutes_on_state() {
        let s = slofstra_strategy(4).unwrap();
        assert_eq!(s.dim_a(), 4);
        for i in 0..4 {
            for j in i + 1..4 {
                let ac = s.alice()[i].anticommutator(&s.alice()[j]);
                assert!(s.state().alice_norm(&ac).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn slofstra_n3_entropy_is_one_bit() {
        let s = slofstra_strategy(3).unwrap();
        assert!((entanglement_entropy(s.state()).unwrap() - 1.0).abs() < 1e-9);
    }
}
