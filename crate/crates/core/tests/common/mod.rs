#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use xorgame::matcore::herm_eig;
use xorgame::{BipartiteState, ComplexMatrix, XorGame, C64};

pub fn gaussian_c(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian_c(rng));
    (&g + &g.adjoint()).scale(0.5)
}

pub fn random_unitary(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    herm_eig(&random_hermitian(rng, d)).unwrap().vectors
}

/// `U diag(Id, −Id) U†` for a random unitary `U`.
pub fn random_balanced_observable(rng: &mut impl Rng, d: usize) -> ComplexMatrix {
    let signs: Vec<f64> = (0..d).map(|k| if k < d / 2 { 1.0 } else { -1.0 }).collect();
    let u = random_unitary(rng, d);
    &(&u * &ComplexMatrix::diag_real(&signs)) * &u.adjoint()
}

/// `e^{iηH}` for a random Hermitian `H`.
pub fn near_identity_unitary(rng: &mut impl Rng, d: usize, eta: f64) -> ComplexMatrix {
    let eig = herm_eig(&random_hermitian(rng, d)).unwrap();
    let phases = ComplexMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::from_polar(1.0, eta * eig.values[i])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &(&eig.vectors * &phases) * &eig.vectors.adjoint()
}

pub fn random_state(rng: &mut impl Rng, da: usize, db: usize) -> BipartiteState {
    let amps = (0..da * db).map(|_| gaussian_c(rng)).collect();
    BipartiteState::normalized(da, db, amps).unwrap()
}

pub fn random_game(rng: &mut impl Rng, na: usize, nb: usize) -> XorGame {
    let rows = (0..na)
        .map(|_| (0..nb).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    XorGame::normalized(rows).unwrap()
}

/// A balanced pair `(x, z)` in dimension `d`: either independent, or `z`
/// a small rotation of an exact anti-commuting partner of `x`.
pub fn repair_instance(rng: &mut impl Rng, d: usize, k: usize) -> (ComplexMatrix, ComplexMatrix) {
    let x = random_balanced_observable(rng, d);
    if k % 2 == 0 {
        return (x, random_balanced_observable(rng, d));
    }
    let eig = herm_eig(&x).unwrap();
    let h = d / 2;
    let w = random_unitary(rng, h);
    let mut k0 = ComplexMatrix::zeros(d, d);
    let wh = w.adjoint();
    for r in 0..h {
        for s in 0..h {
            k0.set(r, h + s, w.get(r, s));
            k0.set(h + r, s, wh.get(r, s));
        }
    }
    let u = &eig.vectors;
    let z0 = &(u * &k0) * &u.adjoint();
    let v = near_identity_unitary(rng, d, 0.05 * (k % 7) as f64);
    (x, &(&v * &z0) * &v.adjoint())
}
