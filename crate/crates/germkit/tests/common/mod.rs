//! Shared helpers for integration tests: seeded random symplectic matrices
//! built from canonical blocks and symplectic conjugators, plus a direct
//! power-boundedness probe.

// Each integration-test binary compiles its own copy of this module and uses
// a different subset of it.
#![allow(dead_code)]

use germkit::linalg::{self, C64};
use germkit::symcore::SymplecticSpace;
use ndarray::prelude::*;
use rand::Rng;

/// Canonical 2x2 behavior on one (q_i, p_i) coordinate pair.
#[derive(Debug, Clone, Copy)]
pub enum BlockKind {
    Rotation(f64),
    Identity,
    Hyperbolic(f64),
}

impl BlockKind {
    pub fn is_stable(&self) -> bool {
        !matches!(self, BlockKind::Hyperbolic(_))
    }
}

/// Direct sum of canonical blocks, block i acting on coordinates (i, n+i).
pub fn block_direct_sum(n: usize, blocks: &[BlockKind]) -> Array2<f64> {
    assert_eq!(blocks.len(), n);
    let mut s = Array2::<f64>::eye(2 * n);
    for (i, b) in blocks.iter().enumerate() {
        match *b {
            BlockKind::Identity => {}
            BlockKind::Rotation(phi) => {
                s[(i, i)] = phi.cos();
                s[(i, n + i)] = phi.sin();
                s[(n + i, i)] = -phi.sin();
                s[(n + i, n + i)] = phi.cos();
            }
            BlockKind::Hyperbolic(lambda) => {
                s[(i, i)] = lambda.exp();
                s[(n + i, n + i)] = (-lambda).exp();
            }
        }
    }
    s
}

/// Random symplectic conjugator exp(Omega * Sym) with entries of the
/// symmetric generator drawn uniformly from [-scale, scale].
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Array2<f64> {
    let dim = 2 * n;
    let mut sym = Array2::<f64>::zeros((dim, dim));
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-scale..scale);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    let omega = SymplecticSpace::new(n).form_matrix();
    linalg::expm(&omega.dot(&sym))
}

/// Conjugated direct sum P (sum of blocks) P^{-1} as a complex matrix,
/// together with the conditioning bound ||P|| ||P^{-1}|| that bounds every
/// power of the stable part.
pub fn random_block_symplectic<R: Rng>(
    rng: &mut R,
    n: usize,
    blocks: &[BlockKind],
) -> (Array2<C64>, f64) {
    let p = random_symplectic(rng, n, 0.4);
    let pc = linalg::to_complex(&p);
    let pinv = linalg::pinv(&pc, 1e-12);
    let s = pc.dot(&linalg::to_complex(&block_direct_sum(n, blocks))).dot(&pinv);
    let cond = linalg::spectral_norm(&pc) * linalg::spectral_norm(&pinv);
    (s, cond)
}

/// Cyclic-model spec builders shared by the integration suites.
pub mod specs {
    use germkit::models::{CyclicBasePoint, CyclicModelSpec};

    pub fn base(k: usize, m: usize) -> CyclicBasePoint {
        CyclicBasePoint {
            actions: vec![1.0; k],
            theta: vec![0.0; k],
            p: vec![0.0; m],
            q: vec![0.0; m],
        }
    }

    /// n=2, k=1 model with the given 2x2 transverse Hessian in (p, q).
    pub fn k1(h: [[f64; 2]; 2]) -> CyclicModelSpec {
        CyclicModelSpec {
            kind: "cyclic_quadratic".into(),
            n: 2,
            k: 1,
            frequencies: vec![1.0],
            transverse_hessian: h.iter().map(|r| r.to_vec()).collect(),
            epsilon: None,
            quartic: None,
            base_point: base(1, 1),
        }
    }

    pub fn harmonic(w2: f64) -> CyclicModelSpec {
        k1([[w2, 0.0], [0.0, w2]])
    }

    pub fn hyperbolic(lambda: f64) -> CyclicModelSpec {
        k1([[0.0, lambda], [lambda, 0.0]])
    }

    pub fn zero_hessian() -> CyclicModelSpec {
        k1([[0.0, 0.0], [0.0, 0.0]])
    }

    /// n=3, k=2 harmonic model with transverse frequency w.
    pub fn k2_harmonic(w: f64) -> CyclicModelSpec {
        CyclicModelSpec {
            kind: "cyclic_quadratic".into(),
            n: 3,
            k: 2,
            frequencies: vec![1.0, 0.7],
            transverse_hessian: vec![vec![w, 0.0], vec![0.0, w]],
            epsilon: None,
            quartic: None,
            base_point: base(2, 1),
        }
    }
}

/// Coarse RK4 step used where the pinned production step is not required.
pub fn coarse_step() -> f64 {
    2.0 * std::f64::consts::PI / 4000.0
}

/// Direct power-boundedness probe by repeated squaring up to j = 2^14.
/// Returns (bounded, max observed spectral norm).
pub fn power_bounded(s: &Array2<C64>, bound: f64) -> (bool, f64) {
    let mut p = s.clone();
    let mut worst = linalg::spectral_norm(&p);
    for _ in 0..14 {
        if worst > 1e3 {
            return (false, worst);
        }
        p = p.dot(&p);
        worst = worst.max(linalg::spectral_norm(&p));
        if !worst.is_finite() {
            return (false, f64::INFINITY);
        }
    }
    (worst <= bound, worst)
}
