//! Numerical integration of the k commuting Hamiltonian flows and their
//! variational equations, torus return lattice, monodromy matrices G_j and
//! their reduction to Xi_j on the quotient.

use ndarray::prelude::*;
use num_complex::Complex64;

use crate::error::{GermError, Result};
use crate::linalg::{self, C64};
use crate::symcore::{quotient_frame, reduce_operator, QuotientFrame, SymplecticSpace, TOL_RANK};

/// A family of k Hamiltonians in involution on R^{2n}, with a marked torus
/// base point. Coordinates follow the (positions | momenta) packing of the
/// ambient [`SymplecticSpace`]; flows use q' = H_p, p' = -H_q.
pub trait HamiltonianModel: Sync {
    /// Half-dimension n of the phase space.
    fn half_dim(&self) -> usize;
    /// Number of commuting flows, k < n.
    fn num_flows(&self) -> usize;
    fn value(&self, j: usize, z: &ArrayView1<f64>) -> f64;
    fn gradient(&self, j: usize, z: &ArrayView1<f64>) -> Array1<f64>;
    fn hessian(&self, j: usize, z: &ArrayView1<f64>) -> Array2<f64>;
    /// The marked point m on the torus.
    fn base_point(&self) -> Array1<f64>;
    /// Phase point for a k-tuple of torus angles.
    fn torus_chart(&self, angles: &[f64]) -> Array1<f64>;
    /// Which coordinates are angles (compared modulo 2 pi).
    fn angle_mask(&self) -> Vec<bool>;
    /// Analytic return-lattice generators, if the model knows them.
    fn analytic_lattice(&self) -> Option<Vec<Array1<f64>>> {
        None
    }
    /// Flow times realizing a given angle offset through the combined flow
    /// g^{t}, if the model knows the angle advance map.
    fn times_for_angles(&self, angles: &[f64]) -> Option<Array1<f64>> {
        let _ = angles;
        None
    }
    fn name(&self) -> &str {
        "model"
    }

    fn space(&self) -> SymplecticSpace {
        SymplecticSpace::new(self.half_dim())
    }
}

/// The torus return lattice: k generators of the subgroup of flow times that
/// fix the base point.
#[derive(Debug, Clone)]
pub struct PeriodLattice {
    pub generators: Vec<Array1<f64>>,
    pub return_residuals: Vec<f64>,
}

/// Monodromy matrices over the lattice generators, with measured residuals
/// and the quotient frame at the base point.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub monodromies: Vec<Array2<C64>>,
    pub commutation_residuals: Array2<f64>,
    pub symplectic_residuals: Vec<f64>,
    pub frame: QuotientFrame,
    pub reduced: Vec<Array2<C64>>,
}

/// Integrate the flow of F_j together with its variational equation
/// Y' = Omega Hess(F_j) Y by classical fixed-step RK4.
pub fn integrate_variational<M: HamiltonianModel + ?Sized>(
    model: &M,
    j: usize,
    t_final: f64,
    start: &Array1<f64>,
    step: f64,
) -> Result<(Array1<f64>, Array2<f64>)> {
    assert!(step > 0.0, "step must be positive");
    let dim = 2 * model.half_dim();
    let space = model.space();
    let mut z = start.clone();
    let mut y = Array2::<f64>::eye(dim);
    if t_final == 0.0 {
        return Ok((z, y));
    }
    let nsteps = (t_final.abs() / step).ceil().max(1.0) as usize;
    let h = t_final / nsteps as f64;

    let field = |z: &Array1<f64>, y: &Array2<f64>| -> (Array1<f64>, Array2<f64>) {
        let grad = model.gradient(j, &z.view());
        let dz = space.omega_apply(&grad.view());
        let hess = model.hessian(j, &z.view());
        // Omega M: top rows <- bottom rows of M, bottom <- -top
        let n = model.half_dim();
        let mut a = Array2::<f64>::zeros((dim, dim));
        a.slice_mut(s![..n, ..]).assign(&hess.slice(s![n.., ..]));
        a.slice_mut(s![n.., ..])
            .assign(&hess.slice(s![..n, ..]).mapv(|x| -x));
        (dz, a.dot(y))
    };

    for istep in 0..nsteps {
        let (k1z, k1y) = field(&z, &y);
        let (k2z, k2y) = field(
            &(&z + &k1z.mapv(|x| x * h / 2.0)),
            &(&y + &k1y.mapv(|x| x * h / 2.0)),
        );
        let (k3z, k3y) = field(
            &(&z + &k2z.mapv(|x| x * h / 2.0)),
            &(&y + &k2y.mapv(|x| x * h / 2.0)),
        );
        let (k4z, k4y) = field(&(&z + &k3z.mapv(|x| x * h)), &(&y + &k3y.mapv(|x| x * h)));
        z = &z + &((k1z + k2z.mapv(|x| 2.0 * x) + k3z.mapv(|x| 2.0 * x) + k4z).mapv(|x| x * h / 6.0));
        y = &y + &((k1y + k2y.mapv(|x| 2.0 * x) + k3y.mapv(|x| 2.0 * x) + k4y).mapv(|x| x * h / 6.0));
        if !z.iter().all(|x| x.is_finite()) || !y.iter().all(|x| x.is_finite()) {
            return Err(GermError::Divergence {
                time: (istep + 1) as f64 * h,
            });
        }
    }
    Ok((z, y))
}

/// Composite flow g^{t} = flows of F_1..F_k applied in index order, with the
/// composed tangent map.
pub fn integrate_combined<M: HamiltonianModel + ?Sized>(
    model: &M,
    times: &ArrayView1<f64>,
    start: &Array1<f64>,
    step: f64,
) -> Result<(Array1<f64>, Array2<f64>)> {
    let dim = 2 * model.half_dim();
    let mut z = start.clone();
    let mut y = Array2::<f64>::eye(dim);
    for j in 0..model.num_flows() {
        if times[j] == 0.0 {
            continue;
        }
        let (z1, y1) = integrate_variational(model, j, times[j], &z, step)?;
        z = z1;
        y = y1.dot(&y);
    }
    Ok((z, y))
}

/// Phase-space distance with angle coordinates compared modulo 2 pi.
pub fn wrapped_distance(a: &Array1<f64>, b: &Array1<f64>, angle_mask: &[bool]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    a.iter()
        .zip(b.iter())
        .zip(angle_mask.iter())
        .map(|((&x, &y), &is_angle)| {
            let d = x - y;
            let d = if is_angle {
                let w = d.rem_euclid(tau);
                w.min(tau - w)
            } else {
                d.abs()
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Determine and verify the torus return lattice. Built-in cyclic models know
/// their lattice analytically; other models must supply candidate generators.
pub fn period_lattice<M: HamiltonianModel + ?Sized>(
    model: &M,
    hints: Option<&[Array1<f64>]>,
    tol_return: f64,
    step: f64,
) -> Result<PeriodLattice> {
    let candidates: Vec<Array1<f64>> = match hints {
        Some(h) => h.to_vec(),
        None => model.analytic_lattice().ok_or_else(|| {
            GermError::ModelError(
                "model has no analytic return lattice; supply generator hints".into(),
            )
        })?,
    };
    let k = model.num_flows();
    if candidates.len() != k {
        return Err(GermError::InputError(format!(
            "need {} lattice generators, got {}",
            k,
            candidates.len()
        )));
    }
    // linear independence of the generators
    let mut gmat = Array2::<C64>::zeros((k, k));
    for (i, t) in candidates.iter().enumerate() {
        for j in 0..k {
            gmat[(i, j)] = Complex64::new(t[j], 0.0);
        }
    }
    if linalg::numerical_rank(&gmat, TOL_RANK) != k {
        return Err(GermError::RankError(
            "lattice generators are linearly dependent".into(),
        ));
    }
    let base = model.base_point();
    let mask = model.angle_mask();
    let mut residuals = Vec::with_capacity(k);
    for t in &candidates {
        let (end, _) = integrate_combined(model, &t.view(), &base, step)?;
        let r = wrapped_distance(&end, &base, &mask);
        if r > tol_return {
            return Err(GermError::PeriodRejected {
                residual: r,
                tol: tol_return,
            });
        }
        residuals.push(r);
    }
    Ok(PeriodLattice {
        generators: candidates,
        return_residuals: residuals,
    })
}

/// Monodromy matrices G_j over the lattice generators, the quotient frame at
/// the base point, and the reduced operators Xi_j.
pub fn monodromy_matrices<M: HamiltonianModel + ?Sized>(
    model: &M,
    lattice: &PeriodLattice,
    step: f64,
) -> Result<MonodromyResult> {
    let space = model.space();
    let base = model.base_point();
    let k = model.num_flows();

    let maps: Vec<Array2<C64>> = crate::par::map_indexed(lattice.generators.len(), |j| {
        let (_, y) = integrate_combined(model, &lattice.generators[j].view(), &base, step)?;
        Ok(linalg::to_complex(&y))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let mut commutation = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            if i != j {
                commutation[(i, j)] = linalg::commutator_residual(&maps[i], &maps[j]);
            }
        }
    }
    let symplectic_residuals: Vec<f64> = maps
        .iter()
        .map(|g| space.symplectic_residual(g))
        .collect::<Result<_>>()?;

    let gradients: Vec<Array1<f64>> = (0..k).map(|j| model.gradient(j, &base.view())).collect();
    let frame = quotient_frame(&space, &gradients, TOL_RANK)?;

    Ok(MonodromyResult {
        monodromies: maps,
        commutation_residuals: commutation,
        symplectic_residuals,
        frame,
        reduced: Vec::new(),
    })
}

/// Fill in the reduced monodromy operators Xi_j = reduce(G_j) on the quotient.
pub fn reduced_monodromy<M: HamiltonianModel + ?Sized>(
    model: &M,
    result: &mut MonodromyResult,
    tol: f64,
) -> Result<()> {
    let space = model.space();
    let mut reduced = Vec::with_capacity(result.monodromies.len());
    for (j, g) in result.monodromies.iter().enumerate() {
        let red = reduce_operator(&space, g, &result.frame, tol, false)?;
        if red.residual_off_sigma > tol {
            return Err(GermError::InvarianceError {
                index: j,
                residual: red.residual_off_sigma,
            });
        }
        reduced.push(red.xi_matrix);
    }
    result.reduced = reduced;
    Ok(())
}

/// Maximum |{F_i, F_j}| over sample points and index pairs.
pub fn involution_check<M: HamiltonianModel + ?Sized>(
    model: &M,
    samples: &[Array1<f64>],
) -> f64 {
    let space = model.space();
    let k = model.num_flows();
    let mut worst = 0.0f64;
    for z in samples {
        let grads: Vec<Array1<f64>> = (0..k).map(|j| model.gradient(j, &z.view())).collect();
        for i in 0..k {
            for j in (i + 1)..k {
                // [F, G] = dF(J dG)
                let bracket = grads[i].dot(&space.j_apply(&grads[j].view()));
                worst = worst.max(bracket.abs());
            }
        }
    }
    worst
}

/// Default RK4 step as a fraction of a reference period.
pub fn default_step(period: f64) -> f64 {
    (period.abs() / 20_000.0).max(1e-9)
}
