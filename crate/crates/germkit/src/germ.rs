//! Germ existence/uniqueness decision, construction of the complex germ field
//! over the invariant torus by pushforward of the base lift, and numerical
//! verification of the germ axioms (lagrangian, tangent containment,
//! dissipativity, flow invariance) plus a continuity proxy for smoothness.

use ndarray::prelude::*;
use serde::Serialize;

use crate::error::{GermError, Result};
use crate::linalg::{self, C64};
use crate::monodromy::{
    integrate_combined, monodromy_matrices, period_lattice, reduced_monodromy, HamiltonianModel,
    MonodromyResult, PeriodLattice,
};
use crate::pli::{self, PLIResult};
use crate::spectral::{classify_stability, SpectralTolerances, StabilityClass, StabilityReport};
use crate::symcore::{
    quotient_completion, subspace_distance, Subspace, SymplecticSpace,
};

/// Maximum total number of grid samples.
pub const GRID_CAP: usize = 4096;
/// Default per-axis sample count.
pub const DEFAULT_GRID: usize = 64;

/// Existence/uniqueness verdict with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct Decision {
    pub exists: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unique: Option<bool>,
    pub reasons: Vec<String>,
}

/// Everything the monodromy/stability pipeline produces for one model.
#[derive(Debug)]
pub struct ModelAnalysis {
    pub lattice: PeriodLattice,
    pub monodromy: MonodromyResult,
    pub reports: Vec<StabilityReport>,
    pub decision: Decision,
    pub step: f64,
}

impl ModelAnalysis {
    pub fn reduced_space(&self) -> SymplecticSpace {
        SymplecticSpace::new(self.monodromy.frame.reduced_dim() / 2)
    }
}

/// One sampled point of the germ field.
#[derive(Debug, Clone)]
pub struct GermSample {
    pub angles: Vec<f64>,
    pub point: Array1<f64>,
    /// 2n x n columns spanning r^n(p); the first k columns span the
    /// complexified torus tangent at p.
    pub frame: Array2<C64>,
}

/// The germ as explicit frames over a uniform angle grid, plus the data of
/// its construction.
#[derive(Debug, Clone)]
pub struct GermField {
    pub grid: Vec<usize>,
    pub samples: Vec<GermSample>,
    /// The base lift r^n(m) at the marked point.
    pub base_subspace: Subspace,
    /// The common P.L.I. subspace R on the quotient that was lifted.
    pub reduced_subspace: Subspace,
    pub construction_notes: Vec<String>,
}

/// Per-sample axiom residuals.
#[derive(Debug, Clone, Serialize)]
pub struct SampleResiduals {
    pub lagrangian: f64,
    pub min_krein: f64,
}

/// Tolerances for the four verified axioms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GermTolerances {
    pub lagrangian: f64,
    pub dissipativity_margin: f64,
    pub invariance: f64,
    pub continuity: f64,
}

impl Default for GermTolerances {
    fn default() -> Self {
        GermTolerances {
            lagrangian: 1e-8,
            dissipativity_margin: 1e-8,
            invariance: 1e-6,
            continuity: 1e-3,
        }
    }
}

impl GermTolerances {
    /// Relax the continuity tolerance to the first-order bound for a field
    /// that genuinely varies along the torus: adjacent frames then differ by
    /// O(grid spacing), so the meaningful tolerance scales with 2 pi / N.
    pub fn grid_scaled(mut self, grid: &[usize]) -> Self {
        let min_n = grid.iter().copied().min().unwrap_or(1).max(1) as f64;
        self.continuity = self.continuity.max(4.0 * std::f64::consts::PI / min_n);
        self
    }
}

/// Verification outcome over a whole germ field.
#[derive(Debug, Clone, Serialize)]
pub struct GermReport {
    pub lagrangian_residual: f64,
    pub dissipativity_margin: f64,
    /// One residual per angle axis: worst distance between the frame pushed
    /// one grid step along that axis and the frame stored at the neighbor.
    pub invariance_residuals: Vec<f64>,
    pub continuity_residual: f64,
    pub per_sample: Vec<SampleResiduals>,
    pub tolerances: GermTolerances,
    pub pass: bool,
}

fn grid_offsets(grid: &[usize]) -> Vec<usize> {
    // row-major strides: last axis fastest
    let mut strides = vec![1usize; grid.len()];
    for a in (0..grid.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * grid[a + 1];
    }
    strides
}

fn unindex(mut flat: usize, grid: &[usize], strides: &[usize]) -> Vec<usize> {
    let mut idx = vec![0usize; grid.len()];
    for a in 0..grid.len() {
        idx[a] = flat / strides[a];
        flat %= strides[a];
    }
    idx
}

fn neighbor_flat(idx: &[usize], axis: usize, grid: &[usize], strides: &[usize]) -> usize {
    let mut j = 0;
    for a in 0..grid.len() {
        let v = if a == axis { (idx[a] + 1) % grid[a] } else { idx[a] };
        j += v * strides[a];
    }
    j
}

/// Run the full pipeline: return lattice, monodromies, reduced operators,
/// per-operator stability reports, and the existence/uniqueness decision.
pub fn analyze_model<M: HamiltonianModel + ?Sized>(
    model: &M,
    tols: &SpectralTolerances,
    step: f64,
) -> Result<ModelAnalysis> {
    let lattice = period_lattice(model, None, 1e-8, step)?;
    let mut monodromy = monodromy_matrices(model, &lattice, step)?;
    reduced_monodromy(model, &mut monodromy, 1e-6)?;

    let reduced_space = SymplecticSpace::new(monodromy.frame.reduced_dim() / 2);
    let reports: Vec<StabilityReport> = monodromy
        .reduced
        .iter()
        .map(|xi| classify_stability(&reduced_space, xi, tols))
        .collect::<Result<_>>()?;

    let exists = reports.iter().all(|r| r.class != StabilityClass::Unstable);
    let mut reasons = Vec::new();
    for (j, r) in reports.iter().enumerate() {
        reasons.push(format!("reduced operator {}: {:?}", j + 1, r.class));
        for reason in &r.reasons {
            reasons.push(format!("  operator {}: {}", j + 1, reason));
        }
    }
    let unique = if exists {
        let clusters = pli::joint_decompose(&reduced_space, &monodromy.reduced, tols)?;
        let (u, cert) = pli::uniqueness_check(&reduced_space, &monodromy.reduced, &clusters)?;
        reasons.extend(cert);
        Some(u)
    } else {
        None
    };

    Ok(ModelAnalysis {
        lattice,
        monodromy,
        reports,
        decision: Decision {
            exists,
            unique,
            reasons,
        },
        step,
    })
}

/// Convenience wrapper returning only the decision.
pub fn germ_exists<M: HamiltonianModel + ?Sized>(
    model: &M,
    tols: &SpectralTolerances,
    step: f64,
) -> Result<Decision> {
    Ok(analyze_model(model, tols, step)?.decision)
}

/// Lift a Lagrangian subspace R of the quotient to the base frame
/// span(tangent basis | embedded R representatives).
fn lift_subspace(
    analysis: &ModelAnalysis,
    r: &Subspace,
) -> Result<(Array2<C64>, Subspace)> {
    let frame = &analysis.monodromy.frame;
    let k = frame.num_constraints();
    let m = frame.reduced_dim() / 2;
    let dim = frame.lambda_basis.nrows();
    let mut base = Array2::<C64>::zeros((dim, k + m));
    for j in 0..k {
        let col = frame.lambda_basis.column(j);
        let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        base.column_mut(j).assign(&col.mapv(|c| c / norm));
    }
    if r.rank() != m {
        return Err(GermError::ConsistencyError(format!(
            "quotient subspace has rank {}, expected {}",
            r.rank(),
            m
        )));
    }
    let rb = r.orthonormal();
    for j in 0..m {
        let v = frame.embed(&rb.column(j));
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        base.column_mut(k + j).assign(&v.mapv(|c| c / norm));
    }
    let lift = Subspace::new(base.clone())?;
    Ok((base, lift))
}

fn build_from_reduced<M: HamiltonianModel + ?Sized>(
    model: &M,
    analysis: &ModelAnalysis,
    r: &Subspace,
    grid: &[usize],
    notes: Vec<String>,
) -> Result<GermField> {
    let k = model.num_flows();
    if grid.len() != k || grid.iter().any(|&g| g == 0) {
        return Err(GermError::InputError(format!(
            "grid must give a positive sample count for each of the {} angle axes",
            k
        )));
    }
    let total: usize = grid.iter().product();
    if total > GRID_CAP {
        return Err(GermError::InputError(format!(
            "grid of {} samples exceeds the cap of {}",
            total, GRID_CAP
        )));
    }
    let (base_frame, base_lift) = lift_subspace(analysis, r)?;
    let strides = grid_offsets(grid);
    let tau = 2.0 * std::f64::consts::PI;
    let step = analysis.step;

    let samples: Vec<GermSample> = crate::par::map_indexed(total, |flat| {
        let idx = unindex(flat, grid, &strides);
        let angles: Vec<f64> = idx
            .iter()
            .zip(grid.iter())
            .map(|(&i, &g)| tau * i as f64 / g as f64)
            .collect();
        let times = model.times_for_angles(&angles).ok_or_else(|| {
            GermError::ModelError("model cannot map angles to flow times".into())
        })?;
        let (point, y) = integrate_combined(model, &times.view(), &model.base_point(), step)?;
        let mut frame = linalg::to_complex(&y).dot(&base_frame);
        for mut col in frame.columns_mut() {
            let norm = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            col.mapv_inplace(|c| c / norm);
        }
        Ok(GermSample {
            angles,
            point,
            frame,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    Ok(GermField {
        grid: grid.to_vec(),
        samples,
        base_subspace: base_lift,
        reduced_subspace: r.clone(),
        construction_notes: notes,
    })
}

/// Construct the germ field: R = common P.L.I. subspace of the reduced
/// monodromies, lifted at the base point and pushed to every grid sample by
/// the variational flow.
pub fn build_germ<M: HamiltonianModel + ?Sized>(
    model: &M,
    analysis: &ModelAnalysis,
    tols: &SpectralTolerances,
    grid: &[usize],
) -> Result<GermField> {
    if !analysis.decision.exists {
        return Err(GermError::Refused(format!(
            "no germ exists for this model: {}",
            analysis.decision.reasons.join("; ")
        )));
    }
    let reduced_space = analysis.reduced_space();
    let pli: PLIResult = pli::pli_common(&reduced_space, &analysis.monodromy.reduced, tols)?;
    let mut notes = vec!["base quotient subspace from common P.L.I. construction".into()];
    notes.extend(pli.per_cluster_choice.iter().cloned());
    build_from_reduced(model, analysis, &pli.subspace, grid, notes)
}

/// Verify the germ axioms on every sample of a field.
pub fn verify_germ<M: HamiltonianModel + ?Sized>(
    model: &M,
    field: &GermField,
    tols: &GermTolerances,
    step: f64,
) -> Result<GermReport> {
    if field.samples.is_empty() {
        return Err(GermError::InputError("germ field has no samples".into()));
    }
    let space = model.space();
    let k = model.num_flows();
    let grid = &field.grid;
    let strides = grid_offsets(grid);
    let tau = 2.0 * std::f64::consts::PI;

    // pointwise axioms: lagrangian + dissipativity
    let per_sample: Vec<SampleResiduals> = crate::par::map_slice(&field.samples, |sample| {
        let sub = Subspace::new(sample.frame.clone())?;
        let q = sub.orthonormal();
        let mut lagrangian = 0.0f64;
        for i in 0..q.ncols() {
            for j in 0..q.ncols() {
                lagrangian = lagrangian.max(space.form_value(&q.column(i), &q.column(j))?.norm());
            }
        }
        let tangent = Subspace::new(sample.frame.slice(s![.., ..k]).to_owned())?;
        let completion = quotient_completion(&sub, &tangent)?;
        let min_krein = if completion.ncols() == 0 {
            f64::INFINITY
        } else {
            let h = space.krein_matrix(&completion)?;
            let (w, _) = linalg::hermitian_eig(&h)?;
            w.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        Ok(SampleResiduals {
            lagrangian,
            min_krein,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let subspaces: Vec<Subspace> = field
        .samples
        .iter()
        .map(|s| Subspace::new(s.frame.clone()))
        .collect::<Result<_>>()?;

    // continuity: adjacent-sample frame distance per axis
    let mut continuity = 0.0f64;
    for flat in 0..field.samples.len() {
        let idx = unindex(flat, grid, &strides);
        for axis in 0..k {
            if grid[axis] < 2 {
                continue;
            }
            let nb = neighbor_flat(&idx, axis, grid, &strides);
            continuity = continuity.max(subspace_distance(&subspaces[flat], &subspaces[nb]));
        }
    }

    // invariance: push each frame one grid step along each axis and compare
    // against the independently constructed frame at the advanced sample
    let invariance_residuals: Vec<f64> = (0..k)
        .map(|axis| {
            let mut angle_step = vec![0.0; k];
            angle_step[axis] = tau / grid[axis] as f64;
            let times = model.times_for_angles(&angle_step).ok_or_else(|| {
                GermError::ModelError("model cannot map angles to flow times".into())
            })?;
            let worst = crate::par::map_indexed(field.samples.len(), |flat| {
                let idx = unindex(flat, grid, &strides);
                let nb = neighbor_flat(&idx, axis, grid, &strides);
                let sample = &field.samples[flat];
                let (_, y) = integrate_combined(model, &times.view(), &sample.point, step)?;
                let pushed = Subspace::new(linalg::to_complex(&y).dot(&sample.frame))?;
                Ok(subspace_distance(&pushed, &subspaces[nb]))
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0f64, f64::max);
            Ok(worst)
        })
        .collect::<Result<_>>()?;

    let lagrangian_residual = per_sample
        .iter()
        .map(|r| r.lagrangian)
        .fold(0.0f64, f64::max);
    let dissipativity_margin = per_sample
        .iter()
        .map(|r| r.min_krein)
        .fold(f64::INFINITY, f64::min);
    let pass = lagrangian_residual <= tols.lagrangian
        && dissipativity_margin >= tols.dissipativity_margin
        && invariance_residuals.iter().all(|&r| r <= tols.invariance)
        && continuity <= tols.continuity;

    Ok(GermReport {
        lagrangian_residual,
        dissipativity_margin,
        invariance_residuals,
        continuity_residual: continuity,
        per_sample,
        tolerances: *tols,
        pass,
    })
}

/// Transport the base frame along each full lattice generator and report the
/// subspace distance back to the base frame (invariance under each G_j).
pub fn period_coherence<M: HamiltonianModel + ?Sized>(
    model: &M,
    field: &GermField,
    lattice: &PeriodLattice,
    step: f64,
) -> Result<Vec<f64>> {
    let base = model.base_point();
    let base_frame = field.samples[0].frame.clone();
    let base_sub = Subspace::new(base_frame.clone())?;
    lattice
        .generators
        .iter()
        .map(|t| {
            let (_, y) = integrate_combined(model, &t.view(), &base, step)?;
            let pushed = Subspace::new(linalg::to_complex(&y).dot(&base_frame))?;
            Ok(subspace_distance(&pushed, &base_sub))
        })
        .collect()
}

/// When the germ is non-unique, construct a second, genuinely different germ
/// from the P.L.I. non-uniqueness witness.
pub fn second_germ_witness<M: HamiltonianModel + ?Sized>(
    model: &M,
    analysis: &ModelAnalysis,
    tols: &SpectralTolerances,
    grid: &[usize],
) -> Result<GermField> {
    match analysis.decision.unique {
        Some(false) => {}
        Some(true) => {
            return Err(GermError::Refused(
                "the germ is unique; no second germ exists".into(),
            ))
        }
        None => {
            return Err(GermError::Refused(
                "no germ exists; nothing to construct".into(),
            ))
        }
    }
    let reduced_space = analysis.reduced_space();
    let witness = pli::nonuniqueness_witness(&reduced_space, &analysis.monodromy.reduced, tols)?
        .ok_or_else(|| {
            GermError::ConsistencyError(
                "decision says non-unique but no witness subspace was produced".into(),
            )
        })?;
    build_from_reduced(
        model,
        analysis,
        &witness,
        grid,
        vec!["base quotient subspace from non-uniqueness witness twist".into()],
    )
}
