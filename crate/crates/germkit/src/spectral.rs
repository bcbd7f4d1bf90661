//! Spectral classification of symplectic matrices: eigenvalue clustering,
//! diagonalizability, unit-circle test, Krein signatures, stability and strong
//! stability.

use ndarray::prelude::*;
use ndarray_linalg::Eig;
use serde::Serialize;

use crate::error::{GermError, Result};
use crate::linalg::{self, c, C64};
use crate::symcore::{Subspace, SymplecticSpace, TOL_RANK};

/// Tolerances for spectral decisions. The paper gives no numerics; the
/// defaults separate RK4 integration error from genuine instability.
#[derive(Debug, Clone, Copy)]
pub struct SpectralTolerances {
    /// Absolute tolerance on | |sigma| - 1 |.
    pub tol_circle: f64,
    /// Relative eigenvalue clustering distance.
    pub tol_cluster: f64,
    /// Relative singular-value cutoff for ranks/kernels.
    pub tol_rank: f64,
    /// Strict-definiteness threshold for Krein counts.
    pub tol_definite: f64,
    /// Symplecticity gate on inputs.
    pub tol_symplectic: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        SpectralTolerances {
            tol_circle: 1e-8,
            tol_cluster: 1e-7,
            tol_rank: TOL_RANK,
            tol_definite: 1e-9,
            tol_symplectic: 1e-8,
        }
    }
}

/// Eigenvalues within the marginal band (tol_circle, MARGINAL_BAND] are
/// reported Unstable with a "marginal" certificate; strictness is the safe
/// direction for germ decisions.
pub const MARGINAL_BAND: f64 = 1e-5;

/// A clustered eigenvalue of a symplectic matrix with its numerical eigenspace.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub value: C64,
    pub algebraic_multiplicity: usize,
    pub eigenbasis: Subspace,
    pub geometric_multiplicity: usize,
    pub on_unit_circle: bool,
    /// (n_plus, n_minus, n_zero) of the Krein form on the eigenbasis.
    pub krein_signature: (usize, usize, usize),
    pub conditioning_warning: Option<String>,
}

impl EigenCluster {
    pub fn is_definite(&self) -> bool {
        let (p, m, z) = self.krein_signature;
        z == 0 && (p == 0 || m == 0)
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.geometric_multiplicity == self.algebraic_multiplicity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StabilityClass {
    Unstable,
    Stable,
    StronglyStable,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub class: StabilityClass,
    pub clusters: Vec<EigenCluster>,
    pub reasons: Vec<String>,
}

fn cluster_eigenvalues(values: &Array1<C64>, tol_cluster: f64) -> Vec<(C64, Vec<usize>)> {
    let maxabs = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let radius = tol_cluster * maxabs;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        va.arg()
            .partial_cmp(&vb.arg())
            .unwrap()
            .then(va.norm().partial_cmp(&vb.norm()).unwrap())
            .then(a.cmp(&b))
    });
    let mut clusters: Vec<(C64, Vec<usize>)> = Vec::new();
    for idx in order {
        let v = values[idx];
        let mut assigned = false;
        for (rep, members) in clusters.iter_mut() {
            if (*rep - v).norm() <= radius {
                members.push(idx);
                // running mean keeps the representative centered
                let m = members.len() as f64;
                *rep = *rep + (v - *rep) / c(m, 0.0);
                assigned = true;
                break;
            }
        }
        if !assigned {
            clusters.push((v, vec![idx]));
        }
    }
    clusters
}

/// Decompose the spectrum of a symplectic matrix into eigenvalue clusters with
/// numerical eigenspaces and Krein signatures.
pub fn spectral_decompose(
    space: &SymplecticSpace,
    s: &Array2<C64>,
    tols: &SpectralTolerances,
) -> Result<Vec<EigenCluster>> {
    let residual = space.symplectic_residual(s)?;
    if residual > tols.tol_symplectic {
        return Err(GermError::NotSymplectic { residual });
    }
    let (values, vectors) = s.eig()?;
    let maxabs = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let groups = cluster_eigenvalues(&values, tols.tol_cluster);
    let dim = space.dim();
    let s_norm = linalg::spectral_norm(s);
    let input_real = linalg::max_imag(s) <= 1e-12 * s_norm.max(1.0);

    let mut clusters: Vec<EigenCluster> = Vec::with_capacity(groups.len());
    for (rep, members) in &groups {
        let shifted = s - &(Array2::<C64>::eye(dim).mapv(|x| x * *rep));
        // anything within the cluster radius must land in the kernel
        let cutoff = (tols.tol_rank * linalg::singular_values(&shifted)[0])
            .max(2.0 * tols.tol_cluster * maxabs);
        let kernel = linalg::null_space_abs(&shifted, cutoff);
        let geo = kernel.ncols();
        if geo == 0 {
            return Err(GermError::ConsistencyError(format!(
                "empty numerical eigenspace at sigma = {rep}"
            )));
        }
        // residual check for conditioning
        let mut warn = None;
        let mut worst = 0.0f64;
        for i in members {
            let v = vectors.column(*i).to_owned();
            let r = s.dot(&v) - v.mapv(|x| x * values[*i]);
            let rnorm = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(rnorm);
        }
        if worst > 1e-6 * s_norm.max(1.0) {
            warn = Some(format!(
                "ill-conditioned eigenproblem: residual {worst:.3e} at sigma = {rep}"
            ));
        }
        let eigenbasis = Subspace::new(kernel)?;
        let h = space.krein_matrix(&eigenbasis.orthonormal())?;
        let (w, _) = linalg::hermitian_eig(&h)?;
        let sig = count_signature(&w, tols.tol_definite);
        clusters.push(EigenCluster {
            value: *rep,
            algebraic_multiplicity: members.len(),
            eigenbasis,
            geometric_multiplicity: geo,
            on_unit_circle: (rep.norm() - 1.0).abs() <= tols.tol_circle,
            krein_signature: sig,
            conditioning_warning: warn,
        });
    }

    if input_real {
        symmetrize_conjugate_pairs(space, &mut clusters, tols)?;
    }
    clusters.sort_by(|a, b| cluster_key(a.value).partial_cmp(&cluster_key(b.value)).unwrap());
    Ok(clusters)
}

fn cluster_key(v: C64) -> (f64, f64) {
    let mut arg = v.arg();
    if arg < -1e-12 {
        arg += 2.0 * std::f64::consts::PI;
    }
    (arg, v.norm())
}

fn count_signature(w: &Array1<f64>, tol: f64) -> (usize, usize, usize) {
    let p = w.iter().filter(|&&x| x > tol).count();
    let m = w.iter().filter(|&&x| x < -tol).count();
    (p, m, w.len() - p - m)
}

/// For real input the spectrum is conjugation-symmetric; force each cluster at
/// conj(sigma) to carry the conjugated eigenbasis of its partner so the
/// signatures swap exactly.
fn symmetrize_conjugate_pairs(
    space: &SymplecticSpace,
    clusters: &mut [EigenCluster],
    tols: &SpectralTolerances,
) -> Result<()> {
    let maxabs = clusters
        .iter()
        .map(|c| c.value.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let radius = 10.0 * tols.tol_cluster * maxabs;
    let m = clusters.len();
    let mut done = vec![false; m];
    for i in 0..m {
        if done[i] || clusters[i].value.im.abs() <= radius {
            done[i] = true;
            continue;
        }
        let target = clusters[i].value.conj();
        let j = (0..m)
            .filter(|&j| j != i && !done[j])
            .min_by(|&a, &b| {
                let da = (clusters[a].value - target).norm();
                let db = (clusters[b].value - target).norm();
                da.partial_cmp(&db).unwrap()
            })
            .ok_or_else(|| {
                GermError::ConsistencyError(format!(
                    "no conjugate partner for cluster at {}",
                    clusters[i].value
                ))
            })?;
        if (clusters[j].value - target).norm() > radius {
            return Err(GermError::ConsistencyError(format!(
                "conjugate partner of {} missing (closest {})",
                clusters[i].value, clusters[j].value
            )));
        }
        // canonical representative: the Im > 0 side
        let (src, dst) = if clusters[i].value.im > 0.0 { (i, j) } else { (j, i) };
        let conj_basis = clusters[src].eigenbasis.conjugate();
        let h = space.krein_matrix(&conj_basis.orthonormal())?;
        let (w, _) = linalg::hermitian_eig(&h)?;
        clusters[dst].value = clusters[src].value.conj();
        clusters[dst].eigenbasis = conj_basis;
        clusters[dst].geometric_multiplicity = clusters[src].geometric_multiplicity;
        clusters[dst].krein_signature = count_signature(&w, tols.tol_definite);
        done[i] = true;
        done[j] = true;
    }
    Ok(())
}

/// Krein signature of a cluster: diagonalize the Hermitian form on a unitarily
/// orthonormalized eigenbasis and count eigenvalues by sign.
pub fn krein_signature(
    space: &SymplecticSpace,
    cluster: &EigenCluster,
    tol: f64,
) -> Result<(usize, usize, usize)> {
    let h = space.krein_matrix(&cluster.eigenbasis.orthonormal())?;
    let (w, _) = linalg::hermitian_eig(&h)?;
    Ok(count_signature(&w, tol))
}

/// Full stability classification by the spectral criteria.
pub fn classify_stability(
    space: &SymplecticSpace,
    s: &Array2<C64>,
    tols: &SpectralTolerances,
) -> Result<StabilityReport> {
    let clusters = spectral_decompose(space, s, tols)?;
    let mut reasons = Vec::new();
    let mut stable = true;

    for cl in &clusters {
        let circle_dev = (cl.value.norm() - 1.0).abs();
        if !cl.on_unit_circle {
            stable = false;
            if circle_dev <= MARGINAL_BAND {
                reasons.push(format!(
                    "marginal: eigenvalue {} at distance {:.3e} from the unit circle",
                    cl.value, circle_dev
                ));
            } else {
                reasons.push(format!(
                    "eigenvalue {} off the unit circle (| |sigma| - 1 | = {:.3e})",
                    cl.value, circle_dev
                ));
            }
        }
        if !cl.is_diagonalizable() {
            stable = false;
            reasons.push(format!(
                "cluster at {} not diagonalizable (algebraic {}, geometric {})",
                cl.value, cl.algebraic_multiplicity, cl.geometric_multiplicity
            ));
        }
        if let Some(w) = &cl.conditioning_warning {
            reasons.push(w.clone());
        }
    }

    let class = if !stable {
        StabilityClass::Unstable
    } else {
        let mut strong = true;
        for cl in &clusters {
            if cl.is_definite() {
                if cl.value.im.abs() <= tols.tol_cluster {
                    // definite cluster at +-1: elliptic in Krein's sense
                    reasons.push(format!(
                        "definite cluster at {} treated as elliptic",
                        cl.value
                    ));
                }
            } else {
                strong = false;
                reasons.push(format!(
                    "cluster at {} has indefinite Krein signature {:?}",
                    cl.value, cl.krein_signature
                ));
            }
        }
        if strong {
            reasons.push("all eigenvalues elliptic".into());
            StabilityClass::StronglyStable
        } else {
            StabilityClass::Stable
        }
    };

    Ok(StabilityReport {
        class,
        clusters,
        reasons,
    })
}
