//! Positive Lagrangian invariant (P.L.I.) subspaces for commuting families of
//! stable symplectic operators: joint eigenspace decomposition, construction,
//! uniqueness and verification.

use ndarray::prelude::*;
use ndarray_linalg::Eig;

use crate::error::{GermError, Result};
use crate::linalg::{self, c, C64};
use crate::spectral::{classify_stability, SpectralTolerances, StabilityClass};
use crate::symcore::{subspace_distance, Subspace, SymplecticSpace, TOL_RANK};

/// A joint eigenspace of a commuting family, labelled by one eigenvalue per
/// operator.
#[derive(Debug, Clone)]
pub struct JointCluster {
    pub tuple: Vec<C64>,
    pub eigenbasis: Subspace,
    /// True when the tuple equals its conjugate, i.e. all entries are +-1.
    pub is_self_conjugate: bool,
    pub krein_signature: (usize, usize, usize),
}

impl JointCluster {
    pub fn dim(&self) -> usize {
        self.eigenbasis.rank()
    }

    /// A cluster is rigid when its P.L.I. contribution is forced: definite
    /// Krein form on a non-self-conjugate cluster. Self-conjugate clusters of
    /// positive dimension always admit a circle of Darboux choices.
    pub fn is_rigid(&self) -> bool {
        if self.is_self_conjugate {
            false
        } else {
            let (p, m, z) = self.krein_signature;
            z == 0 && (p == 0 || m == 0)
        }
    }
}

/// Outcome of the common P.L.I. construction.
#[derive(Debug, Clone)]
pub struct PLIResult {
    pub subspace: Subspace,
    /// Audit trail: which h-positive sub-blocks were taken per cluster.
    pub per_cluster_choice: Vec<String>,
    pub unique: bool,
    pub certificate: Vec<String>,
}

fn cluster_sort_key(tuple: &[C64]) -> Vec<(i64, i64)> {
    tuple
        .iter()
        .map(|v| {
            let mut arg = v.arg();
            if arg < -1e-9 {
                arg += 2.0 * std::f64::consts::PI;
            }
            ((arg * 1e9).round() as i64, (v.norm() * 1e9).round() as i64)
        })
        .collect()
}

fn check_family(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    tols: &SpectralTolerances,
) -> Result<()> {
    if ops.is_empty() {
        return Err(GermError::InputError("empty operator family".into()));
    }
    for (i, op) in ops.iter().enumerate() {
        let report = classify_stability(space, op, tols)?;
        if report.class == StabilityClass::Unstable {
            return Err(GermError::StabilityError {
                index: i,
                reasons: report.reasons,
            });
        }
    }
    for i in 0..ops.len() {
        for j in (i + 1)..ops.len() {
            let r = linalg::commutator_residual(&ops[i], &ops[j]);
            if r > 1e-8 {
                return Err(GermError::CommutationError { i, j, residual: r });
            }
        }
    }
    Ok(())
}

fn refine(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    basis: Array2<C64>,
    op_idx: usize,
    tuple: Vec<C64>,
    tols: &SpectralTolerances,
    out: &mut Vec<(Vec<C64>, Array2<C64>)>,
) -> Result<()> {
    if op_idx == ops.len() {
        out.push((tuple, basis));
        return Ok(());
    }
    let a = &ops[op_idx];
    let q = &basis; // orthonormal columns
    let aq = a.dot(q);
    let m = linalg::adjoint(q).dot(&aq);
    // invariance of the block, guaranteed by commutation, checked numerically
    let resid = linalg::frobenius(&(aq.clone() - q.dot(&m)));
    if resid > 1e-7 * linalg::frobenius(a).max(1.0) {
        return Err(GermError::ConsistencyError(format!(
            "joint block not invariant under operator {} (residual {:.3e})",
            op_idx, resid
        )));
    }
    let (values, _) = m.eig()?;
    let maxabs = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    // greedy clustering, checking all existing clusters
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for v in values.iter() {
        let mut found = false;
        for (rep, count) in clusters.iter_mut() {
            if (*rep - *v).norm() <= tols.tol_cluster * maxabs {
                *count += 1;
                *rep = *rep + (*v - *rep) / c(*count as f64, 0.0);
                found = true;
                break;
            }
        }
        if !found {
            clusters.push((*v, 1));
        }
    }
    let d = m.nrows();
    let mut covered = 0usize;
    for (rep, _) in clusters {
        let shifted = m.clone() - Array2::<C64>::eye(d).mapv(|x| x * rep);
        let cutoff = (tols.tol_rank * linalg::singular_values(&shifted)[0])
            .max(2.0 * tols.tol_cluster * maxabs);
        let kernel = linalg::null_space_abs(&shifted, cutoff);
        if kernel.ncols() == 0 {
            return Err(GermError::ConsistencyError(format!(
                "empty joint eigenspace at {rep} in operator {op_idx}"
            )));
        }
        covered += kernel.ncols();
        let sub_basis = linalg::orthonormal_span(&q.dot(&kernel), tols.tol_rank);
        let mut t = tuple.clone();
        t.push(rep);
        refine(space, ops, sub_basis, op_idx + 1, t, tols, out)?;
    }
    if covered != d {
        return Err(GermError::ConsistencyError(format!(
            "joint eigenspaces of operator {} cover {} of {} dimensions",
            op_idx, covered, d
        )));
    }
    Ok(())
}

/// Decompose C^{2n} into joint eigenspaces of a commuting stable family by
/// recursive refinement.
pub fn joint_decompose(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    tols: &SpectralTolerances,
) -> Result<Vec<JointCluster>> {
    check_family(space, ops, tols)?;
    let dim = space.dim();
    let mut raw: Vec<(Vec<C64>, Array2<C64>)> = Vec::new();
    refine(
        space,
        ops,
        linalg::to_complex(&Array2::eye(dim)),
        0,
        Vec::new(),
        tols,
        &mut raw,
    )?;
    let total: usize = raw.iter().map(|(_, b)| b.ncols()).sum();
    if total != dim {
        return Err(GermError::ConsistencyError(format!(
            "joint cluster dimensions sum to {total}, expected {dim}"
        )));
    }
    raw.sort_by(|a, b| cluster_sort_key(&a.0).cmp(&cluster_sort_key(&b.0)));

    let mut clusters: Vec<JointCluster> = Vec::with_capacity(raw.len());
    for (tuple, basis) in &raw {
        let self_conj = tuple.iter().all(|v| v.im.abs() <= tols.tol_cluster);
        let h = space.krein_matrix(basis)?;
        let (w, _) = linalg::hermitian_eig(&h)?;
        let p = w.iter().filter(|&&x| x > tols.tol_definite).count();
        let mneg = w.iter().filter(|&&x| x < -tols.tol_definite).count();
        clusters.push(JointCluster {
            tuple: tuple.clone(),
            eigenbasis: Subspace::new(basis.clone())?,
            is_self_conjugate: self_conj,
            krein_signature: (p, mneg, w.len() - p - mneg),
        });
    }

    // enforce conjugate pairing: partner carries the conjugated basis
    let nc = clusters.len();
    let mut done = vec![false; nc];
    for i in 0..nc {
        if done[i] || clusters[i].is_self_conjugate {
            done[i] = true;
            continue;
        }
        let target: Vec<C64> = clusters[i].tuple.iter().map(|v| v.conj()).collect();
        let j = (0..nc)
            .filter(|&j| j != i && !done[j])
            .find(|&j| {
                clusters[j]
                    .tuple
                    .iter()
                    .zip(target.iter())
                    .all(|(a, b)| (*a - *b).norm() <= 10.0 * tols.tol_cluster)
            })
            .ok_or_else(|| {
                GermError::ConsistencyError(format!(
                    "conjugate cluster of {:?} missing",
                    clusters[i].tuple
                ))
            })?;
        let (src, dst) = if is_canonical_rep(&clusters[i].tuple, &clusters[j].tuple) {
            (i, j)
        } else {
            (j, i)
        };
        let conj_basis = clusters[src].eigenbasis.conjugate();
        let h = space.krein_matrix(&conj_basis.orthonormal())?;
        let (w, _) = linalg::hermitian_eig(&h)?;
        let p = w.iter().filter(|&&x| x > tols.tol_definite).count();
        let mneg = w.iter().filter(|&&x| x < -tols.tol_definite).count();
        let zlen = w.len() - p - mneg;
        clusters[dst].tuple = target.clone();
        clusters[dst].eigenbasis = conj_basis;
        clusters[dst].krein_signature = (p, mneg, zlen);
        done[i] = true;
        done[j] = true;
    }
    Ok(clusters)
}

/// Deterministic choice of the representative in a conjugate pair.
fn is_canonical_rep(a: &[C64], b: &[C64]) -> bool {
    cluster_sort_key(a) <= cluster_sort_key(b)
}

/// Uniqueness decision: rigid iff every non-self-conjugate cluster is definite
/// and no self-conjugate cluster of positive dimension exists. The paper's
/// sufficient criterion (some operator strongly stable) is reported alongside.
pub fn uniqueness_check(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    clusters: &[JointCluster],
) -> Result<(bool, Vec<String>)> {
    let mut certificate = Vec::new();
    let mut rigid = true;
    for cl in clusters {
        if cl.is_self_conjugate && cl.dim() > 0 {
            rigid = false;
            certificate.push(format!(
                "non-rigid: self-conjugate cluster {:?} of dimension {}",
                cl.tuple,
                cl.dim()
            ));
        } else if !cl.is_self_conjugate && !cl.is_rigid() {
            rigid = false;
            certificate.push(format!(
                "non-rigid: cluster {:?} has indefinite signature {:?}",
                cl.tuple, cl.krein_signature
            ));
        }
    }
    let tols = SpectralTolerances::default();
    let mut strong = false;
    for (i, op) in ops.iter().enumerate() {
        let rep = classify_stability(space, op, &tols)?;
        if rep.class == StabilityClass::StronglyStable {
            strong = true;
            certificate.push(format!("paper criterion: operator {} is strongly stable", i));
            break;
        }
    }
    if !strong {
        certificate.push("paper criterion: no operator is strongly stable".into());
    }
    if rigid != strong {
        certificate.push(format!(
            "note: rigidity check ({rigid}) and strong-stability criterion ({strong}) differ"
        ));
    }
    Ok((rigid, certificate))
}

/// Extract a real orthonormal basis from a conjugation-closed complex span.
fn realify(basis: &Array2<C64>, expect: usize) -> Result<Array2<f64>> {
    let (dim, d) = basis.dim();
    let mut stacked = Array2::<C64>::zeros((dim, 2 * d));
    for j in 0..d {
        for i in 0..dim {
            stacked[(i, j)] = c(basis[(i, j)].re, 0.0);
            stacked[(i, d + j)] = c(basis[(i, j)].im, 0.0);
        }
    }
    let q = linalg::orthonormal_span(&stacked, 1e-8);
    if q.ncols() != expect {
        return Err(GermError::ConsistencyError(format!(
            "real form of a self-conjugate cluster has dimension {}, expected {}",
            q.ncols(),
            expect
        )));
    }
    Ok(linalg::real_part(&q))
}

/// Darboux pairs (a_i, b_i) with omega(a_i, b_i) = 1 from a real symplectic
/// subspace, by symplectic Gram-Schmidt with deterministic pivoting.
fn darboux_pairs(
    space: &SymplecticSpace,
    real_basis: &Array2<f64>,
) -> Result<Vec<(Array1<f64>, Array1<f64>)>> {
    let d = real_basis.ncols();
    if d % 2 != 0 {
        return Err(GermError::ConsistencyError(format!(
            "self-conjugate cluster dimension {} is odd",
            d
        )));
    }
    let mut pool: Vec<Array1<f64>> = (0..d).map(|j| real_basis.column(j).to_owned()).collect();
    let omega = space.form_matrix();
    let form = |x: &Array1<f64>, y: &Array1<f64>| x.dot(&omega.dot(y));
    let mut pairs = Vec::with_capacity(d / 2);
    while pairs.len() < d / 2 {
        pool.retain(|v| v.dot(v).sqrt() > 1e-8);
        if pool.is_empty() {
            return Err(GermError::RankError(
                "cluster subspace not symplectic: Darboux construction stalled".into(),
            ));
        }
        let a = pool.remove(0);
        let mut best: Option<(usize, f64)> = None;
        for (idx, cand) in pool.iter().enumerate() {
            let w = form(&a, cand).abs();
            if best.map_or(true, |(_, bw)| w > bw) {
                best = Some((idx, w));
            }
        }
        let (bi, bw) = best.ok_or_else(|| {
            GermError::RankError("no symplectic partner in cluster".into())
        })?;
        if bw <= 1e-8 {
            return Err(GermError::RankError(
                "degenerate symplectic form on a self-conjugate cluster".into(),
            ));
        }
        let raw_b = pool.remove(bi);
        let b = raw_b.mapv(|x| x / form(&a, &raw_b));
        for v in pool.iter_mut() {
            let wb = form(v, &b);
            let wa = form(v, &a);
            *v = v.clone() - a.mapv(|x| x * wb) + b.mapv(|x| x * wa);
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

/// The h-positive part of a cluster eigenbasis: eigenvectors of the Krein
/// Hermitian matrix with positive (resp. negative for `positive = false`)
/// eigenvalue, pushed back to ambient coordinates.
fn signed_part(
    space: &SymplecticSpace,
    basis: &Array2<C64>,
    positive: bool,
    tol: f64,
) -> Result<(Array2<C64>, usize)> {
    let q = linalg::orthonormal_span(basis, TOL_RANK);
    let h = space.krein_matrix(&q)?;
    let (w, v) = linalg::hermitian_eig(&h)?;
    let zero = w.iter().filter(|&&x| x.abs() <= tol).count();
    let idxs: Vec<usize> = (0..w.len())
        .filter(|&i| if positive { w[i] > tol } else { w[i] < -tol })
        .collect();
    let mut cols = Array2::<C64>::zeros((q.nrows(), idxs.len()));
    for (jj, &i) in idxs.iter().enumerate() {
        let col = q.dot(&v.column(i).to_owned());
        cols.column_mut(jj).assign(&col);
    }
    Ok((cols, zero))
}

/// Common P.L.I. subspace for a commuting stable family.
pub fn pli_common(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    tols: &SpectralTolerances,
) -> Result<PLIResult> {
    let clusters = joint_decompose(space, ops, tols)?;
    let (subspace, choices) = assemble_pli(space, &clusters, tols, None)?;
    let (unique, certificate) = uniqueness_check(space, ops, &clusters)?;
    Ok(PLIResult {
        subspace,
        per_cluster_choice: choices,
        unique,
        certificate,
    })
}

/// Which deformation the non-uniqueness witness applies to the first
/// non-rigid cluster.
#[derive(Debug, Clone, Copy)]
enum WitnessTwist {
    /// Rescale the first Darboux pair of a self-conjugate cluster:
    /// (a, b) -> (t a, b / t), which moves the line span{a - i b}.
    DarbouxScaling(f64),
    /// Hyperbolically mix the first positive/negative pair of an indefinite
    /// cluster.
    HyperbolicMix(f64),
}

fn assemble_pli(
    space: &SymplecticSpace,
    clusters: &[JointCluster],
    tols: &SpectralTolerances,
    mut witness: Option<WitnessTwist>,
) -> Result<(Subspace, Vec<String>)> {
    let dim = space.dim();
    let mut columns: Vec<Array1<C64>> = Vec::with_capacity(space.half_dim());
    let mut choices = Vec::new();
    let mut handled = vec![false; clusters.len()];

    for i in 0..clusters.len() {
        if handled[i] {
            continue;
        }
        let cl = &clusters[i];
        if cl.is_self_conjugate {
            handled[i] = true;
            let real_basis = realify(cl.eigenbasis.basis(), cl.dim())?;
            let mut pairs = darboux_pairs(space, &real_basis)?;
            let mut note = format!(
                "cluster {:?}: Darboux recipe, {} pair(s)",
                cl.tuple,
                pairs.len()
            );
            if let Some(WitnessTwist::DarbouxScaling(t)) = witness {
                if !pairs.is_empty() {
                    let (a, b) = pairs[0].clone();
                    pairs[0] = (a.mapv(|x| x * t), b.mapv(|x| x / t));
                    note.push_str(&format!(" (witness scaling {t:.3})"));
                    witness = None;
                }
            }
            for (a, b) in &pairs {
                // r = a - i b has Krein value omega(a, b) = +1; sign forced
                let r: Array1<C64> = (0..dim).map(|t| c(a[t], -b[t])).collect();
                debug_assert!(space.krein_value(&r.view()).unwrap() > 0.0);
                columns.push(r);
            }
            choices.push(note);
        } else {
            // conjugate pair: positive part from the canonical representative,
            // conjugated negative part from its partner
            let target: Vec<C64> = cl.tuple.iter().map(|v| v.conj()).collect();
            let j = (i + 1..clusters.len())
                .find(|&j| {
                    !handled[j]
                        && clusters[j]
                            .tuple
                            .iter()
                            .zip(target.iter())
                            .all(|(a, b)| (*a - *b).norm() <= 10.0 * tols.tol_cluster)
                })
                .ok_or_else(|| {
                    GermError::ConsistencyError(format!(
                        "conjugate cluster of {:?} missing during assembly",
                        cl.tuple
                    ))
                })?;
            handled[i] = true;
            handled[j] = true;
            let src = if is_canonical_rep(&clusters[i].tuple, &clusters[j].tuple) {
                i
            } else {
                j
            };
            let scl = &clusters[src];
            let (mut pos, zero_p) = signed_part(space, scl.eigenbasis.basis(), true, tols.tol_definite)?;
            let (mut neg, zero_n) = signed_part(space, scl.eigenbasis.basis(), false, tols.tol_definite)?;
            if zero_p > 0 || zero_n > 0 {
                return Err(GermError::DegenerateKrein {
                    cluster: format!("{:?}", scl.tuple),
                    detail: format!(
                        "{} near-zero Krein eigenvalue(s); tolerance breakdown",
                        zero_p.max(zero_n)
                    ),
                });
            }
            let mut note = format!(
                "cluster {:?}: h-positive part dim {}, partner contributes conj of dim {}",
                scl.tuple,
                pos.ncols(),
                neg.ncols()
            );
            if let Some(WitnessTwist::HyperbolicMix(s)) = witness {
                if pos.ncols() > 0 && neg.ncols() > 0 {
                    let vp = pos.column(0).to_owned();
                    let vn = neg.column(0).to_owned();
                    let vp2 = vp.mapv(|x| x * c(s.cosh(), 0.0)) + vn.mapv(|x| x * c(s.sinh(), 0.0));
                    let vn2 = vp.mapv(|x| x * c(s.sinh(), 0.0)) + vn.mapv(|x| x * c(s.cosh(), 0.0));
                    pos.column_mut(0).assign(&vp2);
                    neg.column_mut(0).assign(&vn2);
                    note.push_str(&format!(" (witness hyperbolic mix {s:.3})"));
                    witness = None;
                }
            }
            for jj in 0..pos.ncols() {
                columns.push(pos.column(jj).to_owned());
            }
            for jj in 0..neg.ncols() {
                columns.push(neg.column(jj).mapv(|x| x.conj()));
            }
            choices.push(note);
        }
    }

    if columns.len() != space.half_dim() {
        return Err(GermError::ConsistencyError(format!(
            "P.L.I. assembly produced {} of {} directions",
            columns.len(),
            space.half_dim()
        )));
    }
    let sub = Subspace::from_vectors(dim, &columns)?;
    Ok((sub, choices))
}

/// A second valid P.L.I. subspace at distance >= 0.1 from the canonical one,
/// available exactly when the family is non-rigid.
pub fn nonuniqueness_witness(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    tols: &SpectralTolerances,
) -> Result<Option<Subspace>> {
    let clusters = joint_decompose(space, ops, tols)?;
    let twist = clusters.iter().find_map(|cl| {
        if cl.is_self_conjugate && cl.dim() > 0 {
            Some(WitnessTwist::DarbouxScaling(2.0))
        } else if !cl.is_self_conjugate && !cl.is_rigid() {
            Some(WitnessTwist::HyperbolicMix(1.0))
        } else {
            None
        }
    });
    match twist {
        None => Ok(None),
        Some(t) => {
            let (sub, _) = assemble_pli(space, &clusters, tols, Some(t))?;
            Ok(Some(sub))
        }
    }
}

/// Verification report for a candidate P.L.I. subspace.
#[derive(Debug, Clone)]
pub struct PliVerification {
    pub isotropy_residual: f64,
    pub min_krein_eigenvalue: f64,
    pub invariance_residuals: Vec<f64>,
    pub pass: bool,
}

/// Check isotropy, positivity and per-operator invariance of a candidate.
pub fn verify_pli(
    space: &SymplecticSpace,
    ops: &[Array2<C64>],
    r: &Subspace,
    tol: f64,
) -> Result<PliVerification> {
    let q = r.orthonormal();
    let mut iso = 0.0f64;
    for i in 0..q.ncols() {
        for j in 0..q.ncols() {
            iso = iso.max(space.form_value(&q.column(i), &q.column(j))?.norm());
        }
    }
    let h = space.krein_matrix(&q)?;
    let (w, _) = linalg::hermitian_eig(&h)?;
    let min_krein = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut inv = Vec::with_capacity(ops.len());
    for op in ops {
        let image = Subspace::new(linalg::orthonormal_span(&op.dot(&q), TOL_RANK))?;
        inv.push(subspace_distance(&image, r));
    }
    let pass = iso <= tol
        && min_krein > tol
        && inv.iter().all(|&x| x <= tol)
        && r.rank() == space.half_dim();
    Ok(PliVerification {
        isotropy_residual: iso,
        min_krein_eigenvalue: min_krein,
        invariance_residuals: inv,
        pass,
    })
}
