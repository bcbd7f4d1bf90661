//! Complexified symplectic linear algebra over C^{2n}: the standard form,
//! Krein values, subspace classification, symplectic quotients and operator
//! reduction.
//!
//! Coordinates are ordered (q_1..q_n, p_1..p_n) and the form matrix is
//! Omega = [[0, I], [-I, 0]], so that omega(x, y) = x^T Omega y reproduces
//! dq ^ dp. The covector-to-vector isomorphism J satisfies omega(x, Ja) = a(x),
//! i.e. J = Omega^{-1}.

use ndarray::prelude::*;

use crate::error::{GermError, Result};
use crate::linalg::{self, c, C64};

/// Default relative singular-value cutoff for ranks and kernels.
pub const TOL_RANK: f64 = 1e-10;
/// Default strict-definiteness tolerance for positive/negative tests.
pub const TOL_DEFINITE: f64 = 1e-9;

/// The standard symplectic vector space R^{2n} with its complexification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticSpace {
    n: usize,
}

impl SymplecticSpace {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "half-dimension must be positive");
        SymplecticSpace { n }
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Matrix of the standard form, Omega = [[0, I], [-I, 0]].
    pub fn form_matrix(&self) -> Array2<f64> {
        let n = self.n;
        let mut o = Array2::zeros((2 * n, 2 * n));
        for i in 0..n {
            o[(i, n + i)] = 1.0;
            o[(n + i, i)] = -1.0;
        }
        o
    }

    /// Matrix of J = Omega^{-1}, the isomorphism covector -> vector.
    pub fn j_matrix(&self) -> Array2<f64> {
        self.form_matrix().mapv(|x| -x)
    }

    /// Applies Omega to a real vector: (a, b) -> (b, -a).
    pub fn omega_apply(&self, v: &ArrayView1<f64>) -> Array1<f64> {
        let n = self.n;
        let mut out = Array1::zeros(2 * n);
        for i in 0..n {
            out[i] = v[n + i];
            out[n + i] = -v[i];
        }
        out
    }

    /// J applied to a real covector: (a, b) -> (-b, a).
    pub fn j_apply(&self, a: &ArrayView1<f64>) -> Array1<f64> {
        self.omega_apply(a).mapv(|x| -x)
    }

    fn check_len(&self, v: &ArrayView1<C64>) -> Result<()> {
        if v.len() != 2 * self.n {
            return Err(GermError::DimensionMismatch {
                expected: 2 * self.n,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// The bilinear complexified form [x, y].
    pub fn form_value(&self, x: &ArrayView1<C64>, y: &ArrayView1<C64>) -> Result<C64> {
        self.check_len(x)?;
        self.check_len(y)?;
        let n = self.n;
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            acc += x[i] * y[n + i] - x[n + i] * y[i];
        }
        Ok(acc)
    }

    /// The Krein value (1/2i)[x, conj(x)]; always real.
    pub fn krein_value(&self, x: &ArrayView1<C64>) -> Result<f64> {
        let xbar = x.mapv(|v| v.conj());
        let f = self.form_value(x, &xbar.view())?;
        let val = f / c(0.0, 2.0);
        let scale = x.iter().map(|v| v.norm_sqr()).sum::<f64>().max(1.0);
        debug_assert!(val.im.abs() <= 1e-12 * scale, "Krein value not real");
        Ok(val.re)
    }

    /// Hermitian Krein matrix H_ij = (1/2i)[v_i, conj(v_j)] on a set of columns.
    pub fn krein_matrix(&self, basis: &Array2<C64>) -> Result<Array2<C64>> {
        let r = basis.ncols();
        let mut h = Array2::zeros((r, r));
        for i in 0..r {
            for j in 0..r {
                let vj = basis.column(j).mapv(|v| v.conj());
                let f = self.form_value(&basis.column(i), &vj.view())?;
                h[(i, j)] = f / c(0.0, 2.0);
            }
        }
        Ok(h)
    }

    /// True iff S^T Omega S = Omega within `tol` (absolute, Frobenius, relative
    /// to ||S||^2).
    pub fn is_symplectic(&self, s: &Array2<C64>, tol: f64) -> Result<bool> {
        Ok(self.symplectic_residual(s)? <= tol)
    }

    pub fn symplectic_residual(&self, s: &Array2<C64>) -> Result<f64> {
        linalg::require_square(s, self.dim())?;
        let omega = linalg::to_complex(&self.form_matrix());
        let st = s.t().to_owned();
        let res = st.dot(&omega).dot(s) - &omega;
        let scale = linalg::frobenius(s).powi(2).max(1.0);
        Ok(linalg::frobenius(&res) / scale)
    }
}

/// A complex subspace of C^{2n}, given by a spanning list of vectors.
///
/// The constructor rejects dependent spans: the numerical rank of the basis
/// matrix must equal the number of columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Array2<C64>,
    rank: usize,
}

impl Subspace {
    /// Build from basis columns; rejects rank-deficient spans.
    pub fn new(basis: Array2<C64>) -> Result<Self> {
        Self::with_tol(basis, TOL_RANK)
    }

    pub fn with_tol(basis: Array2<C64>, tol_rank: f64) -> Result<Self> {
        let r = linalg::numerical_rank(&basis, tol_rank);
        if r != basis.ncols() {
            return Err(GermError::RankError(format!(
                "spanning set has rank {} but {} vectors",
                r,
                basis.ncols()
            )));
        }
        Ok(Subspace { basis, rank: r })
    }

    pub fn from_vectors(dim: usize, vectors: &[Array1<C64>]) -> Result<Self> {
        let mut m = Array2::zeros((dim, vectors.len()));
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(GermError::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            m.column_mut(j).assign(v);
        }
        Subspace::new(m)
    }

    pub fn basis(&self) -> &Array2<C64> {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn conjugate(&self) -> Subspace {
        Subspace {
            basis: linalg::conj_mat(&self.basis),
            rank: self.rank,
        }
    }

    /// Euclidean-orthonormal basis for the same span.
    pub fn orthonormal(&self) -> Array2<C64> {
        linalg::orthonormal_span(&self.basis, TOL_RANK)
    }

    /// Residual of `v` after orthogonal projection onto this subspace,
    /// relative to ||v||.
    pub fn containment_residual(&self, v: &ArrayView1<C64>) -> f64 {
        let q = self.orthonormal();
        let coeffs = linalg::adjoint(&q).dot(v);
        let proj = q.dot(&coeffs);
        let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            return 0.0;
        }
        let diff = v.to_owned() - proj;
        diff.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() / nv
    }
}

/// Spectral norm of the difference of orthogonal projectors; a pseudometric
/// on subspaces, zero iff equal spans.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> f64 {
    let pa = linalg::projector(&a.orthonormal());
    let pb = linalg::projector(&b.orthonormal());
    linalg::spectral_norm(&(pa - pb))
}

/// Classification flags for a subspace with respect to the form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubspaceClass {
    pub isotropic: bool,
    pub lagrangian: bool,
    pub positive: bool,
    pub negative: bool,
}

/// Classify a subspace: isotropy by the max |[b_i, b_j]| over basis pairs,
/// Lagrangian as isotropic of rank n, positive/negative by strict definiteness
/// of the Krein Hermitian matrix at tolerance `tol`.
pub fn classify_subspace(
    space: &SymplecticSpace,
    b: &Subspace,
    tol: f64,
) -> Result<SubspaceClass> {
    let basis = b.orthonormal();
    let r = basis.ncols();
    let mut max_form = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let f = space.form_value(&basis.column(i), &basis.column(j))?;
            max_form = max_form.max(f.norm());
        }
    }
    let isotropic = max_form <= tol;
    let lagrangian = isotropic && b.rank() == space.half_dim();
    let h = space.krein_matrix(&basis)?;
    let (w, _) = linalg::hermitian_eig(&h)?;
    let min_eig = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SubspaceClass {
        isotropic,
        lagrangian,
        positive: min_eig > tol,
        negative: max_eig < -tol,
    })
}

/// True iff every direction of `b` outside `tangent` has strictly positive
/// Krein value: complete the tangent inside `b`, project the tangent out and
/// test positive definiteness of the Krein form on the completion.
pub fn is_dissipative(
    space: &SymplecticSpace,
    b: &Subspace,
    tangent: &Subspace,
    tol: f64,
) -> Result<bool> {
    for j in 0..tangent.basis().ncols() {
        let res = b.containment_residual(&tangent.basis().column(j));
        if res > 1e-8 {
            return Err(GermError::ContainmentError(format!(
                "tangent vector {} lies outside the subspace (residual {:.3e})",
                j, res
            )));
        }
    }
    let completion = quotient_completion(b, tangent)?;
    if completion.ncols() == 0 {
        return Ok(true);
    }
    let h = space.krein_matrix(&completion)?;
    let (w, _) = linalg::hermitian_eig(&h)?;
    Ok(w.iter().cloned().fold(f64::INFINITY, f64::min) > tol)
}

/// Orthonormal completion of `tangent` to `b`: basis of the orthogonal
/// complement of the tangent span inside `b`.
pub fn quotient_completion(b: &Subspace, tangent: &Subspace) -> Result<Array2<C64>> {
    let qt = tangent.orthonormal();
    let qb = b.orthonormal();
    let pt = linalg::projector(&qt);
    let projected = &qb - &pt.dot(&qb);
    Ok(linalg::orthonormal_span(&projected, 1e-8))
}

/// The symplectic quotient frame at a level-set point: Sigma = joint kernel of
/// the k gradients, Lambda tangent spanned by J dF_j, and a Darboux complement
/// presenting the induced form on Gamma = T Sigma / T Lambda.
#[derive(Debug, Clone)]
pub struct QuotientFrame {
    /// 2n x (2n - k), real-valued columns spanning T Sigma.
    pub sigma_basis: Array2<C64>,
    /// 2n x k columns J dF_j spanning T Lambda.
    pub lambda_basis: Array2<C64>,
    /// 2n x 2(n-k) Darboux complement inside T Sigma, ordered (a_1..a_m, b_1..b_m).
    pub complement_basis: Array2<C64>,
    /// Induced form on the complement; standard [[0, I], [-I, 0]] by construction.
    pub reduced_form: Array2<C64>,
    /// (2n - k) x 2n map expressing a Sigma-vector as (lambda coeffs, complement coeffs).
    pub projection_coeffs: Array2<C64>,
}

impl QuotientFrame {
    pub fn num_constraints(&self) -> usize {
        self.lambda_basis.ncols()
    }

    pub fn reduced_dim(&self) -> usize {
        self.complement_basis.ncols()
    }

    /// Quotient coordinates of an ambient vector: the complement components of
    /// its decomposition along (lambda, complement).
    pub fn project(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        let k = self.num_constraints();
        let coeffs = self.projection_coeffs.dot(v);
        coeffs.slice(s![k..]).to_owned()
    }

    /// Embed quotient coordinates back as the complement representative.
    pub fn embed(&self, r: &ArrayView1<C64>) -> Array1<C64> {
        self.complement_basis.dot(r)
    }
}

/// Deterministic kernel basis: orthogonal projections of the standard basis
/// vectors onto the kernel of the constraint rows, picked greedily by norm and
/// orthonormalized in pick order. Coordinate-aligned kernels come out as
/// coordinate vectors, which keeps reduced matrices readable.
fn deterministic_kernel(rows: &Array2<C64>, dim: usize, want: usize) -> Result<Array2<C64>> {
    let row_span = linalg::orthonormal_span(&linalg::adjoint(rows), TOL_RANK);
    let p_rows = linalg::projector(&row_span);
    let mut candidates: Vec<(usize, Array1<C64>)> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = Array1::<C64>::zeros(dim);
        e[i] = c(1.0, 0.0);
        let proj = &e - &p_rows.dot(&e);
        candidates.push((i, proj));
    }
    // stable order: descending norm, ties broken by index
    candidates.sort_by(|a, b| {
        let na = a.1.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let nb = b.1.iter().map(|x| x.norm_sqr()).sum::<f64>();
        nb.partial_cmp(&na).unwrap().then(a.0.cmp(&b.0))
    });
    let mut picked: Vec<Array1<C64>> = Vec::with_capacity(want);
    for (_, v) in candidates {
        if picked.len() == want {
            break;
        }
        // modified Gram-Schmidt against already-picked vectors
        let mut w = v.clone();
        for u in &picked {
            let coeff: C64 = u.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            w = w - u.mapv(|x| x * coeff);
        }
        let nw = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nw > 1e-8 {
            picked.push(w.mapv(|x| x / c(nw, 0.0)));
        }
    }
    if picked.len() != want {
        return Err(GermError::RankError(format!(
            "kernel construction found {} of {} directions",
            picked.len(),
            want
        )));
    }
    let mut out = Array2::zeros((dim, want));
    for (j, v) in picked.iter().enumerate() {
        out.column_mut(j).assign(v);
    }
    Ok(out)
}

/// Build the quotient frame from the k real gradient covectors dF_j.
pub fn quotient_frame(
    space: &SymplecticSpace,
    gradients: &[Array1<f64>],
    tol: f64,
) -> Result<QuotientFrame> {
    let k = gradients.len();
    let n = space.half_dim();
    let dim = space.dim();
    if k >= n {
        return Err(GermError::InputError(format!(
            "need k < n constraints, got k = {} with n = {}",
            k, n
        )));
    }
    let mut grad_rows = Array2::<C64>::zeros((k, dim));
    for (i, g) in gradients.iter().enumerate() {
        if g.len() != dim {
            return Err(GermError::DimensionMismatch {
                expected: dim,
                got: g.len(),
            });
        }
        for j in 0..dim {
            grad_rows[(i, j)] = c(g[j], 0.0);
        }
    }
    if linalg::numerical_rank(&grad_rows, tol.max(TOL_RANK)) != k {
        return Err(GermError::RankError(
            "gradient covectors are linearly dependent".into(),
        ));
    }

    let sigma_basis = deterministic_kernel(&grad_rows, dim, dim - k)?;

    let mut lambda_basis = Array2::<C64>::zeros((dim, k));
    for (j, g) in gradients.iter().enumerate() {
        let l = space.j_apply(&g.view());
        for i in 0..dim {
            lambda_basis[(i, j)] = c(l[i], 0.0);
        }
    }
    // lambda must lie inside Sigma (involution / invariance assumption)
    let sigma_sub = Subspace::new(sigma_basis.clone())?;
    for j in 0..k {
        let res = sigma_sub.containment_residual(&lambda_basis.column(j));
        if res > 1e-8 {
            return Err(GermError::ConsistencyError(format!(
                "J dF_{} leaves the level-set tangent (residual {:.3e}); gradients not in involution?",
                j, res
            )));
        }
    }

    // complement candidates: sigma vectors with largest residual off the lambda span
    let lambda_q = linalg::orthonormal_span(&lambda_basis, TOL_RANK);
    let p_lambda = linalg::projector(&lambda_q);
    let mut scored: Vec<(usize, f64)> = (0..sigma_basis.ncols())
        .map(|j| {
            let v = sigma_basis.column(j).to_owned();
            let resid = &v - &p_lambda.dot(&v);
            (j, resid.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let m = n - k;
    let mut pool: Vec<Array1<C64>> = scored
        .iter()
        .take(2 * m + k) // keep a few extra in case of near-degeneracy
        .map(|&(j, _)| sigma_basis.column(j).to_owned())
        .collect();

    // omega-Gram-Schmidt: build Darboux pairs (a_i, b_i) with omega(a_i, b_i) = 1
    let mut a_vecs: Vec<Array1<C64>> = Vec::with_capacity(m);
    let mut b_vecs: Vec<Array1<C64>> = Vec::with_capacity(m);
    while a_vecs.len() < m {
        // symplectic reduction of pool against existing pairs
        for v in pool.iter_mut() {
            for (a, b) in a_vecs.iter().zip(b_vecs.iter()) {
                let wb = space.form_value(&v.view(), &b.view())?;
                let wa = space.form_value(&v.view(), &a.view())?;
                *v = v.clone() - a.mapv(|x| x * wb) + b.mapv(|x| x * wa);
            }
        }
        pool.retain(|v| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() > 1e-8);
        if pool.is_empty() {
            return Err(GermError::RankError(
                "reduced form degenerate: could not complete a Darboux basis".into(),
            ));
        }
        let a = pool.remove(0);
        // partner: largest |omega(a, candidate)|
        let mut best: Option<(usize, f64)> = None;
        for (idx, vb) in pool.iter().enumerate() {
            let w = space.form_value(&a.view(), &vb.view())?.norm();
            if best.map_or(true, |(_, bw)| w > bw) {
                best = Some((idx, w));
            }
        }
        let (bi, bw) = best.ok_or_else(|| {
            GermError::RankError("no symplectic partner available".into())
        })?;
        if bw <= 1e-8 {
            return Err(GermError::RankError(
                "reduced form degenerate on the chosen complement".into(),
            ));
        }
        let raw_b = pool.remove(bi);
        let wab = space.form_value(&a.view(), &raw_b.view())?;
        let b = raw_b.mapv(|x| x / wab);
        a_vecs.push(a);
        b_vecs.push(b);
    }
    let mut complement_basis = Array2::<C64>::zeros((dim, 2 * m));
    for (j, a) in a_vecs.iter().enumerate() {
        complement_basis.column_mut(j).assign(a);
    }
    for (j, b) in b_vecs.iter().enumerate() {
        complement_basis.column_mut(m + j).assign(b);
    }

    let mut reduced_form = Array2::<C64>::zeros((2 * m, 2 * m));
    for i in 0..2 * m {
        for j in 0..2 * m {
            reduced_form[(i, j)] =
                space.form_value(&complement_basis.column(i), &complement_basis.column(j))?;
        }
    }
    if linalg::numerical_rank(&reduced_form, TOL_RANK) != 2 * m {
        return Err(GermError::RankError("induced form is degenerate".into()));
    }

    let mut decomp = Array2::<C64>::zeros((dim, k + 2 * m));
    decomp.slice_mut(s![.., ..k]).assign(&lambda_basis);
    decomp.slice_mut(s![.., k..]).assign(&complement_basis);
    let projection_coeffs = linalg::pinv(&decomp, TOL_RANK);

    Ok(QuotientFrame {
        sigma_basis,
        lambda_basis,
        complement_basis,
        reduced_form,
        projection_coeffs,
    })
}

/// Data of an operator pushed to the symplectic quotient.
#[derive(Debug, Clone)]
pub struct ReducedOperatorData {
    /// Matrix of the induced operator in the complement basis.
    pub xi_matrix: Array2<C64>,
    /// The discarded tangential components, one column per complement vector.
    pub tangential_coupling: Array2<C64>,
    /// Largest component of an image outside T Sigma (or the lambda span for
    /// tangent images), relative to the input norm.
    pub residual_off_sigma: f64,
}

/// Reduce `g` to the quotient through `frame`. With `strict` set, a flag
/// invariance violation above `tol` is an error instead of a recorded residual.
pub fn reduce_operator(
    space: &SymplecticSpace,
    g: &Array2<C64>,
    frame: &QuotientFrame,
    tol: f64,
    strict: bool,
) -> Result<ReducedOperatorData> {
    linalg::require_square(g, space.dim())?;
    let k = frame.num_constraints();
    let m2 = frame.reduced_dim();
    let sigma_sub = Subspace::new(frame.sigma_basis.clone())?;
    let lambda_sub = Subspace::new(frame.lambda_basis.clone())?;

    let mut residual = 0.0f64;
    // lambda span must be preserved
    for j in 0..k {
        let img = g.dot(&frame.lambda_basis.column(j));
        residual = residual.max(lambda_sub.containment_residual(&img.view()));
    }

    let mut xi_matrix = Array2::<C64>::zeros((m2, m2));
    let mut tangential_coupling = Array2::<C64>::zeros((k, m2));
    for j in 0..m2 {
        let img = g.dot(&frame.complement_basis.column(j));
        residual = residual.max(sigma_sub.containment_residual(&img.view()));
        let coeffs = frame.projection_coeffs.dot(&img);
        tangential_coupling
            .column_mut(j)
            .assign(&coeffs.slice(s![..k]));
        xi_matrix.column_mut(j).assign(&coeffs.slice(s![k..]));
    }

    if strict && residual > tol {
        return Err(GermError::InvarianceError {
            index: 0,
            residual,
        });
    }

    Ok(ReducedOperatorData {
        xi_matrix,
        tangential_coupling,
        residual_off_sigma: residual,
    })
}
