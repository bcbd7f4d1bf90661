//! Built-in cyclic-variable Hamiltonian family: k angle coordinates absent
//! from H, their conjugate actions as first integrals, and a quadratic (or
//! quartic-perturbed) transverse part. The family carries an analytic return
//! lattice and an analytic oracle for the reduced monodromy.

use ndarray::prelude::*;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GermError, Result};
use crate::linalg::{self, C64};
use crate::monodromy::HamiltonianModel;

/// Base point of the invariant torus: actions, angles, and transverse
/// coordinates of a critical point of the transverse part.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicBasePoint {
    #[serde(rename = "I")]
    pub actions: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Declarative description of a cyclic-variable model.
///
/// `H = omega . I + (1/2) w^T K w + epsilon (w^T Q w)^2 / 4` with transverse
/// coordinates `w = (p, q)`; the remaining flows are the actions themselves,
/// `F_j = I_j` for `j >= 2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicModelSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub n: usize,
    pub k: usize,
    pub frequencies: Vec<f64>,
    /// Symmetric 2(n-k) matrix, (p, q) coordinate order.
    pub transverse_hessian: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Symmetric 2(n-k) matrix defining the quartic form, (p, q) order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic: Option<Vec<Vec<f64>>>,
    pub base_point: CyclicBasePoint,
}

/// A validated cyclic-variable model with evaluators for all k Hamiltonians.
///
/// Coordinate packing into the global (positions | momenta) order:
/// `z = (theta_1..theta_k, q_1..q_m, I_1..I_k, p_1..p_m)` with `m = n - k`.
#[derive(Debug, Clone)]
pub struct CyclicModel {
    pub n: usize,
    pub k: usize,
    pub frequencies: Array1<f64>,
    pub transverse_hessian: Array2<f64>,
    pub epsilon: f64,
    pub quartic: Option<Array2<f64>>,
    base: Array1<f64>,
    label: String,
}

impl CyclicModel {
    /// Number of transverse position (or momentum) coordinates.
    pub fn transverse_dim(&self) -> usize {
        self.n - self.k
    }

    /// Extract the transverse coordinates of a phase point, in (p, q) order.
    fn transverse(&self, z: &ArrayView1<f64>) -> Array1<f64> {
        let (n, k, m) = (self.n, self.k, self.transverse_dim());
        let mut w = Array1::zeros(2 * m);
        w.slice_mut(s![..m]).assign(&z.slice(s![n + k..]));
        w.slice_mut(s![m..]).assign(&z.slice(s![k..n]));
        w
    }

    /// Gradient of the transverse part with respect to w = (p, q).
    fn transverse_gradient(&self, w: &Array1<f64>) -> Array1<f64> {
        let mut g = self.transverse_hessian.dot(w);
        if self.epsilon != 0.0 {
            let qmat = self.quartic.as_ref().expect("validated");
            let qw = qmat.dot(w);
            let s = w.dot(&qw);
            g = g + qw.mapv(|x| self.epsilon * s * x);
        }
        g
    }

    /// Hessian of the transverse part with respect to w = (p, q).
    fn transverse_hess(&self, w: &Array1<f64>) -> Array2<f64> {
        let mut h = self.transverse_hessian.clone();
        if self.epsilon != 0.0 {
            let qmat = self.quartic.as_ref().expect("validated");
            let qw = qmat.dot(w);
            let s = w.dot(&qw);
            let outer = Array2::from_shape_fn(h.dim(), |(i, j)| 2.0 * qw[i] * qw[j]);
            h = h + outer.mapv(|x| self.epsilon * x) + qmat.mapv(|x| self.epsilon * s * x);
        }
        h
    }

    /// Linear Hamiltonian field matrix of the transverse quadratic form, in
    /// (q, p) coordinate order: the constant matrix of the transverse
    /// variational equation along the torus.
    pub fn transverse_field_matrix(&self) -> Array2<f64> {
        let m = self.transverse_dim();
        let kmat = &self.transverse_hessian;
        let a = kmat.slice(s![..m, ..m]); // pp block
        let b = kmat.slice(s![..m, m..]); // pq block
        let c = kmat.slice(s![m.., ..m]); // qp block
        let d = kmat.slice(s![m.., m..]); // qq block
        let mut l = Array2::<f64>::zeros((2 * m, 2 * m));
        // dq/dt = H_p = A p + B q  =>  row block (B, A)
        l.slice_mut(s![..m, ..m]).assign(&b);
        l.slice_mut(s![..m, m..]).assign(&a);
        // dp/dt = -H_q = -(C p + D q)  =>  row block (-D, -C)
        l.slice_mut(s![m.., ..m]).assign(&d.mapv(|x| -x));
        l.slice_mut(s![m.., m..]).assign(&c.mapv(|x| -x));
        l
    }
}

/// Validate a spec and build the model.
pub fn make_cyclic_model(spec: &CyclicModelSpec) -> Result<CyclicModel> {
    if spec.kind != "cyclic_quadratic" && spec.kind != "cyclic_anharmonic" {
        return Err(GermError::ModelError(format!(
            "unknown model type {:?}; expected \"cyclic_quadratic\" or \"cyclic_anharmonic\"",
            spec.kind
        )));
    }
    let (n, k) = (spec.n, spec.k);
    if k < 1 || k >= n {
        return Err(GermError::ModelError(format!(
            "need 1 <= k < n, got k = {}, n = {}",
            k, n
        )));
    }
    let m = n - k;
    if spec.frequencies.len() != k {
        return Err(GermError::ModelError(format!(
            "frequencies must have length k = {}, got {}",
            k,
            spec.frequencies.len()
        )));
    }
    if spec.frequencies[0] == 0.0 {
        return Err(GermError::ModelError(
            "first frequency must be nonzero (it sets the return period)".into(),
        ));
    }
    let kmat = matrix_from_rows(&spec.transverse_hessian, 2 * m, "transverse_hessian")?;
    require_symmetric(&kmat, "transverse_hessian")?;
    let epsilon = spec.epsilon.unwrap_or(0.0);
    let quartic = match (&spec.quartic, spec.kind.as_str()) {
        (Some(rows), _) => {
            let q = matrix_from_rows(rows, 2 * m, "quartic")?;
            require_symmetric(&q, "quartic")?;
            Some(q)
        }
        (None, "cyclic_anharmonic") if epsilon != 0.0 => {
            return Err(GermError::ModelError(
                "anharmonic model with epsilon != 0 requires a quartic form".into(),
            ));
        }
        _ => None,
    };
    let bp = &spec.base_point;
    for (name, v, len) in [
        ("base_point.I", &bp.actions, k),
        ("base_point.theta", &bp.theta, k),
        ("base_point.p", &bp.p, m),
        ("base_point.q", &bp.q, m),
    ] {
        if v.len() != len {
            return Err(GermError::ModelError(format!(
                "{} must have length {}, got {}",
                name,
                len,
                v.len()
            )));
        }
    }
    let mut base = Array1::<f64>::zeros(2 * n);
    base.slice_mut(s![..k]).assign(&Array1::from(bp.theta.clone()));
    base.slice_mut(s![k..n]).assign(&Array1::from(bp.q.clone()));
    base.slice_mut(s![n..n + k])
        .assign(&Array1::from(bp.actions.clone()));
    base.slice_mut(s![n + k..]).assign(&Array1::from(bp.p.clone()));

    let model = CyclicModel {
        n,
        k,
        frequencies: Array1::from(spec.frequencies.clone()),
        transverse_hessian: kmat,
        epsilon,
        quartic,
        base,
        label: spec.kind.clone(),
    };
    // (p0, q0) must be a critical point of the transverse part.
    let w0 = model.transverse(&model.base.view());
    let g0 = model.transverse_gradient(&w0);
    let g0_norm = g0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if g0_norm > 1e-10 {
        return Err(GermError::ModelError(format!(
            "base point is not transverse-critical: |grad| = {:.3e}",
            g0_norm
        )));
    }
    Ok(model)
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, name: &str) -> Result<Array2<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(GermError::ModelError(format!(
            "{} must be a {} x {} matrix",
            name, dim, dim
        )));
    }
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| rows[i][j]))
}

fn require_symmetric(m: &Array2<f64>, name: &str) -> Result<()> {
    let asym = (m - &m.t())
        .iter()
        .map(|x| x.abs())
        .fold(0.0f64, f64::max);
    if asym > 1e-12 {
        return Err(GermError::ModelError(format!(
            "{} must be symmetric (asymmetry {:.3e})",
            name, asym
        )));
    }
    Ok(())
}

impl HamiltonianModel for CyclicModel {
    fn half_dim(&self) -> usize {
        self.n
    }

    fn num_flows(&self) -> usize {
        self.k
    }

    fn value(&self, j: usize, z: &ArrayView1<f64>) -> f64 {
        if j == 0 {
            let actions = z.slice(s![self.n..self.n + self.k]);
            let w = self.transverse(z);
            let mut h = self.frequencies.dot(&actions) + 0.5 * w.dot(&self.transverse_hessian.dot(&w));
            if self.epsilon != 0.0 {
                let s = w.dot(&self.quartic.as_ref().expect("validated").dot(&w));
                h += self.epsilon * s * s / 4.0;
            }
            h
        } else {
            z[self.n + j]
        }
    }

    fn gradient(&self, j: usize, z: &ArrayView1<f64>) -> Array1<f64> {
        let (n, k, m) = (self.n, self.k, self.transverse_dim());
        let mut g = Array1::<f64>::zeros(2 * n);
        if j == 0 {
            g.slice_mut(s![n..n + k]).assign(&self.frequencies);
            let w = self.transverse(z);
            let gw = self.transverse_gradient(&w);
            g.slice_mut(s![n + k..]).assign(&gw.slice(s![..m]));
            g.slice_mut(s![k..n]).assign(&gw.slice(s![m..]));
        } else {
            g[n + j] = 1.0;
        }
        g
    }

    fn hessian(&self, j: usize, z: &ArrayView1<f64>) -> Array2<f64> {
        let (n, k, m) = (self.n, self.k, self.transverse_dim());
        let mut h = Array2::<f64>::zeros((2 * n, 2 * n));
        if j == 0 {
            let w = self.transverse(z);
            let hw = self.transverse_hess(&w);
            // global index of transverse w component: p_i -> n + k + i, q_i -> k + i
            let idx = |i: usize| if i < m { n + k + i } else { k + (i - m) };
            for a in 0..2 * m {
                for b in 0..2 * m {
                    h[(idx(a), idx(b))] = hw[(a, b)];
                }
            }
        }
        h
    }

    fn base_point(&self) -> Array1<f64> {
        self.base.clone()
    }

    fn torus_chart(&self, angles: &[f64]) -> Array1<f64> {
        let mut z = self.base.clone();
        for (a, &s) in angles.iter().enumerate() {
            z[a] += s;
        }
        z
    }

    fn angle_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; 2 * self.n];
        for a in 0..self.k {
            mask[a] = true;
        }
        mask
    }

    fn analytic_lattice(&self) -> Option<Vec<Array1<f64>>> {
        let k = self.k;
        let w1 = self.frequencies[0];
        let tau = 2.0 * std::f64::consts::PI;
        let mut gens = Vec::with_capacity(k);
        let mut t1 = Array1::<f64>::zeros(k);
        t1[0] = tau / w1;
        for a in 1..k {
            t1[a] = -tau * self.frequencies[a] / w1;
        }
        gens.push(t1);
        for a in 1..k {
            let mut t = Array1::<f64>::zeros(k);
            t[a] = tau;
            gens.push(t);
        }
        Some(gens)
    }

    fn times_for_angles(&self, angles: &[f64]) -> Option<Array1<f64>> {
        let k = self.k;
        let w1 = self.frequencies[0];
        let mut t = Array1::<f64>::zeros(k);
        t[0] = angles[0] / w1;
        for a in 1..k {
            t[a] = angles[a] - self.frequencies[a] * angles[0] / w1;
        }
        Some(t)
    }

    fn name(&self) -> &str {
        &self.label
    }
}

/// Regularity data of the critical manifold at the base point.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalManifoldCheck {
    pub hessian_det: f64,
    pub regular: bool,
}

/// Determinant of the transverse Hessian at the critical point (including
/// the quartic contribution when present) and a regularity verdict.
pub fn critical_manifold_check(model: &CyclicModel, tol: f64) -> CriticalManifoldCheck {
    let w0 = model.transverse(&model.base_point().view());
    let hess = model.transverse_hess(&w0);
    let det = linalg::real_det(&hess);
    let regular = det.abs() > tol && model.frequencies.iter().any(|&w| w != 0.0);
    CriticalManifoldCheck {
        hessian_det: det,
        regular,
    }
}

/// Analytic reduced monodromy: Xi_1 = exp((2 pi / omega_1) L) with L the
/// transverse field matrix, and Xi_j = identity for j >= 2. Only defined for
/// the quadratic variant.
pub fn analytic_reduced_monodromy(model: &CyclicModel) -> Result<Vec<Array2<C64>>> {
    if model.epsilon != 0.0 {
        return Err(GermError::ModelError(
            "analytic reduced monodromy is only available for epsilon = 0".into(),
        ));
    }
    let m = model.transverse_dim();
    let t1 = 2.0 * std::f64::consts::PI / model.frequencies[0];
    let l = model.transverse_field_matrix();
    let xi1 = linalg::to_complex(&linalg::expm(&l.mapv(|x| x * t1)));
    let mut out = vec![xi1];
    for _ in 1..model.k {
        out.push(Array2::from_diag_elem(2 * m, Complex64::new(1.0, 0.0)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{
        self, integrate_variational, involution_check, monodromy_matrices, period_lattice,
    };
    use approx::assert_abs_diff_eq;

    fn harmonic_spec(omega2: f64) -> CyclicModelSpec {
        CyclicModelSpec {
            kind: "cyclic_quadratic".into(),
            n: 2,
            k: 1,
            frequencies: vec![1.0],
            transverse_hessian: vec![vec![omega2, 0.0], vec![0.0, omega2]],
            epsilon: None,
            quartic: None,
            base_point: CyclicBasePoint {
                actions: vec![1.0],
                theta: vec![0.0],
                p: vec![0.0],
                q: vec![0.0],
            },
        }
    }

    fn hyperbolic_spec(lambda: f64) -> CyclicModelSpec {
        CyclicModelSpec {
            kind: "cyclic_quadratic".into(),
            n: 2,
            k: 1,
            frequencies: vec![1.0],
            transverse_hessian: vec![vec![0.0, lambda], vec![lambda, 0.0]],
            epsilon: None,
            quartic: None,
            base_point: CyclicBasePoint {
                actions: vec![0.5],
                theta: vec![0.0],
                p: vec![0.0],
                q: vec![0.0],
            },
        }
    }

    #[test]
    fn harmonic_theta_advance() {
        let model = make_cyclic_model(&harmonic_spec(2.0f64.sqrt())).unwrap();
        let start = model.base_point();
        let t = 1.3;
        let (end, _) = integrate_variational(&model, 0, t, &start, t / 4000.0).unwrap();
        // theta = t, action constant
        assert_abs_diff_eq!(end[0], t, epsilon = 1e-9);
        assert_abs_diff_eq!(end[2], start[2], epsilon = 1e-12);
    }

    #[test]
    fn zero_hessian_all_space_critical() {
        let mut spec = harmonic_spec(0.0);
        spec.base_point.p = vec![0.7];
        spec.base_point.q = vec![-0.3];
        let model = make_cyclic_model(&spec).unwrap();
        assert_eq!(model.gradient(0, &model.base_point().view())[1], 0.0);
        let check = critical_manifold_check(&model, 1e-10);
        assert!(!check.regular);
        assert_eq!(check.hessian_det, 0.0);
    }

    #[test]
    fn hyperbolic_transverse_flow_is_saddle() {
        // H contains lambda p q, so q' = lambda q, p' = -lambda p.
        let lambda = 0.4;
        let model = make_cyclic_model(&hyperbolic_spec(lambda)).unwrap();
        let mut start = model.base_point();
        start[1] = 0.2; // q
        start[3] = 0.5; // p
        let t = 0.9;
        let (end, _) = integrate_variational(&model, 0, t, &start, t / 4000.0).unwrap();
        assert_abs_diff_eq!(end[1], 0.2 * (lambda * t).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(end[3], 0.5 * (-lambda * t).exp(), epsilon = 1e-9);
    }

    #[test]
    fn lattice_returns_to_base_point() {
        let model = make_cyclic_model(&harmonic_spec(2.0f64.sqrt())).unwrap();
        let step = 2.0 * std::f64::consts::PI / 4000.0;
        let lattice = period_lattice(&model, None, 1e-8, step).unwrap();
        assert_eq!(lattice.generators.len(), 1);
        assert!(lattice.return_residuals[0] < 1e-9);
    }

    #[test]
    fn reduced_monodromy_matches_analytic_oracle() {
        let model = make_cyclic_model(&harmonic_spec(2.0f64.sqrt())).unwrap();
        let step = 2.0 * std::f64::consts::PI / 4000.0;
        let lattice = period_lattice(&model, None, 1e-8, step).unwrap();
        let mut result = monodromy_matrices(&model, &lattice, step).unwrap();
        monodromy::reduced_monodromy(&model, &mut result, 1e-8).unwrap();
        let oracle = analytic_reduced_monodromy(&model).unwrap();
        let diff = (&result.reduced[0] - &oracle[0])
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-8, "oracle mismatch: {diff:.3e}");
        // rotation by 2 pi omega2 / omega1
        let ang = 2.0 * std::f64::consts::PI * 2.0f64.sqrt();
        assert_abs_diff_eq!(oracle[0][(0, 0)].re, ang.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[0][(0, 1)].re, ang.sin(), epsilon = 1e-12);
    }

    #[test]
    fn action_flows_have_identity_monodromy_factor() {
        // k = 2: the I_2 lattice generator contributes only an angle shift.
        let spec = CyclicModelSpec {
            kind: "cyclic_quadratic".into(),
            n: 3,
            k: 2,
            frequencies: vec![1.0, 0.3],
            transverse_hessian: vec![vec![1.5, 0.0], vec![0.0, 1.5]],
            epsilon: None,
            quartic: None,
            base_point: CyclicBasePoint {
                actions: vec![1.0, 2.0],
                theta: vec![0.0, 0.0],
                p: vec![0.0],
                q: vec![0.0],
            },
        };
        let model = make_cyclic_model(&spec).unwrap();
        let step = 2.0 * std::f64::consts::PI / 4000.0;
        let lattice = period_lattice(&model, None, 1e-8, step).unwrap();
        let mut result = monodromy_matrices(&model, &lattice, step).unwrap();
        monodromy::reduced_monodromy(&model, &mut result, 1e-8).unwrap();
        // G_2 is the identity on the whole space
        let eye = Array2::<C64>::from_diag_elem(6, Complex64::new(1.0, 0.0));
        let d = (&result.monodromies[1] - &eye)
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        assert!(d < 1e-9, "G_2 deviates from identity by {d:.3e}");
        assert!(result.commutation_residuals.iter().all(|&r| r < 1e-9));
    }

    #[test]
    fn resonant_frequencies_give_identity_reduction() {
        let model = make_cyclic_model(&harmonic_spec(1.0)).unwrap();
        let oracle = analytic_reduced_monodromy(&model).unwrap();
        let eye = Array2::<C64>::from_diag_elem(2, Complex64::new(1.0, 0.0));
        let d = (&oracle[0] - &eye).iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn involution_is_exact_on_samples() {
        let spec = CyclicModelSpec {
            kind: "cyclic_anharmonic".into(),
            n: 3,
            k: 2,
            frequencies: vec![1.0, 0.7],
            transverse_hessian: vec![vec![2.0, 0.1], vec![0.1, 2.0]],
            epsilon: Some(0.05),
            quartic: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            base_point: CyclicBasePoint {
                actions: vec![1.0, 1.0],
                theta: vec![0.0, 0.0],
                p: vec![0.0],
                q: vec![0.0],
            },
        };
        let model = make_cyclic_model(&spec).unwrap();
        let samples: Vec<Array1<f64>> = (0..20)
            .map(|i| {
                let x = i as f64 / 3.0;
                Array1::from(vec![x.sin(), x.cos(), 0.2 * x, 1.0 + x, 0.5 * x.sin(), -x.cos()])
            })
            .collect();
        assert!(involution_check(&model, &samples) < 1e-13);
    }

    #[test]
    fn spec_validation_rejects_bad_input() {
        let mut spec = harmonic_spec(1.0);
        spec.frequencies = vec![];
        assert!(make_cyclic_model(&spec).is_err());

        let mut spec = harmonic_spec(1.0);
        spec.transverse_hessian = vec![vec![0.0, 1.0], vec![0.5, 0.0]];
        assert!(make_cyclic_model(&spec).is_err());

        let mut spec = hyperbolic_spec(1.0);
        spec.base_point.q = vec![0.4]; // not a critical point of lambda p q
        spec.base_point.p = vec![0.4];
        assert!(make_cyclic_model(&spec).is_err());
    }
}
