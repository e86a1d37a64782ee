//! Complex-Hermitian semidefinite feasibility subproblems.
//!
//! Every precoder stage reduces to the same question: does a Hermitian PSD
//! matrix `X` exist with `Tr(A_i X) <= b_i` for a handful of constraint
//! matrices, optionally with a fixed constant diagonal? The solver answers
//! by maximizing a shared slack `s` with `Tr(A_i X) + s <= b_i` and testing
//! the sign of the optimum: the feasibility oracle used by bisection only
//! needs that sign to be monotone in the target SINR.
//!
//! The max-slack program is solved with alternating-direction splitting on
//! the real symmetric embedding of the complex variable: one half-step is a
//! least-squares projection onto the affine constraints, the other a
//! projection onto the PSD cone by eigenvalue clamping. Problem sizes stay
//! below ~50 real rows, so an eigendecomposition per iteration is cheap.

use crate::linalg::{
    cholesky_solve, cholesky_spd, embed_complex, reconstruct_complex, sym_eigen, CMat, RMat, C64,
};
use crate::Error;

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 5000;
/// Slack values are capped here when the feasible region is unbounded in
/// `s`; only the sign of the slack carries meaning.
pub const SLACK_CAP: f64 = 1.0;

/// A square complex matrix kept Hermitian by construction: inputs are
/// symmetrized as `(A + A^H) / 2` on ingestion, which absorbs the rounding
/// drift of rank-one outer-product constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: CMat,
}

impl HermitianMatrix {
    pub fn from_matrix(m: CMat) -> Self {
        assert!(m.is_square(), "Hermitian matrix must be square");
        assert!(m.rows >= 1, "dimension must be at least 1");
        Self {
            mat: m.hermitian_part(),
        }
    }

    /// Rank-one `v v^H`.
    pub fn from_outer(v: &[C64]) -> Self {
        Self::from_matrix(CMat::outer(v, v))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: CMat::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: CMat::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn as_mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    /// `Tr(A X)`, real for Hermitian operands.
    pub fn trace_product(&self, x: &HermitianMatrix) -> f64 {
        self.mat.trace_product_real(&x.mat)
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.scale(C64::new(s, 0.0)),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.add(&other.mat),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.sub(&other.mat),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigen(&self.mat).0
    }
}

/// Feasibility/optimization instance over one Hermitian variable.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    /// Variable dimension `n` (complex).
    pub dim: usize,
    /// Rows `Tr(A X) <= b`.
    pub trace_ineqs: Vec<(HermitianMatrix, f64)>,
    /// Optional constraint `diag(X) = d * 1` with `d > 0`.
    pub diag_eq: Option<f64>,
}

impl SdpProblem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            trace_ineqs: Vec::new(),
            diag_eq: None,
        }
    }

    pub fn with_diag(mut self, d: f64) -> Self {
        assert!(d > 0.0, "diagonal value must be positive");
        self.diag_eq = Some(d);
        self
    }

    pub fn push_ineq(&mut self, a: HermitianMatrix, b: f64) {
        self.trace_ineqs.push((a, b));
    }

    fn validate(&self) -> Result<(), Error> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("SDP dimension must be >= 1".into()));
        }
        for (i, (a, b)) in self.trace_ineqs.iter().enumerate() {
            if a.dim() != self.dim {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {} has dim {} but problem dim is {}",
                    i,
                    a.dim(),
                    self.dim
                )));
            }
            if !b.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "constraint {i} bound is not finite"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    MaxIterations,
}

/// Solver output; `slack` is the max-slack certificate value measured
/// against unit-normalized constraint rows (capped at [`SLACK_CAP`]).
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: HermitianMatrix,
    pub slack: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl SdpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == SdpStatus::Feasible
    }
}

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`.
///
/// `H` is PSD iff the embedding is PSD, every eigenvalue of `H` appears
/// twice in the embedding, and `Tr(A X)` over complex Hermitian matrices
/// equals half the Frobenius product of the embeddings.
pub fn complex_to_real_embedding(h: &HermitianMatrix) -> RMat {
    embed_complex(h.as_mat())
}

/// Inverse of [`complex_to_real_embedding`]; averages the two real blocks
/// and re-Hermitianizes, so it also accepts near-embedding matrices.
pub fn reconstruct_hermitian(s: &RMat) -> HermitianMatrix {
    HermitianMatrix::from_matrix(reconstruct_complex(s))
}

/// Frobenius-nearest PSD matrix: eigendecompose, clamp negative eigenvalues
/// to zero, reassemble.
pub fn psd_project(s: &RMat) -> RMat {
    let n = s.rows;
    let (vals, vecs) = sym_eigen(s);
    let mut out = RMat::zeros(n, n);
    for k in 0..n {
        let lam = vals[k];
        if lam <= 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = vecs[(i, k)] * lam;
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += vik * vecs[(j, k)];
            }
        }
    }
    out.symmetrize();
    out
}

/// Reusable iterate carried across related solves (e.g. successive
/// bisection steps); speeds convergence without changing results' meaning.
#[derive(Debug, Clone, Default)]
pub struct SdpWarmStart {
    state: Option<WarmState>,
}

#[derive(Debug, Clone)]
struct WarmState {
    n_emb: usize,
    m: usize,
    z_mat: RMat,
    z_slack: f64,
    z_u: Vec<f64>,
    y_mat: RMat,
    y_slack: f64,
    y_u: Vec<f64>,
    rho: f64,
}

/// Finest partition of the complex indices into components not coupled by
/// any constraint matrix. Lifted problems whose constraints are
/// block-diagonal (one lifted block per stream, say) then admit
/// block-diagonal iterates, and the PSD projection runs per block.
fn coupled_components(problem: &SdpProblem) -> Vec<Vec<usize>> {
    let n = problem.dim;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for (a, _) in &problem.trace_ineqs {
        let m = a.as_mat();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)].norm_sqr() > 0.0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        comps[r].push(i);
    }
    comps.retain(|c| !c.is_empty());
    comps
}

/// PSD projection restricted to block-diagonal support: each component's
/// embedding submatrix is projected on its own, and cross-component entries
/// are zeroed (they stay zero along the whole iteration).
fn psd_project_blocks(s: &RMat, comps: &[Vec<usize>], n: usize) -> RMat {
    if comps.len() <= 1 {
        return psd_project(s);
    }
    let mut out = RMat::zeros(s.rows, s.cols);
    for comp in comps {
        let emb: Vec<usize> = comp
            .iter()
            .copied()
            .chain(comp.iter().map(|&i| i + n))
            .collect();
        let b = emb.len();
        let mut sub = RMat::zeros(b, b);
        for (ii, &gi) in emb.iter().enumerate() {
            for (jj, &gj) in emb.iter().enumerate() {
                sub[(ii, jj)] = s[(gi, gj)];
            }
        }
        let proj = psd_project(&sub);
        for (ii, &gi) in emb.iter().enumerate() {
            for (jj, &gj) in emb.iter().enumerate() {
                out[(gi, gj)] = proj[(ii, jj)];
            }
        }
    }
    out
}

/// Decides feasibility of `problem` by maximizing the shared slack.
///
/// Returns `Feasible` iff the optimal slack is at least `-tol`; an iterate
/// that has not converged within `max_iter` is reported as `MaxIterations`
/// (bisection callers treat both non-feasible statuses alike).
pub fn solve_feasibility(
    problem: &SdpProblem,
    tol: f64,
    max_iter: usize,
) -> Result<SdpSolution, Error> {
    solve_feasibility_warm(problem, tol, max_iter, &mut SdpWarmStart::default())
}

/// [`solve_feasibility`] with an externally owned warm-start slot.
pub fn solve_feasibility_warm(
    problem: &SdpProblem,
    tol: f64,
    max_iter: usize,
    warm: &mut SdpWarmStart,
) -> Result<SdpSolution, Error> {
    problem.validate()?;
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }

    // With a pinned diagonal and n = 1 the variable is fully determined.
    if problem.dim == 1 {
        if let Some(d) = problem.diag_eq {
            return Ok(solve_scalar_with_diag(problem, d, tol));
        }
    }

    let n = problem.dim;
    let n_emb = 2 * n;
    let m = problem.trace_ineqs.len();
    let n_diag = if problem.diag_eq.is_some() { n_emb } else { 0 };
    let diag_val = problem.diag_eq.unwrap_or(0.0);
    let comps = coupled_components(problem);

    // Unit-normalized constraint gradients on the embedding.
    let mut grads: Vec<RMat> = Vec::with_capacity(m);
    let mut bounds = Vec::with_capacity(m);
    for (a, b) in &problem.trace_ineqs {
        let mut g = complex_to_real_embedding(a);
        for v in &mut g.data {
            *v *= 0.5;
        }
        let norm = g.frob().max(1e-12);
        for v in &mut g.data {
            *v /= norm;
        }
        grads.push(g);
        bounds.push(b / norm);
    }

    // Gram matrix of the affine-constraint normals, factored once.
    let total = m + n_diag;
    let gram_l = if total > 0 {
        let mut gram = RMat::zeros(total, total);
        for i in 0..m {
            for j in 0..=i {
                let mut v = grads[i].dot(&grads[j]) + 1.0;
                if i == j {
                    v += 1.0;
                }
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            for jd in 0..n_diag {
                let v = grads[i][(jd, jd)];
                gram[(i, m + jd)] = v;
                gram[(m + jd, i)] = v;
            }
        }
        for jd in 0..n_diag {
            gram[(m + jd, m + jd)] = 1.0;
        }
        Some(cholesky_spd(&gram))
    } else {
        None
    };

    // Adopt the warm iterate when shapes line up, otherwise start cold.
    let mut st = match warm.state.take() {
        Some(s) if s.n_emb == n_emb && s.m == m => s,
        _ => WarmState {
            n_emb,
            m,
            z_mat: RMat::zeros(n_emb, n_emb),
            z_slack: 0.0,
            z_u: vec![0.0; m],
            y_mat: RMat::zeros(n_emb, n_emb),
            y_slack: 0.0,
            y_u: vec![0.0; m],
            rho: 1.0,
        },
    };

    let relax = 1.6;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    let mut x_mat = RMat::zeros(n_emb, n_emb);
    let mut x_slack;
    let mut x_u = vec![0.0; m];
    let mut mu = vec![0.0; total.max(1)];

    while iterations < max_iter {
        iterations += 1;

        // Affine projection of (z - y) shifted along the slack coordinate by
        // 1/rho, which realizes the max-slack objective.
        for (xv, (zv, yv)) in x_mat
            .data
            .iter_mut()
            .zip(st.z_mat.data.iter().zip(&st.y_mat.data))
        {
            *xv = zv - yv;
        }
        x_slack = st.z_slack - st.y_slack + 1.0 / st.rho;
        for i in 0..m {
            x_u[i] = st.z_u[i] - st.y_u[i];
        }
        if let Some(l) = &gram_l {
            let mut rhs = vec![0.0; total];
            for i in 0..m {
                rhs[i] = grads[i].dot(&x_mat) + x_slack + x_u[i] - bounds[i];
            }
            for jd in 0..n_diag {
                rhs[m + jd] = x_mat[(jd, jd)] - diag_val;
            }
            mu = cholesky_solve(l, &rhs);
            for i in 0..m {
                let c = mu[i];
                if c != 0.0 {
                    for (xv, gv) in x_mat.data.iter_mut().zip(&grads[i].data) {
                        *xv -= c * gv;
                    }
                    x_slack -= c;
                    x_u[i] -= c;
                }
            }
            for jd in 0..n_diag {
                x_mat[(jd, jd)] -= mu[m + jd];
            }
        }

        // Over-relaxed cone projection.
        let z_prev_mat = st.z_mat.clone();
        let z_prev_slack = st.z_slack;
        let z_prev_u = st.z_u.clone();

        let mut target = RMat::zeros(n_emb, n_emb);
        for i in 0..n_emb * n_emb {
            let hat = relax * x_mat.data[i] + (1.0 - relax) * z_prev_mat.data[i];
            target.data[i] = hat + st.y_mat.data[i];
        }
        target.symmetrize();
        st.z_mat = psd_project_blocks(&target, &comps, n);
        let hat_slack = relax * x_slack + (1.0 - relax) * z_prev_slack;
        st.z_slack = (hat_slack + st.y_slack).min(SLACK_CAP);
        for i in 0..m {
            let hat = relax * x_u[i] + (1.0 - relax) * z_prev_u[i];
            st.z_u[i] = (hat + st.y_u[i]).max(0.0);
        }

        // Dual ascent.
        for i in 0..n_emb * n_emb {
            let hat = relax * x_mat.data[i] + (1.0 - relax) * z_prev_mat.data[i];
            st.y_mat.data[i] += hat - st.z_mat.data[i];
        }
        st.y_slack += hat_slack - st.z_slack;
        for i in 0..m {
            let hat = relax * x_u[i] + (1.0 - relax) * z_prev_u[i];
            st.y_u[i] += hat - st.z_u[i];
        }

        // Residuals.
        let mut r_prim = (x_slack - st.z_slack).powi(2);
        let mut r_dual = (st.z_slack - z_prev_slack).powi(2);
        for i in 0..n_emb * n_emb {
            r_prim += (x_mat.data[i] - st.z_mat.data[i]).powi(2);
            r_dual += (st.z_mat.data[i] - z_prev_mat.data[i]).powi(2);
        }
        for i in 0..m {
            r_prim += (x_u[i] - st.z_u[i]).powi(2);
            r_dual += (st.z_u[i] - z_prev_u[i]).powi(2);
        }
        let r_prim = r_prim.sqrt();
        let r_dual = r_dual.sqrt() * st.rho;
        let scale = 1.0 + x_mat.frob() + x_slack.abs();
        residual = r_prim.max(r_dual) / scale;
        if residual <= tol {
            converged = true;
            break;
        }

        // Residual balancing.
        if iterations % 20 == 0 {
            if r_prim > 10.0 * r_dual && st.rho < 1e4 {
                st.rho *= 2.0;
                for v in &mut st.y_mat.data {
                    *v *= 0.5;
                }
                st.y_slack *= 0.5;
                for v in &mut st.y_u {
                    *v *= 0.5;
                }
            } else if r_dual > 10.0 * r_prim && st.rho > 1e-4 {
                st.rho *= 0.5;
                for v in &mut st.y_mat.data {
                    *v *= 2.0;
                }
                st.y_slack *= 2.0;
                for v in &mut st.y_u {
                    *v *= 2.0;
                }
            }
        }
    }

    let slack = st.z_slack.min(SLACK_CAP);
    let x = reconstruct_hermitian(&st.z_mat);
    let status = if !converged {
        SdpStatus::MaxIterations
    } else if slack >= -tol {
        SdpStatus::Feasible
    } else {
        SdpStatus::Infeasible
    };
    warm.state = Some(st);

    Ok(SdpSolution {
        status,
        x,
        slack,
        iterations,
        residual,
    })
}

/// `n = 1` with a pinned diagonal: the variable is `[d]` and feasibility is
/// a direct constraint check.
fn solve_scalar_with_diag(problem: &SdpProblem, d: f64, tol: f64) -> SdpSolution {
    let x = HermitianMatrix::from_matrix(CMat::from_fn(1, 1, |_, _| C64::new(d, 0.0)));
    let mut slack = SLACK_CAP;
    for (a, b) in &problem.trace_ineqs {
        let norm = (a.as_mat()[(0, 0)].re.abs()).max(1e-12);
        slack = slack.min((b - a.trace_product(&x)) / norm);
    }
    let status = if slack >= -tol {
        SdpStatus::Feasible
    } else {
        SdpStatus::Infeasible
    };
    SdpSolution {
        status,
        x,
        slack,
        iterations: 0,
        residual: 0.0,
    }
}
