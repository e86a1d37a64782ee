//! Dense linear algebra for small complex and real matrices.
//!
//! Everything here targets the matrix sizes that appear in the precoder
//! pipeline (at most a few dozen rows), so the implementations favour
//! robustness and zero dependencies over asymptotic tricks. The symmetric
//! eigensolver is the classic Householder tridiagonalization followed by
//! implicit-shift QL (EISPACK `tred2`/`tql2` lineage). Hermitian
//! decompositions go through the real symmetric embedding.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[C64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v -= w;
        }
        out
    }

    /// Outer product `u v^H` of two column vectors.
    pub fn outer(u: &[C64], v: &[C64]) -> CMat {
        let mut out = CMat::zeros(u.len(), v.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                out[(i, j)] = u[i] * v[j].conj();
            }
        }
        out
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        out[(i * other.rows + p, j * other.cols + q)] = a * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    pub fn hadamard(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v *= w;
        }
        out
    }

    /// Column-major vectorization.
    pub fn vec_col_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn row(&self, r: usize) -> Vec<C64> {
        (0..self.cols).map(|c| self[(r, c)]).collect()
    }

    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        assert!(self.is_square());
        let n = self.rows;
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    /// `Tr(A B)` for Hermitian `A`, `B`; the result is real up to rounding.
    pub fn trace_product_real(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.cols, other.rows));
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] * other[(j, i)]).re;
            }
        }
        acc
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frob(&self) -> f64 {
        self.frob_sq().sqrt()
    }

    pub fn symmetrize(&mut self) {
        assert!(self.rows == self.cols);
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &RMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<(usize, usize)> for RMat {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

// ── Symmetric eigendecomposition (tred2 + tql2) ─────────────────────────────

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transformation in `v`.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |v: &[f64], r: usize, c: usize| v[r * n + c];

    for j in 0..n {
        d[j] = at(v, n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = at(v, i - 1, j);
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + at(v, j, j) * f;
                for k in (j + 1)..i {
                    g += at(v, k, j) * d[k];
                    e[k] += at(v, k, j) * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = at(v, i - 1, j);
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = at(v, i, i);
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = at(v, k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += at(v, k, i + 1) * at(v, k, j);
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + (i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = at(v, n - 1, j);
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal form, accumulating eigenvectors.
fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = 2.0_f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l && m < n {
            let mut iter = 0;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 || iter >= 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort eigenvalues ascending, permuting eigenvectors accordingly.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                v.swap(j * n + i, j * n + k);
            }
        }
    }
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matrix whose columns are
/// the matching orthonormal eigenvectors.
pub fn sym_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    assert!(a.rows == a.cols, "eigendecomposition needs a square matrix");
    let n = a.rows;
    if n == 0 {
        return (vec![], RMat::zeros(0, 0));
    }
    if n == 1 {
        return (vec![a[(0, 0)]], RMat::identity(1));
    }
    let mut v = a.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e);
    (
        d,
        RMat {
            rows: n,
            cols: n,
            data: v,
        },
    )
}

/// Cholesky factorization `a = L L^T` of a symmetric positive definite
/// matrix; returns the lower factor. A tiny ridge keeps marginally
/// semidefinite Gram matrices factorizable.
pub fn cholesky_spd(a: &RMat) -> RMat {
    assert!(a.rows == a.cols);
    let n = a.rows;
    let ridge = 1e-12 * (1.0 + a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let mut l = RMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                let v = sum.max(ridge);
                l[(i, j)] = v.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    l
}

/// Solves `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: &RMat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    x
}

// ── Hermitian decompositions through the real embedding ─────────────────────

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` of a square
/// complex matrix.
pub fn embed_complex(h: &CMat) -> RMat {
    assert!(h.is_square());
    let n = h.rows;
    let mut s = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            s[(i, j)] = v.re;
            s[(i, j + n)] = -v.im;
            s[(i + n, j)] = v.im;
            s[(i + n, j + n)] = v.re;
        }
    }
    s
}

/// Inverse of [`embed_complex`] for matrices near the embedding subspace:
/// averages the two real blocks and antisymmetrizes the imaginary ones.
pub fn reconstruct_complex(s: &RMat) -> CMat {
    assert!(s.rows == s.cols && s.rows.is_multiple_of(2));
    let n = s.rows / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (s[(i, j)] + s[(i + n, j + n)]);
        let im = 0.5 * (s[(i + n, j)] - s[(i, j + n)]);
        C64::new(re, im)
    })
}

/// Eigendecomposition of a Hermitian matrix via its real embedding.
///
/// The embedding doubles every eigenvalue; one complex eigenvector is kept
/// per doubled pair. Eigenvalues ascend; eigenvectors are the columns of the
/// returned matrix, orthonormal in the complex inner product.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    assert!(h.is_square());
    let n = h.rows;
    if n == 0 {
        return (vec![], CMat::zeros(0, 0));
    }
    let (vals, vecs) = sym_eigen(&embed_complex(h));
    let mut kept_vals = Vec::with_capacity(n);
    let mut kept_vecs: Vec<Vec<C64>> = Vec::with_capacity(n);

    // Walk from the largest eigenvalue down; each doubled real pair spans a
    // single complex direction, so Gram-Schmidt rejects the duplicate.
    for idx in (0..2 * n).rev() {
        if kept_vecs.len() == n {
            break;
        }
        let mut cand: Vec<C64> = (0..n)
            .map(|r| C64::new(vecs[(r, idx)], vecs[(r + n, idx)]))
            .collect();
        for prev in &kept_vecs {
            let proj: C64 = prev.iter().zip(&cand).map(|(p, c)| p.conj() * c).sum();
            for (c, p) in cand.iter_mut().zip(prev) {
                *c -= proj * p;
            }
        }
        let norm = cand.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for v in &mut cand {
                *v /= norm;
            }
            kept_vals.push(vals[idx]);
            kept_vecs.push(cand);
        }
    }
    debug_assert_eq!(kept_vecs.len(), n, "embedding eigenbasis incomplete");

    kept_vals.reverse();
    kept_vecs.reverse();
    let mut out = CMat::zeros(n, n);
    for (c, vec) in kept_vecs.iter().enumerate() {
        for (r, &v) in vec.iter().enumerate() {
            out[(r, c)] = v;
        }
    }
    (kept_vals, out)
}

/// Square-root factor `R` with `Y ≈ R R^H` from the eigendecomposition of a
/// Hermitian PSD matrix; negative rounding noise is clamped to zero.
pub fn hermitian_sqrt(y: &CMat) -> CMat {
    let n = y.rows;
    let (vals, vecs) = hermitian_eigen(y);
    let mut r = CMat::zeros(n, n);
    for c in 0..n {
        let s = vals[c].max(0.0).sqrt();
        for i in 0..n {
            r[(i, c)] = vecs[(i, c)] * s;
        }
    }
    r
}

/// Pivoted Cholesky factorization of a Hermitian PSD matrix with diagonal
/// jitter: returns `R` (n x rank) with `Y ≈ R R^H`, rows in original order.
///
/// Returns `None` when the matrix is indefinite beyond the jitter level, in
/// which case callers fall back to [`hermitian_sqrt`].
pub fn pivoted_cholesky(y: &CMat, jitter: f64) -> Option<CMat> {
    assert!(y.is_square());
    let n = y.rows;
    let mut a = y.clone();
    let scale = (0..n)
        .map(|i| a[(i, i)].re.abs())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    for i in 0..n {
        a[(i, i)] += C64::new(jitter * scale, 0.0);
    }
    let tol = 1e-12 * scale;
    let mut cols: Vec<Vec<C64>> = Vec::new();
    let mut active = vec![true; n];
    for _ in 0..n {
        let mut pivot = None;
        let mut best = tol;
        for (i, &alive) in active.iter().enumerate() {
            if alive && a[(i, i)].re > best {
                best = a[(i, i)].re;
                pivot = Some(i);
            }
        }
        let Some(p) = pivot else { break };
        let d = a[(p, p)].re.max(0.0).sqrt();
        let col: Vec<C64> = (0..n)
            .map(|i| {
                if active[i] {
                    a[(i, p)] / d
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in 0..n {
                if !active[j] {
                    continue;
                }
                let upd = col[i] * col[j].conj();
                a[(i, j)] -= upd;
            }
        }
        active[p] = false;
        // An indefinite input shows up as a strongly negative remaining
        // diagonal; hand such matrices to the eigen-based fallback.
        if (0..n).any(|i| active[i] && a[(i, i)].re < -1e-6 * scale) {
            return None;
        }
        cols.push(col);
    }
    if cols.is_empty() {
        return Some(CMat::zeros(n, 1));
    }
    let rank = cols.len();
    let mut r = CMat::zeros(n, rank);
    for (c, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            r[(i, c)] = v;
        }
    }
    Some(r)
}
