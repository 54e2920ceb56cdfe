//! Small dense helpers. Matrices are row-major `Vec<f64>` with explicit sizes;
//! every algebra in this crate is desk-scale (dimension ≲ 20).

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// In-place Cholesky factorisation of a symmetric positive-definite `n×n`
/// matrix. On success the lower triangle holds `L` with `A = L Lᵀ`.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves a symmetric positive semi-definite system, adding Tikhonov damping
/// when the plain factorisation fails. Returns `None` if even the damped
/// system cannot be factored.
pub(crate) fn spd_solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0_f64, f64::max).max(1e-300);
    let mut damping = 0.0;
    for _ in 0..8 {
        let mut f = a.to_vec();
        for i in 0..n {
            f[i * n + i] += damping;
        }
        if cholesky(&mut f, n) {
            let mut x = b.to_vec();
            cholesky_solve(&f, n, &mut x);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        damping = if damping == 0.0 { scale * 1e-14 } else { damping * 100.0 };
    }
    None
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub(crate) fn solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Determinant by elimination with partial pivoting.
pub(crate) fn determinant(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        det *= m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / m[col * n + col];
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
        }
    }
    det
}

/// Incremental row-echelon basis used for span and rank decisions.
#[derive(Debug, Clone)]
pub(crate) struct EchelonBasis {
    dim: usize,
    tol: f64,
    /// Reduced rows with their pivot column.
    rows: Vec<(usize, Vec<f64>)>,
    /// Original (unreduced) vectors that were accepted.
    pub(crate) accepted: Vec<Vec<f64>>,
}

impl EchelonBasis {
    pub(crate) fn new(dim: usize, tol: f64) -> Self {
        Self { dim, tol, rows: Vec::new(), accepted: Vec::new() }
    }

    fn reduce(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        for (p, row) in &self.rows {
            let f = r[*p];
            if f != 0.0 {
                axpy(-f, row, &mut r);
            }
        }
        r
    }

    /// Adds `v` if it is independent of the current span; returns whether it was.
    pub(crate) fn insert(&mut self, v: &[f64]) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale <= self.tol {
            return false;
        }
        let r = self.reduce(v);
        let (p, pv) = r
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(bp, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bp, bv) });
        if pv <= self.tol * scale.max(1.0) {
            return false;
        }
        let pivot = r[p];
        let row: Vec<f64> = r.iter().map(|x| x / pivot).collect();
        for (_, other) in self.rows.iter_mut() {
            let f = other[p];
            if f != 0.0 {
                axpy(-f, &row, other);
            }
        }
        self.rows.push((p, row));
        self.accepted.push(v.to_vec());
        true
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn contains(&self, v: &[f64]) -> bool {
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let r = self.reduce(v);
        r.iter().all(|x| x.abs() <= self.tol * scale.max(1.0))
    }
}
