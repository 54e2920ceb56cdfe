//! Shortest-path search over piecewise-constant controls.
//!
//! A path is `m` segments of duration `τ = 1/m`; segment `j` flows along
//! `a_j = Σ_k w_jk f_k` for a fixed frame `f_k`. We minimise the energy
//! `E = ½ τ Σ |w_j|²` subject to the endpoint constraint. With total time 1,
//! `length² ≤ 2E` with equality at constant speed, so energy minimisers are
//! length minimisers.
//!
//! The solver is a feasible SQP method: every iterate is pulled back onto the
//! constraint manifold by minimum-norm Newton steps, the search direction is
//! a BFGS step projected onto the constraint tangent space, and the Hessian
//! model is updated from gradients of the Lagrangian.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::group::{Group, EXP_NEG, LEFT_DEXP, RIGHT_DLOG};
use crate::linalg::{self, dot, norm};

/// Budget for one shortest-path search.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerConfig {
    /// Initial segment count `m`.
    pub segments: usize,
    /// Cap for segment doubling when no start can be made feasible.
    pub max_segments: usize,
    /// Number of starts (start 0 is deterministic, the rest random).
    pub starts: usize,
    /// SQP iterations per start.
    pub max_iter: usize,
    /// Relative norm of the projected gradient at which a start stops.
    pub grad_tol: f64,
    /// Endpoint tolerance required of the returned witness.
    pub endpoint_tol: f64,
    /// Root seed for the random starts.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { segments: 64, max_segments: 256, starts: 3, max_iter: 200, grad_tol: 1e-9, endpoint_tol: 1e-9, seed: 0 }
    }
}

impl OptimizerConfig {
    /// A lighter budget for bulk sampling.
    pub fn fast() -> Self {
        Self { segments: 32, starts: 1, max_iter: 80, grad_tol: 1e-7, ..Self::default() }
    }
}

/// Result of one local search: frame weights and the resulting controls.
#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub m: usize,
    /// `m × n` controls `a_j` (full algebra vectors).
    pub controls: Vec<Vec<f64>>,
    pub length: f64,
}

pub(crate) struct Problem<'a> {
    pub group: &'a Group,
    /// Frame vectors, each of full algebra dimension.
    pub frame: &'a [Vec<f64>],
    pub target: &'a [f64],
}

struct Work {
    n: usize,
    tmp: Vec<f64>,
    tmp2: Vec<f64>,
    v: Vec<f64>,
    v2: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn n(&self) -> usize {
        self.group.dim()
    }

    fn d(&self) -> usize {
        self.frame.len()
    }

    fn work(&self) -> Work {
        let n = self.n();
        Work {
            n,
            tmp: vec![0.0; n],
            tmp2: vec![0.0; n],
            v: vec![0.0; n],
            v2: vec![0.0; n],
            scratch: self.group.scratch(),
        }
    }

    /// Control `a_j` from frame weights.
    fn control(&self, wj: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; self.n()];
        for (k, f) in self.frame.iter().enumerate() {
            if wj[k] != 0.0 {
                linalg::axpy(wj[k], f, &mut a);
            }
        }
        a
    }

    fn increments(&self, w: &[f64], m: usize) -> Vec<Vec<f64>> {
        let d = self.d();
        let tau = 1.0 / m as f64;
        (0..m).map(|j| self.control(&w[j * d..(j + 1) * d]).into_iter().map(|c| c * tau).collect()).collect()
    }

    #[cfg(test)]
    fn endpoint(&self, w: &[f64], m: usize, wk: &mut Work) -> Vec<f64> {
        let mut acc = vec![0.0; wk.n];
        let mut out = vec![0.0; wk.n];
        for b in self.increments(w, m) {
            self.group.mul_into(&acc, &b, &mut out, &mut wk.scratch);
            std::mem::swap(&mut acc, &mut out);
        }
        acc
    }

    /// Endpoint and its Jacobian (`n × m·d`, row-major) with respect to `w`.
    fn jacobian(&self, w: &[f64], m: usize, wk: &mut Work) -> (Vec<f64>, Vec<f64>) {
        let n = wk.n;
        let d = self.d();
        let cols = m * d;
        let tau = 1.0 / m as f64;
        let b = self.increments(w, m);
        // suffix[j] = log of the product of segments after j.
        let mut suffix = vec![vec![0.0; n]; m];
        for j in (0..m.saturating_sub(1)).rev() {
            let mut out = vec![0.0; n];
            self.group.mul_into(&b[j + 1], &suffix[j + 1], &mut out, &mut wk.scratch);
            suffix[j] = out;
        }
        let mut end = vec![0.0; n];
        if m > 0 {
            self.group.mul_into(&b[0], &suffix[0], &mut end, &mut wk.scratch);
        }
        let mut jac = vec![0.0; n * cols];
        for j in 0..m {
            let neg_s: Vec<f64> = suffix[j].clone();
            for (k, f) in self.frame.iter().enumerate() {
                self.group.ad_series(&b[j], &LEFT_DEXP, f, &mut wk.v, &mut wk.tmp, &mut wk.tmp2);
                self.group.ad_series(&neg_s, &EXP_NEG, &wk.v, &mut wk.v2, &mut wk.tmp, &mut wk.tmp2);
                self.group.ad_series(&end, &RIGHT_DLOG, &wk.v2, &mut wk.v, &mut wk.tmp, &mut wk.tmp2);
                let c = j * d + k;
                for r in 0..n {
                    jac[r * cols + c] = tau * wk.v[r];
                }
            }
        }
        (end, jac)
    }

    /// `J Jᵀ` for a row-major `n × cols` Jacobian.
    fn gram(jac: &[f64], n: usize, cols: usize) -> Vec<f64> {
        let mut g = vec![0.0; n * n];
        for r in 0..n {
            for s in 0..=r {
                let v = dot(&jac[r * cols..(r + 1) * cols], &jac[s * cols..(s + 1) * cols]);
                g[r * n + s] = v;
                g[s * n + r] = v;
            }
        }
        g
    }

    fn residual(&self, end: &[f64]) -> Vec<f64> {
        self.target.iter().zip(end).map(|(p, e)| p - e).collect()
    }

    /// Minimum-norm Newton projection onto the endpoint constraint. Returns
    /// the projected weights with their endpoint Jacobian, or `None`.
    fn restore(&self, mut w: Vec<f64>, m: usize, wk: &mut Work) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = wk.n;
        let cols = m * self.d();
        let scale = 1.0 + norm(self.target);
        let mut last = f64::INFINITY;
        for _ in 0..40 {
            let (end, jac) = self.jacobian(&w, m, wk);
            let r = self.residual(&end);
            let rn = norm(&r);
            if !rn.is_finite() {
                return None;
            }
            if rn <= 1e-14 * scale {
                return Some((w, jac));
            }
            if rn > 2.0 * last {
                return None;
            }
            last = rn;
            let lam = linalg::spd_solve(&Self::gram(&jac, n, cols), n, &r)?;
            for (c, wc) in w.iter_mut().enumerate() {
                let mut s = 0.0;
                for row in 0..n {
                    s += jac[row * cols + c] * lam[row];
                }
                *wc += s;
            }
        }
        let (end, jac) = self.jacobian(&w, m, wk);
        if norm(&self.residual(&end)) <= 1e-11 * scale {
            Some((w, jac))
        } else {
            None
        }
    }

    /// Lagrangian gradient `g − Jᵀλ` with least-squares multipliers.
    fn lagrangian_grad(g: &[f64], jac: &[f64], n: usize, cols: usize) -> Vec<f64> {
        let jg: Vec<f64> = (0..n).map(|r| dot(&jac[r * cols..(r + 1) * cols], g)).collect();
        let lam = linalg::spd_solve(&Self::gram(jac, n, cols), n, &jg).unwrap_or_else(|| vec![0.0; n]);
        Self::minus_jt(g, jac, &lam, n, cols)
    }

    fn minus_jt(g: &[f64], jac: &[f64], lam: &[f64], n: usize, cols: usize) -> Vec<f64> {
        let mut out = g.to_vec();
        for r in 0..n {
            linalg::axpy(-lam[r], &jac[r * cols..(r + 1) * cols], &mut out);
        }
        out
    }

    fn length(&self, w: &[f64], m: usize) -> f64 {
        let d = self.d();
        w.chunks(d).map(norm).sum::<f64>() / m as f64
    }

    /// Local SQP from `w0`. Stops early once a feasible iterate is shorter
    /// than `stop_below`.
    pub(crate) fn solve(&self, w0: Vec<f64>, m: usize, cfg: &OptimizerConfig, stop_below: Option<f64>) -> Option<Local> {
        let mut wk = self.work();
        let n = wk.n;
        let cols = m * self.d();
        let tau = 1.0 / m as f64;
        let energy = |w: &[f64]| 0.5 * tau * dot(w, w);
        let (mut w, mut jac) = self.restore(w0, m, &mut wk)?;
        // Inverse Hessian model, initialised to the exact inverse of ∇²E.
        let mut h = vec![0.0; cols * cols];
        for i in 0..cols {
            h[i * cols + i] = m as f64;
        }
        let mut e = energy(&w);
        for _ in 0..cfg.max_iter {
            if let Some(limit) = stop_below {
                if self.length(&w, m) <= limit {
                    break;
                }
            }
            let g: Vec<f64> = w.iter().map(|x| tau * x).collect();
            let gl = Self::lagrangian_grad(&g, &jac, n, cols);
            if norm(&gl) <= cfg.grad_tol * norm(&g).max(1e-300) {
                break;
            }
            // d = −H g + H Jᵀ μ with J d = 0.
            let hg = matvec(&h, &g, cols);
            let mut hjt = vec![0.0; cols * n];
            for r in 0..n {
                let col = matvec(&h, &jac[r * cols..(r + 1) * cols], cols);
                for c in 0..cols {
                    hjt[c * n + r] = col[c];
                }
            }
            let mut jhj = vec![0.0; n * n];
            for r in 0..n {
                for s in 0..n {
                    jhj[r * n + s] = (0..cols).map(|c| jac[r * cols + c] * hjt[c * n + s]).sum();
                }
            }
            let jhg: Vec<f64> = (0..n).map(|r| dot(&jac[r * cols..(r + 1) * cols], &hg)).collect();
            let mu = linalg::spd_solve(&jhj, n, &jhg).unwrap_or_else(|| vec![0.0; n]);
            let mut step: Vec<f64> = hg.iter().map(|x| -x).collect();
            for c in 0..cols {
                step[c] += (0..n).map(|r| hjt[c * n + r] * mu[r]).sum::<f64>();
            }
            let slope = dot(&g, &step);
            if slope >= 0.0 {
                // Model lost positive definiteness along the tangent space.
                for i in 0..cols {
                    for k in 0..cols {
                        h[i * cols + k] = if i == k { m as f64 } else { 0.0 };
                    }
                }
                continue;
            }
            let mut a = 1.0;
            let accepted = loop {
                let trial: Vec<f64> = w.iter().zip(&step).map(|(x, s)| x + a * s).collect();
                if let Some((wn, jn)) = self.restore(trial, m, &mut wk) {
                    let en = energy(&wn);
                    if en <= e + 1e-4 * a * slope {
                        break Some((wn, jn, en));
                    }
                }
                a *= 0.5;
                if a < 1e-8 {
                    break None;
                }
            };
            let Some((wn, jn, en)) = accepted else { break };
            // BFGS pair from Lagrangian gradients sharing the new multipliers.
            let gn: Vec<f64> = wn.iter().map(|x| tau * x).collect();
            let jg: Vec<f64> = (0..n).map(|r| dot(&jn[r * cols..(r + 1) * cols], &gn)).collect();
            let lam = linalg::spd_solve(&Self::gram(&jn, n, cols), n, &jg).unwrap_or_else(|| vec![0.0; n]);
            let gl_new = Self::minus_jt(&gn, &jn, &lam, n, cols);
            let gl_old = Self::minus_jt(&g, &jac, &lam, n, cols);
            let s: Vec<f64> = wn.iter().zip(&w).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gl_new.iter().zip(&gl_old).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) {
                bfgs_update(&mut h, &s, &y, sy, cols);
            }
            let done = (e - en).abs() <= 1e-15 * e.max(1e-300);
            w = wn;
            jac = jn;
            e = en;
            if done {
                break;
            }
        }
        let d = self.d();
        Some(Local {
            m,
            controls: (0..m).map(|j| self.control(&w[j * d..(j + 1) * d])).collect(),
            length: self.length(&w, m),
        })
    }

    /// Random start: Gaussian weights scaled to the target size.
    pub(crate) fn random_start<R: Rng>(&self, m: usize, scale: f64, rng: &mut R) -> Vec<f64> {
        (0..m * self.d()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

fn matvec(a: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = matvec(h, y, n);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        for k in 0..n {
            h[i * n + k] += coef * s[i] * s[k] - rho * (hy[i] * s[k] + s[i] * hy[k]);
        }
    }
}
