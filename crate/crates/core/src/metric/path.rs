use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraVector;
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement};
use crate::linalg;

/// Inner product on the horizontal layer `V¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricRepr")]
pub struct HorizontalMetric {
    dim: usize,
    gram: Vec<f64>,
    /// Lower Cholesky factor `L`, `G = L Lᵀ`.
    #[serde(skip_serializing)]
    chol: Vec<f64>,
}

#[derive(Deserialize)]
struct MetricRepr {
    dim: usize,
    gram: Vec<f64>,
}

impl TryFrom<MetricRepr> for HorizontalMetric {
    type Error = Error;
    fn try_from(r: MetricRepr) -> Result<Self> {
        Self::new(r.gram, r.dim)
    }
}

impl HorizontalMetric {
    /// Gram matrix (row-major, `dim × dim`); must be symmetric to 1e-12 and
    /// positive definite.
    pub fn new(gram: Vec<f64>, dim: usize) -> Result<Self> {
        if gram.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: gram.len() });
        }
        for i in 0..dim {
            for j in 0..i {
                if (gram[i * dim + j] - gram[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::Input(format!("gram matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut chol = gram.clone();
        if !linalg::cholesky(&mut chol, dim) {
            return Err(Error::Input("gram matrix is not positive definite".into()));
        }
        Ok(Self { dim, gram, chol })
    }

    pub fn euclidean(dim: usize) -> Self {
        let mut g = vec![0.0; dim * dim];
        for i in 0..dim {
            g[i * dim + i] = 1.0;
        }
        Self::new(g, dim).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// `⟨a, b⟩` on the first `dim` coordinates of `a` and `b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim;
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += a[i] * self.gram[i * d + j] * b[j];
            }
        }
        s
    }

    /// `|π₁ v|` for a full algebra vector (or a bare layer-1 slice).
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Coordinates of a layer-1 vector in a `G`-orthonormal frame (`Lᵀ u`).
    pub(crate) fn to_frame(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|k| (k..d).map(|i| self.chol[i * d + k] * u[i]).sum()).collect()
    }

    /// `G`-orthonormal frame of `V¹`: the columns of `L⁻ᵀ`, each padded to the
    /// full algebra dimension `n`.
    pub(crate) fn orthonormal_frame(&self, n: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        (0..d)
            .map(|k| {
                // Solve Lᵀ f = e_k.
                let mut f = vec![0.0; d];
                for i in (0..d).rev() {
                    let mut s = if i == k { 1.0 } else { 0.0 };
                    for j in (i + 1)..d {
                        s -= self.chol[j * d + i] * f[j];
                    }
                    f[i] = s / self.chol[i * d + i];
                }
                f.resize(n, 0.0);
                f
            })
            .collect()
    }

    /// `det L = √det G`, the volume factor of the orthonormal frame.
    pub(crate) fn sqrt_det(&self) -> f64 {
        (0..self.dim).map(|i| self.chol[i * self.dim + i]).product()
    }
}

/// One piece of a piecewise-constant control: flow for `duration` along the
/// left-invariant field with value `control` at the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub control: AlgebraVector,
}

impl Segment {
    pub fn new(duration: f64, control: impl Into<AlgebraVector>) -> Self {
        Self { duration, control: control.into() }
    }

    /// The group increment `exp(duration · control)`, as coordinates.
    pub fn increment(&self) -> Vec<f64> {
        self.control.as_slice().iter().map(|c| c * self.duration).collect()
    }
}

/// Horizontal path given by piecewise-constant left-invariant controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPath {
    pub basepoint: GroupElement,
    pub segments: Vec<Segment>,
}

impl ControlPath {
    pub fn new(basepoint: GroupElement, segments: Vec<Segment>) -> Self {
        Self { basepoint, segments }
    }

    pub fn empty(basepoint: GroupElement) -> Self {
        Self { basepoint, segments: Vec::new() }
    }

    /// `basepoint · Π exp(duration_j · control_j)`, multiplied left to right.
    pub fn endpoint(&self, group: &Group) -> Result<GroupElement> {
        let n = group.dim();
        group.algebra().check_dim(&self.basepoint.coords)?;
        let mut acc = self.basepoint.as_slice().to_vec();
        let mut out = vec![0.0; n];
        let mut scratch = group.scratch();
        for seg in &self.segments {
            group.algebra().check_dim(&seg.control)?;
            let inc = seg.increment();
            group.mul_into(&acc, &inc, &mut out, &mut scratch);
            std::mem::swap(&mut acc, &mut out);
        }
        Ok(GroupElement::new(acc))
    }

    /// Length `Σ duration·|control|` in the horizontal metric. Fails if any
    /// control leaves layer 1.
    pub fn length(&self, group: &Group, metric: &HorizontalMetric) -> Result<f64> {
        let alg = group.algebra();
        let mut total = 0.0;
        for seg in &self.segments {
            if !alg.is_horizontal(&seg.control) {
                let layer = (alg.horizontal_dim()..alg.dim())
                    .find(|&i| seg.control[i] != 0.0)
                    .map(|i| alg.weight(i))
                    .unwrap_or(2);
                return Err(Error::NotHorizontal { layer, norm: alg.project(&seg.control, layer).norm() });
            }
            total += seg.duration.abs() * metric.norm(seg.control.as_slice());
        }
        Ok(total)
    }

    /// Same curve traversed backwards, starting from `end`.
    pub fn reversed(&self, end: GroupElement) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment { duration: s.duration, control: -&s.control })
            .collect();
        Self { basepoint: end, segments }
    }

    /// Appends `other`'s segments (its basepoint is assumed to be our endpoint).
    pub fn concat(&self, other: &ControlPath) -> Self {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self { basepoint: self.basepoint.clone(), segments }
    }

    /// Left translate by `g`: same controls, basepoint `g · basepoint`.
    pub fn translated(&self, group: &Group, g: &GroupElement) -> Result<Self> {
        Ok(Self { basepoint: group.bch(g, &self.basepoint)?, segments: self.segments.clone() })
    }

    /// Reparametrises to constant speed over unit total time, keeping the
    /// endpoint and length. Zero-speed segments are dropped.
    pub fn constant_speed(&self, metric: &HorizontalMetric) -> Self {
        let lens: Vec<f64> = self.segments.iter().map(|s| s.duration.abs() * metric.norm(s.control.as_slice())).collect();
        let total: f64 = lens.iter().sum();
        if total == 0.0 {
            return Self::empty(self.basepoint.clone());
        }
        let segments = self
            .segments
            .iter()
            .zip(&lens)
            .filter(|(_, &l)| l > 0.0)
            .map(|(s, &l)| {
                let duration = l / total;
                Segment { duration, control: s.control.scaled(s.duration / duration) }
            })
            .collect();
        Self { basepoint: self.basepoint.clone(), segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Points after each segment, starting with the basepoint.
    pub fn vertices(&self, group: &Group) -> Result<Vec<GroupElement>> {
        let mut pts = vec![self.basepoint.clone()];
        let mut acc = self.basepoint.as_slice().to_vec();
        for seg in &self.segments {
            acc = group.mul_vec(&acc, &seg.increment());
            pts.push(GroupElement::new(acc.clone()));
        }
        Ok(pts)
    }
}
