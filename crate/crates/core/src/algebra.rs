//! Graded nilpotent Lie algebras given by structure constants.
//!
//! An algebra `𝔫 = V¹ ⊕ … ⊕ Vᵏ` is stored in a fixed basis `e_0 … e_{n-1}`
//! where each layer occupies a contiguous index range in declared order.
//! Layers are numbered from 1, matching their dilation weight: the layer-`i`
//! component of a vector scales by `tⁱ` under the dilation `h_t`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::EchelonBasis;

/// Tolerance for rank and zero decisions in subspace computations.
pub const RANK_TOL: f64 = 1e-10;
/// Tolerance for the Jacobi identity on basis triples.
pub const JACOBI_TOL: f64 = 1e-12;

/// Coefficient vector in the declared basis. Also used as the exponential
/// coordinates of a group element.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraVector {
    coeffs: Vec<f64>,
}

impl AlgebraVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { coeffs: vec![0.0; dim] }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coeffs[index] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

impl fmt::Debug for AlgebraVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.coeffs).finish()
    }
}

impl From<Vec<f64>> for AlgebraVector {
    fn from(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }
}

impl From<&[f64]> for AlgebraVector {
    fn from(coeffs: &[f64]) -> Self {
        Self { coeffs: coeffs.to_vec() }
    }
}

impl Index<usize> for AlgebraVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coeffs[i]
    }
}

impl IndexMut<usize> for AlgebraVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.coeffs[i]
    }
}

impl Add for &AlgebraVector {
    type Output = AlgebraVector;
    fn add(self, rhs: &AlgebraVector) -> AlgebraVector {
        AlgebraVector { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &AlgebraVector {
    type Output = AlgebraVector;
    fn sub(self, rhs: &AlgebraVector) -> AlgebraVector {
        AlgebraVector { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &AlgebraVector {
    type Output = AlgebraVector;
    fn neg(self) -> AlgebraVector {
        self.scaled(-1.0)
    }
}

/// A nonzero structure constant `c[i][j][l]`, i.e. `[e_i, e_j]` has `c` on `e_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StructureEntry {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub c: f64,
}

/// Graded nilpotent Lie algebra `𝔫 = ⊕ Vⁱ` defined by a dense structure tensor.
#[derive(Clone)]
pub struct GradedAlgebra {
    name: String,
    dim: usize,
    layer_dims: Vec<usize>,
    offsets: Vec<usize>,
    weight: Vec<usize>,
    labels: Vec<String>,
    structure: Vec<f64>,
    entries: Vec<StructureEntry>,
}

impl fmt::Debug for GradedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedAlgebra")
            .field("name", &self.name)
            .field("layer_dims", &self.layer_dims)
            .field("nonzero_constants", &self.entries.len())
            .finish()
    }
}

impl GradedAlgebra {
    /// Builds an algebra from a dense tensor laid out as `c[(i*n + j)*n + l]`.
    ///
    /// Only shapes are checked here; use [`GradedAlgebra::verify_graded`] for
    /// the algebraic invariants.
    pub fn new(name: impl Into<String>, layer_dims: Vec<usize>, structure: Vec<f64>) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidAlgebra("layer dimensions must be positive".into()));
        }
        let dim: usize = layer_dims.iter().sum();
        if structure.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, got: structure.len() });
        }
        if structure.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidAlgebra("structure constants must be finite".into()));
        }
        let mut offsets = Vec::with_capacity(layer_dims.len() + 1);
        let mut weight = Vec::with_capacity(dim);
        let mut acc = 0;
        for (layer, &d) in layer_dims.iter().enumerate() {
            offsets.push(acc);
            weight.extend(std::iter::repeat(layer + 1).take(d));
            acc += d;
        }
        offsets.push(acc);
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    let c = structure[(i * dim + j) * dim + l];
                    if c != 0.0 {
                        entries.push(StructureEntry { i, j, l, c });
                    }
                }
            }
        }
        let labels = (0..dim).map(|i| format!("e{}", i + 1)).collect();
        Ok(Self { name: name.into(), dim, layer_dims, offsets, weight, labels, structure, entries })
    }

    /// Builds an algebra from bracket relations `[e_i, e_j] = Σ coeffs`,
    /// filling in `[e_j, e_i]` by antisymmetry.
    pub fn from_brackets(
        name: impl Into<String>,
        layer_dims: Vec<usize>,
        brackets: &[(usize, usize, Vec<(usize, f64)>)],
    ) -> Result<Self> {
        let dim: usize = layer_dims.iter().sum();
        let mut c = vec![0.0; dim * dim * dim];
        let mut seen = vec![false; dim * dim];
        for (i, j, coeffs) in brackets {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim {
                return Err(Error::Definition(format!("bracket index ({i}, {j}) out of range for dimension {dim}")));
            }
            if i == j {
                if coeffs.iter().any(|(_, v)| *v != 0.0) {
                    return Err(Error::Definition(format!("[e{i}, e{i}] must vanish")));
                }
                continue;
            }
            if seen[i * dim + j] || seen[j * dim + i] {
                return Err(Error::Definition(format!("bracket ({i}, {j}) given more than once")));
            }
            seen[i * dim + j] = true;
            for &(l, v) in coeffs {
                if l >= dim {
                    return Err(Error::Definition(format!("coefficient index {l} out of range for dimension {dim}")));
                }
                c[(i * dim + j) * dim + l] += v;
                c[(j * dim + i) * dim + l] -= v;
            }
        }
        Self::new(name, layer_dims, c)
    }

    /// Replaces the basis labels (used by the CLI to name directions).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    // ---- catalog -------------------------------------------------------

    /// Three-dimensional Heisenberg algebra: `[X, Y] = Z`.
    pub fn heisenberg() -> Self {
        Self::from_brackets("heisenberg", vec![2, 1], &[(0, 1, vec![(2, 1.0)])])
            .and_then(|a| a.with_labels(vec!["X".into(), "Y".into(), "Z".into()]))
            .expect("catalog algebra")
    }

    /// Four-dimensional Engel algebra: `[X1, X2] = X3`, `[X1, X3] = X4`.
    pub fn engel() -> Self {
        Self::from_brackets("engel", vec![2, 1, 1], &[(0, 1, vec![(2, 1.0)]), (0, 2, vec![(3, 1.0)])])
            .and_then(|a| a.with_labels((1..=4).map(|i| format!("X{i}")).collect()))
            .expect("catalog algebra")
    }

    /// Abelian algebra `ℝⁿ` (a single layer, all brackets zero).
    pub fn abelian(n: usize) -> Self {
        Self::new(format!("abelian{n}"), vec![n], vec![0.0; n * n * n]).expect("catalog algebra")
    }

    /// Free step-2 nilpotent algebra on `rank ≥ 2` generators:
    /// `[X_a, X_b] = X_ab` for `a < b`.
    pub fn free_step2(rank: usize) -> Result<Self> {
        if rank < 2 {
            return Err(Error::Input("free step-2 algebra needs rank ≥ 2".into()));
        }
        let mut brackets = Vec::new();
        let mut labels: Vec<String> = (1..=rank).map(|a| format!("X{a}")).collect();
        let mut next = rank;
        for a in 0..rank {
            for b in (a + 1)..rank {
                brackets.push((a, b, vec![(next, 1.0)]));
                labels.push(format!("X{}{}", a + 1, b + 1));
                next += 1;
            }
        }
        Self::from_brackets(format!("free2-{rank}"), vec![rank, next - rank], &brackets)?.with_labels(labels)
    }

    /// Looks up a built-in algebra: `heisenberg`, `engel`, `abelianN`,
    /// `free2-R`.
    pub fn builtin(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "heisenberg" | "h3" => return Ok(Self::heisenberg()),
            "engel" => return Ok(Self::engel()),
            _ => {}
        }
        if let Some(n) = lower.strip_prefix("abelian") {
            let n: usize = n.trim_start_matches(['-', ':']).parse().map_err(|_| Error::Input(format!("unknown group '{name}'")))?;
            if n == 0 {
                return Err(Error::Input("abelian dimension must be positive".into()));
            }
            return Ok(Self::abelian(n));
        }
        if let Some(r) = lower.strip_prefix("free2-") {
            let r: usize = r.parse().map_err(|_| Error::Input(format!("unknown group '{name}'")))?;
            return Self::free_step2(r);
        }
        Err(Error::Input(format!("unknown group '{name}'")))
    }

    /// Names accepted by [`GradedAlgebra::builtin`], for help text.
    pub const BUILTIN_NAMES: &'static [&'static str] = &["heisenberg", "engel", "abelianN", "free2-R"];

    // ---- accessors -----------------------------------------------------

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of layers `k`.
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Index range of layer `layer` (1-based).
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        self.offsets[layer - 1]..self.offsets[layer]
    }

    /// Layer (weight) of basis index `i`, 1-based.
    pub fn weight(&self, i: usize) -> usize {
        self.weight[i]
    }

    pub fn weights(&self) -> &[usize] {
        &self.weight
    }

    /// Dimension of the horizontal layer `V¹`.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Structure constant `c[i][j][l]`.
    pub fn constant(&self, i: usize, j: usize, l: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + l]
    }

    /// Largest absolute structure constant.
    pub fn tensor_magnitude(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.c.abs()))
    }

    pub fn check_dim(&self, v: &AlgebraVector) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    // ---- arithmetic ----------------------------------------------------

    /// Lie bracket `[x, y]`.
    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let mut out = vec![0.0; self.dim];
        self.bracket_into(x.as_slice(), y.as_slice(), &mut out);
        Ok(out.into())
    }

    /// Unchecked bracket on raw slices; `out` is overwritten.
    pub(crate) fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for e in &self.entries {
            let xi = x[e.i];
            if xi != 0.0 {
                out[e.l] += e.c * xi * y[e.j];
            }
        }
    }

    pub(crate) fn bracket_vec(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.bracket_into(x, y, &mut out);
        out
    }

    /// Matrix of `ad_x` (row-major), so that `(ad_x y)_l = Σ_j M[l][j] y_j`.
    pub fn ad_matrix(&self, x: &AlgebraVector) -> Vec<f64> {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        for e in &self.entries {
            m[e.l * n + e.j] += x[e.i] * e.c;
        }
        m
    }

    /// Layer projection `π_layer(x)`: keeps the coordinates of one layer.
    pub fn project(&self, x: &AlgebraVector, layer: usize) -> AlgebraVector {
        let mut out = AlgebraVector::zeros(self.dim);
        for i in self.layer_range(layer) {
            out[i] = x[i];
        }
        out
    }

    /// True when `x` has no components outside layer 1.
    pub fn is_horizontal(&self, x: &AlgebraVector) -> bool {
        x.as_slice()[self.horizontal_dim()..].iter().all(|&c| c == 0.0)
    }

    /// Applies `x ↦ Σ tⁱ x_i` (the differential of the dilation).
    pub fn dilate_coords(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut powers = vec![1.0; self.step() + 1];
        for i in 1..=self.step() {
            powers[i] = powers[i - 1] * t;
        }
        x.iter().zip(&self.weight).map(|(c, &w)| c * powers[w]).collect()
    }

    // ---- structure -----------------------------------------------------

    /// Bases of the descending central sequence `C⁰ ⊇ C¹ ⊇ …`, ending with
    /// the zero subspace (an empty basis).
    pub fn descending_central_sequence(&self) -> Result<Vec<Vec<AlgebraVector>>> {
        let n = self.dim;
        let mut current: Vec<Vec<f64>> = (0..n).map(|i| AlgebraVector::basis(n, i).into_vec()).collect();
        let mut seq = vec![current.iter().cloned().map(AlgebraVector::from).collect::<Vec<_>>()];
        for _ in 0..=n {
            let mut next = EchelonBasis::new(n, RANK_TOL);
            let mut buf = vec![0.0; n];
            for b in &current {
                for j in 0..n {
                    let e = AlgebraVector::basis(n, j);
                    self.bracket_into(b, e.as_slice(), &mut buf);
                    next.insert(&buf);
                }
            }
            if next.rank() == 0 {
                seq.push(Vec::new());
                return Ok(seq);
            }
            if next.rank() >= current.len() {
                return Err(Error::NotNilpotent { steps: seq.len() });
            }
            current = next.accepted.clone();
            seq.push(current.iter().cloned().map(AlgebraVector::from).collect());
        }
        Err(Error::NotNilpotent { steps: n + 1 })
    }

    /// Smallest `d` with `C^d = 0`.
    pub fn nilpotency_degree(&self) -> Result<usize> {
        Ok(self.descending_central_sequence()?.len() - 1)
    }

    /// Whether layer 1 bracket-generates every layer, `V^{i+1} = [V¹, Vⁱ]`.
    /// Without this, points off the generated subgroup are at infinite
    /// distance.
    pub fn is_bracket_generating(&self) -> bool {
        self.first_ungenerated_layer().is_none()
    }

    pub(crate) fn first_ungenerated_layer(&self) -> Option<usize> {
        let n = self.dim;
        let mut prev: Vec<Vec<f64>> = self.layer_range(1).map(|i| AlgebraVector::basis(n, i).into_vec()).collect();
        for layer in 2..=self.step() {
            let mut span = EchelonBasis::new(n, RANK_TOL);
            let mut buf = vec![0.0; n];
            for a in self.layer_range(1) {
                let e = AlgebraVector::basis(n, a);
                for w in &prev {
                    self.bracket_into(e.as_slice(), w, &mut buf);
                    span.insert(&buf);
                }
            }
            let full = self.layer_range(layer).all(|i| span.contains(AlgebraVector::basis(n, i).as_slice()));
            if !full {
                return Some(layer);
            }
            prev = span.accepted.clone();
        }
        None
    }

    /// Checks antisymmetry, the Jacobi identity, grading closure and
    /// nilpotency. Never fails; problems are listed in the report.
    pub fn verify_graded(&self) -> VerificationReport {
        let n = self.dim;
        let mut violations = Vec::new();

        let mut anti = 0.0_f64;
        let mut anti_at = (0, 0, 0);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let r = (self.constant(i, j, l) + self.constant(j, i, l)).abs();
                    if r > anti {
                        anti = r;
                        anti_at = (i, j, l);
                    }
                }
            }
        }
        if anti > JACOBI_TOL {
            violations.push(Violation {
                kind: InvariantKind::Antisymmetry,
                residual: anti,
                detail: format!("c[{}][{}][{}] + c[{}][{}][{}] ≠ 0", anti_at.0, anti_at.1, anti_at.2, anti_at.1, anti_at.0, anti_at.2),
            });
        }

        let mag = self.tensor_magnitude().max(1.0);
        let mut jac = 0.0_f64;
        let mut jac_at = (0, 0, 0);
        let basis: Vec<Vec<f64>> = (0..n).map(|i| AlgebraVector::basis(n, i).into_vec()).collect();
        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        let mut sum = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    sum.iter_mut().for_each(|s| *s = 0.0);
                    for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                        self.bracket_into(&basis[y], &basis[z], &mut t1);
                        self.bracket_into(&basis[x], &t1, &mut t2);
                        crate::linalg::axpy(1.0, &t2, &mut sum);
                    }
                    let r = sum.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    if r > jac {
                        jac = r;
                        jac_at = (a, b, c);
                    }
                }
            }
        }
        if jac > JACOBI_TOL * mag * mag {
            violations.push(Violation {
                kind: InvariantKind::Jacobi,
                residual: jac,
                detail: format!("basis triple ({}, {}, {})", jac_at.0, jac_at.1, jac_at.2),
            });
        }

        let k = self.step();
        let mut grading = 0.0_f64;
        let mut grading_at = None;
        for e in &self.entries {
            let target = self.weight[e.i] + self.weight[e.j];
            let ok = target <= k && self.weight[e.l] == target;
            if !ok && e.c.abs() > grading {
                grading = e.c.abs();
                grading_at = Some(*e);
            }
        }
        if let Some(e) = grading_at {
            if grading > JACOBI_TOL {
                violations.push(Violation {
                    kind: InvariantKind::GradingClosure,
                    residual: grading,
                    detail: format!(
                        "[e{}, e{}] (layers {} + {}) has a component on e{} in layer {}",
                        e.i, e.j, self.weight[e.i], self.weight[e.j], e.l, self.weight[e.l]
                    ),
                });
            }
        }

        let nilpotency_degree = match self.nilpotency_degree() {
            Ok(d) => Some(d),
            Err(err) => {
                violations.push(Violation { kind: InvariantKind::Nilpotency, residual: 1.0, detail: err.to_string() });
                None
            }
        };

        VerificationReport {
            algebra: self.name.clone(),
            violations,
            nilpotency_degree,
            bracket_generating: self.is_bracket_generating(),
        }
    }

    /// Runs [`GradedAlgebra::verify_graded`] and turns violations into an error.
    pub fn verified(self) -> Result<Self> {
        let report = self.verify_graded();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidAlgebra(report.summary()))
        }
    }

    /// Homogeneous dimension `Q = Σ i·dim Vⁱ`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layer_dims.iter().enumerate().map(|(i, d)| (i + 1) * d).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    Antisymmetry,
    Jacobi,
    GradingClosure,
    Nilpotency,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub kind: InvariantKind,
    /// Worst-case residual magnitude.
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub algebra: String,
    pub violations: Vec<Violation>,
    pub nilpotency_degree: Option<usize>,
    pub bracket_generating: bool,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, kind: InvariantKind) -> Option<&Violation> {
        self.violations.iter().find(|v| v.kind == kind)
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("{:?} (residual {:.3e}): {}", v.kind, v.residual, v.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}
