//! Group arithmetic in exponential coordinates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraVector, GradedAlgebra};
use crate::bch::BchTable;
use crate::error::Result;

/// Element `e^v` of the simply connected group, stored by its exponential
/// coordinates `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement {
    pub coords: AlgebraVector,
}

impl GroupElement {
    pub fn new(coords: impl Into<AlgebraVector>) -> Self {
        Self { coords: coords.into() }
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Coefficients of `ad/(1 − e^{−ad})`: `B⁺_k / k!`.
pub(crate) const RIGHT_DLOG: [f64; 7] = [1.0, 0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0, 0.0, 1.0 / 30240.0];

/// A graded nilpotent Lie group together with its BCH plan.
#[derive(Debug, Clone)]
pub struct Group {
    algebra: Arc<GradedAlgebra>,
    table: Arc<BchTable>,
    degree: usize,
}

impl Group {
    /// Verifies the algebra and builds its BCH table.
    pub fn new(algebra: GradedAlgebra) -> Result<Self> {
        let algebra = algebra.verified()?;
        let degree = algebra.nilpotency_degree()?;
        let table = BchTable::for_algebra(&algebra)?;
        Ok(Self { algebra: Arc::new(algebra), table: Arc::new(table), degree })
    }

    /// Built-in group by name, see [`GradedAlgebra::builtin`].
    pub fn builtin(name: &str) -> Result<Self> {
        Self::new(GradedAlgebra::builtin(name)?)
    }

    pub fn heisenberg() -> Self {
        Self::new(GradedAlgebra::heisenberg()).expect("catalog group")
    }

    pub fn engel() -> Self {
        Self::new(GradedAlgebra::engel()).expect("catalog group")
    }

    pub fn abelian(n: usize) -> Self {
        Self::new(GradedAlgebra::abelian(n)).expect("catalog group")
    }

    pub fn algebra(&self) -> &GradedAlgebra {
        &self.algebra
    }

    pub fn table(&self) -> &BchTable {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Nilpotency degree of the algebra (bracket depth at which the BCH
    /// series is truncated).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::new(AlgebraVector::zeros(self.dim()))
    }

    /// `e^v` for exponential coordinates given as a plain vector.
    pub fn element(&self, coords: Vec<f64>) -> Result<GroupElement> {
        let v = AlgebraVector::from(coords);
        self.algebra.check_dim(&v)?;
        Ok(GroupElement::new(v))
    }

    pub fn exp(&self, v: &AlgebraVector) -> Result<GroupElement> {
        self.algebra.check_dim(v)?;
        Ok(GroupElement::new(v.clone()))
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        self.algebra.check_dim(&x.coords)
    }

    pub(crate) fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.table.scratch_len(self.dim())]
    }

    /// Raw product on coordinate slices.
    pub(crate) fn mul_into(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.table.product_into(&self.algebra, x, y, out, scratch);
    }

    pub(crate) fn mul_vec(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let mut scratch = self.scratch();
        self.mul_into(x, y, &mut out, &mut scratch);
        out
    }

    /// Group product `e^x e^y = e^{x ⊛ y}`.
    pub fn bch(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(GroupElement::new(self.mul_vec(x.as_slice(), y.as_slice())))
    }

    /// Graded pieces `C_i(x, y)` of the product, one vector per layer.
    pub fn bch_components(&self, x: &GroupElement, y: &GroupElement) -> Result<Vec<AlgebraVector>> {
        let p = self.bch(x, y)?;
        Ok((1..=self.algebra.step()).map(|i| self.algebra.project(&p.coords, i)).collect())
    }

    /// `(e^v)^{-1} = e^{-v}`.
    pub fn inverse(&self, x: &GroupElement) -> GroupElement {
        GroupElement::new(-&x.coords)
    }

    /// Dilation `h_t`: layer `i` scales by `tⁱ`.
    ///
    /// Negative `t` follows the convention `h_{−|t|} g = h_{|t|} g⁻¹`, which is
    /// not the usual one in the literature. For horizontal `g` both readings
    /// agree.
    pub fn dilate(&self, t: f64, x: &GroupElement) -> GroupElement {
        if t >= 0.0 {
            GroupElement::new(self.algebra.dilate_coords(t, x.as_slice()))
        } else {
            let inv = self.inverse(x);
            GroupElement::new(self.algebra.dilate_coords(-t, inv.as_slice()))
        }
    }

    /// `g⁻¹ x g`.
    pub fn conjugate(&self, g: &GroupElement, x: &GroupElement) -> Result<GroupElement> {
        let left = self.bch(&self.inverse(g), x)?;
        self.bch(&left, g)
    }

    /// `x⁻¹ y`, the displacement seen from `x`.
    pub fn difference(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.bch(&self.inverse(x), y)
    }

    /// `out = Σ_k coeffs[k] ad_a^k v`, truncated at the nilpotency degree.
    pub(crate) fn ad_series(&self, a: &[f64], coeffs: &[f64], v: &[f64], out: &mut [f64], tmp: &mut [f64], tmp2: &mut [f64]) {
        out.copy_from_slice(v);
        for o in out.iter_mut() {
            *o *= coeffs[0];
        }
        tmp.copy_from_slice(v);
        let terms = self.degree.min(coeffs.len());
        for &c in coeffs.iter().take(terms).skip(1) {
            self.algebra.bracket_into(a, tmp, tmp2);
            tmp.copy_from_slice(tmp2);
            if c != 0.0 {
                crate::linalg::axpy(c, tmp, out);
            }
        }
    }
}

/// Coefficients of `e^{−ad}`: `(−1)^k / k!`.
pub(crate) const EXP_NEG: [f64; 7] = [1.0, -1.0, 0.5, -1.0 / 6.0, 1.0 / 24.0, -1.0 / 120.0, 1.0 / 720.0];
/// Coefficients of `(1 − e^{−ad})/ad`: `(−1)^k / (k+1)!`.
pub(crate) const LEFT_DEXP: [f64; 7] = [1.0, -0.5, 1.0 / 6.0, -1.0 / 24.0, 1.0 / 120.0, -1.0 / 720.0, 1.0 / 5040.0];
