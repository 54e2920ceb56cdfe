//! Truncated Baker–Campbell–Hausdorff series.
//!
//! The degree-`d` part of `log(eˣeʸ)` is expanded in the free associative
//! algebra on `{X, Y}` and then mapped back to Lie elements with the Dynkin
//! right-nested bracketing `w₁…w_d ↦ [w₁,[w₂,…,w_d]]/d`. Coefficients are
//! exact rationals; evaluation shares bracket suffixes between words, so a
//! product costs at most one bracket per distinct suffix.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::algebra::GradedAlgebra;
use crate::error::{Error, Result};

/// Highest word length for which the table is generated.
pub const MAX_ORDER: usize = 6;

type Q = Ratio<i64>;

/// A Lie word in `X` (letter 0) and `Y` (letter 1) with its BCH coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct BchTerm {
    pub word: Vec<u8>,
    pub coeff: Q,
}

impl BchTerm {
    /// Human-readable right-nested bracket, e.g. `[X,[X,Y]]`.
    pub fn bracket_string(&self) -> String {
        fn go(w: &[u8]) -> String {
            let l = if w[0] == 0 { "X" } else { "Y" };
            if w.len() == 1 {
                l.to_string()
            } else {
                format!("[{l},{}]", go(&w[1..]))
            }
        }
        go(&self.word)
    }
}

/// Node of the evaluation plan: value = letter if leaf, else `[letter, child]`.
#[derive(Debug, Clone, Copy)]
struct Node {
    letter: u8,
    child: Option<usize>,
}

/// Precomputed BCH evaluation plan for one algebra.
#[derive(Debug, Clone)]
pub struct BchTable {
    order: usize,
    terms: Vec<BchTerm>,
    nodes: Vec<Node>,
    /// (node index, coefficient as float)
    plan: Vec<(usize, f64)>,
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// Coefficient of the associative word `w` in `log(eˣeʸ)`.
fn log_coefficient(w: &[u8]) -> Q {
    let d = w.len();
    // ways[pos][blocks]: sum over decompositions of w[..pos] into `blocks`
    // blocks of the form XᵖYᵠ of Π 1/(p! q!).
    let mut ways = vec![vec![Q::from_integer(0); d + 1]; d + 1];
    ways[0][0] = Q::from_integer(1);
    for start in 0..d {
        for blocks in 0..d {
            let base = ways[start][blocks];
            if base == Q::from_integer(0) {
                continue;
            }
            let mut p = 0;
            let mut q = 0;
            for end in start..d {
                if w[end] == 0 {
                    if q > 0 {
                        break;
                    }
                    p += 1;
                } else {
                    q += 1;
                }
                let weight = Q::new(1, factorial(p) * factorial(q));
                ways[end + 1][blocks + 1] += base * weight;
            }
        }
    }
    let mut total = Q::from_integer(0);
    for n in 1..=d {
        let sign = if n % 2 == 1 { 1 } else { -1 };
        total += ways[d][n] * Q::new(sign, n as i64);
    }
    total
}

impl BchTable {
    /// Generates the series through words of length `order` (≤ [`MAX_ORDER`]).
    pub fn generate(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Input(format!("BCH order {order} outside supported range 1..={MAX_ORDER}")));
        }
        let mut terms = Vec::new();
        for d in 1..=order {
            for bits in 0..(1u32 << d) {
                let word: Vec<u8> = (0..d).map(|k| ((bits >> (d - 1 - k)) & 1) as u8).collect();
                if d >= 2 && word[d - 1] == word[d - 2] {
                    continue;
                }
                let c = log_coefficient(&word) / Q::from_integer(d as i64);
                if c != Q::from_integer(0) {
                    terms.push(BchTerm { word, coeff: c });
                }
            }
        }
        let mut nodes = Vec::new();
        let mut index: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        let mut plan = Vec::new();
        for term in &terms {
            let w = &term.word;
            let mut child = None;
            for start in (0..w.len()).rev() {
                let suffix = w[start..].to_vec();
                let id = match index.get(&suffix) {
                    Some(&id) => id,
                    None => {
                        nodes.push(Node { letter: w[start], child });
                        index.insert(suffix, nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                child = Some(id);
            }
            plan.push((child.unwrap(), *term.coeff.numer() as f64 / *term.coeff.denom() as f64));
        }
        Ok(Self { order, terms, nodes, plan })
    }

    /// Table for an algebra, truncated at its nilpotency degree.
    pub fn for_algebra(alg: &GradedAlgebra) -> Result<Self> {
        let degree = alg.nilpotency_degree()?;
        if degree > MAX_ORDER {
            return Err(Error::Input(format!(
                "nilpotency degree {degree} exceeds the supported BCH order {MAX_ORDER}"
            )));
        }
        Self::generate(degree.max(1))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[BchTerm] {
        &self.terms
    }

    pub(crate) fn scratch_len(&self, dim: usize) -> usize {
        self.nodes.len() * dim
    }

    /// `out = log(eˣeʸ)`; `scratch` must hold `scratch_len(dim)` values.
    pub(crate) fn product_into(&self, alg: &GradedAlgebra, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let n = alg.dim();
        // Nodes were created children-first, so a forward sweep sees every
        // child before its parent.
        for (id, node) in self.nodes.iter().enumerate() {
            let letter = if node.letter == 0 { x } else { y };
            let (done, rest) = scratch.split_at_mut(id * n);
            let slot = &mut rest[..n];
            match node.child {
                None => slot.copy_from_slice(letter),
                Some(c) => alg.bracket_into(letter, &done[c * n..(c + 1) * n], slot),
            }
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(id, c) in &self.plan {
            crate::linalg::axpy(c, &scratch[id * n..(id + 1) * n], out);
        }
    }
}
