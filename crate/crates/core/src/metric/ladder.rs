//! Explicit horizontal paths to arbitrary targets built from nested group
//! commutators, one layer at a time.
//!
//! A group commutator `eᵖ e^q e^{−p} e^{−q}` of a layer-`i` path and a
//! layer-`j` path has no components below layer `i+j` and its layer-`(i+j)`
//! component is `[p, q]`. Clearing layers in increasing order therefore
//! reaches any target exactly (up to roundoff) once layer 1 bracket-generates.
//! The paths are far from optimal; they close small endpoint defects and
//! provide a guaranteed-feasible fallback.

use crate::algebra::{AlgebraVector, GradedAlgebra, RANK_TOL};
use crate::error::{Error, Result};
use crate::group::Group;
use crate::linalg::{self, EchelonBasis};

use super::path::Segment;

#[derive(Debug, Clone)]
struct LayerPlan {
    layer: usize,
    /// Words over layer-1 basis indices; value is the right-nested bracket.
    words: Vec<Vec<usize>>,
    /// Row-major `d × d` matrix whose columns are the word values
    /// restricted to this layer.
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Ladder {
    plans: Vec<LayerPlan>,
}

fn nested_value(alg: &GradedAlgebra, word: &[usize]) -> Vec<f64> {
    let n = alg.dim();
    let mut v = AlgebraVector::basis(n, *word.last().unwrap()).into_vec();
    let mut tmp = vec![0.0; n];
    for &a in word[..word.len() - 1].iter().rev() {
        let e = AlgebraVector::basis(n, a).into_vec();
        alg.bracket_into(&e, &v, &mut tmp);
        std::mem::swap(&mut v, &mut tmp);
    }
    v
}

impl Ladder {
    pub(crate) fn new(alg: &GradedAlgebra) -> Result<Self> {
        let d1 = alg.horizontal_dim();
        let mut plans = Vec::new();
        let mut prev_words: Vec<Vec<usize>> = (0..d1).map(|a| vec![a]).collect();
        for layer in 2..=alg.step() {
            let range = alg.layer_range(layer);
            let d = range.len();
            let mut basis = EchelonBasis::new(d, RANK_TOL);
            let mut words = Vec::new();
            let mut next_words = Vec::new();
            'outer: for a in 0..d1 {
                for w in &prev_words {
                    let mut word = vec![a];
                    word.extend_from_slice(w);
                    let v = nested_value(alg, &word);
                    if basis.insert(&v[range.clone()]) {
                        words.push(word.clone());
                        next_words.push(word);
                        if basis.rank() == d {
                            break 'outer;
                        }
                    }
                }
            }
            if basis.rank() < d {
                return Err(Error::Unreachable { layer });
            }
            let mut values = vec![0.0; d * d];
            for (col, w) in words.iter().enumerate() {
                let v = nested_value(alg, w);
                for (row, i) in range.clone().enumerate() {
                    values[row * d + col] = v[i];
                }
            }
            plans.push(LayerPlan { layer, words, values });
            prev_words = next_words;
        }
        Ok(Self { plans })
    }

    /// Segments whose product is exactly `target` (from the identity).
    pub(crate) fn path(&self, group: &Group, target: &[f64]) -> Vec<Segment> {
        let alg = group.algebra();
        let n = alg.dim();
        let mut segments = Vec::new();
        let mut reached = vec![0.0; n];
        let mut remaining = target.to_vec();

        let d1 = alg.horizontal_dim();
        if remaining[..d1].iter().any(|&c| c != 0.0) {
            let mut u = vec![0.0; n];
            u[..d1].copy_from_slice(&remaining[..d1]);
            reached = u.clone();
            segments.push(Segment::new(1.0, u));
            remaining = group.mul_vec(&reached.iter().map(|c| -c).collect::<Vec<_>>(), target);
        }

        for plan in &self.plans {
            let range = alg.layer_range(plan.layer);
            let d = range.len();
            let rhs = &remaining[range.clone()];
            if rhs.iter().all(|&c| c == 0.0) {
                continue;
            }
            let coeffs = linalg::solve(&plan.values, d, rhs).expect("ladder basis is nonsingular");
            for (word, &c) in plan.words.iter().zip(&coeffs) {
                if c == 0.0 {
                    continue;
                }
                let s = c.abs().powf(1.0 / word.len() as f64);
                let piece = commutator_path(word, s, c.signum(), n);
                for seg in &piece {
                    reached = group.mul_vec(&reached, &seg.increment());
                }
                segments.extend(piece);
            }
            remaining = group.mul_vec(&reached.iter().map(|c| -c).collect::<Vec<_>>(), target);
        }
        segments
    }
}

/// Path whose endpoint has lowest-layer component `sign·sⁱ [e_{w₀},[e_{w₁},…]]`.
fn commutator_path(word: &[usize], s: f64, sign: f64, n: usize) -> Vec<Segment> {
    let mut u = vec![0.0; n];
    u[word[0]] = sign;
    let head = vec![Segment::new(s, u)];
    if word.len() == 1 {
        return head;
    }
    let tail = commutator_path(&word[1..], s, 1.0, n);
    let rev = |p: &[Segment]| -> Vec<Segment> {
        p.iter().rev().map(|seg| Segment { duration: seg.duration, control: -&seg.control }).collect()
    };
    let mut out = head.clone();
    out.extend(tail.iter().cloned());
    out.extend(rev(&head));
    out.extend(rev(&tail));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reach(group: &Group, target: &[f64]) -> Vec<f64> {
        let ladder = Ladder::new(group.algebra()).unwrap();
        let mut acc = vec![0.0; group.dim()];
        for seg in ladder.path(group, target) {
            acc = group.mul_vec(&acc, &seg.increment());
        }
        acc
    }

    #[test]
    fn reaches_targets_exactly() {
        let cases: Vec<(Group, Vec<f64>)> = vec![
            (Group::heisenberg(), vec![0.3, -0.2, 1.7]),
            (Group::heisenberg(), vec![0.0, 0.0, -2.0]),
            (Group::engel(), vec![0.1, 0.4, -0.3, 0.9]),
            (Group::new(GradedAlgebra::free_step2(3).unwrap()).unwrap(), vec![1.0, 0.0, -1.0, 0.5, 0.2, -0.7]),
            (Group::abelian(2), vec![1.0, 2.0]),
        ];
        for (g, t) in cases {
            let got = reach(&g, &t);
            let err = got.iter().zip(&t).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12, "{}: {got:?} vs {t:?}", g.algebra().name());
        }
    }

    #[test]
    fn unreachable_layer() {
        let alg = GradedAlgebra::from_brackets("ext", vec![2, 2], &[(0, 1, vec![(2, 1.0)])]).unwrap();
        assert!(matches!(Ladder::new(&alg), Err(Error::Unreachable { layer: 2 })));
    }
}
