//! Gaussian moments as exact pairing combinatorics.
//!
//! With the reference measure normalized so ⟨1⟩ = 1, the moment of y^I ȳ^J is
//! the sum over bijections between the slots of I and the slots of J, each
//! pairing weighted by an inverse-metric entry h^{ij̄}. Computed by the slot
//! recursion and memoized per table, since the Laplace expansion reuses
//! moments heavily.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::jet::TruncatedJet;
use crate::multi_index::MultiIndex;
use crate::scalar::Ring;
use crate::series::{EpsJet, HbarSeries};

/// Memoizing evaluator for Gaussian moments over a fixed inverse metric.
pub struct WickTable<'a, R: Ring> {
    u: &'a [Vec<R>],
    memo: BTreeMap<(MultiIndex, MultiIndex), R>,
}

impl<'a, R: Ring> WickTable<'a, R> {
    /// `u[i][j]` must be h^{ij̄}.
    pub fn new(u: &'a [Vec<R>]) -> Self {
        WickTable { u, memo: BTreeMap::new() }
    }

    /// ⟨y^I ȳ^J⟩: zero unless |I| = |J|; otherwise the bijection sum
    /// Σ_σ Π_k h^{i_k j̄_{σ(k)}}.
    pub fn moment(&mut self, i: &MultiIndex, j: &MultiIndex) -> R {
        if i.degree() != j.degree() {
            return R::zero();
        }
        if i.degree() == 0 {
            return R::one();
        }
        let key = (i.clone(), j.clone());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        // pair the first remaining I-slot with each J-slot
        let iv = i.first_support().expect("nonzero degree");
        let n = i.n();
        let ri = i.checked_sub(&MultiIndex::unit(n, iv)).unwrap();
        let mut acc = R::zero();
        for jv in 0..n {
            let mult = j.get(jv);
            if mult == 0 {
                continue;
            }
            let rj = j.checked_sub(&MultiIndex::unit(n, jv)).unwrap();
            let sub = self.moment(&ri, &rj);
            let w = self.u[iv][jv].scale_ratio(mult as i64, 1);
            acc = acc.add(&w.mul(&sub));
        }
        self.memo.insert(key, acc.clone());
        acc
    }

    /// Linear extension over the monomials of a jet.
    pub fn integrate_jet(&mut self, poly: &TruncatedJet<R>) -> R {
        let mut acc = R::zero();
        for (i, j, c) in poly.terms() {
            if i.degree() != j.degree() {
                continue;
            }
            let m = self.moment(i, j);
            acc = acc.add(&c.mul(&m));
        }
        acc
    }

    /// Integrate an ε-graded jet row by row into an ε series.
    pub fn integrate_eps(&mut self, f: &EpsJet<R>) -> HbarSeries<R> {
        let mut out = HbarSeries::zero_eps(f.eps_cutoff());
        for p in 0..=f.eps_cutoff() {
            let v = self.integrate_jet(f.row(p));
            out.set_eps(p, v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactScalar as S;
    use alloc::vec;

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(v)
    }

    #[test]
    fn empty_and_unbalanced() {
        let u = vec![vec![S::one()]];
        let mut w = WickTable::new(&u);
        assert_eq!(w.moment(&mi(&[0]), &mi(&[0])), S::one());
        assert_eq!(w.moment(&mi(&[1]), &mi(&[0])), S::zero());
        assert_eq!(w.moment(&mi(&[2]), &mi(&[1])), S::zero());
    }

    #[test]
    fn two_slot_pairings() {
        // n=1: ⟨y²ȳ²⟩ = 2 (h^{11̄})²
        let u = vec![vec![S::from_ratio(1, 3)]];
        let mut w = WickTable::new(&u);
        assert_eq!(w.moment(&mi(&[2]), &mi(&[2])), S::from_ratio(2, 9));
        // n=2, I=J=(1,1): h^{11̄}h^{22̄} + h^{12̄}h^{21̄}
        let u2 = vec![
            vec![S::from_i64(2), S::from_i64(3)],
            vec![S::from_i64(5), S::from_i64(7)],
        ];
        let mut w2 = WickTable::new(&u2);
        assert_eq!(w2.moment(&mi(&[1, 1]), &mi(&[1, 1])), S::from_i64(2 * 7 + 3 * 5));
    }

    /// Independent oracle: literally expand e^{Σ h^{ij̄} z_i z̄_j} as a jet and
    /// differentiate.
    fn brute_moment(u: &[Vec<S>], i: &MultiIndex, j: &MultiIndex) -> S {
        let n = u.len();
        let d = i.degree().max(j.degree());
        let mut quad = TruncatedJet::zero_jet(n, 2 * d);
        for a in 0..n {
            for b in 0..n {
                quad.add_term(MultiIndex::unit(n, a), MultiIndex::unit(n, b), u[a][b].clone());
            }
        }
        let e = quad.exp_nilpotent().unwrap();
        e.derivative(i, j).value()
    }

    #[test]
    fn agrees_with_differentiation_oracle() {
        let tables = [
            vec![vec![S::from_ratio(2, 3)]],
            vec![
                vec![S::from_i64(1), S::new(crate::scalar::Rat::new(1, 2), crate::scalar::Rat::new(1, 3))],
                vec![S::new(crate::scalar::Rat::new(1, 2), crate::scalar::Rat::new(-1, 3)), S::from_i64(2)],
            ],
            vec![
                vec![S::from_i64(1), S::from_ratio(1, 2), S::from_ratio(-1, 3)],
                vec![S::from_ratio(1, 2), S::from_i64(3), S::from_ratio(2, 5)],
                vec![S::from_ratio(-1, 3), S::from_ratio(2, 5), S::from_i64(1)],
            ],
        ];
        for u in &tables {
            let n = u.len();
            let mut w = WickTable::new(u);
            for i in MultiIndex::up_to_degree(n, 5) {
                for j in MultiIndex::up_to_degree(n, 5) {
                    if i.degree() == j.degree() {
                        assert_eq!(w.moment(&i, &j), brute_moment(u, &i, &j), "I={i:?} J={j:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hermitian_conjugation() {
        let u = vec![
            vec![S::from_i64(1), S::new(crate::scalar::Rat::new(1, 4), crate::scalar::Rat::new(2, 3))],
            vec![S::new(crate::scalar::Rat::new(1, 4), crate::scalar::Rat::new(-2, 3)), S::from_i64(2)],
        ];
        let mut w = WickTable::new(&u);
        for i in MultiIndex::up_to_degree(2, 4) {
            for j in MultiIndex::up_to_degree(2, 4) {
                if i.degree() == j.degree() {
                    let a = w.moment(&i, &j);
                    let b = w.moment(&j, &i);
                    assert_eq!(a, b.conj());
                }
            }
        }
    }

    #[test]
    fn diagonal_factorial_law() {
        // diagonal metric: ⟨y^I ȳ^I⟩ = I! Π (h^{ii̅})^{I_i}
        let u = vec![
            vec![S::from_ratio(1, 2), S::zero()],
            vec![S::zero(), S::from_i64(3)],
        ];
        let mut w = WickTable::new(&u);
        for i in MultiIndex::up_to_degree(2, 4) {
            let mut expect = S::from_i64(i.factorial() as i64);
            for (v, &c) in i.components().iter().enumerate() {
                for _ in 0..c {
                    expect = expect.mul(&u[v][v]);
                }
            }
            assert_eq!(w.moment(&i, &i), expect);
        }
    }

    #[test]
    fn odd_moments_vanish_under_integration() {
        let u = vec![vec![S::one()]];
        let mut w = WickTable::new(&u);
        let mut jet = TruncatedJet::zero_jet(1, 3);
        jet.add_term(mi(&[1]), mi(&[0]), S::from_i64(5));
        assert_eq!(w.integrate_jet(&jet), S::zero());
        jet.add_term(mi(&[1]), mi(&[1]), S::from_i64(2));
        assert_eq!(w.integrate_jet(&jet), S::from_i64(2));
        assert_eq!(w.integrate_jet(&TruncatedJet::constant(S::one())), S::one());
    }
}
