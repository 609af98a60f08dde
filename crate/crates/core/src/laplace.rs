//! Direct evaluation of the non-normalized product `•` as a formal
//! Laplace/Wick expansion — the oracle engine.
//!
//! The integrand f₁(z, z̄+εȳ) f₂(z+εy, z̄) e^{V} is expanded in ε with jet
//! coefficients and integrated termwise against the normalized Gaussian
//! measure; ε^{2k} collects to ħ^k. Vacuum contributions are kept: this is the
//! literal expansion, so 1•1 ≠ 1 and the unit element is nontrivial.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::TruncatedJet;
use crate::kahler::{interaction_potential, JetContext};
use crate::multi_index::MultiIndex;
use crate::scalar::Ring;
use crate::series::{EpsJet, HbarSeries};
use crate::wick::WickTable;

/// Derivative-slot provider: returns ∂^I ∂̄^J f at the base point as a ring
/// element (a plain value, or a jet in jet-scalar mode).
pub trait SlotFn<R: Ring> {
    fn deriv(&self, i: &MultiIndex, j: &MultiIndex) -> R;
}

/// Slots of a function given by its Taylor jet: derivative values.
pub struct ValueSlots<'a, R: Ring>(pub &'a TruncatedJet<R>);

impl<R: Ring> SlotFn<R> for ValueSlots<'_, R> {
    fn deriv(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        self.0.derivative(i, j).value()
    }
}

/// Jet-mode slots: each derivative of `master` is itself returned as a jet.
pub struct MasterJetSlots<'a, B: Ring> {
    master: &'a TruncatedJet<B>,
    n: usize,
    depth: u32,
}

impl<'a, B: Ring> MasterJetSlots<'a, B> {
    pub fn new(master: &'a TruncatedJet<B>, n: usize, depth: u32) -> Self {
        MasterJetSlots { master, n, depth }
    }
}

impl<B: Ring> SlotFn<TruncatedJet<B>> for MasterJetSlots<'_, B> {
    fn deriv(&self, i: &MultiIndex, j: &MultiIndex) -> TruncatedJet<B> {
        self.master.derivative(i, j).with_shape(self.n, self.depth)
    }
}

/// Basis slot δ: the function whose only nonzero derivative is the one at
/// (I₀, J₀), with value 1.
pub struct DeltaSlot {
    pub i: MultiIndex,
    pub j: MultiIndex,
}

impl<R: Ring> SlotFn<R> for DeltaSlot {
    fn deriv(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        if *i == self.i && *j == self.j {
            R::one()
        } else {
            R::zero()
        }
    }
}

/// Constant function 1.
pub struct OneSlot;

impl<R: Ring> SlotFn<R> for OneSlot {
    fn deriv(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        if i.degree() == 0 && j.degree() == 0 {
            R::one()
        } else {
            R::zero()
        }
    }
}

fn jet_budget(k: u32) -> u32 {
    // every ε¹ vertex carries at most 3 fiber slots
    6 * k.max(1)
}

/// f(z, z̄+εȳ): antiholomorphic shift of the first factor.
pub fn shift_antiholomorphic<R: Ring>(
    n: usize,
    f: &dyn SlotFn<R>,
    k: u32,
) -> EpsJet<R> {
    let mut out = EpsJet::zero(2 * k, n, jet_budget(k));
    for j in MultiIndex::up_to_degree(n, 2 * k) {
        let c = f.deriv(&MultiIndex::zero(n), &j);
        if !c.is_zero() {
            let w = R::from_ratio(1, j.factorial() as i64);
            out.add_term(j.degree(), MultiIndex::zero(n), j.clone(), c.mul(&w));
        }
    }
    out
}

/// f(z+εy, z̄): holomorphic shift of the second factor.
pub fn shift_holomorphic<R: Ring>(n: usize, f: &dyn SlotFn<R>, k: u32) -> EpsJet<R> {
    let mut out = EpsJet::zero(2 * k, n, jet_budget(k));
    for i in MultiIndex::up_to_degree(n, 2 * k) {
        let c = f.deriv(&i, &MultiIndex::zero(n));
        if !c.is_zero() {
            let w = R::from_ratio(1, i.factorial() as i64);
            out.add_term(i.degree(), i.clone(), MultiIndex::zero(n), c.mul(&w));
        }
    }
    out
}

/// f(z+εy, z̄+εȳ): full shift, for plain formal integrals.
pub fn shift_full<R: Ring>(n: usize, f: &dyn SlotFn<R>, k: u32) -> EpsJet<R> {
    let mut out = EpsJet::zero(2 * k, n, jet_budget(k));
    for i in MultiIndex::up_to_degree(n, 2 * k) {
        for j in MultiIndex::up_to_degree(n, 2 * k - i.degree()) {
            let c = f.deriv(&i, &j);
            if !c.is_zero() {
                let w = R::from_ratio(1, (i.factorial() * j.factorial()) as i64);
                out.add_term(i.degree() + j.degree(), i.clone(), j.clone(), c.mul(&w));
            }
        }
    }
    out
}

/// Multiply a prefactor by exp(V) and integrate against the normalized
/// Gaussian measure; ε^{2k} rows become the ħ^k coefficients.
pub fn expand_gaussian<R: Ring>(
    ctx: &JetContext<R>,
    prefactor: &EpsJet<R>,
    k: u32,
) -> Result<HbarSeries<R>> {
    ctx.require_order_for(k)?;
    let v = interaction_potential(ctx, 2 * k, jet_budget(k));
    let ev = v.exp_positive_order()?;
    let integrand = prefactor.mul(&ev);
    let mut wick = WickTable::new(ctx.inverse_metric());
    let out = wick.integrate_eps(&integrand);
    out.assert_integer_grading()?;
    Ok(out)
}

/// The non-normalized product (f₁ • f₂)(z) through ħ^k, from derivative slots.
pub fn bullet_slots<R: Ring>(
    ctx: &JetContext<R>,
    f1: &dyn SlotFn<R>,
    f2: &dyn SlotFn<R>,
    k: u32,
) -> Result<HbarSeries<R>> {
    let n = ctx.n();
    let pre = shift_antiholomorphic(n, f1, k).mul(&shift_holomorphic(n, f2, k));
    expand_gaussian(ctx, &pre, k)
}

/// The non-normalized product of two functions given by their jets at the
/// base point.
pub fn bullet_oracle<R: Ring>(
    ctx: &JetContext<R>,
    f1: &TruncatedJet<R>,
    f2: &TruncatedJet<R>,
    k: u32,
) -> Result<HbarSeries<R>> {
    for f in [f1, f2] {
        if let Some(s) = f.shape() {
            if s.cutoff < 2 * k {
                return Err(Error::BudgetExceeded { needed: 2 * k, have: s.cutoff });
            }
        }
    }
    bullet_slots(ctx, &ValueSlots(f1), &ValueSlots(f2), k)
}

/// Plain formal integral ∫ f e^{φ/ħ} dμ_ħ of a single full jet.
pub fn formal_integral<R: Ring>(
    ctx: &JetContext<R>,
    f: &dyn SlotFn<R>,
    k: u32,
) -> Result<HbarSeries<R>> {
    let pre = shift_full(ctx.n(), f, k);
    expand_gaussian(ctx, &pre, k)
}

/// ħ-graded table of bidifferential coefficients C_k[J, I]: the coefficient of
/// ħ^k ∂̄^J f₁ ∂^I f₂ in f₁ • f₂.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSeries<R: Ring> {
    tables: Vec<BTreeMap<(MultiIndex, MultiIndex), R>>,
}

impl<R: Ring> OperatorSeries<R> {
    pub fn order(&self) -> u32 {
        self.tables.len() as u32 - 1
    }

    pub fn coeff(&self, k: u32, j: &MultiIndex, i: &MultiIndex) -> R {
        self.tables
            .get(k as usize)
            .and_then(|t| t.get(&(j.clone(), i.clone())))
            .cloned()
            .unwrap_or_else(R::zero)
    }

    pub fn table(&self, k: u32) -> &BTreeMap<(MultiIndex, MultiIndex), R> {
        &self.tables[k as usize]
    }

    pub fn from_tables(tables: Vec<BTreeMap<(MultiIndex, MultiIndex), R>>) -> Self {
        OperatorSeries { tables }
    }

    /// Apply to a pair of slot providers: Σ_k ħ^k Σ C_k[J,I] ∂̄^J f₁ ∂^I f₂.
    pub fn apply(&self, f1: &dyn SlotFn<R>, f2: &dyn SlotFn<R>) -> HbarSeries<R> {
        let mut out = HbarSeries::zero_to_order(self.order());
        for (k, t) in self.tables.iter().enumerate() {
            let mut acc = R::zero();
            for ((j, i), c) in t {
                let d1 = f1.deriv(&MultiIndex::zero(j.n()), j);
                let d2 = f2.deriv(i, &MultiIndex::zero(i.n()));
                acc = acc.add(&c.mul(&d1).mul(&d2));
            }
            out.set_hbar(k as u32, acc);
        }
        out
    }
}

/// Extract the bidifferential coefficient tables: exp(V) is expanded once and
/// each entry is read off as a weighted Gaussian moment,
/// C_k[J,I] = (1/I!J!) Σ_{(A,B)} [exp V]^{(2k−|I|−|J|)}_{A,B} ⟨y^{A+I} ȳ^{B+J}⟩.
pub fn bullet_operator_oracle<R: Ring>(ctx: &JetContext<R>, k: u32) -> Result<OperatorSeries<R>> {
    ctx.require_order_for(k)?;
    let n = ctx.n();
    let v = interaction_potential(ctx, 2 * k, jet_budget(k));
    let ev = v.exp_positive_order()?;
    let mut wick = WickTable::new(ctx.inverse_metric());
    let mut tables: Vec<BTreeMap<(MultiIndex, MultiIndex), R>> =
        (0..=k).map(|_| BTreeMap::new()).collect();
    for j in MultiIndex::up_to_degree(n, 2 * k) {
        for i in MultiIndex::up_to_degree(n, 2 * k) {
            let norm = R::from_ratio(1, (i.factorial() * j.factorial()) as i64);
            // ε-counting forces |I| + |J| ≤ 2k in a nonzero entry
            for kk in (i.degree() + j.degree()).div_ceil(2)..=k {
                let p = 2 * kk - i.degree() - j.degree();
                let mut acc = R::zero();
                for (a, b, c) in ev.row(p).terms() {
                    let m = wick.moment(&a.add(&i), &b.add(&j));
                    if !m.is_zero() {
                        acc = acc.add(&c.mul(&m));
                    }
                }
                let c = acc.mul(&norm);
                if !c.is_zero() {
                    debug_assert!(j.degree() <= 2 * kk && i.degree() <= 2 * kk);
                    tables[kk as usize].insert((j.clone(), i.clone()), c);
                }
            }
        }
    }
    Ok(OperatorSeries { tables })
}

/// The constant D: full ħ² coefficient of 1 • 1 (all vacuum diagrams of grade
/// two, disconnected pairs included).
pub fn vacuum_d<R: Ring>(ctx: &JetContext<R>) -> Result<R> {
    Ok(bullet_slots(ctx, &OneSlot, &OneSlot, 2)?.hbar_coeff(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kahler::{build_context, PotentialModel};
    use crate::scalar::{ExactScalar as S, Rat};

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(v)
    }

    fn fs_ctx(order: u32) -> JetContext<S> {
        build_context(&PotentialModel::FubiniStudy1D, &[S::zero()], order).unwrap()
    }

    #[test]
    fn flat_wick_ladder() {
        // z̄ • z at point p: p p̄ + ħ, all higher coefficients 0
        let p = S::new(Rat::new(1, 2), Rat::new(1, 3));
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &[p.clone()], 10).unwrap();
        // jets of f1 = z̄ and f2 = z at p
        let mut f1 = TruncatedJet::zero_jet(1, 8);
        f1.add_term(mi(&[0]), mi(&[0]), p.conj());
        f1.add_term(mi(&[0]), mi(&[1]), S::one());
        let mut f2 = TruncatedJet::zero_jet(1, 8);
        f2.add_term(mi(&[0]), mi(&[0]), p.clone());
        f2.add_term(mi(&[1]), mi(&[0]), S::one());
        let b = bullet_oracle(&ctx, &f1, &f2, 4).unwrap();
        assert_eq!(b.hbar_coeff(0), p.mul(&p.conj()));
        assert_eq!(b.hbar_coeff(1), S::one());
        for k in 2..=4 {
            assert_eq!(b.hbar_coeff(k), S::zero());
        }
    }

    #[test]
    fn flat_operator_ladder() {
        // C_k[(k),(k)] = 1/k!, everything else 0
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &[S::zero()], 10).unwrap();
        let ops = bullet_operator_oracle(&ctx, 3).unwrap();
        for k in 0..=3u32 {
            for (key, c) in ops.table(k) {
                assert_eq!(key.0, mi(&[k as u8]), "k={k}");
                assert_eq!(key.1, mi(&[k as u8]));
                assert_eq!(
                    *c,
                    S::from_ratio(1, MultiIndex::from_slice(&[k as u8]).factorial() as i64)
                );
            }
            assert_eq!(ops.table(k).len(), 1);
        }
    }

    #[test]
    fn hbar1_closed_form() {
        // C_1[∅,∅] = A, C_1[(e_j),(e_i)] = h^{ij̄}, nothing else
        let ctx = fs_ctx(8);
        let ops = bullet_operator_oracle(&ctx, 1).unwrap();
        assert_eq!(ops.coeff(1, &mi(&[0]), &mi(&[0])), ctx.a_const());
        assert_eq!(ops.coeff(1, &mi(&[1]), &mi(&[1])), ctx.inverse_metric()[0][0].clone());
        assert_eq!(ops.table(1).len(), 2);
    }

    #[test]
    fn bullet_with_one_gives_a_multiple() {
        // f2 = 1: ħ¹ coefficient is A·f₁(z)
        let ctx = fs_ctx(8);
        let mut f1 = TruncatedJet::zero_jet(1, 4);
        f1.add_term(mi(&[0]), mi(&[0]), S::from_i64(3));
        f1.add_term(mi(&[0]), mi(&[1]), S::from_ratio(1, 2));
        f1.add_term(mi(&[1]), mi(&[1]), S::from_ratio(-2, 5));
        let b = bullet_slots(&ctx, &ValueSlots(&f1), &OneSlot, 2).unwrap();
        assert_eq!(b.hbar_coeff(1), ctx.a_const().mul(&S::from_i64(3)));
        // f1 = f2 = 1 at FS: ħ¹ coefficient = A = −1
        let e = bullet_slots(&ctx, &OneSlot, &OneSlot, 1).unwrap();
        assert_eq!(e.hbar_coeff(1), S::from_i64(-1));
    }

    #[test]
    fn budget_errors() {
        let ctx = fs_ctx(4);
        assert!(matches!(
            bullet_slots(&ctx, &OneSlot, &OneSlot, 2),
            Err(Error::BudgetExceeded { needed: 6, have: 4 })
        ));
        let shallow = TruncatedJet::<S>::zero_jet(1, 1);
        let ctx8 = fs_ctx(8);
        assert!(matches!(
            bullet_oracle(&ctx8, &shallow, &shallow, 2),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn matches_independent_reference_tables_1d() {
        let (ctx, tables) = crate::test_fixtures::load_1d();
        let ops = bullet_operator_oracle(&ctx, 4).unwrap();
        crate::test_fixtures::compare_tables(&ops, &tables);
    }

    #[test]
    fn matches_independent_reference_tables_2d() {
        let (ctx, tables) = crate::test_fixtures::load_2d();
        let ops = bullet_operator_oracle(&ctx, 3).unwrap();
        crate::test_fixtures::compare_tables(&ops, &tables);
    }
}
