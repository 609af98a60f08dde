//! Truncated jets: polynomials in fiber variables (y, ȳ) modulo a total-degree
//! cutoff, over any scalar ring.
//!
//! Jets double as scalars: `TruncatedJet<R>` implements [`Ring`], which is how
//! the engines run in "jet-scalar mode" to obtain derivatives of derived
//! quantities. Constants produced by `Ring::zero`/`one`/`from_exact` carry no
//! shape and unify with any jet they meet.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;
use crate::scalar::{ExactScalar, Ring};

/// Dimension and truncation order of a jet.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct JetShape {
    pub n: usize,
    pub cutoff: u32,
}

/// Taylor jet at a base point: map (I, J) → coefficient of y^I ȳ^J, with all
/// terms of total degree > cutoff discarded by every operation.
///
/// Equality compares coefficients only; a shapeless constant equals the equal
/// constant jet of any shape.
#[derive(Clone)]
pub struct TruncatedJet<R: Ring> {
    shape: Option<JetShape>,
    terms: BTreeMap<(MultiIndex, MultiIndex), R>,
}

impl<R: Ring> TruncatedJet<R> {
    pub fn zero_jet(n: usize, cutoff: u32) -> Self {
        TruncatedJet { shape: Some(JetShape { n, cutoff }), terms: BTreeMap::new() }
    }

    /// Shapeless constant; unifies with any shape.
    pub fn constant(c: R) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((MultiIndex::zero(0), MultiIndex::zero(0)), c);
        }
        TruncatedJet { shape: None, terms }
    }

    pub fn monomial(n: usize, cutoff: u32, i: MultiIndex, j: MultiIndex, c: R) -> Self {
        let mut out = Self::zero_jet(n, cutoff);
        out.insert(i, j, c);
        out
    }

    pub fn shape(&self) -> Option<JetShape> {
        self.shape
    }

    pub fn n(&self) -> Option<usize> {
        self.shape.map(|s| s.n)
    }

    pub fn cutoff(&self) -> Option<u32> {
        self.shape.map(|s| s.cutoff)
    }

    /// Reinterpret with an explicit shape (constants acquire one, shaped jets
    /// are re-truncated if the new cutoff is lower).
    pub fn with_shape(&self, n: usize, cutoff: u32) -> Self {
        let mut out = Self::zero_jet(n, cutoff);
        for ((i, j), c) in &self.terms {
            let (i, j) = if i.n() == n {
                (i.clone(), j.clone())
            } else {
                debug_assert!(i.is_zero() && j.is_zero());
                (MultiIndex::zero(n), MultiIndex::zero(n))
            };
            if i.degree() + j.degree() <= cutoff {
                out.insert(i, j, c.clone());
            }
        }
        out
    }

    pub fn insert(&mut self, i: MultiIndex, j: MultiIndex, c: R) {
        if let Some(s) = self.shape {
            if i.degree() + j.degree() > s.cutoff {
                return;
            }
            debug_assert_eq!(i.n(), s.n);
        }
        if c.is_zero() {
            self.terms.remove(&(i, j));
        } else {
            self.terms.insert((i, j), c);
        }
    }

    pub fn add_term(&mut self, i: MultiIndex, j: MultiIndex, c: R) {
        if c.is_zero() {
            return;
        }
        if let Some(s) = self.shape {
            if i.degree() + j.degree() > s.cutoff {
                return;
            }
        }
        let key = (i, j);
        let cur = self.terms.get(&key);
        let v = match cur {
            Some(old) => old.add(&c),
            None => c,
        };
        if v.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    pub fn coeff(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        if self.shape.is_none() {
            if i.is_zero() && j.is_zero() {
                return self.value();
            }
            return R::zero();
        }
        self.terms.get(&(i.clone(), j.clone())).cloned().unwrap_or_else(R::zero)
    }

    /// Constant term.
    pub fn value(&self) -> R {
        self.terms
            .iter()
            .find(|((i, j), _)| i.is_zero() && j.is_zero())
            .map(|(_, c)| c.clone())
            .unwrap_or_else(R::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &R)> {
        self.terms.iter().map(|((i, j), c)| (i, j, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn unified(&self, rhs: &Self) -> Option<JetShape> {
        match (self.shape, rhs.shape) {
            (None, None) => None,
            (Some(s), None) | (None, Some(s)) => Some(s),
            (Some(a), Some(b)) => {
                assert_eq!(a.n, b.n, "jet dimension mismatch: {} vs {}", a.n, b.n);
                Some(JetShape { n: a.n, cutoff: a.cutoff.min(b.cutoff) })
            }
        }
    }

    fn rekey(i: &MultiIndex, j: &MultiIndex, n: usize) -> (MultiIndex, MultiIndex) {
        if i.n() == n {
            (i.clone(), j.clone())
        } else {
            (MultiIndex::zero(n), MultiIndex::zero(n))
        }
    }

    pub fn add_jet(&self, rhs: &Self) -> Self {
        let shape = self.unified(rhs);
        let mut out = TruncatedJet { shape, terms: BTreeMap::new() };
        for src in [self, rhs] {
            for ((i, j), c) in &src.terms {
                let (i, j) = match shape {
                    Some(s) => Self::rekey(i, j, s.n),
                    None => (i.clone(), j.clone()),
                };
                out.add_term(i, j, c.clone());
            }
        }
        out
    }

    pub fn neg_jet(&self) -> Self {
        TruncatedJet {
            shape: self.shape,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect(),
        }
    }

    pub fn mul_jet(&self, rhs: &Self) -> Self {
        let shape = self.unified(rhs);
        let mut out = TruncatedJet { shape, terms: BTreeMap::new() };
        let cap = shape.map(|s| s.cutoff).unwrap_or(u32::MAX);
        for ((i1, j1), c1) in &self.terms {
            let d1 = i1.degree() + j1.degree();
            if d1 > cap {
                continue;
            }
            for ((i2, j2), c2) in &rhs.terms {
                if d1 + i2.degree() + j2.degree() > cap {
                    continue;
                }
                let (i, j) = match shape {
                    Some(s) => {
                        let (a1, b1) = Self::rekey(i1, j1, s.n);
                        let (a2, b2) = Self::rekey(i2, j2, s.n);
                        (a1.add(&a2), b1.add(&b2))
                    }
                    None => (i1.clone(), j1.clone()),
                };
                out.add_term(i, j, c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, s: &R) -> Self {
        if s.is_zero() {
            return TruncatedJet { shape: self.shape, terms: BTreeMap::new() };
        }
        let mut out = TruncatedJet { shape: self.shape, terms: BTreeMap::new() };
        for ((i, j), c) in &self.terms {
            out.add_term(i.clone(), j.clone(), c.mul(s));
        }
        out
    }

    /// Drop the constant term.
    pub fn nilpotent_part(&self) -> Self {
        let mut out = self.clone();
        out.terms.retain(|(i, j), _| !(i.is_zero() && j.is_zero()));
        out
    }

    /// exp of a nilpotent jet: Σ_{k ≤ cutoff} a^k / k!.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.value().is_zero() {
            return Err(Error::NonNilpotentExponent);
        }
        let mut out = Self::constant(R::one()).add_jet(&Self {
            shape: self.shape,
            terms: BTreeMap::new(),
        });
        let mut term = Self::constant(R::one());
        let bound = self.shape.map(|s| s.cutoff).unwrap_or(0);
        for k in 1..=bound.max(1) {
            term = term.mul_jet(self).scale(&R::from_ratio(1, k as i64));
            if term.is_empty() {
                break;
            }
            out = out.add_jet(&term);
        }
        Ok(out)
    }

    /// Multiplicative inverse: the constant term must be invertible.
    pub fn inv_jet(&self) -> Option<Self> {
        let c = self.value();
        let cinv = c.inv()?;
        let nil = self.nilpotent_part().scale(&cinv);
        // (c(1+n))^{-1} = c^{-1} Σ (-n)^k
        let mut out = Self::constant(R::one()).add_jet(&Self {
            shape: self.shape,
            terms: BTreeMap::new(),
        });
        let mut term = Self::constant(R::one());
        let bound = self.shape.map(|s| s.cutoff).unwrap_or(0);
        for _ in 1..=bound {
            term = term.mul_jet(&nil).neg_jet();
            if term.is_empty() {
                break;
            }
            out = out.add_jet(&term);
        }
        Some(out.scale(&cinv))
    }

    /// Jet of ∂^I ∂̄^J applied to this jet (coefficient shift with factorial
    /// weights); the cutoff drops by |I| + |J|.
    pub fn derivative(&self, di: &MultiIndex, dj: &MultiIndex) -> Self {
        if self.shape.is_none() {
            return if di.degree() + dj.degree() == 0 { self.clone() } else { Self::zero() };
        }
        let shape = self.shape.map(|s| JetShape {
            n: s.n,
            cutoff: s.cutoff.saturating_sub(di.degree() + dj.degree()),
        });
        let mut out = TruncatedJet { shape, terms: BTreeMap::new() };
        for ((i, j), c) in &self.terms {
            let (i, j) = match self.shape {
                Some(s) => Self::rekey(i, j, s.n),
                None => (i.clone(), j.clone()),
            };
            if let (Some(ri), Some(rj)) = (i.checked_sub(di), j.checked_sub(dj)) {
                let w = (i.factorial() / ri.factorial()) as i64
                    * (j.factorial() / rj.factorial()) as i64;
                out.add_term(ri, rj, c.scale_ratio(w, 1));
            }
        }
        out
    }

    /// Substitute nilpotent jets for the variables: result = Σ c_{IJ} gy^I gyb^J.
    /// `gy[i]` replaces y_i, `gyb[j]` replaces ȳ_j.
    pub fn compose(&self, gy: &[Self], gyb: &[Self]) -> Self {
        let mut out = match self.shape {
            Some(_) => {
                let ref_shape = gy
                    .iter()
                    .chain(gyb.iter())
                    .find_map(|g| g.shape)
                    .expect("compose needs at least one shaped substituent");
                Self::zero_jet(ref_shape.n, ref_shape.cutoff)
            }
            None => return self.clone(),
        };
        // cache powers
        let mut pow_cache: Vec<Vec<Self>> = Vec::new();
        for g in gy.iter().chain(gyb.iter()) {
            pow_cache.push(alloc::vec![Self::constant(R::one()), g.clone()]);
        }
        let nvars = gy.len();
        let power = |var: usize, e: u8, cache: &mut Vec<Vec<Self>>| -> Self {
            while cache[var].len() <= e as usize {
                let last = cache[var].last().unwrap().clone();
                let next = last.mul_jet(&cache[var][1]);
                cache[var].push(next);
            }
            cache[var][e as usize].clone()
        };
        for ((i, j), c) in &self.terms {
            let mut term = Self::constant(c.clone());
            for (v, &e) in i.components().iter().enumerate() {
                if e > 0 {
                    term = term.mul_jet(&power(v, e, &mut pow_cache));
                }
            }
            for (v, &e) in j.components().iter().enumerate() {
                if e > 0 {
                    term = term.mul_jet(&power(nvars + v, e, &mut pow_cache));
                }
            }
            out = out.add_jet(&term);
        }
        out
    }

    /// True when all coefficients with |J| > 0 vanish.
    pub fn is_holomorphic(&self) -> bool {
        self.terms.keys().all(|(_, j)| j.is_zero())
    }

    /// True when all coefficients with |I| > 0 vanish.
    pub fn is_antiholomorphic(&self) -> bool {
        self.terms.keys().all(|(i, _)| i.is_zero())
    }

    /// Keep only terms with |J| = 0.
    pub fn holomorphic_part(&self) -> Self {
        let mut out = self.clone();
        out.terms.retain(|(_, j), _| j.is_zero());
        out
    }

    /// self == conj(self) coefficientwise.
    pub fn is_hermitian(&self) -> bool {
        *self == Ring::conj(self)
    }

    /// Max total degree of a nonzero term.
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|(i, j)| i.degree() + j.degree()).max().unwrap_or(0)
    }
}

impl<R: Ring> PartialEq for TruncatedJet<R> {
    fn eq(&self, other: &Self) -> bool {
        // coefficientwise, tolerant of shape metadata
        for ((i, j), c) in &self.terms {
            let n = other.shape.map(|s| s.n).unwrap_or(i.n());
            let (ri, rj) = if i.n() == n || other.shape.is_none() {
                (i.clone(), j.clone())
            } else {
                (MultiIndex::zero(n), MultiIndex::zero(n))
            };
            if other.coeff(&ri, &rj) != *c {
                return false;
            }
        }
        for ((i, j), c) in &other.terms {
            let n = self.shape.map(|s| s.n).unwrap_or(i.n());
            let (ri, rj) = if i.n() == n || self.shape.is_none() {
                (i.clone(), j.clone())
            } else {
                (MultiIndex::zero(n), MultiIndex::zero(n))
            };
            if self.coeff(&ri, &rj) != *c {
                return false;
            }
        }
        true
    }
}

impl<R: Ring> fmt::Debug for TruncatedJet<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((i, j), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}·y^{i:?}ȳ^{j:?}")?;
        }
        Ok(())
    }
}

impl<R: Ring> Ring for TruncatedJet<R> {
    fn zero() -> Self {
        Self::constant(R::zero())
    }

    fn one() -> Self {
        Self::constant(R::one())
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add(&self, rhs: &Self) -> Self {
        self.add_jet(rhs)
    }

    fn neg(&self) -> Self {
        self.neg_jet()
    }

    fn mul(&self, rhs: &Self) -> Self {
        self.mul_jet(rhs)
    }

    fn inv(&self) -> Option<Self> {
        self.inv_jet()
    }

    /// Conjugation of the underlying function: conj coefficients and swap
    /// y ↔ ȳ.
    fn conj(&self) -> Self {
        TruncatedJet {
            shape: self.shape,
            terms: self
                .terms
                .iter()
                .map(|((i, j), c)| ((j.clone(), i.clone()), c.conj()))
                .collect(),
        }
    }

    fn from_exact(v: &ExactScalar) -> Self {
        Self::constant(R::from_exact(v))
    }

    fn is_exact() -> bool {
        R::is_exact()
    }
}

/// Checked product per the public contract: same dimension and same cutoff.
pub fn jet_mul<R: Ring>(a: &TruncatedJet<R>, b: &TruncatedJet<R>) -> Result<TruncatedJet<R>> {
    match (a.shape(), b.shape()) {
        (Some(sa), Some(sb)) => {
            if sa.n != sb.n {
                return Err(Error::DimensionMismatch { left: sa.n, right: sb.n });
            }
            if sa.cutoff != sb.cutoff {
                return Err(Error::CutoffMismatch { left: sa.cutoff, right: sb.cutoff });
            }
        }
        _ => {}
    }
    Ok(a.mul_jet(b))
}

/// Checked exponential per the public contract.
pub fn jet_exp<R: Ring>(a: &TruncatedJet<R>) -> Result<TruncatedJet<R>> {
    a.exp_nilpotent()
}
