//! Truncated formal power series in ħ, stored internally in ε = ħ^{1/2}.
//!
//! Intermediate quantities (interaction vertices, shifted function slots)
//! carry half-integer ħ grades; complete products always land on integer
//! grades, so the public accessors speak ħ and the odd ε rows can be asserted
//! to vanish.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::Ring;

/// Series Σ_p c_p ε^p truncated at `eps_cutoff` (inclusive), ε² = ħ.
#[derive(Clone, PartialEq)]
pub struct HbarSeries<R: Ring> {
    eps_cutoff: u32,
    coeffs: Vec<R>,
}

impl<R: Ring> HbarSeries<R> {
    /// Zero series keeping ħ powers 0..=K.
    pub fn zero_to_order(hbar_order: u32) -> Self {
        Self::zero_eps(2 * hbar_order)
    }

    pub fn zero_eps(eps_cutoff: u32) -> Self {
        HbarSeries {
            eps_cutoff,
            coeffs: alloc::vec![R::zero(); eps_cutoff as usize + 1],
        }
    }

    pub fn constant(c: R, hbar_order: u32) -> Self {
        let mut s = Self::zero_to_order(hbar_order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(hbar_order: u32) -> Self {
        Self::constant(R::one(), hbar_order)
    }

    /// Build from integer-ħ coefficients.
    pub fn from_hbar_coeffs(coeffs: &[R]) -> Self {
        let k = coeffs.len().saturating_sub(1) as u32;
        let mut s = Self::zero_to_order(k);
        for (i, c) in coeffs.iter().enumerate() {
            s.coeffs[2 * i] = c.clone();
        }
        s
    }

    pub fn eps_cutoff(&self) -> u32 {
        self.eps_cutoff
    }

    /// Highest complete ħ order.
    pub fn hbar_order(&self) -> u32 {
        self.eps_cutoff / 2
    }

    pub fn eps_coeff(&self, p: u32) -> R {
        self.coeffs.get(p as usize).cloned().unwrap_or_else(R::zero)
    }

    pub fn hbar_coeff(&self, k: u32) -> R {
        self.eps_coeff(2 * k)
    }

    pub fn hbar_coeffs(&self) -> Vec<R> {
        (0..=self.hbar_order()).map(|k| self.hbar_coeff(k)).collect()
    }

    pub fn set_eps(&mut self, p: u32, c: R) {
        if p <= self.eps_cutoff {
            self.coeffs[p as usize] = c;
        }
    }

    pub fn set_hbar(&mut self, k: u32, c: R) {
        self.set_eps(2 * k, c);
    }

    pub fn add_eps(&mut self, p: u32, c: &R) {
        if p <= self.eps_cutoff {
            let cur = &self.coeffs[p as usize];
            self.coeffs[p as usize] = cur.add(c);
        }
    }

    /// All odd ε rows are exactly zero.
    pub fn odd_rows_vanish(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|c| c.is_zero())
    }

    /// Error unless all odd ε rows vanish.
    pub fn assert_integer_grading(&self) -> Result<()> {
        if self.odd_rows_vanish() {
            Ok(())
        } else {
            Err(Error::InvalidData {
                what: alloc::string::String::from("odd half-integer powers survive in a complete product"),
            })
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let cut = self.eps_cutoff.min(rhs.eps_cutoff);
        let mut out = Self::zero_eps(cut);
        for p in 0..=cut {
            out.coeffs[p as usize] = self.eps_coeff(p).add(&rhs.eps_coeff(p));
        }
        out
    }

    pub fn neg(&self) -> Self {
        HbarSeries {
            eps_cutoff: self.eps_cutoff,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let cut = self.eps_cutoff.min(rhs.eps_cutoff);
        let mut out = Self::zero_eps(cut);
        for p in 0..=cut {
            if self.coeffs[p as usize].is_zero() {
                continue;
            }
            for q in 0..=cut - p {
                let r = rhs.eps_coeff(q);
                if r.is_zero() {
                    continue;
                }
                let add = self.coeffs[p as usize].mul(&r);
                out.add_eps(p + q, &add);
            }
        }
        out
    }

    pub fn scale(&self, s: &R) -> Self {
        HbarSeries {
            eps_cutoff: self.eps_cutoff,
            coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect(),
        }
    }

    /// Multiply by ħ^k (shift by 2k ε rows), truncating at the cutoff.
    pub fn shift_hbar(&self, k: u32) -> Self {
        let mut out = Self::zero_eps(self.eps_cutoff);
        for p in 0..=self.eps_cutoff.saturating_sub(2 * k) {
            out.coeffs[(p + 2 * k) as usize] = self.eps_coeff(p);
        }
        out
    }

    /// Neumann-series inverse; the ε⁰ coefficient must be invertible.
    pub fn invert(&self) -> Result<Self> {
        let lead = self.coeffs[0].inv().ok_or(Error::NonInvertibleSeries)?;
        // write self = c (1 - n) with n of positive ε order
        let mut n = self.scale(&lead).neg();
        n.coeffs[0] = R::zero();
        let mut out = Self::zero_eps(self.eps_cutoff);
        out.coeffs[0] = R::one();
        let mut term = out.clone();
        for _ in 0..self.eps_cutoff {
            term = term.mul(&n);
            if term.coeffs.iter().all(|c| c.is_zero()) {
                break;
            }
            out = out.add(&term);
        }
        Ok(out.scale(&lead))
    }

    pub fn conj(&self) -> Self {
        HbarSeries {
            eps_cutoff: self.eps_cutoff,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Retruncate to a lower ħ order.
    pub fn truncate_hbar(&self, hbar_order: u32) -> Self {
        let cut = (2 * hbar_order).min(self.eps_cutoff);
        HbarSeries { eps_cutoff: cut, coeffs: self.coeffs[..=cut as usize].to_vec() }
    }

    /// Map coefficients into another ring.
    pub fn map<T: Ring>(&self, f: impl Fn(&R) -> T) -> HbarSeries<T> {
        HbarSeries { eps_cutoff: self.eps_cutoff, coeffs: self.coeffs.iter().map(f).collect() }
    }
}

/// ε-graded jet polynomial: one truncated jet per ε power. The working
/// representation of interaction potentials and shifted integrands before
/// Gaussian integration.
#[derive(Clone, PartialEq, Debug)]
pub struct EpsJet<R: Ring> {
    eps_cutoff: u32,
    rows: Vec<crate::jet::TruncatedJet<R>>,
}

impl<R: Ring> EpsJet<R> {
    pub fn zero(eps_cutoff: u32, n: usize, jet_cutoff: u32) -> Self {
        EpsJet {
            eps_cutoff,
            rows: (0..=eps_cutoff)
                .map(|_| crate::jet::TruncatedJet::zero_jet(n, jet_cutoff))
                .collect(),
        }
    }

    pub fn one(eps_cutoff: u32, n: usize, jet_cutoff: u32) -> Self {
        let mut s = Self::zero(eps_cutoff, n, jet_cutoff);
        s.rows[0] = s.rows[0].add_jet(&crate::jet::TruncatedJet::constant(R::one()));
        s
    }

    pub fn eps_cutoff(&self) -> u32 {
        self.eps_cutoff
    }

    pub fn row(&self, p: u32) -> &crate::jet::TruncatedJet<R> {
        &self.rows[p as usize]
    }

    pub fn add_term(
        &mut self,
        eps: u32,
        i: crate::multi_index::MultiIndex,
        j: crate::multi_index::MultiIndex,
        c: R,
    ) {
        if eps <= self.eps_cutoff {
            self.rows[eps as usize].add_term(i, j, c);
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let cut = self.eps_cutoff.min(rhs.eps_cutoff);
        EpsJet {
            eps_cutoff: cut,
            rows: (0..=cut)
                .map(|p| self.rows[p as usize].add_jet(&rhs.rows[p as usize]))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let cut = self.eps_cutoff.min(rhs.eps_cutoff);
        let shape = self.rows[0].shape().expect("EpsJet rows carry shape");
        let mut rows: Vec<crate::jet::TruncatedJet<R>> = (0..=cut)
            .map(|_| crate::jet::TruncatedJet::zero_jet(shape.n, shape.cutoff))
            .collect();
        for p in 0..=cut {
            if self.rows[p as usize].is_empty() {
                continue;
            }
            for q in 0..=cut - p {
                if rhs.rows[q as usize].is_empty() {
                    continue;
                }
                let prod = self.rows[p as usize].mul_jet(&rhs.rows[q as usize]);
                rows[(p + q) as usize] = rows[(p + q) as usize].add_jet(&prod);
            }
        }
        EpsJet { eps_cutoff: cut, rows }
    }

    pub fn scale_jet(&self, s: &crate::jet::TruncatedJet<R>) -> Self {
        EpsJet {
            eps_cutoff: self.eps_cutoff,
            rows: self.rows.iter().map(|r| r.mul_jet(s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// exp of a series with no ε⁰ row: Σ_m self^m / m! terminates at the ε
    /// cutoff.
    pub fn exp_positive_order(&self) -> crate::error::Result<Self> {
        if !self.rows[0].is_empty() {
            return Err(crate::error::Error::NonNilpotentExponent);
        }
        let shape = self.rows[0].shape().expect("EpsJet rows carry shape");
        let mut out = Self::one(self.eps_cutoff, shape.n, shape.cutoff);
        let mut term = out.clone();
        for m in 1..=self.eps_cutoff {
            term = term.mul(self);
            if term.is_zero() {
                break;
            }
            let inv_m = R::from_ratio(1, m as i64);
            term = EpsJet {
                eps_cutoff: term.eps_cutoff,
                rows: term.rows.iter().map(|r| r.scale(&inv_m)).collect(),
            };
            out = out.add(&term);
        }
        Ok(out)
    }
}

impl<R: Ring> fmt::Debug for HbarSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if p % 2 == 0 {
                write!(f, "ħ^{}·{c:?}", p / 2)?;
            } else {
                write!(f, "ε^{p}·{c:?}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
