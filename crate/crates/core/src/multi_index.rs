//! Multi-indices over n variables, ordered graded-lexicographically.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use smallvec::SmallVec;

/// Ordered list of n non-negative integers. The ordering used everywhere is
/// graded lexicographic: total degree first, then lex.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(SmallVec<[u8; 4]>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(smallvec::smallvec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[i] = 1;
        m
    }

    pub fn from_slice(v: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(v))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    /// |I| = Σ components.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&c| c as u32).sum()
    }

    /// I! = Π component!.
    pub fn factorial(&self) -> u64 {
        self.0.iter().map(|&c| FACT[c as usize]).product()
    }

    pub fn add(&self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.n(), rhs.n());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise subtraction; `None` if any component would go negative.
    pub fn checked_sub(&self, rhs: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.n(), rhs.n());
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&rhs.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// First variable with a nonzero component.
    pub fn first_support(&self) -> Option<usize> {
        self.0.iter().position(|&c| c > 0)
    }

    pub fn components(&self) -> &[u8] {
        &self.0
    }

    /// Expansion into an ordered list of individual variable slots,
    /// e.g. (2,1) → [0,0,1].
    pub fn slots(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree() as usize);
        for (i, &c) in self.0.iter().enumerate() {
            for _ in 0..c {
                out.push(i);
            }
        }
        out
    }

    /// All multi-indices over n variables with total degree exactly d.
    pub fn of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = Self::zero(n);
        fn rec(cur: &mut MultiIndex, pos: usize, left: u32, out: &mut Vec<MultiIndex>) {
            if pos + 1 == cur.n() {
                cur.0[pos] = left as u8;
                out.push(cur.clone());
                return;
            }
            for c in (0..=left).rev() {
                cur.0[pos] = c as u8;
                rec(cur, pos + 1, left - c, out);
            }
            cur.0[pos] = 0;
        }
        if n == 0 {
            if d == 0 {
                out.push(MultiIndex(SmallVec::new()));
            }
            return out;
        }
        rec(&mut cur, 0, d, &mut out);
        out
    }

    /// All multi-indices with total degree ≤ d, in graded-lex order.
    pub fn up_to_degree(n: usize, d: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for k in 0..=d {
            let mut level = Self::of_degree(n, k);
            level.sort();
            out.append(&mut level);
        }
        out
    }
}

const FACT: [u64; 21] = {
    let mut f = [1u64; 21];
    let mut i = 1;
    while i < 21 {
        f[i] = f[i - 1] * i as u64;
        i += 1;
    }
    f
};

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
