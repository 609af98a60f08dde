//! Kähler potential models, jet contexts at a base point, the Calabi
//! expansion, the interaction potential, and holomorphic chart transport.
//!
//! A context stores only mixed derivatives Φ_{IJ̄} (|I|, |J| ≥ 1): the pure
//! rows are gauge (Φ may be shifted by f(z) + conj f(z)) and never enter a
//! product.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::TruncatedJet;
use crate::multi_index::MultiIndex;
use crate::scalar::{invert_matrix, ExactScalar, Ring};
use crate::series::EpsJet;

/// Kähler potential models. Closed forms provide jets at any point of their
/// domain; `JetTable` is a user-supplied table at one fixed point.
#[derive(Clone, Debug)]
pub enum PotentialModel {
    /// Φ = Σ z^i z̄^i.
    Flat { n: usize },
    /// Φ = log(1 + z z̄), n = 1.
    FubiniStudy1D,
    /// Φ = −log(1 − z z̄), n = 1, |z| < 1.
    Hyperbolic1D,
    /// Φ = Σ z^i z̄^i + Σ c_{IJ} z^I z̄^J (finite Hermitian sum, |I|,|J| ≥ 1).
    PolynomialPerturbation { n: usize, terms: Vec<(MultiIndex, MultiIndex, ExactScalar)> },
    /// Mixed derivative table at a single point; evaluation only there.
    JetTable { n: usize, order: u32, phi: BTreeMap<(MultiIndex, MultiIndex), ExactScalar> },
}

/// Jet of Π (z_i + y_i)^{I_i} · Π (z̄_j + ȳ_j)^{J_j}.
fn shifted_monomial<R: Ring>(
    point: &[R],
    i: &MultiIndex,
    j: &MultiIndex,
    n: usize,
    cutoff: u32,
) -> TruncatedJet<R> {
    let mut out = TruncatedJet::constant(R::one());
    for (v, &a) in i.components().iter().enumerate() {
        let lin = TruncatedJet::monomial(n, cutoff, MultiIndex::unit(n, v), MultiIndex::zero(n), R::one())
            .add_jet(&TruncatedJet::constant(point[v].clone()));
        for _ in 0..a {
            out = out.mul_jet(&lin);
        }
    }
    for (v, &b) in j.components().iter().enumerate() {
        let lin = TruncatedJet::monomial(n, cutoff, MultiIndex::zero(n), MultiIndex::unit(n, v), R::one())
            .add_jet(&TruncatedJet::constant(point[v].conj()));
        for _ in 0..b {
            out = out.mul_jet(&lin);
        }
    }
    out
}

/// log(1 + t) for a nilpotent jet t.
fn log1p_jet<R: Ring>(t: &TruncatedJet<R>) -> TruncatedJet<R> {
    let bound = t.shape().map(|s| s.cutoff).unwrap_or(0);
    let mut out = TruncatedJet::zero();
    let mut term = TruncatedJet::constant(R::one());
    for k in 1..=bound {
        term = term.mul_jet(t);
        if term.is_empty() {
            break;
        }
        let sign = if k % 2 == 1 { 1 } else { -1 };
        out = out.add_jet(&term.scale(&R::from_ratio(sign, k as i64)));
    }
    out
}

impl PotentialModel {
    pub fn n(&self) -> usize {
        match self {
            PotentialModel::Flat { n } => *n,
            PotentialModel::FubiniStudy1D | PotentialModel::Hyperbolic1D => 1,
            PotentialModel::PolynomialPerturbation { n, .. } => *n,
            PotentialModel::JetTable { n, .. } => *n,
        }
    }

    /// Closed-form models only: validate Hermitian symmetry of perturbation
    /// coefficients.
    pub fn validate(&self) -> Result<()> {
        if let PotentialModel::PolynomialPerturbation { terms, .. } = self {
            for (i, j, c) in terms {
                if i.degree() == 0 || j.degree() == 0 {
                    return Err(Error::InvalidData {
                        what: format!("perturbation term {i:?},{j:?} must be mixed"),
                    });
                }
                let mirror = terms
                    .iter()
                    .find(|(a, b, _)| a == j && b == i)
                    .map(|(_, _, c)| c.clone())
                    .unwrap_or_else(ExactScalar::zero);
                if mirror != c.conj() {
                    return Err(Error::NotHermitian { entry: format!("{i:?},{j:?}") });
                }
            }
        }
        Ok(())
    }

    /// Master potential jet at `point` truncated at `cutoff` (constant term
    /// dropped). Errors for `JetTable` (no shifted jets).
    pub fn phi_jet<R: Ring>(&self, point: &[R], cutoff: u32) -> Result<TruncatedJet<R>> {
        if point.len() != self.n() {
            return Err(Error::DimensionMismatch { left: point.len(), right: self.n() });
        }
        let n = self.n();
        match self {
            PotentialModel::Flat { .. } => {
                let mut out = TruncatedJet::zero_jet(n, cutoff);
                for v in 0..n {
                    let zi = TruncatedJet::constant(point[v].clone());
                    let zbi = TruncatedJet::constant(point[v].conj());
                    let y = TruncatedJet::monomial(n, cutoff, MultiIndex::unit(n, v), MultiIndex::zero(n), R::one());
                    let yb = TruncatedJet::monomial(n, cutoff, MultiIndex::zero(n), MultiIndex::unit(n, v), R::one());
                    out = out.add_jet(&zi.add_jet(&y).mul_jet(&zbi.add_jet(&yb)));
                }
                Ok(out.nilpotent_part())
            }
            PotentialModel::FubiniStudy1D => {
                let z = &point[0];
                let u0 = z.mul(&z.conj());
                let denom = R::one().add(&u0);
                let dinv = denom.inv().ok_or_else(|| Error::SingularMetric {
                    point: format!("{z:?}"),
                })?;
                let du = shifted_monomial(point, &MultiIndex::unit(1, 0), &MultiIndex::unit(1, 0), 1, cutoff)
                    .nilpotent_part();
                Ok(log1p_jet(&du.scale(&dinv)))
            }
            PotentialModel::Hyperbolic1D => {
                let z = &point[0];
                let u0 = z.mul(&z.conj());
                let denom = R::one().sub(&u0);
                let dinv = denom.inv().ok_or_else(|| Error::SingularMetric {
                    point: format!("{z:?}"),
                })?;
                let du = shifted_monomial(point, &MultiIndex::unit(1, 0), &MultiIndex::unit(1, 0), 1, cutoff)
                    .nilpotent_part();
                // −log(1 − x), x = du/(1 − u0)
                Ok(log1p_jet(&du.scale(&dinv).neg_jet()).neg_jet())
            }
            PotentialModel::PolynomialPerturbation { terms, .. } => {
                let mut out = PotentialModel::Flat { n }.phi_jet(point, cutoff)?;
                for (i, j, c) in terms {
                    let mono = shifted_monomial(point, i, j, n, cutoff);
                    out = out.add_jet(&mono.scale(&R::from_exact(c)));
                }
                Ok(out.nilpotent_part())
            }
            PotentialModel::JetTable { .. } => Err(Error::JetTableUnsupported { op: "phi_jet" }),
        }
    }
}

/// Tables of mixed Kähler-potential derivatives at a base point, with the
/// metric, its inverse, and the log-det (Ψ) jets.
///
/// `u[i][j]` is h^{ij̄}, normalized by Σ_j h^{ij̄} h_{kj̄} = δ_ik.
#[derive(Clone, Debug)]
pub struct JetContext<R: Ring> {
    n: usize,
    order: u32,
    phi: BTreeMap<(MultiIndex, MultiIndex), R>,
    h: Vec<Vec<R>>,
    u: Vec<Vec<R>>,
    psi: BTreeMap<(MultiIndex, MultiIndex), R>,
    a_const: R,
}

impl<R: Ring> JetContext<R> {
    /// Build from a master potential jet: extract mixed rows, invert the
    /// metric, derive Ψ by the tr-log expansion, and verify the log-det
    /// identities (exact rings).
    pub fn from_master_jet(n: usize, order: u32, master: &TruncatedJet<R>) -> Result<Self> {
        let mut phi = BTreeMap::new();
        for (i, j, c) in master.terms() {
            if i.degree() >= 1 && j.degree() >= 1 && i.degree() + j.degree() <= order {
                let scale = (i.factorial() * j.factorial()) as i64;
                phi.insert((i.clone(), j.clone()), c.scale_ratio(scale, 1));
            }
        }
        Self::from_phi_table(n, order, phi)
    }

    /// Build from an explicit mixed table (entries are Φ_{IJ̄}, not divided by
    /// factorials). Hermitian symmetry is enforced for exact rings.
    pub fn from_phi_table(
        n: usize,
        order: u32,
        phi: BTreeMap<(MultiIndex, MultiIndex), R>,
    ) -> Result<Self> {
        if R::is_exact() {
            for ((i, j), c) in &phi {
                let mirror = phi.get(&(j.clone(), i.clone())).cloned().unwrap_or_else(R::zero);
                if mirror != c.conj() {
                    return Err(Error::NotHermitian { entry: format!("{i:?},{j:?}") });
                }
            }
        }
        let zero = R::zero;
        let h: Vec<Vec<R>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        phi.get(&(MultiIndex::unit(n, i), MultiIndex::unit(n, j)))
                            .cloned()
                            .unwrap_or_else(zero)
                    })
                    .collect()
            })
            .collect();
        // u[i][j] = h^{ij̄}: inverse of the transposed metric matrix
        let ht: Vec<Vec<R>> = (0..n).map(|i| (0..n).map(|j| h[j][i].clone()).collect()).collect();
        let u = invert_matrix(&ht).ok_or_else(|| Error::SingularMetric {
            point: String::from("context base point"),
        })?;
        let psi = psi_tables(n, order, &phi, &u)?;
        let mut ctx = JetContext { n, order, phi, h, u, psi, a_const: R::zero() };
        let mut a = R::zero();
        for i in 0..n {
            for j in 0..n {
                a = a.add(&ctx.u[i][j].mul(&ctx.psi_entry(&MultiIndex::unit(n, i), &MultiIndex::unit(n, j))));
            }
        }
        ctx.a_const = a.scale_ratio(1, 2);
        if R::is_exact() {
            ctx.check_logdet_identities()?;
        }
        Ok(ctx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Φ_{IJ̄}; zero for absent entries.
    pub fn phi_entry(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        self.phi.get(&(i.clone(), j.clone())).cloned().unwrap_or_else(R::zero)
    }

    /// Ψ_{IJ̄} = ∂^I ∂̄^J log det H; zero for absent entries.
    pub fn psi_entry(&self, i: &MultiIndex, j: &MultiIndex) -> R {
        self.psi.get(&(i.clone(), j.clone())).cloned().unwrap_or_else(R::zero)
    }

    pub fn metric(&self) -> &[Vec<R>] {
        &self.h
    }

    /// h^{ij̄}.
    pub fn inverse_metric(&self) -> &[Vec<R>] {
        &self.u
    }

    /// A = ½ Σ h^{ij̄} Ψ_{(e_i)(e_j)}.
    pub fn a_const(&self) -> R {
        self.a_const.clone()
    }

    pub fn phi_entries(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &R)> {
        self.phi.iter().map(|((i, j), c)| (i, j, c))
    }

    pub fn psi_entries(&self) -> impl Iterator<Item = (&MultiIndex, &MultiIndex, &R)> {
        self.psi.iter().map(|((i, j), c)| (i, j, c))
    }

    /// Computing a bullet to ħ^K needs Φ jets to order 2K+2.
    pub fn require_order_for(&self, hbar_order: u32) -> Result<()> {
        let needed = 2 * hbar_order + 2;
        if self.order < needed {
            return Err(Error::BudgetExceeded { needed, have: self.order });
        }
        Ok(())
    }

    /// Remark-style log-det relations: ∂_i log det H = tr(H⁻¹ ∂_i H) and its
    /// ∂̄_j derivative, in Φ components.
    pub fn check_logdet_identities(&self) -> Result<()> {
        let n = self.n;
        // H⁻¹ as a plain matrix: (H⁻¹)_{kl} = u[l][k]
        let hinv = |k: usize, l: usize| self.u[l][k].clone();
        for i in 0..n {
            // first identity
            let mut tr = R::zero();
            for k in 0..n {
                for l in 0..n {
                    let dh = self.phi_entry(
                        &MultiIndex::unit(n, i).add(&MultiIndex::unit(n, l)),
                        &MultiIndex::unit(n, k),
                    );
                    tr = tr.add(&hinv(k, l).mul(&dh));
                }
            }
            if tr != self.psi_entry(&MultiIndex::unit(n, i), &MultiIndex::zero(n)) {
                return Err(Error::InvalidData { what: format!("log-det identity (∂_{i}) fails") });
            }
            for j in 0..n {
                // second identity: Ψ_{(e_i)(e_j)} = tr(H⁻¹ ∂²_{ij̄} H) − tr(H⁻¹ ∂_i H H⁻¹ ∂̄_j H)
                let mut t1 = R::zero();
                for k in 0..n {
                    for l in 0..n {
                        let d2h = self.phi_entry(
                            &MultiIndex::unit(n, i).add(&MultiIndex::unit(n, l)),
                            &MultiIndex::unit(n, j).add(&MultiIndex::unit(n, k)),
                        );
                        t1 = t1.add(&hinv(k, l).mul(&d2h));
                    }
                }
                let mut t2 = R::zero();
                for k in 0..n {
                    for l in 0..n {
                        for p in 0..n {
                            for q in 0..n {
                                // (H⁻¹ ∂_i H)_{kp} (H⁻¹ ∂̄_j H)_{pk} summed
                                let a = hinv(k, l).mul(&self.phi_entry(
                                    &MultiIndex::unit(n, i).add(&MultiIndex::unit(n, l)),
                                    &MultiIndex::unit(n, p),
                                ));
                                let b = hinv(p, q).mul(&self.phi_entry(
                                    &MultiIndex::unit(n, q),
                                    &MultiIndex::unit(n, j).add(&MultiIndex::unit(n, k)),
                                ));
                                t2 = t2.add(&a.mul(&b));
                            }
                        }
                    }
                }
                let rhs = t1.sub(&t2);
                if rhs != self.psi_entry(&MultiIndex::unit(n, i), &MultiIndex::unit(n, j)) {
                    return Err(Error::InvalidData {
                        what: format!("log-det identity (∂_{i} ∂̄_{j}) fails"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Ψ tables from the truncated tr-log expansion:
/// log det H(z+y) − log det H(z) = tr log(1 + H⁻¹ ΔH).
fn psi_tables<R: Ring>(
    n: usize,
    order: u32,
    phi: &BTreeMap<(MultiIndex, MultiIndex), R>,
    u: &[Vec<R>],
) -> Result<BTreeMap<(MultiIndex, MultiIndex), R>> {
    let depth = order.saturating_sub(2);
    // ΔH entry jets
    let mut dh: Vec<Vec<TruncatedJet<R>>> =
        (0..n).map(|_| (0..n).map(|_| TruncatedJet::zero_jet(n, depth)).collect()).collect();
    for ((i, j), c) in phi {
        // Φ_{(I+e_k)(J+e_l)} contributes to ΔH_{kl} jet coefficient (I, J)
        for k in 0..n {
            for l in 0..n {
                if let (Some(ri), Some(rj)) = (
                    i.checked_sub(&MultiIndex::unit(n, k)),
                    j.checked_sub(&MultiIndex::unit(n, l)),
                ) {
                    if ri.degree() + rj.degree() >= 1 && ri.degree() + rj.degree() <= depth {
                        let scale = R::from_ratio(1, (ri.factorial() * rj.factorial()) as i64);
                        dh[k][l].add_term(ri, rj, c.mul(&scale));
                    }
                }
            }
        }
    }
    // M = H⁻¹ ΔH, (H⁻¹)_{kl} = u[l][k]
    let mut m: Vec<Vec<TruncatedJet<R>>> =
        (0..n).map(|_| (0..n).map(|_| TruncatedJet::zero_jet(n, depth)).collect()).collect();
    for k in 0..n {
        for l in 0..n {
            let mut acc = TruncatedJet::zero_jet(n, depth);
            for p in 0..n {
                acc = acc.add_jet(&dh[p][l].scale(&u[p][k]));
            }
            m[k][l] = acc;
        }
    }
    // tr log(1 + M)
    let mut logdet = TruncatedJet::zero_jet(n, depth);
    let mut pw = m.clone();
    let mut sign = 1i64;
    for step in 1..=depth {
        if pw.iter().all(|row| row.iter().all(|e| e.is_empty())) {
            break;
        }
        let mut tr = TruncatedJet::zero_jet(n, depth);
        for k in 0..n {
            tr = tr.add_jet(&pw[k][k]);
        }
        logdet = logdet.add_jet(&tr.scale(&R::from_ratio(sign, step as i64)));
        sign = -sign;
        if step < depth {
            let mut nx: Vec<Vec<TruncatedJet<R>>> =
                (0..n).map(|_| (0..n).map(|_| TruncatedJet::zero_jet(n, depth)).collect()).collect();
            for a in 0..n {
                for b in 0..n {
                    let mut acc = TruncatedJet::zero_jet(n, depth);
                    for c in 0..n {
                        acc = acc.add_jet(&pw[a][c].mul_jet(&m[c][b]));
                    }
                    nx[a][b] = acc;
                }
            }
            pw = nx;
        }
    }
    let mut psi = BTreeMap::new();
    for (i, j, c) in logdet.terms() {
        if i.degree() + j.degree() >= 1 {
            let scale = (i.factorial() * j.factorial()) as i64;
            psi.insert((i.clone(), j.clone()), c.scale_ratio(scale, 1));
        }
    }
    Ok(psi)
}

/// Build a context for a model at a point.
pub fn build_context<R: Ring>(
    model: &PotentialModel,
    point: &[R],
    order: u32,
) -> Result<JetContext<R>> {
    model.validate()?;
    match model {
        PotentialModel::JetTable { n, order: have, phi } => {
            if order > *have {
                return Err(Error::BudgetExceeded { needed: order, have: *have });
            }
            let table = phi
                .iter()
                .filter(|((i, j), _)| i.degree() + j.degree() <= order)
                .map(|((i, j), c)| ((i.clone(), j.clone()), R::from_exact(c)))
                .collect();
            JetContext::from_phi_table(*n, order, table)
        }
        _ => {
            let master = model.phi_jet(point, order)?;
            JetContext::from_master_jet(model.n(), order, &master)
        }
    }
}

/// Build a jet-scalar context: every table entry is returned together with its
/// own (y, ȳ) jet to depth `jet_depth`, so derived quantities come out with
/// derivatives attached.
pub fn build_context_jets<R: Ring>(
    model: &PotentialModel,
    point: &[R],
    order: u32,
    jet_depth: u32,
) -> Result<JetContext<TruncatedJet<R>>> {
    model.validate()?;
    if matches!(model, PotentialModel::JetTable { .. }) {
        return Err(Error::JetTableUnsupported { op: "build_context_jets" });
    }
    let n = model.n();
    let master = model.phi_jet(point, order + jet_depth)?;
    let mut table: BTreeMap<(MultiIndex, MultiIndex), TruncatedJet<R>> = BTreeMap::new();
    for di in MultiIndex::up_to_degree(n, order) {
        for dj in MultiIndex::up_to_degree(n, order.saturating_sub(di.degree())) {
            if di.degree() >= 1 && dj.degree() >= 1 && di.degree() + dj.degree() <= order {
                let jet = master.derivative(&di, &dj).with_shape(n, jet_depth);
                if !jet.is_empty() {
                    table.insert((di.clone(), dj.clone()), jet);
                }
            }
        }
    }
    JetContext::from_phi_table(n, order, table)
}

/// Taylor jet of the Calabi function φ(z, z̄; z+y, z̄+ȳ): coefficient of
/// y^I ȳ^J is −Φ_{IJ̄}/(I! J!) for |I|, |J| ≥ 1, all other rows zero.
pub fn calabi_jet<R: Ring>(ctx: &JetContext<R>, cutoff: u32) -> Result<TruncatedJet<R>> {
    if cutoff > ctx.order() {
        return Err(Error::BudgetExceeded { needed: cutoff, have: ctx.order() });
    }
    let mut out = TruncatedJet::zero_jet(ctx.n(), cutoff);
    for (i, j, c) in ctx.phi_entries() {
        let scale = R::from_ratio(-1, (i.factorial() * j.factorial()) as i64);
        out.add_term(i.clone(), j.clone(), c.mul(&scale));
    }
    Ok(out)
}

/// The interaction potential V as an ε-graded jet:
/// −Σ_{|I|+|J|>2} ε^{|I|+|J|−2} Φ_{IJ̄}/(I!J!) y^I ȳ^J
/// +Σ_{|I|+|J|≥1} ε^{|I|+|J|} Ψ_{IJ̄}/(I!J!) y^I ȳ^J,
/// with the Ψ constant absorbed into the normalized Gaussian measure.
pub fn interaction_potential<R: Ring>(
    ctx: &JetContext<R>,
    eps_cutoff: u32,
    jet_cutoff: u32,
) -> EpsJet<R> {
    let mut v = EpsJet::zero(eps_cutoff, ctx.n(), jet_cutoff);
    for (i, j, c) in ctx.phi_entries() {
        let d = i.degree() + j.degree();
        if d > 2 && d - 2 <= eps_cutoff {
            let scale = R::from_ratio(-1, (i.factorial() * j.factorial()) as i64);
            v.add_term(d - 2, i.clone(), j.clone(), c.mul(&scale));
        }
    }
    for (i, j, c) in ctx.psi_entries() {
        let d = i.degree() + j.degree();
        if d >= 1 && d <= eps_cutoff {
            let scale = R::from_ratio(1, (i.factorial() * j.factorial()) as i64);
            v.add_term(d, i.clone(), j.clone(), c.mul(&scale));
        }
    }
    v
}

/// Holomorphic chart transport (n = 1): given data at the point w₀ = g(z₀) of
/// an old chart and the holomorphic jet of w = g(z) at z₀, produce the context
/// of the pulled-back potential Φ∘g at z₀. `f` jets pull back the same way.
pub struct Transported<R: Ring> {
    pub ctx: JetContext<R>,
    pub fjets: Vec<TruncatedJet<R>>,
}

pub fn transport_jets<R: Ring>(
    g: &TruncatedJet<R>,
    ctx_old: &JetContext<R>,
    fjets_old: &[TruncatedJet<R>],
) -> Result<Transported<R>> {
    if ctx_old.n() != 1 {
        return Err(Error::DimensionUnsupported { n: ctx_old.n(), op: "transport_jets" });
    }
    if !g.is_holomorphic() {
        return Err(Error::InvalidData { what: String::from("chart map must be holomorphic") });
    }
    let gsub = g.nilpotent_part();
    let one = MultiIndex::unit(1, 0);
    let zero = MultiIndex::zero(1);
    if gsub.coeff(&one, &zero).is_zero() {
        return Err(Error::DegenerateChart);
    }
    if let Some(s) = g.shape() {
        if s.cutoff < ctx_old.order() {
            return Err(Error::BudgetExceeded { needed: ctx_old.order(), have: s.cutoff });
        }
    }
    // master mixed jet of the old potential at w0
    let order = ctx_old.order();
    let mut master = TruncatedJet::zero_jet(1, order);
    for (i, j, c) in ctx_old.phi_entries() {
        let scale = R::from_ratio(1, (i.factorial() * j.factorial()) as i64);
        master.add_term(i.clone(), j.clone(), c.mul(&scale));
    }
    let gbar = Ring::conj(&gsub);
    let composed = master.compose(core::slice::from_ref(&gsub), core::slice::from_ref(&gbar));
    let ctx = JetContext::from_master_jet(1, order, &composed)?;
    let fjets = fjets_old
        .iter()
        .map(|f| f.compose(core::slice::from_ref(&gsub), core::slice::from_ref(&gbar)))
        .collect();
    Ok(Transported { ctx, fjets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactScalar as S;

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(v)
    }

    fn origin() -> Vec<S> {
        alloc::vec![S::zero()]
    }

    #[test]
    fn flat_context_trivial() {
        let m = PotentialModel::Flat { n: 1 };
        let ctx = build_context(&m, &origin(), 8).unwrap();
        assert_eq!(ctx.metric()[0][0], S::one());
        assert_eq!(ctx.inverse_metric()[0][0], S::one());
        assert_eq!(ctx.phi_entry(&mi(&[2]), &mi(&[2])), S::zero());
        assert!(ctx.psi_entries().next().is_none());
        assert_eq!(ctx.a_const(), S::zero());
    }

    #[test]
    fn fubini_study_frozen_values() {
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &origin(), 8).unwrap();
        assert_eq!(ctx.metric()[0][0], S::one());
        assert_eq!(ctx.phi_entry(&mi(&[2]), &mi(&[2])), S::from_i64(-2));
        assert_eq!(ctx.psi_entry(&mi(&[1]), &mi(&[1])), S::from_i64(-2));
        assert_eq!(ctx.a_const(), S::from_i64(-1));
    }

    #[test]
    fn hyperbolic_frozen_values() {
        let ctx = build_context(&PotentialModel::Hyperbolic1D, &origin(), 8).unwrap();
        assert_eq!(ctx.metric()[0][0], S::one());
        assert_eq!(ctx.psi_entry(&mi(&[1]), &mi(&[1])), S::from_i64(2));
        assert_eq!(ctx.a_const(), S::one());
    }

    #[test]
    fn fs_away_from_origin_is_hermitian_and_consistent() {
        let p = alloc::vec![S::new(crate::scalar::Rat::new(1, 3), crate::scalar::Rat::new(-1, 2))];
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &p, 8).unwrap();
        // identities are verified inside from_phi_table for exact rings
        assert!(ctx.check_logdet_identities().is_ok());
        // h = (1+z z̄)^{-2}
        let zz = p[0].mul(&p[0].conj());
        let expect = S::one().add(&zz).inv().unwrap();
        assert_eq!(ctx.metric()[0][0], expect.mul(&expect));
    }

    #[test]
    fn calabi_jet_structure() {
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &origin(), 8).unwrap();
        let phi = calabi_jet(&ctx, 4).unwrap();
        assert_eq!(phi.coeff(&mi(&[1]), &mi(&[1])), S::from_i64(-1));
        assert_eq!(phi.coeff(&mi(&[2]), &mi(&[2])), S::from_ratio(1, 2));
        // no pure rows
        for (i, j, _) in phi.terms() {
            assert!(i.degree() >= 1 && j.degree() >= 1);
        }
        // flat: exactly −yȳ
        let flat = build_context(&PotentialModel::Flat { n: 1 }, &origin(), 6).unwrap();
        let pj = calabi_jet(&flat, 4).unwrap();
        assert_eq!(pj.len(), 1);
        assert_eq!(pj.coeff(&mi(&[1]), &mi(&[1])), S::from_i64(-1));
    }

    #[test]
    fn interaction_potential_fs_terms() {
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &origin(), 8).unwrap();
        let v = interaction_potential(&ctx, 4, 12);
        // hollow: ε² Ψ_{11̄} yȳ = −2 ε² yȳ ; solid: −ε² Φ_{22̄} y²ȳ²/4 = +ε² y²ȳ²/2
        assert_eq!(v.row(2).coeff(&mi(&[1]), &mi(&[1])), S::from_i64(-2));
        assert_eq!(v.row(2).coeff(&mi(&[2]), &mi(&[2])), S::from_ratio(1, 2));
        // flat: V = 0
        let flat = build_context(&PotentialModel::Flat { n: 1 }, &origin(), 6).unwrap();
        assert!(interaction_potential(&flat, 4, 12).is_zero());
        // trivial perturbation reduces to flat
        let p0 = PotentialModel::PolynomialPerturbation { n: 1, terms: alloc::vec![] };
        let ctx0 = build_context(&p0, &origin(), 6).unwrap();
        assert!(interaction_potential(&ctx0, 4, 12).is_zero());
    }

    #[test]
    fn perturbation_hermitian_enforced() {
        let bad = PotentialModel::PolynomialPerturbation {
            n: 1,
            terms: alloc::vec![(mi(&[2]), mi(&[1]), S::one())],
        };
        assert!(matches!(
            build_context(&bad, &origin(), 6),
            Err(Error::NotHermitian { .. })
        ));
        let good = PotentialModel::PolynomialPerturbation {
            n: 1,
            terms: alloc::vec![
                (mi(&[2]), mi(&[1]), S::i()),
                (mi(&[1]), mi(&[2]), S::i().conj()),
            ],
        };
        assert!(build_context(&good, &origin(), 6).is_ok());
    }

    #[test]
    fn transport_identity_and_scaling() {
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &origin(), 6).unwrap();
        // identity chart
        let id = TruncatedJet::monomial(1, 6, mi(&[1]), mi(&[0]), S::one());
        let t = transport_jets(&id, &ctx, &[]).unwrap();
        assert_eq!(t.ctx.metric()[0][0], S::one());
        // w = 2z on flat: h ↦ 4h
        let two_z = TruncatedJet::monomial(1, 6, mi(&[1]), mi(&[0]), S::from_i64(2));
        let t = transport_jets(&two_z, &ctx, &[]).unwrap();
        assert_eq!(t.ctx.metric()[0][0], S::from_i64(4));
        // degenerate chart rejected
        let sq = TruncatedJet::monomial(1, 6, mi(&[2]), mi(&[0]), S::one());
        assert!(matches!(transport_jets(&sq, &ctx, &[]), Err(Error::DegenerateChart)));
    }

    #[test]
    fn pure_gauge_terms_do_not_change_context() {
        // master with added f(z) + conj f(z) rows builds the same context
        let model = PotentialModel::FubiniStudy1D;
        let p = origin();
        let master = model.phi_jet(&p, 6).unwrap();
        let mut shifted = master.clone();
        shifted.add_term(mi(&[3]), mi(&[0]), S::from_ratio(5, 7));
        shifted.add_term(mi(&[0]), mi(&[3]), S::from_ratio(5, 7));
        let a = JetContext::from_master_jet(1, 6, &master).unwrap();
        let b = JetContext::from_master_jet(1, 6, &shifted).unwrap();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.psi, b.psi);
    }

    #[test]
    fn jet_mode_context_carries_derivatives() {
        let ctx = build_context_jets(&PotentialModel::FubiniStudy1D, &origin(), 6, 2).unwrap();
        // h-as-jet: value 1, and ∂∂̄h = Φ_{22̄} = −2 at the origin
        let h = &ctx.metric()[0][0];
        assert_eq!(h.value(), S::one());
        assert_eq!(h.coeff(&mi(&[1]), &mi(&[1])), S::from_i64(-2));
        // A-as-jet has value −1
        assert_eq!(ctx.a_const().value(), S::from_i64(-1));
    }
}
