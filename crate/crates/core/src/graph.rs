//! The diagram engine: enumeration of locally oriented graphs with L/R,
//! solid and hollow vertices, automorphism counting, and the graph-sum
//! evaluation of the non-normalized product.
//!
//! Every edge runs from its ∂̄ slot to its ∂ slot, so L (carrying ∂̄^J f₁) has
//! only outgoing edges and R (carrying ∂^I f₂) only incoming ones. Solid
//! vertices carry −Φ_{IJ̄} with in-degree ≥ 1, out-degree ≥ 1 and total
//! degree ≥ 3; hollow vertices carry Ψ_{IJ̄} with total degree ≥ 1. The ħ
//! grade is χ(Γ) = #edges − #solid, and #edges ≤ 3χ makes each grade finite.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::Result;
use crate::kahler::JetContext;
use crate::laplace::SlotFn;
use crate::multi_index::MultiIndex;
use crate::scalar::Ring;
use crate::series::HbarSeries;

/// Vertex kinds. L and R are the special boundary vertices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum VertexKind {
    L,
    R,
    Solid,
    Hollow,
}

/// A graph shape: vertex kinds plus the multiplicity matrix of oriented edges
/// (`adj[u][v]` = number of edges u → v, self-loops on the diagonal).
/// Vertices 0 and 1 are always L and R.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Graph {
    pub kinds: Vec<VertexKind>,
    pub adj: Vec<Vec<u8>>,
}

impl Graph {
    pub fn vertex_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn edge_count(&self) -> u32 {
        self.adj.iter().flatten().map(|&m| m as u32).sum()
    }

    pub fn solid_count(&self) -> u32 {
        self.kinds.iter().filter(|k| **k == VertexKind::Solid).count() as u32
    }

    /// ħ grade χ(Γ) = #edges − #solid.
    pub fn chi(&self) -> u32 {
        self.edge_count() - self.solid_count()
    }

    pub fn out_degree(&self, v: usize) -> u32 {
        self.adj[v].iter().map(|&m| m as u32).sum()
    }

    pub fn in_degree(&self, v: usize) -> u32 {
        self.adj.iter().map(|row| row[v] as u32).sum()
    }

    /// Structural constraints of the graph class.
    pub fn is_valid(&self) -> bool {
        if self.kinds.first() != Some(&VertexKind::L) || self.kinds.get(1) != Some(&VertexKind::R) {
            return false;
        }
        for (v, kind) in self.kinds.iter().enumerate() {
            let (ind, outd) = (self.in_degree(v), self.out_degree(v));
            let ok = match kind {
                VertexKind::L => ind == 0,
                VertexKind::R => outd == 0,
                VertexKind::Solid => ind >= 1 && outd >= 1 && ind + outd >= 3,
                VertexKind::Hollow => ind + outd >= 1,
            };
            if !ok {
                return false;
            }
        }
        self.edge_count() <= 3 * self.chi()
    }

    /// Stable interior coloring: start from (kind, in, out) and refine by
    /// neighbor color multisets until fixed. L and R keep pinned colors.
    fn refined_colors(&self) -> Vec<u64> {
        let nv = self.vertex_count();
        let mut colors: Vec<u64> = (0..nv)
            .map(|v| match self.kinds[v] {
                VertexKind::L => 0,
                VertexKind::R => 1,
                VertexKind::Solid => {
                    2 | ((self.in_degree(v) as u64) << 8) | ((self.out_degree(v) as u64) << 24)
                }
                VertexKind::Hollow => {
                    3 | ((self.in_degree(v) as u64) << 8) | ((self.out_degree(v) as u64) << 24)
                }
            })
            .collect();
        for _ in 0..nv {
            let mut sigs: Vec<(u64, Vec<(u64, u8, u8)>)> = Vec::with_capacity(nv);
            for v in 0..nv {
                let mut s: Vec<(u64, u8, u8)> = (0..nv)
                    .filter(|&u| self.adj[v][u] > 0 || self.adj[u][v] > 0)
                    .map(|u| (colors[u], self.adj[v][u], self.adj[u][v]))
                    .collect();
                s.sort_unstable();
                sigs.push((colors[v], s));
            }
            let mut uniq = sigs.clone();
            uniq.sort();
            uniq.dedup();
            let next: Vec<u64> =
                sigs.iter().map(|s| uniq.binary_search(s).unwrap() as u64).collect();
            if next == colors {
                break;
            }
            colors = next;
        }
        colors
    }

    /// Vertex classes by stable color, in color order. L and R have pinned
    /// unique colors, so they are never permuted with anything.
    fn color_classes(&self) -> Vec<Vec<usize>> {
        let colors = self.refined_colors();
        let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for v in 0..self.vertex_count() {
            classes.entry(colors[v]).or_default().push(v);
        }
        classes.into_values().collect()
    }

    /// Canonical byte key under kind-preserving relabelings (L, R pinned by
    /// their unique kinds). Isomorphic graphs get equal keys. Works for any
    /// vertex arrangement, including component subgraphs.
    pub fn canonical_key(&self) -> Vec<u8> {
        let mut it = OrderingIter::new(self.color_classes());
        let mut best: Option<Vec<u8>> = None;
        while let Some(perm) = it.next_perm() {
            let enc = self.encode_under(&perm);
            if best.as_ref().map_or(true, |b| enc < *b) {
                best = Some(enc);
            }
        }
        best.expect("at least the identity ordering")
    }

    fn encode_under(&self, perm: &[usize]) -> Vec<u8> {
        let nv = perm.len();
        let mut out = Vec::with_capacity(nv * (nv + 1));
        for &v in perm {
            out.push(match self.kinds[v] {
                VertexKind::L => 0,
                VertexKind::R => 1,
                VertexKind::Solid => 2,
                VertexKind::Hollow => 3,
            });
        }
        for &u in perm {
            for &v in perm {
                out.push(self.adj[u][v]);
            }
        }
        out
    }

    fn matrix_invariant(&self, perm: &[usize]) -> bool {
        let nv = perm.len();
        for u in 0..nv {
            for v in 0..nv {
                if self.adj[perm[u]][perm[v]] != self.adj[u][v] {
                    return false;
                }
            }
        }
        true
    }

    /// |Aut(Γ)|: kind-preserving vertex permutations fixing L and R that
    /// leave the multiplicity matrix invariant, times Π m_{uv}! for parallel
    /// edges (an oriented self-loop contributes no extra factor).
    pub fn aut_size(&self) -> u64 {
        let classes = self.color_classes();
        // reference layout: classes flattened in color order
        let reference: Vec<usize> = classes.iter().flatten().copied().collect();
        let nv = self.vertex_count();
        let mut vert_auts = 0u64;
        let mut sigma = alloc::vec![0usize; nv];
        let mut it = OrderingIter::new(classes);
        while let Some(perm) = it.next_perm() {
            // candidate automorphism σ maps each class onto itself
            for (p, &v) in reference.iter().enumerate() {
                sigma[v] = perm[p];
            }
            if self.matrix_invariant(&sigma) {
                vert_auts += 1;
            }
        }
        let mut parallel = 1u64;
        for row in &self.adj {
            for &m in row {
                parallel *= FACT[m as usize];
            }
        }
        vert_auts * parallel
    }

    /// Vertex sets of connected components; isolated L or R are their own
    /// components.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let nv = self.vertex_count();
        let mut seen = alloc::vec![false; nv];
        let mut out = Vec::new();
        for start in 0..nv {
            if seen[start] {
                continue;
            }
            let mut stack = alloc::vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for w in 0..nv {
                    if !seen[w] && (self.adj[v][w] > 0 || self.adj[w][v] > 0) {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// A standalone graph carrying exactly the vertices of one component,
    /// used as a cache key and evaluation unit.
    pub fn component_subgraph(&self, comp: &[usize]) -> Graph {
        let kinds: Vec<VertexKind> = comp.iter().map(|&v| self.kinds[v]).collect();
        let nv = comp.len();
        let mut adj = alloc::vec![alloc::vec![0u8; nv]; nv];
        for (a, &u) in comp.iter().enumerate() {
            for (b, &v) in comp.iter().enumerate() {
                adj[a][b] = self.adj[u][v];
            }
        }
        Graph { kinds, adj }
    }
}

/// Iterator over orderings of interior vertices compatible with the refined
/// coloring: the cartesian product of per-class permutations.
struct OrderingIter {
    classes: Vec<Vec<usize>>,
    state: Vec<Vec<usize>>,
    done: bool,
}

impl OrderingIter {
    fn new(classes: Vec<Vec<usize>>) -> Self {
        let state = classes.iter().map(|c| (0..c.len()).collect()).collect();
        OrderingIter { classes, state, done: false }
    }

    fn next_perm(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let mut perm = Vec::new();
        for (class, idxs) in self.classes.iter().zip(&self.state) {
            perm.extend(idxs.iter().map(|&i| class[i]));
        }
        let mut pos = 0;
        loop {
            if pos == self.state.len() {
                self.done = true;
                break;
            }
            if next_permutation(&mut self.state[pos]) {
                break;
            }
            pos += 1;
        }
        Some(perm)
    }
}

fn next_permutation(arr: &mut [usize]) -> bool {
    if arr.len() < 2 {
        return false;
    }
    let mut i = arr.len() - 1;
    while i > 0 && arr[i - 1] >= arr[i] {
        i -= 1;
    }
    if i == 0 {
        arr.sort_unstable();
        return false;
    }
    let mut j = arr.len() - 1;
    while arr[j] <= arr[i - 1] {
        j -= 1;
    }
    arr.swap(i - 1, j);
    arr[i..].reverse();
    true
}

const FACT: [u64; 16] = {
    let mut f = [1u64; 16];
    let mut i = 1;
    while i < 16 {
        f[i] = f[i - 1] * i as u64;
        i += 1;
    }
    f
};

/// Complete duplicate-free enumeration of the graph class at grade χ = k,
/// vacuum (disconnected) parts included.
pub fn enumerate_graphs(k: u32) -> Vec<Graph> {
    if k == 0 {
        return alloc::vec![Graph {
            kinds: alloc::vec![VertexKind::L, VertexKind::R],
            adj: alloc::vec![alloc::vec![0, 0], alloc::vec![0, 0]],
        }];
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for edges in k..=3 * k {
        let solids = edges - k;
        for solid_degs in degree_multisets(solids as usize, edges, true) {
            let s_in: u32 = solid_degs.iter().map(|d| d.0).sum();
            let s_out: u32 = solid_degs.iter().map(|d| d.1).sum();
            if s_in > edges || s_out > edges {
                continue;
            }
            let max_h = (2 * edges).saturating_sub(3 * solids) as usize;
            for hcount in 0..=max_h {
                for hollow_degs in degree_multisets(hcount, edges, false) {
                    let h_in: u32 = hollow_degs.iter().map(|d| d.0).sum();
                    let h_out: u32 = hollow_degs.iter().map(|d| d.1).sum();
                    if s_in + h_in > edges || s_out + h_out > edges {
                        continue;
                    }
                    let d_r = edges - s_in - h_in;
                    let d_l = edges - s_out - h_out;
                    emit_matrices(d_l, d_r, &solid_degs, &hollow_degs, &mut seen, &mut out);
                }
            }
        }
    }
    debug_assert!(out.iter().all(|g| g.is_valid() && g.chi() == k));
    out
}

/// Non-decreasing multisets of degree pairs for `count` vertices. Solid
/// vertices need in, out ≥ 1 and in + out ≥ 3; hollow need in + out ≥ 1.
fn degree_multisets(count: usize, edges: u32, solid: bool) -> Vec<Vec<(u32, u32)>> {
    let mut singles = Vec::new();
    for din in 0..=edges {
        for dout in 0..=edges {
            let ok = if solid {
                din >= 1 && dout >= 1 && din + dout >= 3
            } else {
                din + dout >= 1
            };
            if ok {
                singles.push((din, dout));
            }
        }
    }
    fn rec(
        singles: &[(u32, u32)],
        from: usize,
        left: usize,
        in_left: u32,
        out_left: u32,
        cur: &mut Vec<(u32, u32)>,
        out: &mut Vec<Vec<(u32, u32)>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for (idx, &(a, b)) in singles.iter().enumerate().skip(from) {
            if a <= in_left && b <= out_left {
                cur.push((a, b));
                rec(singles, idx, left - 1, in_left - a, out_left - b, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&singles, 0, count, edges, edges, &mut Vec::new(), &mut out);
    out
}

fn emit_matrices(
    d_l: u32,
    d_r: u32,
    solid_degs: &[(u32, u32)],
    hollow_degs: &[(u32, u32)],
    seen: &mut BTreeSet<Vec<u8>>,
    out: &mut Vec<Graph>,
) {
    let ns = solid_degs.len();
    let nh = hollow_degs.len();
    let nv = 2 + ns + nh;
    let mut kinds = alloc::vec![VertexKind::L, VertexKind::R];
    kinds.extend(core::iter::repeat(VertexKind::Solid).take(ns));
    kinds.extend(core::iter::repeat(VertexKind::Hollow).take(nh));
    let mut row_sums = alloc::vec![d_l, 0];
    let mut col_sums = alloc::vec![0, d_r];
    for d in solid_degs.iter().chain(hollow_degs) {
        row_sums.push(d.1);
        col_sums.push(d.0);
    }
    let mut adj = alloc::vec![alloc::vec![0u8; nv]; nv];
    let mut col_left = col_sums;
    fill_rows(0, 0, &row_sums, &mut col_left, &mut adj, &mut |adj| {
        let g = Graph { kinds: kinds.clone(), adj: adj.to_vec() };
        if g.is_valid() {
            let key = g.canonical_key();
            if seen.insert(key) {
                out.push(g);
            }
        }
    });
}

fn fill_rows(
    row: usize,
    col: usize,
    row_sums: &[u32],
    col_left: &mut [u32],
    adj: &mut [Vec<u8>],
    sink: &mut impl FnMut(&[Vec<u8>]),
) {
    let nv = row_sums.len();
    if row == nv {
        if col_left.iter().all(|&c| c == 0) {
            sink(adj);
        }
        return;
    }
    let row_left: u32 = row_sums[row] - adj[row].iter().map(|&m| m as u32).sum::<u32>();
    if col == nv {
        if row_left == 0 {
            fill_rows(row + 1, 0, row_sums, col_left, adj, sink);
        }
        return;
    }
    // edges into L (column 0) and out of R (row 1) never exist
    let max_here = if col == 0 || row == 1 { 0 } else { row_left.min(col_left[col]) };
    for m in 0..=max_here {
        adj[row][col] = m as u8;
        col_left[col] -= m;
        fill_rows(row, col + 1, row_sums, col_left, adj, sink);
        col_left[col] += m;
        adj[row][col] = 0;
    }
}

/// Index contraction of one connected piece by frontier dynamic programming:
/// vertices are absorbed one at a time, keeping a table of partial sums
/// indexed by the dangling edge indices. Exponential only in the frontier
/// width, which stays tiny for this graph class.
fn component_weight<R: Ring>(
    g: &Graph,
    comp: &[usize],
    ctx: &JetContext<R>,
    f1: &dyn SlotFn<R>,
    f2: &dyn SlotFn<R>,
) -> R {
    let n = ctx.n();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for &u in comp {
        for &v in comp {
            for _ in 0..g.adj[u][v] {
                edges.push((u, v));
            }
        }
    }
    // greedy order: next vertex = most incident edges already dangling
    let mut order: Vec<usize> = Vec::with_capacity(comp.len());
    let mut remaining: Vec<usize> = comp.to_vec();
    while !remaining.is_empty() {
        let score = |v: usize| -> usize {
            edges
                .iter()
                .filter(|&&(a, b)| {
                    (a == v && order.contains(&b)) || (b == v && order.contains(&a))
                })
                .count()
        };
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(_, &v)| (score(v), usize::MAX - v))
            .unwrap();
        order.push(remaining.remove(pos));
    }
    // states: dangling edge ids (sorted) -> accumulated value per index tuple
    let mut dangling: Vec<usize> = Vec::new();
    let mut states: BTreeMap<Vec<u8>, R> = BTreeMap::new();
    states.insert(Vec::new(), R::one());
    for &v in &order {
        let own: Vec<usize> = (0..edges.len())
            .filter(|&e| edges[e].0 == v || edges[e].1 == v)
            .collect();
        // slots this vertex owns: for each incident edge, the v-side index
        // (both sides for a self-loop)
        struct Slot {
            edge: usize,
            head_side: bool, // owning the y (head) side
        }
        let mut slots: Vec<Slot> = Vec::new();
        for &e in &own {
            let (a, b) = edges[e];
            if a == v {
                slots.push(Slot { edge: e, head_side: false });
            }
            if b == v {
                slots.push(Slot { edge: e, head_side: true });
            }
        }
        let mut next: BTreeMap<Vec<u8>, R> = BTreeMap::new();
        let mut assign = alloc::vec![0u8; slots.len()];
        loop {
            // vertex multi-indices from this assignment
            let mut mi_in = MultiIndex::zero(n);
            let mut mi_out = MultiIndex::zero(n);
            for (s, slot) in slots.iter().enumerate() {
                if slot.head_side {
                    mi_in = mi_in.add(&MultiIndex::unit(n, assign[s] as usize));
                } else {
                    mi_out = mi_out.add(&MultiIndex::unit(n, assign[s] as usize));
                }
            }
            let factor = match g.kinds[v] {
                VertexKind::L => f1.deriv(&MultiIndex::zero(n), &mi_out),
                VertexKind::R => f2.deriv(&mi_in, &MultiIndex::zero(n)),
                VertexKind::Solid => ctx.phi_entry(&mi_in, &mi_out).neg(),
                VertexKind::Hollow => ctx.psi_entry(&mi_in, &mi_out),
            };
            if !factor.is_zero() {
                // close self-loops immediately
                let mut base = factor;
                let mut closed = true;
                for (s, slot) in slots.iter().enumerate() {
                    if slot.head_side {
                        if let Some(t) = slots.iter().position(|o| !o.head_side && o.edge == slot.edge)
                        {
                            let h = &ctx.inverse_metric()[assign[s] as usize][assign[t] as usize];
                            base = base.mul(h);
                            if base.is_zero() {
                                closed = false;
                                break;
                            }
                        }
                    }
                }
                if closed && !base.is_zero() {
                    for (key, acc) in &states {
                        let mut w = acc.mul(&base);
                        if w.is_zero() {
                            continue;
                        }
                        // close edges whose other side is already dangling
                        let mut new_key_pairs: Vec<(usize, u8)> = dangling
                            .iter()
                            .copied()
                            .zip(key.iter().copied())
                            .collect();
                        let mut ok = true;
                        for (s, slot) in slots.iter().enumerate() {
                            // self-loops already handled
                            if slots.iter().any(|o| o.edge == slot.edge && o.head_side != slot.head_side)
                            {
                                continue;
                            }
                            if let Some(pos) =
                                new_key_pairs.iter().position(|&(e, _)| e == slot.edge)
                            {
                                let (_, other_idx) = new_key_pairs.remove(pos);
                                // h^{i j̄}: head index first
                                let (i_idx, j_idx) = if slot.head_side {
                                    (assign[s] as usize, other_idx as usize)
                                } else {
                                    (other_idx as usize, assign[s] as usize)
                                };
                                w = w.mul(&ctx.inverse_metric()[i_idx][j_idx]);
                                if w.is_zero() {
                                    ok = false;
                                    break;
                                }
                            } else {
                                new_key_pairs.push((slot.edge, assign[s]));
                            }
                        }
                        if ok && !w.is_zero() {
                            new_key_pairs.sort_unstable();
                            let key: Vec<u8> = new_key_pairs.iter().map(|&(_, i)| i).collect();
                            match next.get_mut(&key) {
                                Some(cur) => *cur = cur.add(&w),
                                None => {
                                    next.insert(key, w);
                                }
                            }
                        }
                    }
                }
            }
            // advance assignment
            let mut pos = 0;
            loop {
                if pos == assign.len() {
                    break;
                }
                assign[pos] += 1;
                if (assign[pos] as usize) < n {
                    break;
                }
                assign[pos] = 0;
                pos += 1;
            }
            if pos == assign.len() {
                break;
            }
        }
        // update dangling edge list: previous dangling minus closed plus new
        let mut new_dangling: Vec<usize> = dangling
            .iter()
            .copied()
            .filter(|e| edges[*e].0 != v && edges[*e].1 != v)
            .collect();
        for &e in &own {
            let (a, b) = edges[e];
            if a == b {
                continue; // self-loop, closed at v
            }
            let other = if a == v { b } else { a };
            if !order[..order.iter().position(|&x| x == v).unwrap()].contains(&other) {
                new_dangling.push(e);
            }
        }
        new_dangling.sort_unstable();
        new_dangling.dedup();
        dangling = new_dangling;
        states = next;
        if states.is_empty() {
            return R::zero();
        }
    }
    debug_assert!(dangling.is_empty());
    states.remove(&Vec::new()).unwrap_or_else(R::zero)
}

/// Partition function W_Γ with its symmetry data.
pub struct GraphWeight<R: Ring> {
    pub weight: R,
    pub aut: u64,
    pub chi: u32,
}

/// Contract one graph against a context and boundary slots.
pub fn graph_weight<R: Ring>(
    g: &Graph,
    ctx: &JetContext<R>,
    f1: &dyn SlotFn<R>,
    f2: &dyn SlotFn<R>,
) -> GraphWeight<R> {
    let mut w = R::one();
    for comp in g.components() {
        let cw = component_weight(g, &comp, ctx, f1, f2);
        w = w.mul(&cw);
        if w.is_zero() {
            break;
        }
    }
    GraphWeight { weight: w, aut: g.aut_size(), chi: g.chi() }
}

/// One graph with evaluation metadata precomputed at enumeration time.
pub struct PreparedGraph {
    pub graph: Graph,
    pub aut: u64,
    /// Interned component ids with their vertex sets.
    pub comps: Vec<(u32, Vec<usize>)>,
}

/// All shapes of one grade with interned component ids.
pub struct GradeShapes {
    pub graphs: Vec<PreparedGraph>,
    pub component_count: u32,
}

fn prepare(graphs: Vec<Graph>) -> GradeShapes {
    let mut intern: BTreeMap<Vec<u8>, u32> = BTreeMap::new();
    let mut out = Vec::with_capacity(graphs.len());
    for g in graphs {
        let aut = g.aut_size();
        let mut comps = Vec::new();
        for comp in g.components() {
            let key = g.component_subgraph(&comp).canonical_key();
            let next_id = intern.len() as u32;
            let id = *intern.entry(key).or_insert(next_id);
            comps.push((id, comp));
        }
        out.push(PreparedGraph { graph: g, aut, comps });
    }
    GradeShapes { graphs: out, component_count: intern.len() as u32 }
}

/// The non-normalized product as the diagram sum Σ_Γ ħ^{χ(Γ)} W_Γ / |Aut(Γ)|.
/// Distinct components (by canonical key) are contracted once per call.
pub fn bullet_via_graphs<R: Ring>(
    ctx: &JetContext<R>,
    f1: &dyn SlotFn<R>,
    f2: &dyn SlotFn<R>,
    k: u32,
) -> Result<HbarSeries<R>> {
    ctx.require_order_for(k)?;
    let mut out = HbarSeries::zero_to_order(k);
    for grade in 0..=k {
        let shapes = shapes(grade);
        let mut cache: Vec<Option<R>> = alloc::vec![None; shapes.component_count as usize];
        let mut acc = R::zero();
        for pg in &shapes.graphs {
            let mut w = R::one();
            for (id, comp) in &pg.comps {
                let slot = &mut cache[*id as usize];
                let cw = match slot {
                    Some(v) => v.clone(),
                    None => {
                        let v = component_weight(&pg.graph, comp, ctx, f1, f2);
                        *slot = Some(v.clone());
                        v
                    }
                };
                w = w.mul(&cw);
                if w.is_zero() {
                    break;
                }
            }
            if !w.is_zero() {
                acc = acc.add(&w.scale_ratio(1, pg.aut as i64));
            }
        }
        out.set_hbar(grade, acc);
    }
    out.assert_integer_grading()?;
    Ok(out)
}

/// Cached prepared shapes per grade (shapes carry no dimension; n enters only
/// in weights). Single-writer fill, shared read-only afterwards.
pub fn shapes(k: u32) -> alloc::sync::Arc<GradeShapes> {
    use alloc::sync::Arc;
    static CACHE: shape_cache::ShapeCache = shape_cache::ShapeCache::new();
    CACHE.get_or_fill(k, || Arc::new(prepare(enumerate_graphs(k))))
}

mod shape_cache {
    use super::GradeShapes;
    use alloc::sync::Arc;
    use alloc::vec::Vec;
    use core::sync::atomic::{AtomicBool, Ordering};

    /// Tiny spin-locked per-grade cache; enumeration is rare and cheap next
    /// to weight evaluation, so contention is immaterial.
    pub struct ShapeCache {
        lock: AtomicBool,
        slots: core::cell::UnsafeCell<Option<Vec<Option<Arc<GradeShapes>>>>>,
    }

    // safety: `slots` is only touched while `lock` is held
    unsafe impl Sync for ShapeCache {}

    impl ShapeCache {
        pub const fn new() -> Self {
            ShapeCache { lock: AtomicBool::new(false), slots: core::cell::UnsafeCell::new(None) }
        }

        pub fn get_or_fill(
            &self,
            k: u32,
            fill: impl FnOnce() -> Arc<GradeShapes>,
        ) -> Arc<GradeShapes> {
            while self.lock.swap(true, Ordering::Acquire) {
                core::hint::spin_loop();
            }
            let slots = unsafe { &mut *self.slots.get() };
            let vec = slots.get_or_insert_with(Vec::new);
            if vec.len() <= k as usize {
                vec.resize(k as usize + 1, None);
            }
            let out = match &vec[k as usize] {
                Some(v) => v.clone(),
                None => {
                    let v = fill();
                    vec[k as usize] = Some(v.clone());
                    v
                }
            };
            self.lock.store(false, Ordering::Release);
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::TruncatedJet;
    use crate::kahler::{build_context, PotentialModel};
    use crate::laplace::{bullet_slots, DeltaSlot, OneSlot, ValueSlots};
    use crate::scalar::ExactScalar as S;
    use alloc::vec;

    fn mi(v: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(v)
    }

    #[test]
    fn grade_zero_is_bare_pair() {
        let gs = enumerate_graphs(0);
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].edge_count(), 0);
        assert_eq!(gs[0].vertex_count(), 2);
    }

    #[test]
    fn grade_one_census() {
        let gs = enumerate_graphs(1);
        // exactly one graph touches both L and R: the single edge L→R
        let touching: Vec<&Graph> =
            gs.iter().filter(|g| g.out_degree(0) > 0 && g.in_degree(1) > 0).collect();
        assert_eq!(touching.len(), 1);
        assert_eq!(touching[0].edge_count(), 1);
        // vacuum pieces include the hollow self-loop (E=1, S=0) and the
        // double-self-loop quartic solid vertex (E=2, S=1)
        assert!(gs.iter().any(|g| {
            g.kinds.len() == 3
                && g.kinds[2] == VertexKind::Hollow
                && g.adj[2][2] == 1
                && g.edge_count() == 1
        }));
        assert!(gs
            .iter()
            .any(|g| g.kinds.len() == 3 && g.kinds[2] == VertexKind::Solid && g.adj[2][2] == 2));
        // 5 graphs meeting L or R plus 7 vacuum classes
        assert_eq!(gs.len(), 12);
    }

    #[test]
    fn aut_sizes() {
        let g = Graph {
            kinds: vec![VertexKind::L, VertexKind::R],
            adj: vec![vec![0, 1], vec![0, 0]],
        };
        assert_eq!(g.aut_size(), 1);
        let g2 = Graph {
            kinds: vec![VertexKind::L, VertexKind::R],
            adj: vec![vec![0, 2], vec![0, 0]],
        };
        assert_eq!(g2.aut_size(), 2);
        // two cubic solids joined by 2 parallel edges + 1 edge each to L and R
        let g3 = Graph {
            kinds: vec![VertexKind::L, VertexKind::R, VertexKind::Solid, VertexKind::Solid],
            adj: vec![vec![0, 0, 1, 0], vec![0, 0, 0, 0], vec![0, 0, 0, 2], vec![0, 1, 0, 0]],
        };
        assert_eq!(g3.aut_size(), 2);
        // oriented self-loop contributes no factor 2
        let g4 = Graph {
            kinds: vec![VertexKind::L, VertexKind::R, VertexKind::Hollow],
            adj: vec![vec![0; 3], vec![0; 3], vec![0, 0, 1]],
        };
        assert_eq!(g4.aut_size(), 1);
    }

    /// Brute-force |Aut|: every kind-preserving interior permutation (no
    /// color refinement) checked against the multiplicity matrix.
    fn brute_aut(g: &Graph) -> u64 {
        fn perms(items: &[usize]) -> Vec<Vec<usize>> {
            if items.is_empty() {
                return vec![Vec::new()];
            }
            let mut out = Vec::new();
            for (i, &x) in items.iter().enumerate() {
                let mut rest = items.to_vec();
                rest.remove(i);
                for mut tail in perms(&rest) {
                    let mut v = vec![x];
                    v.append(&mut tail);
                    out.push(v);
                }
            }
            out
        }
        let interior: Vec<usize> = (2..g.vertex_count()).collect();
        let mut count = 0u64;
        for perm in perms(&interior) {
            let mut full = vec![0usize, 1usize];
            full.extend(perm);
            let kinds_ok = (0..g.vertex_count()).all(|v| g.kinds[full[v]] == g.kinds[v]);
            if kinds_ok && g.matrix_invariant(&full) {
                count += 1;
            }
        }
        let mut parallel = 1u64;
        for row in &g.adj {
            for &m in row {
                parallel *= FACT[m as usize];
            }
        }
        count * parallel
    }

    #[test]
    fn aut_agrees_with_brute_force() {
        for k in 0..=2 {
            for g in enumerate_graphs(k) {
                if g.vertex_count() <= 6 && g.edge_count() <= 6 {
                    assert_eq!(g.aut_size(), brute_aut(&g), "{g:?}");
                }
            }
        }
    }

    #[test]
    fn canonical_key_sound() {
        let gs = enumerate_graphs(2);
        for g in gs.iter() {
            let nv = g.vertex_count();
            if nv <= 3 {
                continue;
            }
            // rotate interior labels: an isomorphic copy
            let mut perm: Vec<usize> = (0..nv).collect();
            perm[2..].rotate_left(1);
            let mut adj = vec![vec![0u8; nv]; nv];
            for a in 0..nv {
                for b in 0..nv {
                    adj[a][b] = g.adj[perm[a]][perm[b]];
                }
            }
            let kinds: Vec<VertexKind> = perm.iter().map(|&v| g.kinds[v]).collect();
            let relabeled = Graph { kinds, adj };
            if relabeled.kinds[0] == VertexKind::L && relabeled.kinds[1] == VertexKind::R {
                assert_eq!(relabeled.canonical_key(), g.canonical_key());
            }
        }
        // enumeration already deduplicates: keys pairwise distinct
        let keys: BTreeSet<Vec<u8>> = gs.iter().map(|g| g.canonical_key()).collect();
        assert_eq!(keys.len(), gs.len());
    }

    #[test]
    fn grading_bounds_hold() {
        for k in 0..=3u32 {
            for g in enumerate_graphs(k) {
                assert!(g.is_valid());
                assert_eq!(g.chi(), k);
                assert!(g.edge_count() <= 3 * k);
            }
        }
    }

    #[test]
    fn single_edge_weight_flat() {
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &[S::zero()], 8).unwrap();
        let g = Graph {
            kinds: vec![VertexKind::L, VertexKind::R],
            adj: vec![vec![0, 1], vec![0, 0]],
        };
        let f1 = TruncatedJet::monomial(1, 4, mi(&[0]), mi(&[1]), S::one()); // z̄
        let f2 = TruncatedJet::monomial(1, 4, mi(&[1]), mi(&[0]), S::one()); // z
        let w = graph_weight(&g, &ctx, &ValueSlots(&f1), &ValueSlots(&f2));
        assert_eq!(w.weight, S::one());
        assert_eq!(w.chi, 1);
        assert_eq!(w.aut, 1);
    }

    #[test]
    fn hollow_self_loop_weight_is_2a() {
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &[S::zero()], 8).unwrap();
        let g = Graph {
            kinds: vec![VertexKind::L, VertexKind::R, VertexKind::Hollow],
            adj: vec![vec![0; 3], vec![0; 3], vec![0, 0, 1]],
        };
        let w = graph_weight(&g, &ctx, &OneSlot, &OneSlot);
        assert_eq!(w.weight, ctx.a_const().scale_ratio(2, 1));
    }

    #[test]
    fn solid_vertices_vanish_on_flat() {
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &[S::zero()], 8).unwrap();
        for g in enumerate_graphs(1) {
            if g.solid_count() > 0 {
                let w = graph_weight(&g, &ctx, &OneSlot, &OneSlot);
                assert!(w.weight.is_zero());
            }
        }
    }

    #[test]
    fn engines_agree_on_fubini_study() {
        let ctx = build_context(&PotentialModel::FubiniStudy1D, &[S::zero()], 10).unwrap();
        let f1 = TruncatedJet::monomial(1, 8, mi(&[0]), mi(&[1]), S::one());
        let f2 = TruncatedJet::monomial(1, 8, mi(&[1]), mi(&[0]), S::one());
        let a = bullet_slots(&ctx, &ValueSlots(&f1), &ValueSlots(&f2), 3).unwrap();
        let b = bullet_via_graphs(&ctx, &ValueSlots(&f1), &ValueSlots(&f2), 3).unwrap();
        assert_eq!(a.hbar_coeffs(), b.hbar_coeffs());
        // ħ¹ coefficient = h⁻¹(0) = 1 (the vacuum part A·(f1 f2)(0) vanishes)
        assert_eq!(b.hbar_coeff(1), S::one());
        // 1•1 through ħ¹ is 1 + ħ A
        let e = bullet_via_graphs(&ctx, &OneSlot, &OneSlot, 1).unwrap();
        assert_eq!(e.hbar_coeff(0), S::one());
        assert_eq!(e.hbar_coeff(1), ctx.a_const());
    }

    #[test]
    fn flat_ladder_via_graphs() {
        let ctx = build_context(&PotentialModel::Flat { n: 1 }, &[S::zero()], 12).unwrap();
        let mut f1 = TruncatedJet::zero_jet(1, 10);
        let mut f2 = TruncatedJet::zero_jet(1, 10);
        for d in 0..=8u8 {
            f1.add_term(mi(&[0]), mi(&[d]), S::from_ratio(1, 1 + d as i64));
            f2.add_term(mi(&[d]), mi(&[0]), S::from_ratio(2, 1 + 2 * d as i64));
        }
        let b = bullet_via_graphs(&ctx, &ValueSlots(&f1), &ValueSlots(&f2), 4).unwrap();
        for k in 0..=4u32 {
            let d1 = f1.derivative(&mi(&[0]), &mi(&[k as u8])).value();
            let d2 = f2.derivative(&mi(&[k as u8]), &mi(&[0])).value();
            let expect = d1.mul(&d2).scale_ratio(1, FACT[k as usize] as i64);
            assert_eq!(b.hbar_coeff(k), expect, "k={k}");
        }
    }

    #[test]
    fn matches_independent_reference_tables_via_graphs() {
        let (ctx, tables) = crate::test_fixtures::load_1d();
        for k in 0..=3u32 {
            for ((j, i), c) in &tables[k as usize] {
                let f1 = DeltaSlot { i: mi(&[0]), j: j.clone() };
                let f2 = DeltaSlot { i: i.clone(), j: mi(&[0]) };
                let b = bullet_via_graphs(&ctx, &f1, &f2, k).unwrap();
                assert_eq!(&b.hbar_coeff(k), c, "k={k} J={j:?} I={i:?}");
            }
        }
    }
}
