//! Width measures: treewidth, treewidth modulo scopes, and tuple overlap.
//!
//! Treewidth is computed by the classic elimination-order dynamic program
//! over vertex subsets. Treewidth modulo scopes allows arbitrarily large bags
//! as long as they are scopes (element sets of relation tuples, which are
//! always cliques of the Gaifman graph); it is computed by a memoized
//! separator recursion and is deliberately cross-checkable against a slow
//! chordal-supergraph oracle.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structures::{RelationalStructure, ValuedStructure};

/// An undirected graph over named vertices, adjacency as bitmasks (n <= 32).
#[derive(Debug, Clone)]
pub struct Graph {
    pub names: Vec<String>,
    pub adj: Vec<u32>,
}

impl Graph {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() > 32 {
            return Err(Error::ResourceLimit(
                "graphs are limited to 32 vertices".into(),
            ));
        }
        let n = names.len();
        Ok(Graph {
            names,
            adj: vec![0; n],
        })
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u] |= 1 << v;
            self.adj[v] |= 1 << u;
        }
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] & (1 << v) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.size() {
            for v in u + 1..self.size() {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Connected components as bitmasks.
    pub fn components(&self) -> Vec<u32> {
        let n = self.size();
        let mut seen = 0u32;
        let mut out = Vec::new();
        for v in 0..n {
            if seen & (1 << v) != 0 {
                continue;
            }
            let mut comp = 1u32 << v;
            loop {
                let mut grown = comp;
                for u in 0..n {
                    if comp & (1 << u) != 0 {
                        grown |= self.adj[u];
                    }
                }
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            seen |= comp;
            out.push(comp);
        }
        out
    }
}

/// The Gaifman graph of a relational structure: distinct elements sharing a
/// tuple are adjacent.
pub fn gaifman(rel: &RelationalStructure) -> Result<Graph> {
    let mut g = Graph::new(rel.universe.clone())?;
    for r in &rel.relations {
        for t in r {
            for (i, &u) in t.iter().enumerate() {
                for &v in &t[i + 1..] {
                    g.add_edge(u, v);
                }
            }
        }
    }
    Ok(g)
}

/// The scopes of a relational structure: the element set of every tuple,
/// as bitmasks.
pub fn scopes(rel: &RelationalStructure) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for r in &rel.relations {
        for t in r {
            let mut mask = 0u32;
            for &e in t {
                mask |= 1 << e;
            }
            out.insert(mask);
        }
    }
    out
}

/// A rooted forest of bags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub bags: Vec<BagJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BagJson {
    pub id: usize,
    pub vertices: Vec<String>,
    pub parent: Option<usize>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| b.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Width counting only bags that are not scopes; zero if every bag is a
    /// scope.
    pub fn width_modulo_scopes(&self, scopes: &BTreeSet<u32>) -> usize {
        self.bags
            .iter()
            .filter(|b| {
                let mask = b.iter().fold(0u32, |m, &v| m | 1 << v);
                !scopes.contains(&mask)
            })
            .map(|b| b.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self, names: &[String]) -> DecompositionJson {
        DecompositionJson {
            bags: self
                .bags
                .iter()
                .enumerate()
                .map(|(i, b)| BagJson {
                    id: i,
                    vertices: b.iter().map(|&v| names[v].clone()).collect(),
                    parent: self.parent[i],
                })
                .collect(),
        }
    }

    pub fn from_json(json: &DecompositionJson, names: &[String]) -> Result<Self> {
        let n = json.bags.len();
        let mut bags = vec![Vec::new(); n];
        let mut parent = vec![None; n];
        for bag in &json.bags {
            if bag.id >= n {
                return Err(Error::Schema(format!("bag id {} out of range", bag.id)));
            }
            let verts: Vec<usize> = bag
                .vertices
                .iter()
                .map(|v| {
                    names
                        .iter()
                        .position(|x| x == v)
                        .ok_or_else(|| Error::UnknownElement(v.clone()))
                })
                .collect::<Result<_>>()?;
            bags[bag.id] = verts;
            if let Some(p) = bag.parent {
                if p >= n {
                    return Err(Error::Schema(format!("parent {p} out of range")));
                }
                parent[bag.id] = Some(p);
            }
        }
        Ok(TreeDecomposition { bags, parent })
    }
}

/// Checks the three decomposition axioms and returns
/// (width, width modulo scopes).
pub fn validate_decomposition(
    g: &Graph,
    td: &TreeDecomposition,
    sc: &BTreeSet<u32>,
) -> Result<(usize, usize)> {
    let nb = td.bags.len();
    if nb == 0 {
        return Err(Error::NotADecomposition("no bags".into()));
    }
    // Parent links must form a forest.
    for start in 0..nb {
        let mut seen = vec![false; nb];
        let mut cur = Some(start);
        while let Some(i) = cur {
            if seen[i] {
                return Err(Error::NotADecomposition("cycle in parent links".into()));
            }
            seen[i] = true;
            cur = td.parent[i];
        }
    }
    // Tree adjacency.
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for i in 0..nb {
        if let Some(p) = td.parent[i] {
            nbrs[i].push(p);
            nbrs[p].push(i);
        }
    }
    // Coverage and connectivity per vertex.
    for v in 0..g.size() {
        let holding: Vec<usize> = (0..nb).filter(|&i| td.bags[i].contains(&v)).collect();
        if holding.is_empty() {
            return Err(Error::NotADecomposition(format!(
                "vertex {:?} is in no bag",
                g.names[v]
            )));
        }
        let mut reached = vec![false; nb];
        let mut stack = vec![holding[0]];
        reached[holding[0]] = true;
        while let Some(i) = stack.pop() {
            for &j in &nbrs[i] {
                if !reached[j] && td.bags[j].contains(&v) {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        if holding.iter().any(|&i| !reached[i]) {
            return Err(Error::NotADecomposition(format!(
                "bags holding {:?} are not connected",
                g.names[v]
            )));
        }
    }
    // Edge coverage.
    for (u, v) in g.edges() {
        if !(0..nb).any(|i| td.bags[i].contains(&u) && td.bags[i].contains(&v)) {
            return Err(Error::NotADecomposition(format!(
                "edge {:?}-{:?} not covered",
                g.names[u], g.names[v]
            )));
        }
    }
    Ok((td.width(), td.width_modulo_scopes(sc)))
}

/// Neighbors of `v` after eliminating the vertex set `s`: vertices outside
/// `s` reachable from `v` through `s`.
fn elim_neighbors(g: &Graph, s: u32, v: usize) -> u32 {
    let mut frontier = 1u32 << v;
    let mut seen = frontier;
    let mut result = 0u32;
    while frontier != 0 {
        let mut next = 0u32;
        for u in 0..g.size() {
            if frontier & (1 << u) != 0 {
                next |= g.adj[u] & !seen;
            }
        }
        seen |= next;
        result |= next & !s;
        frontier = next & s;
    }
    result & !(1 << v)
}

/// Exact treewidth with a witness decomposition, for graphs of at most 16
/// vertices.
pub fn treewidth(g: &Graph) -> Result<(usize, TreeDecomposition)> {
    let n = g.size();
    if n > 16 {
        return Err(Error::ResourceLimit(
            "exact treewidth is limited to 16 vertices".into(),
        ));
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut memo: HashMap<u32, usize> = HashMap::new();

    fn rec(g: &Graph, s: u32, full: u32, memo: &mut HashMap<u32, usize>) -> usize {
        if s == full {
            return 0;
        }
        if let Some(&v) = memo.get(&s) {
            return v;
        }
        let mut best = usize::MAX;
        for v in 0..g.size() {
            if s & (1 << v) == 0 {
                let q = elim_neighbors(g, s, v).count_ones() as usize;
                if q >= best {
                    continue;
                }
                let rest = rec(g, s | (1 << v), full, memo);
                best = best.min(q.max(rest));
            }
        }
        memo.insert(s, best);
        best
    }

    let width = rec(g, 0, full, &mut memo);

    // Reconstruct an optimal elimination order.
    let mut order = Vec::with_capacity(n);
    let mut s = 0u32;
    while s != full {
        let target = rec(g, s, full, &mut memo);
        for v in 0..n {
            if s & (1 << v) == 0 {
                let q = elim_neighbors(g, s, v).count_ones() as usize;
                if q <= target && rec(g, s | (1 << v), full, &mut memo) <= target {
                    order.push(v);
                    s |= 1 << v;
                    break;
                }
            }
        }
    }

    // Bags from the elimination order; bag i is attached to the bag of the
    // earliest-later-eliminated member of its neighborhood.
    let mut elim_pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        elim_pos[v] = i;
    }
    let mut bags = Vec::with_capacity(n);
    let mut parent = vec![None; n];
    let mut s = 0u32;
    for (i, &v) in order.iter().enumerate() {
        let nb = elim_neighbors(g, s, v);
        let mut bag = vec![v];
        for u in 0..n {
            if nb & (1 << u) != 0 {
                bag.push(u);
            }
        }
        bags.push(bag);
        if nb != 0 {
            let attach = (0..n)
                .filter(|&u| nb & (1 << u) != 0)
                .min_by_key(|&u| elim_pos[u])
                .unwrap();
            parent[i] = Some(elim_pos[attach]);
        }
        s |= 1 << v;
    }
    Ok((width, TreeDecomposition { bags, parent }))
}

/// Treewidth modulo scopes of a relational structure, with a witness whose
/// bags are each either scopes or of size at most (value + 1). Limited to 12
/// vertices.
pub fn twms(rel: &RelationalStructure) -> Result<(usize, TreeDecomposition)> {
    let n = rel.universe.len();
    if n > 12 {
        return Err(Error::ResourceLimit(
            "treewidth modulo scopes is limited to 12 vertices".into(),
        ));
    }
    let g = gaifman(rel)?;
    let sc = scopes(rel);
    let scope_list: Vec<u32> = sc.iter().copied().collect();
    let components = g.components();

    // Feasibility for a fixed w: every component admits a decomposition with
    // bags that are scopes or small. memo maps a component mask to the chosen
    // root bag (None while unsolvable).
    struct Ctx<'z> {
        g: &'z Graph,
        scope_list: &'z [u32],
        w: usize,
        memo: HashMap<u32, Option<u32>>,
    }

    fn neighborhood(g: &Graph, comp: u32) -> u32 {
        let mut nb = 0u32;
        for v in 0..g.size() {
            if comp & (1 << v) != 0 {
                nb |= g.adj[v];
            }
        }
        nb & !comp
    }

    fn components_within(g: &Graph, mask: u32) -> Vec<u32> {
        let mut seen = 0u32;
        let mut out = Vec::new();
        for v in 0..g.size() {
            let bit = 1u32 << v;
            if mask & bit == 0 || seen & bit != 0 {
                continue;
            }
            let mut comp = bit;
            loop {
                let mut grown = comp;
                for u in 0..g.size() {
                    if comp & (1 << u) != 0 {
                        grown |= g.adj[u] & mask;
                    }
                }
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            seen |= comp;
            out.push(comp);
        }
        out
    }

    fn solve(ctx: &mut Ctx, comp: u32) -> bool {
        if let Some(entry) = ctx.memo.get(&comp) {
            return entry.is_some();
        }
        let boundary = neighborhood(ctx.g, comp);
        // Candidate bags X with boundary <= X <= comp + boundary and
        // X touching comp: all qualifying scopes, plus boundary extended by
        // any small nonempty subset of comp.
        let mut candidates: Vec<u32> = Vec::new();
        for &s in ctx.scope_list {
            if s & boundary == boundary && s & !(comp | boundary) == 0 && s & comp != 0 {
                candidates.push(s);
            }
        }
        let bsize = boundary.count_ones() as usize;
        if bsize <= ctx.w + 1 {
            let room = ctx.w + 1 - bsize;
            let members: Vec<usize> = (0..ctx.g.size()).filter(|&v| comp & (1 << v) != 0).collect();
            // All nonempty subsets of comp with at most `room` elements.
            let mut subset_stack: Vec<(usize, u32, usize)> = vec![(0, 0, 0)];
            while let Some((i, mask, cnt)) = subset_stack.pop() {
                if mask != 0 {
                    candidates.push(boundary | mask);
                }
                for (j, &v) in members.iter().enumerate().skip(i) {
                    if cnt < room {
                        subset_stack.push((j + 1, mask | (1 << v), cnt + 1));
                    }
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for x in candidates {
            let rest = comp & !x;
            let ok = components_within(ctx.g, rest)
                .into_iter()
                .all(|c| solve(ctx, c));
            if ok {
                ctx.memo.insert(comp, Some(x));
                return true;
            }
        }
        ctx.memo.insert(comp, None);
        false
    }

    fn build(
        ctx: &Ctx,
        comp: u32,
        parent: Option<usize>,
        bags: &mut Vec<Vec<usize>>,
        parents: &mut Vec<Option<usize>>,
    ) {
        let x = ctx.memo[&comp].expect("solved component");
        let id = bags.len();
        bags.push((0..ctx.g.size()).filter(|&v| x & (1 << v) != 0).collect());
        parents.push(parent);
        for c in components_within(ctx.g, comp & !x) {
            build(ctx, c, Some(id), bags, parents);
        }
    }

    for w in 0..=n {
        let mut ctx = Ctx {
            g: &g,
            scope_list: &scope_list,
            w,
            memo: HashMap::new(),
        };
        if components.iter().all(|&c| solve(&mut ctx, c)) {
            let mut bags = Vec::new();
            let mut parents = Vec::new();
            for &c in &components {
                build(&ctx, c, None, &mut bags, &mut parents);
            }
            return Ok((w, TreeDecomposition { bags, parent: parents }));
        }
    }
    unreachable!("w = n always admits the single full bag");
}

/// The largest intersection of the element sets of two distinct positive
/// tuples; zero when fewer than two positive tuples exist.
pub fn overlap(a: &ValuedStructure) -> usize {
    let positive = a.positive_tuples();
    let sets: Vec<BTreeSet<usize>> = positive
        .iter()
        .map(|(_, t)| t.iter().copied().collect())
        .collect();
    let mut best = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            best = best.max(sets[i].intersection(&sets[j]).count());
        }
    }
    best
}

// --- Slow oracles for cross-checking -------------------------------------

fn is_chordal(n: usize, adj: &[u32]) -> bool {
    let mut alive: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    for _ in 0..n {
        // Find a simplicial vertex among the alive ones.
        let mut found = None;
        for v in 0..n {
            if alive & (1 << v) == 0 {
                continue;
            }
            let nb = adj[v] & alive;
            let mut clique = true;
            'outer: for u in 0..n {
                if nb & (1 << u) != 0 {
                    for w in u + 1..n {
                        if nb & (1 << w) != 0 && adj[u] & (1 << w) == 0 {
                            clique = false;
                            break 'outer;
                        }
                    }
                }
            }
            if clique {
                found = Some(v);
                break;
            }
        }
        match found {
            Some(v) => alive &= !(1 << v),
            None => return false,
        }
    }
    true
}

fn maximal_cliques(n: usize, adj: &[u32]) -> Vec<u32> {
    let total: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut cliques = Vec::new();
    for mask in 1..=total {
        let mut ok = true;
        'pairs: for u in 0..n {
            if mask & (1 << u) != 0 {
                for v in u + 1..n {
                    if mask & (1 << v) != 0 && adj[u] & (1 << v) == 0 {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        // Maximal: no outside vertex adjacent to the whole mask.
        let extendable = (0..n).any(|v| {
            mask & (1 << v) == 0 && (0..n).all(|u| mask & (1 << u) == 0 || adj[v] & (1 << u) != 0)
        });
        if !extendable {
            cliques.push(mask);
        }
    }
    cliques
}

/// Brute-force treewidth modulo scopes: minimum over all chordal supergraphs
/// of the largest non-scope maximal clique. Every tree decomposition induces
/// such a supergraph and every chordal supergraph induces a clique-tree
/// decomposition, so this is exact. Only practical for about 7 vertices.
pub fn twms_oracle(rel: &RelationalStructure) -> Result<usize> {
    let g = gaifman(rel)?;
    let sc = scopes(rel);
    let n = g.size();
    if n > 7 {
        return Err(Error::ResourceLimit("oracle limited to 7 vertices".into()));
    }
    let mut non_edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) {
                non_edges.push((u, v));
            }
        }
    }
    let mut best = usize::MAX;
    for choice in 0u64..(1u64 << non_edges.len()) {
        let mut adj = g.adj.clone();
        for (i, &(u, v)) in non_edges.iter().enumerate() {
            if choice & (1 << i) != 0 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        if !is_chordal(n, &adj) {
            continue;
        }
        let measure = maximal_cliques(n, &adj)
            .into_iter()
            .filter(|m| !sc.contains(m))
            .map(|m| m.count_ones() as usize - 1)
            .max()
            .unwrap_or(0);
        best = best.min(measure);
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

/// Brute-force treewidth: the scope-free specialization of the oracle.
pub fn treewidth_oracle(g: &Graph) -> Result<usize> {
    let n = g.size();
    if n > 7 {
        return Err(Error::ResourceLimit("oracle limited to 7 vertices".into()));
    }
    let mut non_edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) {
                non_edges.push((u, v));
            }
        }
    }
    let mut best = usize::MAX;
    for choice in 0u64..(1u64 << non_edges.len()) {
        let mut adj = g.adj.clone();
        for (i, &(u, v)) in non_edges.iter().enumerate() {
            if choice & (1 << i) != 0 {
                adj[u] |= 1 << v;
                adj[v] |= 1 << u;
            }
        }
        if !is_chordal(n, &adj) {
            continue;
        }
        let measure = maximal_cliques(n, &adj)
            .into_iter()
            .map(|m| m.count_ones() as usize - 1)
            .max()
            .unwrap_or(0);
        best = best.min(measure);
    }
    Ok(best)
}
