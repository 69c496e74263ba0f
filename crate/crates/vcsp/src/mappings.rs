//! Mappings between universes, assignment costs, brute-force optima and
//! valued isomorphism.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::structures::{tuples, ValuedStructure};

/// A total mapping between element index spaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mapping {
    map: Vec<usize>,
    target_size: usize,
}

impl Mapping {
    pub fn new(map: Vec<usize>, target_size: usize) -> Self {
        debug_assert!(map.iter().all(|&v| v < target_size));
        Mapping { map, target_size }
    }

    pub fn identity(n: usize) -> Self {
        Mapping {
            map: (0..n).collect(),
            target_size: n,
        }
    }

    pub fn source_size(&self) -> usize {
        self.map.len()
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn image_of(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.map[x]).collect()
    }

    /// The image as a sorted set of target elements.
    pub fn image(&self) -> BTreeSet<usize> {
        self.map.iter().copied().collect()
    }

    pub fn is_surjective(&self) -> bool {
        self.image().len() == self.target_size
    }

    /// Composition self . inner (apply `inner` first).
    pub fn compose(&self, inner: &Mapping) -> Mapping {
        debug_assert_eq!(inner.target_size, self.map.len());
        Mapping {
            map: inner.map.iter().map(|&x| self.map[x]).collect(),
            target_size: self.target_size,
        }
    }

    pub fn to_json(&self, source: &ValuedStructure, target: &ValuedStructure) -> MappingJson {
        MappingJson {
            map: self
                .map
                .iter()
                .enumerate()
                .map(|(x, &y)| (source.universe[x].clone(), target.universe[y].clone()))
                .collect(),
        }
    }

    pub fn from_json(
        json: &MappingJson,
        source: &ValuedStructure,
        target: &ValuedStructure,
    ) -> Result<Mapping> {
        let mut map = vec![usize::MAX; source.size()];
        for (from, to) in &json.map {
            let x = source
                .elem_index(from)
                .ok_or_else(|| Error::UnknownElement(from.clone()))?;
            let y = target
                .elem_index(to)
                .ok_or_else(|| Error::UnknownElement(to.clone()))?;
            map[x] = y;
        }
        if let Some(x) = map.iter().position(|&y| y == usize::MAX) {
            return Err(Error::Schema(format!(
                "mapping misses element {:?}",
                source.universe[x]
            )));
        }
        Ok(Mapping::new(map, target.size()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingJson {
    pub map: BTreeMap<String, String>,
}

/// The preimage value f^A(g^{-1}(x)): total A-value over the tuples that `g`
/// maps onto `x`.
pub fn preimage_value(a: &ValuedStructure, sym: usize, g: &Mapping, x: &[usize]) -> ExtRat {
    let mut total = ExtRat::zero();
    let arity = a.signature.symbols[sym].arity;
    // Iterate preimages coordinate-wise.
    let mut pre: Vec<Vec<usize>> = Vec::with_capacity(arity);
    for &xi in x {
        let fibre: Vec<usize> = (0..a.size()).filter(|&y| g.image_of(y) == xi).collect();
        if fibre.is_empty() {
            return ExtRat::zero();
        }
        pre.push(fibre);
    }
    let mut idx = vec![0usize; arity];
    loop {
        let t: Vec<usize> = idx.iter().enumerate().map(|(p, &i)| pre[p][i]).collect();
        total += a.value(sym, &t).clone();
        let mut p = arity;
        loop {
            if p == 0 {
                return total;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < pre[p].len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

fn check_signatures(a: &ValuedStructure, b: &ValuedStructure) -> Result<()> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(
            "structures must share a signature".into(),
        ));
    }
    Ok(())
}

/// The cost of mapping `h : A -> B`: the sum over all tuples of A of
/// `f^A(x) * f^B(h(x))`, with the usual `inf * 0 = 0` convention.
pub fn cost(a: &ValuedStructure, b: &ValuedStructure, h: &Mapping) -> Result<ExtRat> {
    check_signatures(a, b)?;
    if h.source_size() != a.size() || h.target_size() != b.size() {
        return Err(Error::Schema("mapping shape does not match structures".into()));
    }
    let mut total = ExtRat::zero();
    for (s, table) in a.tables.iter().enumerate() {
        if table.default.is_zero() {
            for (t, v) in &table.entries {
                if !v.is_zero() {
                    total += v * b.value(s, &h.apply_tuple(t));
                }
            }
        } else {
            for t in tuples(a.size(), a.signature.symbols[s].arity) {
                let v = a.value(s, &t);
                if !v.is_zero() {
                    total += v * b.value(s, &h.apply_tuple(&t));
                }
            }
        }
    }
    Ok(total)
}

/// Precomputed positive tuples of `a`, each attached to the element (under a
/// processing order) that is assigned last.
struct SearchPlan {
    /// Element processing order.
    order: Vec<usize>,
    /// For each step, the positive tuples that become fully assigned there.
    step_tuples: Vec<Vec<(usize, Vec<usize>, ExtRat)>>,
}

fn search_plan(a: &ValuedStructure) -> SearchPlan {
    let n = a.size();
    let positive = a.positive_tuples();
    // Heuristic order: elements carrying the most positive mass first.
    let mut inf_count = vec![0usize; n];
    let mut finite_mass = vec![ExtRat::zero(); n];
    for (s, t) in &positive {
        let v = a.value(*s, t);
        for &e in t {
            if v.is_infinite() {
                inf_count[e] += 1;
            } else {
                finite_mass[e] += v.clone();
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        inf_count[y]
            .cmp(&inf_count[x])
            .then_with(|| finite_mass[y].cmp(&finite_mass[x]))
            .then_with(|| x.cmp(&y))
    });
    let mut rank = vec![0usize; n];
    for (step, &e) in order.iter().enumerate() {
        rank[e] = step;
    }
    let mut step_tuples: Vec<Vec<(usize, Vec<usize>, ExtRat)>> = (0..n).map(|_| Vec::new()).collect();
    for (s, t) in positive {
        let last = t.iter().map(|&e| rank[e]).max().unwrap();
        let v = a.value(s, &t).clone();
        step_tuples[last].push((s, t, v));
    }
    SearchPlan { order, step_tuples }
}

/// Exact optimum of the assignment problem by branch-and-bound with partial
/// cost pruning. Returns the optimal value together with one optimal mapping.
pub fn opt_bruteforce(
    a: &ValuedStructure,
    b: &ValuedStructure,
    max_nodes: u64,
) -> Result<(ExtRat, Mapping)> {
    check_signatures(a, b)?;
    let plan = search_plan(a);
    let n = a.size();
    let bn = b.size();
    let mut assignment = vec![0usize; n];
    let mut best: Option<(ExtRat, Vec<usize>)> = None;
    let mut nodes = 0u64;

    fn dfs(
        a: &ValuedStructure,
        b: &ValuedStructure,
        plan: &SearchPlan,
        bn: usize,
        step: usize,
        partial: ExtRat,
        assignment: &mut Vec<usize>,
        best: &mut Option<(ExtRat, Vec<usize>)>,
        nodes: &mut u64,
        max_nodes: u64,
    ) -> Result<()> {
        if let Some((incumbent, _)) = best {
            if partial >= *incumbent {
                return Ok(());
            }
        }
        if step == plan.order.len() {
            *best = Some((partial, assignment.clone()));
            return Ok(());
        }
        let e = plan.order[step];
        for img in 0..bn {
            *nodes += 1;
            if *nodes > max_nodes {
                return Err(Error::ResourceLimit(format!(
                    "brute-force node cap {max_nodes} exceeded"
                )));
            }
            assignment[e] = img;
            let mut cost_here = partial.clone();
            for (s, t, v) in &plan.step_tuples[step] {
                let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                cost_here += v * b.value(*s, &image);
            }
            dfs(
                a, b, plan, bn, step + 1, cost_here, assignment, best, nodes, max_nodes,
            )?;
        }
        Ok(())
    }

    dfs(
        a,
        b,
        &plan,
        bn,
        0,
        ExtRat::zero(),
        &mut assignment,
        &mut best,
        &mut nodes,
        max_nodes,
    )?;
    let (value, map) = best.expect("nonempty target universe yields at least one mapping");
    Ok((value, Mapping::new(map, bn)))
}

/// Enumerates the finite-support mappings from A to B: those `g` with
/// `f^A(g^{-1}(x))` finite for every finite-valued tuple `(f,x)` of B.
/// Equivalently, every infinite tuple of A must land on an infinite tuple
/// of B. Stops with a partial list when the cap is hit.
pub(crate) fn enumerate_finite_support_partial(
    a: &ValuedStructure,
    b: &ValuedStructure,
    cap: u64,
) -> Result<(Vec<Mapping>, bool)> {
    check_signatures(a, b)?;
    let n = a.size();
    let bn = b.size();
    // Attach each infinite tuple of A to its last element.
    let inf_tuples = a.infinite_tuples();
    let mut step_tuples: Vec<Vec<(usize, Vec<usize>)>> = (0..n).map(|_| Vec::new()).collect();
    for (s, t) in inf_tuples {
        let last = *t.iter().max().unwrap();
        step_tuples[last].push((s, t));
    }
    let mut out = Vec::new();
    let mut assignment = vec![0usize; n];
    let mut complete = true;

    fn dfs(
        b: &ValuedStructure,
        step_tuples: &[Vec<(usize, Vec<usize>)>],
        bn: usize,
        step: usize,
        assignment: &mut Vec<usize>,
        out: &mut Vec<Mapping>,
        cap: u64,
        complete: &mut bool,
    ) {
        if !*complete {
            return;
        }
        if step == assignment.len() {
            if (out.len() as u64) < cap {
                out.push(Mapping::new(assignment.clone(), bn));
            } else {
                *complete = false;
            }
            return;
        }
        'img: for img in 0..bn {
            assignment[step] = img;
            for (s, t) in &step_tuples[step] {
                let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                if !b.value(*s, &image).is_infinite() {
                    continue 'img;
                }
            }
            dfs(b, step_tuples, bn, step + 1, assignment, out, cap, complete);
        }
    }

    dfs(
        b,
        &step_tuples,
        bn,
        0,
        &mut assignment,
        &mut out,
        cap,
        &mut complete,
    );
    Ok((out, complete))
}

/// As `enumerate_finite_support_partial`, but errors when the cap is hit.
pub fn enumerate_finite_support(
    a: &ValuedStructure,
    b: &ValuedStructure,
    cap: u64,
) -> Result<Vec<Mapping>> {
    let (maps, complete) = enumerate_finite_support_partial(a, b, cap)?;
    if !complete {
        return Err(Error::ResourceLimit(format!(
            "finite-support mapping cap {cap} exceeded"
        )));
    }
    Ok(maps)
}

/// Searches for a value-preserving bijection between A and B; `None` when the
/// structures are not isomorphic (including signature or size mismatches).
pub fn valued_isomorphic(a: &ValuedStructure, b: &ValuedStructure) -> Option<Mapping> {
    if a.signature != b.signature || a.size() != b.size() {
        return None;
    }
    let n = a.size();
    // Unary compatibility table.
    let unary: Vec<usize> = (0..a.signature.len())
        .filter(|&s| a.signature.symbols[s].arity == 1)
        .collect();
    let compatible = |x: usize, y: usize| unary.iter().all(|&s| a.value(s, &[x]) == b.value(s, &[y]));

    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];

    fn consistent(
        a: &ValuedStructure,
        b: &ValuedStructure,
        image: &[usize],
        assigned: &[usize],
        newest: usize,
    ) -> bool {
        // Check every tuple over the assigned elements that mentions the
        // newest one.
        for (s, sym) in a.signature.symbols.iter().enumerate() {
            for t in tuples(assigned.len(), sym.arity) {
                let t: Vec<usize> = t.into_iter().map(|p| assigned[p]).collect();
                if !t.contains(&newest) {
                    continue;
                }
                let im: Vec<usize> = t.iter().map(|&x| image[x]).collect();
                if a.value(s, &t) != b.value(s, &im) {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(
        a: &ValuedStructure,
        b: &ValuedStructure,
        compatible: &dyn Fn(usize, usize) -> bool,
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        x: usize,
    ) -> bool {
        let n = image.len();
        if x == n {
            return true;
        }
        for y in 0..n {
            if used[y] || !compatible(x, y) {
                continue;
            }
            image[x] = y;
            used[y] = true;
            let assigned: Vec<usize> = (0..=x).collect();
            if consistent(a, b, image, &assigned, x)
                && dfs(a, b, compatible, image, used, x + 1)
            {
                return true;
            }
            image[x] = usize::MAX;
            used[y] = false;
        }
        false
    }

    if dfs(a, b, &compatible, &mut image, &mut used, 0) {
        Some(Mapping::new(image, n))
    } else {
        None
    }
}

#[cfg(test)]
pub(crate) fn b2_structure() -> ValuedStructure {
    use crate::structures::Signature;
    let sig = Signature::new(vec![("f", 2), ("mu", 1)]).unwrap();
    let mut b = ValuedStructure::new(sig, vec!["x".into(), "y".into()]).unwrap();
    b.set_value(0, vec![0, 0], ExtRat::from_int(5));
    b.set_value(0, vec![1, 1], ExtRat::from_int(5));
    b.set_value(1, vec![0], ExtRat::from_int(1));
    b.set_value(1, vec![1], ExtRat::from_int(2));
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{gen_grid, gen_path, grid_to_path_diagonal, Signature};

    #[test]
    fn compose_and_image() {
        let f = Mapping::new(vec![1, 1, 0], 2);
        let g = Mapping::new(vec![0, 1], 3);
        let fg = f.compose(&g);
        assert_eq!(fg.as_slice(), &[1, 1]);
        assert!(!f.is_surjective() || f.image().len() == 2);
        assert!(Mapping::identity(4).is_surjective());
    }

    #[test]
    fn cost_of_alternating_map_into_b2() {
        let a = gen_path(3).unwrap();
        let b = b2_structure();
        // 1 -> x, 2 -> y, 3 -> x, 4 -> y, 5 -> x
        let h = Mapping::new(vec![0, 1, 0, 1, 0], 2);
        assert_eq!(cost(&a, &b, &h).unwrap(), ExtRat::from_int(13));
    }

    #[test]
    fn cost_checks_signature() {
        let a = gen_path(2).unwrap();
        let k = crate::structures::gen_crisp_clique(2).unwrap();
        let h = Mapping::new(vec![0, 0, 0], 2);
        assert!(matches!(
            cost(&a, &k, &h),
            Err(Error::SignatureMismatch(_))
        ));
    }

    #[test]
    fn opt_on_tiny_instance() {
        let sig = Signature::new(vec![("mu", 1)]).unwrap();
        let mut a = ValuedStructure::new(sig.clone(), vec!["p".into()]).unwrap();
        a.set_value(0, vec![0], ExtRat::from_int(2));
        let mut b = ValuedStructure::new(sig, vec!["u".into(), "v".into()]).unwrap();
        b.set_value(0, vec![0], ExtRat::from_int(5));
        b.set_value(0, vec![1], ExtRat::from_int(3));
        let (v, h) = opt_bruteforce(&a, &b, 1000).unwrap();
        assert_eq!(v, ExtRat::from_int(6));
        assert_eq!(h.image_of(0), 1);
    }

    #[test]
    fn opt_path_into_b2_is_13() {
        let a = gen_path(3).unwrap();
        let b = b2_structure();
        let (v, h) = opt_bruteforce(&a, &b, 1_000_000).unwrap();
        assert_eq!(v, ExtRat::from_int(13));
        assert_eq!(cost(&a, &b, &h).unwrap(), ExtRat::from_int(13));
    }

    #[test]
    fn opt_reports_infinite_optimum() {
        // A single infinite loop with no infinite target tuple.
        let sig = Signature::new(vec![("f", 2)]).unwrap();
        let mut a = ValuedStructure::new(sig.clone(), vec!["p".into()]).unwrap();
        a.set_value(0, vec![0, 0], ExtRat::infinity());
        let mut b = ValuedStructure::new(sig, vec!["u".into()]).unwrap();
        b.set_value(0, vec![0, 0], ExtRat::one());
        let (v, _) = opt_bruteforce(&a, &b, 1000).unwrap();
        assert_eq!(v, ExtRat::infinity());
    }

    #[test]
    fn node_cap_respected() {
        let a = gen_grid(3).unwrap();
        let b = gen_grid(3).unwrap();
        assert!(matches!(
            opt_bruteforce(&a, &b, 5),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn finite_support_grid_to_path_is_diagonal() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let maps = enumerate_finite_support(&grid, &path, 100_000).unwrap();
        assert_eq!(maps, vec![grid_to_path_diagonal(3)]);
    }

    #[test]
    fn finite_support_path_to_grid_counts_monotone_paths() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let maps = enumerate_finite_support(&path, &grid, 100_000).unwrap();
        // One mapping per monotone path.
        assert_eq!(maps.len(), 6);
        for m in &maps {
            // Every path arc must land on a grid arc.
            for i in 0..4 {
                let v = grid.value(0, &[m.image_of(i), m.image_of(i + 1)]);
                assert!(v.is_infinite());
            }
        }
    }

    #[test]
    fn isomorphism_found_under_renaming() {
        let a = gen_path(3).unwrap();
        let mut b = a.clone();
        b.universe = vec!["p1".into(), "p2".into(), "p3".into(), "p4".into(), "p5".into()];
        let iso = valued_isomorphic(&a, &b).unwrap();
        assert_eq!(iso.as_slice(), &[0, 1, 2, 3, 4]);

        // Reversal of the directed path is still isomorphic: mu is symmetric
        // and arc reversal maps arcs onto arcs.
        let mut c = ValuedStructure::new(a.signature.clone(), b.universe.clone()).unwrap();
        for i in 1..5 {
            c.set_value(0, vec![i, i - 1], ExtRat::infinity());
        }
        for i in 0..5 {
            c.set_value(1, vec![i], a.value(1, &[i]).clone());
        }
        let iso = valued_isomorphic(&a, &c).unwrap();
        assert_eq!(iso.as_slice(), &[4, 3, 2, 1, 0]);
    }

    #[test]
    fn non_isomorphic_pairs_rejected() {
        let a = gen_path(3).unwrap();
        let b = gen_grid(3).unwrap();
        assert!(valued_isomorphic(&a, &b).is_none());
        let mut c = a.clone();
        c.set_value(1, vec![0], ExtRat::from_int(7));
        assert!(valued_isomorphic(&a, &c).is_none());
    }

    #[test]
    fn mapping_json_roundtrip() {
        let a = gen_path(2).unwrap();
        let b = gen_grid(2).unwrap();
        let m = Mapping::new(vec![0, 1, 3], 4);
        let json = m.to_json(&a, &b);
        let back = Mapping::from_json(&json, &a, &b).unwrap();
        assert_eq!(m, back);
    }
}
