//! Search: recovering a minimum-cost mapping by relaxation-guided
//! self-reduction through the core.
//!
//! The fixing loop pins source elements one at a time with fresh crisp unary
//! symbols and keeps only target choices that preserve the level-k optimum.
//! When the relaxation is tight this recovers an optimal mapping; when the
//! instance has infinite optimum the returned mapping is arbitrary and
//! flagged as such.

use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::limits::Limits;
use crate::mappings::{cost, Mapping};
use crate::sherali::opt_k;
use crate::structures::{Signature, ValuedStructure};
use crate::width::{overlap, twms};

/// A recovered mapping with its exact cost. `infinite` marks instances whose
/// optimum is infinite, where the mapping carries no guarantee.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub mapping: Mapping,
    pub cost: ExtRat,
    pub infinite: bool,
}

/// Whether any mapping of finite cost exists, by depth-first assignment with
/// pruning on infinite partial products.
fn finite_cost_exists(a: &ValuedStructure, b: &ValuedStructure, cap: u64) -> Result<bool> {
    let n = a.size();
    let bn = b.size();
    // Positive source tuples indexed by their largest element.
    let mut by_rank: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); n];
    for (sym, t) in a.positive_tuples() {
        let rank = *t.iter().max().unwrap();
        by_rank[rank].push((sym, t));
    }
    let mut assignment = vec![0usize; n];
    let mut depth = 0usize;
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        if nodes > cap {
            return Err(Error::ResourceLimit("finiteness probe node cap".into()));
        }
        let ok = by_rank[depth].iter().all(|(sym, t)| {
            let img: Vec<usize> = t.iter().map(|&e| assignment[e]).collect();
            !(a.value(*sym, t).clone() * b.value(*sym, &img).clone()).is_infinite()
        });
        if ok {
            depth += 1;
            if depth == n {
                return Ok(true);
            }
            assignment[depth] = 0;
            continue;
        }
        // Backtrack to the next unexplored branch.
        loop {
            assignment[depth] += 1;
            if assignment[depth] < bn {
                break;
            }
            if depth == 0 {
                return Ok(false);
            }
            depth -= 1;
        }
    }
}

/// Extends a structure with one fresh unary symbol valued `special_val` on
/// one element and `other_val` everywhere else.
fn with_pin(
    s: &ValuedStructure,
    name: &str,
    element: usize,
    special_val: ExtRat,
    other_val: ExtRat,
) -> Result<ValuedStructure> {
    let mut symbols: Vec<(String, usize)> = s
        .signature
        .symbols
        .iter()
        .map(|sym| (sym.name.clone(), sym.arity))
        .collect();
    symbols.push((name.to_string(), 1));
    let signature = Signature::from_owned(symbols)?;
    let mut out = ValuedStructure::new(signature, s.universe.clone())?;
    for (i, table) in s.tables.iter().enumerate() {
        out.tables[i] = table.clone();
    }
    let pin = out.tables.len() - 1;
    out.set_default(pin, other_val);
    out.set_value(pin, vec![element], special_val);
    Ok(out)
}

/// Recovers a mapping of cost opt(A, B) by fixing elements while preserving
/// the level-k optimum. Requires the relaxation to be tight for A (core with
/// twms <= k-1 and overlap <= k); on other inputs the loop either still
/// succeeds, returns an `infinite`-flagged mapping, or fails with
/// `NoTighteningWitness`.
pub fn search_fix_loop(
    a: &ValuedStructure,
    b: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<SearchResult> {
    let n = a.size();
    let bn = b.size();
    let (target, _) = opt_k(a, b, k, limits)?;
    if target.is_infinite() || !finite_cost_exists(a, b, limits.max_maps)? {
        let mapping = Mapping::new(vec![0; n], bn);
        let c = cost(a, b, &mapping)?;
        return Ok(SearchResult {
            mapping,
            cost: c,
            infinite: true,
        });
    }
    let mut a_cur = a.clone();
    let mut b_cur = b.clone();
    let mut assignment = Vec::with_capacity(n);
    for element in 0..n {
        let name = format!("__fix_{}", a.universe[element]);
        let a_pin = with_pin(&a_cur, &name, element, ExtRat::infinity(), ExtRat::zero())?;
        let mut fixed = None;
        for candidate in 0..bn {
            let b_pin = with_pin(&b_cur, &name, candidate, ExtRat::zero(), ExtRat::infinity())?;
            let (v, _) = opt_k(&a_pin, &b_pin, k, limits)?;
            if v == target {
                a_cur = a_pin.clone();
                b_cur = b_pin;
                fixed = Some(candidate);
                break;
            }
        }
        match fixed {
            Some(candidate) => assignment.push(candidate),
            None => return Err(Error::NoTighteningWitness),
        }
    }
    let mapping = Mapping::new(assignment, bn);
    let c = cost(a, b, &mapping)?;
    if c != target {
        return Err(Error::NoTighteningWitness);
    }
    Ok(SearchResult {
        mapping,
        cost: c,
        infinite: false,
    })
}

/// Solves the search problem end to end: collapse A to its core A', run the
/// fixing loop at the smallest level tight for A', and compose the recovered
/// mapping with the core projection.
pub fn search_solve(
    a: &ValuedStructure,
    b: &ValuedStructure,
    limits: &Limits,
) -> Result<SearchResult> {
    let reduced = crate::cores::compute_core(a, limits)?;
    let (w, _) = twms(&reduced.core.pos())?;
    let k = (w + 1).max(overlap(&reduced.core)).max(1);
    let inner = search_fix_loop(&reduced.core, b, k, limits)?;
    let mapping = inner.mapping.compose(&reduced.projection);
    let c = cost(a, b, &mapping)?;
    Ok(SearchResult {
        infinite: c.is_infinite(),
        mapping,
        cost: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::{b2_structure, opt_bruteforce};
    use crate::sherali::gap_instance_overlap;
    use crate::structures::{gen_grid, gen_path, gen_random, gen_two_triangles, Signature};

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn path_to_b2_recovers_the_optimum() {
        let a = gen_path(3).unwrap();
        let b = b2_structure();
        let res = search_fix_loop(&a, &b, 1, &limits()).unwrap();
        assert!(!res.infinite);
        assert_eq!(res.cost, ExtRat::from_int(13));
        assert_eq!(cost(&a, &b, &res.mapping).unwrap(), ExtRat::from_int(13));
    }

    #[test]
    fn single_element_source_picks_the_cheapest_image() {
        let sig = Signature::new(vec![("u", 1)]).unwrap();
        let mut a = ValuedStructure::new(sig.clone(), vec!["a".into()]).unwrap();
        a.set_value(0, vec![0], ExtRat::from_int(2));
        let b = gen_random(&sig, 3, 5).unwrap();
        let res = search_fix_loop(&a, &b, 1, &limits()).unwrap();
        let (opt, _) = opt_bruteforce(&a, &b, 1 << 20).unwrap();
        assert_eq!(res.cost, opt);
    }

    #[test]
    fn overlap_gadget_is_flagged_infinite() {
        let a = gen_two_triangles().unwrap();
        let (b, _) = gap_instance_overlap(&a, 1, &limits()).unwrap();
        let res = search_fix_loop(&a, &b, 1, &limits()).unwrap();
        assert!(res.infinite);
        assert_eq!(res.cost, ExtRat::infinity());
    }

    #[test]
    fn grid_through_its_core() {
        let a = gen_grid(3).unwrap();
        let b = b2_structure();
        let res = search_solve(&a, &b, &limits()).unwrap();
        assert!(!res.infinite);
        assert_eq!(res.cost, ExtRat::from_int(13));
        assert_eq!(cost(&a, &b, &res.mapping).unwrap(), ExtRat::from_int(13));
    }

    #[test]
    fn single_target_is_the_unique_mapping() {
        let a = gen_path(2).unwrap();
        let mut b = ValuedStructure::new(a.signature.clone(), vec!["z".into()]).unwrap();
        b.set_default(0, ExtRat::zero());
        b.set_default(1, ExtRat::zero());
        let res = search_solve(&a, &b, &limits()).unwrap();
        assert_eq!(res.mapping.as_slice(), &[0, 0, 0]);
        assert_eq!(res.cost, ExtRat::zero());
    }

    #[test]
    fn matches_bruteforce_on_random_targets() {
        let lim = limits();
        for (a, seeds) in [
            (gen_path(2).unwrap(), 0..4u64),
            (gen_grid(2).unwrap(), 4..8u64),
        ] {
            for seed in seeds {
                let b = gen_random(&a.signature, 2, seed).unwrap();
                let res = search_solve(&a, &b, &lim).unwrap();
                let (opt, _) = opt_bruteforce(&a, &b, 1 << 22).unwrap();
                assert_eq!(res.cost, opt, "seed {seed}");
                assert_eq!(res.infinite, opt.is_infinite(), "seed {seed}");
            }
        }
    }
}
