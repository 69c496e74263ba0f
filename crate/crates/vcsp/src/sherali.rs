//! The level-k Sherali-Adams relaxation, its optimum, tightness decisions,
//! and the two constructive gap gadgets.
//!
//! The relaxation extends the signature with a fresh always-positive k-ary
//! symbol `rho_k` (valued 1 on the source side, 0 on the target side), and
//! has one variable lambda(f, x, s) per positive tuple family (f, x) and
//! assignment s of its element set into B. rho_k families are canonicalized
//! by their underlying element subset: marginal consistency forces equality
//! between families over the same set, so one representative per subset of
//! size at most k suffices.
//!
//! Variables whose source/target product is infinite are forced to zero.
//! Instead of emitting those rows, the builder propagates forced zeros to a
//! fixpoint through the marginal constraints (a zero marginal kills all its
//! extensions and vice versa); a family with no surviving assignment makes
//! the program infeasible, which is reported as an infinite optimum.

use std::collections::{BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cores::{compute_core, core_weighting, is_core, CoreWeighting};
use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::limits::Limits;
use crate::lp::{LinProgram, LpOutcome, Rel};
use crate::mappings::Mapping;
use crate::structures::{tuples, ValuedStructure};
use crate::width::{gaifman, overlap, twms, TreeDecomposition};

/// One variable family of the relaxation: a positive tuple of the extended
/// source structure. `sym` is `None` for the added symbol rho_k.
#[derive(Debug, Clone)]
pub struct Family {
    pub sym: Option<usize>,
    pub tuple: Vec<usize>,
    /// Sorted distinct elements of `tuple`; assignments are aligned with it.
    pub set: Vec<usize>,
    pub value: ExtRat,
}

/// The indexing data behind a built relaxation.
#[derive(Debug, Clone)]
pub struct SAInstance {
    pub level: usize,
    pub families: Vec<Family>,
    /// Surviving variables as (family index, assignment over family.set).
    pub vars: Vec<(usize, Vec<usize>)>,
    /// Families whose assignments are all forced to zero; nonempty means the
    /// program is infeasible.
    pub empty_families: Vec<usize>,
    pub b_size: usize,
}

/// A solution of the relaxation: the nonzero lambda values.
#[derive(Debug, Clone)]
pub struct SASolution {
    pub value: ExtRat,
    pub lambda: Vec<(usize, Vec<usize>, BigRational)>,
}

fn check_signatures(a: &ValuedStructure, b: &ValuedStructure) -> Result<()> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(
            "source and target must share a signature".into(),
        ));
    }
    Ok(())
}

fn sorted_set(t: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = t.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    // Both sorted.
    let mut it = big.iter();
    'outer: for x in small {
        for y in it.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// Builds the level-k relaxation of (A, B).
pub fn build_sa(
    a: &ValuedStructure,
    b: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<(LinProgram, SAInstance)> {
    build_sa_raw(a, b, k, true, limits)
}

/// As `build_sa`, but with one rho_k family per raw k-tuple instead of one
/// per element subset; used to cross-check the canonicalization.
pub fn build_sa_uncanonical(
    a: &ValuedStructure,
    b: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<(LinProgram, SAInstance)> {
    build_sa_raw(a, b, k, false, limits)
}

fn build_sa_raw(
    a: &ValuedStructure,
    b: &ValuedStructure,
    k: usize,
    canonical: bool,
    limits: &Limits,
) -> Result<(LinProgram, SAInstance)> {
    check_signatures(a, b)?;
    if k < 1 {
        return Err(Error::BadParameter("level must be >= 1".into()));
    }
    let n = a.size();
    let bn = b.size();

    let mut families: Vec<Family> = Vec::new();
    for (sym, t) in a.positive_tuples() {
        let set = sorted_set(&t);
        families.push(Family {
            sym: Some(sym),
            tuple: t.clone(),
            set,
            value: a.value(sym, &t).clone(),
        });
    }
    if canonical {
        // One rho_k family per nonempty subset of size <= k; the canonical
        // tuple repeats the last element up to arity k.
        let mut stack: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        while let Some(s) = stack.pop() {
            if s.len() < k {
                for v in *s.last().unwrap() + 1..n {
                    let mut bigger = s.clone();
                    bigger.push(v);
                    stack.push(bigger);
                }
            }
            subsets.push(s);
        }
        subsets.sort();
        for s in subsets {
            let mut tuple = s.clone();
            tuple.resize(k, *s.last().unwrap());
            families.push(Family {
                sym: None,
                tuple,
                set: s,
                value: ExtRat::one(),
            });
        }
    } else {
        for t in tuples(n, k) {
            families.push(Family {
                sym: None,
                tuple: t.clone(),
                set: sorted_set(&t),
                value: ExtRat::one(),
            });
        }
    }

    // All variables, family-major, assignments in lexicographic order;
    // `alive` starts from the SA3 zero-forcing rule.
    let mut vars: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut coef: Vec<BigRational> = Vec::new();
    let mut fam_vars: Vec<(usize, usize)> = Vec::new(); // (start, len) per family
    for (fi, fam) in families.iter().enumerate() {
        let start = vars.len();
        for s in tuples(bn, fam.set.len()) {
            if vars.len() as u64 >= limits.max_columns {
                return Err(Error::ResourceLimit(format!(
                    "relaxation exceeds {} variables",
                    limits.max_columns
                )));
            }
            let (live, c) = match fam.sym {
                None => (true, BigRational::zero()),
                Some(sym) => {
                    let img: Vec<usize> = fam
                        .tuple
                        .iter()
                        .map(|e| s[fam.set.binary_search(e).unwrap()])
                        .collect();
                    let product = fam.value.clone() * b.value(sym, &img).clone();
                    match product {
                        ExtRat::Infinity => (false, BigRational::zero()),
                        ExtRat::Finite(r) => (true, r),
                    }
                }
            };
            vars.push((fi, s));
            alive.push(live);
            coef.push(c);
        }
        fam_vars.push((start, vars.len() - start));
        let _ = fi;
    }

    // Marginalization pairs: (small, big) with set inclusion, the small set
    // of size <= k; same-set pairs taken once.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..families.len() {
        if families[i].set.len() > k {
            continue;
        }
        for j in 0..families.len() {
            if i == j || !is_subset(&families[i].set, &families[j].set) {
                continue;
            }
            if families[i].set == families[j].set && i > j {
                continue;
            }
            pairs.push((i, j));
        }
    }

    // For each pair, group the big family's variables by their restriction
    // to the small set.
    let restriction = |pair: &(usize, usize), vj: usize| -> Vec<usize> {
        let (i, j) = *pair;
        let s = &vars[vj].1;
        families[i]
            .set
            .iter()
            .map(|e| s[families[j].set.binary_search(e).unwrap()])
            .collect()
    };
    let mut groups: Vec<HashMap<Vec<usize>, Vec<usize>>> = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let (start, len) = fam_vars[pair.1];
        let mut map: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for vj in start..start + len {
            map.entry(restriction(pair, vj)).or_default().push(vj);
        }
        groups.push(map);
    }

    // Propagate forced zeros to a fixpoint: a dead marginal kills all its
    // extensions, and a marginal with no live extension dies.
    loop {
        let mut changed = false;
        for (pi, pair) in pairs.iter().enumerate() {
            let (start, len) = fam_vars[pair.0];
            for vi in start..start + len {
                let ext = groups[pi].get(&vars[vi].1);
                if !alive[vi] {
                    if let Some(ext) = ext {
                        for &vj in ext {
                            if alive[vj] {
                                alive[vj] = false;
                                changed = true;
                            }
                        }
                    }
                } else {
                    let any = ext
                        .map(|e| e.iter().any(|&vj| alive[vj]))
                        .unwrap_or(false);
                    if !any {
                        alive[vi] = false;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Compact the surviving variables.
    let mut new_index: Vec<Option<usize>> = vec![None; vars.len()];
    let mut surv_vars: Vec<(usize, Vec<usize>)> = Vec::new();
    for (v, live) in alive.iter().enumerate() {
        if *live {
            new_index[v] = Some(surv_vars.len());
            surv_vars.push(vars[v].clone());
        }
    }
    let empty_families: Vec<usize> = (0..families.len())
        .filter(|&f| {
            let (start, len) = fam_vars[f];
            !(start..start + len).any(|v| alive[v])
        })
        .collect();

    let mut lp = LinProgram::new(surv_vars.len());
    for (v, live) in alive.iter().enumerate() {
        if *live && !coef[v].is_zero() {
            lp.set_objective(new_index[v].unwrap(), coef[v].clone());
        }
    }
    // Normalization per family; an emptied family yields the manifestly
    // infeasible row 0 = 1.
    for (start, len) in &fam_vars {
        let lhs: Vec<(usize, BigRational)> = (*start..start + len)
            .filter(|&v| alive[v])
            .map(|v| (new_index[v].unwrap(), BigRational::one()))
            .collect();
        lp.add_constraint(lhs, Rel::Eq, BigRational::one());
    }
    // Marginalization rows among survivors.
    for (pi, pair) in pairs.iter().enumerate() {
        let (start, len) = fam_vars[pair.0];
        for vi in start..start + len {
            if !alive[vi] {
                continue;
            }
            let mut lhs = vec![(new_index[vi].unwrap(), BigRational::one())];
            for &vj in &groups[pi][&vars[vi].1] {
                if alive[vj] {
                    lhs.push((new_index[vj].unwrap(), -BigRational::one()));
                }
            }
            lp.add_constraint(lhs, Rel::Eq, BigRational::zero());
        }
    }

    Ok((
        lp,
        SAInstance {
            level: k,
            families,
            vars: surv_vars,
            empty_families,
            b_size: bn,
        },
    ))
}

/// The optimum of the level-k relaxation; infeasibility is reported as an
/// infinite optimum. A witness lambda accompanies finite optima.
pub fn opt_k(
    a: &ValuedStructure,
    b: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<(ExtRat, Option<SASolution>)> {
    let (lp, inst) = build_sa(a, b, k, limits)?;
    if !inst.empty_families.is_empty() {
        return Ok((ExtRat::infinity(), None));
    }
    match lp.solve(limits.max_pivots)? {
        LpOutcome::Optimal {
            value, assignment, ..
        } => {
            let lambda = inst
                .vars
                .iter()
                .zip(&assignment)
                .filter(|(_, w)| !w.is_zero())
                .map(|((f, s), w)| (*f, s.clone(), w.clone()))
                .collect();
            Ok((
                ExtRat::Finite(value.clone()),
                Some(SASolution {
                    value: ExtRat::Finite(value),
                    lambda,
                }),
            ))
        }
        LpOutcome::Infeasible => Ok((ExtRat::infinity(), None)),
        LpOutcome::Unbounded => Err(Error::BadParameter(
            "relaxation unbounded; objective must be nonnegative".into(),
        )),
    }
}

/// The lexicographically first ordered pair of distinct positive tuples with
/// the largest element-set intersection.
pub fn max_overlap_pair(
    a: &ValuedStructure,
) -> Option<((usize, Vec<usize>), (usize, Vec<usize>))> {
    let positive = a.positive_tuples();
    let sets: Vec<BTreeSet<usize>> = positive
        .iter()
        .map(|(_, t)| t.iter().copied().collect())
        .collect();
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 0..positive.len() {
        for j in 0..positive.len() {
            if i == j {
                continue;
            }
            let shared = sets[i].intersection(&sets[j]).count();
            if best.map_or(true, |(b, _, _)| shared > b) {
                best = Some((shared, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (positive[i].clone(), positive[j].clone()))
}

/// The tightness certificate: the core, its width data, and the extremal
/// overlap pair.
#[derive(Debug, Clone)]
pub struct TightnessCertificate {
    pub tight: bool,
    pub core: ValuedStructure,
    pub twms: usize,
    pub decomposition: TreeDecomposition,
    pub overlap: usize,
    pub overlap_pair: Option<((usize, Vec<usize>), (usize, Vec<usize>))>,
}

/// Decides whether the level-k relaxation is always tight for A: the core A'
/// must satisfy twms(pos(A')) <= k-1 and overlap(A') <= k.
pub fn sa_tight_decide(
    a: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<TightnessCertificate> {
    if k < 1 {
        return Err(Error::BadParameter("level must be >= 1".into()));
    }
    let core = compute_core(a, limits)?.core;
    let (w, td) = twms(&core.pos())?;
    let ov = overlap(&core);
    Ok(TightnessCertificate {
        tight: w <= k - 1 && ov <= k,
        twms: w,
        decomposition: td,
        overlap: ov,
        overlap_pair: max_overlap_pair(&core),
        core,
    })
}

/// Shared data of the two gap constructions.
#[derive(Debug, Clone)]
pub struct GadgetParams {
    pub weighting: CoreWeighting,
    /// M*, the weighted identity cost.
    pub mass: BigRational,
    /// delta, the smallest positive source value.
    pub min_positive: ExtRat,
    /// 1 + M*/delta, the off-relation target value.
    pub off_value: ExtRat,
    /// First projection of the gadget universe onto A.
    pub projection: Mapping,
    /// Treewidth gadget: the odd-parity base vertex.
    pub base_vertex: Option<usize>,
    /// Treewidth gadget: per-vertex incident-edge order (as neighbor lists).
    pub edge_order: Option<Vec<Vec<usize>>>,
    /// Overlap gadget: the chosen maximal-overlap pair (q, x), (p, y).
    pub chosen_pair: Option<((usize, Vec<usize>), (usize, Vec<usize>))>,
    /// Overlap gadget: the index sets I_x, I_y covering the shared set.
    pub index_sets: Option<(Vec<usize>, Vec<usize>)>,
    /// Overlap gadget: the ordered pairs L_1..L_l of distinct positive tuples.
    pub pair_list: Option<Vec<((usize, Vec<usize>), (usize, Vec<usize>))>>,
}

const GADGET_UNIVERSE_CAP: usize = 1024;
const GADGET_TUPLE_CAP: u64 = 1_000_000;

fn gadget_base(
    a: &ValuedStructure,
    limits: &Limits,
) -> Result<(CoreWeighting, BigRational, ExtRat, ExtRat)> {
    if !is_core(a, limits)? {
        return Err(Error::PreconditionFailed(
            "gap construction requires a core".into(),
        ));
    }
    let weighting = core_weighting(a, limits)?;
    let mass = match weighting.base_cost(a) {
        ExtRat::Finite(r) => r,
        ExtRat::Infinity => {
            return Err(Error::PreconditionFailed(
                "core weighting has infinite base cost".into(),
            ))
        }
    };
    let delta = a
        .positive_tuples()
        .iter()
        .map(|(s, t)| a.value(*s, t).clone())
        .min()
        .unwrap_or(ExtRat::infinity());
    let off = match delta.as_rational() {
        Some(d) => ExtRat::from_rational(BigRational::one() + &mass / d)
            .expect("nonnegative off-relation value"),
        None => ExtRat::one(),
    };
    Ok((weighting, mass, delta, off))
}

/// The parity gadget certifying an SA gap for cores of large treewidth
/// modulo scopes: elements are (vertex, bit-vector over incident edges) with
/// even parity everywhere except the base vertex; relation tuples project
/// into pos(A) and agree on shared-edge bits; values are the core weighting
/// of the projection on relation tuples and 1 + M*/delta elsewhere.
pub fn gap_instance_treewidth(
    a: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<(ValuedStructure, GadgetParams)> {
    if k < 1 {
        return Err(Error::BadParameter("level must be >= 1".into()));
    }
    let (weighting, mass, delta, off) = gadget_base(a, limits)?;
    let rel = a.pos();
    let g = gaifman(&rel)?;
    let n = g.size();

    // Pick the component with the largest treewidth modulo scopes and its
    // first vertex as the odd-parity base.
    let mut best: Option<(usize, u32)> = None;
    for comp in g.components() {
        let keep: Vec<usize> = (0..n).filter(|&v| comp & (1 << v) != 0).collect();
        let (w, _) = twms(&rel.induced(&keep))?;
        if best.map_or(true, |(bw, _)| w > bw) {
            best = Some((w, comp));
        }
    }
    let (wmax, comp) = best.expect("nonempty universe");
    if wmax < k {
        return Err(Error::PreconditionFailed(format!(
            "treewidth modulo scopes {wmax} is below level {k}"
        )));
    }
    let a0 = (0..n).find(|&v| comp & (1 << v) != 0).unwrap();

    let edge_order: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..n).filter(|&u| g.has_edge(v, u)).collect())
        .collect();

    // Universe: parity-constrained bit vectors per vertex.
    let mut elems: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let d = edge_order[v].len();
        if d > 10 {
            return Err(Error::ResourceLimit(format!(
                "gadget degree {d} too large at {:?}",
                a.universe[v]
            )));
        }
        let want = u32::from(v == a0);
        for code in 0..(1u32 << d) {
            if code.count_ones() % 2 != want % 2 {
                continue;
            }
            if elems.len() >= GADGET_UNIVERSE_CAP {
                return Err(Error::ResourceLimit("gadget universe too large".into()));
            }
            by_vertex[v].push(elems.len());
            elems.push((v, (0..d).map(|i| ((code >> i) & 1) as u8).collect()));
        }
    }
    let names: Vec<String> = elems
        .iter()
        .map(|(v, bits)| {
            let s: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
            format!("{}#{}", a.universe[*v], s)
        })
        .collect();

    let mut b = ValuedStructure::new(a.signature.clone(), names)?;
    for sym in 0..a.signature.len() {
        b.set_default(sym, off.clone());
    }
    for (sym, r) in rel.relations.iter().enumerate() {
        for x in r {
            let value = weighting.value(sym, x);
            // All lifts of x: element choices per position, kept when every
            // adjacent position pair agrees on the shared edge's bit.
            let mut choice = vec![0usize; x.len()];
            let mut count = 0u64;
            loop {
                count += 1;
                if count > GADGET_TUPLE_CAP {
                    return Err(Error::ResourceLimit("gadget relation too large".into()));
                }
                let t: Vec<usize> = choice
                    .iter()
                    .zip(x.iter())
                    .map(|(&c, &v)| by_vertex[v][c])
                    .collect();
                let consistent = (0..x.len()).all(|l| {
                    (l + 1..x.len()).all(|m| {
                        let (u, v) = (x[l], x[m]);
                        if !g.has_edge(u, v) {
                            return true;
                        }
                        let i = edge_order[u].iter().position(|&w| w == v).unwrap();
                        let j = edge_order[v].iter().position(|&w| w == u).unwrap();
                        elems[t[l]].1[i] == elems[t[m]].1[j]
                    })
                });
                if consistent {
                    b.set_value(sym, t, value.clone());
                }
                // Odometer over the per-position choices.
                let mut pos = 0;
                loop {
                    if pos == x.len() {
                        break;
                    }
                    choice[pos] += 1;
                    if choice[pos] < by_vertex[x[pos]].len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
                if pos == x.len() {
                    break;
                }
            }
        }
    }

    let projection = Mapping::new(elems.iter().map(|(v, _)| *v).collect(), n);
    Ok((
        b,
        GadgetParams {
            weighting,
            mass,
            min_positive: delta,
            off_value: off,
            projection,
            base_vertex: Some(a0),
            edge_order: Some(edge_order),
            chosen_pair: None,
            index_sets: None,
            pair_list: None,
        },
    ))
}

/// The bit-flag gadget certifying an SA gap for cores of large overlap:
/// elements are (vertex, bit-vector over the ordered pairs of distinct
/// positive tuples); a lift of a positive tuple is excluded when the parity
/// of the pair's bit over the shared index set flags it; values as in the
/// treewidth gadget.
pub fn gap_instance_overlap(
    a: &ValuedStructure,
    k: usize,
    limits: &Limits,
) -> Result<(ValuedStructure, GadgetParams)> {
    if k < 1 {
        return Err(Error::BadParameter("level must be >= 1".into()));
    }
    let (weighting, mass, delta, off) = gadget_base(a, limits)?;
    let ((q_sym, x), (p_sym, y)) = max_overlap_pair(a).ok_or_else(|| {
        Error::PreconditionFailed("overlap gap needs two distinct positive tuples".into())
    })?;
    let x_set: BTreeSet<usize> = x.iter().copied().collect();
    let y_set: BTreeSet<usize> = y.iter().copied().collect();
    let shared: BTreeSet<usize> = x_set.intersection(&y_set).copied().collect();
    let n_shared = shared.len();
    if n_shared < k + 1 {
        return Err(Error::PreconditionFailed(format!(
            "overlap {n_shared} is below level {k} + 1"
        )));
    }
    // First-occurrence index sets covering the shared elements.
    let index_set = |t: &[usize]| -> Vec<usize> {
        let mut idx: Vec<usize> = shared
            .iter()
            .map(|e| t.iter().position(|v| v == e).unwrap())
            .collect();
        idx.sort_unstable();
        idx
    };
    let ix = index_set(&x);
    let iy = index_set(&y);

    let positive = a.positive_tuples();
    let mut pair_list: Vec<((usize, Vec<usize>), (usize, Vec<usize>))> = Vec::new();
    for i in 0..positive.len() {
        for j in 0..positive.len() {
            if i != j {
                pair_list.push((positive[i].clone(), positive[j].clone()));
            }
        }
    }
    let l = pair_list.len();
    if l > 8 {
        return Err(Error::ResourceLimit(format!(
            "{l} ordered pairs of positive tuples exceed the gadget cap of 8"
        )));
    }
    let n = a.size();
    if n << l > GADGET_UNIVERSE_CAP {
        return Err(Error::ResourceLimit("gadget universe too large".into()));
    }

    // Universe: every (vertex, bit-vector); bit i belongs to pair L_i.
    let mut elems: Vec<(usize, u32)> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for v in 0..n {
        for code in 0..(1u32 << l) {
            elems.push((v, code));
            let s: String = (0..l)
                .map(|i| char::from(b'0' + ((code >> i) & 1) as u8))
                .collect();
            names.push(format!("{}#{}", a.universe[v], s));
        }
    }
    let elem_id = |v: usize, code: u32| -> usize { (v << l) | code as usize };

    let rel = a.pos();
    let mut b = ValuedStructure::new(a.signature.clone(), names)?;
    for sym in 0..a.signature.len() {
        b.set_default(sym, off.clone());
    }
    for (sym, r) in rel.relations.iter().enumerate() {
        for z in r {
            let value = weighting.value(sym, z);
            let width = l * z.len();
            if (1u64 << width) > GADGET_TUPLE_CAP {
                return Err(Error::ResourceLimit("gadget relation too large".into()));
            }
            let distinct_at = |idx: &[usize]| -> usize {
                let s: BTreeSet<usize> = idx.iter().map(|&j| z[j]).collect();
                s.len()
            };
            let first_matches = sym == q_sym
                && distinct_at(&ix) == n_shared
                && pair_list.iter().any(|(fst, _)| fst == &(sym, z.clone()));
            let second_matches = sym == p_sym
                && distinct_at(&iy) == n_shared
                && pair_list.iter().any(|(_, snd)| snd == &(sym, z.clone()));
            for codes in 0u64..(1u64 << width) {
                let code_at = |j: usize| -> u32 { ((codes >> (l * j)) & ((1 << l) - 1)) as u32 };
                let parity = |idx: &[usize], bit: usize| -> u32 {
                    idx.iter().map(|&j| (code_at(j) >> bit) & 1).sum::<u32>() % 2
                };
                let mut excluded = false;
                if first_matches {
                    for (i, (fst, _)) in pair_list.iter().enumerate() {
                        if fst == &(sym, z.clone()) && parity(&ix, i) == 1 {
                            excluded = true;
                            break;
                        }
                    }
                }
                if !excluded && second_matches {
                    for (i, (_, snd)) in pair_list.iter().enumerate() {
                        if snd == &(sym, z.clone()) && parity(&iy, i) == 0 {
                            excluded = true;
                            break;
                        }
                    }
                }
                if !excluded {
                    let t: Vec<usize> = (0..z.len()).map(|j| elem_id(z[j], code_at(j))).collect();
                    b.set_value(sym, t, value.clone());
                }
            }
        }
    }

    let projection = Mapping::new(elems.iter().map(|(v, _)| *v).collect(), n);
    Ok((
        b,
        GadgetParams {
            weighting,
            mass,
            min_positive: delta,
            off_value: off,
            projection,
            base_vertex: None,
            edge_order: None,
            chosen_pair: Some(((q_sym, x), (p_sym, y))),
            index_sets: Some((ix, iy)),
            pair_list: Some(pair_list),
        },
    ))
}
