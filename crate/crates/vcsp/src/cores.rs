//! Valued cores: recognition, computation, and core weightings.
//!
//! A structure is a core when no probability distribution over its
//! finite-support endomappings can put positive mass on non-surjective maps
//! while fractionally improving the structure into itself. Cores are computed
//! by iterating a reduction step that finds a strictly smaller admissible
//! image; a core weighting certifies core-ness by a strict cost gap against
//! every non-surjective endomapping.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::limits::Limits;
use crate::lp::{LinProgram, LpOutcome, Rel};
use crate::mappings::{enumerate_finite_support, preimage_value, Mapping};
use crate::structures::{tuples, ValuedStructure};

/// The image structure g(A): universe is the image of g, and every tuple
/// value is the total A-value of its preimage tuples.
pub fn image_structure(a: &ValuedStructure, g: &Mapping) -> ValuedStructure {
    let image: Vec<usize> = g.image().into_iter().collect();
    let universe: Vec<String> = image.iter().map(|&e| a.universe[e].clone()).collect();
    let mut out = ValuedStructure::new(a.signature.clone(), universe)
        .expect("image of a valid structure is valid");
    for (s, sym) in a.signature.symbols.iter().enumerate() {
        for t in tuples(image.len(), sym.arity) {
            let in_a: Vec<usize> = t.iter().map(|&p| image[p]).collect();
            let v = preimage_value(a, s, g, &in_a);
            if !v.is_zero() {
                out.set_value(s, t, v);
            }
        }
    }
    out
}

/// The finite-support endomappings of A together with the improvement
/// constraint matrix rows (finite tuples of A).
struct EndoSystem {
    maps: Vec<Mapping>,
    fin: Vec<(usize, Vec<usize>)>,
    /// coefs[g][row] = f^A(g^{-1}(x)) for the row's tuple x.
    coefs: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
}

fn endo_system(a: &ValuedStructure, limits: &Limits) -> Result<EndoSystem> {
    let maps = enumerate_finite_support(a, a, limits.max_columns)?;
    let fin = a.finite_tuples();
    let mut coefs = Vec::with_capacity(maps.len());
    for g in &maps {
        let row: Vec<BigRational> = fin
            .iter()
            .map(|(s, t)| {
                preimage_value(a, *s, g, t)
                    .as_rational()
                    .expect("finite-support maps have finite preimage values on finite rows")
                    .clone()
            })
            .collect();
        coefs.push(row);
    }
    let rhs = fin
        .iter()
        .map(|(s, t)| a.value(*s, t).as_rational().unwrap().clone())
        .collect();
    Ok(EndoSystem {
        maps,
        fin,
        coefs,
        rhs,
    })
}

/// Maximum total mass assignable to the selected maps by a self-improvement
/// distribution over all of `sys`.
fn max_selected_mass(sys: &EndoSystem, selected: &[bool], limits: &Limits) -> Result<(BigRational, Vec<BigRational>)> {
    let n = sys.maps.len();
    let mut lp = LinProgram::new(n);
    for (g, sel) in selected.iter().enumerate() {
        if *sel {
            lp.set_objective(g, -BigRational::one());
        }
    }
    for (r, _) in sys.fin.iter().enumerate() {
        let lhs: Vec<(usize, BigRational)> = (0..n)
            .filter(|&g| !sys.coefs[g][r].is_zero())
            .map(|g| (g, sys.coefs[g][r].clone()))
            .collect();
        lp.add_constraint(lhs, Rel::Le, sys.rhs[r].clone());
    }
    lp.add_constraint(
        (0..n).map(|g| (g, BigRational::one())).collect(),
        Rel::Eq,
        BigRational::one(),
    );
    match lp.solve(limits.max_pivots)? {
        LpOutcome::Optimal {
            value, assignment, ..
        } => Ok((-value, assignment)),
        LpOutcome::Infeasible => {
            // The identity map alone is always feasible, so this cannot
            // happen for well-formed structures.
            Err(Error::Schema("self-improvement system infeasible".into()))
        }
        LpOutcome::Unbounded => Err(Error::Schema("bounded LP reported unbounded".into())),
    }
}

/// Is A a valued core? When A has no finite-valued tuples this degenerates
/// to the question whether the universe is a single element.
pub fn is_core(a: &ValuedStructure, limits: &Limits) -> Result<bool> {
    if a.finite_tuples().is_empty() {
        return Ok(a.size() == 1);
    }
    let sys = endo_system(a, limits)?;
    let selected: Vec<bool> = sys.maps.iter().map(|g| !g.is_surjective()).collect();
    if !selected.iter().any(|&s| s) {
        return Ok(true);
    }
    let (mass, _) = max_selected_mass(&sys, &selected, limits)?;
    Ok(mass.is_zero())
}

/// One collapse step: a finite-support endomapping with image strictly inside
/// the image of `g` that carries positive mass in some self-improvement
/// distribution; `None` when no such map exists (then g(A) is a core).
pub fn reduction_step(
    a: &ValuedStructure,
    g: &Mapping,
    limits: &Limits,
) -> Result<Option<Mapping>> {
    let g_image = g.image();
    if a.finite_tuples().is_empty() {
        // Every endomapping is admissible; collapse to a single element.
        if g_image.len() == 1 {
            return Ok(None);
        }
        let target = *g_image.iter().next().unwrap();
        return Ok(Some(Mapping::new(vec![target; a.size()], a.size())));
    }
    let sys = endo_system(a, limits)?;
    let selected: Vec<bool> = sys
        .maps
        .iter()
        .map(|h| {
            let im = h.image();
            im.len() < g_image.len() && im.is_subset(&g_image)
        })
        .collect();
    if !selected.iter().any(|&s| s) {
        return Ok(None);
    }
    let (mass, omega) = max_selected_mass(&sys, &selected, limits)?;
    if mass.is_zero() {
        return Ok(None);
    }
    // Deterministic choice: smallest image, then lexicographic map.
    let mut best: Option<&Mapping> = None;
    for (i, h) in sys.maps.iter().enumerate() {
        if selected[i] && omega[i].is_positive() {
            let better = match best {
                None => true,
                Some(b) => {
                    let (hi, bi) = (h.image().len(), b.image().len());
                    hi < bi || (hi == bi && h.as_slice() < b.as_slice())
                }
            };
            if better {
                best = Some(h);
            }
        }
    }
    Ok(best.cloned())
}

/// The result of core computation: the collapsing endomapping, the core as a
/// standalone structure, and the projection of A onto the core's universe.
#[derive(Debug, Clone)]
pub struct CoreResult {
    /// Endomapping of A whose image induces the core.
    pub endomap: Mapping,
    /// The core as a structure over the image elements.
    pub core: ValuedStructure,
    /// A -> core, i.e. the endomapping followed by universe renumbering.
    pub projection: Mapping,
}

/// Computes a valued core of A by iterated reduction from the identity.
pub fn compute_core(a: &ValuedStructure, limits: &Limits) -> Result<CoreResult> {
    let mut g = Mapping::identity(a.size());
    loop {
        match reduction_step(a, &g, limits)? {
            Some(h) => {
                debug_assert!(h.image().len() < g.image().len());
                g = h;
            }
            None => break,
        }
    }
    let image: Vec<usize> = g.image().into_iter().collect();
    let core = image_structure(a, &g);
    let projection = Mapping::new(
        (0..a.size())
            .map(|x| image.binary_search(&g.image_of(x)).unwrap())
            .collect(),
        image.len(),
    );
    Ok(CoreResult {
        endomap: g,
        core,
        projection,
    })
}

/// A core weighting: nonnegative finite weights on the finite-valued tuples
/// (zero elsewhere) whose weighted cost strictly separates the identity from
/// every non-surjective endomapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreWeighting {
    pub entries: BTreeMap<(usize, Vec<usize>), ExtRat>,
}

impl CoreWeighting {
    pub fn value(&self, sym: usize, t: &[usize]) -> ExtRat {
        self.entries
            .get(&(sym, t.to_vec()))
            .cloned()
            .unwrap_or_else(ExtRat::zero)
    }

    /// The weighted total cost of the identity, M* = sum f^A(x) c(f,x).
    pub fn base_cost(&self, a: &ValuedStructure) -> ExtRat {
        let mut total = ExtRat::zero();
        for ((s, t), c) in &self.entries {
            total += a.value(*s, t) * c;
        }
        total
    }
}

/// Computes a core weighting of a core structure. Errors with `NotACore`
/// when A is not a core.
pub fn core_weighting(a: &ValuedStructure, limits: &Limits) -> Result<CoreWeighting> {
    if !is_core(a, limits)? {
        return Err(Error::NotACore);
    }
    let fin = a.finite_tuples();
    if fin.is_empty() {
        return Ok(CoreWeighting {
            entries: BTreeMap::new(),
        });
    }
    let maps = enumerate_finite_support(a, a, limits.max_columns)?;
    let nonsurjective: Vec<&Mapping> = maps.iter().filter(|g| !g.is_surjective()).collect();
    if nonsurjective.is_empty() {
        // Uniform weights already separate: any non-surjective endomapping
        // must overload some tuple.
        return Ok(CoreWeighting {
            entries: fin.into_iter().map(|k| (k, ExtRat::one())).collect(),
        });
    }

    // Variables: z1, then one z2 weight per finite tuple. Maximize z1 <= 1
    // subject to, for every surjective finite-support h,
    //   sum_x z2(x) (f(x) - f(h^{-1}(x))) <= 0
    // and for every non-surjective finite-support gg,
    //   z1 + sum_x z2(x) (f(x) - f(g^{-1}(x))) <= 0.
    let n = fin.len();
    let mut lp = LinProgram::new(n + 1);
    lp.set_objective(0, -BigRational::one());
    lp.add_constraint(vec![(0, BigRational::one())], Rel::Le, BigRational::one());
    for h in &maps {
        let mut lhs: Vec<(usize, BigRational)> = Vec::new();
        if !h.is_surjective() {
            lhs.push((0, BigRational::one()));
        }
        for (i, (s, t)) in fin.iter().enumerate() {
            let fx = a.value(*s, t).as_rational().unwrap().clone();
            let fh = preimage_value(a, *s, h, t)
                .as_rational()
                .expect("finite-support preimage on finite row")
                .clone();
            let coef = fx - fh;
            if !coef.is_zero() {
                lhs.push((i + 1, coef));
            }
        }
        lp.add_constraint(lhs, Rel::Le, BigRational::zero());
    }
    let (z1, z2) = match lp.solve(limits.max_pivots)? {
        LpOutcome::Optimal {
            value, assignment, ..
        } => (-value, assignment[1..].to_vec()),
        other => {
            return Err(Error::Schema(format!(
                "core weighting system unexpectedly {other:?}"
            )))
        }
    };
    if !z1.is_positive() {
        // A genuine core always admits a positive z1.
        return Err(Error::NotACore);
    }
    // eps = z1 / (1 + sum of finite tuple values).
    let mut denom = BigRational::one();
    for (s, t) in &fin {
        denom += a.value(*s, t).as_rational().unwrap();
    }
    let eps = z1 / denom;
    let entries = fin
        .into_iter()
        .zip(z2)
        .map(|(k, w)| (k, ExtRat::from_rational(w + eps.clone()).unwrap()))
        .collect();
    Ok(CoreWeighting { entries })
}

/// Checks a claimed core weighting against every endomapping of A: weights
/// must be zero on infinite tuples, finite and nonnegative elsewhere, the
/// base cost must be finite, and every non-surjective endomapping must cost
/// strictly more. The full |A|^|A| enumeration is capped by `limits.max_maps`.
pub fn validate_core_weighting(
    a: &ValuedStructure,
    w: &CoreWeighting,
    limits: &Limits,
) -> Result<bool> {
    for ((s, t), c) in &w.entries {
        if !c.is_finite() {
            return Ok(false);
        }
        if a.value(*s, t).is_infinite() && !c.is_zero() {
            return Ok(false);
        }
    }
    let base = w.base_cost(a);
    if !base.is_finite() {
        return Ok(false);
    }
    let n = a.size();
    let total = (n as f64).powi(n as i32);
    if total > limits.max_maps as f64 {
        return Err(Error::ResourceLimit(format!(
            "validating a core weighting needs {n}^{n} endomap checks"
        )));
    }
    let all_tuples: Vec<(usize, Vec<usize>)> = a.all_tuples().collect();
    let mut stack = vec![0usize; n];
    loop {
        let g = Mapping::new(stack.clone(), n);
        if !g.is_surjective() {
            let mut cost = ExtRat::zero();
            for (s, t) in &all_tuples {
                let v = a.value(*s, t);
                if !v.is_zero() {
                    cost += v * &w.value(*s, &g.apply_tuple(t));
                }
            }
            if cost <= base {
                return Ok(false);
            }
        }
        // Next endomapping.
        let mut p = n;
        loop {
            if p == 0 {
                return Ok(true);
            }
            p -= 1;
            stack[p] += 1;
            if stack[p] < n {
                break;
            }
            stack[p] = 0;
        }
    }
}
