//! Fractional improvement between valued structures.
//!
//! A structure A improves B when there is a probability distribution omega
//! over mappings g : A -> B such that for every tuple (f, x) of B,
//! sum_g omega(g) * f^A(g^{-1}(x)) <= f^B(x), where f^A(g^{-1}(x)) is the
//! total A-value of the preimage tuples. Only mappings of finite support can
//! carry weight, which keeps the left-hand sides finite on the constrained
//! (finite-valued) rows.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::limits::Limits;
use crate::lp::{LinProgram, LpOutcome, Rel};
use crate::mappings::{enumerate_finite_support_partial, Mapping, MappingJson};
use crate::structures::ValuedStructure;

/// A finitely supported probability distribution over mappings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfhDistribution {
    pub entries: Vec<(Mapping, ExtRat)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfhEntryJson {
    pub map: MappingJson,
    pub weight: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IfhDistributionJson {
    pub entries: Vec<IfhEntryJson>,
}

impl IfhDistribution {
    pub fn to_json(&self, a: &ValuedStructure, b: &ValuedStructure) -> IfhDistributionJson {
        IfhDistributionJson {
            entries: self
                .entries
                .iter()
                .map(|(m, w)| IfhEntryJson {
                    map: m.to_json(a, b),
                    weight: w.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_json(
        json: &IfhDistributionJson,
        a: &ValuedStructure,
        b: &ValuedStructure,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for e in &json.entries {
            entries.push((Mapping::from_json(&e.map, a, b)?, e.weight.parse()?));
        }
        Ok(IfhDistribution { entries })
    }
}

/// Outcome of validating a claimed improvement distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IfhCheck {
    Valid,
    NotADistribution(String),
    Violated { symbol: String, tuple: Vec<String> },
}

impl IfhCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, IfhCheck::Valid)
    }
}

use crate::mappings::preimage_value;

/// Checks an improvement distribution from A to B exactly. All weights must
/// be positive, finite, attached to distinct mappings and sum to one; every
/// finite-valued tuple of B must satisfy the fractional constraint.
pub fn validate_ifh(
    a: &ValuedStructure,
    b: &ValuedStructure,
    dist: &IfhDistribution,
) -> Result<IfhCheck> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(
            "improvement requires equal signatures".into(),
        ));
    }
    if dist.entries.is_empty() {
        return Ok(IfhCheck::NotADistribution("empty distribution".into()));
    }
    let mut total = ExtRat::zero();
    let mut seen = std::collections::BTreeSet::new();
    for (m, w) in &dist.entries {
        if m.source_size() != a.size() || m.target_size() != b.size() {
            return Ok(IfhCheck::NotADistribution(
                "mapping shape does not match the structures".into(),
            ));
        }
        if !seen.insert(m.clone()) {
            return Ok(IfhCheck::NotADistribution("duplicate mapping".into()));
        }
        if !w.is_finite() || w.is_zero() {
            return Ok(IfhCheck::NotADistribution(format!(
                "weight {w} is not a positive finite rational"
            )));
        }
        total += w.clone();
    }
    if total != ExtRat::one() {
        return Ok(IfhCheck::NotADistribution(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    for (s, x) in b.finite_tuples() {
        let mut lhs = ExtRat::zero();
        for (g, w) in &dist.entries {
            lhs += w * &preimage_value(a, s, g, &x);
        }
        if &lhs > b.value(s, &x) {
            return Ok(IfhCheck::Violated {
                symbol: b.signature.symbols[s].name.clone(),
                tuple: x.iter().map(|&e| b.universe[e].clone()).collect(),
            });
        }
    }
    Ok(IfhCheck::Valid)
}

/// Shared machinery: solve the improvement feasibility system over a given
/// column pool, generating further columns on demand when the initial
/// enumeration was truncated.
struct IfhMaster<'x> {
    a: &'x ValuedStructure,
    b: &'x ValuedStructure,
    /// Positive finite tuples of A (the only contributors to constrained rows).
    pf: Vec<(usize, Vec<usize>, BigRational)>,
    /// Row index per finite B-tuple touched so far.
    rows: BTreeMap<(usize, Vec<usize>), usize>,
    row_keys: Vec<(usize, Vec<usize>)>,
    columns: Vec<Mapping>,
    col_coefs: Vec<BTreeMap<usize, BigRational>>,
}

impl<'x> IfhMaster<'x> {
    fn new(a: &'x ValuedStructure, b: &'x ValuedStructure, columns: Vec<Mapping>) -> Self {
        let pf = a
            .positive_tuples()
            .into_iter()
            .filter_map(|(s, t)| {
                a.value(s, &t)
                    .as_rational()
                    .map(|r| (s, t.clone(), r.clone()))
            })
            .collect();
        let mut master = IfhMaster {
            a,
            b,
            pf,
            rows: BTreeMap::new(),
            row_keys: Vec::new(),
            columns: Vec::new(),
            col_coefs: Vec::new(),
        };
        for c in columns {
            master.push_column(c);
        }
        master
    }

    fn push_column(&mut self, g: Mapping) {
        let mut coefs: BTreeMap<usize, BigRational> = BTreeMap::new();
        for (s, t, v) in &self.pf {
            let x = g.apply_tuple(t);
            if self.b.value(*s, &x).is_finite() {
                let key = (*s, x);
                let row = match self.rows.get(&key) {
                    Some(&r) => r,
                    None => {
                        let r = self.rows.len();
                        self.row_keys.push(key.clone());
                        self.rows.insert(key, r);
                        r
                    }
                };
                *coefs.entry(row).or_insert_with(BigRational::zero) += v;
            }
        }
        self.columns.push(g);
        self.col_coefs.push(coefs);
    }

    /// Builds and solves the restricted master with slack-penalty variables;
    /// returns (objective, omega, row duals, convexity dual).
    fn solve(
        &self,
        max_pivots: u64,
    ) -> Result<(BigRational, Vec<BigRational>, Vec<BigRational>, BigRational)> {
        let ncols = self.columns.len();
        let nrows = self.rows.len();
        // Variables: omega_0..omega_{ncols-1}, then one violation variable
        // per row.
        let mut lp = LinProgram::new(ncols + nrows);
        for r in 0..nrows {
            lp.set_objective(ncols + r, BigRational::one());
        }
        for (r, key) in self.row_keys.iter().enumerate() {
            let rhs = self
                .b
                .value(key.0, &key.1)
                .as_rational()
                .expect("rows are finite tuples")
                .clone();
            let mut lhs: Vec<(usize, BigRational)> = Vec::new();
            for (c, coefs) in self.col_coefs.iter().enumerate() {
                if let Some(v) = coefs.get(&r) {
                    lhs.push((c, v.clone()));
                }
            }
            lhs.push((ncols + r, -BigRational::one()));
            lp.add_constraint(lhs, Rel::Le, rhs);
        }
        lp.add_constraint(
            (0..ncols).map(|c| (c, BigRational::one())).collect(),
            Rel::Eq,
            BigRational::one(),
        );
        match lp.solve(max_pivots)? {
            LpOutcome::Optimal {
                value,
                assignment,
                duals,
            } => {
                let omega = assignment[..ncols].to_vec();
                let row_duals = duals[..nrows].to_vec();
                let sigma = duals[nrows].clone();
                Ok((value, omega, row_duals, sigma))
            }
            // The master always admits omega on any single column with large
            // violation slacks, so it cannot be infeasible or unbounded.
            other => Err(Error::Schema(format!(
                "unexpected master outcome {other:?}"
            ))),
        }
    }

    /// Minimum reduced cost over all finite-support mappings, by
    /// branch-and-bound, together with a minimizer.
    fn price(
        &self,
        row_duals: &[BigRational],
        sigma: &BigRational,
        max_nodes: u64,
    ) -> Result<Option<(BigRational, Mapping)>> {
        let n = self.a.size();
        let bn = self.b.size();
        // Row penalty weights: w(s,x) = -dual >= 0 at an optimum.
        let weight = |s: usize, x: &[usize]| -> BigRational {
            match self.rows.get(&(s, x.to_vec())) {
                Some(&r) => -row_duals[r].clone(),
                None => BigRational::zero(),
            }
        };
        // Attach positive-finite and infinite tuples to their last element.
        let mut pf_steps: Vec<Vec<(usize, Vec<usize>, BigRational)>> =
            (0..n).map(|_| Vec::new()).collect();
        for (s, t, v) in &self.pf {
            let last = *t.iter().max().unwrap();
            pf_steps[last].push((*s, t.clone(), v.clone()));
        }
        let mut inf_steps: Vec<Vec<(usize, Vec<usize>)>> = (0..n).map(|_| Vec::new()).collect();
        for (s, t) in self.a.infinite_tuples() {
            let last = *t.iter().max().unwrap();
            inf_steps[last].push((s, t));
        }

        struct Ctx<'y> {
            b: &'y ValuedStructure,
            pf_steps: &'y [Vec<(usize, Vec<usize>, BigRational)>],
            inf_steps: &'y [Vec<(usize, Vec<usize>)>],
            weight: &'y dyn Fn(usize, &[usize]) -> BigRational,
            bn: usize,
            best: Option<(BigRational, Vec<usize>)>,
            nodes: u64,
            max_nodes: u64,
        }

        fn dfs(
            ctx: &mut Ctx,
            step: usize,
            partial: BigRational,
            assignment: &mut Vec<usize>,
        ) -> Result<()> {
            if let Some((incumbent, _)) = &ctx.best {
                if &partial >= incumbent {
                    return Ok(());
                }
            }
            if step == assignment.len() {
                ctx.best = Some((partial, assignment.clone()));
                return Ok(());
            }
            'img: for img in 0..ctx.bn {
                ctx.nodes += 1;
                if ctx.nodes > ctx.max_nodes {
                    return Err(Error::ResourceLimit(format!(
                        "pricing node cap {} exceeded",
                        ctx.max_nodes
                    )));
                }
                assignment[step] = img;
                for (s, t) in &ctx.inf_steps[step] {
                    let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                    if !ctx.b.value(*s, &image).is_infinite() {
                        continue 'img;
                    }
                }
                let mut here = partial.clone();
                for (s, t, v) in &ctx.pf_steps[step] {
                    let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
                    if ctx.b.value(*s, &image).is_finite() {
                        here += v * (ctx.weight)(*s, &image);
                    }
                    // Positive-finite mass landing on an infinite B-tuple sits
                    // on an unconstrained row and prices at zero.
                }
                dfs(ctx, step + 1, here, assignment)?;
            }
            Ok(())
        }

        let mut ctx = Ctx {
            b: self.b,
            pf_steps: &pf_steps,
            inf_steps: &inf_steps,
            weight: &weight,
            bn,
            best: None,
            nodes: 0,
            max_nodes,
        };
        let mut assignment = vec![0usize; n];
        dfs(&mut ctx, 0, BigRational::zero(), &mut assignment)?;
        Ok(ctx.best.map(|(v, map)| (v - sigma, Mapping::new(map, bn))))
    }
}

/// Searches for an improvement distribution from A to B. Returns `None` when
/// provably no such distribution exists. Enumerates finite-support mappings
/// up to `limits.max_columns` and switches to column generation beyond that.
pub fn find_ifh(
    a: &ValuedStructure,
    b: &ValuedStructure,
    limits: &Limits,
) -> Result<Option<IfhDistribution>> {
    if a.signature != b.signature {
        return Err(Error::SignatureMismatch(
            "improvement requires equal signatures".into(),
        ));
    }
    let (columns, complete) = enumerate_finite_support_partial(a, b, limits.max_columns)?;
    if columns.is_empty() {
        return Ok(None);
    }
    let mut master = IfhMaster::new(a, b, columns);
    loop {
        let (value, omega, row_duals, sigma) = master.solve(limits.max_pivots)?;
        if value.is_zero() {
            let entries: Vec<(Mapping, ExtRat)> = master
                .columns
                .iter()
                .zip(&omega)
                .filter(|(_, w)| w.is_positive())
                .map(|(g, w)| (g.clone(), ExtRat::from_rational(w.clone()).unwrap()))
                .collect();
            return Ok(Some(IfhDistribution { entries }));
        }
        if complete {
            return Ok(None);
        }
        // Generate a column with negative reduced cost, if any.
        match master.price(&row_duals, &sigma, limits.max_maps)? {
            Some((reduced, g)) if reduced.is_negative() => master.push_column(g),
            _ => return Ok(None),
        }
    }
}

/// Does A improve B?
pub fn improves(a: &ValuedStructure, b: &ValuedStructure, limits: &Limits) -> Result<bool> {
    Ok(find_ifh(a, b, limits)?.is_some())
}

/// Are A and B equivalent (improvement in both directions)?
pub fn equivalent(a: &ValuedStructure, b: &ValuedStructure, limits: &Limits) -> Result<bool> {
    Ok(improves(a, b, limits)? && improves(b, a, limits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{
        gen_crisp_clique, gen_grid, gen_path, grid_path_ifh, grid_to_path_diagonal, Signature,
    };

    fn limits() -> Limits {
        Limits::default()
    }

    #[test]
    fn grid_improves_path_via_diagonal() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let dist = find_ifh(&grid, &path, &limits()).unwrap().unwrap();
        assert_eq!(dist.entries.len(), 1);
        assert_eq!(dist.entries[0].0, grid_to_path_diagonal(3));
        assert_eq!(dist.entries[0].1, ExtRat::one());
        assert!(validate_ifh(&grid, &path, &dist).unwrap().is_valid());
    }

    #[test]
    fn path_improves_grid_and_roundtrip_is_equivalent() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let dist = find_ifh(&path, &grid, &limits()).unwrap().unwrap();
        assert!(validate_ifh(&path, &grid, &dist).unwrap().is_valid());
        assert!(equivalent(&grid, &path, &limits()).unwrap());
    }

    #[test]
    fn known_path_distribution_validates() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let dist = IfhDistribution {
            entries: grid_path_ifh(3).unwrap().entries,
        };
        assert!(validate_ifh(&path, &grid, &dist).unwrap().is_valid());
    }

    #[test]
    fn bad_distributions_rejected() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let mut dist = IfhDistribution {
            entries: grid_path_ifh(3).unwrap().entries,
        };
        dist.entries.pop();
        match validate_ifh(&path, &grid, &dist).unwrap() {
            IfhCheck::NotADistribution(_) => {}
            other => panic!("expected NotADistribution, got {other:?}"),
        }
        // A distribution whose single map collapses the whole path onto one
        // corner sends infinite arc mass onto a finite tuple.
        let all_to_corner = IfhDistribution {
            entries: vec![(Mapping::new(vec![0; 5], 9), ExtRat::one())],
        };
        match validate_ifh(&path, &grid, &all_to_corner).unwrap() {
            IfhCheck::Violated { symbol, .. } => assert_eq!(symbol, "f"),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn no_improvement_when_mass_cannot_fit() {
        let sig = Signature::new(vec![("mu", 1)]).unwrap();
        let mut a = ValuedStructure::new(sig.clone(), vec!["p".into()]).unwrap();
        a.set_value(0, vec![0], ExtRat::from_int(2));
        let mut b = ValuedStructure::new(sig, vec!["u".into()]).unwrap();
        b.set_value(0, vec![0], ExtRat::one());
        assert!(find_ifh(&a, &b, &limits()).unwrap().is_none());
    }

    #[test]
    fn no_columns_means_no_improvement() {
        // A has an infinite tuple but B has none, so no finite-support
        // mapping exists at all.
        let k1 = gen_crisp_clique(1).unwrap();
        let mut a = gen_crisp_clique(2).unwrap();
        a.set_value(0, vec![0, 0], ExtRat::zero());
        assert!(find_ifh(&a, &k1, &limits()).unwrap().is_none());
    }

    #[test]
    fn column_generation_recovers_truncated_enumeration() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let mut small = limits();
        small.max_columns = 2;
        let dist = find_ifh(&path, &grid, &small).unwrap().unwrap();
        assert!(validate_ifh(&path, &grid, &dist).unwrap().is_valid());
    }

    #[test]
    fn distribution_json_roundtrip() {
        let grid = gen_grid(3).unwrap();
        let path = gen_path(3).unwrap();
        let dist = IfhDistribution {
            entries: grid_path_ifh(3).unwrap().entries,
        };
        let json = dist.to_json(&path, &grid);
        let text = serde_json::to_string(&json).unwrap();
        let parsed: IfhDistributionJson = serde_json::from_str(&text).unwrap();
        let back = IfhDistribution::from_json(&parsed, &path, &grid).unwrap();
        assert_eq!(dist, back);
    }
}
