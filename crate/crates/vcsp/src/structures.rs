//! Valued structures over finite universes, their relational skeletons,
//! a JSON file format, and the built-in generator family.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrat::ExtRat;
use crate::mappings::Mapping;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

/// An ordered list of function symbols with arities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub symbols: Vec<Symbol>,
}

impl Signature {
    pub fn new(symbols: Vec<(&str, usize)>) -> Result<Self> {
        Signature::from_owned(
            symbols
                .into_iter()
                .map(|(n, a)| (n.to_string(), a))
                .collect(),
        )
    }

    pub fn from_owned(symbols: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, arity) in &symbols {
            if *arity == 0 {
                return Err(Error::Schema(format!("symbol {name:?} has arity 0")));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Schema(format!("duplicate symbol {name:?}")));
            }
        }
        Ok(Signature {
            symbols: symbols
                .into_iter()
                .map(|(name, arity)| Symbol { name, arity })
                .collect(),
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Sparse value table of one function symbol: a default value plus overrides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnTable {
    pub default: ExtRat,
    pub entries: BTreeMap<Vec<usize>, ExtRat>,
}

impl FnTable {
    pub fn with_default(default: ExtRat) -> Self {
        FnTable {
            default,
            entries: BTreeMap::new(),
        }
    }
}

/// A valued structure: signature, ordered universe, and one table per symbol.
/// Elements are referred to by universe index; names are for I/O only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuedStructure {
    pub signature: Signature,
    pub universe: Vec<String>,
    pub tables: Vec<FnTable>,
}

/// A relational structure; used as the positive skeleton of a valued one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalStructure {
    pub signature: Signature,
    pub universe: Vec<String>,
    pub relations: Vec<BTreeSet<Vec<usize>>>,
}

/// Iterates all tuples over `0..size` of the given arity in lexicographic
/// order.
pub fn tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (size as u128).checked_pow(arity as u32).unwrap_or(0);
    (0..total).map(move |mut ix| {
        let mut t = vec![0usize; arity];
        for pos in (0..arity).rev() {
            t[pos] = (ix % size as u128) as usize;
            ix /= size as u128;
        }
        t
    })
}

impl ValuedStructure {
    pub fn new(signature: Signature, universe: Vec<String>) -> Result<Self> {
        if universe.is_empty() {
            return Err(Error::Schema("empty universe".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &universe {
            if !seen.insert(e.clone()) {
                return Err(Error::Schema(format!("duplicate element {e:?}")));
            }
        }
        let tables = signature
            .symbols
            .iter()
            .map(|_| FnTable::with_default(ExtRat::zero()))
            .collect();
        Ok(ValuedStructure {
            signature,
            universe,
            tables,
        })
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn elem_index(&self, name: &str) -> Option<usize> {
        self.universe.iter().position(|e| e == name)
    }

    pub fn set_default(&mut self, sym: usize, value: ExtRat) {
        self.tables[sym].default = value;
    }

    pub fn set_value(&mut self, sym: usize, tuple: Vec<usize>, value: ExtRat) {
        debug_assert_eq!(tuple.len(), self.signature.symbols[sym].arity);
        debug_assert!(tuple.iter().all(|&e| e < self.size()));
        self.tables[sym].entries.insert(tuple, value);
    }

    pub fn value(&self, sym: usize, tuple: &[usize]) -> &ExtRat {
        self.tables[sym]
            .entries
            .get(tuple)
            .unwrap_or(&self.tables[sym].default)
    }

    /// All (symbol, tuple) pairs of the structure, i.e. tup(A).
    pub fn all_tuples(&self) -> impl Iterator<Item = (usize, Vec<usize>)> + '_ {
        let size = self.size();
        self.signature
            .symbols
            .iter()
            .enumerate()
            .flat_map(move |(s, sym)| tuples(size, sym.arity).map(move |t| (s, t)))
    }

    /// Tuples with strictly positive value, i.e. tup(A)_{>0}.
    pub fn positive_tuples(&self) -> Vec<(usize, Vec<usize>)> {
        self.tuples_where(|v| v.is_positive())
    }

    /// Tuples with finite value, i.e. tup(A)_{<inf}.
    pub fn finite_tuples(&self) -> Vec<(usize, Vec<usize>)> {
        self.tuples_where(|v| v.is_finite())
    }

    /// Tuples with value exactly infinity.
    pub fn infinite_tuples(&self) -> Vec<(usize, Vec<usize>)> {
        self.tuples_where(|v| v.is_infinite())
    }

    fn tuples_where(&self, pred: impl Fn(&ExtRat) -> bool) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (s, table) in self.tables.iter().enumerate() {
            if pred(&table.default) {
                // The default matches, so scan the whole tuple space.
                for t in tuples(self.size(), self.signature.symbols[s].arity) {
                    if pred(self.value(s, &t)) {
                        out.push((s, t));
                    }
                }
            } else {
                for (t, v) in &table.entries {
                    if pred(v) {
                        out.push((s, t.clone()));
                    }
                }
            }
        }
        out
    }

    /// The positive skeleton pos(A): a relational structure keeping exactly
    /// the strictly positive tuples.
    pub fn pos(&self) -> RelationalStructure {
        let mut relations = vec![BTreeSet::new(); self.signature.len()];
        for (s, t) in self.positive_tuples() {
            relations[s].insert(t);
        }
        RelationalStructure {
            signature: self.signature.clone(),
            universe: self.universe.clone(),
            relations,
        }
    }

    pub fn to_json(&self) -> StructureJson {
        let mut functions = BTreeMap::new();
        for (s, table) in self.tables.iter().enumerate() {
            functions.insert(
                self.signature.symbols[s].name.clone(),
                TableJson {
                    default: Some(table.default.to_string()),
                    entries: table
                        .entries
                        .iter()
                        .map(|(t, v)| EntryJson {
                            args: t.iter().map(|&e| self.universe[e].clone()).collect(),
                            value: v.to_string(),
                        })
                        .collect(),
                },
            );
        }
        StructureJson {
            signature: self
                .signature
                .symbols
                .iter()
                .map(|s| SymbolJson {
                    name: s.name.clone(),
                    arity: s.arity,
                })
                .collect(),
            universe: self.universe.clone(),
            functions,
        }
    }

    pub fn from_json(json: &StructureJson) -> Result<Self> {
        let signature = Signature::from_owned(
            json.signature
                .iter()
                .map(|s| (s.name.clone(), s.arity))
                .collect(),
        )?;
        let mut a = ValuedStructure::new(signature, json.universe.clone())?;
        for (name, table) in &json.functions {
            let sym = a
                .signature
                .index_of(name)
                .ok_or_else(|| Error::Schema(format!("function {name:?} not in signature")))?;
            let arity = a.signature.symbols[sym].arity;
            let default = match &table.default {
                Some(s) => s.parse::<ExtRat>()?,
                None => ExtRat::zero(),
            };
            a.set_default(sym, default);
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            for entry in &table.entries {
                if entry.args.len() != arity {
                    return Err(Error::ArityMismatch {
                        symbol: name.clone(),
                        expected: arity,
                        got: entry.args.len(),
                    });
                }
                let tuple: Vec<usize> = entry
                    .args
                    .iter()
                    .map(|e| {
                        a.elem_index(e)
                            .ok_or_else(|| Error::UnknownElement(e.clone()))
                    })
                    .collect::<Result<_>>()?;
                if !seen.insert(tuple.clone()) {
                    return Err(Error::Schema(format!(
                        "duplicate entry for {name}({:?})",
                        entry.args
                    )));
                }
                let value = entry.value.parse::<ExtRat>()?;
                a.set_value(sym, tuple, value);
            }
        }
        Ok(a)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("structure serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let json: StructureJson = serde_json::from_str(s)?;
        ValuedStructure::from_json(&json)
    }
}

impl RelationalStructure {
    pub fn size(&self) -> usize {
        self.universe.len()
    }

    /// The substructure induced by a set of element indices; keeps tuples
    /// fully inside the subset and renumbers elements.
    pub fn induced(&self, keep: &[usize]) -> RelationalStructure {
        let mut remap = vec![usize::MAX; self.size()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.iter()
                    .filter(|t| t.iter().all(|&e| remap[e] != usize::MAX))
                    .map(|t| t.iter().map(|&e| remap[e]).collect())
                    .collect()
            })
            .collect();
        RelationalStructure {
            signature: self.signature.clone(),
            universe: keep.iter().map(|&e| self.universe[e].clone()).collect(),
            relations,
        }
    }
}

// --- JSON mirror types ---------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolJson {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryJson {
    pub args: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default)]
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureJson {
    pub signature: Vec<SymbolJson>,
    pub universe: Vec<String>,
    #[serde(default)]
    pub functions: BTreeMap<String, TableJson>,
}

// --- Generators ----------------------------------------------------------

fn grid_elem(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

fn grid_signature() -> Signature {
    Signature::new(vec![("f", 2), ("mu", 1)]).unwrap()
}

/// The n-by-n grid: `f` is infinite on unit steps right and down the
/// coordinate order (from (i,j) to (i+1,j) and to (i,j+1)), zero elsewhere;
/// `mu` is 1 everywhere. Elements are listed row-major as "i,j".
pub fn gen_grid(n: usize) -> Result<ValuedStructure> {
    if n < 1 {
        return Err(Error::BadParameter("grid size must be >= 1".into()));
    }
    let universe: Vec<String> = (1..=n)
        .flat_map(|i| (1..=n).map(move |j| grid_elem(i, j)))
        .collect();
    let mut a = ValuedStructure::new(grid_signature(), universe)?;
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    for i in 1..=n {
        for j in 1..=n {
            if i < n {
                a.set_value(0, vec![idx(i, j), idx(i + 1, j)], ExtRat::infinity());
            }
            if j < n {
                a.set_value(0, vec![idx(i, j), idx(i, j + 1)], ExtRat::infinity());
            }
        }
    }
    a.set_default(1, ExtRat::one());
    Ok(a)
}

/// The length-(2n-1) directed path with `f` infinite on consecutive steps and
/// `mu(i) = min(i, 2n-i)`.
pub fn gen_path(n: usize) -> Result<ValuedStructure> {
    if n < 1 {
        return Err(Error::BadParameter("path parameter must be >= 1".into()));
    }
    let len = 2 * n - 1;
    let universe: Vec<String> = (1..=len).map(|i| i.to_string()).collect();
    let mut a = ValuedStructure::new(grid_signature(), universe)?;
    for i in 1..len {
        a.set_value(0, vec![i - 1, i], ExtRat::infinity());
    }
    for i in 1..=len {
        let m = if i <= n { i } else { 2 * n - i };
        a.set_value(1, vec![i - 1], ExtRat::from_int(m as u64));
    }
    Ok(a)
}

/// The n-by-n grid with diagonal-weighted `mu` values driven by a base m.
/// Requires n >= 3 and m > n^2. Writing E_i for the i-th anti-diagonal
/// enumerated from (i,1) up to (1,i): mu is 1 on E_1, (m,1) on E_2,
/// (m^3, m^2, m^4) on E_3, (m,1,...,1,m) on E_i for 4 <= i <= n, and 1 on
/// every element beyond the first n diagonals.
pub fn gen_diag_grid(n: usize, m: u64) -> Result<ValuedStructure> {
    if n < 3 {
        return Err(Error::BadParameter("diag grid needs n >= 3".into()));
    }
    if (m as u128) <= (n * n) as u128 {
        return Err(Error::BadParameter(format!(
            "diag grid needs m > n^2 (got m = {m}, n^2 = {})",
            n * n
        )));
    }
    let mut a = gen_grid(n)?;
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mb = BigInt::from(m);
    let pow = |k: u32| ExtRat::Finite(BigRational::from_integer(mb.pow(k)));
    for d in 2..=n {
        // Anti-diagonal E_d from (d,1) to (1,d).
        for (pos, i) in (1..=d).rev().enumerate() {
            let j = d + 1 - i;
            let value = match d {
                2 => {
                    if pos == 0 {
                        pow(1)
                    } else {
                        ExtRat::one()
                    }
                }
                3 => pow([3u32, 2, 4][pos]),
                _ => {
                    if pos == 0 || pos == d - 1 {
                        pow(1)
                    } else {
                        ExtRat::one()
                    }
                }
            };
            a.set_value(1, vec![idx(i, j)], value);
        }
    }
    Ok(a)
}

/// The crisp k-clique: binary `f` that is infinite on off-diagonal pairs and
/// zero on the diagonal.
pub fn gen_crisp_clique(k: usize) -> Result<ValuedStructure> {
    if k < 1 {
        return Err(Error::BadParameter("clique size must be >= 1".into()));
    }
    let sig = Signature::new(vec![("f", 2)])?;
    let universe: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
    let mut a = ValuedStructure::new(sig, universe)?;
    for x in 0..k {
        for y in 0..k {
            if x != y {
                a.set_value(0, vec![x, y], ExtRat::infinity());
            }
        }
    }
    Ok(a)
}

/// Two ternary tuples glued along two elements: q(a,b,c) = q(b,c,d) = inf,
/// everything else 0.
pub fn gen_two_triangles() -> Result<ValuedStructure> {
    let sig = Signature::new(vec![("q", 3)])?;
    let universe = vec!["a".into(), "b".into(), "c".into(), "d".into()];
    let mut a = ValuedStructure::new(sig, universe)?;
    a.set_value(0, vec![0, 1, 2], ExtRat::infinity());
    a.set_value(0, vec![1, 2, 3], ExtRat::infinity());
    Ok(a)
}

/// A seeded random structure over the given signature shape: every tuple of
/// every symbol independently takes a value uniformly drawn from
/// {0, 1, 2, inf}. Elements are named "e1".."e<size>".
pub fn gen_random(signature: &Signature, size: usize, seed: u64) -> Result<ValuedStructure> {
    if size < 1 {
        return Err(Error::BadParameter("universe size must be >= 1".into()));
    }
    let universe: Vec<String> = (1..=size).map(|i| format!("e{i}")).collect();
    let mut a = ValuedStructure::new(signature.clone(), universe)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..signature.len() {
        let arity = signature.symbols[s].arity;
        for t in tuples(size, arity) {
            let v = match rng.gen_range(0..4u32) {
                0 => ExtRat::zero(),
                1 => ExtRat::one(),
                2 => ExtRat::from_int(2),
                _ => ExtRat::infinity(),
            };
            a.set_value(s, t, v);
        }
    }
    Ok(a)
}

// --- The grid/path fractional homomorphism -------------------------------

/// Arc weight used by the monotone-path distribution: for an arc from (i,j)
/// to (i',j') of the n-grid, where the target sits on anti-diagonal
/// k = i' + j' - 1:
/// for k <= n it is j/(i+j) on horizontal arcs and i/(i+j) on vertical ones;
/// for k > n it is (n-j'+1)/(2n-i'-j'+1) horizontally and
/// (n-i'+1)/(2n-i'-j'+1) vertically.
pub fn psi(n: usize, from: (usize, usize), to: (usize, usize)) -> Result<BigRational> {
    let (i, j) = from;
    let (ip, jp) = to;
    let horizontal = ip == i && jp == j + 1;
    let vertical = jp == j && ip == i + 1;
    if !horizontal && !vertical {
        return Err(Error::BadParameter(format!(
            "({i},{j}) -> ({ip},{jp}) is not a grid arc"
        )));
    }
    let k = ip + jp - 1;
    let q = |a: usize, b: usize| BigRational::new(BigInt::from(a), BigInt::from(b));
    Ok(if k <= n {
        if horizontal {
            q(j, i + j)
        } else {
            q(i, i + j)
        }
    } else if horizontal {
        q(n - jp + 1, 2 * n - ip - jp + 1)
    } else {
        q(n - ip + 1, 2 * n - ip - jp + 1)
    })
}

/// All monotone paths from (1,1) to (n,n), each as the sequence of its 2n-1
/// vertices, in lexicographic order of the move sequence.
pub fn monotone_paths(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut path = vec![(1, 1)];
    fn rec(n: usize, path: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let &(i, j) = path.last().unwrap();
        if i == n && j == n {
            out.push(path.clone());
            return;
        }
        // Horizontal first so the move order is lexicographic.
        if j < n {
            path.push((i, j + 1));
            rec(n, path, out);
            path.pop();
        }
        if i < n {
            path.push((i + 1, j));
            rec(n, path, out);
            path.pop();
        }
    }
    rec(n, &mut path, &mut out);
    out
}

/// A weighted family of mappings from the path structure into the grid.
pub struct PathDistribution {
    /// Pairs of (mapping from gen_path(n) to gen_grid(n), weight).
    pub entries: Vec<(Mapping, ExtRat)>,
}

/// The explicit fractional homomorphism from the 2n-1 path into the n-grid:
/// one mapping per monotone path (path element k goes to the k-th vertex),
/// weighted by the product of arc weights `psi` along the path.
pub fn grid_path_ifh(n: usize) -> Result<PathDistribution> {
    if n < 1 {
        return Err(Error::BadParameter("grid size must be >= 1".into()));
    }
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mut entries = Vec::new();
    for path in monotone_paths(n) {
        let mut w = BigRational::one();
        for arc in path.windows(2) {
            w *= psi(n, arc[0], arc[1])?;
        }
        let map = Mapping::new(path.iter().map(|&(i, j)| idx(i, j)).collect(), n * n);
        entries.push((map, ExtRat::from_rational(w)?));
    }
    Ok(PathDistribution { entries })
}

/// The diagonal mapping from the n-grid onto the 2n-1 path: (i,j) goes to
/// position i+j-1. Together with weight one this is a fractional
/// homomorphism in the grid-to-path direction.
pub fn grid_to_path_diagonal(n: usize) -> Mapping {
    let mut map = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            map.push(i + j - 2);
        }
    }
    Mapping::new(map, 2 * n - 1)
}

/// Finite-valued companion structures.
pub enum FiniteVariant {
    /// Clamp of the diagonal grid: every value replaced by min(1, value).
    Diag { n: usize, m: u64 },
    /// The finite-valued grid/path pair: grid arcs weighted by the total
    /// path-distribution mass crossing them, path arcs weighted 1.
    GridPair { n: usize },
}

pub fn gen_finite_variants(variant: FiniteVariant) -> Result<Vec<ValuedStructure>> {
    match variant {
        FiniteVariant::Diag { n, m } => {
            let mut a = gen_diag_grid(n, m)?;
            for table in a.tables.iter_mut() {
                if table.default > ExtRat::one() {
                    table.default = ExtRat::one();
                }
                for v in table.entries.values_mut() {
                    if *v > ExtRat::one() {
                        *v = ExtRat::one();
                    }
                }
            }
            Ok(vec![a])
        }
        FiniteVariant::GridPair { n } => {
            let mut grid = gen_grid(n)?;
            let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
            // Total mass of monotone paths crossing each arc.
            let mut mass: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
            for path in monotone_paths(n) {
                let mut w = BigRational::one();
                for arc in path.windows(2) {
                    w *= psi(n, arc[0], arc[1])?;
                }
                for arc in path.windows(2) {
                    let key = (idx(arc[0].0, arc[0].1), idx(arc[1].0, arc[1].1));
                    *mass.entry(key).or_insert_with(BigRational::zero) += w.clone();
                }
            }
            grid.tables[0].entries.clear();
            for ((u, v), w) in mass {
                grid.set_value(0, vec![u, v], ExtRat::from_rational(w)?);
            }
            let mut path = gen_path(n)?;
            let len = 2 * n - 1;
            path.tables[0].entries.clear();
            for i in 1..len {
                path.set_value(0, vec![i - 1, i], ExtRat::one());
            }
            Ok(vec![grid, path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, d: u64) -> ExtRat {
        ExtRat::from_parts(n, d).unwrap()
    }

    #[test]
    fn json_roundtrip() {
        let a = gen_grid(2).unwrap();
        let text = a.to_json_string();
        let b = ValuedStructure::from_json_str(&text).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_example_parses() {
        let text = r#"{
            "signature": [{"name": "f", "arity": 2}],
            "universe": ["a", "b"],
            "functions": {
                "f": {"default": "0", "entries": [{"args": ["a", "b"], "value": "inf"}]}
            }
        }"#;
        let a = ValuedStructure::from_json_str(text).unwrap();
        assert_eq!(a.value(0, &[0, 1]), &ExtRat::infinity());
        assert_eq!(a.value(0, &[1, 0]), &ExtRat::zero());
    }

    #[test]
    fn json_rejects_duplicates_and_unknowns() {
        let dup = r#"{
            "signature": [{"name": "f", "arity": 1}],
            "universe": ["a"],
            "functions": {"f": {"entries": [
                {"args": ["a"], "value": "1"},
                {"args": ["a"], "value": "2"}
            ]}}
        }"#;
        assert!(matches!(
            ValuedStructure::from_json_str(dup),
            Err(Error::Schema(_))
        ));
        let unknown = r#"{
            "signature": [{"name": "f", "arity": 1}],
            "universe": ["a"],
            "functions": {"g": {"entries": []}}
        }"#;
        assert!(matches!(
            ValuedStructure::from_json_str(unknown),
            Err(Error::Schema(_))
        ));
        let badelem = r#"{
            "signature": [{"name": "f", "arity": 1}],
            "universe": ["a"],
            "functions": {"f": {"entries": [{"args": ["z"], "value": "1"}]}}
        }"#;
        assert!(matches!(
            ValuedStructure::from_json_str(badelem),
            Err(Error::UnknownElement(_))
        ));
        let badarity = r#"{
            "signature": [{"name": "f", "arity": 2}],
            "universe": ["a"],
            "functions": {"f": {"entries": [{"args": ["a"], "value": "1"}]}}
        }"#;
        assert!(matches!(
            ValuedStructure::from_json_str(badarity),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn missing_default_is_zero() {
        let text = r#"{
            "signature": [{"name": "f", "arity": 1}],
            "universe": ["a", "b"],
            "functions": {"f": {"entries": [{"args": ["a"], "value": "3"}]}}
        }"#;
        let a = ValuedStructure::from_json_str(text).unwrap();
        assert_eq!(a.value(0, &[1]), &ExtRat::zero());
    }

    #[test]
    fn grid_shape() {
        let g = gen_grid(3).unwrap();
        assert_eq!(g.size(), 9);
        let idx = |i: usize, j: usize| (i - 1) * 3 + (j - 1);
        assert_eq!(g.value(0, &[idx(1, 1), idx(1, 2)]), &ExtRat::infinity());
        assert_eq!(g.value(0, &[idx(1, 1), idx(2, 1)]), &ExtRat::infinity());
        assert_eq!(g.value(0, &[idx(1, 2), idx(1, 1)]), &ExtRat::zero());
        assert_eq!(g.value(0, &[idx(1, 1), idx(2, 2)]), &ExtRat::zero());
        assert_eq!(g.value(1, &[idx(2, 2)]), &ExtRat::one());
        // 2 * n * (n-1) arcs
        assert_eq!(g.pos().relations[0].len(), 12);
    }

    #[test]
    fn path_shape() {
        let p = gen_path(3).unwrap();
        assert_eq!(p.size(), 5);
        let mu: Vec<ExtRat> = (0..5).map(|i| p.value(1, &[i]).clone()).collect();
        assert_eq!(
            mu,
            vec![
                ExtRat::from_int(1),
                ExtRat::from_int(2),
                ExtRat::from_int(3),
                ExtRat::from_int(2),
                ExtRat::from_int(1)
            ]
        );
        assert_eq!(p.value(0, &[0, 1]), &ExtRat::infinity());
        assert_eq!(p.value(0, &[1, 0]), &ExtRat::zero());
    }

    #[test]
    fn diag_grid_values() {
        let a = gen_diag_grid(4, 17).unwrap();
        let idx = |i: usize, j: usize| (i - 1) * 4 + (j - 1);
        let m = |k: u32| ExtRat::Finite(BigRational::from_integer(BigInt::from(17).pow(k)));
        assert_eq!(a.value(1, &[idx(1, 1)]), &ExtRat::one());
        // E_2 = ((2,1),(1,2)) -> (m, 1)
        assert_eq!(a.value(1, &[idx(2, 1)]), &m(1));
        assert_eq!(a.value(1, &[idx(1, 2)]), &ExtRat::one());
        // E_3 = ((3,1),(2,2),(1,3)) -> (m^3, m^2, m^4)
        assert_eq!(a.value(1, &[idx(3, 1)]), &m(3));
        assert_eq!(a.value(1, &[idx(2, 2)]), &m(2));
        assert_eq!(a.value(1, &[idx(1, 3)]), &m(4));
        // E_4 = ((4,1),(3,2),(2,3),(1,4)) -> (m,1,1,m)
        assert_eq!(a.value(1, &[idx(4, 1)]), &m(1));
        assert_eq!(a.value(1, &[idx(3, 2)]), &ExtRat::one());
        assert_eq!(a.value(1, &[idx(2, 3)]), &ExtRat::one());
        assert_eq!(a.value(1, &[idx(1, 4)]), &m(1));
        // Elements beyond diagonal n stay at 1.
        assert_eq!(a.value(1, &[idx(4, 4)]), &ExtRat::one());
        assert!(matches!(gen_diag_grid(3, 9), Err(Error::BadParameter(_))));
        assert!(gen_diag_grid(3, 10).is_ok());
    }

    #[test]
    fn two_triangles_and_clique() {
        let t = gen_two_triangles().unwrap();
        assert_eq!(t.positive_tuples().len(), 2);
        let k = gen_crisp_clique(3).unwrap();
        assert_eq!(k.positive_tuples().len(), 6);
        assert_eq!(k.value(0, &[1, 1]), &ExtRat::zero());
    }

    #[test]
    fn random_is_seed_deterministic() {
        let sig = grid_signature();
        let a = gen_random(&sig, 2, 42).unwrap();
        let b = gen_random(&sig, 2, 42).unwrap();
        let c = gen_random(&sig, 2, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn psi_matches_known_weights_for_n3() {
        // The six monotone paths for n = 3, with known product weights.
        let dist = grid_path_ifh(3).unwrap();
        assert_eq!(dist.entries.len(), 6);
        let total: ExtRat = dist.entries.iter().map(|(_, w)| w.clone()).sum();
        assert_eq!(total, ExtRat::one());
        // Lexicographic move order: HH VV, HV HV, HV VH, VH HV, VH VH, VV HH
        // reading H = right (j+1), V = down (i+1); the weights below are the
        // known values for the six paths.
        let weights: Vec<ExtRat> = dist.entries.iter().map(|(_, w)| w.clone()).collect();
        let expect: Vec<ExtRat> = vec![
            q(1, 3),  // right right down down
            q(1, 12), // right down right down
            q(1, 12), // right down down right
            q(1, 12), // down right right down
            q(1, 12), // down right down right
            q(1, 3),  // down down right right
        ];
        assert_eq!(weights, expect);
    }

    #[test]
    fn psi_out_arcs_sum_to_one() {
        for n in 2..=4 {
            for i in 1..=n {
                for j in 1..=n {
                    if i == n && j == n {
                        continue;
                    }
                    let mut total = BigRational::zero();
                    if j < n {
                        total += psi(n, (i, j), (i, j + 1)).unwrap();
                    }
                    if i < n {
                        total += psi(n, (i, j), (i + 1, j)).unwrap();
                    }
                    assert!(total.is_one(), "out-sum at ({i},{j}) for n={n}");
                }
            }
        }
    }

    #[test]
    fn psi_in_arcs_sum_matches_diagonal_ratio() {
        // Incoming mass at (i,j) on diagonal k: (k-1)/k for k <= n and
        // (2n-k+1)/(2n-k) for k > n (excluding the sources on diagonal 1).
        for n in 2..=4usize {
            for i in 1..=n {
                for j in 1..=n {
                    let k = i + j - 1;
                    if k == 1 {
                        continue;
                    }
                    let mut total = BigRational::zero();
                    if j > 1 {
                        total += psi(n, (i, j - 1), (i, j)).unwrap();
                    }
                    if i > 1 {
                        total += psi(n, (i - 1, j), (i, j)).unwrap();
                    }
                    let expect = if k <= n {
                        BigRational::new(BigInt::from(k as i64 - 1), BigInt::from(k as i64))
                    } else {
                        BigRational::new(
                            BigInt::from((2 * n - k + 1) as i64),
                            BigInt::from((2 * n - k) as i64),
                        )
                    };
                    assert_eq!(total, expect, "in-sum at ({i},{j}) for n={n}");
                }
            }
        }
    }

    #[test]
    fn path_mass_per_element_matches_diagonal_size() {
        // Summing path weights over paths through a fixed vertex gives
        // 1/k on diagonal k <= n and 1/(2n-k) beyond.
        for n in 2..=4usize {
            let dist = grid_path_ifh(n).unwrap();
            let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
            for i in 1..=n {
                for j in 1..=n {
                    let k = i + j - 1;
                    let pos = k - 1; // path element mapped to diagonal k
                    let mut total = ExtRat::zero();
                    for (map, w) in &dist.entries {
                        if map.image_of(pos) == idx(i, j) {
                            total += w.clone();
                        }
                    }
                    let expect = if k <= n {
                        q(1, k as u64)
                    } else {
                        q(1, (2 * n - k) as u64)
                    };
                    assert_eq!(total, expect, "mass at ({i},{j}) for n={n}");
                }
            }
        }
    }

    #[test]
    fn finite_variants() {
        let d = gen_finite_variants(FiniteVariant::Diag { n: 3, m: 10 }).unwrap();
        assert_eq!(d.len(), 1);
        for (s, t) in d[0].all_tuples() {
            assert!(d[0].value(s, &t) <= &ExtRat::one());
        }
        let pair = gen_finite_variants(FiniteVariant::GridPair { n: 3 }).unwrap();
        assert_eq!(pair.len(), 2);
        let (grid, path) = (&pair[0], &pair[1]);
        // Arc masses out of (1,1) are the two first-step weights 1/2 + 1/2.
        let idx = |i: usize, j: usize| (i - 1) * 3 + (j - 1);
        assert_eq!(grid.value(0, &[idx(1, 1), idx(1, 2)]), &q(1, 2));
        assert_eq!(grid.value(0, &[idx(1, 1), idx(2, 1)]), &q(1, 2));
        assert_eq!(path.value(0, &[0, 1]), &ExtRat::one());
        assert!(grid.all_tuples().all(|(s, t)| grid.value(s, &t).is_finite()));
    }

    #[test]
    fn induced_substructure() {
        let t = gen_two_triangles().unwrap().pos();
        let sub = t.induced(&[0, 1, 2]);
        assert_eq!(sub.relations[0].len(), 1);
        assert_eq!(sub.universe, vec!["a", "b", "c"]);
    }
}
