//! Exact rational linear programming.
//!
//! A dense two-phase primal simplex over arbitrary-precision rationals.
//! Bland's rule is used unconditionally, so the solver never cycles; every
//! reported optimum is exact. All variables are nonnegative; constraints are
//! `<=`, `>=` or `=` rows. Minimization only (negate the objective to
//! maximize).

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse left-hand side as (variable, coefficient) pairs.
    pub lhs: Vec<(usize, BigRational)>,
    pub rel: Rel,
    pub rhs: BigRational,
}

/// A minimization LP over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinProgram {
    pub num_vars: usize,
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
}

/// Outcome of an exact LP solve.
#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal {
        value: BigRational,
        /// One optimal basic feasible solution.
        assignment: Vec<BigRational>,
        /// Row multipliers `y` such that every column satisfies
        /// `c_j - y . A_j >= 0` at the optimum (in original row order and
        /// orientation).
        duals: Vec<BigRational>,
    },
    Infeasible,
    Unbounded,
}

impl LinProgram {
    pub fn new(num_vars: usize) -> Self {
        LinProgram {
            num_vars,
            objective: vec![BigRational::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.objective.push(BigRational::zero());
        self.num_vars - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: BigRational) {
        self.objective[var] = coef;
    }

    pub fn add_constraint(&mut self, lhs: Vec<(usize, BigRational)>, rel: Rel, rhs: BigRational) {
        debug_assert!(lhs.iter().all(|(v, _)| *v < self.num_vars));
        self.constraints.push(Constraint { lhs, rel, rhs });
    }

    /// Writes the program in a human-readable LP-style text format.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let term = |v: usize, c: &BigRational| format!("{} x{}", c, v);
        let mut obj: Vec<String> = Vec::new();
        for (v, c) in self.objective.iter().enumerate() {
            if !c.is_zero() {
                obj.push(term(v, c));
            }
        }
        writeln!(
            out,
            "minimize\n  {}",
            if obj.is_empty() { "0".into() } else { obj.join(" + ") }
        )
        .unwrap();
        writeln!(out, "subject to").unwrap();
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs: Vec<String> = c.lhs.iter().map(|(v, co)| term(*v, co)).collect();
            let rel = match c.rel {
                Rel::Le => "<=",
                Rel::Ge => ">=",
                Rel::Eq => "=",
            };
            writeln!(
                out,
                "  r{}: {} {} {}",
                i,
                if lhs.is_empty() { "0".into() } else { lhs.join(" + ") },
                rel,
                c.rhs
            )
            .unwrap();
        }
        writeln!(out, "bounds\n  x{}..x{} >= 0", 0, self.num_vars.saturating_sub(1)).unwrap();
        out
    }

    /// Solves the program exactly. `max_pivots` bounds the total pivot count
    /// across both phases.
    pub fn solve(&self, max_pivots: u64) -> Result<LpOutcome> {
        Simplex::build(self).run(max_pivots)
    }
}

struct Simplex {
    /// Dense rows over all columns (structural + slack + artificial).
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    num_structural: usize,
    total_cols: usize,
    /// Artificial column (if any) attached to each row, for dual recovery.
    row_art: Vec<Option<usize>>,
    row_slack: Vec<Option<usize>>,
    /// Sign flip applied to each row during rhs normalization.
    row_sign: Vec<bool>,
    artificial_start: usize,
    objective: Vec<BigRational>,
}

impl Simplex {
    fn build(lp: &LinProgram) -> Simplex {
        let m = lp.constraints.len();
        let n = lp.num_vars;

        // Count auxiliary columns.
        let mut num_slack = 0;
        for c in &lp.constraints {
            if c.rel != Rel::Eq {
                num_slack += 1;
            }
        }
        let artificial_start = n + num_slack;

        let mut rows: Vec<Vec<BigRational>> = Vec::with_capacity(m);
        let mut rhs: Vec<BigRational> = Vec::with_capacity(m);
        let mut row_art = vec![None; m];
        let mut row_slack = vec![None; m];
        let mut row_sign = vec![false; m];
        let mut basis = vec![usize::MAX; m];

        // First pass: dense structural part, normalized to rhs >= 0.
        let mut slack_idx = n;
        let mut num_art = 0;
        let mut rel_after = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![BigRational::zero(); n];
            for (v, coef) in &c.lhs {
                row[*v] += coef.clone();
            }
            let mut b = c.rhs.clone();
            let mut rel = c.rel;
            if b.is_negative() {
                for e in row.iter_mut() {
                    *e = -e.clone();
                }
                b = -b;
                rel = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
                row_sign[i] = true;
            }
            if rel != Rel::Eq {
                row_slack[i] = Some(slack_idx);
                slack_idx += 1;
            }
            if rel != Rel::Le {
                num_art += 1;
            }
            rel_after.push(rel);
            rows.push(row);
            rhs.push(b);
        }

        let total_cols = artificial_start + num_art;
        let mut art_idx = artificial_start;
        for (i, rel) in rel_after.iter().enumerate() {
            let row = &mut rows[i];
            row.resize(total_cols, BigRational::zero());
            match rel {
                Rel::Le => {
                    let s = row_slack[i].unwrap();
                    row[s] = BigRational::one();
                    basis[i] = s;
                }
                Rel::Ge => {
                    let s = row_slack[i].unwrap();
                    row[s] = -BigRational::one();
                    row[art_idx] = BigRational::one();
                    row_art[i] = Some(art_idx);
                    basis[i] = art_idx;
                    art_idx += 1;
                }
                Rel::Eq => {
                    row[art_idx] = BigRational::one();
                    row_art[i] = Some(art_idx);
                    basis[i] = art_idx;
                    art_idx += 1;
                }
            }
        }

        Simplex {
            rows,
            rhs,
            basis,
            num_structural: n,
            total_cols,
            row_art,
            row_slack,
            row_sign,
            artificial_start,
            objective: lp.objective.clone(),
        }
    }

    fn pivot(&mut self, r: usize, c: usize, reduced: &mut [BigRational], z: &mut BigRational) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for e in self.rows[r].iter_mut() {
                *e /= piv.clone();
            }
            self.rhs[r] /= piv.clone();
        }
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..self.total_cols {
                if !pivot_row[j].is_zero() {
                    let delta = &factor * &pivot_row[j];
                    self.rows[i][j] -= delta;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        let factor = reduced[c].clone();
        if !factor.is_zero() {
            for j in 0..self.total_cols {
                if !pivot_row[j].is_zero() {
                    let delta = &factor * &pivot_row[j];
                    reduced[j] -= delta;
                }
            }
            *z += &factor * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule simplex on the current tableau until optimality.
    /// Returns false if unbounded.
    fn iterate(
        &mut self,
        reduced: &mut [BigRational],
        z: &mut BigRational,
        allowed: usize,
        pivots: &mut u64,
        max_pivots: u64,
    ) -> Result<bool> {
        loop {
            // Bland: entering variable = lowest index with negative reduced cost.
            let mut entering = None;
            for j in 0..allowed {
                if reduced[j].is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let c = match entering {
                Some(c) => c,
                None => return Ok(true),
            };
            // Ratio test; ties broken by lowest basis variable index (Bland).
            let mut best: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    match &best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]) {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let r = match best {
                Some((r, _)) => r,
                None => return Ok(false),
            };
            *pivots += 1;
            if *pivots > max_pivots {
                return Err(Error::ResourceLimit(format!(
                    "simplex pivot cap {max_pivots} exceeded"
                )));
            }
            self.pivot(r, c, reduced, z);
        }
    }

    fn run(mut self, max_pivots: u64) -> Result<LpOutcome> {
        let m = self.rows.len();
        let mut pivots = 0u64;

        // Phase 1: minimize the sum of artificials.
        if self.artificial_start < self.total_cols {
            let mut reduced = vec![BigRational::zero(); self.total_cols];
            for j in self.artificial_start..self.total_cols {
                reduced[j] = BigRational::one();
            }
            let mut z = BigRational::zero();
            // Price out the artificial basis.
            for i in 0..m {
                if self.basis[i] >= self.artificial_start {
                    let row = self.rows[i].clone();
                    for j in 0..self.total_cols {
                        reduced[j] -= &row[j];
                    }
                    z += self.rhs[i].clone();
                }
            }
            let done = self.iterate(
                &mut reduced,
                &mut z,
                self.total_cols,
                &mut pivots,
                max_pivots,
            )?;
            debug_assert!(done, "phase 1 is bounded below by zero");
            if z.is_positive() {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis.
            for i in 0..m {
                if self.basis[i] >= self.artificial_start {
                    debug_assert!(self.rhs[i].is_zero());
                    let col = (0..self.artificial_start)
                        .find(|&j| !self.rows[i][j].is_zero());
                    if let Some(c) = col {
                        let mut dummy = vec![BigRational::zero(); self.total_cols];
                        let mut dz = BigRational::zero();
                        self.pivot(i, c, &mut dummy, &mut dz);
                    }
                    // Otherwise the row is redundant (all structural entries
                    // zero); the artificial stays basic at level zero, which
                    // is harmless as long as it never re-enters elsewhere.
                }
            }
        }

        // Phase 2: minimize the real objective; artificials may not enter.
        let mut reduced = vec![BigRational::zero(); self.total_cols];
        for j in 0..self.num_structural {
            reduced[j] = self.objective[j].clone();
        }
        let mut z = BigRational::zero();
        for i in 0..m {
            let b = self.basis[i];
            if b < self.num_structural && !self.objective[b].is_zero() {
                let coef = self.objective[b].clone();
                let row = self.rows[i].clone();
                for j in 0..self.total_cols {
                    if !row[j].is_zero() {
                        reduced[j] -= &coef * &row[j];
                    }
                }
                z += &coef * &self.rhs[i];
            }
        }
        let done = self.iterate(
            &mut reduced,
            &mut z,
            self.artificial_start,
            &mut pivots,
            max_pivots,
        )?;
        if !done {
            return Ok(LpOutcome::Unbounded);
        }

        let mut assignment = vec![BigRational::zero(); self.num_structural];
        for i in 0..m {
            if self.basis[i] < self.num_structural {
                assignment[self.basis[i]] = self.rhs[i].clone();
            }
        }
        // Recover duals from the reduced costs of each row's identity column.
        let mut duals = Vec::with_capacity(m);
        for i in 0..m {
            let y = if let Some(a) = self.row_art[i] {
                -reduced[a].clone()
            } else if let Some(s) = self.row_slack[i] {
                -reduced[s].clone()
            } else {
                BigRational::zero()
            };
            duals.push(if self.row_sign[i] { -y } else { y });
        }
        Ok(LpOutcome::Optimal {
            value: z,
            assignment,
            duals,
        })
    }
}

/// Brute-force cross-check for small LPs: enumerates candidate basic points
/// (intersections of constraint/nonnegativity hyperplanes), keeps the feasible
/// ones and returns the exact minimum with its point. Returns `None` when no
/// feasible vertex exists. Only meaningful for LPs whose feasible region is
/// bounded, where the optimum is attained at a vertex.
pub fn vertex_enumeration_optimum(lp: &LinProgram) -> Option<(BigRational, Vec<BigRational>)> {
    let n = lp.num_vars;
    // Rows: every constraint as an equation candidate, plus x_i = 0.
    let mut planes: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![BigRational::zero(); n];
        for (v, coef) in &c.lhs {
            row[*v] += coef.clone();
        }
        planes.push((row, c.rhs.clone()));
    }
    for i in 0..n {
        let mut row = vec![BigRational::zero(); n];
        row[i] = BigRational::one();
        planes.push((row, BigRational::zero()));
    }

    let feasible = |x: &[BigRational]| -> bool {
        if x.iter().any(|v| v.is_negative()) {
            return false;
        }
        lp.constraints.iter().all(|c| {
            let lhs: BigRational = c
                .lhs
                .iter()
                .map(|(v, coef)| coef * &x[*v])
                .sum();
            match c.rel {
                Rel::Le => lhs <= c.rhs,
                Rel::Ge => lhs >= c.rhs,
                Rel::Eq => lhs == c.rhs,
            }
        })
    };

    let mut best: Option<(BigRational, Vec<BigRational>)> = None;
    let k = planes.len();
    if n == 0 || k < n {
        return None;
    }
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&combo, &planes, n) {
            if feasible(&x) {
                let val: BigRational = lp
                    .objective
                    .iter()
                    .zip(&x)
                    .map(|(c, v)| c * v)
                    .sum();
                match &best {
                    None => best = Some((val, x)),
                    Some((bv, _)) if val < *bv => best = Some((val, x)),
                    _ => {}
                }
            }
        }
        if !next_combination(&mut combo, k) {
            return best;
        }
    }
}

/// Advances an ascending index combination over `0..k`; false when exhausted.
fn next_combination(combo: &mut [usize], k: usize) -> bool {
    let n = combo.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if combo[i] < k - (n - i) {
            combo[i] += 1;
            for j in i + 1..n {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the square system given by the selected planes; `None` if singular.
fn solve_square(
    sel: &[usize],
    planes: &[(Vec<BigRational>, BigRational)],
    n: usize,
) -> Option<Vec<BigRational>> {
    let mut a: Vec<Vec<BigRational>> = sel.iter().map(|&i| planes[i].0.clone()).collect();
    let mut b: Vec<BigRational> = sel.iter().map(|&i| planes[i].1.clone()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for j in col..n {
            a[col][j] /= p.clone();
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..n {
                    let d = &f * &a[col][j];
                    a[r][j] -= d;
                }
                let d = &f * &b[col];
                b[r] -= d;
            }
        }
    }
    Some(b)
}
