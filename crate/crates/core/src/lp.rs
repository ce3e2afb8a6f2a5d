//! Linear programs in maximization form and a dense revised simplex solver.
//!
//! The solver is generic over [`Scalar`]: on `f64` it works with the
//! tolerances in [`Tolerances`], on `BigRational` every comparison is exact.
//! Variables are shifted to a zero lower bound and finite upper bounds become
//! explicit rows, so the dual of an upper bound is read off like any other
//! row dual.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `lo <= x <= hi`; `hi = None` is unbounded above.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound<T> {
    pub lo: T,
    pub hi: Option<T>,
}

/// `max c.x` subject to row constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
    bounds: Vec<Bound<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    /// `n_vars` variables with zero objective and bounds `[0, inf)`.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            objective: vec![T::zero(); n_vars],
            constraints: Vec::new(),
            bounds: (0..n_vars)
                .map(|_| Bound {
                    lo: T::zero(),
                    hi: None,
                })
                .collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[Bound<T>] {
        &self.bounds
    }

    pub fn set_objective(&mut self, j: usize, c: T) {
        self.objective[j] = c;
    }

    pub fn set_bounds(&mut self, j: usize, lo: T, hi: Option<T>) {
        self.bounds[j] = Bound { lo, hi };
    }

    /// Appends a row and returns its index.
    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Row with the given sparse `(var, coeff)` entries.
    pub fn add_sparse_constraint(
        &mut self,
        entries: &[(usize, T)],
        relation: Relation,
        rhs: T,
    ) -> usize {
        let mut coeffs = vec![T::zero(); self.n_vars()];
        for (j, a) in entries {
            coeffs[*j] = coeffs[*j].clone() + a.clone();
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row
                .coeffs
                .iter()
                .chain(Some(&row.rhs))
                .all(|a| a.to_f64().is_finite())
            {
                return Err(Error::invalid(format!("row {i} has non-finite data")));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let Some(hi) = &b.hi {
                if hi < &b.lo {
                    return Err(Error::invalid(format!(
                        "variable {j}: lower bound exceeds upper"
                    )));
                }
            }
        }
        if !self.objective.iter().all(|c| c.to_f64().is_finite()) {
            return Err(Error::invalid("objective has non-finite data"));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// CPLEX-LP style text, for cross-checking with external solvers.
    pub fn to_lp_string(&self) -> String {
        let term_list = |coeffs: &[T]| {
            let mut s = String::new();
            for (j, a) in coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let v = a.to_f64();
                let sign = if v < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {} x{j}", v.abs());
            }
            if s.is_empty() {
                s.push_str(" 0 x0");
            }
            s
        };
        let mut out = String::from("Maximize\n obj:");
        out += &term_list(&self.objective);
        out += "\nSubject To\n";
        for (i, row) in self.constraints.iter().enumerate() {
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(
                out,
                " c{i}:{} {rel} {}",
                term_list(&row.coeffs),
                row.rhs.to_f64()
            );
        }
        out += "Bounds\n";
        for (j, b) in self.bounds.iter().enumerate() {
            match &b.hi {
                Some(hi) => {
                    let _ = writeln!(out, " {} <= x{j} <= {}", b.lo.to_f64(), hi.to_f64());
                }
                None => {
                    let _ = writeln!(out, " x{j} >= {}", b.lo.to_f64());
                }
            }
        }
        out += "End\n";
        out
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Numerical knobs of the solver, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility.
    pub feasibility: f64,
    /// Smallest admissible pivot element.
    pub pivot: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivots between basis refactorizations (floating types only).
    pub refactor_every: usize,
    /// Hard iteration cap per phase.
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            pivot: 1e-10,
            optimality: 1e-10,
            bland_after: 1000,
            refactor_every: 50,
            max_iterations: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericallyStuck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult<T> {
    pub status: LpStatus,
    pub primal: Vec<T>,
    /// One multiplier per constraint row. For maximization: `>= 0` on `<=`
    /// rows, `<= 0` on `>=` rows, free on equalities.
    pub dual: Vec<T>,
    /// Multiplier of each finite upper bound (zero where `hi` is infinite).
    pub bound_dual: Vec<T>,
    pub objective_value: T,
    pub iterations: usize,
}

impl<T: Scalar> LpResult<T> {
    fn failed(status: LpStatus, lp: &LinearProgram<T>, iterations: usize) -> Self {
        LpResult {
            status,
            primal: vec![T::zero(); lp.n_vars()],
            dual: vec![T::zero(); lp.n_constraints()],
            bound_dual: vec![T::zero(); lp.n_vars()],
            objective_value: T::zero(),
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Converts a non-optimal status into an error.
    pub fn into_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            other => Err(Error::Numerical(format!(
                "LP not solved to optimality: {other:?}"
            ))),
        }
    }
}

/// Solves with default tolerances.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpResult<T>> {
    solve_with(lp, &Tolerances::default())
}

pub fn solve_with<T: Scalar>(lp: &LinearProgram<T>, tol: &Tolerances) -> Result<LpResult<T>> {
    lp.validate()?;
    let sf = StandardForm::build(lp);
    let mut simplex = Simplex::new(&sf, tol);

    // phase 1: drive the artificials to zero
    if sf.n_art > 0 {
        let cost: Vec<T> = (0..sf.n_cols())
            .map(|j| {
                if sf.is_artificial(j) {
                    -T::one()
                } else {
                    T::zero()
                }
            })
            .collect();
        match simplex.run(&sf, &cost, false) {
            Phase::Optimal => {}
            Phase::Stuck => {
                return Ok(LpResult::failed(
                    LpStatus::NumericallyStuck,
                    lp,
                    simplex.iterations,
                ))
            }
            Phase::Unbounded => unreachable!("phase 1 objective is bounded by zero"),
        }
        let infeas: T = simplex
            .basis
            .iter()
            .zip(&simplex.x_b)
            .filter(|(j, _)| sf.is_artificial(**j))
            .fold(T::zero(), |acc, (_, v)| acc + v.clone());
        let scale = 1.0 + sf.rhs.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max);
        if infeas > T::tolerance(tol.feasibility * scale) {
            return Ok(LpResult::failed(
                LpStatus::Infeasible,
                lp,
                simplex.iterations,
            ));
        }
        simplex.expel_artificials(&sf);
    }

    let cost = sf.phase2_cost();
    match simplex.run(&sf, &cost, true) {
        Phase::Optimal => {}
        Phase::Unbounded => {
            return Ok(LpResult::failed(
                LpStatus::Unbounded,
                lp,
                simplex.iterations,
            ))
        }
        Phase::Stuck => {
            return Ok(LpResult::failed(
                LpStatus::NumericallyStuck,
                lp,
                simplex.iterations,
            ))
        }
    }
    if !T::EXACT {
        simplex.refactor(&sf);
    }
    let result = sf.extract(lp, &simplex, &cost);
    if !T::EXACT {
        let res = residuals(lp, &result);
        let scale = 1.0 + result.objective_value.to_f64().abs();
        if res.primal_infeasibility > tol.feasibility * 10.0 * scale {
            return Ok(LpResult::failed(
                LpStatus::NumericallyStuck,
                lp,
                simplex.iterations,
            ));
        }
    }
    Ok(result)
}

/// `A x (=|<=) b`, `x >= 0`, `b >= 0` with slack/surplus/artificial columns.
struct StandardForm<T> {
    m: usize,
    n_struct: usize,
    n_art: usize,
    /// Sparse columns `(row, coeff)`.
    cols: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
    /// +1/-1 applied to each row to make its rhs nonnegative.
    row_sign: Vec<bool>,
    /// For rows that encode an upper bound: the variable.
    bound_row_var: Vec<Option<usize>>,
    first_art: usize,
    initial_basis: Vec<usize>,
    objective: Vec<T>,
}

/// Sparse coefficients, relation, right-hand side and the bounded variable if any.
type StandardRow<T> = (Vec<(usize, T)>, Relation, T, Option<usize>);

impl<T: Scalar> StandardForm<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.n_vars();
        // rows: original constraints then finite upper bounds
        let mut rows: Vec<StandardRow<T>> = Vec::new();
        for c in lp.constraints() {
            let shift = c
                .coeffs
                .iter()
                .zip(lp.bounds())
                .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.lo.clone());
            let entries = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(j, a)| (j, a.clone()))
                .collect();
            rows.push((entries, c.relation, c.rhs.clone() - shift, None));
        }
        for (j, b) in lp.bounds().iter().enumerate() {
            if let Some(hi) = &b.hi {
                rows.push((
                    vec![(j, T::one())],
                    Relation::Le,
                    hi.clone() - b.lo.clone(),
                    Some(j),
                ));
            }
        }
        let m = rows.len();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let mut bound_row_var = Vec::with_capacity(m);
        let mut relations = Vec::with_capacity(m);
        for (i, (entries, rel, b, bv)) in rows.into_iter().enumerate() {
            let flip = b < T::zero();
            let rel = match (flip, rel) {
                (false, r) => r,
                (true, Relation::Le) => Relation::Ge,
                (true, Relation::Ge) => Relation::Le,
                (true, Relation::Eq) => Relation::Eq,
            };
            for (j, a) in entries {
                cols[j].push((i, if flip { -a } else { a }));
            }
            rhs.push(if flip { -b } else { b });
            row_sign.push(flip);
            bound_row_var.push(bv);
            relations.push(rel);
        }
        let mut initial_basis = vec![usize::MAX; m];
        for (i, rel) in relations.iter().enumerate() {
            match rel {
                Relation::Le => {
                    initial_basis[i] = cols.len();
                    cols.push(vec![(i, T::one())]);
                }
                Relation::Ge => cols.push(vec![(i, -T::one())]),
                Relation::Eq => {}
            }
        }
        let first_art = cols.len();
        for (i, rel) in relations.iter().enumerate() {
            if *rel != Relation::Le {
                initial_basis[i] = cols.len();
                cols.push(vec![(i, T::one())]);
            }
        }
        let n_art = cols.len() - first_art;
        StandardForm {
            m,
            n_struct: n,
            n_art,
            cols,
            rhs,
            row_sign,
            bound_row_var,
            first_art,
            initial_basis,
            objective: lp.objective().to_vec(),
        }
    }

    fn n_cols(&self) -> usize {
        self.cols.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_art
    }

    fn phase2_cost(&self) -> Vec<T> {
        (0..self.n_cols())
            .map(|j| {
                if j < self.n_struct {
                    self.objective[j].clone()
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    fn extract(&self, lp: &LinearProgram<T>, s: &Simplex<T>, cost: &[T]) -> LpResult<T> {
        let mut primal: Vec<T> = lp.bounds().iter().map(|b| b.lo.clone()).collect();
        for (r, &j) in s.basis.iter().enumerate() {
            if j < self.n_struct {
                let v = if T::EXACT || s.x_b[r] > T::zero() {
                    s.x_b[r].clone()
                } else {
                    T::zero()
                };
                primal[j] = primal[j].clone() + v;
            }
        }
        let y = s.duals(cost);
        let mut dual = vec![T::zero(); lp.n_constraints()];
        let mut bound_dual = vec![T::zero(); lp.n_vars()];
        for i in 0..self.m {
            let v = if self.row_sign[i] {
                -y[i].clone()
            } else {
                y[i].clone()
            };
            match self.bound_row_var[i] {
                Some(j) => bound_dual[j] = v,
                None => dual[i] = v,
            }
        }
        let objective_value = lp.evaluate(&primal);
        LpResult {
            status: LpStatus::Optimal,
            primal,
            dual,
            bound_dual,
            objective_value,
            iterations: s.iterations,
        }
    }
}

enum Phase {
    Optimal,
    Unbounded,
    Stuck,
}

struct Simplex<T> {
    tol: Tolerances,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    /// Dense basis inverse, row major.
    binv: Vec<Vec<T>>,
    x_b: Vec<T>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<T: Scalar> Simplex<T> {
    fn new(sf: &StandardForm<T>, tol: &Tolerances) -> Self {
        let m = sf.m;
        let mut in_basis = vec![false; sf.n_cols()];
        for &j in &sf.initial_basis {
            in_basis[j] = true;
        }
        let binv = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| if i == k { T::one() } else { T::zero() })
                    .collect()
            })
            .collect();
        Simplex {
            tol: *tol,
            basis: sf.initial_basis.clone(),
            in_basis,
            binv,
            x_b: sf.rhs.clone(),
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.basis.len();
        let mut y = vec![T::zero(); m];
        for (i, &j) in self.basis.iter().enumerate() {
            if cost[j].is_zero() {
                continue;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                if !self.binv[i][k].is_zero() {
                    *yk = yk.clone() + cost[j].clone() * self.binv[i][k].clone();
                }
            }
        }
        y
    }

    fn column(&self, col: &[(usize, T)]) -> Vec<T> {
        self.binv
            .iter()
            .map(|row| {
                col.iter()
                    .fold(T::zero(), |acc, (r, a)| acc + row[*r].clone() * a.clone())
            })
            .collect()
    }

    fn run(&mut self, sf: &StandardForm<T>, cost: &[T], exclude_artificials: bool) -> Phase {
        let opt_tol = T::tolerance(self.tol.optimality);
        let piv_tol = T::tolerance(self.tol.pivot);
        let feas_tol = T::tolerance(self.tol.feasibility);
        let mut phase_iters = 0;
        loop {
            if phase_iters >= self.tol.max_iterations {
                return Phase::Stuck;
            }
            let y = self.duals(cost);
            // pricing
            let mut entering: Option<(usize, T)> = None;
            for (j, (col, cj)) in sf.cols.iter().zip(cost).enumerate() {
                if self.in_basis[j] || (exclude_artificials && sf.is_artificial(j)) {
                    continue;
                }
                let d = col
                    .iter()
                    .fold(cj.clone(), |acc, (r, a)| acc - y[*r].clone() * a.clone());
                if d > opt_tol {
                    let better = match &entering {
                        None => true,
                        Some((_, best)) => !self.bland && d > *best,
                    };
                    if better {
                        entering = Some((j, d));
                    }
                    if self.bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Phase::Optimal;
            };
            let alpha = self.column(&sf.cols[q]);
            // ratio test
            let mut leave: Option<(usize, T)> = None;
            for (i, a) in alpha.iter().enumerate() {
                if *a <= piv_tol {
                    continue;
                }
                let ratio = self.x_b[i].clone() / a.clone();
                let take = match &leave {
                    None => true,
                    Some((r, best)) => {
                        let diff = ratio.clone() - best.clone();
                        if diff < -feas_tol.clone() {
                            true
                        } else if diff <= feas_tol {
                            if self.bland {
                                self.basis[i] < self.basis[*r]
                            } else {
                                a.abs() > alpha[*r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, theta)) = leave else {
                return Phase::Unbounded;
            };
            if theta <= feas_tol {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.tol.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(sf, r, q, &alpha, theta);
            phase_iters += 1;
        }
    }

    fn pivot(&mut self, sf: &StandardForm<T>, r: usize, q: usize, alpha: &[T], theta: T) {
        let feas_tol = T::tolerance(self.tol.feasibility);
        for (i, (xi, ai)) in self.x_b.iter_mut().zip(alpha).enumerate() {
            if i == r {
                *xi = theta.clone();
            } else if !ai.is_zero() {
                let v = xi.clone() - theta.clone() * ai.clone();
                *xi = if !T::EXACT && v < T::zero() && v > -feas_tol.clone() {
                    T::zero()
                } else {
                    v
                };
            }
        }
        let pr = alpha[r].clone();
        let pivot_row: Vec<T> = self.binv[r]
            .iter()
            .map(|v| v.clone() / pr.clone())
            .collect();
        for (i, (row, ai)) in self.binv.iter_mut().zip(alpha).enumerate() {
            if i == r || ai.is_zero() {
                continue;
            }
            for (bk, pk) in row.iter_mut().zip(&pivot_row) {
                if !pk.is_zero() {
                    *bk = bk.clone() - ai.clone() * pk.clone();
                }
            }
        }
        self.binv[r] = pivot_row;
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
        if !T::EXACT && self.since_refactor >= self.tol.refactor_every {
            self.refactor(sf);
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self, sf: &StandardForm<T>) {
        let m = self.basis.len();
        let mut b = vec![vec![T::zero(); m]; m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (r, a) in &sf.cols[j] {
                b[*r][k] = a.clone();
            }
        }
        if let Some(inv) = invert(b) {
            self.binv = inv;
            self.x_b = self
                .binv
                .iter()
                .map(|row| dot(row, &sf.rhs))
                .map(|v| {
                    if v < T::zero() && v > -T::tolerance(self.tol.feasibility) {
                        T::zero()
                    } else {
                        v
                    }
                })
                .collect();
        }
        self.since_refactor = 0;
    }

    /// Pivots zero-valued artificials out of the basis where possible; rows
    /// where no structural column can enter are redundant and keep their
    /// artificial pinned at zero.
    fn expel_artificials(&mut self, sf: &StandardForm<T>) {
        let piv_tol = T::tolerance(self.tol.pivot);
        for r in 0..self.basis.len() {
            if !sf.is_artificial(self.basis[r]) {
                continue;
            }
            let candidate = (0..sf.first_art).find_map(|j| {
                if self.in_basis[j] {
                    return None;
                }
                let alpha = self.column(&sf.cols[j]);
                (alpha[r].abs() > piv_tol).then_some((j, alpha))
            });
            if let Some((j, alpha)) = candidate {
                let theta = self.x_b[r].clone() / alpha[r].clone();
                self.pivot(sf, r, j, &alpha, theta);
            }
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
fn invert<T: Scalar>(mut a: Vec<Vec<T>>) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| if i == k { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &k| {
            a[i][c]
                .abs()
                .partial_cmp(&a[k][c].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[p][c].is_zero() {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c].clone();
        for k in 0..n {
            a[c][k] = a[c][k].clone() / d.clone();
            inv[c][k] = inv[c][k].clone() / d.clone();
        }
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for k in 0..n {
                a[i][k] = a[i][k].clone() - f.clone() * a[c][k].clone();
                inv[i][k] = inv[i][k].clone() - f.clone() * inv[c][k].clone();
            }
        }
    }
    Some(inv)
}

/// Optimality certificate measurements for a solved LP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub primal_infeasibility: f64,
    pub complementary_slackness: f64,
    pub duality_gap: f64,
    pub dual_objective: f64,
}

fn row_activity<T: Scalar>(lp: &LinearProgram<T>, x: &[T]) -> Vec<T> {
    lp.constraints().iter().map(|c| dot(&c.coeffs, x)).collect()
}

/// `(A^T y)_j` for every column.
fn transpose_product<T: Scalar>(lp: &LinearProgram<T>, y: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); lp.n_vars()];
    for (c, yi) in lp.constraints().iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (o, a) in out.iter_mut().zip(&c.coeffs) {
            *o = o.clone() + a.clone() * yi.clone();
        }
    }
    out
}

/// Primal feasibility, complementary slackness and duality gap of a result.
pub fn residuals<T: Scalar>(lp: &LinearProgram<T>, res: &LpResult<T>) -> Residuals {
    let x = &res.primal;
    let act = row_activity(lp, x);
    let mut infeas: f64 = 0.0;
    let mut cs: f64 = 0.0;
    for ((c, a), yi) in lp.constraints().iter().zip(&act).zip(&res.dual) {
        let slack = (c.rhs.clone() - a.clone()).to_f64();
        let v = match c.relation {
            Relation::Le => (-slack).max(0.0),
            Relation::Ge => slack.max(0.0),
            Relation::Eq => slack.abs(),
        };
        infeas = infeas.max(v);
        cs = cs.max((yi.to_f64() * slack).abs());
    }
    let aty = transpose_product(lp, &res.dual);
    for (j, b) in lp.bounds().iter().enumerate() {
        let xj = x[j].to_f64();
        infeas = infeas.max(b.lo.to_f64() - xj);
        let z = res.bound_dual[j].to_f64();
        if let Some(hi) = &b.hi {
            infeas = infeas.max(xj - hi.to_f64());
            cs = cs.max((z * (hi.to_f64() - xj)).abs());
        }
        let v = aty[j].to_f64() + z - lp.objective()[j].to_f64();
        cs = cs.max((v * (xj - b.lo.to_f64())).abs());
    }
    let dual_obj = dual_objective(lp, &res.dual, &res.bound_dual).to_f64();
    Residuals {
        primal_infeasibility: infeas,
        complementary_slackness: cs,
        duality_gap: (dual_obj - res.objective_value.to_f64()).abs(),
        dual_objective: dual_obj,
    }
}

fn dual_objective<T: Scalar>(lp: &LinearProgram<T>, y: &[T], z: &[T]) -> T {
    let aty = transpose_product(lp, y);
    let mut obj = lp
        .constraints()
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (c, yi)| acc + c.rhs.clone() * yi.clone());
    for (j, b) in lp.bounds().iter().enumerate() {
        if let Some(hi) = &b.hi {
            obj = obj + hi.clone() * z[j].clone();
        }
        let v = aty[j].clone() + z[j].clone() - lp.objective()[j].clone();
        obj = obj - b.lo.clone() * v;
    }
    obj
}

/// A candidate dual solution: row multipliers plus, optionally, explicit
/// multipliers for the upper bounds. Without them the cheapest feasible
/// choice `z_j = max(0, c_j - (A^T y)_j)` is used.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCandidate<T> {
    pub rows: Vec<T>,
    pub upper: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport<T> {
    /// Largest violation of a sign condition on a multiplier.
    pub sign_violation: T,
    /// Largest `c_j - (A^T y)_j - z_j` over columns (positive part).
    pub constraint_violation: T,
    /// Dual objective; an upper bound on the primal optimum when feasible.
    pub dual_objective: T,
}

impl<T: Scalar> DualReport<T> {
    pub fn max_violation(&self) -> T {
        T::max_of(
            self.sign_violation.clone(),
            self.constraint_violation.clone(),
        )
    }
}

/// Measures how far `cand` is from dual feasibility for `lp`.
pub fn check_dual_feasibility<T: Scalar>(
    lp: &LinearProgram<T>,
    cand: &DualCandidate<T>,
) -> Result<DualReport<T>> {
    lp.validate()?;
    if cand.rows.len() != lp.n_constraints() {
        return Err(Error::invalid(format!(
            "dual candidate has {} row multipliers, LP has {} rows",
            cand.rows.len(),
            lp.n_constraints()
        )));
    }
    if let Some(z) = &cand.upper {
        if z.len() != lp.n_vars() {
            return Err(Error::invalid(format!(
                "dual candidate has {} bound multipliers, LP has {} variables",
                z.len(),
                lp.n_vars()
            )));
        }
    }
    let y = &cand.rows;
    let mut sign = T::zero();
    for (c, yi) in lp.constraints().iter().zip(y) {
        let v = match c.relation {
            Relation::Le => -yi.clone(),
            Relation::Ge => yi.clone(),
            Relation::Eq => T::zero(),
        };
        sign = T::max_of(sign, v);
    }
    let aty = transpose_product(lp, y);
    let z: Vec<T> = match &cand.upper {
        Some(z) => z.clone(),
        None => lp
            .bounds()
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let d = lp.objective()[j].clone() - aty[j].clone();
                if b.hi.is_some() && d > T::zero() {
                    d
                } else {
                    T::zero()
                }
            })
            .collect(),
    };
    let mut cons = T::zero();
    for (j, b) in lp.bounds().iter().enumerate() {
        sign = T::max_of(sign, -z[j].clone());
        if b.hi.is_none() {
            sign = T::max_of(sign, z[j].clone().abs());
        }
        let d = lp.objective()[j].clone() - aty[j].clone() - z[j].clone();
        cons = T::max_of(cons, d);
    }
    Ok(DualReport {
        sign_violation: sign,
        constraint_violation: cons,
        dual_objective: dual_objective(lp, y, &z),
    })
}
