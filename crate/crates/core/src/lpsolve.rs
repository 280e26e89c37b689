//! Dense two-phase primal simplex for `min c.x  s.t.  A x >= b, x >= 0`.
//!
//! Pivoting uses Bland's rule throughout, so the solver terminates on
//! degenerate problems and is fully deterministic. Rows are equilibrated to
//! unit max-norm internally; reported `x` and objective refer to the
//! original problem.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("tolerance must lie in (0, 1e-3], got {0}")]
    Tolerance(f64),
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem<T: Scalar> {
    c: Vec<T>,
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Scalar> LpProblem<T> {
    /// `rows` is the constraint matrix, one inner vector per constraint.
    pub fn new(c: Vec<T>, rows: Vec<Vec<T>>, b: Vec<T>) -> Result<Self, LpError> {
        let n = c.len();
        if rows.len() != b.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                b.len()
            )));
        }
        let mut a = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            a.extend(row);
        }
        if !c.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if !a.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("constraint matrix"));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        Ok(Self { c, a, b })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.c
    }

    pub fn rhs(&self) -> &[T] {
        &self.b
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.num_vars();
        &self.a[i * n..(i + 1) * n]
    }

    pub fn coeff(&self, i: usize, j: usize) -> T {
        self.a[i * self.num_vars() + j]
    }

    /// Appends `row . x >= rhs`.
    pub fn push_constraint(&mut self, row: Vec<T>, rhs: T) -> Result<(), LpError> {
        if row.len() != self.num_vars() {
            return Err(LpError::Dimension(format!(
                "new row has {} entries, expected {}",
                row.len(),
                self.num_vars()
            )));
        }
        if !rhs.is_finite() || !row.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("appended constraint"));
        }
        self.a.extend(row);
        self.b.push(rhs);
        Ok(())
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, c: Vec<T>) -> Result<Self, LpError> {
        if c.len() != self.num_vars() {
            return Err(LpError::Dimension(format!(
                "objective has {} entries, expected {}",
                c.len(),
                self.num_vars()
            )));
        }
        if !c.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        Ok(Self { c, ..self.clone() })
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.c.iter().zip(x).map(|(&c, &x)| c * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T: Scalar> {
    pub status: LpStatus,
    /// Primal point; meaningful only when `Optimal`.
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

/// `A x >= b - tol (1 + |b|)` and `x >= -tol`, componentwise.
pub fn check_feasible<T: Scalar>(p: &LpProblem<T>, x: &[T], tol: T) -> Result<bool, LpError> {
    if x.len() != p.num_vars() {
        return Err(LpError::Dimension(format!(
            "point has {} entries, expected {}",
            x.len(),
            p.num_vars()
        )));
    }
    if x.iter().any(|&v| v.is_nan() || v < -tol) {
        return Ok(false);
    }
    Ok((0..p.num_constraints()).all(|i| {
        let lhs: T = p.row(i).iter().zip(x).map(|(&a, &x)| a * x).sum();
        let b = p.b[i];
        lhs >= b - tol * (T::one() + b.abs())
    }))
}

pub fn solve<T: Scalar>(p: &LpProblem<T>, tol: T) -> Result<LpSolution<T>, LpError> {
    let t = tol.as_f64();
    if !(t > 0.0 && t <= 1e-3) {
        return Err(LpError::Tolerance(t));
    }
    Tableau::new(p, tol).run(p)
}

/// Dense tableau. Columns: original variables, one surplus per row, then
/// artificials; the last column holds the right-hand side.
struct Tableau<T: Scalar> {
    rows: usize,
    n: usize,
    art_start: usize,
    width: usize,
    cells: Vec<T>,
    /// Reduced costs for every column, plus `-objective` in the last slot.
    cost_row: Vec<T>,
    basis: Vec<usize>,
    tol: T,
    iterations: usize,
    max_iterations: usize,
}

enum Pivoting {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn new(p: &LpProblem<T>, tol: T) -> Self {
        let m = p.num_constraints();
        let n = p.num_vars();
        // b_i > 0 needs an artificial; otherwise the negated surplus is basic.
        let needs_art: Vec<bool> = p.b.iter().map(|&b| b > T::zero()).collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let art_start = n + m;
        let width = art_start + n_art + 1;
        let mut cells = vec![T::zero(); m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = art_start;
        for i in 0..m {
            let row = p.row(i);
            let scale = row.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            let scale = if scale > T::zero() { scale } else { T::one() };
            let cell = &mut cells[i * width..(i + 1) * width];
            // a x - s = b, scaled, and negated when b <= 0 so the rhs is >= 0
            let sign = if needs_art[i] { T::one() } else { -T::one() };
            for j in 0..n {
                cell[j] = sign * row[j] / scale;
            }
            cell[n + i] = -sign;
            cell[width - 1] = sign * p.b[i] / scale;
            if needs_art[i] {
                cell[next_art] = T::one();
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + i);
            }
        }
        Self {
            rows: m,
            n,
            art_start,
            width,
            cells,
            cost_row: vec![T::zero(); width],
            basis,
            tol,
            iterations: 0,
            max_iterations: 50_000 + 50 * (m + n) * (m + 1),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.cells[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> T {
        self.at(i, self.width - 1)
    }

    /// Loads reduced costs for column costs `cost` (indexed by column).
    fn price(&mut self, cost: impl Fn(usize) -> T) {
        for j in 0..self.width {
            let cj = if j + 1 == self.width { T::zero() } else { cost(j) };
            let mut d = cj;
            for i in 0..self.rows {
                d = d - cost(self.basis[i]) * self.at(i, j);
            }
            self.cost_row[j] = d;
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let piv = self.at(r, col);
        for j in 0..w {
            self.cells[r * w + j] = self.cells[r * w + j] / piv;
        }
        self.cells[r * w + col] = T::one();
        let (before, rest) = self.cells.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [T]| {
            let f = row[col];
            if f != T::zero() {
                for (v, &p) in row.iter_mut().zip(prow.iter()) {
                    *v = *v - f * p;
                }
                row[col] = T::zero();
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        let f = self.cost_row[col];
        if f != T::zero() {
            for (v, &p) in self.cost_row.iter_mut().zip(prow.iter()) {
                *v = *v - f * p;
            }
            self.cost_row[col] = T::zero();
        }
        // rhs values below tolerance are degenerate zeros
        for i in 0..self.rows {
            let k = i * w + w - 1;
            if self.cells[k].abs() < self.tol * T::lit(1e-3) {
                self.cells[k] = T::zero();
            }
        }
        self.basis[r] = col;
        self.iterations += 1;
    }

    /// Bland's rule pivoting over columns `0..limit`.
    fn iterate(&mut self, limit: usize) -> Result<Pivoting, LpError> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            let entering = (0..limit).find(|&j| self.cost_row[j] < -self.tol);
            let Some(col) = entering else {
                return Ok(Pivoting::Optimal);
            };
            let mut best: Option<T> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > self.tol {
                    let ratio = self.rhs(i) / a;
                    best = Some(best.map_or(ratio, |b| b.min(ratio)));
                }
            }
            let Some(min_ratio) = best else {
                return Ok(Pivoting::Unbounded);
            };
            let slack = self.tol * (T::one() + min_ratio.abs());
            let leave = (0..self.rows)
                .filter(|&i| {
                    let a = self.at(i, col);
                    a > self.tol && self.rhs(i) / a <= min_ratio + slack
                })
                .min_by_key(|&i| self.basis[i])
                .expect("at least one candidate row");
            self.pivot(leave, col);
        }
    }

    fn run(mut self, p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
        let art_start = self.art_start;
        let has_art = self.width - 1 > art_start;
        if has_art {
            self.price(|j| if j >= art_start { T::one() } else { T::zero() });
            self.iterate(self.width - 1)?;
            let infeasibility = -self.cost_row[self.width - 1];
            let scale: T = T::one() + (0..self.rows).map(|i| self.rhs(i).abs()).sum::<T>();
            let still_art: T = (0..self.rows)
                .filter(|&i| self.basis[i] >= art_start)
                .map(|i| self.rhs(i))
                .sum();
            if infeasibility.max(still_art) > self.tol * scale {
                return Ok(self.finish(p, LpStatus::Infeasible));
            }
            // drive zero-level artificials out of the basis where possible
            for i in 0..self.rows {
                if self.basis[i] >= art_start {
                    if let Some(col) = (0..art_start).find(|&j| self.at(i, j).abs() > self.tol) {
                        self.pivot(i, col);
                    }
                }
            }
        }
        let c = &p.c;
        let n = self.n;
        self.price(|j| if j < n { c[j] } else { T::zero() });
        let status = match self.iterate(art_start)? {
            Pivoting::Optimal => LpStatus::Optimal,
            Pivoting::Unbounded => LpStatus::Unbounded,
        };
        Ok(self.finish(p, status))
    }

    fn finish(&self, p: &LpProblem<T>, status: LpStatus) -> LpSolution<T> {
        let mut x = vec![T::zero(); self.n];
        for i in 0..self.rows {
            let var = self.basis[i];
            if var < self.n {
                x[var] = self.rhs(i).max(T::zero());
            }
        }
        let objective = match status {
            LpStatus::Optimal => p.evaluate(&x),
            LpStatus::Infeasible => T::infinity(),
            LpStatus::Unbounded => T::neg_infinity(),
        };
        LpSolution {
            status,
            x,
            objective,
            iterations: self.iterations,
        }
    }
}
