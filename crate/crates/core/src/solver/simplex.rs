//! Dense bounded-variable simplex.
//!
//! Every row `i` gets a logical column `r_i = a_i x` whose bounds encode the
//! row sense, so the system is `[A | -I] (x, r) = 0` with all variables boxed.
//! The tableau `T = B^-1 [A | -I]` is stored densely; rows and columns are
//! scaled by powers of two before the first pivot.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::ilp::{IlpModel, Sense};

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_STREAK: usize = 50;
const REFRESH_EVERY: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone, Debug)]
pub(crate) struct Lp {
    m: usize,
    n: usize,
    w: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    x: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    col_scale: Vec<f64>,
    tol: f64,
    pub iterations: usize,
    max_iterations: usize,
    since_refresh: usize,
}

fn pow2_scale(max_abs: f64) -> f64 {
    if max_abs > 0.0 && max_abs.is_finite() {
        2f64.powi(-(max_abs.log2().round() as i32))
    } else {
        1.0
    }
}

impl Lp {
    pub fn new(model: &IlpModel, tol: f64) -> Result<Self> {
        let n = model.num_vars();
        let m = model.num_constraints();
        let w = n + m;

        let mut row_scale = vec![1.0; m];
        for (i, row) in model.constraints().iter().enumerate() {
            let big = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            row_scale[i] = pow2_scale(big);
        }
        let mut col_max = vec![0.0f64; n];
        for (i, row) in model.constraints().iter().enumerate() {
            for &(c, v) in &row.coeffs {
                col_max[c] = col_max[c].max((v * row_scale[i]).abs());
            }
        }
        let col_scale: Vec<f64> = col_max.iter().map(|&v| pow2_scale(v)).collect();

        let mut rows = Vec::with_capacity(m);
        let mut t = vec![0.0; m * w];
        let mut lo = vec![0.0; w];
        let mut hi = vec![0.0; w];
        for (i, row) in model.constraints().iter().enumerate() {
            let mut scaled: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
            for &(c, v) in &row.coeffs {
                let a = v * row_scale[i] * col_scale[c];
                if a != 0.0 {
                    scaled.push((c, a));
                }
            }
            scaled.sort_by_key(|&(c, _)| c);
            // Merge duplicate columns.
            scaled.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            for &(c, a) in &scaled {
                t[i * w + c] = -a;
            }
            t[i * w + n + i] = 1.0;
            rows.push(scaled);
            let b = row.rhs * row_scale[i];
            let (l, u) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo[n + i] = l;
            hi[n + i] = u;
        }

        let mut cost = vec![0.0; w];
        let mut state = vec![State::Basic; w];
        let mut x = vec![0.0; w];
        for j in 0..n {
            cost[j] = model.objective()[j] * col_scale[j];
            lo[j] = model.lower_bounds()[j] / col_scale[j];
            hi[j] = model.upper_bounds()[j] / col_scale[j];
            if lo[j].is_finite() {
                state[j] = State::Lower;
                x[j] = lo[j];
            } else if hi[j].is_finite() {
                state[j] = State::Upper;
                x[j] = hi[j];
            } else {
                return Err(Error::InvalidParameter(format!("column {j} has no finite bound")));
            }
            if lo[j] > hi[j] {
                return Err(Error::InvalidParameter(format!("column {j} has crossed bounds")));
            }
        }
        let basis: Vec<usize> = (n..w).collect();
        let mut lp = Lp {
            m,
            n,
            w,
            t,
            d: cost.clone(),
            cost,
            lo,
            hi,
            state,
            basis,
            x,
            rows,
            col_scale,
            tol,
            iterations: 0,
            max_iterations: 50_000 + 50 * w,
            since_refresh: 0,
        };
        lp.compute_values();
        Ok(lp)
    }

    /// Changes the bounds of structural column `j` (unscaled values).
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let s = self.col_scale[j];
        self.lo[j] = lower / s;
        self.hi[j] = upper / s;
        match self.state[j] {
            State::Basic => {}
            State::Lower | State::Upper => {
                if self.lo[j].is_finite() && (self.state[j] == State::Lower || !self.hi[j].is_finite()) {
                    self.state[j] = State::Lower;
                    self.x[j] = self.lo[j];
                } else {
                    self.state[j] = State::Upper;
                    self.x[j] = self.hi[j];
                }
            }
        }
    }

    /// Unscaled structural values.
    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x[j] * self.col_scale[j]).collect()
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn compute_values(&mut self) {
        let (m, w) = (self.m, self.w);
        let nz: Vec<(usize, f64)> = (0..w)
            .filter(|&j| self.state[j] != State::Basic && self.x[j] != 0.0)
            .map(|j| (j, self.x[j]))
            .collect();
        for i in 0..m {
            let row = &self.t[i * w..(i + 1) * w];
            let v: f64 = nz.iter().map(|&(j, xj)| row[j] * xj).sum();
            self.x[self.basis[i]] = -v;
        }
    }

    fn compute_duals(&mut self) {
        let w = self.w;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (dj, &tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
        self.since_refresh = 0;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let (m, w) = (self.m, self.w);
        let piv = self.t[r * w + q];
        let mut pivot_row: Vec<(usize, f64)> = Vec::new();
        for j in 0..w {
            let v = self.t[r * w + j];
            if v != 0.0 {
                let nv = v / piv;
                if nv.abs() < DROP_TOL {
                    self.t[r * w + j] = 0.0;
                } else {
                    self.t[r * w + j] = nv;
                    pivot_row.push((j, nv));
                }
            }
        }
        self.t[r * w + q] = 1.0;
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for &(j, v) in &pivot_row {
                let nv = row[j] - f * v;
                row[j] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(j, v) in &pivot_row {
                self.d[j] -= f * v;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.state[leaving] = State::Lower;
        self.iterations += 1;
        self.since_refresh += 1;
    }

    fn infeasibility(&self, b: usize) -> f64 {
        let v = self.x[b];
        if v < self.lo[b] - self.tol {
            self.lo[b] - v
        } else if v > self.hi[b] + self.tol {
            v - self.hi[b]
        } else {
            0.0
        }
    }

    fn is_dual_feasible(&self) -> bool {
        (0..self.w).all(|j| match self.state[j] {
            State::Basic => true,
            _ if self.lo[j] == self.hi[j] => true,
            State::Lower => self.d[j] >= -self.tol,
            State::Upper => self.d[j] <= self.tol,
        })
    }

    fn check_budget(&self) -> Result<()> {
        if self.iterations > self.max_iterations {
            Err(Error::Numerical(format!("simplex exceeded {} iterations", self.max_iterations)))
        } else {
            Ok(())
        }
    }

    /// Dual simplex until primal feasibility. Returns false when the row that
    /// is out of bounds admits no entering column, i.e. the LP is infeasible.
    fn dual(&mut self) -> Result<bool> {
        let w = self.w;
        loop {
            self.check_budget()?;
            if self.since_refresh >= REFRESH_EVERY {
                self.compute_duals();
            }
            self.compute_values();
            let mut leave = None;
            let mut worst = self.tol;
            for i in 0..self.m {
                let inf = self.infeasibility(self.basis[i]);
                if inf > worst {
                    worst = inf;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return Ok(true);
            };
            let b = self.basis[r];
            let up = self.x[b] < self.lo[b];
            let s = if up { 1.0 } else { -1.0 };

            let row = &self.t[r * w..(r + 1) * w];
            let mut theta_max = f64::INFINITY;
            let mut cand: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..w {
                let a = row[j];
                if a.abs() < PIVOT_TOL || self.lo[j] == self.hi[j] {
                    continue;
                }
                let dj = match self.state[j] {
                    State::Basic => continue,
                    State::Lower if s * a < 0.0 => self.d[j].max(0.0),
                    State::Upper if s * a > 0.0 => (-self.d[j]).max(0.0),
                    _ => continue,
                };
                theta_max = theta_max.min((dj + self.tol) / a.abs());
                cand.push((j, dj, a.abs()));
            }
            let mut best: Option<(usize, f64)> = None;
            for &(j, dj, a) in &cand {
                if dj / a <= theta_max && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            let Some((q, _)) = best else {
                return Ok(false);
            };
            self.pivot(r, q);
            if up {
                self.state[b] = State::Lower;
                self.x[b] = self.lo[b];
            } else {
                self.state[b] = State::Upper;
                self.x[b] = self.hi[b];
            }
        }
    }

    /// Composite primal simplex: phase 1 minimizes the sum of bound
    /// violations, phase 2 the objective.
    fn primal(&mut self) -> Result<LpStatus> {
        let w = self.w;
        let mut degenerate = 0usize;
        let mut phase_costs = vec![0.0; w];
        loop {
            self.check_budget()?;
            if self.since_refresh >= REFRESH_EVERY {
                self.compute_duals();
            }
            self.compute_values();

            let mut phase1 = false;
            let mut g = vec![0.0; self.m];
            for i in 0..self.m {
                let b = self.basis[i];
                if self.x[b] < self.lo[b] - self.tol {
                    g[i] = -1.0;
                    phase1 = true;
                } else if self.x[b] > self.hi[b] + self.tol {
                    g[i] = 1.0;
                    phase1 = true;
                }
            }
            let dd: &[f64] = if phase1 {
                phase_costs.iter_mut().for_each(|v| *v = 0.0);
                for (i, &gi) in g.iter().enumerate() {
                    if gi != 0.0 {
                        let row = &self.t[i * w..(i + 1) * w];
                        for (pj, &tij) in phase_costs.iter_mut().zip(row) {
                            *pj -= gi * tij;
                        }
                    }
                }
                &phase_costs
            } else {
                &self.d
            };

            let bland = degenerate > DEGENERATE_STREAK;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..w {
                if self.state[j] == State::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let dj = dd[j];
                let dir = match self.state[j] {
                    State::Lower if dj < -self.tol => 1.0,
                    State::Upper if dj > self.tol => -1.0,
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            let mut rows: Vec<(usize, f64, f64, State)> = Vec::new();
            for i in 0..self.m {
                let alpha = -dir * self.t[i * w + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let v = self.x[b];
                let below = v < self.lo[b] - self.tol;
                let above = v > self.hi[b] + self.tol;
                let (target, st) = if alpha > 0.0 {
                    if above {
                        continue;
                    } else if below {
                        (self.lo[b], State::Lower)
                    } else {
                        (self.hi[b], State::Upper)
                    }
                } else if below {
                    continue;
                } else if above {
                    (self.hi[b], State::Upper)
                } else {
                    (self.lo[b], State::Lower)
                };
                if !target.is_finite() {
                    continue;
                }
                let ratio = (target - v) / alpha;
                theta_max = theta_max.min(ratio + self.tol / alpha.abs());
                rows.push((i, ratio, alpha.abs(), st));
            }
            let flip = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, f64, f64, State)> = None;
            for &(i, ratio, a, st) in &rows {
                if ratio <= theta_max && leave.is_none_or(|(_, _, ba, _)| a > ba) {
                    leave = Some((i, ratio, a, st));
                }
            }
            match leave {
                Some((_, ratio, ..)) if flip <= ratio.max(0.0) => {
                    self.flip(q);
                    degenerate = 0;
                }
                None if flip.is_finite() => {
                    self.flip(q);
                    degenerate = 0;
                }
                None => return Ok(LpStatus::Unbounded),
                Some((r, ratio, _, st)) => {
                    if ratio.max(0.0) < 1e-12 {
                        degenerate += 1;
                    } else {
                        degenerate = 0;
                    }
                    let b = self.basis[r];
                    self.pivot(r, q);
                    self.state[b] = st;
                    self.x[b] = if st == State::Lower { self.lo[b] } else { self.hi[b] };
                }
            }
        }
    }

    fn flip(&mut self, q: usize) {
        if self.state[q] == State::Lower {
            self.state[q] = State::Upper;
            self.x[q] = self.hi[q];
        } else {
            self.state[q] = State::Lower;
            self.x[q] = self.lo[q];
        }
        self.iterations += 1;
    }

    /// Largest violation of `A x = r` at the current point.
    fn residual(&self) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let ax: f64 = row.iter().map(|&(c, a)| a * self.x[c]).sum();
                (ax - self.x[self.n + i]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Rebuilds the tableau from the original rows for the current basis.
    fn refactor(&mut self) -> Result<()> {
        let (m, n, w) = (self.m, self.n, self.w);
        let mut t = vec![0.0; m * w];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, a) in row {
                t[i * w + c] = a;
            }
            t[i * w + n + i] = -1.0;
        }
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let cols = self.basis.clone();
        for &q in &cols {
            let mut r = None;
            let mut best = 1e-11;
            for i in 0..m {
                if !assigned[i] && t[i * w + q].abs() > best {
                    best = t[i * w + q].abs();
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                return Err(Error::Numerical("singular basis".into()));
            };
            let piv = t[r * w + q];
            for j in 0..w {
                t[r * w + j] /= piv;
            }
            for i in 0..m {
                if i != r {
                    let f = t[i * w + q];
                    if f != 0.0 {
                        for j in 0..w {
                            t[i * w + j] -= f * t[r * w + j];
                        }
                    }
                }
            }
            assigned[r] = true;
            new_basis[r] = q;
        }
        self.t = t;
        self.basis = new_basis;
        self.compute_duals();
        self.compute_values();
        Ok(())
    }

    pub fn solve(&mut self) -> Result<LpStatus> {
        for attempt in 0..2 {
            self.compute_duals();
            self.compute_values();
            let status = if self.is_dual_feasible() {
                if !self.dual()? {
                    LpStatus::Infeasible
                } else {
                    self.compute_duals();
                    self.primal()?
                }
            } else {
                self.primal()?
            };
            if status != LpStatus::Optimal {
                return Ok(status);
            }
            self.compute_values();
            if self.residual() <= 1e-7 || attempt == 1 {
                return Ok(status);
            }
            self.refactor()?;
        }
        unreachable!()
    }
}
