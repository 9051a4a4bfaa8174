//! Small dense two-phase simplex for box-bounded linear programs
//!
//! ```text
//! minimize c·z  subject to  A z <= b,  lo <= z <= hi
//! ```
//!
//! Sized for the per-WBAN blocks of the aggregation problem (a dozen
//! variables, a dozen rows). Bland's rule keeps it cycle-free.

const PIVOT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub z: Vec<f64>,
    pub objective: f64,
    /// Non-negative multiplier of each `A z <= b` row at the optimum.
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { cost, rows: Vec::new(), rhs: Vec::new(), lower, upper }
    }

    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn push_row(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n_vars());
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> LpSolution {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    m_a: usize,
    n_slack: usize,
    n_art: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let m_a = lp.rows.len();
        let m = m_a + n;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m);
        for (a, b) in lp.rows.iter().zip(&lp.rhs) {
            let shift: f64 = a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum();
            rows.push((a.clone(), b - shift));
        }
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            rows.push((e, lp.upper[j] - lp.lower[j]));
        }
        let flipped: Vec<bool> = rows.iter().map(|(_, b)| *b < 0.0).collect();
        let n_art = flipped.iter().filter(|f| **f).count();
        let width = n + m + n_art + 1;
        let mut t = vec![vec![0.0; width]; m];
        let mut basis = vec![0; m];
        let mut art = 0;
        for (i, (a, b)) in rows.into_iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            for j in 0..n {
                t[i][j] = sign * a[j];
            }
            t[i][n + i] = sign;
            t[i][width - 1] = sign * b;
            if flipped[i] {
                t[i][n + m + art] = 1.0;
                basis[i] = n + m + art;
                art += 1;
            } else {
                basis[i] = n + i;
            }
        }
        Tableau { t, basis, n, m_a, n_slack: m, n_art }
    }

    fn width(&self) -> usize {
        self.n + self.n_slack + self.n_art + 1
    }

    fn is_art(&self, col: usize) -> bool {
        col >= self.n + self.n_slack && col < self.width() - 1
    }

    fn reduced_costs(&self, col_cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let w = self.width();
        let mut d: Vec<f64> = (0..w - 1).map(col_cost).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = col_cost(b);
            if cb != 0.0 {
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj -= cb * self.t[i][j];
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.t[r][c];
        for j in 0..w {
            self.t[r][j] /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for j in 0..w {
                        row[j] -= f * pivot_row[j];
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations for the given column costs. Returns false on
    /// iteration exhaustion.
    fn optimize(&mut self, col_cost: &dyn Fn(usize) -> f64, allow_art: bool) -> bool {
        let w = self.width();
        for _ in 0..MAX_PIVOTS {
            let d = self.reduced_costs(col_cost);
            let entering = (0..w - 1)
                .find(|&j| d[j] < -PIVOT_EPS && (allow_art || !self.is_art(j)) && !self.basis.contains(&j));
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][w - 1] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            // Box rows bound every variable, so an entering column always has
            // a positive entry somewhere.
            let Some((r, _)) = best else { return true };
            self.pivot(r, c);
        }
        false
    }

    fn run(mut self, lp: &LinearProgram) -> LpSolution {
        let n = self.n;
        let infeasible = |n_rows: usize| LpSolution {
            status: LpStatus::Infeasible,
            z: lp.lower.clone(),
            objective: f64::INFINITY,
            duals: vec![0.0; n_rows],
        };
        if lp.lower.iter().zip(&lp.upper).any(|(l, u)| l > u) {
            return infeasible(self.m_a);
        }
        if self.n_art > 0 {
            let first_art = n + self.n_slack;
            let w = self.width();
            let phase1 = move |j: usize| if j >= first_art && j < w - 1 { 1.0 } else { 0.0 };
            self.optimize(&phase1, true);
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, b)| self.is_art(**b))
                .map(|(i, _)| self.t[i][w - 1])
                .sum();
            if infeas > FEAS_EPS {
                return infeasible(self.m_a);
            }
            for i in 0..self.t.len() {
                if self.is_art(self.basis[i]) {
                    if let Some(c) = (0..n + self.n_slack).find(|&j| self.t[i][j].abs() > 1e-9) {
                        self.pivot(i, c);
                    }
                }
            }
        }
        let cost = lp.cost.clone();
        let phase2 = move |j: usize| if j < n { cost[j] } else { 0.0 };
        self.optimize(&phase2, false);

        let w = self.width();
        let mut shift = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                shift[b] = self.t[i][w - 1];
            }
        }
        let z: Vec<f64> = (0..n).map(|j| (lp.lower[j] + shift[j]).clamp(lp.lower[j], lp.upper[j])).collect();
        let d = self.reduced_costs(&phase2);
        let duals = (0..self.m_a).map(|i| d[n + i].max(0.0)).collect();
        let objective = z.iter().zip(&lp.cost).map(|(a, b)| a * b).sum();
        LpSolution { status: LpStatus::Optimal, z, objective, duals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_only_goes_to_cheapest_corner() {
        let lp = LinearProgram::new(vec![1.0, -2.0, 0.0], vec![0.0; 3], vec![1.0; 3]);
        let s = lp.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.z[0], 0.0);
        assert_eq!(s.z[1], 1.0);
        assert_eq!(s.objective, -2.0);
    }

    #[test]
    fn lower_bound_row() {
        // min x  s.t.  x >= 0.9
        let mut lp = LinearProgram::new(vec![3.0], vec![0.0], vec![1.0]);
        lp.push_row(vec![-1.0], -0.9);
        let s = lp.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.z[0] - 0.9).abs() < 1e-12);
        assert!((s.objective - 2.7).abs() < 1e-12);
        assert!((s.duals[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_mix() {
        // min x + 2y  s.t. x + y >= 1.5, x <= 0.8 (via bound)
        let mut lp = LinearProgram::new(vec![1.0, 2.0], vec![0.0, 0.0], vec![0.8, 1.0]);
        lp.push_row(vec![-1.0, -1.0], -1.5);
        let s = lp.solve();
        assert!((s.z[0] - 0.8).abs() < 1e-12);
        assert!((s.z[1] - 0.7).abs() < 1e-12);
        assert!((s.objective - 2.2).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(vec![1.0], vec![0.0], vec![1.0]);
        lp.push_row(vec![-1.0], -1.5);
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
        let crossed = LinearProgram::new(vec![1.0], vec![0.6], vec![0.5]);
        assert_eq!(crossed.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn fixed_variable_through_bounds() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 1.0]);
        lp.push_row(vec![-1.0, 1.0], 0.25);
        let s = lp.solve();
        assert_eq!(s.z[1], 1.0);
        assert!((s.z[0] - 0.75).abs() < 1e-12);
    }
}
