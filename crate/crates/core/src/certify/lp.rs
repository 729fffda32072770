//! Dense revised simplex for small standard-form programs
//!
//! ```text
//! minimise c·x  subject to  A x = b,  x ≥ 0
//! ```
//!
//! with few rows and many columns. The basis matrix is refactored from the
//! original data at every iteration, so no round-off accumulates across
//! pivots. Phase I uses one artificial per row; Dantzig pricing with a switch
//! to Bland's rule after a run of degenerate pivots guarantees termination.
//! Every tie is broken by lowest index, so results are deterministic.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const PRICE_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
const MAX_ITER: usize = 50_000;
const DEGENERATE_RUN: usize = 50;

/// Problem data. `columns` is column-major: column `j` occupies
/// `columns[j*rows..(j+1)*rows]`.
pub struct StandardLp<'a> {
    pub rows: usize,
    pub costs: &'a [f64],
    pub columns: &'a [f64],
    pub rhs: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Row prices `y` with `c_j − y·A_j ≥ 0` at optimality.
    pub duals: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    columns: &'a [f64],
    sign: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl<'a> Simplex<'a> {
    /// Column `j` of `[S·A | I]` where `S` flips rows with negative rhs.
    fn column(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            let col = &self.columns[j * self.m..(j + 1) * self.m];
            for i in 0..self.m {
                out[i] = self.sign[i] * col[i];
            }
        } else {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let col = &self.columns[j * self.m..(j + 1) * self.m];
            (0..self.m).map(|i| y[i] * self.sign[i] * col[i]).sum()
        } else {
            y[j - self.n]
        }
    }

    fn basis_matrix(&self) -> Option<Lu> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                mat[i * m + k] = col[i];
            }
        }
        Lu::factor(mat, m)
    }

    fn run(&mut self, cost: &dyn Fn(usize) -> f64, enterable: &dyn Fn(usize) -> bool) -> Result<Outcome> {
        let m = self.m;
        let mut degenerate = 0usize;
        let mut col = vec![0.0; m];
        for _ in 0..MAX_ITER {
            let lu = self.basis_matrix().ok_or_else(|| Error::Solver("singular basis".into()))?;
            let xb = lu.solve(&self.rhs);
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
            let y = lu.solve_transpose(&cb);

            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -PRICE_TOL;
            for j in 0..self.n + m {
                if !enterable(j) || self.basis.contains(&j) {
                    continue;
                }
                let r = cost(j) - self.dot_column(j, &y);
                if r < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };

            self.column(q, &mut col);
            let d = lu.solve(&col);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if d[i] > PIVOT_TOL {
                    let ratio = xb[i].max(0.0) / d[i];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            if ratio < best_ratio
                                || (ratio == best_ratio && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            degenerate = if ratio == 0.0 { degenerate + 1 } else { 0 };
            self.basis[r] = q;
        }
        Err(Error::Solver("iteration limit reached".into()))
    }
}

pub fn solve(lp: &StandardLp<'_>) -> Result<LpSolution> {
    let m = lp.rows;
    let n = lp.costs.len();
    if lp.columns.len() != n * m || lp.rhs.len() != m {
        return Err(Error::Argument("inconsistent LP dimensions".into()));
    }
    let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let rhs: Vec<f64> = lp.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
    let mut sx = Simplex {
        m,
        n,
        columns: lp.columns,
        sign,
        rhs,
        basis: (n..n + m).collect(),
    };

    // Phase I: minimise the sum of artificials.
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    sx.run(&phase1_cost, &|_| true)?;
    let lu = sx.basis_matrix().ok_or_else(|| Error::Solver("singular basis".into()))?;
    let xb = lu.solve(&sx.rhs);
    let infeasibility: f64 = sx
        .basis
        .iter()
        .zip(&xb)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v.max(0.0))
        .sum();
    if infeasibility > FEAS_TOL {
        return Err(Error::Infeasible(format!(
            "no nonnegative solution (phase I residual {infeasibility:.3e})"
        )));
    }

    // Pivot zero-level artificials out where a structural column allows it;
    // any that remain sit on redundant rows and never move again.
    let mut col = vec![0.0; m];
    for r in 0..m {
        if sx.basis[r] < n {
            continue;
        }
        let lu = sx.basis_matrix().ok_or_else(|| Error::Solver("singular basis".into()))?;
        let mut unit = vec![0.0; m];
        unit[r] = 1.0;
        let row = lu.solve_transpose(&unit);
        for j in 0..n {
            if sx.basis.contains(&j) {
                continue;
            }
            sx.column(j, &mut col);
            let pivot: f64 = row.iter().zip(&col).map(|(a, b)| a * b).sum();
            if pivot.abs() > 1e-9 {
                sx.basis[r] = j;
                break;
            }
        }
    }

    // Phase II.
    let costs = lp.costs;
    let phase2_cost = |j: usize| if j < n { costs[j] } else { 0.0 };
    if sx.run(&phase2_cost, &|j| j < n)? == Outcome::Unbounded {
        return Err(Error::Solver("objective unbounded below".into()));
    }

    let lu = sx.basis_matrix().ok_or_else(|| Error::Solver("singular basis".into()))?;
    let xb = lu.solve(&sx.rhs);
    let cb: Vec<f64> = sx.basis.iter().map(|&j| phase2_cost(j)).collect();
    let y_signed = lu.solve_transpose(&cb);
    let duals: Vec<f64> = y_signed.iter().zip(&sx.sign).map(|(y, s)| y * s).collect();
    let mut x = vec![0.0; n];
    for (&j, &v) in sx.basis.iter().zip(&xb) {
        if j < n {
            x[j] = v.max(0.0);
        }
    }
    let objective = x.iter().zip(costs).map(|(a, c)| a * c).sum();
    Ok(LpSolution { x, duals, objective })
}

/// LU factorisation with partial pivoting of a dense row-major matrix.
struct Lu {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, m: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let p = (k..m)
                .max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))
                .expect("nonempty range");
            if a[p * m + k].abs() < 1e-14 {
                return None;
            }
            if p != k {
                for c in 0..m {
                    a.swap(p * m + c, k * m + c);
                }
                perm.swap(p, k);
            }
            let pivot = a[k * m + k];
            for i in k + 1..m {
                let f = a[i * m + k] / pivot;
                a[i * m + k] = f;
                for c in k + 1..m {
                    a[i * m + c] -= f * a[k * m + c];
                }
            }
        }
        Some(Self { m, lu: a, perm })
    }

    /// Solves `A z = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut z: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..m {
            for k in 0..i {
                z[i] -= self.lu[i * m + k] * z[k];
            }
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                z[i] -= self.lu[i * m + k] * z[k];
            }
            z[i] /= self.lu[i * m + i];
        }
        z
    }

    /// Solves `Aᵀ z = b`.
    fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = b, Lᵀ v = w, z = Pᵀ v.
        let mut w = b.to_vec();
        for i in 0..m {
            for k in 0..i {
                w[i] -= self.lu[k * m + i] * w[k];
            }
            w[i] /= self.lu[i * m + i];
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                w[i] -= self.lu[k * m + i] * w[k];
            }
        }
        let mut z = vec![0.0; m];
        for (i, &p) in self.perm.iter().enumerate() {
            z[p] = w[i];
        }
        z
    }
}
