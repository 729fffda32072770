//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use sdiqrng::certify::GridSpec;
use sdiqrng::physics::Behavior;

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Largest |p(1|1) − p(1|0)| reachable with states of mean energy `e`.
pub fn bias(e: f64) -> f64 {
    if e >= 0.5 {
        1.0
    } else {
        2.0 * (e * (1.0 - e)).sqrt()
    }
}

/// `(u, v, e, entropy)` for the extremal strategies of each grid level,
/// built from the closed-form boundary rather than the library's atom list.
pub fn oracle_atoms(omega: f64, grid: &GridSpec) -> Vec<[f64; 4]> {
    let mut atoms = vec![[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]];
    for e in grid.energies(omega) {
        let d = bias(e);
        let h = 0.5 * h2(d);
        for (u, v) in [(0.0, d), (1.0 - d, 1.0), (d, 0.0), (1.0, 1.0 - d)] {
            atoms.push([u, v, e, h]);
        }
    }
    atoms
}

/// Solves the 4×4 system `m·w = b`; `None` if numerically singular.
fn solve4(mut m: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let k = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= k * m[col][c];
            }
            b[r] -= k * b[col];
        }
    }
    let mut w = [0.0; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|c| m[r][c] * w[c]).sum();
        w[r] = (b[r] - s) / m[r][r];
    }
    Some(w)
}

/// Minimum of `Σ wᵢ hᵢ` over mixtures of at most four columns drawn from the
/// atoms plus an energy slack, matching `f` exactly and spending at most `ω`.
/// Every vertex of the feasible polytope has such a support, so exhaustive
/// enumeration of 4-subsets finds the optimum.
pub fn caratheodory_min(f: &Behavior, omega: f64, atoms: &[[f64; 4]]) -> f64 {
    // Energy row scaled by 1/ω so all rows are O(1).
    let mut cols: Vec<[f64; 5]> = atoms
        .iter()
        .map(|a| [1.0, a[0], a[1], a[2] / omega, a[3]])
        .collect();
    cols.push([0.0, 0.0, 0.0, 1.0, 0.0]);
    let rhs = [1.0, f.p1_given0(), f.p1_given1(), 1.0];
    let n = cols.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let pick = [i, j, k, l];
                    let mut m = [[0.0; 4]; 4];
                    for (c, &idx) in pick.iter().enumerate() {
                        for r in 0..4 {
                            m[r][c] = cols[idx][r];
                        }
                    }
                    let Some(w) = solve4(m, rhs) else { continue };
                    if w.iter().any(|&x| x < -1e-12) {
                        continue;
                    }
                    let resid = (0..4)
                        .map(|r| ((0..4).map(|c| m[r][c] * w[c]).sum::<f64>() - rhs[r]).abs())
                        .fold(0.0, f64::max);
                    if resid > 1e-10 {
                        continue;
                    }
                    let obj: f64 = pick.iter().zip(w).map(|(&idx, x)| cols[idx][4] * x.max(0.0)).sum();
                    best = best.min(obj);
                }
            }
        }
    }
    best
}

/// Dense GF(2) product with `T[i][j] = seed[m − 1 + j − i]`.
pub fn naive_toeplitz(raw: &[bool], seed: &[bool], m: usize) -> Vec<bool> {
    (0..m)
        .map(|i| {
            (0..raw.len())
                .filter(|&j| raw[j] && seed[m - 1 + j - i])
                .count()
                % 2
                == 1
        })
        .collect()
}
