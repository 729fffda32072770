//! Linear entropy witnesses `γ[f] − ζ`.
//!
//! `γ[f] = ½ Σ_{b,x} γ_{b,x} f(b|x)` weights both inputs equally. A witness
//! is the optimal dual of the entropy program at an expected behaviour: an
//! affine function of the frequencies that lower-bounds the certified entropy
//! everywhere and touches it at the expected behaviour. `ζ` carries the
//! energy dependence, so a witness is only meaningful at the `ω` it was built
//! for; that value travels with it.

use super::{entropy_bound, EnergyBound, GridSpec};
use crate::error::{Error, Result};
use crate::physics::Behavior;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Indexed `[b][x]`.
    pub gamma: [[f64; 2]; 2],
    pub zeta: f64,
    pub omega: EnergyBound,
    pub grid: GridSpec,
    /// Grid-refinement tolerance of the entropy bound it was built from.
    pub tolerance: f64,
}

impl Witness {
    /// Largest minus smallest coefficient; the default scale of the
    /// square-root finite-size correction.
    pub fn gamma_range(&self) -> f64 {
        let all = self.gamma.iter().flatten();
        let max = all.clone().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = all.copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Standard deviation of the witness value estimated from `rounds`
    /// rounds with uniformly drawn inputs, when the true behaviour is `q`.
    pub fn block_std(&self, q: &Behavior, rounds: u64) -> f64 {
        let per_input = rounds as f64 / 2.0;
        let var: f64 = (0..2)
            .map(|x| {
                let slope = 0.5 * (self.gamma[1][x] - self.gamma[0][x]);
                let p = q.get(x, 1);
                slope * slope * p * (1.0 - p) / per_input
            })
            .sum();
        var.sqrt()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# sdiqrng entropy witness\n");
        for b in 0..2 {
            for x in 0..2 {
                let _ = writeln!(s, "gamma[{b}][{x}] = {:.16e}", self.gamma[b][x]);
            }
        }
        let _ = writeln!(s, "zeta = {:.16e}", self.zeta);
        let _ = writeln!(s, "omega = {:.16e}", self.omega.omega());
        let _ = writeln!(s, "grid.energy_points = {}", self.grid.energy_points);
        let _ = writeln!(s, "grid.min_energy = {:.16e}", self.grid.min_energy);
        let _ = writeln!(s, "tolerance = {:.16e}", self.tolerance);
        s
    }
}

impl FromStr for Witness {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut gamma = [[None; 2]; 2];
        let (mut zeta, mut omega, mut points, mut min_e, mut tol) = (None, None, None, None, None);
        let mut offset = 0u64;
        for line in text.split_inclusive('\n') {
            let here = offset;
            offset += line.len() as u64;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let bad = |m: String| Error::Parse {
                offset: here,
                message: m,
            };
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
            match key {
                "zeta" => zeta = Some(num()?),
                "omega" => omega = Some(num()?),
                "grid.min_energy" => min_e = Some(num()?),
                "tolerance" => tol = Some(num()?),
                "grid.energy_points" => {
                    points = Some(value.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")))?)
                }
                _ => {
                    let idx = key
                        .strip_prefix("gamma[")
                        .and_then(|k| k.strip_suffix(']'))
                        .and_then(|k| k.split_once("]["))
                        .and_then(|(b, x)| Some((b.parse::<usize>().ok()?, x.parse::<usize>().ok()?)))
                        .filter(|&(b, x)| b < 2 && x < 2)
                        .ok_or_else(|| bad(format!("unknown key `{key}`")))?;
                    gamma[idx.0][idx.1] = Some(num()?);
                }
            }
        }
        let missing = |k: &str| Error::Parse {
            offset,
            message: format!("missing `{k}`"),
        };
        let mut g = [[0.0; 2]; 2];
        for b in 0..2 {
            for x in 0..2 {
                g[b][x] = gamma[b][x].ok_or_else(|| missing(&format!("gamma[{b}][{x}]")))?;
            }
        }
        let w = Witness {
            gamma: g,
            zeta: zeta.ok_or_else(|| missing("zeta"))?,
            omega: EnergyBound::new(omega.ok_or_else(|| missing("omega"))?)?,
            grid: GridSpec::new(
                points.ok_or_else(|| missing("grid.energy_points"))?,
                min_e.ok_or_else(|| missing("grid.min_energy"))?,
            )?,
            tolerance: tol.ok_or_else(|| missing("tolerance"))?,
        };
        if w.gamma.iter().flatten().any(|v| !v.is_finite()) || !w.zeta.is_finite() {
            return Err(Error::Parse {
                offset: 0,
                message: "witness coefficients must be finite".into(),
            });
        }
        Ok(w)
    }
}

/// Supporting hyperplane of the certified entropy at `p_expected`.
pub fn build_witness(p_expected: &Behavior, omega: EnergyBound, grid: &GridSpec) -> Result<Witness> {
    let bound = entropy_bound(p_expected, omega, grid)?;
    let d = bound.dual;
    // Symmetric gauge γ_{0x} = −γ_{1x}: ½ Σ_b γ_{bx} f(b|x) = γ_{1x} f(1|x) − γ_{1x}/2.
    let gamma = [[-d.slope_u, -d.slope_v], [d.slope_u, d.slope_v]];
    let zeta = -d.offset + d.energy_price * omega.omega() - 0.5 * (d.slope_u + d.slope_v);
    Ok(Witness {
        gamma,
        zeta,
        omega,
        grid: *grid,
        tolerance: bound.tolerance,
    })
}

/// `γ[f] − ζ`.
pub fn evaluate_witness(w: &Witness, f: &Behavior) -> f64 {
    let mut acc = 0.0;
    for b in 0..2 {
        for x in 0..2 {
            acc += w.gamma[b][x] * f.get(x, b);
        }
    }
    0.5 * acc - w.zeta
}
