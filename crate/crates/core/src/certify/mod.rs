//! Energy-constrained randomness certification.
//!
//! # Feasible set
//!
//! A single hidden-variable strategy prepares a pair of states with average
//! photon number `e` and measures them with some POVM. Any two states whose
//! average photon number is `e` overlap by at least `max(0, 1 − 2e)`, so the
//! best achievable discrimination success is
//!
//! ```text
//! s_max(e) = (1 + 2·√(e(1−e))) / 2     (e < 1/2),   1 otherwise.
//! ```
//!
//! A behaviour `q` is realisable at energy `e` iff its success probability
//! under the better of the two output labelings does not exceed `s_max(e)`.
//! Writing `u = p(1|0)`, `v = p(1|1)`, that is `|v − u| ≤ D(e) = 2√(e(1−e))`.
//!
//! # Entropy bound
//!
//! The certified entropy of observed frequencies `f` under the mean energy
//! bound `ω` is the least average conditional entropy over classical
//! mixtures of strategies that reproduce `f` and respect `Σ p_λ e_λ ≤ ω`.
//! For fixed `e` the realisable set is the polygon `{|v−u| ≤ D(e)} ∩ [0,1]²`
//! and the entropy `(H(u)+H(v))/2` is concave, so any strategy can be split
//! into the polygon's vertices at equal energy without raising the entropy.
//! Only the two zero-energy deterministic points and the four vertices
//! `(0,D)`, `(1−D,1)`, `(D,0)`, `(1,1−D)` per energy level are therefore
//! needed. Energy levels are sampled on a geometric grid (plus `ω` itself),
//! which turns the problem into a four-row linear program solved by
//! [`lp`]. Restricting to sampled levels can only raise the minimum; the
//! dual solution is audited on a much finer sweep and the worst violation
//! is reported as the refinement tolerance.

pub mod lp;
mod finite;
mod witness;

pub use finite::{finite_size_min_entropy, FiniteSizeParams};
pub use witness::{build_witness, evaluate_witness, Witness};

use crate::error::{Error, Result};
use crate::physics::Behavior;

/// Average photon number bound `ω`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EnergyBound(f64);

impl EnergyBound {
    pub fn new(omega: f64) -> Result<Self> {
        if omega.is_nan() || omega < 0.0 || omega.is_infinite() {
            return Err(Error::Domain(format!("energy bound must be >= 0, got {omega}")));
        }
        Ok(Self(omega))
    }

    pub fn omega(self) -> f64 {
        self.0
    }
}

/// Resolution of the energy axis of the strategy grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Number of geometrically spaced energy levels in `[min_energy, 1/2]`.
    pub energy_points: usize,
    pub min_energy: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            energy_points: 400,
            min_energy: 1e-7,
        }
    }
}

impl GridSpec {
    pub fn new(energy_points: usize, min_energy: f64) -> Result<Self> {
        let g = Self {
            energy_points,
            min_energy,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.energy_points < 2 {
            return Err(Error::Argument(format!(
                "grid needs at least 2 energy points, got {}",
                self.energy_points
            )));
        }
        if !(self.min_energy > 0.0 && self.min_energy < 0.5) {
            return Err(Error::Argument(format!(
                "grid min_energy must lie in (0, 1/2), got {}",
                self.min_energy
            )));
        }
        Ok(())
    }

    /// Sampled energy levels for a bound `omega`, ascending, with `omega`
    /// itself included when it lies inside `(0, 1/2)`.
    pub fn energies(&self, omega: f64) -> Vec<f64> {
        let k = self.energy_points;
        let ratio = (0.5 / self.min_energy).ln() / (k - 1) as f64;
        let mut levels: Vec<f64> = (0..k)
            .map(|i| {
                if i == k - 1 {
                    0.5
                } else {
                    self.min_energy * (ratio * i as f64).exp()
                }
            })
            .collect();
        if omega > 0.0 && omega < 0.5 {
            levels.push(omega);
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }
}

/// One classical strategy: its behaviour, energy and conditional entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyPoint {
    pub q: Behavior,
    pub e: f64,
    pub entropy: f64,
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// `H(B|X)` in bits for uniformly chosen inputs.
pub fn conditional_entropy(q: &Behavior) -> f64 {
    0.5 * (binary_entropy(q.p1_given0()) + binary_entropy(q.p1_given1()))
}

/// Largest success probability reachable with average photon number `e`.
pub fn max_success(e: f64) -> f64 {
    if e >= 0.5 {
        1.0
    } else {
        0.5 * (1.0 + max_bias(e))
    }
}

/// `D(e) = 2·√(e(1−e))`, the largest `|p(1|1) − p(1|0)|` at energy `e`.
fn max_bias(e: f64) -> f64 {
    if e >= 0.5 {
        1.0
    } else {
        2.0 * (e.max(0.0) * (1.0 - e)).sqrt()
    }
}

/// Smallest energy at which a bias `d` is reachable; inverse of [`max_bias`].
pub fn min_energy_for_bias(d: f64) -> f64 {
    let d = d.abs().min(1.0);
    // (1 − √(1−d²))/2 written without cancellation.
    0.5 * d * d / (1.0 + (1.0 - d * d).sqrt())
}

pub fn quantum_set_membership(q: &Behavior, e: f64) -> bool {
    q.best_labeling_success() <= max_success(e)
}

/// Extremal strategies used by the entropy bound at energy bound `omega`.
pub fn strategy_atoms(omega: EnergyBound, grid: &GridSpec) -> Result<Vec<StrategyPoint>> {
    grid.validate()?;
    let mut raw: Vec<(f64, f64, f64, f64)> = vec![(0.0, 0.0, 0.0, 0.0), (1.0, 1.0, 0.0, 0.0)];
    for e in grid.energies(omega.omega()) {
        let d = max_bias(e);
        let h = 0.5 * binary_entropy(d);
        for (u, v) in [(0.0, d), (1.0 - d, 1.0), (d, 0.0), (1.0, 1.0 - d)] {
            raw.push((u, v, e, h));
        }
    }
    let mut atoms = Vec::with_capacity(raw.len());
    for (u, v, e, h) in raw {
        // Keep the cheapest copy of any repeated vertex (levels are ascending).
        if atoms
            .iter()
            .any(|a: &StrategyPoint| a.q.p1_given0() == u && a.q.p1_given1() == v)
        {
            continue;
        }
        atoms.push(StrategyPoint {
            q: Behavior::from_ones(u, v)?,
            e,
            entropy: h,
        });
    }
    Ok(atoms)
}

/// Affine lower bound `ℓ(u, v, e) = offset + slope_u·u + slope_v·v − energy_price·e`
/// on strategy entropies, read off the optimal dual of the entropy program.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualCertificate {
    pub offset: f64,
    pub slope_u: f64,
    pub slope_v: f64,
    pub energy_price: f64,
}

impl DualCertificate {
    pub fn at(&self, u: f64, v: f64, e: f64) -> f64 {
        self.offset + self.slope_u * u + self.slope_v * v - self.energy_price * e
    }

    /// Value of the bound at frequencies `f` and energy `omega`.
    pub fn value(&self, f: &Behavior, omega: f64) -> f64 {
        self.at(f.p1_given0(), f.p1_given1(), omega)
    }
}

#[derive(Clone, Debug)]
pub struct EntropyBound {
    /// Optimal value of the linear program on the strategy grid.
    pub value: f64,
    /// Largest amount by which the dual bound exceeds the entropy of an
    /// unsampled strategy; `value − tolerance` bounds the grid-free problem.
    pub tolerance: f64,
    pub dual: DualCertificate,
    /// Mixture weights, aligned with `atoms`.
    pub weights: Vec<f64>,
    pub atoms: Vec<StrategyPoint>,
}

/// Certified conditional entropy of `f` under mean energy bound `omega`.
pub fn entropy_bound(f: &Behavior, omega: EnergyBound, grid: &GridSpec) -> Result<EntropyBound> {
    if !quantum_set_membership(f, omega.omega()) {
        return Err(Error::Infeasible(format!(
            "success {:.6} exceeds s_max({}) = {:.6}",
            f.best_labeling_success(),
            omega.omega(),
            max_success(omega.omega())
        )));
    }
    let atoms = strategy_atoms(omega, grid)?;
    solve_on_atoms(f, omega, atoms)
}

pub(crate) fn solve_on_atoms(
    f: &Behavior,
    omega: EnergyBound,
    atoms: Vec<StrategyPoint>,
) -> Result<EntropyBound> {
    let n = atoms.len();
    // Rows: normalisation, p(1|0), p(1|1), energy (≤, via a slack column).
    let mut columns = Vec::with_capacity(4 * (n + 1));
    let mut costs = Vec::with_capacity(n + 1);
    for a in &atoms {
        columns.extend_from_slice(&[1.0, a.q.p1_given0(), a.q.p1_given1(), a.e]);
        costs.push(a.entropy);
    }
    columns.extend_from_slice(&[0.0, 0.0, 0.0, 1.0]);
    costs.push(0.0);
    let rhs = [1.0, f.p1_given0(), f.p1_given1(), omega.omega()];

    let sol = lp::solve(&lp::StandardLp {
        rows: 4,
        costs: &costs,
        columns: &columns,
        rhs: &rhs,
    })?;

    let mut dual = DualCertificate {
        offset: sol.duals[0],
        slope_u: sol.duals[1],
        slope_v: sol.duals[2],
        energy_price: (-sol.duals[3]).max(0.0),
    };
    // Shift the offset so the certificate is exactly dual feasible on the grid.
    let violation = atoms
        .iter()
        .map(|a| dual.at(a.q.p1_given0(), a.q.p1_given1(), a.e) - a.entropy)
        .fold(0.0f64, f64::max);
    dual.offset -= violation;

    let tolerance = refinement_gap(&dual, grid_floor(&atoms));
    let mut weights = sol.x;
    weights.truncate(n);
    Ok(EntropyBound {
        value: sol.objective,
        tolerance,
        dual,
        weights,
        atoms,
    })
}

fn grid_floor(atoms: &[StrategyPoint]) -> f64 {
    atoms
        .iter()
        .map(|a| a.e)
        .filter(|&e| e > 0.0)
        .fold(0.5, f64::min)
}

/// Worst excess of the dual bound over the entropy of vertex strategies at
/// unsampled energies, found on a sweep 16× finer than the default grid.
fn refinement_gap(dual: &DualCertificate, min_energy: f64) -> f64 {
    const LOG_POINTS: usize = 6400;
    const LINEAR_POINTS: usize = 4096;
    let lo = (min_energy / 16.0).max(1e-300);
    let step = (0.5 / lo).ln() / (LOG_POINTS - 1) as f64;
    let log_sweep = (0..LOG_POINTS).map(|i| max_bias(lo * (step * i as f64).exp()));
    let lin_sweep = (1..LINEAR_POINTS).map(|i| i as f64 / LINEAR_POINTS as f64);
    let mut worst = 0.0f64;
    for d in log_sweep.chain(lin_sweep) {
        let e = min_energy_for_bias(d);
        let h = 0.5 * binary_entropy(d);
        for (u, v) in [(0.0, d), (1.0 - d, 1.0), (d, 0.0), (1.0, 1.0 - d)] {
            worst = worst.max(dual.at(u, v, e) - h);
        }
    }
    worst
}
