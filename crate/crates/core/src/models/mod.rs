//! Discretized problems of the form `L u = N(u)` with homogeneous `N`.

mod benjamin;
mod boussinesq;
mod guess;
mod nls;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::linalg;
use crate::spectral::{Grid1D, Grid2D};

pub use benjamin::{benjamin_1d, benjamin_2d, Benjamin1D, Benjamin1DParams, Benjamin2D, Benjamin2DParams};
pub use boussinesq::{
    boussinesq_constants, boussinesq_periodic, boussinesq_solitary, constants_residual, Boussinesq, BoussinesqFamily,
    BoussinesqParams, PeriodicShift,
};
pub use guess::{initial_guess, power, GuessKind, GuessSpec};
pub use nls::{gnls_ground_state, nls_ground_state, Nls, GNLS_NU_CRITICAL};

/// A map `N_j` with `N_j(lambda u) = lambda^p N_j(u)`.
pub trait HomogeneousPart: Send + Sync {
    fn degree(&self) -> i32;

    fn evaluate(&self, u: &[f64]) -> Vec<f64>;

    /// `N_j'(u) v`, computed analytically.
    fn directional_derivative(&self, u: &[f64], v: &[f64]) -> Vec<f64>;
}

/// Spatial discretization attached to a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridInfo {
    OneD(Grid1D),
    TwoD(Grid2D),
}

impl GridInfo {
    /// Number of grid nodes (per component).
    pub fn nodes(&self) -> usize {
        match self {
            GridInfo::OneD(g) => g.points(),
            GridInfo::TwoD(g) => g.len(),
        }
    }
}

/// A discrete problem `L u = N(u)` with `N = sum_j N_j`.
///
/// States are flat real vectors; multi-component states are stored
/// component after component.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    /// Total number of state entries.
    fn dim(&self) -> usize;

    fn components(&self) -> usize;

    fn parts(&self) -> &[Box<dyn HomogeneousPart>];

    fn apply_l(&self, u: &[f64]) -> Vec<f64>;

    /// Action of `L^{-1}`.
    fn solve_l(&self, f: &[f64]) -> Vec<f64>;

    /// Constraint projection applied after every `L^{-1}` and `N` application.
    fn project(&self, _u: &mut [f64]) {}

    fn grid(&self) -> GridInfo;

    fn params(&self) -> BTreeMap<String, f64>;

    fn nonlinear(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for part in self.parts() {
            linalg::axpy(1.0, &part.evaluate(u), &mut out);
        }
        out
    }

    fn nonlinear_derivative(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for part in self.parts() {
            linalg::axpy(1.0, &part.directional_derivative(u, v), &mut out);
        }
        out
    }

    /// `||L u - N(u)||`.
    fn residual_norm(&self, u: &[f64]) -> f64 {
        linalg::norm(&linalg::sub(&self.apply_l(u), &self.nonlinear(u)))
    }
}

/// `x^p` by repeated multiplication. Unlike `f64::powi`, the result does
/// not depend on how the compiler chooses to lower the call.
pub fn ipow(x: f64, p: i32) -> f64 {
    let mut out = 1.0;
    for _ in 0..p.unsigned_abs() {
        out *= x;
    }
    if p < 0 {
        1.0 / out
    } else {
        out
    }
}

/// `coef * u^p` applied entrywise; for odd `p` this is `coef |u|^{p-1} u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPart {
    pub coef: f64,
    pub degree: i32,
}

impl HomogeneousPart for PowerPart {
    fn degree(&self) -> i32 {
        self.degree
    }

    fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| self.coef * ipow(*x, self.degree)).collect()
    }

    fn directional_derivative(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let p = self.degree;
        u.iter()
            .zip(v)
            .map(|(x, y)| self.coef * p as f64 * ipow(*x, p - 1) * y)
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::{Rng, SeedableRng};

    pub fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        linalg::norm(&linalg::sub(a, b)) / linalg::norm(b).max(1e-300)
    }

    /// Homogeneity, Euler identity and finite-difference checks on every part.
    pub fn check_parts(model: &dyn Model, seed: u64) {
        let n = model.dim();
        for (j, part) in model.parts().iter().enumerate() {
            let p = part.degree();
            for trial in 0..20 {
                let u = random_state(n, seed + 31 * trial + j as u64);
                let nu = part.evaluate(&u);
                for lambda in [0.5, 2.0, -1.3] {
                    let lu: Vec<f64> = u.iter().map(|x| lambda * x).collect();
                    let scaled: Vec<f64> = nu.iter().map(|x| f64::powi(lambda, p) * x).collect();
                    assert!(rel(&part.evaluate(&lu), &scaled) <= 1e-11, "homogeneity of part {j}");
                }
                assert!(
                    rel(&part.directional_derivative(&u, &u), &linalg::scale(&nu, p as f64)) <= 1e-11,
                    "Euler identity of part {j}"
                );
            }
            let u = random_state(n, seed + 7);
            let v = random_state(n, seed + 8);
            let h = 1e-6 * linalg::norm(&u) / linalg::norm(&v);
            let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let fd = linalg::scale(&linalg::sub(&part.evaluate(&up), &part.evaluate(&um)), 0.5 / h);
            assert!(
                rel(&fd, &part.directional_derivative(&u, &v)) <= 1e-6,
                "FD check of part {j}"
            );
        }
    }

    /// `solve_L(apply_L(u)) = project(u)`.
    pub fn check_inverse(model: &dyn Model, seed: u64) {
        for trial in 0..5 {
            let mut u = random_state(model.dim(), seed + trial);
            let back = model.solve_l(&model.apply_l(&u));
            model.project(&mut u);
            assert!(rel(&back, &u) <= 1e-11, "solve_L o apply_L");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_part_identities() {
        for (coef, degree) in [(1.0, 2), (-0.5, 3), (0.25, 7)] {
            let part = PowerPart { coef, degree };
            let u = testing::random_state(40, degree as u64);
            let d = part.directional_derivative(&u, &u);
            let e = part.evaluate(&u);
            for (a, b) in d.iter().zip(&e) {
                assert!((a - degree as f64 * b).abs() <= 1e-14 * b.abs().max(1e-300) + 1e-300);
            }
        }
    }
}
