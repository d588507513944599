//! Solitary waves of the Benjamin equation in one and two dimensions.
//!
//! 1D: `(alpha - c_s) phi + (beta/2) phi^2 - gamma H(phi') - delta phi'' = 0`
//! is written as `L phi = N(phi)` with symbol `alpha - c_s - gamma |k| + delta k^2`
//! and `N(phi) = -(beta/2) phi^2`.
//!
//! 2D: `(-c_s eta + eta^2 - 2 Gamma H(eta_X) + eta_XX)_XX - eta_ZZ = 0`
//! becomes `M(kx, kz) eta^ = kx^2 (eta^2)^` with
//! `M = kx^2 (c_s + 2 Gamma |kx| + kx^2) + kz^2`. The mean (mode `(0, 0)`) is
//! projected out after every `L^{-1}` and `N` application.
//!
//! In both cases the `|k|` factor is realized as the composition of the
//! Hilbert and derivative symbols, so it vanishes at the Nyquist mode.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridInfo, HomogeneousPart, Model, PowerPart};
use crate::error::{Error, Result};
use crate::spectral::{derivative_symbol, hilbert_symbol, Fft1d, Fft2d, Grid1D, Grid2D, SpectralPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benjamin1DParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub speed: f64,
}

impl Benjamin1DParams {
    /// `gamma* = 2 sqrt(delta (alpha - c_s))`, the threshold of symbol positivity.
    pub fn gamma_star(&self) -> f64 {
        2.0 * (self.delta * (self.alpha - self.speed)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("speed", self.speed),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(
                    format!("benjamin.{name}"),
                    format!("must be finite and non-negative, got {v}"),
                ));
            }
        }
        if self.delta == 0.0 || self.alpha <= self.speed {
            return Err(Error::config("benjamin", "requires delta > 0 and alpha > speed"));
        }
        // Minimum of alpha - c_s - gamma k + delta k^2 is at k = gamma / (2 delta).
        let k = self.gamma / (2.0 * self.delta);
        let min = self.alpha - self.speed - self.gamma * k + self.delta * k * k;
        if min <= 0.0 || self.gamma >= self.gamma_star() {
            return Err(Error::config(
                "benjamin.gamma",
                format!(
                    "gamma = {} must be below gamma* = {} for a positive symbol",
                    self.gamma,
                    self.gamma_star()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Benjamin2DParams {
    pub big_gamma: f64,
    pub speed: f64,
}

/// Diagonal-symbol model on a 1D grid.
pub struct Benjamin1D {
    params: Benjamin1DParams,
    grid: Grid1D,
    plan: Fft1d,
    symbol: Vec<f64>,
    parts: Vec<Box<dyn HomogeneousPart>>,
}

impl std::fmt::Debug for Benjamin1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benjamin1D")
            .field("params", &self.params)
            .field("grid", &self.grid)
            .finish()
    }
}

/// `|k|` realized as `(-i sign k)(i k)`: zero at the zero and Nyquist modes.
fn abs_wavenumber(grid: &Grid1D) -> Vec<f64> {
    hilbert_symbol(grid)
        .iter()
        .zip(derivative_symbol(grid, 1))
        .map(|(h, d)| (h * d).re)
        .collect()
}

fn apply_diagonal(plan: &dyn SpectralPlan, u: &[f64], f: impl Fn(usize, Complex64) -> Complex64) -> Vec<f64> {
    let mut c = plan.forward_real(u);
    c.iter_mut().enumerate().for_each(|(k, z)| *z = f(k, *z));
    plan.inverse_real(c)
}

pub fn benjamin_1d(params: &Benjamin1DParams, grid: Grid1D) -> Result<Benjamin1D> {
    params.validate()?;
    let kappa = grid.wavenumbers();
    let abs_k = abs_wavenumber(&grid);
    let symbol: Vec<f64> = kappa
        .iter()
        .zip(&abs_k)
        .map(|(k, a)| params.alpha - params.speed - params.gamma * a + params.delta * k * k)
        .collect();
    if let Some((k, v)) = symbol.iter().enumerate().find(|(_, v)| v.abs() < 1e-12) {
        return Err(Error::SingularSymbol {
            mode: grid.mode_index(k),
            value: v.abs(),
        });
    }
    Ok(Benjamin1D {
        params: *params,
        grid,
        plan: Fft1d::for_grid(&grid),
        symbol,
        parts: vec![Box::new(PowerPart {
            coef: -0.5 * params.beta,
            degree: 2,
        })],
    })
}

impl Benjamin1D {
    pub fn benjamin_params(&self) -> &Benjamin1DParams {
        &self.params
    }

    pub fn grid1d(&self) -> &Grid1D {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }
}

impl Model for Benjamin1D {
    fn name(&self) -> &str {
        "benjamin-1d"
    }

    fn dim(&self) -> usize {
        self.grid.points()
    }

    fn components(&self) -> usize {
        1
    }

    fn parts(&self) -> &[Box<dyn HomogeneousPart>] {
        &self.parts
    }

    fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        apply_diagonal(&self.plan, u, |k, z| z * self.symbol[k])
    }

    fn solve_l(&self, f: &[f64]) -> Vec<f64> {
        apply_diagonal(&self.plan, f, |k, z| z / self.symbol[k])
    }

    fn grid(&self) -> GridInfo {
        GridInfo::OneD(self.grid)
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("alpha".to_string(), self.params.alpha),
            ("beta".to_string(), self.params.beta),
            ("gamma".to_string(), self.params.gamma),
            ("delta".to_string(), self.params.delta),
            ("speed".to_string(), self.params.speed),
            ("half_length".to_string(), self.grid.half_length()),
            ("points".to_string(), self.grid.points() as f64),
        ])
    }
}

/// `eta -> F^{-1}[kx^2 F(eta^2)]`, with the mean removed.
struct WeightedSquare {
    plan: Arc<Fft2d>,
    weight: Arc<Vec<f64>>,
}

impl HomogeneousPart for WeightedSquare {
    fn degree(&self) -> i32 {
        2
    }

    fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        apply_diagonal(self.plan.as_ref(), &sq, |k, z| z * self.weight[k])
    }

    fn directional_derivative(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let prod: Vec<f64> = u.iter().zip(v).map(|(a, b)| 2.0 * a * b).collect();
        apply_diagonal(self.plan.as_ref(), &prod, |k, z| z * self.weight[k])
    }
}

/// Diagonal-symbol model on a 2D grid with the zero-mass constraint.
pub struct Benjamin2D {
    params: Benjamin2DParams,
    grid: Grid2D,
    plan: Arc<Fft2d>,
    symbol: Vec<f64>,
    parts: Vec<Box<dyn HomogeneousPart>>,
}

impl std::fmt::Debug for Benjamin2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benjamin2D")
            .field("params", &self.params)
            .field("grid", &self.grid)
            .finish()
    }
}

pub fn benjamin_2d(params: &Benjamin2DParams, grid: Grid2D) -> Result<Benjamin2D> {
    if !(params.big_gamma.is_finite() && params.big_gamma >= 0.0) {
        return Err(Error::config("benjamin2d.big_gamma", "must be finite and non-negative"));
    }
    if !(params.speed.is_finite() && params.speed > 0.0) {
        return Err(Error::config("benjamin2d.speed", "must be positive"));
    }
    let kx = grid.x.wavenumbers();
    let kz = grid.z.wavenumbers();
    let abs_kx = abs_wavenumber(&grid.x);
    let nz = grid.z.points();
    let mut symbol = vec![0.0; grid.len()];
    let mut weight = vec![0.0; grid.len()];
    for i in 0..grid.x.points() {
        let kx2 = kx[i] * kx[i];
        for (j, kzj) in kz.iter().enumerate().take(nz) {
            let idx = grid.index(i, j);
            symbol[idx] = kx2 * (params.speed + 2.0 * params.big_gamma * abs_kx[i] + kx2) + kzj * kzj;
            weight[idx] = kx2;
        }
    }
    if let Some((idx, v)) = symbol.iter().enumerate().skip(1).find(|(_, v)| v.abs() < 1e-12) {
        return Err(Error::SingularSymbol {
            mode: idx as i64,
            value: v.abs(),
        });
    }
    let plan = Arc::new(Fft2d::for_grid(&grid));
    let part = WeightedSquare {
        plan: Arc::clone(&plan),
        weight: Arc::new(weight),
    };
    Ok(Benjamin2D {
        params: *params,
        grid,
        plan,
        symbol,
        parts: vec![Box::new(part)],
    })
}

impl Benjamin2D {
    pub fn benjamin_params(&self) -> &Benjamin2DParams {
        &self.params
    }

    pub fn grid2d(&self) -> &Grid2D {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }
}

impl Model for Benjamin2D {
    fn name(&self) -> &str {
        "benjamin-2d"
    }

    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn components(&self) -> usize {
        1
    }

    fn parts(&self) -> &[Box<dyn HomogeneousPart>] {
        &self.parts
    }

    fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        apply_diagonal(self.plan.as_ref(), u, |k, z| z * self.symbol[k])
    }

    fn solve_l(&self, f: &[f64]) -> Vec<f64> {
        apply_diagonal(self.plan.as_ref(), f, |k, z| {
            if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                z / self.symbol[k]
            }
        })
    }

    fn project(&self, u: &mut [f64]) {
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        u.iter_mut().for_each(|x| *x -= mean);
    }

    fn grid(&self) -> GridInfo {
        GridInfo::TwoD(self.grid)
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("big_gamma".to_string(), self.params.big_gamma),
            ("speed".to_string(), self.params.speed),
            ("half_length_x".to_string(), self.grid.x.half_length()),
            ("half_length_z".to_string(), self.grid.z.half_length()),
            ("points_x".to_string(), self.grid.x.points() as f64),
            ("points_z".to_string(), self.grid.z.points() as f64),
        ])
    }
}
