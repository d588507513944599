//! Fourier pseudospectral primitives on periodic grids.
//!
//! Forward transforms are unnormalized and inverse transforms carry the
//! `1/m` factor; every public operation here is stated independently of that
//! convention. Two-dimensional transforms are tensor products of the 1D
//! kernels, with states stored row-major as `data[i * nz + j]` where `i`
//! indexes the `x` nodes and `j` the `z` nodes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = -l + j h` on `(-l, l)` with `h = 2l/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_length: f64,
    points: usize,
    spacing: f64,
}

impl Grid1D {
    pub fn new(half_length: f64, points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive and finite, got {half_length}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 8, got {points}"
            )));
        }
        Ok(Grid1D {
            half_length,
            points,
            spacing: 2.0 * half_length / points as f64,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers `(pi/l) p` in transform order: `p = 0, 1, ..., m/2-1, -m/2, ..., -1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        wavenumbers(self)
    }

    /// Signed mode index `p` of transform slot `k`.
    pub fn mode_index(&self, k: usize) -> i64 {
        mode_index(k, self.points)
    }
}

/// Tensor-product grid for two-dimensional profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Grid1D,
    pub z: Grid1D,
}

impl Grid2D {
    pub fn new(half_length_x: f64, points_x: usize, half_length_z: f64, points_z: usize) -> Result<Self> {
        Ok(Grid2D {
            x: Grid1D::new(half_length_x, points_x)?,
            z: Grid1D::new(half_length_z, points_z)?,
        })
    }

    pub fn square(half_length: f64, points: usize) -> Result<Self> {
        Self::new(half_length, points, half_length, points)
    }

    pub fn len(&self) -> usize {
        self.x.points() * self.z.points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.z.points() + j
    }

    pub fn cell_area(&self) -> f64 {
        self.x.spacing() * self.z.spacing()
    }
}

fn mode_index(k: usize, m: usize) -> i64 {
    if k < m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

pub fn wavenumbers(grid: &Grid1D) -> Vec<f64> {
    let scale = PI / grid.half_length();
    (0..grid.points())
        .map(|k| scale * mode_index(k, grid.points()) as f64)
        .collect()
}

/// A transform plan over a flat grid vector.
pub trait SpectralPlan: Send + Sync {
    /// Number of grid values (and Fourier coefficients).
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place unnormalized forward transform.
    fn forward_in_place(&self, data: &mut [Complex64]);

    /// In-place inverse transform including the `1/len` normalization.
    fn inverse_in_place(&self, data: &mut [Complex64]);

    /// Slot holding the mode `-k` for the mode in slot `idx`.
    fn mirror(&self, idx: usize) -> usize;

    /// Slots that are their own mirror (zero and Nyquist-type modes).
    fn is_self_mirror(&self, idx: usize) -> bool {
        self.mirror(idx) == idx
    }

    fn forward_real(&self, u: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    fn inverse_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut data = coeffs.to_vec();
        self.inverse_in_place(&mut data);
        data
    }

    /// Inverse transform of coefficients already known to be conjugate
    /// symmetric; the imaginary round-off is discarded.
    fn inverse_real(&self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.inverse_in_place(&mut coeffs);
        coeffs.into_iter().map(|c| c.re).collect()
    }
}

#[derive(Clone)]
pub struct Fft1d {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft1d").field("len", &self.len).finish()
    }
}

impl Fft1d {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft1d {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn for_grid(grid: &Grid1D) -> Self {
        Self::new(grid.points())
    }
}

impl SpectralPlan for Fft1d {
    fn len(&self) -> usize {
        self.len
    }

    fn forward_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        self.forward.process(data);
    }

    fn inverse_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        self.inverse.process(data);
        let s = 1.0 / self.len as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    fn mirror(&self, idx: usize) -> usize {
        (self.len - idx) % self.len
    }
}

/// Two-dimensional transform built from 1D plans along each axis.
#[derive(Debug, Clone)]
pub struct Fft2d {
    nx: usize,
    nz: usize,
    along_x: Fft1d,
    along_z: Fft1d,
}

impl Fft2d {
    pub fn new(nx: usize, nz: usize) -> Self {
        Fft2d {
            nx,
            nz,
            along_x: Fft1d::new(nx),
            along_z: Fft1d::new(nz),
        }
    }

    pub fn for_grid(grid: &Grid2D) -> Self {
        Self::new(grid.x.points(), grid.z.points())
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.nx * self.nz);
        let (fz, fx) = if inverse {
            (&self.along_z.inverse, &self.along_x.inverse)
        } else {
            (&self.along_z.forward, &self.along_x.forward)
        };
        // Rows are contiguous along z; rustfft processes back-to-back chunks.
        fz.process(data);
        let mut t = transpose(data, self.nx, self.nz);
        fx.process(&mut t);
        let back = transpose(&t, self.nz, self.nx);
        data.copy_from_slice(&back);
        if inverse {
            let s = 1.0 / (self.nx * self.nz) as f64;
            data.iter_mut().for_each(|c| *c *= s);
        }
    }
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

impl SpectralPlan for Fft2d {
    fn len(&self) -> usize {
        self.nx * self.nz
    }

    fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn mirror(&self, idx: usize) -> usize {
        let (i, j) = (idx / self.nz, idx % self.nz);
        ((self.nx - i) % self.nx) * self.nz + (self.nz - j) % self.nz
    }
}

/// Fourier multiplier with a cached conjugate-symmetry flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    values: Vec<Complex64>,
    /// First slot violating `sigma(-k) = conj(sigma(k))`, if any.
    asymmetric_at: Option<usize>,
}

impl Multiplier {
    pub fn new(values: Vec<Complex64>, plan: &dyn SpectralPlan) -> Result<Self> {
        if values.len() != plan.len() {
            return Err(Error::LengthMismatch {
                expected: plan.len(),
                got: values.len(),
            });
        }
        let asymmetric_at = (0..values.len()).find(|&k| {
            let a = values[k];
            let b = values[plan.mirror(k)].conj();
            (a - b).norm() > 1e-13 * a.norm().max(1.0)
        });
        Ok(Multiplier { values, asymmetric_at })
    }

    /// Real, even symbol (e.g. the action of a self-adjoint constant-coefficient operator).
    pub fn from_real(values: Vec<f64>, plan: &dyn SpectralPlan) -> Result<Self> {
        Self::new(values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(), plan)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.asymmetric_at.is_none()
    }

    /// Pointwise product of two multipliers.
    pub fn compose(&self, other: &Multiplier, plan: &dyn SpectralPlan) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self::new(values, plan)
    }
}

/// Apply `sigma` to a real grid vector, returning a real grid vector.
pub fn apply_multiplier(plan: &dyn SpectralPlan, u: &[f64], sigma: &Multiplier) -> Result<Vec<f64>> {
    if u.len() != plan.len() {
        return Err(Error::LengthMismatch {
            expected: plan.len(),
            got: u.len(),
        });
    }
    if sigma.len() != plan.len() {
        return Err(Error::LengthMismatch {
            expected: plan.len(),
            got: sigma.len(),
        });
    }
    if let Some(index) = sigma.asymmetric_at {
        return Err(Error::SymmetryViolation { index });
    }
    let mut c = plan.forward_real(u);
    c.iter_mut().zip(&sigma.values).for_each(|(ci, s)| *ci *= s);
    Ok(plan.inverse_real(c))
}

/// Apply `sigma` to a complex grid vector; no symmetry is required.
pub fn apply_multiplier_complex(
    plan: &dyn SpectralPlan,
    u: &[Complex64],
    sigma: &Multiplier,
) -> Result<Vec<Complex64>> {
    if u.len() != plan.len() {
        return Err(Error::LengthMismatch {
            expected: plan.len(),
            got: u.len(),
        });
    }
    if sigma.len() != plan.len() {
        return Err(Error::LengthMismatch {
            expected: plan.len(),
            got: sigma.len(),
        });
    }
    let mut c = u.to_vec();
    plan.forward_in_place(&mut c);
    c.iter_mut().zip(&sigma.values).for_each(|(ci, s)| *ci *= s);
    plan.inverse_in_place(&mut c);
    Ok(c)
}

/// Symbol of `d^order/dx^order`, `(i kappa)^order`; the Nyquist slot is
/// zeroed for odd orders so that real input stays real.
pub fn derivative_symbol(grid: &Grid1D, order: u32) -> Vec<Complex64> {
    let m = grid.points();
    wavenumbers(grid)
        .into_iter()
        .enumerate()
        .map(|(k, kappa)| {
            if order % 2 == 1 && k == m / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kappa).powu(order)
            }
        })
        .collect()
}

/// Symbol `-i sign(kappa)` of the Hilbert transform, zero at the zero and Nyquist modes.
pub fn hilbert_symbol(grid: &Grid1D) -> Vec<Complex64> {
    let m = grid.points();
    (0..m)
        .map(|k| match grid.mode_index(k) {
            0 => Complex64::new(0.0, 0.0),
            _ if k == m / 2 => Complex64::new(0.0, 0.0),
            p if p > 0 => Complex64::new(0.0, -1.0),
            _ => Complex64::new(0.0, 1.0),
        })
        .collect()
}

pub fn derivative(plan: &Fft1d, grid: &Grid1D, u: &[f64], order: u32) -> Result<Vec<f64>> {
    let sigma = Multiplier::new(derivative_symbol(grid, order), plan)?;
    apply_multiplier(plan, u, &sigma)
}

pub fn hilbert(u: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
    let plan = Fft1d::for_grid(grid);
    let sigma = Multiplier::new(hilbert_symbol(grid), &plan)?;
    apply_multiplier(&plan, u, &sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, 6).is_err());
        assert!(Grid1D::new(1.0, 4).is_err());
        assert!(Grid1D::new(-1.0, 16).is_err());
        assert!(Grid1D::new(f64::NAN, 16).is_err());
        let g = Grid1D::new(64.0, 1024).unwrap();
        assert!((g.spacing() * 1024.0 - 128.0).abs() <= f64::EPSILON * 128.0);
        assert_eq!(g.node(0), -64.0);
        assert_eq!(g.node(512), 0.0);
    }

    #[test]
    fn wavenumbers_unit_and_scaled() {
        let g = Grid1D::new(PI, 8).unwrap();
        let k = wavenumbers(&g);
        let expect = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        assert!(max_err(&k, &expect) < 1e-15);

        let g = Grid1D::new(2.0 * PI, 8).unwrap();
        let k = wavenumbers(&g);
        let expect = [0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5];
        assert!(max_err(&k, &expect) < 1e-15);

        let g = Grid1D::new(64.0, 16).unwrap();
        assert!((wavenumbers(&g)[1] - 0.04908738521234052).abs() < 1e-16);
    }

    #[test]
    fn derivative_of_resolved_modes() {
        let g = Grid1D::new(PI, 64).unwrap();
        let plan = Fft1d::for_grid(&g);
        let x = g.nodes();
        let s: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let c: Vec<f64> = x.iter().map(|v| v.cos()).collect();
        assert!(max_err(&derivative(&plan, &g, &s, 1).unwrap(), &c) <= 1e-12);

        let c3: Vec<f64> = x.iter().map(|v| (3.0 * v).cos()).collect();
        let expect: Vec<f64> = c3.iter().map(|v| -9.0 * v).collect();
        assert!(max_err(&derivative(&plan, &g, &c3, 2).unwrap(), &expect) <= 1e-11);
    }

    #[test]
    fn identity_multiplier() {
        let g = Grid1D::new(3.0, 32).unwrap();
        let plan = Fft1d::for_grid(&g);
        let u: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let one = Multiplier::from_real(vec![1.0; 32], &plan).unwrap();
        assert!(max_err(&apply_multiplier(&plan, &u, &one).unwrap(), &u) < 1e-15);
    }

    #[test]
    fn multiplier_errors() {
        let plan = Fft1d::new(16);
        let u = vec![0.0; 8];
        let one = Multiplier::from_real(vec![1.0; 16], &plan).unwrap();
        assert!(matches!(
            apply_multiplier(&plan, &u, &one),
            Err(Error::LengthMismatch { expected: 16, got: 8 })
        ));
        let mut vals = vec![Complex64::new(1.0, 0.0); 16];
        vals[3] = Complex64::new(0.0, 1.0);
        let bad = Multiplier::new(vals, &plan).unwrap();
        assert!(!bad.is_conjugate_symmetric());
        assert!(matches!(
            apply_multiplier(&plan, &[1.0; 16], &bad),
            Err(Error::SymmetryViolation { .. })
        ));
        // The complex path accepts the same multiplier.
        let z = vec![Complex64::new(1.0, 0.0); 16];
        assert!(apply_multiplier_complex(&plan, &z, &bad).is_ok());
    }

    #[test]
    fn hilbert_single_modes() {
        let g = Grid1D::new(PI, 64).unwrap();
        let x = g.nodes();
        for k in 1..5 {
            let c: Vec<f64> = x.iter().map(|v| (k as f64 * v).cos()).collect();
            let s: Vec<f64> = x.iter().map(|v| (k as f64 * v).sin()).collect();
            assert!(max_err(&hilbert(&c, &g).unwrap(), &s) <= 1e-12);
        }
        let h = hilbert(&vec![2.5; 64], &g).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn fft2d_matches_separable_product() {
        let g = Grid2D::new(PI, 16, PI, 8).unwrap();
        let plan = Fft2d::for_grid(&g);
        let xs = g.x.nodes();
        let zs = g.z.nodes();
        let mut u = vec![0.0; g.len()];
        for i in 0..16 {
            for j in 0..8 {
                u[g.index(i, j)] = (2.0 * xs[i]).cos() * zs[j].sin();
            }
        }
        // d/dz via a 2D multiplier i*kz.
        let kz = wavenumbers(&g.z);
        let mut vals = vec![Complex64::new(0.0, 0.0); g.len()];
        for i in 0..16 {
            for j in 0..8 {
                if j != 4 {
                    vals[g.index(i, j)] = Complex64::new(0.0, kz[j]);
                }
            }
        }
        let sigma = Multiplier::new(vals, &plan).unwrap();
        assert!(sigma.is_conjugate_symmetric());
        let du = apply_multiplier(&plan, &u, &sigma).unwrap();
        for i in 0..16 {
            for j in 0..8 {
                let e = (2.0 * xs[i]).cos() * zs[j].cos();
                assert!((du[g.index(i, j)] - e).abs() < 1e-13);
            }
        }
    }

    fn plans() -> Vec<Box<dyn SpectralPlan>> {
        vec![
            Box::new(Fft1d::new(8)),
            Box::new(Fft1d::new(64)),
            Box::new(Fft1d::new(256)),
            Box::new(Fft2d::new(16, 8)),
            Box::new(Fft2d::new(32, 32)),
        ]
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for plan in plans() {
                let u: Vec<f64> = (0..plan.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let c = plan.forward_real(&u);
                let back = plan.inverse_complex(&c);
                let nu: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let err: f64 = back.iter().zip(&u)
                    .map(|(b, a)| (b - Complex64::new(*a, 0.0)).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                prop_assert!(err <= 1e-13 * nu);
                let energy: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>() / plan.len() as f64;
                prop_assert!((energy - nu * nu).abs() <= 1e-12 * nu * nu);
            }
        }

        #[test]
        fn hilbert_twice_is_minus_identity_off_mean(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid1D::new(5.0, 64).unwrap();
            let plan = Fft1d::for_grid(&g);
            // Random band-limited real signal without a Nyquist component.
            let mut c = vec![Complex64::new(0.0, 0.0); 64];
            c[0] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for k in 1..32 {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                c[k] = z;
                c[64 - k] = z.conj();
            }
            let u = plan.inverse_real(c);
            let mean = u.iter().sum::<f64>() / 64.0;
            let hh = hilbert(&hilbert(&u, &g).unwrap(), &g).unwrap();
            for (a, b) in hh.iter().zip(&u) {
                prop_assert!((a - (mean - b)).abs() < 1e-13);
            }
        }

        #[test]
        fn derivative_acts_per_mode(p in -15i64..16) {
            let g = Grid1D::new(7.0, 32).unwrap();
            let plan = Fft1d::for_grid(&g);
            let kappa = PI / 7.0 * p as f64;
            let e: Vec<Complex64> = g.nodes().iter()
                .map(|x| Complex64::new(0.0, kappa * x).exp())
                .collect();
            let sigma = Multiplier::new(derivative_symbol(&g, 1), &plan).unwrap();
            let de = apply_multiplier_complex(&plan, &e, &sigma).unwrap();
            for (d, v) in de.iter().zip(&e) {
                prop_assert!((d - Complex64::new(0.0, kappa) * v).norm() < 1e-12);
            }
        }
    }
}
