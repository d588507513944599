//! Traveling waves of the four-parameter Boussinesq family.
//!
//! The discrete operator is block diagonal in Fourier space: each mode
//! `kappa` carries the 2x2 block
//!
//! ```text
//! [ c_s (1 + b k^2) - C2    -(1 - a k^2) - C1 ]
//! [ -(1 - c k^2)             c_s (1 + d k^2) - C2 ]
//! ```
//!
//! with `C1 = C2 = 0` for solitary waves and the constant-state shift for
//! periodic waves.

use std::collections::BTreeMap;

use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GridInfo, HomogeneousPart, Model};
use crate::error::{Error, Result};
use crate::spectral::{Fft1d, Grid1D, SpectralPlan};

/// Named members of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoussinesqFamily {
    /// `a = b = c = 0, d = 1/3`.
    Classical,
    /// `a = c = 1/6, b = d = 0`.
    KdvKdv,
    /// `a = c = 0, b = d = 1/6`.
    BbmBbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoussinesqParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub speed: f64,
}

impl BoussinesqParams {
    pub fn family(family: BoussinesqFamily, speed: f64) -> Self {
        let sixth = 1.0 / 6.0;
        let (a, b, c, d) = match family {
            BoussinesqFamily::Classical => (0.0, 0.0, 0.0, 1.0 / 3.0),
            BoussinesqFamily::KdvKdv => (sixth, 0.0, sixth, 0.0),
            BoussinesqFamily::BbmBbm => (0.0, sixth, 0.0, sixth),
        };
        BoussinesqParams { a, b, c, d, speed }
    }

    fn validate(&self) -> Result<()> {
        let sum = self.a + self.b + self.c + self.d;
        if (sum - 1.0 / 3.0).abs() > 1e-14 {
            return Err(Error::config(
                "boussinesq",
                format!("a + b + c + d must equal 1/3, got {sum}"),
            ));
        }
        if !self.speed.is_finite() {
            return Err(Error::config("boussinesq.speed", "speed must be finite"));
        }
        Ok(())
    }
}

/// Constant state `(C1, C2)` removed from a periodic wave, with the
/// integration constants `(K1, K2)` it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicShift {
    pub k1: f64,
    pub k2: f64,
    pub c1: f64,
    pub c2: f64,
}

fn cubic(c2: f64, k1: f64, k2: f64, cs: f64) -> (f64, f64) {
    let f = 0.5 * c2 * c2 * c2 - 1.5 * cs * c2 * c2 + (cs * cs - 1.0 + k2) * c2 - k1 - cs * k2;
    let df = 1.5 * c2 * c2 - 3.0 * cs * c2 + (cs * cs - 1.0 + k2);
    (f, df)
}

/// Residual of the constant-state cubic at `c2`.
pub fn constants_residual(c2: f64, k1: f64, k2: f64, cs: f64) -> f64 {
    cubic(c2, k1, k2, cs).0
}

/// All real constant states `(C1, C2)` of the periodic problem, sorted by `C2`.
pub fn boussinesq_constants(k1: f64, k2: f64, cs: f64) -> Vec<(f64, f64)> {
    // Monic form: C^3 - 3 cs C^2 + 2 (cs^2 - 1 + K2) C - 2 (K1 + cs K2).
    let p2 = -3.0 * cs;
    let p1 = 2.0 * (cs * cs - 1.0 + k2);
    let p0 = -2.0 * (k1 + cs * k2);
    let companion =
        Array2::from_shape_vec((3, 3), vec![0.0, 0.0, -p0, 1.0, 0.0, -p1, 0.0, 1.0, -p2]).expect("3x3 shape");
    let eig = companion
        .eigvals()
        .expect("eigenvalues of a finite 3x3 companion matrix");
    let scale = 1.0 + eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut roots: Vec<f64> = eig
        .iter()
        .filter(|z: &&Complex64| z.im.abs() <= 1e-7 * scale)
        .map(|z| {
            let (f, df) = cubic(z.re, k1, k2, cs);
            if df != 0.0 {
                z.re - f / df
            } else {
                z.re
            }
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.into_iter().map(|c2| (cs * c2 - 0.5 * c2 * c2 - k2, c2)).collect()
}

/// The quadratic nonlinearity `(u eta, u^2 / 2)`.
#[derive(Debug, Clone, Copy)]
struct Quadratic {
    m: usize,
}

impl HomogeneousPart for Quadratic {
    fn degree(&self) -> i32 {
        2
    }

    fn evaluate(&self, state: &[f64]) -> Vec<f64> {
        let (eta, u) = state.split_at(self.m);
        let mut out = Vec::with_capacity(2 * self.m);
        out.extend(u.iter().zip(eta).map(|(a, b)| a * b));
        out.extend(u.iter().map(|a| 0.5 * a * a));
        out
    }

    fn directional_derivative(&self, state: &[f64], dir: &[f64]) -> Vec<f64> {
        let (eta, u) = state.split_at(self.m);
        let (veta, vu) = dir.split_at(self.m);
        let mut out = Vec::with_capacity(2 * self.m);
        out.extend((0..self.m).map(|j| u[j] * veta[j] + eta[j] * vu[j]));
        out.extend((0..self.m).map(|j| u[j] * vu[j]));
        out
    }
}

/// Boussinesq traveling-wave model (solitary or shifted periodic).
pub struct Boussinesq {
    name: String,
    params: BoussinesqParams,
    shift: Option<PeriodicShift>,
    grid: Grid1D,
    plan: Fft1d,
    /// Per-mode blocks `[[b11, b12], [b21, b22]]` and determinants.
    blocks: Vec<[f64; 5]>,
    parts: Vec<Box<dyn HomogeneousPart>>,
}

impl std::fmt::Debug for Boussinesq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Boussinesq")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("shift", &self.shift)
            .field("grid", &self.grid)
            .finish()
    }
}

fn build(name: &str, params: &BoussinesqParams, shift: Option<PeriodicShift>, grid: Grid1D) -> Result<Boussinesq> {
    params.validate()?;
    let (c1, c2) = shift.map_or((0.0, 0.0), |s| (s.c1, s.c2));
    let cs = params.speed;
    let blocks = grid
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(k, kappa)| {
            let k2 = kappa * kappa;
            let b11 = cs * (1.0 + params.b * k2) - c2;
            let b12 = -(1.0 - params.a * k2) - c1;
            let b21 = -(1.0 - params.c * k2);
            let b22 = cs * (1.0 + params.d * k2) - c2;
            let det = b11 * b22 - b12 * b21;
            let scale = (b11 * b22).abs().max((b12 * b21).abs());
            if det.abs() < 1e-12 * scale || !det.is_finite() {
                return Err(Error::SingularBlock {
                    mode: grid.mode_index(k),
                    det: det.abs(),
                });
            }
            Ok([b11, b12, b21, b22, det])
        })
        .collect::<Result<Vec<_>>>()?;
    let m = grid.points();
    Ok(Boussinesq {
        name: name.to_string(),
        params: *params,
        shift,
        grid,
        plan: Fft1d::for_grid(&grid),
        blocks,
        parts: vec![Box::new(Quadratic { m })],
    })
}

pub fn boussinesq_solitary(params: &BoussinesqParams, grid: Grid1D) -> Result<Boussinesq> {
    build("boussinesq", params, None, grid)
}

pub fn boussinesq_periodic(params: &BoussinesqParams, shift: PeriodicShift, grid: Grid1D) -> Result<Boussinesq> {
    let residual = constants_residual(shift.c2, shift.k1, shift.k2, params.speed);
    let c1 = params.speed * shift.c2 - 0.5 * shift.c2 * shift.c2 - shift.k2;
    let scale = 1.0 + shift.c2.abs().powi(3) + params.speed.abs().powi(2);
    if residual.abs() > 1e-10 * scale || (c1 - shift.c1).abs() > 1e-10 * (1.0 + c1.abs()) {
        return Err(Error::config(
            "boussinesq.shift",
            format!(
                "(C1, C2) = ({}, {}) is not a constant state for (K1, K2)",
                shift.c1, shift.c2
            ),
        ));
    }
    build("boussinesq-periodic", params, Some(shift), grid)
}

impl Boussinesq {
    pub fn boussinesq_params(&self) -> &BoussinesqParams {
        &self.params
    }

    pub fn shift(&self) -> Option<PeriodicShift> {
        self.shift
    }

    pub fn grid1d(&self) -> &Grid1D {
        &self.grid
    }

    /// The 2x2 block at transform slot `k` as `[[b11, b12], [b21, b22]]`.
    pub fn block(&self, k: usize) -> [[f64; 2]; 2] {
        let [b11, b12, b21, b22, _] = self.blocks[k];
        [[b11, b12], [b21, b22]]
    }

    /// Physical profile `(eta, u)` from a state in shifted variables.
    pub fn unshifted(&self, state: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = self.grid.points();
        let (c1, c2) = self.shift.map_or((0.0, 0.0), |s| (s.c1, s.c2));
        let eta = state[..m].iter().map(|x| x + c1).collect();
        let u = state[m..].iter().map(|x| x + c2).collect();
        (eta, u)
    }

    /// Residual of the unshifted periodic system with integration constants,
    /// `||L0 (eta, u) - N(eta, u) - (K1, K2)||`, where `L0` is the unshifted operator.
    pub fn unshifted_residual(&self, state: &[f64]) -> f64 {
        let (eta, u) = self.unshifted(state);
        let (k1, k2) = self.shift.map_or((0.0, 0.0), |s| (s.k1, s.k2));
        let unshifted = build("boussinesq", &self.params, None, self.grid)
            .expect("unshifted blocks are checked when the shifted model is built");
        let mut full = eta.clone();
        full.extend_from_slice(&u);
        let lhs = unshifted.apply_l(&full);
        let rhs = unshifted.nonlinear(&full);
        let m = self.grid.points();
        lhs.iter()
            .zip(&rhs)
            .enumerate()
            .map(|(j, (a, b))| {
                let k = if j < m { k1 } else { k2 };
                (a - b - k).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    fn transform_pair(&self, state: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.grid.points();
        (self.plan.forward_real(&state[..m]), self.plan.forward_real(&state[m..]))
    }

    fn inverse_pair(&self, a: Vec<Complex64>, b: Vec<Complex64>) -> Vec<f64> {
        let mut out = self.plan.inverse_real(a);
        out.extend(self.plan.inverse_real(b));
        out
    }
}

impl Model for Boussinesq {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        2 * self.grid.points()
    }

    fn components(&self) -> usize {
        2
    }

    fn parts(&self) -> &[Box<dyn HomogeneousPart>] {
        &self.parts
    }

    fn apply_l(&self, state: &[f64]) -> Vec<f64> {
        let (e, u) = self.transform_pair(state);
        let (a, b): (Vec<_>, Vec<_>) = self
            .blocks
            .iter()
            .zip(e.iter().zip(&u))
            .map(|([b11, b12, b21, b22, _], (x, y))| (x * b11 + y * b12, x * b21 + y * b22))
            .unzip();
        self.inverse_pair(a, b)
    }

    fn solve_l(&self, rhs: &[f64]) -> Vec<f64> {
        let (f, g) = self.transform_pair(rhs);
        let (a, b): (Vec<_>, Vec<_>) = self
            .blocks
            .iter()
            .zip(f.iter().zip(&g))
            .map(|([b11, b12, b21, b22, det], (x, y))| ((x * b22 - y * b12) / det, (y * b11 - x * b21) / det))
            .unzip();
        self.inverse_pair(a, b)
    }

    fn grid(&self) -> GridInfo {
        GridInfo::OneD(self.grid)
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::from([
            ("a".to_string(), self.params.a),
            ("b".to_string(), self.params.b),
            ("c".to_string(), self.params.c),
            ("d".to_string(), self.params.d),
            ("speed".to_string(), self.params.speed),
            ("half_length".to_string(), self.grid.half_length()),
            ("points".to_string(), self.grid.points() as f64),
        ]);
        if let Some(s) = self.shift {
            p.insert("k1".into(), s.k1);
            p.insert("k2".into(), s.k2);
            p.insert("c1".into(), s.c1);
            p.insert("c2".into(), s.c2);
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing;

    fn grid() -> Grid1D {
        Grid1D::new(64.0, 256).unwrap()
    }

    #[test]
    fn family_parameters_sum_to_a_third() {
        for fam in [
            BoussinesqFamily::Classical,
            BoussinesqFamily::KdvKdv,
            BoussinesqFamily::BbmBbm,
        ] {
            let p = BoussinesqParams::family(fam, 1.3);
            assert!((p.a + p.b + p.c + p.d - 1.0 / 3.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn zero_mode_block() {
        let p = BoussinesqParams::family(BoussinesqFamily::Classical, 1.3);
        let model = boussinesq_solitary(&p, grid()).unwrap();
        assert_eq!(model.block(0), [[1.3, -1.0], [-1.0, 1.3]]);
        assert!((model.blocks[0][4] - 0.69).abs() < 1e-15);
    }

    #[test]
    fn degree_two_scaling() {
        let p = BoussinesqParams::family(BoussinesqFamily::Classical, 1.3);
        let model = boussinesq_solitary(&p, grid()).unwrap();
        let u = testing::random_state(model.dim(), 3);
        let n1 = model.nonlinear(&u);
        let n2 = model.nonlinear(&crate::linalg::scale(&u, 2.0));
        for (a, b) in n1.iter().zip(&n2) {
            assert!((4.0 * a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn parts_and_inverse() {
        for fam in [
            BoussinesqFamily::Classical,
            BoussinesqFamily::KdvKdv,
            BoussinesqFamily::BbmBbm,
        ] {
            let model = boussinesq_solitary(&BoussinesqParams::family(fam, 1.3), grid()).unwrap();
            assert_eq!(model.parts().len(), 1);
            testing::check_parts(&model, 11);
            testing::check_inverse(&model, 12);
        }
    }

    #[test]
    fn resonant_speed_is_rejected() {
        // c_s = 1 makes the zero-mode block singular.
        let p = BoussinesqParams::family(BoussinesqFamily::Classical, 1.0);
        assert!(matches!(
            boussinesq_solitary(&p, grid()),
            Err(Error::SingularBlock { mode: 0, .. })
        ));
    }

    #[test]
    fn invalid_family_sum() {
        let p = BoussinesqParams {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.2,
            speed: 1.3,
        };
        assert!(matches!(boussinesq_solitary(&p, grid()), Err(Error::Config { .. })));
    }

    #[test]
    fn constants_zero_root() {
        let roots = boussinesq_constants(0.0, 0.0, 2.0);
        let zero = roots.iter().find(|(_, c2)| c2.abs() < 1e-14).expect("C2 = 0 root");
        assert!(zero.0.abs() < 1e-14);
    }

    #[test]
    fn constants_match_bisection() {
        let (k1, k2) = (0.75, 1.0);
        for cs in [0.5, 1.3, 2.5, 3.0] {
            let roots = boussinesq_constants(k1, k2, cs);
            // Independent scan of the constant-state system itself: C1 from
            // the second row, sign changes of the first row on [-10, 10].
            let c1_of = |x: f64| cs * x - 0.5 * x * x - k2;
            let f = |x: f64| cs * c1_of(x) - x - c1_of(x) * x - k1;
            let mut scanned = Vec::new();
            let step = 1e-6;
            let n = (20.0 / step) as usize;
            let mut prev = f(-10.0);
            for i in 1..=n {
                let x = -10.0 + i as f64 * step;
                let cur = f(x);
                if prev == 0.0 || prev.signum() != cur.signum() {
                    let (mut lo, mut hi) = (x - step, x);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if f(lo).signum() == f(mid).signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    scanned.push(0.5 * (lo + hi));
                }
                prev = cur;
            }
            assert_eq!(roots.len(), scanned.len(), "cs = {cs}");
            for ((c1, c2), s) in roots.iter().zip(&scanned) {
                assert!((c2 - s).abs() < 1e-9);
                assert!(constants_residual(*c2, k1, k2, cs).abs() <= 1e-12);
                assert!((c1 - (cs * c2 - 0.5 * c2 * c2 - k2)).abs() < 1e-15);
                // Both rows of the constant-state system hold.
                assert!((cs * c1 - c2 - c1 * c2 - k1).abs() < 1e-11);
                assert!((-c1 + cs * c2 - 0.5 * c2 * c2 - k2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_zero_mode_block() {
        let p = BoussinesqParams::family(BoussinesqFamily::BbmBbm, 3.0);
        let (c1, c2) = boussinesq_constants(0.75, 1.0, 3.0)[0];
        let shift = PeriodicShift {
            k1: 0.75,
            k2: 1.0,
            c1,
            c2,
        };
        let model = boussinesq_periodic(&p, shift, Grid1D::new(16.0, 64).unwrap()).unwrap();
        let b = model.block(0);
        assert!((b[0][0] - (3.0 - c2)).abs() < 1e-15);
        assert!((b[0][1] - (-1.0 - c1)).abs() < 1e-15);
        assert_eq!(b[1][0], -1.0);
        assert!((b[1][1] - (3.0 - c2)).abs() < 1e-15);
        testing::check_inverse(&model, 5);
    }

    #[test]
    fn zero_shift_matches_solitary() {
        let p = BoussinesqParams::family(BoussinesqFamily::Classical, 2.0);
        let g = grid();
        let a = boussinesq_solitary(&p, g).unwrap();
        let shift = PeriodicShift {
            k1: 0.0,
            k2: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
        let b = boussinesq_periodic(&p, shift, g).unwrap();
        for k in 0..g.points() {
            assert_eq!(a.block(k), b.block(k));
        }
    }

    #[test]
    fn periodic_rejects_non_root() {
        let p = BoussinesqParams::family(BoussinesqFamily::BbmBbm, 3.0);
        let shift = PeriodicShift {
            k1: 0.75,
            k2: 1.0,
            c1: 0.0,
            c2: 0.1,
        };
        assert!(boussinesq_periodic(&p, shift, grid()).is_err());
    }
}
