//! Eigenvalues of the linearized iteration maps at a computed solution.
//!
//! Two operators are available at a state `u`:
//!
//! - the classical iteration operator `S v = L^{-1} N'(u) v`;
//! - the Jacobian `F'(u)` of the stabilized map `F(u) = L^{-1} sum_j
//!   s_j(u) N_j(u)`, including the derivative of the stabilizing factors.
//!
//! Leading eigenvalues (largest modulus) are computed densely for small
//! dimensions and by restarted Arnoldi otherwise.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iterate::{PetviashviliMap, Stepper};
use crate::linalg;
use crate::models::Model;

type Action<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

/// A matrix-free real linear operator.
pub struct LinearMap<'a> {
    dim: usize,
    action: Action<'a>,
}

impl<'a> LinearMap<'a> {
    pub fn new(dim: usize, action: impl Fn(&[f64]) -> Vec<f64> + 'a) -> Self {
        LinearMap {
            dim,
            action: Box::new(action),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (self.action)(v)
    }

    /// Dense matrix by columns.
    pub fn to_dense(&self) -> Array2<f64> {
        linalg::dense_from_columns(self.dim, |j| {
            let mut e = vec![0.0; self.dim];
            e[j] = 1.0;
            self.apply(&e)
        })
    }
}

/// `v -> L^{-1} N'(u) v`, with the model projection applied.
pub fn classical_map<'a>(model: &'a dyn Model, u: &[f64]) -> LinearMap<'a> {
    let u = u.to_vec();
    LinearMap::new(model.dim(), move |v| {
        let mut rhs = model.nonlinear_derivative(&u, v);
        model.project(&mut rhs);
        let mut out = model.solve_l(&rhs);
        model.project(&mut out);
        out
    })
}

/// Jacobian of the configured stabilized map at `u`.
pub fn petviashvili_map<'a>(map: &PetviashviliMap<'a>, u: &[f64]) -> Result<LinearMap<'a>> {
    let model = map.model();
    let eval = map.evaluate(u)?;
    let stepper = map.stepper();
    let u = u.to_vec();
    let num = linalg::dot(&eval.lu, &u);
    let nonlinear = eval.nonlinear();
    let den = linalg::dot(&nonlinear, &u);
    let r = num / den;
    let exponents: Vec<f64> = match stepper {
        Stepper::Petviashvili => vec![map.exponents()[0]; eval.parts.len()],
        _ => map.exponents().to_vec(),
    };
    let factors = eval.factors.clone();
    let parts_at_u = eval.parts.clone();
    let lu = eval.lu.clone();
    Ok(LinearMap::new(model.dim(), move |v| {
        let mut rhs = vec![0.0; v.len()];
        for ((part, s), _) in model.parts().iter().zip(&factors).zip(&parts_at_u) {
            linalg::axpy(*s, &part.directional_derivative(&u, v), &mut rhs);
        }
        if stepper != Stepper::Classical {
            // d<Lu,u> = <Lv,u> + <Lu,v>; d<N,u> = <N'v,u> + <N,v>.
            let lv = model.apply_l(v);
            let dnum = linalg::dot(&lv, &u) + linalg::dot(&lu, v);
            let dn = model.nonlinear_derivative(&u, v);
            let dden = linalg::dot(&dn, &u) + linalg::dot(&nonlinear, v);
            let dr = (dnum - r * dden) / den;
            for ((g, s), n) in exponents.iter().zip(&factors).zip(&parts_at_u) {
                // d(r^g) = g r^(g-1) dr = g s dr / r.
                linalg::axpy(g * s * dr / r, n, &mut rhs);
            }
        }
        model.project(&mut rhs);
        let mut out = model.solve_l(&rhs);
        model.project(&mut out);
        out
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    pub count: usize,
    /// Largest dimension handled by the dense solver.
    pub dense_limit: usize,
    /// Relative residual target of the iterative solver.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            count: 6,
            dense_limit: 2500,
            tol: 1e-8,
            max_restarts: 200,
            seed: 0,
        }
    }
}

impl EigenOptions {
    pub fn top(count: usize) -> Self {
        EigenOptions {
            count,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Eigenvalues ordered by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// `||A x - lambda x|| / ||x||` for each eigenvalue.
    pub residuals: Vec<f64>,
    pub method: &'static str,
}

impl SpectrumReport {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }

    /// Distance from `target` to the nearest reported eigenvalue.
    pub fn distance_to(&self, target: Complex64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| (z - target).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

fn complex_residual(op: &LinearMap, lambda: Complex64, re: &[f64], im: &[f64]) -> f64 {
    let are = op.apply(re);
    let aim = op.apply(im);
    let mut r2 = 0.0;
    let mut x2 = 0.0;
    for i in 0..re.len() {
        let x = Complex64::new(re[i], im[i]);
        let ax = Complex64::new(are[i], aim[i]);
        r2 += (ax - lambda * x).norm_sqr();
        x2 += x.norm_sqr();
    }
    (r2 / x2.max(f64::MIN_POSITIVE)).sqrt()
}

fn by_modulus(values: &[Complex64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()));
    order
}

/// Leading eigenvalues of `op`.
pub fn leading_eigenvalues(op: &LinearMap, opts: &EigenOptions) -> Result<SpectrumReport> {
    if opts.count == 0 || opts.count > op.dim() {
        return Err(Error::config("count", format!("must lie in 1..={}", op.dim())));
    }
    if op.dim() <= opts.dense_limit {
        dense_eigenvalues(op, opts.count)
    } else {
        arnoldi_eigenvalues(op, opts)
    }
}

fn dense_eigenvalues(op: &LinearMap, count: usize) -> Result<SpectrumReport> {
    let a = op.to_dense();
    let (values, vectors) = a.eig().map_err(|e| Error::Backend(e.to_string()))?;
    let values = values.to_vec();
    let order = by_modulus(&values);
    let n = op.dim();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &k in order.iter().take(count) {
        let col = vectors.column(k);
        let re: Vec<f64> = col.iter().map(|z| z.re).collect();
        let im: Vec<f64> = col.iter().map(|z| z.im).collect();
        debug_assert_eq!(re.len(), n);
        eigenvalues.push(values[k]);
        residuals.push(complex_residual(op, values[k], &re, &im));
    }
    Ok(SpectrumReport {
        eigenvalues,
        residuals,
        method: "dense",
    })
}

/// Explicitly restarted Arnoldi; the restart vector combines the real and
/// imaginary parts of the wanted Ritz vectors.
fn arnoldi_eigenvalues(op: &LinearMap, opts: &EigenOptions) -> Result<SpectrumReport> {
    let n = op.dim();
    let m = (4 * opts.count).min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut best: Option<SpectrumReport> = None;

    for _ in 0..=opts.max_restarts {
        let nv = linalg::norm(&start);
        let mut basis = vec![linalg::scale(&start, 1.0 / nv)];
        let mut h = Array2::<f64>::zeros((m + 1, m));
        let mut steps = m;
        for j in 0..m {
            let mut w = op.apply(&basis[j]);
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = linalg::dot(b, &w);
                    h[(i, j)] += c;
                    linalg::axpy(-c, b, &mut w);
                }
            }
            let nw = linalg::norm(&w);
            h[(j + 1, j)] = nw;
            if nw <= 1e-14 * h.column(j).iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300) {
                steps = j + 1;
                break;
            }
            basis.push(linalg::scale(&w, 1.0 / nw));
        }
        let hm = h.slice(ndarray::s![..steps, ..steps]).to_owned();
        let (values, vectors) = hm.eig().map_err(|e| Error::Backend(e.to_string()))?;
        let values = values.to_vec();
        let order = by_modulus(&values);
        let wanted: Vec<usize> = order.iter().take(opts.count).copied().collect();

        let mut eigenvalues = Vec::new();
        let mut residuals = Vec::new();
        let mut next = vec![0.0; n];
        for &k in &wanted {
            let y = vectors.column(k);
            let mut re = vec![0.0; n];
            let mut im = vec![0.0; n];
            for (i, yi) in y.iter().enumerate() {
                linalg::axpy(yi.re, &basis[i], &mut re);
                linalg::axpy(yi.im, &basis[i], &mut im);
            }
            eigenvalues.push(values[k]);
            residuals.push(complex_residual(op, values[k], &re, &im));
            let scale = 1.0 / (linalg::norm(&re) + linalg::norm(&im)).max(1e-300);
            linalg::axpy(scale, &re, &mut next);
            linalg::axpy(scale, &im, &mut next);
        }
        let converged = eigenvalues
            .iter()
            .zip(&residuals)
            .all(|(z, r)| *r <= opts.tol * z.norm().max(1e-300));
        let report = SpectrumReport {
            eigenvalues,
            residuals,
            method: "arnoldi",
        };
        if converged || steps < m {
            return Ok(report);
        }
        best = Some(report);
        start = next;
    }
    Err(Error::NoConvergence(best.map(|b| b.residuals).unwrap_or_default()))
}

/// Leading eigenvalues of `S` at `u`.
pub fn classical_spectrum(model: &dyn Model, u: &[f64], opts: &EigenOptions) -> Result<SpectrumReport> {
    leading_eigenvalues(&classical_map(model, u), opts)
}

/// Leading eigenvalues of `F'(u)` for the stepper of `map`.
pub fn petviashvili_spectrum(map: &PetviashviliMap, u: &[f64], opts: &EigenOptions) -> Result<SpectrumReport> {
    leading_eigenvalues(&petviashvili_map(map, u)?, opts)
}
