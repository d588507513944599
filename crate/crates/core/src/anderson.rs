//! Anderson acceleration of a fixed-point map `u -> G(u) = L^{-1} g(u)`.
//!
//! The mixer stores, for each retained iterate `u_i`, its image `G(u_i)` and
//! its residual `f_i`. The next iterate is `G(u_k) - sum_i gamma_i Delta G_i`,
//! where the coefficients come from
//!
//! - Type II: `gamma = argmin || f_k - F gamma ||` with `F = [Delta f_i]`;
//! - Type I: `gamma = (H^T F)^{-1} H^T f_k` with `H = [Delta u_i]`.
//!
//! Equivalently `u_{k+1} = sum_i alpha_i G(u_i)` with `sum_i alpha_i = 1`.

use std::collections::VecDeque;

use ndarray::Array2;
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, PivotedQr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AndersonVariant {
    #[serde(rename = "aa1", alias = "AA-I")]
    AaI,
    #[serde(rename = "aa2", alias = "AA-II")]
    AaII,
}

impl AndersonVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            AndersonVariant::AaI => "aa1",
            AndersonVariant::AaII => "aa2",
        }
    }
}

impl std::str::FromStr for AndersonVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aa1" | "aa-i" | "type1" => Ok(AndersonVariant::AaI),
            "aa2" | "aa-ii" | "type2" => Ok(AndersonVariant::AaII),
            _ => Err(Error::config("variant", format!("unknown Anderson variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonConfig {
    pub variant: AndersonVariant,
    /// Maximum number of difference columns.
    pub window: usize,
    /// Columns are dropped (Type II) or the step is refused (Type I) once the
    /// condition estimate of the column-normalized system exceeds `1 / rank_tol`.
    pub rank_tol: f64,
}

impl AndersonConfig {
    pub const DEFAULT_RANK_TOL: f64 = 1e-12;

    pub fn new(variant: AndersonVariant, window: usize) -> Self {
        AndersonConfig {
            variant,
            window,
            rank_tol: Self::DEFAULT_RANK_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window", "must be a positive integer"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::config("rank_tol", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Entry {
    state: Vec<f64>,
    image: Vec<f64>,
    residual: Vec<f64>,
}

/// Outcome of one mixing step.
#[derive(Debug, Clone)]
pub struct Mix {
    /// Next iterate (before any model projection).
    pub state: Vec<f64>,
    /// Difference coefficients `gamma_i`, oldest first.
    pub gamma: Vec<f64>,
    /// Affine weights `alpha_i` of the stored images, oldest first.
    pub alpha: Vec<f64>,
    /// `|| f_k - F gamma ||`, the linearized residual of the mixed iterate.
    pub lstsq_residual: f64,
    /// Difference columns used.
    pub columns: usize,
    /// Columns dropped by this step for conditioning.
    pub truncated: usize,
}

/// Sliding-window Anderson mixer.
#[derive(Debug, Clone)]
pub struct AndersonMixer {
    cfg: AndersonConfig,
    history: VecDeque<Entry>,
    truncations: usize,
}

fn colnorm(v: &[f64]) -> Vec<f64> {
    let n = linalg::norm(v);
    if n > 0.0 {
        linalg::scale(v, 1.0 / n)
    } else {
        v.to_vec()
    }
}

fn singular_values(rows: usize, cols: &[Vec<f64>]) -> Result<Vec<f64>> {
    let a = Array2::from_shape_fn((rows, cols.len()), |(i, j)| cols[j][i]);
    let (_, s, _) = a.svd(false, false).map_err(|e| Error::Backend(e.to_string()))?;
    Ok(s.to_vec())
}

/// `sigma_max / sigma_min` of the column-normalized matrix.
fn normalized_condition(cols: &[Vec<f64>]) -> Result<f64> {
    let normalized: Vec<Vec<f64>> = cols.iter().map(|c| colnorm(c)).collect();
    let rows = normalized[0].len();
    let s = singular_values(rows, &normalized)?;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

impl AndersonMixer {
    pub fn new(cfg: AndersonConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(AndersonMixer {
            cfg,
            history: VecDeque::with_capacity(cfg.window + 1),
            truncations: 0,
        })
    }

    pub fn config(&self) -> &AndersonConfig {
        &self.cfg
    }

    /// Total number of columns dropped for conditioning so far.
    pub fn truncations(&self) -> usize {
        self.truncations
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Record an iterate together with its image and residual.
    pub fn push(&mut self, state: Vec<f64>, image: Vec<f64>, residual: Vec<f64>) {
        self.history.push_back(Entry { state, image, residual });
        while self.history.len() > self.cfg.window + 1 {
            self.history.pop_front();
        }
    }

    fn diffs(&self, pick: impl Fn(&Entry) -> &[f64]) -> Vec<Vec<f64>> {
        self.history
            .iter()
            .zip(self.history.iter().skip(1))
            .map(|(a, b)| linalg::sub(pick(b), pick(a)))
            .collect()
    }

    /// Combine the stored history into the next iterate.
    pub fn mix(&mut self) -> Result<Mix> {
        let last = self
            .history
            .back()
            .ok_or_else(|| Error::DimensionMismatch("Anderson mixing needs at least one iterate".into()))?;
        let fk = last.residual.clone();
        let mut truncated = 0;
        let gamma = match self.cfg.variant {
            AndersonVariant::AaII => loop {
                let f_cols = self.diffs(|e| &e.residual);
                if f_cols.is_empty() {
                    break Vec::new();
                }
                let cond = normalized_condition(&f_cols)?;
                if cond.is_finite() && cond * self.cfg.rank_tol <= 1.0 {
                    let refs: Vec<&[f64]> = f_cols.iter().map(|c| c.as_slice()).collect();
                    break PivotedQr::new(&refs).solve(&fk);
                }
                self.history.pop_front();
                truncated += 1;
            },
            AndersonVariant::AaI => {
                let f_cols = self.diffs(|e| &e.residual);
                let h_cols = self.diffs(|e| &e.state);
                if f_cols.is_empty() {
                    Vec::new()
                } else {
                    let fh: Vec<Vec<f64>> = f_cols.iter().map(|c| colnorm(c)).collect();
                    let hh: Vec<Vec<f64>> = h_cols.iter().map(|c| colnorm(c)).collect();
                    let m = fh.len();
                    let projected: Vec<Vec<f64>> = fh
                        .iter()
                        .map(|f| hh.iter().map(|h| linalg::dot(h, f)).collect())
                        .collect();
                    let s = singular_values(m, &projected)?;
                    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
                    let cond = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
                    if !(cond.is_finite() && cond * self.cfg.rank_tol <= 1.0) {
                        return Err(Error::IllConditioned(cond));
                    }
                    let system: Vec<Vec<f64>> = f_cols
                        .iter()
                        .map(|f| h_cols.iter().map(|h| linalg::dot(h, f)).collect())
                        .collect();
                    let rhs: Vec<f64> = h_cols.iter().map(|h| linalg::dot(h, &fk)).collect();
                    let refs: Vec<&[f64]> = system.iter().map(|c| c.as_slice()).collect();
                    let qr = PivotedQr::new(&refs);
                    if qr.rank() < m {
                        return Err(Error::IllConditioned(f64::INFINITY));
                    }
                    qr.solve(&rhs)
                }
            }
        };
        self.truncations += truncated;

        let f_cols = self.diffs(|e| &e.residual);
        let g_cols = self.diffs(|e| &e.image);
        let m = gamma.len();
        let mut lin = fk;
        let mut state = self.history.back().expect("nonempty").image.clone();
        for (i, g) in gamma.iter().enumerate() {
            linalg::axpy(-g, &f_cols[i], &mut lin);
            linalg::axpy(-g, &g_cols[i], &mut state);
        }
        let mut alpha = Vec::with_capacity(m + 1);
        if m == 0 {
            alpha.push(1.0);
        } else {
            alpha.push(gamma[0]);
            for i in 1..m {
                alpha.push(gamma[i] - gamma[i - 1]);
            }
            alpha.push(1.0 - gamma[m - 1]);
        }
        if !linalg::all_finite(&state) {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        Ok(Mix {
            state,
            gamma,
            alpha,
            lstsq_residual: linalg::norm(&lin),
            columns: m,
            truncated,
        })
    }
}
