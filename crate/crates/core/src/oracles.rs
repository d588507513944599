//! Independent reference computations used to validate the solvers:
//! direct dense solves, a textbook GMRES, a dense eigenvalue wrapper, the
//! determinant representation of the polynomial extrapolation methods,
//! closed-form residual checks and frozen golden traces.
//!
//! Nothing here reuses the QR, extrapolation or Anderson kernels it is
//! meant to check.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use ndarray_linalg::EigVals;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::iterate::TraceRow;
use crate::models::{initial_guess, GuessKind, GuessSpec, Model};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on a small dense system given
/// by rows.
pub fn direct_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(*bi);
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .expect("nonempty");
        if m[p][k] == 0.0 {
            return Err(Error::SingularOperator { rcond: 0.0 });
        }
        m.swap(k, p);
        for i in k + 1..n {
            let (upper, lower) = m.split_at_mut(i);
            let pivot = &upper[k];
            let f = lower[0][k] / pivot[k];
            for (x, p) in lower[0][k..].iter_mut().zip(&pivot[k..]) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Ok(x)
}

/// Residual norms `||b - A x_k||`, `k = 0..=iters`, of full GMRES from `x0`.
///
/// Stops early when the Krylov space becomes invariant (the solve is then
/// exact and the last reported norm is the final one).
pub fn reference_gmres(matvec: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], x0: &[f64], iters: usize) -> Vec<f64> {
    let ax0 = matvec(x0);
    let r0: Vec<f64> = b.iter().zip(&ax0).map(|(b, a)| b - a).collect();
    let beta = dot(&r0, &r0).sqrt();
    let mut norms = vec![beta];
    if beta == 0.0 {
        return norms;
    }
    let mut v = vec![r0.iter().map(|x| x / beta).collect::<Vec<f64>>()];
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    for j in 0..iters {
        let mut w = matvec(&v[j]);
        let mut col = vec![0.0; j + 2];
        for (i, vi) in v.iter().enumerate() {
            let c = dot(vi, &w);
            col[i] = c;
            w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= c * vk);
        }
        let nw = dot(&w, &w).sqrt();
        col[j + 1] = nw;
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let rho = (col[j] * col[j] + col[j + 1] * col[j + 1]).sqrt();
        let (c, s) = if rho == 0.0 {
            (1.0, 0.0)
        } else {
            (col[j] / rho, col[j + 1] / rho)
        };
        cs.push(c);
        sn.push(s);
        col[j] = rho;
        col[j + 1] = 0.0;
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        norms.push(g[j + 1].abs());
        if nw <= 1e-14 * beta {
            break;
        }
        v.push(w.iter().map(|x| x / nw).collect());
    }
    norms
}

/// Eigenvalues of a dense real matrix, by decreasing modulus.
pub fn dense_eigenvalues(a: &Array2<f64>) -> Result<Vec<Complex64>> {
    let mut values = a.eigvals().map_err(|e| Error::Backend(e.to_string()))?.to_vec();
    values.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    Ok(values)
}

/// Which inner products fill the determinant rows.
#[derive(Debug, Clone, PartialEq)]
pub enum DeterminantRule {
    /// `<Delta u_i, Delta u_j>`.
    Mpe,
    /// `<Delta^2 u_i, Delta u_j>`.
    Rre,
    /// `<v_i, Delta u_j>` with the given projection vectors.
    Mmpe(Vec<Vec<f64>>),
}

fn determinant(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][j] * determinant(&minor(m, 0, j))
            })
            .sum(),
    }
}

fn minor(m: &[Vec<f64>], row: usize, col: usize) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, v)| *v)
                .collect()
        })
        .collect()
}

/// Ratio of determinants whose first rows are `(u_0, ..., u_kappa)` and
/// `(1, ..., 1)` over the method-specific inner-product rows, evaluated by
/// cofactor expansion along the first row.
pub fn determinant_extrapolation(window: &[Vec<f64>], kappa: usize, rule: &DeterminantRule) -> Result<Vec<f64>> {
    let needed = kappa + 2;
    if window.len() < needed {
        return Err(Error::DimensionMismatch(format!(
            "determinant form needs {needed} iterates, got {}",
            window.len()
        )));
    }
    let d1: Vec<Vec<f64>> = (0..=kappa)
        .map(|j| window[j + 1].iter().zip(&window[j]).map(|(a, b)| a - b).collect())
        .collect();
    if d1.iter().all(|d| d.iter().all(|x| *x == 0.0)) {
        return Ok(window[kappa + 1].clone());
    }
    let rows: Vec<Vec<f64>> = (0..kappa)
        .map(|i| {
            let left: Vec<f64> = match rule {
                DeterminantRule::Mpe => d1[i].clone(),
                DeterminantRule::Rre => d1[i + 1].iter().zip(&d1[i]).map(|(a, b)| a - b).collect(),
                DeterminantRule::Mmpe(v) => v[i].clone(),
            };
            (0..=kappa).map(|j| dot(&left, &d1[j])).collect()
        })
        .collect();
    // Full matrix with a placeholder first row; only the cofactors matter.
    let mut full = vec![vec![0.0; kappa + 1]];
    full.extend(rows);
    let cofactors: Vec<f64> = (0..=kappa)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * determinant(&minor(&full, 0, j))
        })
        .collect();
    let den: f64 = cofactors.iter().sum();
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateDenominator(den));
    }
    let n = window[0].len();
    let mut t = vec![0.0; n];
    for (j, c) in cofactors.iter().enumerate() {
        for (ti, uj) in t.iter_mut().zip(&window[j]) {
            *ti += c / den * uj;
        }
    }
    Ok(t)
}

/// `||L phi - N(phi)||` for a given profile.
pub fn profile_residual(model: &dyn Model, profile: &[f64]) -> f64 {
    let lu = model.apply_l(profile);
    let n = model.nonlinear(profile);
    lu.iter().zip(&n).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Residual of the discretized closed-form solution: the KdV soliton for
/// the Benjamin 1D model with `gamma = 0`, the KP-I lump for the Benjamin
/// 2D model with `Gamma = 0`.
pub fn closed_form_residual(model: &dyn Model) -> Result<f64> {
    let params = model.params();
    let (kind, key) = match model.name() {
        "benjamin-1d" => (GuessKind::KdvSoliton, "gamma"),
        "benjamin-2d" => (GuessKind::KpLump, "big_gamma"),
        other => {
            return Err(Error::IncompatibleKind {
                kind: "closed_form".into(),
                reason: format!("no closed-form solution known for `{other}`"),
            })
        }
    };
    if params.get(key).copied() != Some(0.0) {
        return Err(Error::IncompatibleKind {
            kind: kind.as_str().into(),
            reason: format!("closed form requires `{key} = 0`"),
        });
    }
    let profile = initial_guess(&GuessSpec::of(kind), model)?;
    Ok(profile_residual(model, &profile))
}

/// 64-bit FNV-1a, a hash that is stable across toolchains.
pub fn fingerprint(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Frozen leading rows of a trace, tied to the configuration that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenTrace {
    pub fingerprint: String,
    pub rows: Vec<TraceRow>,
    pub created_by: String,
}

impl GoldenTrace {
    pub fn freeze(fingerprint: &str, rows: &[TraceRow], count: usize) -> Self {
        GoldenTrace {
            fingerprint: fingerprint.to_string(),
            rows: rows.iter().take(count).copied().collect(),
            created_by: format!("travelwave {}", env!("CARGO_PKG_VERSION")),
        }
    }

    /// Comment lines with the metadata, then the trace CSV schema. Timing is
    /// not frozen.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# fingerprint: {}", self.fingerprint).unwrap();
        writeln!(out, "# created_by: {}", self.created_by).unwrap();
        out.push_str(&crate::cli::io::trace_csv(&self.rows));
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fingerprint = None;
        let mut created_by = String::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# fingerprint: ") {
                fingerprint = Some(rest.trim().to_string());
            } else if let Some(rest) = line.strip_prefix("# created_by: ") {
                created_by = rest.trim().to_string();
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let fingerprint = fingerprint.ok_or_else(|| Error::Io("golden trace without fingerprint".into()))?;
        Ok(GoldenTrace {
            fingerprint,
            rows: crate::cli::io::parse_trace_csv(&body)?,
            created_by,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Compare the frozen rows with `rows`; refuses traces of a different
    /// configuration.
    pub fn compare(&self, fingerprint: &str, rows: &[TraceRow], rel_tol: f64) -> Result<()> {
        if fingerprint != self.fingerprint {
            return Err(Error::config(
                "fingerprint",
                format!("golden trace belongs to {}, not {fingerprint}", self.fingerprint),
            ));
        }
        if rows.len() < self.rows.len() {
            return Err(Error::LengthMismatch {
                expected: self.rows.len(),
                got: rows.len(),
            });
        }
        let close = |a: f64, b: f64| (a.is_nan() && b.is_nan()) || (a - b).abs() <= rel_tol * a.abs().max(b.abs());
        for (g, r) in self.rows.iter().zip(rows) {
            if g.iter != r.iter || !close(g.res, r.res) || !close(g.diff, r.diff) || !close(g.sfe, r.sfe) {
                return Err(Error::Breakdown(format!(
                    "golden trace drift at iteration {}: frozen ({:e}, {:e}, {:e}), got ({:e}, {:e}, {:e})",
                    g.iter, g.res, g.diff, g.sfe, r.res, r.diff, r.sfe
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_solve_small() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 1.0]];
        let x = direct_solve(&a, &[4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(direct_solve(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gmres_identity_solves_in_one_step() {
        let r = reference_gmres(|v| v.to_vec(), &[1.0, 2.0, 3.0], &[0.0; 3], 3);
        assert_eq!(r.len(), 2);
        assert!(r[1] < 1e-15);
    }

    #[test]
    fn gmres_norms_do_not_increase() {
        let a = [
            [4.0, 1.0, 0.0, 0.5],
            [0.0, 3.0, 1.0, 0.0],
            [1.0, 0.0, 2.0, 1.0],
            [0.0, 0.5, 0.0, 1.0],
        ];
        let mv = |v: &[f64]| {
            (0..4)
                .map(|i| (0..4).map(|j| a[i][j] * v[j]).sum())
                .collect::<Vec<f64>>()
        };
        let r = reference_gmres(mv, &[1.0, -1.0, 2.0, 0.5], &[0.0; 4], 4);
        assert!(r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(*r.last().unwrap() < 1e-12);
    }

    #[test]
    fn dense_eigenvalues_of_rotation() {
        let a = Array2::from_shape_vec((2, 2), vec![0.0, -2.0, 2.0, 0.0]).unwrap();
        let e = dense_eigenvalues(&a).unwrap();
        assert!(e.iter().all(|z| (z.norm() - 2.0).abs() < 1e-14 && z.re.abs() < 1e-14));
        let b = Array2::from_shape_vec((3, 3), vec![2.0, 1.0, 0.0, 0.0, -3.0, 1.0, 0.0, 0.0, 0.5]).unwrap();
        let e = dense_eigenvalues(&b).unwrap();
        assert!((e[0].re + 3.0).abs() < 1e-14 && (e[1].re - 2.0).abs() < 1e-14 && (e[2].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn determinant_form_on_scalar_geometric_sequence() {
        let w: Vec<Vec<f64>> = (0..3).map(|n| vec![2.0 + 0.5f64.powi(n)]).collect();
        let t = determinant_extrapolation(&w, 1, &DeterminantRule::Mpe).unwrap();
        assert!((t[0] - 2.0).abs() < 1e-14);
        let c = vec![vec![1.0, 2.0]; 4];
        assert_eq!(
            determinant_extrapolation(&c, 2, &DeterminantRule::Rre).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn cofactor_determinant() {
        let m = vec![vec![2.0, 0.0, 1.0], vec![1.0, 3.0, 0.0], vec![0.0, 1.0, 4.0]];
        assert_eq!(determinant(&m), 2.0 * 12.0 - 0.0 + 1.0 * 1.0);
    }

    #[test]
    fn fingerprint_is_stable() {
        assert_eq!(fingerprint(""), "cbf29ce484222325");
        assert_ne!(fingerprint("a"), fingerprint("b"));
    }

    #[test]
    fn golden_round_trip_and_refusal() {
        let rows = vec![
            TraceRow {
                iter: 0,
                res: 1.0,
                diff: f64::NAN,
                sfe: 0.5,
                seconds: 0.0,
            },
            TraceRow {
                iter: 1,
                res: 0.25,
                diff: 0.125,
                sfe: 0.0625,
                seconds: 0.0,
            },
        ];
        let g = GoldenTrace::freeze("abc", &rows, 2);
        let back = GoldenTrace::parse(&g.to_csv()).unwrap();
        assert_eq!(back.fingerprint, "abc");
        assert!(back.compare("abc", &rows, 1e-15).is_ok());
        assert!(back.compare("abd", &rows, 1e-15).is_err());
        let mut drifted = rows.clone();
        drifted[1].res = 0.26;
        assert!(back.compare("abc", &drifted, 1e-6).is_err());
    }
}
