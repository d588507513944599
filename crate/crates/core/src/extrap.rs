//! Vector extrapolation: the polynomial methods MPE, RRE and MMPE, the
//! vector and topological epsilon-algorithms VEA and TEA, and the cycling
//! driver that restarts them from a base fixed-point iteration.
//!
//! A window `u_0, ..., u_mw` holds consecutive iterates with
//! `mw = kappa + 1` for the polynomial methods and `mw = 2 kappa` for the
//! epsilon-algorithms.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iterate::PetviashviliMap;
use crate::linalg::{self, PivotedQr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VemMethod {
    Mpe,
    Rre,
    Mmpe,
    Vea,
    Tea,
}

impl VemMethod {
    pub const ALL: [VemMethod; 5] = [
        VemMethod::Mpe,
        VemMethod::Rre,
        VemMethod::Mmpe,
        VemMethod::Vea,
        VemMethod::Tea,
    ];

    /// Number of base steps per cycle for extrapolation order `kappa`.
    pub fn width(&self, kappa: usize) -> usize {
        match self {
            VemMethod::Mpe | VemMethod::Rre | VemMethod::Mmpe => kappa + 1,
            VemMethod::Vea | VemMethod::Tea => 2 * kappa,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VemMethod::Mpe => "mpe",
            VemMethod::Rre => "rre",
            VemMethod::Mmpe => "mmpe",
            VemMethod::Vea => "vea",
            VemMethod::Tea => "tea",
        }
    }
}

impl std::str::FromStr for VemMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VemMethod::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("method", format!("unknown extrapolation method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VemConfig {
    pub method: VemMethod,
    pub kappa: usize,
    /// Relative guard against division blow-up and degenerate combinations.
    pub breakdown_tol: f64,
    /// Seed of the MMPE projection vectors.
    pub seed: u64,
}

impl VemConfig {
    pub fn new(method: VemMethod, kappa: usize) -> Self {
        VemConfig {
            method,
            kappa,
            breakdown_tol: 1e-14,
            seed: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.method.width(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(Error::config("kappa", "must be a positive integer"));
        }
        if !(self.breakdown_tol.is_finite() && self.breakdown_tol >= 0.0) {
            return Err(Error::config("breakdown_tol", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Consecutive iterates `u_0, ..., u_n` with lazily formed differences.
#[derive(Debug, Clone)]
pub struct Window {
    states: Vec<Vec<f64>>,
}

impl Window {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::DimensionMismatch(
                "an extrapolation window needs at least two iterates".into(),
            ));
        }
        let n = states[0].len();
        if let Some(bad) = states.iter().find(|s| s.len() != n) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(Window { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("nonempty window")
    }

    /// `Delta u_i = u_{i+1} - u_i`.
    pub fn diff(&self, i: usize) -> Vec<f64> {
        linalg::sub(&self.states[i + 1], &self.states[i])
    }

    /// `Delta^2 u_i = Delta u_{i+1} - Delta u_i`.
    pub fn diff2(&self, i: usize) -> Vec<f64> {
        linalg::sub(&self.diff(i + 1), &self.diff(i))
    }

    fn require(&self, needed: usize, method: &str) -> Result<()> {
        if self.len() < needed {
            return Err(Error::DimensionMismatch(format!(
                "{method} needs {needed} iterates, window has {}",
                self.len()
            )));
        }
        Ok(())
    }

    fn is_stationary(&self, upto: usize) -> bool {
        (0..upto).all(|i| self.states[i + 1] == self.states[i])
    }
}

/// Combination `sum_j c_j u_j / sum_j c_j`, guarded against a vanishing sum.
fn normalized_combination(window: &Window, c: &[f64], tol: f64, method: &str) -> Result<Vec<f64>> {
    let sum: f64 = c.iter().sum();
    let abs: f64 = c.iter().map(|x| x.abs()).sum();
    if !sum.is_finite() || sum.abs() <= tol * abs {
        return Err(Error::Breakdown(format!("{method}: coefficient sum {sum:e} vanishes")));
    }
    let gamma: Vec<f64> = c.iter().map(|x| x / sum).collect();
    let states: Vec<&[f64]> = (0..c.len()).map(|j| window.state(j)).collect();
    Ok(linalg::combine(&gamma, &states))
}

/// Minimal polynomial extrapolation from `u_0, ..., u_{kappa+1}`.
pub fn mpe(window: &Window, kappa: usize, tol: f64) -> Result<Vec<f64>> {
    window.require(kappa + 2, "MPE")?;
    if window.is_stationary(kappa + 1) {
        return Ok(window.state(kappa + 1).to_vec());
    }
    let diffs: Vec<Vec<f64>> = (0..=kappa).map(|j| window.diff(j)).collect();
    let cols: Vec<&[f64]> = diffs[..kappa].iter().map(|d| d.as_slice()).collect();
    let rhs = linalg::scale(&diffs[kappa], -1.0);
    let (mut c, _) = linalg::least_squares(&cols, &rhs);
    c.push(1.0);
    normalized_combination(window, &c, tol, "MPE")
}

/// Reduced rank extrapolation from `u_0, ..., u_{kappa+1}`.
pub fn rre(window: &Window, kappa: usize, _tol: f64) -> Result<Vec<f64>> {
    window.require(kappa + 2, "RRE")?;
    if window.is_stationary(kappa + 1) {
        return Ok(window.state(kappa + 1).to_vec());
    }
    let d2: Vec<Vec<f64>> = (0..kappa).map(|j| window.diff2(j)).collect();
    let cols: Vec<&[f64]> = d2.iter().map(|d| d.as_slice()).collect();
    let (beta, _) = linalg::least_squares(&cols, &window.diff(0));
    let d1: Vec<Vec<f64>> = (0..kappa).map(|j| window.diff(j)).collect();
    let refs: Vec<&[f64]> = d1.iter().map(|d| d.as_slice()).collect();
    let correction = linalg::combine(&beta, &refs);
    let t = linalg::sub(window.state(0), &correction);
    if !linalg::all_finite(&t) {
        return Err(Error::Breakdown("RRE: non-finite extrapolant".into()));
    }
    Ok(t)
}

/// Modified minimal polynomial extrapolation with fixed projection vectors.
pub fn mmpe(window: &Window, kappa: usize, vectors: &[Vec<f64>], tol: f64) -> Result<Vec<f64>> {
    window.require(kappa + 2, "MMPE")?;
    if vectors.len() < kappa {
        return Err(Error::DimensionMismatch(format!(
            "MMPE needs {kappa} projection vectors, got {}",
            vectors.len()
        )));
    }
    if window.is_stationary(kappa + 1) {
        return Ok(window.state(kappa + 1).to_vec());
    }
    let diffs: Vec<Vec<f64>> = (0..=kappa).map(|j| window.diff(j)).collect();
    // Column j of the projected system holds <v_i, Delta u_j>, i = 1..kappa.
    let cols: Vec<Vec<f64>> = diffs[..kappa]
        .iter()
        .map(|d| vectors[..kappa].iter().map(|v| linalg::dot(v, d)).collect())
        .collect();
    let rhs: Vec<f64> = vectors[..kappa]
        .iter()
        .map(|v| -linalg::dot(v, &diffs[kappa]))
        .collect();
    let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
    let qr = PivotedQr::new(&refs);
    if qr.rank() < kappa {
        return Err(Error::Breakdown(format!(
            "MMPE: projected system has rank {} < {kappa}",
            qr.rank()
        )));
    }
    let mut c = qr.solve(&rhs);
    c.push(1.0);
    normalized_combination(window, &c, tol, "MMPE")
}

/// Vector epsilon-algorithm with the inverse `w / ||w||^2`; returns `eps_{2 kappa}^{(0)}`.
pub fn vea(window: &Window, kappa: usize, tol: f64) -> Result<Vec<f64>> {
    window.require(2 * kappa + 1, "VEA")?;
    if window.is_stationary(2 * kappa) {
        return Ok(window.state(2 * kappa).to_vec());
    }
    let scale = linalg::norm(window.state(0)).max(f64::MIN_POSITIVE);
    let n = window.state(0).len();
    // prev = column k-1, cur = column k, each indexed by n.
    let mut prev: Vec<Vec<f64>> = vec![vec![0.0; n]; 2 * kappa + 2];
    let mut cur: Vec<Vec<f64>> = window.states()[..=2 * kappa].to_vec();
    for k in 0..2 * kappa {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let w = linalg::sub(&cur[j + 1], &cur[j]);
            let nw2 = linalg::dot(&w, &w);
            // Only differences of even columns live on the scale of the states.
            let small = if k % 2 == 0 {
                nw2.sqrt() <= tol * scale
            } else {
                nw2 == 0.0
            };
            if small || !nw2.is_finite() {
                return Err(Error::Breakdown(format!("VEA: vanishing difference in column {k}")));
            }
            let mut e = prev[j + 1].clone();
            linalg::axpy(1.0 / nw2, &w, &mut e);
            next.push(e);
        }
        prev = cur;
        cur = next;
    }
    Ok(cur.swap_remove(0))
}

/// Topological epsilon-algorithm with anchor `y`; returns `eps_{2 kappa}^{(0)}`.
pub fn tea(window: &Window, kappa: usize, anchor: &[f64], tol: f64) -> Result<Vec<f64>> {
    window.require(2 * kappa + 1, "TEA")?;
    if window.is_stationary(2 * kappa) {
        return Ok(window.state(2 * kappa).to_vec());
    }
    let ny = linalg::norm(anchor);
    let scale = linalg::norm(window.state(0)).max(f64::MIN_POSITIVE);
    let n = window.state(0).len();
    let guard = |d: f64, nd: f64, column: usize| -> Result<()> {
        if !d.is_finite() || d.abs() <= tol * ny * nd {
            return Err(Error::Breakdown(format!("TEA: vanishing pairing in column {column}")));
        }
        Ok(())
    };
    let mut odd_prev: Vec<Vec<f64>> = vec![vec![0.0; n]; 2 * kappa + 1];
    let mut even: Vec<Vec<f64>> = window.states()[..=2 * kappa].to_vec();
    for k in 0..kappa {
        let len = even.len();
        let diffs: Vec<Vec<f64>> = (0..len - 1).map(|j| linalg::sub(&even[j + 1], &even[j])).collect();
        // eps_{2k+1}^{(j)} = eps_{2k-1}^{(j+1)} + y / <y, Delta eps_{2k}^{(j)}>.
        let mut odd = Vec::with_capacity(len - 1);
        for (j, d) in diffs.iter().enumerate() {
            let nd = linalg::norm(d);
            if nd <= tol * scale {
                return Err(Error::Breakdown(format!(
                    "TEA: vanishing difference in column {}",
                    2 * k
                )));
            }
            let p = linalg::dot(anchor, d);
            guard(p, nd, 2 * k)?;
            let mut e = odd_prev[j + 1].clone();
            linalg::axpy(1.0 / p, anchor, &mut e);
            odd.push(e);
        }
        // eps_{2k+2}^{(j)} = eps_{2k}^{(j+1)} + Delta eps_{2k}^{(j)} / <Delta eps_{2k+1}^{(j)}, Delta eps_{2k}^{(j)}>.
        let mut next = Vec::with_capacity(len - 2);
        for j in 0..len - 2 {
            let dodd = linalg::sub(&odd[j + 1], &odd[j]);
            let p = linalg::dot(&dodd, &diffs[j]);
            guard(
                p,
                linalg::norm(&diffs[j]) * linalg::norm(&dodd) / ny.max(f64::MIN_POSITIVE),
                2 * k + 1,
            )?;
            let mut e = even[j + 1].clone();
            linalg::axpy(1.0 / p, &diffs[j], &mut e);
            next.push(e);
        }
        odd_prev = odd;
        even = next;
    }
    Ok(even.swap_remove(0))
}

/// Seeded pseudorandom orthonormal vectors for MMPE.
pub fn mmpe_vectors(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count.min(dim) {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for b in &basis {
                let p = linalg::dot(b, &v);
                linalg::axpy(-p, b, &mut v);
            }
        }
        let nv = linalg::norm(&v);
        if nv > 1e-8 {
            basis.push(linalg::scale(&v, 1.0 / nv));
        }
    }
    basis
}

/// Apply the configured method to a full cycle window.
pub fn extrapolate(window: &Window, cfg: &VemConfig, mmpe_basis: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = cfg.kappa;
    let tol = cfg.breakdown_tol;
    match cfg.method {
        VemMethod::Mpe => mpe(window, k, tol),
        VemMethod::Rre => rre(window, k, tol),
        VemMethod::Mmpe => mmpe(window, k, mmpe_basis, tol),
        VemMethod::Vea => vea(window, k, tol),
        VemMethod::Tea => {
            let y = window.diff(0);
            tea(window, k, &y, tol)
        }
    }
}

/// Result of one extrapolation cycle.
#[derive(Debug, Clone)]
pub struct CycleOutcome {
    /// Next cycle seed.
    pub state: Vec<f64>,
    /// The `mw` inner iterates, in order.
    pub inner: Vec<Vec<f64>>,
    /// Set when the method broke down and the last inner iterate was returned.
    pub breakdown: Option<String>,
}

/// One cycle: `mw` base steps from `seed`, then extrapolation.
pub fn cycle(seed: &[f64], map: &PetviashviliMap, cfg: &VemConfig, mmpe_basis: &[Vec<f64>]) -> Result<CycleOutcome> {
    cfg.validate()?;
    let mut states = vec![seed.to_vec()];
    for _ in 0..cfg.width() {
        let next = map.step(states.last().expect("nonempty"))?;
        states.push(next);
    }
    let inner = states[1..].to_vec();
    let window = Window::new(states)?;
    match extrapolate(&window, cfg, mmpe_basis) {
        Ok(t) if linalg::all_finite(&t) => Ok(CycleOutcome {
            state: t,
            inner,
            breakdown: None,
        }),
        Ok(_) => Ok(CycleOutcome {
            state: window.last().to_vec(),
            inner,
            breakdown: Some("non-finite extrapolant".into()),
        }),
        Err(Error::Breakdown(msg)) => Ok(CycleOutcome {
            state: window.last().to_vec(),
            inner,
            breakdown: Some(msg),
        }),
        Err(e) => Err(e),
    }
}
