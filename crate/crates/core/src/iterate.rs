//! Petviashvili-type fixed-point iterations, stopping rules and traces.
//!
//! For `L u = N(u)` with `N = sum_j N_j` and `N_j` homogeneous of degree
//! `p_j`, the stabilized step is
//!
//! ```text
//! u_{n+1} = L^{-1} sum_j s_j(u_n) N_j(u_n),   s_j = (<L u, u> / <N(u), u>)^{gamma_j}
//! ```
//!
//! with `gamma_j = p_j / (p_j - 1)` by default. The classical fixed-point
//! iteration takes `s_j = 1`; the Petviashvili method uses a single exponent
//! for the whole nonlinearity.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::anderson::{AndersonConfig, AndersonMixer};
use crate::error::{Error, Result};
use crate::extrap::{self, VemConfig, Window};
use crate::linalg;
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Classical,
    Petviashvili,
    #[default]
    EPetviashvili,
}

impl Stepper {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stepper::Classical => "classical",
            Stepper::Petviashvili => "petviashvili",
            Stepper::EPetviashvili => "e_petviashvili",
        }
    }
}

/// Ratio `<L u, u> / <N(u), u>` raised to `gamma`.
pub fn stabilizing_factor(u: &[f64], model: &dyn Model, gamma: f64) -> Result<f64> {
    let lu = model.apply_l(u);
    let n = model.nonlinear(u);
    factor_from(linalg::dot(&lu, u), linalg::dot(&n, u), gamma)
}

fn factor_from(num: f64, den: f64, gamma: f64) -> Result<f64> {
    if den.is_nan() || den.abs() <= 1e-300 {
        return Err(Error::DegenerateDenominator(den));
    }
    let base = num / den;
    if base < 0.0 && gamma.fract() != 0.0 {
        return Err(Error::NegativeBaseFractionalPower { base, exponent: gamma });
    }
    Ok(base.powf(gamma))
}

/// Every quantity of a state needed by the steps and the trace.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `L u`.
    pub lu: Vec<f64>,
    /// `N_j(u)`, one per homogeneous part.
    pub parts: Vec<Vec<f64>>,
    /// `s_j(u)`, one per part (all `1` for the classical step).
    pub factors: Vec<f64>,
    stepper: Stepper,
}

impl Evaluation {
    pub fn nonlinear(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.lu.len()];
        for p in &self.parts {
            linalg::axpy(1.0, p, &mut out);
        }
        out
    }

    /// `L u - N(u)`.
    pub fn residual(&self) -> Vec<f64> {
        linalg::sub(&self.lu, &self.nonlinear())
    }

    pub fn residual_norm(&self) -> f64 {
        linalg::norm(&self.residual())
    }

    /// `sum_j s_j N_j(u)`.
    pub fn stabilized_rhs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.lu.len()];
        for (p, s) in self.parts.iter().zip(&self.factors) {
            linalg::axpy(*s, p, &mut out);
        }
        out
    }

    /// `L u - sum_j s_j N_j(u)`.
    pub fn stabilized_residual(&self) -> Vec<f64> {
        linalg::sub(&self.lu, &self.stabilized_rhs())
    }

    /// `max_j |s_j - 1|`; not defined for the classical step.
    pub fn sfe(&self) -> f64 {
        match self.stepper {
            Stepper::Classical => f64::NAN,
            _ => self.factors.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max),
        }
    }
}

/// The base fixed-point map of a model.
#[derive(Clone)]
pub struct PetviashviliMap<'a> {
    model: &'a dyn Model,
    stepper: Stepper,
    exponents: Vec<f64>,
}

impl std::fmt::Debug for PetviashviliMap<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PetviashviliMap")
            .field("model", &self.model.name())
            .field("stepper", &self.stepper)
            .field("exponents", &self.exponents)
            .finish()
    }
}

impl<'a> PetviashviliMap<'a> {
    /// Map with the default exponents `p_j / (p_j - 1)`.
    pub fn new(model: &'a dyn Model, stepper: Stepper) -> Self {
        let exponents = model
            .parts()
            .iter()
            .map(|p| {
                let d = p.degree() as f64;
                d / (d - 1.0)
            })
            .collect();
        PetviashviliMap {
            model,
            stepper,
            exponents,
        }
    }

    /// Override the exponents; one per part, or a single exponent for the
    /// Petviashvili step.
    pub fn with_exponents(mut self, exponents: Vec<f64>) -> Result<Self> {
        let parts = self.model.parts().len();
        let ok = exponents.len() == parts || (self.stepper == Stepper::Petviashvili && exponents.len() == 1);
        if !ok {
            return Err(Error::LengthMismatch {
                expected: parts,
                got: exponents.len(),
            });
        }
        if exponents.iter().any(|g| !g.is_finite()) {
            return Err(Error::config("exponents", "must be finite"));
        }
        self.exponents = exponents;
        Ok(self)
    }

    pub fn model(&self) -> &'a dyn Model {
        self.model
    }

    pub fn stepper(&self) -> Stepper {
        self.stepper
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        if u.len() != self.model.dim() {
            return Err(Error::LengthMismatch {
                expected: self.model.dim(),
                got: u.len(),
            });
        }
        let lu = self.model.apply_l(u);
        let parts: Vec<Vec<f64>> = self.model.parts().iter().map(|p| p.evaluate(u)).collect();
        let count = parts.len();
        let factors = match self.stepper {
            Stepper::Classical => vec![1.0; count],
            Stepper::Petviashvili | Stepper::EPetviashvili => {
                let num = linalg::dot(&lu, u);
                let den: f64 = parts.iter().map(|p| linalg::dot(p, u)).sum();
                if self.stepper == Stepper::Petviashvili {
                    vec![factor_from(num, den, self.exponents[0])?; count]
                } else {
                    self.exponents
                        .iter()
                        .map(|&g| factor_from(num, den, g))
                        .collect::<Result<_>>()?
                }
            }
        };
        Ok(Evaluation {
            lu,
            parts,
            factors,
            stepper: self.stepper,
        })
    }

    /// `L^{-1} sum_j s_j N_j(u)`, projected onto the admissible set.
    pub fn image(&self, eval: &Evaluation) -> Vec<f64> {
        let mut rhs = eval.stabilized_rhs();
        self.model.project(&mut rhs);
        let mut next = self.model.solve_l(&rhs);
        self.model.project(&mut next);
        next
    }

    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.image(&self.evaluate(u)?))
    }
}

/// One Petviashvili step with the default exponent `p / (p - 1)`.
pub fn petviashvili_step(model: &dyn Model, u: &[f64]) -> Result<Vec<f64>> {
    PetviashviliMap::new(model, Stepper::Petviashvili).step(u)
}

/// One e-Petviashvili step with the default per-part exponents.
pub fn e_petviashvili_step(model: &dyn Model, u: &[f64]) -> Result<Vec<f64>> {
    PetviashviliMap::new(model, Stepper::EPetviashvili).step(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// `||u_n - u_{n-1}||`.
    #[serde(alias = "diff")]
    ConsecutiveDifference,
    /// `||L u_n - N(u_n)||`.
    #[serde(alias = "res")]
    Residual,
    /// `max_j |s_j(u_n) - 1|`.
    #[serde(alias = "sfe")]
    StabilizingFactor,
}

/// The run stops once any enabled criterion falls below `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub criteria: Vec<Criterion>,
    /// Record wall-clock seconds in the trace; zero otherwise.
    pub timing: bool,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            tol: 1e-13,
            max_iters: 1000,
            criteria: vec![Criterion::Residual],
            timing: true,
        }
    }
}

impl StoppingConfig {
    pub fn residual(tol: f64, max_iters: usize) -> Self {
        StoppingConfig {
            tol,
            max_iters,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.criteria.is_empty() {
            return Err(Error::config("criteria", "at least one criterion is required"));
        }
        Ok(())
    }

    fn below(&self, value: f64) -> bool {
        self.tol == f64::INFINITY || value < self.tol
    }

    pub fn satisfied(&self, row: &TraceRow) -> bool {
        self.criteria.iter().any(|c| {
            self.below(match c {
                Criterion::ConsecutiveDifference => row.diff,
                Criterion::Residual => row.res,
                Criterion::StabilizingFactor => row.sfe,
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub res: f64,
    pub diff: f64,
    pub sfe: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    Diverged,
    NumericalBreakdown,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::Diverged => "diverged",
            Termination::NumericalBreakdown => "numerical_breakdown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    pub reason: Termination,
    pub state: Vec<f64>,
    /// Iteration counts at which an extrapolation cycle broke down and fell
    /// back to its last base iterate.
    pub breakdown_cycles: Vec<usize>,
    /// Set when Anderson Type I refused an ill-conditioned step.
    pub ill_conditioned: bool,
    /// Anderson columns dropped for conditioning.
    pub truncations: usize,
    pub message: Option<String>,
}

impl IterationTrace {
    /// Number of `L^{-1}` applications performed.
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iter)
    }

    pub fn final_res(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.res)
    }

    pub fn converged(&self) -> bool {
        self.reason == Termination::Converged
    }

    /// First iteration whose row satisfies `pred`.
    pub fn first_iter(&self, pred: impl Fn(&TraceRow) -> bool) -> Option<usize> {
        self.rows.iter().find(|r| pred(r)).map(|r| r.iter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Acceleration {
    #[default]
    None,
    Vem(VemConfig),
    Anderson(AndersonConfig),
}

struct Driver<'s> {
    stopping: &'s StoppingConfig,
    start: Instant,
    rows: Vec<TraceRow>,
    res0: f64,
    breakdown_cycles: Vec<usize>,
    ill_conditioned: bool,
    truncations: usize,
    message: Option<String>,
}

impl<'s> Driver<'s> {
    fn new(stopping: &'s StoppingConfig) -> Self {
        Driver {
            stopping,
            start: Instant::now(),
            rows: Vec::new(),
            res0: f64::NAN,
            breakdown_cycles: Vec::new(),
            ill_conditioned: false,
            truncations: 0,
            message: None,
        }
    }

    fn row(&self, iter: usize, eval: &Evaluation, diff: f64) -> TraceRow {
        TraceRow {
            iter,
            res: eval.residual_norm(),
            diff,
            sfe: eval.sfe(),
            seconds: if self.stopping.timing {
                self.start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        }
    }

    /// Record a row and decide whether the run ends there.
    fn commit(&mut self, row: TraceRow, state: &[f64]) -> Option<Termination> {
        if self.rows.is_empty() {
            self.res0 = row.res;
        }
        self.rows.push(row);
        if self.stopping.satisfied(&row) {
            return Some(Termination::Converged);
        }
        if !row.res.is_finite() || !linalg::all_finite(state) || row.res > 1e6 * self.res0 {
            return Some(Termination::Diverged);
        }
        if row.iter >= self.stopping.max_iters {
            return Some(Termination::MaxIters);
        }
        None
    }

    /// Classify a failed evaluation. A stabilizing factor that leaves its
    /// domain after the residual has grown past its initial value marks an
    /// iteration running away from the solution, so it counts as divergence.
    fn breakdown(&mut self, err: Error) -> Termination {
        if matches!(err, Error::IllConditioned(_)) {
            self.ill_conditioned = true;
        }
        let escaped = matches!(
            err,
            Error::NegativeBaseFractionalPower { .. } | Error::DegenerateDenominator(_)
        ) && self.rows.len() > 1
            && self.rows.last().is_some_and(|r| r.res > self.res0);
        self.message = Some(err.to_string());
        if escaped {
            Termination::Diverged
        } else {
            Termination::NumericalBreakdown
        }
    }

    fn finish(self, reason: Termination, state: Vec<f64>) -> IterationTrace {
        IterationTrace {
            rows: self.rows,
            reason,
            state,
            breakdown_cycles: self.breakdown_cycles,
            ill_conditioned: self.ill_conditioned,
            truncations: self.truncations,
            message: self.message,
        }
    }
}

/// Run the (optionally accelerated) iteration from `u0`.
///
/// Row `n` of the trace describes the state after `n` applications of
/// `L^{-1}`; an accepted extrapolant replaces the row of the last base step
/// of its cycle.
pub fn run(
    u0: &[f64],
    map: &PetviashviliMap,
    stopping: &StoppingConfig,
    accel: &Acceleration,
) -> Result<IterationTrace> {
    stopping.validate()?;
    let mut driver = Driver::new(stopping);
    let u = u0.to_vec();
    let eval = match map.evaluate(&u) {
        Ok(e) => e,
        Err(e @ Error::LengthMismatch { .. }) => return Err(e),
        Err(e) => {
            let reason = driver.breakdown(e);
            return Ok(driver.finish(reason, u));
        }
    };
    let row = driver.row(0, &eval, f64::NAN);
    if let Some(reason) = driver.commit(row, &u) {
        return Ok(driver.finish(reason, u));
    }
    match accel {
        Acceleration::None => Ok(run_plain(driver, map, u, eval)),
        Acceleration::Vem(cfg) => {
            cfg.validate()?;
            Ok(run_vem(driver, map, u, eval, cfg))
        }
        Acceleration::Anderson(cfg) => {
            let mixer = AndersonMixer::new(*cfg)?;
            Ok(run_anderson(driver, map, u, eval, mixer))
        }
    }
}

fn run_plain(mut driver: Driver, map: &PetviashviliMap, mut u: Vec<f64>, mut eval: Evaluation) -> IterationTrace {
    let mut n = 0;
    loop {
        n += 1;
        let next = map.image(&eval);
        eval = match map.evaluate(&next) {
            Ok(e) => e,
            Err(e) => {
                let reason = driver.breakdown(e);
                return driver.finish(reason, next);
            }
        };
        let row = driver.row(n, &eval, linalg::norm(&linalg::sub(&next, &u)));
        u = next;
        if let Some(reason) = driver.commit(row, &u) {
            return driver.finish(reason, u);
        }
    }
}

fn run_vem(
    mut driver: Driver,
    map: &PetviashviliMap,
    mut u: Vec<f64>,
    mut eval: Evaluation,
    cfg: &VemConfig,
) -> IterationTrace {
    let width = cfg.width();
    let basis = match cfg.method {
        extrap::VemMethod::Mmpe => extrap::mmpe_vectors(u.len(), cfg.kappa, cfg.seed),
        _ => Vec::new(),
    };
    let mut n = 0;
    loop {
        let mut window = vec![u.clone()];
        for inner in 1..=width {
            n += 1;
            let next = map.image(&eval);
            eval = match map.evaluate(&next) {
                Ok(e) => e,
                Err(e) => {
                    let reason = driver.breakdown(e);
                    return driver.finish(reason, next);
                }
            };
            let prev = window.last().expect("nonempty");
            let raw = driver.row(n, &eval, linalg::norm(&linalg::sub(&next, prev)));
            window.push(next);
            let last = window.last().expect("nonempty");
            if inner < width || driver.stopping.satisfied(&raw) || !linalg::all_finite(last) {
                if let Some(reason) = driver.commit(raw, last) {
                    return driver.finish(reason, window.pop().expect("nonempty"));
                }
                continue;
            }
            // End of cycle: replace the last base iterate by the extrapolant.
            let extrapolated = Window::new(window.clone())
                .and_then(|w| extrap::extrapolate(&w, cfg, &basis))
                .and_then(|t| {
                    if !linalg::all_finite(&t) {
                        return Err(Error::Breakdown("non-finite extrapolant".into()));
                    }
                    let mut t = t;
                    map.model().project(&mut t);
                    let ev = map.evaluate(&t)?;
                    Ok((t, ev))
                });
            match extrapolated {
                Ok((t, ev)) => {
                    let row = driver.row(n, &ev, linalg::norm(&linalg::sub(&t, &window[width - 1])));
                    eval = ev;
                    if let Some(reason) = driver.commit(row, &t) {
                        return driver.finish(reason, t);
                    }
                    u = t;
                }
                Err(_) => {
                    driver.breakdown_cycles.push(n);
                    let last = window.pop().expect("nonempty");
                    if let Some(reason) = driver.commit(raw, &last) {
                        return driver.finish(reason, last);
                    }
                    u = last;
                }
            }
        }
    }
}

fn run_anderson(
    mut driver: Driver,
    map: &PetviashviliMap,
    mut u: Vec<f64>,
    mut eval: Evaluation,
    mut mixer: AndersonMixer,
) -> IterationTrace {
    let mut n = 0;
    loop {
        n += 1;
        let image = map.image(&eval);
        mixer.push(u.clone(), image, eval.stabilized_residual());
        let mut next = match mixer.mix() {
            Ok(mix) => mix.state,
            Err(e) => {
                driver.truncations = mixer.truncations();
                let reason = driver.breakdown(e);
                return driver.finish(reason, u);
            }
        };
        driver.truncations = mixer.truncations();
        map.model().project(&mut next);
        eval = match map.evaluate(&next) {
            Ok(e) => e,
            Err(e) => {
                let reason = driver.breakdown(e);
                return driver.finish(reason, next);
            }
        };
        let row = driver.row(n, &eval, linalg::norm(&linalg::sub(&next, &u)));
        u = next;
        if let Some(reason) = driver.commit(row, &u) {
            return driver.finish(reason, u);
        }
    }
}
