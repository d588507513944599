//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 0
//!
//! [model]
//! kind = "boussinesq"          # see `ModelConfig`
//! family = "classical"
//! speed = 1.3
//!
//! [grid]
//! half_length = 64.0
//! points = 1024
//!
//! [guess]
//! kind = "sech2"
//!
//! [solver]
//! stepper = "petviashvili"
//!
//! [accel]
//! kind = "vem"
//! method = "mpe"
//! kappa = 9
//!
//! [stopping]
//! tol = 1e-13
//! max_iters = 1000
//! criteria = ["residual"]
//!
//! [sweep]
//! methods = ["mpe", "rre"]
//! kappa = [1, 2, 3]
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anderson::{AndersonConfig, AndersonVariant};
use crate::error::{Error, Result};
use crate::extrap::{VemConfig, VemMethod};
use crate::iterate::{Acceleration, Stepper, StoppingConfig};
use crate::models::{
    benjamin_1d, benjamin_2d, boussinesq_constants, boussinesq_periodic, boussinesq_solitary, gnls_ground_state,
    nls_ground_state, Benjamin1DParams, Benjamin2DParams, BoussinesqFamily, BoussinesqParams, GuessSpec, Model,
    PeriodicShift, GNLS_NU_CRITICAL,
};
use crate::spectral::{Grid1D, Grid2D};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "TRAVELWAVE_OUTPUT_DIR";

fn default_nu() -> f64 {
    GNLS_NU_CRITICAL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Solitary waves of the Boussinesq family.
    Boussinesq { family: BoussinesqFamily, speed: f64 },
    /// Periodic waves of the Boussinesq family about a constant state for
    /// integration constants `k1`, `k2`: the one with index `root`
    /// (ascending `C2`), or the one with the smallest `|C2|` by default.
    BoussinesqPeriodic {
        family: BoussinesqFamily,
        speed: f64,
        k1: f64,
        k2: f64,
        #[serde(default)]
        root: Option<usize>,
    },
    /// Cubic NLS ground states in the `6 sech^2` potential.
    Nls { mu: f64 },
    /// Cubic-quintic-septic NLS ground states in the two-well potential.
    Gnls {
        mu: f64,
        #[serde(default = "default_nu")]
        nu: f64,
    },
    #[serde(rename = "benjamin_1d")]
    Benjamin1d {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        speed: f64,
    },
    #[serde(rename = "benjamin_2d")]
    Benjamin2d { big_gamma: f64, speed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_length: f64,
    pub points: usize,
    /// Second dimension of 2D models; defaults to the first.
    #[serde(default)]
    pub half_length_z: Option<f64>,
    #[serde(default)]
    pub points_z: Option<usize>,
}

impl GridConfig {
    pub fn grid1d(&self) -> Result<Grid1D> {
        if self.half_length_z.is_some() || self.points_z.is_some() {
            return Err(Error::config("grid", "z dimensions given for a one-dimensional model"));
        }
        Grid1D::new(self.half_length, self.points)
    }

    pub fn grid2d(&self) -> Result<Grid2D> {
        Grid2D::new(
            self.half_length,
            self.points,
            self.half_length_z.unwrap_or(self.half_length),
            self.points_z.unwrap_or(self.points),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub stepper: Stepper,
    /// Stabilizing exponents; defaults to `p_j / (p_j - 1)`.
    pub exponents: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AccelConfig {
    #[default]
    None,
    Vem {
        method: VemMethod,
        kappa: usize,
        #[serde(default)]
        breakdown_tol: Option<f64>,
    },
    Anderson {
        variant: AndersonVariant,
        window: usize,
        #[serde(default)]
        rank_tol: Option<f64>,
    },
}

impl AccelConfig {
    pub fn to_acceleration(&self, seed: u64) -> Acceleration {
        match *self {
            AccelConfig::None => Acceleration::None,
            AccelConfig::Vem {
                method,
                kappa,
                breakdown_tol,
            } => {
                let mut cfg = VemConfig::new(method, kappa);
                cfg.seed = seed;
                if let Some(t) = breakdown_tol {
                    cfg.breakdown_tol = t;
                }
                Acceleration::Vem(cfg)
            }
            AccelConfig::Anderson {
                variant,
                window,
                rank_tol,
            } => {
                let mut cfg = AndersonConfig::new(variant, window);
                if let Some(t) = rank_tol {
                    cfg.rank_tol = t;
                }
                Acceleration::Anderson(cfg)
            }
        }
    }

    /// `(method, width)` labels of the summary.
    pub fn label(&self) -> (String, usize) {
        match self {
            AccelConfig::None => ("none".into(), 0),
            AccelConfig::Vem { method, kappa, .. } => (method.as_str().into(), *kappa),
            AccelConfig::Anderson { variant, window, .. } => (variant.as_str().into(), *window),
        }
    }
}

/// Cells of a sweep: every extrapolation method against every `kappa`,
/// and every Anderson variant against every window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub methods: Vec<VemMethod>,
    pub kappa: Vec<usize>,
    pub variants: Vec<AndersonVariant>,
    pub windows: Vec<usize>,
    /// Also run the unaccelerated iteration as a reference row.
    pub include_plain: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() && self.variants.is_empty() && !self.include_plain {
            return Err(Error::config("sweep", "no methods, variants or plain run selected"));
        }
        if !self.methods.is_empty() && self.kappa.is_empty() {
            return Err(Error::config("sweep.kappa", "must be nonempty when methods are given"));
        }
        if !self.variants.is_empty() && self.windows.is_empty() {
            return Err(Error::config(
                "sweep.windows",
                "must be nonempty when variants are given",
            ));
        }
        if self.kappa.contains(&0) || self.windows.contains(&0) {
            return Err(Error::config("sweep", "widths must be positive"));
        }
        Ok(())
    }

    /// All accelerator cells, ordered by method then width.
    pub fn cells(&self) -> Vec<AccelConfig> {
        let mut cells = Vec::new();
        if self.include_plain {
            cells.push(AccelConfig::None);
        }
        for &method in &self.methods {
            let mut ks = self.kappa.clone();
            ks.sort_unstable();
            ks.dedup();
            cells.extend(ks.into_iter().map(|kappa| AccelConfig::Vem {
                method,
                kappa,
                breakdown_tol: None,
            }));
        }
        for &variant in &self.variants {
            let mut ws = self.windows.clone();
            ws.sort_unstable();
            ws.dedup();
            cells.extend(ws.into_iter().map(|window| AccelConfig::Anderson {
                variant,
                window,
                rank_tol: None,
            }));
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// File-name prefix of every emitted file.
    pub prefix: String,
    pub profile: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            prefix: String::new(),
            profile: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Number of leading eigenvalues per operator.
    pub count: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig { count: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub guess: GuessSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub accel: AccelConfig,
    #[serde(default)]
    pub stopping: StoppingConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Stable identifier of everything that determines a trace.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        c.stopping.timing = false;
        crate::oracles::fingerprint(&serde_json::to_string(&c).expect("configuration serializes"))
    }

    pub fn validate(&self) -> Result<()> {
        positive("grid.half_length", self.grid.half_length)?;
        if let Some(l) = self.grid.half_length_z {
            positive("grid.half_length_z", l)?;
        }
        match &self.model {
            ModelConfig::Boussinesq { speed, .. } => finite("model.speed", *speed)?,
            ModelConfig::BoussinesqPeriodic { speed, k1, k2, .. } => {
                finite("model.speed", *speed)?;
                finite("model.k1", *k1)?;
                finite("model.k2", *k2)?;
            }
            ModelConfig::Nls { mu } => finite("model.mu", *mu)?,
            ModelConfig::Gnls { mu, nu } => {
                finite("model.mu", *mu)?;
                finite("model.nu", *nu)?;
            }
            ModelConfig::Benjamin1d {
                alpha,
                beta,
                gamma,
                delta,
                speed,
            } => {
                for (f, v) in [
                    ("model.alpha", alpha),
                    ("model.beta", beta),
                    ("model.gamma", gamma),
                    ("model.delta", delta),
                    ("model.speed", speed),
                ] {
                    finite(f, *v)?;
                }
            }
            ModelConfig::Benjamin2d { big_gamma, speed } => {
                finite("model.big_gamma", *big_gamma)?;
                positive("model.speed", *speed)?;
            }
        }
        if self.stopping.tol.is_nan() || self.stopping.tol <= 0.0 {
            return Err(Error::config("stopping.tol", "must be positive"));
        }
        if self.stopping.criteria.is_empty() {
            return Err(Error::config("stopping.criteria", "must be nonempty"));
        }
        if let Some(e) = &self.solver.exponents {
            for g in e {
                finite("solver.exponents", *g)?;
            }
        }
        match self.accel {
            AccelConfig::None => {}
            AccelConfig::Vem {
                kappa, breakdown_tol, ..
            } => {
                if kappa == 0 {
                    return Err(Error::config("accel.kappa", "must be positive"));
                }
                if let Some(t) = breakdown_tol {
                    if !(t.is_finite() && t >= 0.0) {
                        return Err(Error::config("accel.breakdown_tol", "must be finite and non-negative"));
                    }
                }
            }
            AccelConfig::Anderson { window, rank_tol, .. } => {
                if window == 0 {
                    return Err(Error::config("accel.window", "must be positive"));
                }
                if let Some(t) = rank_tol {
                    if !(t > 0.0 && t < 1.0) {
                        return Err(Error::config("accel.rank_tol", "must lie in (0, 1)"));
                    }
                }
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if self.diagnose.count == 0 {
            return Err(Error::config("diagnose.count", "must be positive"));
        }
        Ok(())
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> Option<PathBuf> {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output.dir.clone())
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelConfig::Boussinesq { .. } => "boussinesq",
            ModelConfig::BoussinesqPeriodic { .. } => "boussinesq_periodic",
            ModelConfig::Nls { .. } => "nls",
            ModelConfig::Gnls { .. } => "gnls",
            ModelConfig::Benjamin1d { .. } => "benjamin_1d",
            ModelConfig::Benjamin2d { .. } => "benjamin_2d",
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn Model>> {
        Ok(match self.model {
            ModelConfig::Boussinesq { family, speed } => Box::new(boussinesq_solitary(
                &BoussinesqParams::family(family, speed),
                self.grid.grid1d()?,
            )?),
            ModelConfig::BoussinesqPeriodic {
                family,
                speed,
                k1,
                k2,
                root,
            } => {
                let roots = boussinesq_constants(k1, k2, speed);
                let chosen = match root {
                    Some(i) => roots.get(i),
                    None => roots.iter().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())),
                };
                let &(c1, c2) = chosen.ok_or_else(|| {
                    Error::config("model.root", format!("only {} real constant states exist", roots.len()))
                })?;
                Box::new(boussinesq_periodic(
                    &BoussinesqParams::family(family, speed),
                    PeriodicShift { k1, k2, c1, c2 },
                    self.grid.grid1d()?,
                )?)
            }
            ModelConfig::Nls { mu } => Box::new(nls_ground_state(mu, self.grid.grid1d()?)?),
            ModelConfig::Gnls { mu, nu } => Box::new(gnls_ground_state(mu, nu, self.grid.grid1d()?)?),
            ModelConfig::Benjamin1d {
                alpha,
                beta,
                gamma,
                delta,
                speed,
            } => Box::new(benjamin_1d(
                &Benjamin1DParams {
                    alpha,
                    beta,
                    gamma,
                    delta,
                    speed,
                },
                self.grid.grid1d()?,
            )?),
            ModelConfig::Benjamin2d { big_gamma, speed } => Box::new(benjamin_2d(
                &Benjamin2DParams { big_gamma, speed },
                self.grid.grid2d()?,
            )?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        [model]
        kind = "boussinesq"
        family = "classical"
        speed = 1.3

        [grid]
        half_length = 64.0
        points = 1024

        [accel]
        kind = "vem"
        method = "mpe"
        kappa = 9
    "#;

    #[test]
    fn parses_basic_config() {
        let cfg = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.stopping.tol, 1e-13);
        assert_eq!(cfg.solver.stepper, Stepper::EPetviashvili);
        assert_eq!(cfg.accel.label(), ("mpe".to_string(), 9));
        assert_eq!(cfg.model_name(), "boussinesq");
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_fields() {
        let text = BASIC.replace("speed = 1.3", "speed = 1.3\nspeeed = 2.0");
        assert!(ExperimentConfig::from_toml(&text).is_err());
        let text = format!("{BASIC}\n[stopping]\ntoll = 1.0\n");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn field_level_messages() {
        let text = BASIC.replace("half_length = 64.0", "half_length = -1.0");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.half_length"),
            other => panic!("unexpected {other:?}"),
        }
        let text = BASIC.replace("kappa = 9", "kappa = 0");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn sweep_cells_are_ordered() {
        let s = SweepConfig {
            methods: vec![VemMethod::Rre],
            kappa: vec![3, 1, 2, 2],
            variants: vec![AndersonVariant::AaII],
            windows: vec![4],
            include_plain: true,
        };
        let labels: Vec<_> = s.cells().iter().map(|c| c.label()).collect();
        assert_eq!(
            labels,
            vec![
                ("none".to_string(), 0),
                ("rre".to_string(), 1),
                ("rre".to_string(), 2),
                ("rre".to_string(), 3),
                ("aa2".to_string(), 4)
            ]
        );
        assert!(SweepConfig::default().validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_output() {
        let a = ExperimentConfig::from_toml(BASIC).unwrap();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed = 3;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
