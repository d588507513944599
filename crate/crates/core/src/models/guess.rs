//! Initial iterates and profile functionals.

use serde::{Deserialize, Serialize};

use super::{GridInfo, Model};
use crate::error::{Error, Result};
use crate::spectral::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessKind {
    /// `A sech^2((x - x0) / w)` (a tensor product in 2D).
    Sech2,
    /// `A exp(-((x - x0) / w)^2)` (a tensor product in 2D).
    Gaussian,
    /// Odd profile `A sech((x - x0) / w) tanh((x - x0) / w)` (a tensor
    /// product in 2D); seeds antisymmetric ground states.
    SechTanh,
    /// Closed-form KdV soliton of the Benjamin 1D model with `gamma = 0`.
    KdvSoliton,
    /// Closed-form KP-I lump of the Benjamin 2D model with `Gamma = 0`.
    KpLump,
}

impl GuessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GuessKind::Sech2 => "sech2",
            GuessKind::Gaussian => "gaussian",
            GuessKind::SechTanh => "sech_tanh",
            GuessKind::KdvSoliton => "kdv_soliton",
            GuessKind::KpLump => "kp_lump",
        }
    }
}

/// Shape parameters for the generic profiles; ignored by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuessSpec {
    pub kind: GuessKind,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Default for GuessSpec {
    fn default() -> Self {
        GuessSpec {
            kind: GuessKind::Sech2,
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }
}

impl GuessSpec {
    pub fn of(kind: GuessKind) -> Self {
        GuessSpec {
            kind,
            ..Default::default()
        }
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// `phi(x) = -3 (alpha - c_s) / beta * sech^2(sqrt((alpha - c_s) / (4 delta)) x)`.
pub fn kdv_soliton(alpha: f64, beta: f64, delta: f64, speed: f64, x: f64) -> f64 {
    let a = alpha - speed;
    -3.0 * a / beta * sech2((a / (4.0 * delta)).sqrt() * x)
}

/// `eta0(x, z) = 12 c (3 + c^2 z^2 - c x^2) / (3 + c x^2 + c^2 z^2)^2`.
pub fn kp_lump(speed: f64, x: f64, z: f64) -> f64 {
    let c = speed;
    let den = 3.0 + c * x * x + c * c * z * z;
    12.0 * c * (3.0 + c * c * z * z - c * x * x) / (den * den)
}

fn profile(spec: &GuessSpec, x: f64) -> f64 {
    let s = (x - spec.center) / spec.width;
    match spec.kind {
        GuessKind::Gaussian => spec.amplitude * (-s * s).exp(),
        GuessKind::SechTanh => spec.amplitude * s.tanh() / s.cosh(),
        _ => spec.amplitude * sech2(s),
    }
}

fn param(model: &dyn Model, kind: GuessKind, key: &str) -> Result<f64> {
    model.params().get(key).copied().ok_or_else(|| Error::IncompatibleKind {
        kind: kind.as_str().into(),
        reason: format!("model `{}` has no parameter `{key}`", model.name()),
    })
}

/// Initial iterate for `model`; multi-component models receive the profile
/// in every component.
pub fn initial_guess(spec: &GuessSpec, model: &dyn Model) -> Result<Vec<f64>> {
    let kind = spec.kind;
    let incompatible = |reason: &str| Error::IncompatibleKind {
        kind: kind.as_str().into(),
        reason: reason.into(),
    };
    if matches!(kind, GuessKind::Sech2 | GuessKind::Gaussian | GuessKind::SechTanh)
        && !(spec.width.is_finite() && spec.width > 0.0 && spec.amplitude.is_finite() && spec.amplitude != 0.0)
    {
        return Err(incompatible("amplitude must be nonzero and width positive"));
    }
    let single: Vec<f64> = match (kind, model.grid()) {
        (GuessKind::Sech2 | GuessKind::Gaussian | GuessKind::SechTanh, GridInfo::OneD(g)) => {
            g.nodes().iter().map(|&x| profile(spec, x)).collect()
        }
        (GuessKind::Sech2 | GuessKind::Gaussian | GuessKind::SechTanh, GridInfo::TwoD(g)) => {
            let unit = GuessSpec {
                amplitude: 1.0,
                ..*spec
            };
            let xs: Vec<f64> = g.x.nodes().iter().map(|&x| profile(&unit, x)).collect();
            let zs: Vec<f64> = g.z.nodes().iter().map(|&z| profile(&unit, z)).collect();
            xs.iter()
                .flat_map(|a| zs.iter().map(move |b| spec.amplitude * a * b))
                .collect()
        }
        (GuessKind::KdvSoliton, GridInfo::OneD(g)) => {
            if model.name() != "benjamin-1d" {
                return Err(incompatible("requires the Benjamin 1D model"));
            }
            let alpha = param(model, kind, "alpha")?;
            let beta = param(model, kind, "beta")?;
            let delta = param(model, kind, "delta")?;
            let speed = param(model, kind, "speed")?;
            g.nodes()
                .iter()
                .map(|&x| kdv_soliton(alpha, beta, delta, speed, x))
                .collect()
        }
        (GuessKind::KpLump, GridInfo::TwoD(g)) => {
            let speed = param(model, kind, "speed")?;
            let zs = g.z.nodes();
            g.x.nodes()
                .iter()
                .flat_map(|&x| zs.iter().map(move |&z| kp_lump(speed, x, z)))
                .collect()
        }
        (GuessKind::KdvSoliton, GridInfo::TwoD(_)) => {
            return Err(incompatible("one-dimensional profile on a two-dimensional grid"))
        }
        (GuessKind::KpLump, GridInfo::OneD(_)) => {
            return Err(incompatible("two-dimensional profile on a one-dimensional grid"))
        }
    };
    let mut state = Vec::with_capacity(model.dim());
    for _ in 0..model.components() {
        state.extend_from_slice(&single);
    }
    if state.len() != model.dim() {
        return Err(Error::LengthMismatch {
            expected: model.dim(),
            got: state.len(),
        });
    }
    Ok(state)
}

/// Discrete power `h * sum_j u_j^2` of a single-component profile.
pub fn power(u: &[f64], grid: &Grid1D) -> f64 {
    grid.spacing() * u.iter().map(|x| x * x).sum::<f64>()
}
