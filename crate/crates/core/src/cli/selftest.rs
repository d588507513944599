//! Fast invariant checks run by the `selftest` subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anderson::{AndersonConfig, AndersonMixer, AndersonVariant};
use crate::extrap::{self, VemMethod, Window};
use crate::iterate::{PetviashviliMap, Stepper};
use crate::linalg;
use crate::models::{
    benjamin_1d, benjamin_2d, boussinesq_solitary, gnls_ground_state, nls_ground_state, Benjamin1DParams,
    Benjamin2DParams, BoussinesqFamily, BoussinesqParams, Model, GNLS_NU_CRITICAL,
};
use crate::oracles::{self, DeterminantRule};
use crate::spectral::{hilbert, Fft1d, Grid1D, Grid2D, SpectralPlan};
use crate::spectrum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed discrepancy.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> Check {
    Check {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    linalg::norm(&linalg::sub(a, b)) / linalg::norm(b).max(1e-300)
}

fn small_models() -> Vec<Box<dyn Model>> {
    let g = Grid1D::new(16.0, 64).expect("valid grid");
    let mut out: Vec<Box<dyn Model>> = Vec::new();
    for fam in [
        BoussinesqFamily::Classical,
        BoussinesqFamily::KdvKdv,
        BoussinesqFamily::BbmBbm,
    ] {
        out.push(Box::new(
            boussinesq_solitary(&BoussinesqParams::family(fam, 1.3), g).expect("valid model"),
        ));
    }
    out.push(Box::new(nls_ground_state(1.3, g).expect("valid model")));
    out.push(Box::new(
        gnls_ground_state(3.281, GNLS_NU_CRITICAL, g).expect("valid model"),
    ));
    let p = Benjamin1DParams {
        alpha: 1.0,
        beta: 1.0,
        gamma: 0.9,
        delta: 1.0,
        speed: 0.75,
    };
    out.push(Box::new(benjamin_1d(&p, g).expect("valid model")));
    let g2 = Grid2D::square(8.0, 16).expect("valid grid");
    out.push(Box::new(
        benjamin_2d(
            &Benjamin2DParams {
                big_gamma: 0.5,
                speed: 1.0,
            },
            g2,
        )
        .expect("valid model"),
    ));
    out
}

fn homogeneity(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for model in small_models() {
        for part in model.parts() {
            let p = part.degree();
            let u = random(rng, model.dim());
            let nu = part.evaluate(&u);
            for lambda in [0.5, 2.0, -1.3] {
                let scaled = part.evaluate(&linalg::scale(&u, lambda));
                worst = worst.max(rel(&scaled, &linalg::scale(&nu, f64::powi(lambda, p))));
            }
            let euler = part.directional_derivative(&u, &u);
            worst = worst.max(rel(&euler, &linalg::scale(&nu, p as f64)));
        }
    }
    check("homogeneity and Euler identity", worst, 1e-11)
}

fn linear_sequence(a: &[f64], b: &[f64], x0: &[f64], count: usize) -> Window {
    let mut states = vec![x0.to_vec()];
    for _ in 1..count {
        let x = states.last().expect("nonempty");
        states.push(x.iter().zip(a).zip(b).map(|((x, a), b)| a * x + b).collect());
    }
    Window::new(states).expect("valid window")
}

fn vem_exactness(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for trial in 0..5 {
        let d = 2 + trial % 4;
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-0.9..0.9)).collect();
        let b = random(rng, d);
        let exact: Vec<f64> = a.iter().zip(&b).map(|(a, b)| b / (1.0 - a)).collect();
        let w = linear_sequence(&a, &b, &random(rng, d), 2 * d + 2);
        let basis = extrap::mmpe_vectors(d, d, trial as u64);
        for method in VemMethod::ALL {
            let mut cfg = extrap::VemConfig::new(method, d);
            cfg.breakdown_tol = 0.0;
            if let Ok(t) = extrap::extrapolate(&w, &cfg, &basis) {
                worst = worst.max(rel(&t, &exact));
            } else {
                worst = f64::INFINITY;
            }
        }
    }
    check("extrapolation exact on linear sequences", worst, 1e-8)
}

fn determinant_form(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for kappa in 1..=2 {
        for _ in 0..5 {
            let states: Vec<Vec<f64>> = (0..kappa + 2).map(|_| random(rng, 3)).collect();
            let w = Window::new(states.clone()).expect("valid window");
            let basis = extrap::mmpe_vectors(3, kappa, 7);
            let pairs = [
                (extrap::mpe(&w, kappa, 0.0), DeterminantRule::Mpe),
                (extrap::rre(&w, kappa, 0.0), DeterminantRule::Rre),
                (
                    extrap::mmpe(&w, kappa, &basis, 0.0),
                    DeterminantRule::Mmpe(basis.clone()),
                ),
            ];
            for (got, rule) in pairs {
                let oracle = oracles::determinant_extrapolation(&states, kappa, &rule);
                match (got, oracle) {
                    (Ok(a), Ok(b)) => worst = worst.max(rel(&a, &b)),
                    _ => worst = f64::INFINITY,
                }
            }
        }
    }
    check("determinant representation", worst, 1e-9)
}

fn gmres_equivalence(rng: &mut ChaCha8Rng) -> (Check, Check) {
    let mut worst: f64 = 0.0;
    let mut alpha_worst: f64 = 0.0;
    for _ in 0..10 {
        let d = 6;
        let mut g: Vec<Vec<f64>> = (0..d).map(|_| random(rng, d)).collect();
        let norm_f: f64 = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        g.iter_mut().flatten().for_each(|x| *x *= 0.8 / norm_f);
        let c = random(rng, d);
        let apply_g = |x: &[f64]| -> Vec<f64> { (0..d).map(|i| linalg::dot(&g[i], x) + c[i]).collect() };
        let x0 = random(rng, d);
        let ref_norms = oracles::reference_gmres(
            |v| {
                let gv: Vec<f64> = (0..d).map(|i| linalg::dot(&g[i], v)).collect();
                linalg::sub(v, &gv)
            },
            &c,
            &x0,
            d - 1,
        );
        let mut mixer = AndersonMixer::new(AndersonConfig {
            variant: AndersonVariant::AaII,
            window: d,
            rank_tol: 1e-15,
        })
        .expect("valid config");
        let mut x = x0.clone();
        for (k, r) in ref_norms.iter().enumerate() {
            let gx = apply_g(&x);
            let f = linalg::sub(&x, &gx);
            mixer.push(x.clone(), gx, f);
            let mix = mixer.mix().expect("well-conditioned");
            if k > 0 && *r > 1e-10 * ref_norms[0] {
                worst = worst.max((mix.lstsq_residual - r).abs() / r);
            }
            alpha_worst = alpha_worst.max((mix.alpha.iter().sum::<f64>() - 1.0).abs());
            x = mix.state;
        }
    }
    (
        check("Anderson Type II matches GMRES", worst, 1e-8),
        check("Anderson weights sum to one", alpha_worst, 1e-12),
    )
}

fn jacobian(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for model in small_models().into_iter().take(3) {
        for stepper in [Stepper::Petviashvili, Stepper::EPetviashvili] {
            let map = PetviashviliMap::new(model.as_ref(), stepper);
            let mut u = random(rng, model.dim());
            u.iter_mut().for_each(|x| *x += 1.0);
            let v = random(rng, model.dim());
            let Ok(op) = spectrum::petviashvili_map(&map, &u) else {
                continue;
            };
            let jv = op.apply(&v);
            let h = 1e-6;
            let (Ok(fp), Ok(fm)) = (
                map.step(&linalg::add(&u, &linalg::scale(&v, h))),
                map.step(&linalg::sub(&u, &linalg::scale(&v, h))),
            ) else {
                continue;
            };
            let fd = linalg::scale(&linalg::sub(&fp, &fm), 0.5 / h);
            worst = worst.max(rel(&jv, &fd));
        }
    }
    check("analytic Jacobian matches central differences", worst, 1e-6)
}

fn transforms(rng: &mut ChaCha8Rng) -> (Check, Check) {
    let mut worst: f64 = 0.0;
    let mut hilbert_worst: f64 = 0.0;
    for m in [8usize, 64, 256] {
        let plan = Fft1d::new(m);
        let u = random(rng, m);
        let c = plan.forward_real(&u);
        let back = plan.inverse_real(c.clone());
        worst = worst.max(rel(&back, &u));
        let e_phys = linalg::dot(&u, &u);
        let e_spec: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
        worst = worst.max((e_phys - e_spec).abs() / e_phys);

        let g = Grid1D::new(3.0, m).expect("valid grid");
        // Remove the modes the transform annihilates; then H H u = -u.
        let mut cz = c;
        cz[0] = 0.0.into();
        cz[m / 2] = 0.0.into();
        let w = plan.inverse_real(cz);
        let hh = hilbert(&hilbert(&w, &g).expect("valid"), &g).expect("valid");
        hilbert_worst = hilbert_worst.max(rel(&hh, &linalg::scale(&w, -1.0)));
    }
    (
        check("transform round trip and Parseval", worst, 1e-12),
        check("Hilbert transform applied twice", hilbert_worst, 1e-12),
    )
}

/// Run every invariant suite with a fixed seed.
pub fn selftest(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![
        homogeneity(&mut rng),
        vem_exactness(&mut rng),
        determinant_form(&mut rng),
    ];
    let (gm, alpha) = gmres_equivalence(&mut rng);
    checks.push(gm);
    checks.push(alpha);
    checks.push(jacobian(&mut rng));
    let (tr, hi) = transforms(&mut rng);
    checks.push(tr);
    checks.push(hi);
    checks
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::selftest(1) {
            assert!(c.passed, "{} failed: {:e} > {:e}", c.name, c.worst, c.tolerance);
        }
    }
}
