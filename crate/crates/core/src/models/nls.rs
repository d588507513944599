//! Real ground states of NLS-type equations with an external potential.
//!
//! The potential breaks Fourier diagonality, so `L` is assembled densely
//! (the spectral second derivative applied to canonical basis vectors, plus
//! the diagonal terms) and factored once at construction.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{GridInfo, HomogeneousPart, Model, PowerPart};
use crate::error::Result;
use crate::linalg::{dense_from_columns, DenseLu};
use crate::spectral::{apply_multiplier, derivative_symbol, Fft1d, Grid1D, Multiplier};

/// Critical coefficient of the septic term in the generalized model.
pub const GNLS_NU_CRITICAL: f64 = 0.01247946;

/// Dense-operator model `L U = sum_j N_j(U)` on a 1D grid.
pub struct Nls {
    name: String,
    grid: Grid1D,
    lu: DenseLu,
    parts: Vec<Box<dyn HomogeneousPart>>,
    params: BTreeMap<String, f64>,
}

impl std::fmt::Debug for Nls {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nls")
            .field("name", &self.name)
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("rcond", &self.lu.rcond())
            .finish()
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// `sign_d2 D^2 + diag(potential + shift)`, densely.
fn assemble(grid: &Grid1D, sign_d2: f64, diag: &[f64]) -> Result<DenseLu> {
    let m = grid.points();
    let plan = Fft1d::for_grid(grid);
    let d2: Vec<Complex64> = derivative_symbol(grid, 2).into_iter().map(|z| z * sign_d2).collect();
    let sigma = Multiplier::new(d2, &plan)?;
    let matrix = dense_from_columns(m, |j| {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let mut col = apply_multiplier(&plan, &e, &sigma).expect("even real symbol");
        col[j] += diag[j];
        col
    });
    DenseLu::new(matrix)
}

/// `U'' + 6 sech^2(x) U - mu U + U^3 = 0`, written as
/// `L = D^2 + diag(V) - mu I`, `N(U) = -U^3`.
pub fn nls_ground_state(mu: f64, grid: Grid1D) -> Result<Nls> {
    let diag: Vec<f64> = grid.nodes().iter().map(|&x| 6.0 * sech2(x) - mu).collect();
    let lu = assemble(&grid, 1.0, &diag)?;
    Ok(Nls {
        name: "nls".into(),
        grid,
        lu,
        parts: vec![Box::new(PowerPart { coef: -1.0, degree: 3 })],
        params: BTreeMap::from([
            ("mu".to_string(), mu),
            ("half_length".to_string(), grid.half_length()),
            ("points".to_string(), grid.points() as f64),
        ]),
    })
}

/// `-mu U + U'' - V U + U^3 - 0.2 U^5 + nu U^7 = 0` with the two-well
/// potential `V(x) = -3.5 sech^2(x + 1.5) - 3 sech^2(x - 1.5)`, written as
/// `L = mu I - D^2 + diag(V)` and three homogeneous parts of degrees 3, 5, 7.
pub fn gnls_ground_state(mu: f64, nu: f64, grid: Grid1D) -> Result<Nls> {
    let diag: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| mu - 3.5 * sech2(x + 1.5) - 3.0 * sech2(x - 1.5))
        .collect();
    let lu = assemble(&grid, -1.0, &diag)?;
    Ok(Nls {
        name: "gnls".into(),
        grid,
        lu,
        parts: vec![
            Box::new(PowerPart { coef: 1.0, degree: 3 }),
            Box::new(PowerPart { coef: -0.2, degree: 5 }),
            Box::new(PowerPart { coef: nu, degree: 7 }),
        ],
        params: BTreeMap::from([
            ("mu".to_string(), mu),
            ("nu".to_string(), nu),
            ("half_length".to_string(), grid.half_length()),
            ("points".to_string(), grid.points() as f64),
        ]),
    })
}

impl Nls {
    pub fn grid1d(&self) -> &Grid1D {
        &self.grid
    }

    pub fn rcond(&self) -> f64 {
        self.lu.rcond()
    }
}

impl Model for Nls {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.grid.points()
    }

    fn components(&self) -> usize {
        1
    }

    fn parts(&self) -> &[Box<dyn HomogeneousPart>] {
        &self.parts
    }

    fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        self.lu.matvec(u)
    }

    fn solve_l(&self, f: &[f64]) -> Vec<f64> {
        self.lu.solve(f)
    }

    fn grid(&self) -> GridInfo {
        GridInfo::OneD(self.grid)
    }

    fn params(&self) -> BTreeMap<String, f64> {
        self.params.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testing;

    fn grid() -> Grid1D {
        Grid1D::new(16.0, 128).unwrap()
    }

    #[test]
    fn cubic_scaling() {
        let model = nls_ground_state(1.3, grid()).unwrap();
        let u = testing::random_state(model.dim(), 1);
        let n1 = model.nonlinear(&u);
        let n2 = model.nonlinear(&crate::linalg::scale(&u, 2.0));
        for (a, b) in n1.iter().zip(&n2) {
            assert!((8.0 * a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn parts_and_inverse() {
        let nls = nls_ground_state(1.3, grid()).unwrap();
        assert_eq!(nls.parts().len(), 1);
        testing::check_parts(&nls, 1);
        testing::check_inverse(&nls, 2);
        let g = gnls_ground_state(3.281, GNLS_NU_CRITICAL, grid()).unwrap();
        assert_eq!(g.parts().iter().map(|p| p.degree()).collect::<Vec<_>>(), vec![3, 5, 7]);
        testing::check_parts(&g, 3);
        testing::check_inverse(&g, 4);
    }

    #[test]
    fn operator_matches_spectral_action() {
        // L applied to a smooth function equals u'' + V u - mu u.
        let g = Grid1D::new(10.0, 256).unwrap();
        let mu = 1.3;
        let model = nls_ground_state(mu, g).unwrap();
        let x = g.nodes();
        let u: Vec<f64> = x.iter().map(|v| (-v * v).exp()).collect();
        let lu = model.apply_l(&u);
        for (j, xv) in x.iter().enumerate() {
            let d2 = (4.0 * xv * xv - 2.0) * (-xv * xv).exp();
            let expect = d2 + 6.0 * sech2(*xv) * u[j] - mu * u[j];
            assert!((lu[j] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn plain_iteration_diverges_on_the_odd_branch_at_moderate_mu() {
        use crate::iterate::{run, Acceleration, PetviashviliMap, Stepper, StoppingConfig, Termination};
        use crate::models::{initial_guess, GuessKind, GuessSpec};

        let model = nls_ground_state(3.3, Grid1D::new(16.0, 256).unwrap()).unwrap();
        let map = PetviashviliMap::new(&model, Stepper::Petviashvili);
        let u0 = initial_guess(&GuessSpec::of(GuessKind::SechTanh), &model).unwrap();
        let stop = StoppingConfig {
            timing: false,
            ..StoppingConfig::residual(1e-12, 1000)
        };
        let t = run(&u0, &map, &stop, &Acceleration::None).unwrap();
        assert_eq!(t.reason, Termination::Diverged);
        assert!(t.final_res() > t.rows[0].res);
    }
}
