use proptest::prelude::*;
use sclwp::dual_pde::*;
use sclwp::flux::{divergence_sup, model_flux, mollify_flux, FluxField};
use sclwp::mollifier::MollifierSpec;
use sclwp::{Grid, GridFunction};
use statrs::function::erf::erf;

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn problem(f: GridFunction, psi: GridFunction, t_fin: f64) -> DualPDEProblem {
    let h = GridFunction::zeros(f.grid);
    DualPDEProblem::new(f, h, psi, t_fin, t_fin).unwrap()
}

fn model_setup(eps: f64, n: usize) -> (FluxField, GridFunction, GridFunction) {
    let grid = Grid::symmetric(10.0, n).unwrap();
    let b = mollify_flux(&model_flux(3.0).unwrap(), MollifierSpec::new(eps, eps).unwrap()).unwrap();
    let f = divergence_sup(&b, 1.0, &grid).unwrap().values;
    let psi = Cutoff::new(2.0, 1.0).unwrap().on(grid);
    (b, f, psi)
}

#[test]
fn constants_are_preserved() {
    let grid = Grid::symmetric(4.0, 128).unwrap();
    let one = GridFunction::from_fn(grid, |_| 1.0);
    let phi = solve_dual_backward(&problem(GridFunction::zeros(grid), one, 0.5), 0.9).unwrap();
    for s in &phi.values {
        assert!(s.values.iter().all(|v| *v == 1.0));
    }
    let norms = PotentialNorms { g_lp: 0.0, p: 1.5, h_inf: 0.0 };
    let cert = w1inf_certificate(&phi, norms, DatumNorms { sup: 1.0, lipschitz: 0.0 }).unwrap();
    assert!(cert.passed());
    assert_eq!(cert.value("phi_w1inf"), Some(1.0));
    let g = gronwall_certificate(&phi, &FluxField::constant(0.0), 1.0, Some(0.0)).unwrap();
    assert!(g.passed());
    assert_eq!(g.value("lhs_sup"), Some(0.0));
}

#[test]
fn constant_potential_separates() {
    let (c, s2, t_fin) = (0.8, 0.25, 0.5);
    for n in [256, 512] {
        let grid = Grid::symmetric(6.0, n).unwrap();
        let psi = GridFunction::from_fn(grid, |x| (-x * x / (2.0 * s2)).exp());
        let f = GridFunction::from_fn(grid, |_| c);
        let phi = solve_dual_backward(&problem(f, psi, t_fin), 0.9).unwrap();
        let mut err = 0.0f64;
        for (t, s) in phi.times.iter().zip(&phi.values) {
            let tau = t_fin - t;
            let amp = (c * tau).exp() * (s2 / (s2 + tau)).sqrt();
            for (i, v) in s.values.iter().enumerate() {
                let x = grid.center(i);
                err = err.max((v - amp * (-x * x / (2.0 * (s2 + tau))).exp()).abs());
            }
        }
        let dx = grid.spacing();
        assert!(err < 2.0 * dx * dx, "n = {n}: err {err}");
    }
}

#[test]
fn constant_potential_sup_and_bound() {
    let (c, t_fin) = (0.8f64, 0.5);
    let grid = Grid::symmetric(4.0, 256).unwrap();
    let one = GridFunction::from_fn(grid, |_| 1.0);
    let f = GridFunction::from_fn(grid, |_| c);
    let phi = solve_dual_backward(&problem(f.clone(), one, t_fin), 0.9).unwrap();
    let sup = phi.values.iter().map(|s| s.linf_norm()).fold(0.0, f64::max);
    let discrete = (1.0 + c * phi.dt).powi(phi.steps as i32);
    assert!((sup / discrete - 1.0).abs() < 1e-12);
    assert!((sup / (c * t_fin).exp() - 1.0).abs() < c * c * t_fin * phi.dt);
    let norms = PotentialNorms { g_lp: f.lp_norm_pow(1.5).powf(1.0 / 1.5), p: 1.5, h_inf: 0.0 };
    let (m_inf, _) = w1inf_bound(norms, DatumNorms { sup: 1.0, lipschitz: 0.0 }, t_fin).unwrap();
    assert!(m_inf >= (c * t_fin).exp());
    assert!(w1inf_certificate(&phi, norms, DatumNorms { sup: 1.0, lipschitz: 0.0 }).unwrap().passed());
}

#[test]
fn duhamel_form_reproduces_the_solution() {
    let grid = Grid::symmetric(6.0, 384).unwrap();
    let dx = grid.spacing();
    let f = GridFunction::from_fn(grid, |x| 1.5 * (-x * x).exp());
    let psi = Cutoff::new(1.0, 1.0).unwrap().on(grid);
    let t_fin = 0.4;
    let phi = solve_dual_backward(&problem(f.clone(), psi.clone(), t_fin), 0.9).unwrap();
    // cell-averaged kernel with variance tau
    let conv = |u: &[f64], tau: f64| -> Vec<f64> {
        let n = u.len();
        let w: Vec<f64> = (0..n)
            .map(|j| {
                if tau == 0.0 {
                    return if j == 0 { 1.0 } else { 0.0 };
                }
                let a = (j as f64 - 0.5) * dx / tau.sqrt();
                let b = (j as f64 + 0.5) * dx / tau.sqrt();
                if j == 0 { 2.0 * normal_cdf(b) - 1.0 } else { normal_cdf(b) - normal_cdf(a) }
            })
            .collect();
        (0..n)
            .map(|i| (0..n).map(|k| w[i.abs_diff(k)] * u[k]).sum())
            .collect()
    };
    let k = phi.times.len() - 1;
    // reversed time r = t_fin − t runs over the stored slices
    let mut rhs = conv(&psi.values, t_fin);
    for j in 0..=k {
        let r = t_fin - phi.times[k - j];
        let weight = if j == 0 || j == k { 0.5 } else { 1.0 } * (t_fin / k as f64);
        let src: Vec<f64> = phi.values[k - j].values.iter().zip(&f.values).map(|(a, b)| a * b).collect();
        for (acc, v) in rhs.iter_mut().zip(conv(&src, t_fin - r)) {
            *acc += weight * v;
        }
    }
    let err = phi.initial().values.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "Duhamel mismatch {err}");
}

#[test]
fn feynman_kac_without_potential_is_the_heat_semigroup() {
    let (t, s2) = (0.7, 0.3);
    let data = |y: f64| (-y * y / (2.0 * s2)).exp();
    for x in [-1.0, 0.0, 0.6] {
        let (est, se) = feynman_kac(|_| 0.0, |_| 0.0, data, t, x, 20_000, 3, 50).unwrap();
        let exact = (s2 / (s2 + t)).sqrt() * (-x * x / (2.0 * (s2 + t))).exp();
        assert!((est - exact).abs() < 3.0 * se, "x = {x}: {est} vs {exact} ± {se}");
    }
}

#[test]
fn constant_potential_factorizes() {
    let data = |y: f64| 1.0 / (1.0 + y * y);
    let (a, _) = feynman_kac(|_| 0.0, |_| 0.0, data, 0.5, 0.2, 2000, 11, 64).unwrap();
    let (b, _) = feynman_kac(|_| 1.3, |_| 0.0, data, 0.5, 0.2, 2000, 11, 64).unwrap();
    assert!((b / (1.3f64 * 0.5).exp() / a - 1.0).abs() < 1e-12);
}

#[test]
fn feynman_kac_is_seed_deterministic_with_root_n_error() {
    let g = |y: f64| (-y * y).exp();
    let data = |y: f64| (-y.abs()).exp();
    let a = feynman_kac(g, |_| 0.0, data, 0.5, 0.0, 4000, 5, 40).unwrap();
    let b = feynman_kac(g, |_| 0.0, data, 0.5, 0.0, 4000, 5, 40).unwrap();
    assert_eq!(a, b);
    let mut ratio = 0.0;
    for rep in 0..5 {
        let (_, s1) = feynman_kac(g, |_| 0.0, data, 0.5, 0.0, 1000, 100 + rep, 40).unwrap();
        let (_, s4) = feynman_kac(g, |_| 0.0, data, 0.5, 0.0, 4000, 200 + rep, 40).unwrap();
        ratio += s4 / s1 / 5.0;
    }
    assert!((0.4..=0.6).contains(&ratio), "stderr ratio {ratio}");
}

#[test]
fn backward_solution_matches_feynman_kac_for_the_model() {
    let (_, f, psi) = model_setup(0.1, 5121);
    let t_fin = 0.5;
    let phi = solve_dual_backward(&problem(f.clone(), psi, t_fin), 0.9).unwrap();
    let grid = f.grid;
    let cut = Cutoff::new(2.0, 1.0).unwrap();
    for x in [-2.0, -1.0, 0.0, 1.0, 2.5] {
        let i = grid.coordinate(x).round() as usize;
        let xc = grid.center(i);
        let (est, se) = feynman_kac(|y| f.sample(y), |_| 0.0, |y| cut.value(y), t_fin, xc, 100_000, 2024, 1000).unwrap();
        let fd = phi.initial().values[i];
        assert!((est - fd).abs() < 3.0 * se, "x = {xc}: FK {est} ± {se}, FD {fd}");
    }
}

#[test]
fn w1inf_bound_holds_and_is_uniform_in_the_scale() {
    let mut measured = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let (b, f, psi) = model_setup(eps, 2561);
        let grid = f.grid;
        let lp = divergence_sup(&b, 1.0, &grid).unwrap().lp_norm;
        let phi = solve_dual_backward(&problem(f, psi.clone(), 0.5), 0.9).unwrap();
        let datum = DatumNorms { sup: psi.linf_norm(), lipschitz: lipschitz_on_grid(&psi) };
        let cert = w1inf_certificate(&phi, PotentialNorms { g_lp: lp, p: 1.5, h_inf: 0.0 }, datum).unwrap();
        assert!(cert.passed(), "eps = {eps}: {:?}", cert.to_kv());
        measured.push(phi.w1inf_sup());
    }
    let hi = measured.iter().copied().fold(0.0, f64::max);
    let lo = measured.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(hi <= 1.05 * lo, "{measured:?}");
}

#[test]
fn gronwall_inequality_for_the_model() {
    let (b, f, psi) = model_setup(0.1, 5121);
    assert!(f.grid.spacing() <= 1.0 / 256.0);
    let phi = solve_dual_backward(&problem(f, psi, 0.5), 0.9).unwrap();
    let cert = gronwall_certificate(&phi, &b, 1.0, None).unwrap();
    assert!(cert.passed(), "{:?}", cert.to_kv());
}

#[test]
fn heat_equation_has_zero_gronwall_residual() {
    let grid = Grid::symmetric(6.0, 256).unwrap();
    let psi = Cutoff::new(1.0, 1.0).unwrap().on(grid);
    let phi = solve_dual_backward(&problem(GridFunction::zeros(grid), psi, 0.3), 0.9).unwrap();
    let cert = gronwall_certificate(&phi, &FluxField::constant(0.0), 1.0, Some(0.0)).unwrap();
    assert!(cert.value("lhs_sup").unwrap().abs() < 1e-9);
}

#[test]
fn rejects_invalid_problems() {
    let grid = Grid::symmetric(1.0, 16).unwrap();
    let neg = GridFunction::from_fn(grid, |_| -1.0);
    let psi = GridFunction::zeros(grid);
    assert!(DualPDEProblem::new(neg, GridFunction::zeros(grid), psi.clone(), 0.5, 1.0).is_err());
    assert!(DualPDEProblem::new(GridFunction::zeros(grid), GridFunction::zeros(grid), psi.clone(), 1.0, 0.5).is_err());
    assert!(feynman_kac(|_| 0.0, |_| 0.0, |_| 1.0, 0.5, 0.0, 50, 1, 10).is_err());
    assert!(heat_kernel_norm(-1.0, 2.0, 1, true).is_err());
}

proptest! {
    #[test]
    fn heat_kernel_scaling(t in 0.01f64..10.0, m in 1.0f64..8.0, d in 1usize..4, grad: bool) {
        let ratio = heat_kernel_norm(4.0 * t, m, d, grad).unwrap() / heat_kernel_norm(t, m, d, grad).unwrap();
        let df = d as f64;
        let expo = if grad { -(1.0 + df - df / m) / 2.0 } else { -(df - df / m) / 2.0 };
        prop_assert!((ratio / 4f64.powf(expo) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_solve_stays_nonnegative(
        amp in 0.0f64..5.0, width in 0.1f64..2.0, r in 0.0f64..2.0, w in 0.2f64..1.5, t in 0.05f64..0.5,
    ) {
        let grid = Grid::symmetric(5.0, 96).unwrap();
        let f = GridFunction::from_fn(grid, |x| amp * (-x * x / width).exp());
        let psi = Cutoff::new(r, w).unwrap().on(grid);
        let phi = solve_dual_backward(&problem(f, psi, t), 0.9).unwrap();
        let min = phi.values.iter().flat_map(|s| s.values.iter()).copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-12);
    }
}
