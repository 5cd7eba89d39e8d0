use sclwp::flux::{mollify_flux, model_flux, reference_solutions, FluxField, ReferenceVariant};
use sclwp::mollifier::MollifierSpec;
use sclwp::solver_det::*;
use sclwp::testfn::SpaceTimeBump;
use sclwp::{Grid, GridFunction};

fn indicator(grid: Grid) -> GridFunction {
    GridFunction::from_fn(grid, |x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 })
}

fn mollified_model(eps: f64) -> FluxField {
    mollify_flux(&model_flux(3.0).unwrap(), MollifierSpec::new(eps, eps).unwrap()).unwrap()
}

#[test]
fn model_right_edge_follows_characteristic() {
    let grid = Grid::new(-1.5, 3.5, 1024).unwrap();
    let cfg = SolverConfig::new(1e-3, 0.9, Boundary::CompactSupportPad).unwrap();
    let traj = solve_viscous(&mollified_model(0.05), &indicator(grid), &cfg, 1.0, &[]).unwrap();
    let last = traj.last();
    let edge = (0..grid.len()).rev().find(|&i| last.values[i] >= 0.5).unwrap();
    let x = grid.center(edge);
    assert!((x - 2.25).abs() <= 3.0 * grid.spacing(), "edge at {x}");
}

#[test]
fn heat_flow_dirichlet_energy_matches_closed_form() {
    let (s, eps, t_final) = (0.3f64, 0.01, 1.0);
    let grid = Grid::new(-4.0, 4.0, 800).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (-x * x / (2.0 * s * s)).exp());
    let cfg = SolverConfig::new(eps, 0.9, Boundary::CompactSupportPad).unwrap();
    let outputs: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let traj = solve_viscous(&FluxField::constant(0.0), &u0, &cfg, t_final, &outputs).unwrap();
    let xi = Grid::symmetric(1.0, 64).unwrap();
    let m = defect_measure(&traj, &cfg, &xi, default_delta(&xi)).unwrap();
    // v(t) is Gaussian with variance s² + 2εt; ∫|∂x v|² = s²√π / (2σ³)
    let sigma = |t: f64| (s * s + 2.0 * eps * t).sqrt();
    let exact = 0.5 * s * s * std::f64::consts::PI.sqrt() * (1.0 / s - 1.0 / sigma(t_final));
    let rel = (m.total_mass - exact).abs() / exact;
    assert!(rel < 0.02, "mass {} vs {exact}", m.total_mass);
    for k in [0usize, 50, 99] {
        let t = traj.times[k];
        let slice = m.mass_at_t()[k];
        let want = eps * s * s * std::f64::consts::PI.sqrt() / (2.0 * sigma(t).powi(3));
        assert!((slice - want).abs() / want < 0.02, "t = {t}: {slice} vs {want}");
    }
}

#[test]
fn defect_density_is_nonnegative_and_resolves_columns() {
    let grid = Grid::new(-6.0, 6.0, 400).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| 0.8 * (-x * x).exp());
    let cfg = SolverConfig::new(0.02, 0.9, Boundary::CompactSupportPad).unwrap();
    let traj = solve_viscous(&FluxField::burgers_like(1.0), &u0, &cfg, 0.5, &[0.25]).unwrap();
    let xi = Grid::symmetric(1.0, 40).unwrap();
    let m = defect_measure(&traj, &cfg, &xi, default_delta(&xi)).unwrap();
    let dxi = xi.spacing();
    for k in 0..traj.times.len() {
        for i in (1..grid.len() - 1).step_by(7) {
            let col: f64 = (0..xi.len()).map(|j| m.density(k, i, j)).inspect(|d| assert!(*d >= 0.0)).sum::<f64>() * dxi;
            let v = &traj.snapshots[k].values;
            let d = (v[i + 1] - v[i - 1]) / (2.0 * grid.spacing());
            assert!((col - 0.02 * d * d).abs() <= 1e-12 * (1.0 + col), "column {k},{i}");
        }
    }
}

#[test]
fn burgers_defect_concentrates_at_the_shock() {
    // Shock of 1_{[0,1]} under ∂t u + u ∂x u = 0 sits at 1 + t/2 until t = 2
    let grid = Grid::new(-1.0, 3.0, 4000).unwrap();
    let eps = 5e-4;
    let cfg = SolverConfig::new(eps, 0.9, Boundary::CompactSupportPad).unwrap();
    let outputs = [0.5, 0.625, 0.75, 0.875];
    let traj = solve_viscous(&FluxField::burgers_like(1.0), &indicator(grid), &cfg, 1.0, &outputs).unwrap();
    let dx = grid.spacing();
    for (k, snap) in traj.snapshots.iter().enumerate().skip(1) {
        let shock = 1.0 + 0.5 * traj.times[k];
        let mut near = 0.0;
        let mut total = 0.0;
        for i in 1..grid.len() - 1 {
            let d = (snap.values[i + 1] - snap.values[i - 1]) / (2.0 * dx);
            let e = eps * d * d * dx;
            total += e;
            if (grid.center(i) - shock).abs() <= 5.0 * dx {
                near += e;
            }
        }
        assert!(near >= 0.9 * total, "t = {}: {near} of {total}", traj.times[k]);
    }
}

#[test]
fn apriori_bounds_hold_for_the_model_example() {
    let grid = Grid::new(-1.5, 3.5, 1024).unwrap();
    let cfg = SolverConfig::new(1e-3, 0.9, Boundary::CompactSupportPad).unwrap();
    let b = mollified_model(0.05);
    let outputs: Vec<f64> = (1..40).map(|k| k as f64 / 40.0).collect();
    let traj = solve_viscous(&b, &indicator(grid), &cfg, 1.0, &outputs).unwrap();
    let xi = Grid::symmetric(1.0, 64).unwrap();
    let m = defect_measure(&traj, &cfg, &xi, default_delta(&xi)).unwrap();
    let cert = check_apriori_bounds(&traj, &m, &b, 2.0).unwrap();
    assert!(cert.passed(), "{}", cert.to_kv());
}

#[test]
fn zero_divergence_budget_is_energy_balance() {
    let grid = Grid::new(-3.0, 3.0, 300).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (-4.0 * x * x).exp());
    let cfg = SolverConfig::new(0.02, 0.9, Boundary::CompactSupportPad).unwrap();
    let outputs: Vec<f64> = (1..50).map(|k| k as f64 / 50.0).collect();
    let b = FluxField::burgers_like(1.0);
    let traj = solve_viscous(&b, &u0, &cfg, 1.0, &outputs).unwrap();
    let xi = Grid::symmetric(1.0, 64).unwrap();
    let m = defect_measure(&traj, &cfg, &xi, default_delta(&xi)).unwrap();
    let cert = check_apriori_bounds(&traj, &m, &b, 2.0).unwrap();
    assert_eq!(cert.value("div_b_l1_rate"), Some(0.0));
    assert!(cert.passed(), "{}", cert.to_kv());
}

#[test]
fn max_principle_holds_pathwise() {
    let grid = Grid::new(-10.0, 10.0, 720).unwrap();
    let u0 = GridFunction::from_fn(grid, |x| (3.0 * x).sin() * (-x * x).exp());
    let cfg = SolverConfig::new(0.01, 0.9, Boundary::CompactSupportPad).unwrap();
    let b = FluxField::affine(0.3, 1.0, 0.0).with_window(-10.0, 10.0).unwrap();
    let outputs: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let traj = solve_viscous(&b, &u0, &cfg, 1.0, &outputs).unwrap();
    let sup0 = u0.linf_norm();
    for s in &traj.snapshots {
        assert!(s.linf_norm() <= sup0 * (1.0 + 1e-12));
    }
}

fn model_u1(t: f64, x: f64) -> f64 {
    reference_solutions(ReferenceVariant::U1, t, x, 3.0, 2.0).unwrap()
}

fn model_u2(t: f64, x: f64) -> f64 {
    reference_solutions(ReferenceVariant::U2, t, x, 3.0, 2.0).unwrap()
}

#[test]
fn closed_form_solutions_pass_the_entropy_test() {
    let b = model_flux(3.0).unwrap();
    let quad = ResidualQuadrature { t_final: 2.0, x_lo: -3.0, x_hi: 6.0, nt: 400, nx: 800 };
    let bumps = [(1.0, 0.5, 0.0, 0.8), (1.0, 0.5, 2.2, 0.6), (0.6, 0.4, 0.5, 0.9), (1.4, 0.4, -0.3, 0.5), (1.2, 0.6, 3.2, 1.0)];
    for k in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for (tc, tr, xc, xr) in bumps {
            let phi = SpaceTimeBump::new(tc, tr, xc, xr).unwrap();
            for u in [model_u1 as fn(f64, f64) -> f64, model_u2] {
                let r = kruzkov_entropy_residual(&u, &b, k, &phi, &quad).unwrap();
                assert!(r >= -1e-3, "k = {k}, bump {tc},{xc}: {r}");
            }
        }
    }
}

#[test]
fn expansion_shock_violates_the_entropy_test() {
    let b = FluxField::burgers_like(1.0);
    let u = |_t: f64, x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    let phi = SpaceTimeBump::new(0.5, 0.3, 0.0, 0.5).unwrap();
    let quad = ResidualQuadrature { t_final: 1.0, x_lo: -1.0, x_hi: 1.0, nt: 200, nx: 200 };
    let r = kruzkov_entropy_residual(&u, &b, 0.0, &phi, &quad).unwrap();
    // = −∫φ(t, 0) dt = −0.3·256/315
    assert!((r + 0.3 * 256.0 / 315.0).abs() < 1e-3, "{r}");
    assert!(r < -0.1);
}

#[test]
fn refinement_differences_shrink() {
    // 0 and 1 sit on cell faces for every grid in the sequence
    let b = mollified_model(0.05);
    let norms: Vec<f64> = [160usize, 320, 640, 1280]
        .iter()
        .map(|&n| {
            let grid = Grid::new(-4.0, 6.0, n).unwrap();
            let cfg = SolverConfig::grid_coupled(grid.spacing());
            solve_viscous(&b, &indicator(grid), &cfg, 1.0, &[]).unwrap().last().l1_norm()
        })
        .collect();
    let diffs: Vec<f64> = norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
    let order = (diffs[0] / diffs[2]).log2() / 2.0;
    assert!(order > 0.25, "observed order {order}, {diffs:?}");
}

#[test]
fn reruns_are_bit_identical() {
    let grid = Grid::new(-1.5, 3.5, 256).unwrap();
    let cfg = SolverConfig::grid_coupled(grid.spacing());
    let b = mollified_model(0.1);
    let a = solve_viscous(&b, &indicator(grid), &cfg, 1.0, &[0.5]).unwrap();
    let c = solve_viscous(&b, &indicator(grid), &cfg, 1.0, &[0.5]).unwrap();
    assert_eq!(a.to_table().to_csv_string(), c.to_table().to_csv_string());
}
