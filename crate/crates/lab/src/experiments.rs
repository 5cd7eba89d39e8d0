//! The registered experiments. Each returns its tables and certificates.

use anyhow::Context;

use sclwp::certificate::Certificate;
use sclwp::dual_pde::{
    feynman_kac, gronwall_certificate, heat_kernel_norm, lipschitz_on_grid, solve_dual_backward, w1inf_certificate, Cutoff,
    DatumNorms, DualPDEProblem, PotentialNorms,
};
use sclwp::flux::{divergence_sup, reference_gap_cell_average, reference_grid_function, reference_solutions, FluxField, ReferenceVariant};
use sclwp::kinetic::{chi_field, chi_field_cell_averaged, commutator_error, pair_gap_identity, xi_grid_covering};
use sclwp::quadrature::integrate;
use sclwp::solver_det::{
    check_apriori_bounds, default_delta, defect_measure, divergence_l1, kruzkov_entropy_residual, solve_viscous, ResidualQuadrature,
};
use sclwp::stochastic::{coupled_ensemble, selection_study, selection_table, stability_experiment, EnsembleConfig, Functional, Member, Pairing};
use sclwp::table::Table;
use sclwp::testfn::{Bump, SpaceTimeBump};
use sclwp::{Grid, GridFunction};

use crate::config::ExperimentConfig;

/// Tables (file name, contents) and certificates of one run.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub certificates: Vec<Certificate>,
}

impl Outcome {
    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }

    pub fn certificate(&self, title: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.title == title)
    }
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    let out = match cfg.experiment.as_str() {
        "nonuniqueness_demo" => nonuniqueness_demo(cfg),
        "stability_by_noise" => stability_by_noise(cfg),
        "gap_decay" => gap_decay(cfg),
        "selection_study" => selection(cfg),
        "commutator_convergence" => commutator_convergence(cfg),
        "dual_pde_check" => dual_pde_check(cfg),
        "apriori_bounds" => apriori_bounds(cfg),
        "heat_kernel_table" => heat_kernel_table(),
        other => anyhow::bail!("unknown experiment `{other}`"),
    };
    out.with_context(|| format!("experiment `{}` failed", cfg.experiment))
}

fn ensemble(cfg: &ExperimentConfig, grid: &Grid, functionals: Vec<Functional>) -> anyhow::Result<EnsembleConfig> {
    let mut ens = EnsembleConfig::new(
        cfg.noise.n_paths,
        cfg.noise.base_seed,
        cfg.noise.sigma,
        cfg.solver.build(grid.spacing())?,
        cfg.run.t_final,
    );
    ens.output_times = cfg.run.output_times();
    ens.noise_dt = cfg.noise.noise_dt;
    ens.xi_spacing = cfg.xi.spacing();
    ens.functionals = functionals;
    Ok(ens)
}

/// Space-time bumps inside `(0, T) × (−1, 4)` used for the entropy test.
pub fn entropy_bumps(t_max: f64) -> Vec<SpaceTimeBump> {
    let s = t_max / 2.0;
    [(1.0, 0.5, 0.0, 0.8), (1.0, 0.5, 2.2, 0.6), (0.6, 0.4, 0.5, 0.9), (1.4, 0.4, -0.3, 0.5), (1.2, 0.6, 3.2, 1.0)]
        .iter()
        .map(|(tc, tr, xc, xr)| SpaceTimeBump::new(tc * s, tr * s, *xc, *xr).expect("valid bump"))
        .collect()
}

fn nonuniqueness_demo(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.grid.build()?;
    let (k, t_max) = (cfg.flux.cap, cfg.run.t_final);
    let mut gap = Table::new(["t", "l1_gap_u1_u2", "exact"]);
    let mut worst = 0.0f64;
    for t in std::iter::once(0.0).chain(cfg.run.output_times()) {
        let g = reference_gap_cell_average(t, &grid, k, t_max)?;
        let exact = (0.5 * t).powi(2);
        worst = worst.max((g - exact).abs());
        gap.rows.push(vec![t.into(), g.into(), exact.into()]);
    }
    let mut snaps = Table::new(["t", "x", "u1", "u2"]);
    for t in [0.5, 1.0, 2.0].into_iter().filter(|t| *t <= t_max) {
        let u1 = reference_grid_function(ReferenceVariant::U1, t, &grid, k, t_max)?;
        let u2 = reference_grid_function(ReferenceVariant::U2, t, &grid, k, t_max)?;
        for i in 0..grid.len() {
            snaps.rows.push(vec![t.into(), grid.center(i).into(), u1.values[i].into(), u2.values[i].into()]);
        }
    }
    let b = cfg.flux.raw()?;
    let quad = ResidualQuadrature { t_final: t_max, x_lo: -3.0, x_hi: 6.0, nt: 300, nx: 600 };
    let mut entropy = Table::new(["variant", "k", "t_center", "x_center", "residual"]);
    let mut min_res = f64::INFINITY;
    for (name, v) in [("u1", ReferenceVariant::U1), ("u2", ReferenceVariant::U2)] {
        let u = move |t: f64, x: f64| reference_solutions(v, t, x, k, t_max).unwrap_or(0.0);
        for level in [0.0, 0.5, 1.0] {
            for phi in entropy_bumps(t_max) {
                let r = kruzkov_entropy_residual(&u, &b, level, &phi, &quad)?;
                min_res = min_res.min(r);
                entropy.rows.push(vec![name.into(), level.into(), phi.time.center.into(), phi.space.center.into(), r.into()]);
            }
        }
    }
    let mut c = Certificate::new("nonuniqueness");
    c.at_most("l1_gap_error", worst, 1e-10).at_least("entropy_residual_min", min_res, -1e-3);
    let mut out = Outcome::default();
    out.table("l1_gap.csv", gap);
    out.table("snapshots.csv", snaps);
    out.table("entropy_residuals.csv", entropy);
    out.certificates.push(c);
    Ok(out)
}

fn stability_by_noise(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.grid.build()?;
    let t_final = cfg.run.t_final;
    let u0 = cfg.initial.sample(grid)?;
    let ens = ensemble(cfg, &grid, vec![Functional::L1GapVsPartner])?;
    let eps = &cfg.params.eps_list;
    let report = stability_experiment(&cfg.flux.raw()?, &u0, &u0, cfg.noise.sigma, eps, Pairing::HalvedScale, &ens)?;
    let sigma = cfg.noise.sigma;
    let row = |e: f64, s: f64| report.find(e, s, t_final).context("missing stability row");
    let mut c = Certificate::new("stability");
    for w in eps.windows(2) {
        let (a, b) = (row(w[0], sigma)?, row(w[1], sigma)?);
        let slack = 2.0 * a.stderr.hypot(b.stderr);
        c.at_most(&format!("monotone_{}_{}", w[0], w[1]), b.gap - a.gap, slack);
    }
    let last = *eps.last().context("empty eps_list")?;
    let (noisy, control) = (row(last, sigma)?, row(last, 0.0)?);
    c.at_least("control_over_noise", control.gap / noisy.gap, 10.0)
        .record("noise_final_gap", noisy.gap)
        .record("control_final_gap", control.gap);

    // distinct data: gap(t)/gap(0) against the L¹ budget of each solution
    let b = cfg.flux.build()?;
    let mut bounded = Table::new(["n_cells", "t", "gap_mean", "gap_stderr", "ratio"]);
    let mut bound = f64::NAN;
    let mut worst = 0.0f64;
    let mut ensembles = Vec::new();
    for &n in &cfg.params.refinements {
        let g = cfg.grid.with_cells(n)?;
        let (v1, v2) = (cfg.initial.sample(g)?, cfg.partner.sample(g)?);
        let gap0 = v1.l1_distance(&v2);
        if !(gap0 > 0.0) {
            anyhow::bail!("boundedness check needs distinct initial data");
        }
        let sup = v1.linf_norm().max(v2.linf_norm());
        if bound.is_nan() {
            bound = (v1.l1_norm() + v2.l1_norm() + 2.0 * t_final * divergence_l1(&b, &g, sup)) / gap0;
        }
        let ens = ensemble(cfg, &g, vec![Functional::L1GapVsPartner])?;
        let stats = coupled_ensemble(&[Member { flux: &b, u0: &v1 }, Member { flux: &b, u0: &v2 }], &ens)?;
        let mut local = 0.0f64;
        for (k, t) in stats.times.iter().enumerate() {
            let (m, se) = (stats.mean[k][0], stats.stderr[k][0]);
            local = local.max(m / gap0);
            bounded.rows.push(vec![n.into(), (*t).into(), m.into(), se.into(), (m / gap0).into()]);
        }
        c.record(&format!("max_ratio_{n}"), local);
        ensembles.push((format!("boundedness_ensemble_{n}.csv"), stats.to_table()));
        worst = worst.max(local);
    }
    if !cfg.params.refinements.is_empty() {
        c.at_most("bounded_ratio", worst, bound);
    }
    let mut out = Outcome::default();
    out.table("stability.csv", report.to_table());
    out.table("boundedness.csv", bounded);
    out.tables.extend(ensembles);
    out.certificates.push(c);
    Ok(out)
}

fn gap_decay(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let b = cfg.flux.build()?;
    let mut table = Table::new(["n_cells", "t", "gap_mean", "gap_stderr", "ratio", "l1_gap_mean"]);
    let mut c = Certificate::new("gap_decay");
    let mut consts = Vec::new();
    let mut ensembles = Vec::new();
    for &n in &cfg.params.refinements {
        let g = cfg.grid.with_cells(n)?;
        let (v1, v2) = (cfg.initial.sample(g)?, cfg.partner.sample(g)?);
        let xi = xi_grid_covering(v1.linf_norm().max(v2.linf_norm()).max(cfg.xi.spacing()), cfg.xi.spacing())?;
        let (_, g0) = pair_gap_identity(&chi_field(&v1, &xi)?, &chi_field(&v2, &xi)?)?;
        let ens = ensemble(cfg, &g, vec![Functional::KineticGapTotal, Functional::L1GapVsPartner])?;
        let stats = coupled_ensemble(&[Member { flux: &b, u0: &v1 }, Member { flux: &b, u0: &v2 }], &ens)?;
        let mut cmax = 0.0f64;
        for (k, t) in stats.times.iter().enumerate() {
            let (m, se) = stats.get("kinetic_gap_total", k)?;
            let (l1, _) = stats.get("l1_gap_vs_partner", k)?;
            cmax = cmax.max(m / g0);
            table.rows.push(vec![n.into(), (*t).into(), m.into(), se.into(), (m / g0).into(), l1.into()]);
        }
        let (start, _) = stats.get("kinetic_gap_total", 0)?;
        c.at_most(&format!("initial_gap_error_{n}"), (start - g0).abs(), 1e-12)
            .record(&format!("initial_gap_{n}"), g0)
            .record(&format!("c_meas_{n}"), cmax);
        consts.push((n, cmax));
        ensembles.push((format!("ensemble_{n}.csv"), stats.to_table()));
    }
    if let Some(&(_, finest)) = consts.last() {
        c.at_most("c_meas_finite", finest, f64::MAX);
        for &(n, v) in &consts[..consts.len() - 1] {
            c.at_most(&format!("c_meas_drift_{n}"), (v / finest - 1.0).abs(), 0.2);
        }
    }
    let mut out = Outcome::default();
    out.table("gap_decay.csv", table);
    out.tables.extend(ensembles);
    out.certificates.push(c);
    Ok(out)
}

fn selection(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.grid.build()?;
    let b = cfg.flux.build()?;
    let u0 = cfg.initial.sample(grid)?;
    let (cap, t) = (cfg.flux.cap, cfg.run.t_final);
    let ens = ensemble(cfg, &grid, vec![Functional::L1Norm])?;
    let rows = selection_study(&b, &u0, &cfg.params.sigma_list, cap, &ens)?;
    let det = solve_viscous(&b, &u0, &ens.solver, t, &[])?;
    let u1 = reference_grid_function(ReferenceVariant::U1, t, &grid, cap, t)?;
    let u2 = reference_grid_function(ReferenceVariant::U2, t, &grid, cap, t)?;
    let mut c = Certificate::new("selection");
    for r in &rows {
        c.record(&format!("dist_u1_sigma_{}", r.sigma), r.dist_to_u1)
            .record(&format!("dist_u2_sigma_{}", r.sigma), r.dist_to_u2);
    }
    c.record("dist_u1_sigma_0", det.last().l1_distance(&u1))
        .record("dist_u2_sigma_0", det.last().l1_distance(&u2));
    let mut table = selection_table(&rows);
    table.rows.push(vec![0.0.into(), det.last().l1_distance(&u1).into(), det.last().l1_distance(&u2).into(), 0.0.into()]);
    let mut out = Outcome::default();
    out.table("selection.csv", table);
    out.certificates.push(c);
    Ok(out)
}

fn commutator_convergence(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.grid.build()?;
    let xi = xi_grid_covering(cfg.xi.r, cfg.xi.spacing())?;
    let f = chi_field_cell_averaged(&cfg.initial.sample(grid)?, &xi)?;
    let b = cfg.flux.build()?;
    let phi = Bump::new(0.5 * (grid.lo() + grid.hi()), 0.3 * (grid.hi() - grid.lo()))?;
    let (eps, delta) = (&cfg.params.eps_list, &cfg.params.delta_list);
    let (e0, d_last) = (*eps.first().context("empty eps_list")?, *delta.last().context("empty delta_list")?);
    let mut table = Table::new(["sweep", "eps", "delta", "error"]);
    let mut along_delta = Vec::new();
    for &d in delta {
        let e = commutator_error(&b, &f, e0, d, &phi)?;
        table.rows.push(vec!["delta".into(), e0.into(), d.into(), e.into()]);
        along_delta.push(e.abs());
    }
    let mut along_eps = Vec::new();
    for &e in eps {
        let v = commutator_error(&b, &f, e, d_last, &phi)?;
        table.rows.push(vec!["eps".into(), e.into(), d_last.into(), v.into()]);
        along_eps.push(v.abs());
    }
    let constant = commutator_error(&FluxField::constant(0.4), &f, e0, delta[0], &phi)?;
    table.rows.push(vec!["constant".into(), e0.into(), delta[0].into(), constant.into()]);
    let rise = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut c = Certificate::new("commutator");
    c.at_most("delta_sweep_max_increase", rise(&along_delta), 0.0)
        .at_most("eps_sweep_max_increase", rise(&along_eps), 0.0)
        .at_most("final_over_initial", along_eps.last().copied().unwrap_or(f64::NAN) / along_delta[0], 0.1)
        .at_most("constant_field_error", constant.abs(), 1e-14);
    if along_eps.len() > 1 {
        let (a, z) = (along_eps[0], *along_eps.last().expect("nonempty"));
        c.record("eps_log_slope", (a / z).ln() / (eps[0] / eps[eps.len() - 1]).ln());
    }
    let mut out = Outcome::default();
    out.table("commutator.csv", table);
    out.certificates.push(c);
    Ok(out)
}

/// Heat-kernel norms with scaling and closed-form checks.
pub fn heat_kernel_checks() -> anyhow::Result<(Table, Certificate)> {
    let tau = std::f64::consts::TAU;
    let mut table = Table::new(["t", "m", "d", "gradient", "norm", "ratio_4t", "expected_ratio"]);
    let mut scaling = 0.0f64;
    for d in 1..=3usize {
        for m in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
            for grad in [false, true] {
                let df = d as f64;
                let expo = if grad { -(1.0 + df - df / m) / 2.0 } else { -(df - df / m) / 2.0 };
                for t in [0.25, 1.0, 4.0] {
                    let n = heat_kernel_norm(t, m, d, grad)?;
                    let ratio = heat_kernel_norm(4.0 * t, m, d, grad)? / n;
                    let expected = 4f64.powf(expo);
                    scaling = scaling.max((ratio / expected - 1.0).abs());
                    table.rows.push(vec![t.into(), m.into(), d.into(), (grad as usize).into(), n.into(), ratio.into(), expected.into()]);
                }
            }
        }
    }
    let mut closed = 0.0f64;
    for t in [0.25, 1.0, 4.0] {
        closed = closed
            .max((heat_kernel_norm(t, 1.0, 1, false)? - 1.0).abs())
            .max((heat_kernel_norm(t, f64::INFINITY, 1, false)? - (tau * t).powf(-0.5)).abs())
            .max((heat_kernel_norm(t, 2.0, 1, false)? - (2.0 * tau * t).powf(-0.25)).abs());
    }
    let t = 0.7f64;
    let p = |x: f64| (tau * t).powf(-0.5) * (-x * x / (2.0 * t)).exp();
    let l = 12.0 * t.sqrt();
    let quad = |f: &dyn Fn(f64) -> f64| {
        (0..400)
            .map(|k| {
                let a = -l + 2.0 * l * k as f64 / 400.0;
                integrate(a, a + 2.0 * l / 400.0, f)
            })
            .sum::<f64>()
    };
    let mut quad_err = 0.0f64;
    for m in [1.5, 2.0, 3.0] {
        let v = quad(&|x| p(x).powf(m)).powf(1.0 / m);
        let g = quad(&|x| (p(x) * x / t).abs().powf(m)).powf(1.0 / m);
        quad_err = quad_err
            .max((v - heat_kernel_norm(t, m, 1, false)?).abs())
            .max((g - heat_kernel_norm(t, m, 1, true)?).abs());
    }
    let mut c = Certificate::new("heat_kernel");
    c.at_most("closed_form_error", closed, 1e-10)
        .at_most("quadrature_error", quad_err, 1e-10)
        .at_most("scaling_error", scaling, 1e-12);
    Ok((table, c))
}

fn heat_kernel_table() -> anyhow::Result<Outcome> {
    let (t, c) = heat_kernel_checks()?;
    let mut out = Outcome::default();
    out.table("heat_kernel.csv", t);
    out.certificates.push(c);
    Ok(out)
}

fn dual_pde_check(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let mut out = Outcome::default();
    let (hk, hc) = heat_kernel_checks()?;
    out.table("heat_kernel.csv", hk);
    out.certificates.push(hc);

    let grid = cfg.grid.build()?;
    let b = cfg.flux.build()?;
    let r = cfg.xi.r;
    let div = divergence_sup(&b, r, &grid)?;
    let f = div.values.clone();
    let cut = Cutoff::new(cfg.params.cutoff_radius, cfg.params.cutoff_width)?;
    let psi = cut.on(grid);
    let t_fin = cfg.run.t_final;
    let prob = DualPDEProblem::new(f.clone(), GridFunction::zeros(grid), psi.clone(), t_fin, t_fin)?;
    let phi = solve_dual_backward(&prob, cfg.solver.cfl)?;

    let mut cross = Table::new(["x", "fd", "fk", "fk_stderr", "z"]);
    let mut zmax = 0.0f64;
    for &x in &cfg.params.probes {
        let i = grid.coordinate(x).round().clamp(0.0, (grid.len() - 1) as f64) as usize;
        let xc = grid.center(i);
        let (est, se) = feynman_kac(
            |y| f.sample(y),
            |_| 0.0,
            |y| cut.value(y),
            t_fin,
            xc,
            cfg.params.fk_samples,
            cfg.noise.base_seed,
            cfg.params.fk_steps,
        )?;
        let fd = phi.initial().values[i];
        let z = (est - fd).abs() / se;
        zmax = zmax.max(z);
        cross.rows.push(vec![xc.into(), fd.into(), est.into(), se.into(), z.into()]);
    }
    let mut fk = Certificate::new("feynman_kac");
    fk.at_most("max_z", zmax, 3.0).record("samples", cfg.params.fk_samples as f64);
    out.certificates.push(fk);

    let norms = PotentialNorms { g_lp: div.lp_norm, p: b.p_exponent(), h_inf: 0.0 };
    let datum = DatumNorms { sup: psi.linf_norm(), lipschitz: lipschitz_on_grid(&psi) };
    out.certificates.push(w1inf_certificate(&phi, norms, datum)?);
    let mut g = gronwall_certificate(&phi, &b, r, None)?;
    g.record("dx", grid.spacing());
    out.certificates.push(g);

    let mut init = Table::new(["x", "potential", "psi", "phi0"]);
    for i in 0..grid.len() {
        init.rows.push(vec![grid.center(i).into(), f.values[i].into(), psi.values[i].into(), phi.initial().values[i].into()]);
    }
    out.table("crossval.csv", cross);
    out.table("dual_initial.csv", init);
    Ok(out)
}

fn apriori_bounds(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let grid = cfg.grid.build()?;
    let solver = cfg.solver.build(grid.spacing())?;
    let b = cfg.flux.build()?;
    let u0 = cfg.initial.sample(grid)?;
    let traj = solve_viscous(&b, &u0, &solver, cfg.run.t_final, &cfg.run.output_times())?;
    let xi = cfg.xi.build()?;
    let m = defect_measure(&traj, &solver, &xi, default_delta(&xi))?;
    let p = cfg.params.exponent;
    let mut cert = check_apriori_bounds(&traj, &m, &b, p)?;
    cert.record("viscosity", solver.viscosity).record("dx", grid.spacing());
    let mass = m.mass_at_t();
    let mut table = Table::new(["t", "linf", "lp_pow", "defect_mass"]);
    for (k, s) in traj.snapshots.iter().enumerate() {
        table.rows.push(vec![traj.times[k].into(), s.linf_norm().into(), s.lp_norm_pow(p).into(), mass[k].into()]);
    }
    let mut out = Outcome::default();
    out.table("apriori.csv", table);
    out.table("defect_mass.csv", m.to_table());
    out.certificates.push(cert);
    Ok(out)
}
