//! Brownian paths, the flow transformation `ũ(t, x) = u(t, x + W_t)` and
//! Monte Carlo ensembles over independent paths.
//!
//! Path `i` of an ensemble draws its increments from the counter-based
//! generator keyed by `base_seed + i`, and aggregation always runs in path
//! order, so every statistic is independent of the thread schedule.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::flux::{mollify_flux, reference_grid_function, FluxField, ReferenceVariant};
use crate::grid::{Grid, GridFunction};
use crate::kinetic::{chi_field, gap_report, xi_grid_covering};
use crate::mollifier::MollifierSpec;
use crate::rng::CounterRng;
use crate::solver_det::{solve_viscous, Boundary, SolverConfig, TimeDependentFlux, Trajectory, PAD_CELLS, SUPPORT_THRESHOLD};
use crate::table::Table;

/// Paths solved concurrently before their results are folded in.
const CHUNK: usize = 256;

/// `W` on the lattice `t_k = k·dt`, `k = 0..=N`, scaled by `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub t_final: f64,
    pub dt: f64,
    pub sigma: f64,
    pub seed: u64,
    values: Vec<f64>,
}

impl BrownianPath {
    /// The zero path.
    pub fn zero(t_final: f64) -> Self {
        BrownianPath { t_final, dt: t_final, sigma: 0.0, seed: 0, values: vec![0.0, 0.0] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Piecewise-linear `W(t)`, constant beyond the horizon.
    pub fn at(&self, t: f64) -> f64 {
        let s = (t / self.dt).max(0.0);
        let n = self.values.len() - 1;
        if s >= n as f64 {
            return self.values[n];
        }
        let k = s.floor() as usize;
        let w = s - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Brownian path with `N = ⌈T/Δt⌉` increments of variance `σ²T/N`.
pub fn sample_brownian(t_final: f64, dt: f64, sigma: f64, seed: u64) -> Result<BrownianPath> {
    if !(dt > 0.0) || !(t_final >= dt) || !t_final.is_finite() {
        return invalid(format!("need 0 < Δt ≤ T, got Δt = {dt}, T = {t_final}"));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return invalid(format!("noise amplitude must be nonnegative, got {sigma}"));
    }
    let n = ((t_final / dt) * (1.0 - 1e-12)).ceil() as usize;
    let h = t_final / n as f64;
    let rng = CounterRng::new(seed, 0);
    let scale = sigma * h.sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut w = 0.0;
    values.push(w);
    for k in 0..n {
        w += scale * rng.normal(k as u64);
        values.push(w);
    }
    Ok(BrownianPath { t_final, dt: h, sigma, seed, values })
}

/// `g(t, x, ξ) = b(x + W_t, ξ)`.
pub struct TransformedFlux<'a> {
    pub b: &'a FluxField,
    pub path: &'a BrownianPath,
}

impl TimeDependentFlux for TransformedFlux<'_> {
    fn eval(&self, t: f64, x: f64, xi: f64) -> f64 {
        self.b.eval(x + self.path.at(t), xi)
    }
    fn primitive(&self, t: f64, x: f64, w: f64) -> f64 {
        self.b.primitive(x + self.path.at(t), w)
    }
    fn sup_bound(&self) -> f64 {
        self.b.linf_bound()
    }
}

/// Solves the transformed equation `∂t ṽ + b(x + W_t, ṽ)∂x ṽ = εΔṽ` and
/// returns `u(t, x) = ṽ(t, x − W_t)` at `0`, each output time and `T`.
pub fn transformed_solve_per_path(
    b: &FluxField,
    u0: &GridFunction,
    path: &BrownianPath,
    cfg: &SolverConfig,
    t_final: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    if t_final > path.t_final * (1.0 + 1e-12) {
        return invalid(format!("path ends at {} before the horizon {t_final}", path.t_final));
    }
    let g = TransformedFlux { b, path };
    let mut traj = solve_viscous(&g, u0, cfg, t_final, output_times)?;
    let n = u0.grid.len();
    let dx = u0.grid.spacing();
    let threshold = SUPPORT_THRESHOLD * u0.linf_norm().max(f64::MIN_POSITIVE);
    for (t, snap) in traj.times.iter().zip(traj.snapshots.iter_mut()) {
        let w = path.at(*t);
        if w == 0.0 {
            continue;
        }
        if cfg.boundary == Boundary::CompactSupportPad {
            if let Some((lo, hi)) = snap.support(threshold) {
                let shift = w / dx;
                if (lo as f64 + shift.floor()) < PAD_CELLS as f64 {
                    return Err(Error::DomainTooSmall { t: *t, side: "left", cells: PAD_CELLS });
                }
                if (hi as f64 + shift.ceil()) > (n - 1 - PAD_CELLS) as f64 {
                    return Err(Error::DomainTooSmall { t: *t, side: "right", cells: PAD_CELLS });
                }
            }
        }
        *snap = snap.shifted(w);
    }
    Ok(traj)
}

/// Scalar summaries evaluated on each path at each output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    L1Norm,
    LinfNorm,
    Mass,
    /// `∫|u¹ − u²| dx` against the coupled partner solution.
    L1GapVsPartner,
    /// `∫|u − u^ref| dx` against a closed-form model solution with cap `cap`.
    L1GapVsReference { variant: ReferenceVariant, cap: f64 },
    /// `∫∫(|f| − f²) dx dξ` for `f = ½(χ(u¹) + χ(u²))`.
    KineticGapTotal,
}

impl Functional {
    pub fn name(&self) -> String {
        match self {
            Functional::L1Norm => "l1_norm".into(),
            Functional::LinfNorm => "linf_norm".into(),
            Functional::Mass => "mass".into(),
            Functional::L1GapVsPartner => "l1_gap_vs_partner".into(),
            Functional::L1GapVsReference { variant: ReferenceVariant::U1, .. } => "l1_gap_vs_u1".into(),
            Functional::L1GapVsReference { variant: ReferenceVariant::U2, .. } => "l1_gap_vs_u2".into(),
            Functional::KineticGapTotal => "kinetic_gap_total".into(),
        }
    }

    /// Parses the registered names; references use the given cap.
    pub fn parse(name: &str, cap: f64) -> Result<Self> {
        Ok(match name {
            "l1_norm" => Functional::L1Norm,
            "linf_norm" => Functional::LinfNorm,
            "mass" => Functional::Mass,
            "l1_gap_vs_partner" => Functional::L1GapVsPartner,
            "l1_gap_vs_u1" => Functional::L1GapVsReference { variant: ReferenceVariant::U1, cap },
            "l1_gap_vs_u2" => Functional::L1GapVsReference { variant: ReferenceVariant::U2, cap },
            "kinetic_gap_total" => Functional::KineticGapTotal,
            _ => return invalid(format!("unknown functional `{name}`")),
        })
    }

    fn needs_partner(&self) -> bool {
        matches!(self, Functional::L1GapVsPartner | Functional::KineticGapTotal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub base_seed: u64,
    pub sigma: f64,
    pub solver: SolverConfig,
    pub t_final: f64,
    /// Extra output times in `(0, T)`; `0` and `T` are always recorded.
    pub output_times: Vec<f64>,
    /// Spacing of the lattice on which `W` is sampled.
    pub noise_dt: f64,
    /// ξ spacing for the kinetic gap.
    pub xi_spacing: f64,
    pub functionals: Vec<Functional>,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, base_seed: u64, sigma: f64, solver: SolverConfig, t_final: f64) -> Self {
        EnsembleConfig {
            n_paths,
            base_seed,
            sigma,
            solver,
            t_final,
            output_times: Vec::new(),
            noise_dt: t_final / 1000.0,
            xi_spacing: 1.0 / 64.0,
            functionals: vec![Functional::L1Norm],
        }
    }

    pub fn seed(&self, path: usize) -> u64 {
        self.base_seed.wrapping_add(path as u64)
    }

    pub fn path(&self, index: usize) -> Result<BrownianPath> {
        if self.sigma == 0.0 {
            return Ok(BrownianPath::zero(self.t_final));
        }
        sample_brownian(self.t_final, self.noise_dt, self.sigma, self.seed(index))
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return invalid("an ensemble needs at least one path");
        }
        if !(self.t_final > 0.0) {
            return invalid(format!("horizon must be positive, got {}", self.t_final));
        }
        if !(self.xi_spacing > 0.0) {
            return invalid(format!("ξ spacing must be positive, got {}", self.xi_spacing));
        }
        if self.functionals.is_empty() {
            return invalid("no functionals requested");
        }
        Ok(())
    }

    fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.output_times.iter().copied().filter(|s| *s > 0.0 && *s < self.t_final).collect();
        t.push(0.0);
        t.push(self.t_final);
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford { n: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn variance(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        self.m2.iter().map(|s| (s / (self.n - 1) as f64).max(0.0)).collect()
    }
}

/// Mean, sample variance and standard error per time and functional.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub functionals: Vec<String>,
    /// Indexed `[time][functional]`.
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_paths: usize,
}

impl EnsembleStats {
    fn from_welford(times: Vec<f64>, functionals: Vec<String>, acc: &Welford) -> Self {
        let nf = functionals.len();
        let var = acc.variance();
        let split = |v: &[f64]| v.chunks(nf).map(|c| c.to_vec()).collect::<Vec<_>>();
        let stderr: Vec<f64> = var.iter().map(|v| (v / acc.n as f64).sqrt()).collect();
        EnsembleStats {
            times,
            mean: split(&acc.mean),
            variance: split(&var),
            stderr: split(&stderr),
            functionals,
            n_paths: acc.n,
        }
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.functionals
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::InvalidParameter(format!("functional `{name}` was not recorded")))
    }

    /// Mean and standard error of `name` at time index `k`.
    pub fn get(&self, name: &str, k: usize) -> Result<(f64, f64)> {
        let c = self.column(name)?;
        Ok((self.mean[k][c], self.stderr[k][c]))
    }

    /// Columns `time, functional, mean, variance, stderr, n_paths`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["time", "functional", "mean", "variance", "stderr", "n_paths"]);
        for (k, time) in self.times.iter().enumerate() {
            for (c, name) in self.functionals.iter().enumerate() {
                t.rows.push(vec![
                    (*time).into(),
                    name.as_str().into(),
                    self.mean[k][c].into(),
                    self.variance[k][c].into(),
                    self.stderr[k][c].into(),
                    self.n_paths.into(),
                ]);
            }
        }
        t
    }
}

/// One or two solutions driven by the same path.
#[derive(Debug, Clone, Copy)]
pub struct Member<'a> {
    pub flux: &'a FluxField,
    pub u0: &'a GridFunction,
}

fn evaluate(f: &Functional, t: f64, u: &GridFunction, partner: Option<&GridFunction>, ens: &EnsembleConfig) -> Result<f64> {
    Ok(match f {
        Functional::L1Norm => u.l1_norm(),
        Functional::LinfNorm => u.linf_norm(),
        Functional::Mass => u.integral(),
        Functional::L1GapVsPartner => u.l1_distance(partner.expect("checked before the run")),
        Functional::L1GapVsReference { variant, cap } => {
            u.l1_distance(&reference_grid_function(*variant, t, &u.grid, *cap, ens.t_final)?)
        }
        Functional::KineticGapTotal => {
            let v = partner.expect("checked before the run");
            let xi = xi_grid_covering(u.linf_norm().max(v.linf_norm()).max(ens.xi_spacing), ens.xi_spacing)?;
            let f = chi_field(u, &xi)?.combine(0.5, &chi_field(v, &xi)?, 0.5)?;
            gap_report(&f).gap_total
        }
    })
}

fn solve_members(members: &[Member], path: &BrownianPath, ens: &EnsembleConfig) -> Result<Vec<Trajectory>> {
    members
        .iter()
        .map(|m| transformed_solve_per_path(m.flux, m.u0, path, &ens.solver, ens.t_final, &ens.output_times))
        .collect()
}

fn path_values(members: &[Member], index: usize, ens: &EnsembleConfig) -> Result<Vec<f64>> {
    let path = ens.path(index)?;
    let trajs = solve_members(members, &path, ens)?;
    let mut out = Vec::with_capacity(trajs[0].times.len() * ens.functionals.len());
    for (k, t) in trajs[0].times.iter().enumerate() {
        let partner = trajs.get(1).map(|tr| &tr.snapshots[k]);
        for f in &ens.functionals {
            out.push(evaluate(f, *t, &trajs[0].snapshots[k], partner, ens)?);
        }
    }
    Ok(out)
}

/// Runs `per_path` for every path in index-ordered chunks and folds the
/// results in path order.
fn fold_paths<F>(ens: &EnsembleConfig, len: usize, per_path: F) -> Result<Welford>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    let mut acc = Welford::new(len);
    let mut start = 0;
    while start < ens.n_paths {
        let end = (start + CHUNK).min(ens.n_paths);
        let results: Vec<Result<Vec<f64>>> = (start..end).into_par_iter().map(&per_path).collect();
        for (offset, r) in results.into_iter().enumerate() {
            let path = start + offset;
            let v = r.map_err(|e| Error::PathFailed { path, seed: ens.seed(path), source: Box::new(e) })?;
            acc.push(&v);
        }
        start = end;
    }
    Ok(acc)
}

/// Ensemble statistics of one or two coupled members.
pub fn coupled_ensemble(members: &[Member], ens: &EnsembleConfig) -> Result<EnsembleStats> {
    ens.validate()?;
    if members.is_empty() || members.len() > 2 {
        return invalid("an ensemble couples one or two solutions");
    }
    if members.len() == 2 && !members[0].u0.grid.same_as(&members[1].u0.grid) {
        return invalid("coupled solutions must share a grid");
    }
    if members.len() == 1 {
        if let Some(f) = ens.functionals.iter().find(|f| f.needs_partner()) {
            return invalid(format!("functional `{}` needs a partner solution", f.name()));
        }
    }
    let times = ens.times();
    let names = ens.functionals.iter().map(Functional::name).collect();
    let acc = fold_paths(ens, times.len() * ens.functionals.len(), |i| path_values(members, i, ens))?;
    Ok(EnsembleStats::from_welford(times, names, &acc))
}

/// Monte Carlo statistics of the requested functionals of a single solution.
pub fn ensemble_expectation(b: &FluxField, u0: &GridFunction, ens: &EnsembleConfig) -> Result<EnsembleStats> {
    coupled_ensemble(&[Member { flux: b, u0 }], ens)
}

/// Pointwise ensemble mean and standard error of `u(t, ·)` at each recorded time.
#[derive(Debug, Clone)]
pub struct MeanField {
    pub times: Vec<f64>,
    pub mean: Vec<GridFunction>,
    pub stderr: Vec<GridFunction>,
    pub n_paths: usize,
}

impl MeanField {
    /// Columns `t, x, mean, stderr`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "x", "mean", "stderr"]);
        for (k, time) in self.times.iter().enumerate() {
            let g = &self.mean[k].grid;
            for i in 0..g.len() {
                t.rows.push(vec![
                    (*time).into(),
                    g.center(i).into(),
                    self.mean[k].values[i].into(),
                    self.stderr[k].values[i].into(),
                ]);
            }
        }
        t
    }
}

pub fn ensemble_mean_field(b: &FluxField, u0: &GridFunction, ens: &EnsembleConfig) -> Result<MeanField> {
    ens.validate()?;
    let times = ens.times();
    let n = u0.grid.len();
    let acc = fold_paths(ens, times.len() * n, |i| {
        let path = ens.path(i)?;
        let traj = transformed_solve_per_path(b, u0, &path, &ens.solver, ens.t_final, &ens.output_times)?;
        Ok(traj.snapshots.into_iter().flat_map(|s| s.values).collect())
    })?;
    let var = acc.variance();
    let field = |v: &[f64]| GridFunction { grid: u0.grid, values: v.to_vec() };
    Ok(MeanField {
        mean: acc.mean.chunks(n).map(field).collect(),
        stderr: var.chunks(n).map(|c| field(&c.iter().map(|v| (v / acc.n as f64).sqrt()).collect::<Vec<_>>())).collect(),
        times,
        n_paths: acc.n,
    })
}

/// How the two solutions of a stability run are regularized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Both solutions use the flux mollified at `ε`.
    SameScale,
    /// The second solution uses the flux mollified at `ε/2`.
    HalvedScale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub eps: f64,
    pub sigma: f64,
    pub time: f64,
    pub gap: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub pairing: Pairing,
    /// `∫|u₀¹ − u₀²| dx`.
    pub initial_gap: f64,
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    /// Row at scale `eps`, amplitude `sigma` and time `time`.
    pub fn find(&self, eps: f64, sigma: f64, time: f64) -> Option<&StabilityRow> {
        self.rows.iter().find(|r| r.eps == eps && r.sigma == sigma && (r.time - time).abs() < 1e-12)
    }

    /// `gap / ∫|u₀¹ − u₀²|`, NaN for identical data.
    pub fn ratio(&self, row: &StabilityRow) -> f64 {
        if self.initial_gap > 0.0 {
            row.gap / self.initial_gap
        } else {
            f64::NAN
        }
    }

    /// Columns `eps, sigma, t, gap_mean, gap_stderr, ratio, n_paths`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["eps", "sigma", "t", "gap_mean", "gap_stderr", "ratio", "n_paths"]);
        for r in &self.rows {
            t.rows.push(vec![
                r.eps.into(),
                r.sigma.into(),
                r.time.into(),
                r.gap.into(),
                r.stderr.into(),
                self.ratio(r).into(),
                r.n_paths.into(),
            ]);
        }
        t
    }
}

/// `t ↦ E∫|u¹ − u²| dx` for coupled solutions at each mollification scale in
/// `eps_list`, with amplitude `σ` and with the deterministic control `σ = 0`
/// (a single path).
pub fn stability_experiment(
    b: &FluxField,
    u0_1: &GridFunction,
    u0_2: &GridFunction,
    sigma: f64,
    eps_list: &[f64],
    pairing: Pairing,
    ens: &EnsembleConfig,
) -> Result<StabilityReport> {
    if eps_list.is_empty() {
        return invalid("empty list of mollification scales");
    }
    let mut rows = Vec::new();
    for &eps in eps_list {
        let b1 = mollify_flux(b, MollifierSpec::new(eps, eps)?)?;
        let b2 = match pairing {
            Pairing::SameScale => b1.clone(),
            Pairing::HalvedScale => mollify_flux(b, MollifierSpec::new(0.5 * eps, 0.5 * eps)?)?,
        };
        let members = [Member { flux: &b1, u0: u0_1 }, Member { flux: &b2, u0: u0_2 }];
        for s in [sigma, 0.0] {
            let run = EnsembleConfig {
                sigma: s,
                n_paths: if s == 0.0 { 1 } else { ens.n_paths },
                functionals: vec![Functional::L1GapVsPartner],
                ..ens.clone()
            };
            let stats = coupled_ensemble(&members, &run)?;
            for (k, t) in stats.times.iter().enumerate() {
                rows.push(StabilityRow {
                    eps,
                    sigma: s,
                    time: *t,
                    gap: stats.mean[k][0],
                    stderr: stats.stderr[k][0],
                    n_paths: stats.n_paths,
                });
            }
            if sigma == 0.0 {
                break;
            }
        }
    }
    Ok(StabilityReport { pairing, initial_gap: u0_1.l1_distance(u0_2), rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRow {
    pub sigma: f64,
    pub dist_to_u1: f64,
    pub dist_to_u2: f64,
    /// `∫` of the pointwise standard error of the mean field.
    pub stderr: f64,
}

/// Distances of the ensemble-mean solution at `T` to the two closed-form
/// model solutions, for each amplitude in a strictly decreasing list.
pub fn selection_study(b: &FluxField, u0: &GridFunction, sigma_list: &[f64], cap: f64, ens: &EnsembleConfig) -> Result<Vec<SelectionRow>> {
    if sigma_list.is_empty() || sigma_list.iter().any(|s| !(*s > 0.0)) {
        return invalid("amplitudes must be positive");
    }
    if sigma_list.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("amplitudes must be strictly decreasing");
    }
    let t = ens.t_final;
    let grid: Grid = u0.grid;
    let u1 = reference_grid_function(ReferenceVariant::U1, t, &grid, cap, t)?;
    let u2 = reference_grid_function(ReferenceVariant::U2, t, &grid, cap, t)?;
    sigma_list
        .iter()
        .map(|&sigma| {
            let run = EnsembleConfig { sigma, output_times: Vec::new(), ..ens.clone() };
            let field = ensemble_mean_field(b, u0, &run)?;
            let last = field.mean.last().expect("mean field holds the final time");
            Ok(SelectionRow {
                sigma,
                dist_to_u1: last.l1_distance(&u1),
                dist_to_u2: last.l1_distance(&u2),
                stderr: field.stderr.last().expect("final time").l1_norm(),
            })
        })
        .collect()
}

/// Columns `sigma, dist_to_u1, dist_to_u2, stderr`.
pub fn selection_table(rows: &[SelectionRow]) -> Table {
    let mut t = Table::new(["sigma", "dist_to_u1", "dist_to_u2", "stderr"]);
    for r in rows {
        t.rows.push(vec![r.sigma.into(), r.dist_to_u1.into(), r.dist_to_u2.into(), r.stderr.into()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_starts_at_zero_and_is_reproducible() {
        let a = sample_brownian(1.0, 0.01, 1.0, 7).unwrap();
        let b = sample_brownian(1.0, 0.01, 1.0, 7).unwrap();
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values().len(), 101);
        assert_eq!(a, b);
        assert_ne!(a, sample_brownian(1.0, 0.01, 1.0, 8).unwrap());
    }

    #[test]
    fn interpolation_hits_lattice_values() {
        let w = sample_brownian(1.0, 0.1, 2.0, 3).unwrap();
        for (k, v) in w.values().iter().enumerate() {
            assert!((w.at(k as f64 * w.dt) - v).abs() < 1e-15);
        }
        let mid = w.at(0.15);
        assert!((mid - 0.5 * (w.values()[1] + w.values()[2])).abs() < 1e-12);
    }

    #[test]
    fn bad_lattice_is_rejected() {
        assert!(sample_brownian(0.1, 0.2, 1.0, 0).is_err());
        assert!(sample_brownian(1.0, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 0.25];
        let mut w = Welford::new(1);
        for x in xs {
            w.push(&[x]);
        }
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((w.mean[0] - mean).abs() < 1e-14);
        assert!((w.variance()[0] - var).abs() < 1e-13);
    }

    #[test]
    fn functional_names_round_trip() {
        for name in ["l1_norm", "linf_norm", "mass", "l1_gap_vs_partner", "l1_gap_vs_u1", "l1_gap_vs_u2", "kinetic_gap_total"] {
            assert_eq!(Functional::parse(name, 3.0).unwrap().name(), name);
        }
        assert!(Functional::parse("energy", 3.0).is_err());
    }
}
