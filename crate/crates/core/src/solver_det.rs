//! Explicit viscous solver for `∂t v + g(t, x, v)·∂x v = ε ∂xx v`, the
//! kinetic defect measure of its solutions, a-priori bound certificates and
//! Kruzkov entropy residuals.

use crate::certificate::Certificate;
use crate::error::{invalid, Error, Result};
use crate::flux::FluxField;
use crate::grid::{Grid, GridFunction};
use crate::mollifier;
use crate::table::Table;
use crate::testfn::SpaceTimeBump;

/// Cells kept free between the support and the boundary of a padded domain.
pub const PAD_CELLS: usize = 5;

/// Relative level below which a value counts as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// Number of times a step may be halved before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// A velocity field that may depend on time.
pub trait TimeDependentFlux: Sync {
    fn eval(&self, t: f64, x: f64, xi: f64) -> f64;

    /// `∫₀ʷ g(t, x, v) dv`.
    fn primitive(&self, t: f64, x: f64, w: f64) -> f64;

    /// A-priori bound on `|g|` over the working window and state range.
    fn sup_bound(&self) -> f64;
}

impl TimeDependentFlux for FluxField {
    fn eval(&self, _t: f64, x: f64, xi: f64) -> f64 {
        FluxField::eval(self, x, xi)
    }
    fn primitive(&self, _t: f64, x: f64, w: f64) -> f64 {
        FluxField::primitive(self, x, w)
    }
    fn sup_bound(&self) -> f64 {
        self.linf_bound()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero ghost values; the run aborts when the support nears the edge.
    CompactSupportPad,
    /// Zero-gradient ghost values.
    Outflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub viscosity: f64,
    pub cfl: f64,
    pub boundary: Boundary,
}

impl SolverConfig {
    pub fn new(viscosity: f64, cfl: f64, boundary: Boundary) -> Result<Self> {
        if !(viscosity >= 0.0 && viscosity.is_finite()) {
            return invalid(format!("viscosity must be nonnegative, got {viscosity}"));
        }
        if !(cfl > 0.0 && cfl < 1.0) {
            return invalid(format!("CFL number must lie in (0, 1), got {cfl}"));
        }
        Ok(SolverConfig { viscosity, cfl, boundary })
    }

    /// Viscosity tied to the grid spacing, CFL 0.9, padded boundary.
    pub fn grid_coupled(dx: f64) -> Self {
        SolverConfig { viscosity: dx, cfl: 0.9, boundary: Boundary::CompactSupportPad }
    }

    /// Largest admissible step for velocity bound `g_sup`; infinite when
    /// neither transport nor diffusion is present.
    pub fn max_step(&self, g_sup: f64, dx: f64) -> f64 {
        let rate = 2.0 * g_sup / dx + 2.0 * self.viscosity / (dx * dx);
        if rate > 0.0 {
            self.cfl / rate
        } else {
            f64::INFINITY
        }
    }
}

/// Snapshots of a solve.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub config: SolverConfig,
    /// Largest internal step used.
    pub dt: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn initial(&self) -> &GridFunction {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trajectories hold at least two snapshots")
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> &GridFunction {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.snapshots[k]
    }

    /// Long-format table `t, x, u`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "x", "u"]);
        for (time, snap) in self.times.iter().zip(&self.snapshots) {
            for (i, v) in snap.values.iter().enumerate() {
                t.rows.push(vec![(*time).into(), snap.grid.center(i).into(), (*v).into()]);
            }
        }
        t
    }
}

/// One explicit step of `v_t + g v_x = ε v_xx + V v`, with interface
/// velocities `vel_left[i]` (face i−½) and `vel_right[i]` (face i+½).
#[allow(clippy::too_many_arguments)]
pub(crate) fn explicit_step(
    v: &[f64],
    out: &mut [f64],
    vel_left: &[f64],
    vel_right: &[f64],
    potential: Option<&[f64]>,
    eps: f64,
    dt: f64,
    dx: f64,
    boundary: Boundary,
) {
    let n = v.len();
    let lam = dt / dx;
    let mu = eps * dt / (dx * dx);
    let ghost = |i: isize| -> f64 {
        if i < 0 {
            match boundary {
                Boundary::CompactSupportPad => 0.0,
                Boundary::Outflow => v[0],
            }
        } else if i as usize >= n {
            match boundary {
                Boundary::CompactSupportPad => 0.0,
                Boundary::Outflow => v[n - 1],
            }
        } else {
            v[i as usize]
        }
    };
    for i in 0..n {
        let vm = ghost(i as isize - 1);
        let vp = ghost(i as isize + 1);
        let vi = v[i];
        let transport = vel_left[i].max(0.0) * (vi - vm) + vel_right[i].min(0.0) * (vp - vi);
        let mut next = vi - lam * transport + mu * (vp - 2.0 * vi + vm);
        if let Some(pot) = potential {
            next += dt * pot[i] * vi;
        }
        out[i] = next;
    }
}

/// State-averaged velocity `(G(b) − G(a))/(b − a)` with `G` the primitive.
fn averaged_velocity<G: TimeDependentFlux + ?Sized>(g: &G, t: f64, x: f64, a: f64, b: f64) -> f64 {
    if (b - a).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
        (g.primitive(t, x, b) - g.primitive(t, x, a)) / (b - a)
    } else {
        g.eval(t, x, 0.5 * (a + b))
    }
}

struct Stepper<'a, G: ?Sized> {
    g: &'a G,
    cfg: SolverConfig,
    grid: Grid,
    xs: Vec<f64>,
    vel_left: Vec<f64>,
    vel_right: Vec<f64>,
    scratch: Vec<f64>,
    steps: usize,
    threshold: f64,
}

impl<'a, G: TimeDependentFlux + ?Sized> Stepper<'a, G> {
    fn velocities(&mut self, v: &[f64], t: f64) -> f64 {
        let n = v.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = self.xs[i];
            let vm = if i > 0 { v[i - 1] } else { self.edge(v, true) };
            let vp = if i + 1 < n { v[i + 1] } else { self.edge(v, false) };
            let l = averaged_velocity(self.g, t, x, vm, v[i]);
            let r = averaged_velocity(self.g, t, x, v[i], vp);
            self.vel_left[i] = l;
            self.vel_right[i] = r;
            worst = worst.max(l.max(0.0) - r.min(0.0));
        }
        worst
    }

    fn edge(&self, v: &[f64], left: bool) -> f64 {
        match self.cfg.boundary {
            Boundary::CompactSupportPad => 0.0,
            Boundary::Outflow => {
                if left {
                    v[0]
                } else {
                    v[v.len() - 1]
                }
            }
        }
    }

    fn advance(&mut self, v: &mut Vec<f64>, t: f64, dt: f64, depth: u32) -> Result<()> {
        let dx = self.grid.spacing();
        let worst = self.velocities(v, t + 0.5 * dt);
        let rate = worst / dx + 2.0 * self.cfg.viscosity / (dx * dx);
        if dt * rate > 1.0 {
            if depth >= MAX_HALVINGS {
                return Err(Error::StepSizeUnderflow { t, halvings: depth });
            }
            self.advance(v, t, 0.5 * dt, depth + 1)?;
            return self.advance(v, t + 0.5 * dt, 0.5 * dt, depth + 1);
        }
        explicit_step(
            v,
            &mut self.scratch,
            &self.vel_left,
            &self.vel_right,
            None,
            self.cfg.viscosity,
            dt,
            dx,
            self.cfg.boundary,
        );
        std::mem::swap(v, &mut self.scratch);
        self.steps += 1;
        self.check_support(v, t + dt)
    }

    fn check_support(&self, v: &[f64], t: f64) -> Result<()> {
        if self.cfg.boundary != Boundary::CompactSupportPad {
            return Ok(());
        }
        let n = v.len();
        let k = PAD_CELLS.min(n);
        if v[..k].iter().any(|x| x.abs() > self.threshold) {
            return Err(Error::DomainTooSmall { t, side: "left", cells: PAD_CELLS });
        }
        if v[n - k..].iter().any(|x| x.abs() > self.threshold) {
            return Err(Error::DomainTooSmall { t, side: "right", cells: PAD_CELLS });
        }
        Ok(())
    }
}

/// Solves `∂t v + g(t, x, v)·∂x v = ε ∂xx v` on the grid of `u0` up to
/// `t_final`, recording `u0`, each requested time in `(0, t_final)` and the
/// final state.
///
/// Transport uses upwinding on the sign of the state-averaged velocity at
/// each cell face; the step is chosen so that every output time is hit
/// exactly and `dt·(2 sup|g|/Δx + 2ε/Δx²) ≤ cfl`.
pub fn solve_viscous<G: TimeDependentFlux + ?Sized>(
    g: &G,
    u0: &GridFunction,
    cfg: &SolverConfig,
    t_final: f64,
    output_times: &[f64],
) -> Result<Trajectory> {
    let cfg = SolverConfig::new(cfg.viscosity, cfg.cfl, cfg.boundary)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return invalid(format!("final time must be positive, got {t_final}"));
    }
    let sup = g.sup_bound();
    if !sup.is_finite() {
        return invalid("velocity field has no finite bound on the working window");
    }
    let mut stops: Vec<f64> = output_times.iter().copied().filter(|t| *t > 0.0 && *t < t_final).collect();
    stops.push(t_final);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let grid = u0.grid;
    let dx = grid.spacing();
    let dt_max = cfg.max_step(sup, dx);
    let n = grid.len();
    let mut stepper = Stepper {
        g,
        cfg,
        grid,
        xs: grid.centers(),
        vel_left: vec![0.0; n],
        vel_right: vec![0.0; n],
        scratch: vec![0.0; n],
        steps: 0,
        threshold: SUPPORT_THRESHOLD * u0.linf_norm().max(f64::MIN_POSITIVE),
    };
    stepper.check_support(&u0.values, 0.0)?;

    let mut v = u0.values.clone();
    let mut times = vec![0.0];
    let mut snapshots = vec![u0.clone()];
    let mut t = 0.0;
    let mut dt_used: f64 = 0.0;
    for stop in stops {
        let span = stop - t;
        let count = if dt_max.is_finite() { (span / dt_max).ceil().max(1.0) as usize } else { 1 };
        let dt = span / count as f64;
        dt_used = dt_used.max(dt);
        for k in 0..count {
            let start = t + k as f64 * dt;
            stepper.advance(&mut v, start, dt, 0)?;
        }
        t = stop;
        times.push(stop);
        snapshots.push(GridFunction { grid, values: v.clone() });
    }
    Ok(Trajectory { times, snapshots, config: cfg, dt: dt_used, steps: stepper.steps })
}

/// Viscous defect `ε|∂x v|² ρ̄_δ(ξ − v)` of a trajectory.
///
/// The ξ-kernel is renormalized on the lattice so that each `(t, x)` column
/// carries exactly the dissipation `ε|∂x v|²`.
#[derive(Debug, Clone)]
pub struct DefectMeasureEstimate {
    pub times: Vec<f64>,
    pub x_grid: Grid,
    pub xi_grid: Grid,
    pub delta: f64,
    dissipation: Vec<f64>,
    states: Vec<f64>,
    /// Trapezoid weights of the snapshot times.
    time_weights: Vec<f64>,
    pub total_mass: f64,
}

impl DefectMeasureEstimate {
    fn xi_weights(&self, v: f64) -> Vec<(usize, f64)> {
        let h = self.xi_grid.spacing();
        let c = self.xi_grid.coordinate(v);
        let reach = (self.delta / h).ceil() as isize + 1;
        let lo = (c.floor() as isize - reach).max(0);
        let hi = (c.ceil() as isize + reach).min(self.xi_grid.len() as isize - 1);
        let mut w = Vec::new();
        let mut total = 0.0;
        for j in lo..=hi {
            let j = j as usize;
            let k = mollifier::scaled(self.xi_grid.center(j) - v, self.delta);
            if k > 0.0 {
                w.push((j, k));
                total += k * h;
            }
        }
        if total > 0.0 {
            for p in &mut w {
                p.1 /= total;
            }
        }
        w
    }

    /// `density(t_k, x_i, ξ_j)`.
    pub fn density(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.x_grid.len();
        let d = self.dissipation[k * n + i];
        if d == 0.0 {
            return 0.0;
        }
        self.xi_weights(self.states[k * n + i])
            .iter()
            .find(|(l, _)| *l == j)
            .map_or(0.0, |(_, w)| d * w)
    }

    /// `∫∫ m(t_k, x, ξ) dx dξ` for each snapshot.
    pub fn mass_at_t(&self) -> Vec<f64> {
        let n = self.x_grid.len();
        let dx = self.x_grid.spacing();
        (0..self.times.len())
            .map(|k| self.dissipation[k * n..(k + 1) * n].iter().sum::<f64>() * dx)
            .collect()
    }

    /// Cumulative `∫₀^{t_k}∫∫ w(ξ) m` at each snapshot time.
    pub fn cumulative_moment(&self, w: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.x_grid.len();
        let (dx, h) = (self.x_grid.spacing(), self.xi_grid.spacing());
        let slice: Vec<f64> = (0..self.times.len())
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let d = self.dissipation[k * n + i];
                        if d == 0.0 {
                            return 0.0;
                        }
                        let ws = self.xi_weights(self.states[k * n + i]);
                        d * ws.iter().map(|(j, c)| c * w(self.xi_grid.center(*j))).sum::<f64>() * h
                    })
                    .sum::<f64>()
                    * dx
            })
            .collect();
        let mut acc = vec![0.0; slice.len()];
        for k in 1..slice.len() {
            acc[k] = acc[k - 1] + 0.5 * (self.times[k] - self.times[k - 1]) * (slice[k] + slice[k - 1]);
        }
        acc
    }

    /// Table `t, mass_at_t`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "mass_at_t"]);
        for (time, m) in self.times.iter().zip(self.mass_at_t()) {
            t.rows.push(vec![(*time).into(), m.into()]);
        }
        t
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }
}

/// Default ξ-mollification width: two ξ cells.
pub fn default_delta(xi_grid: &Grid) -> f64 {
    2.0 * xi_grid.spacing()
}

pub fn defect_measure(traj: &Trajectory, cfg: &SolverConfig, xi_grid: &Grid, delta: f64) -> Result<DefectMeasureEstimate> {
    if cfg.viscosity == 0.0 {
        return Err(Error::DefectUndefined);
    }
    if !(delta > 0.0) {
        return invalid(format!("ξ mollification width must be positive, got {delta}"));
    }
    let grid = traj.initial().grid;
    let n = grid.len();
    let dx = grid.spacing();
    let ghost = |v: &[f64], i: isize| -> f64 {
        if i < 0 {
            if cfg.boundary == Boundary::Outflow { v[0] } else { 0.0 }
        } else if i as usize >= v.len() {
            if cfg.boundary == Boundary::Outflow { v[v.len() - 1] } else { 0.0 }
        } else {
            v[i as usize]
        }
    };
    let mut dissipation = Vec::with_capacity(n * traj.times.len());
    let mut states = Vec::with_capacity(n * traj.times.len());
    for snap in &traj.snapshots {
        for i in 0..n {
            let d = (ghost(&snap.values, i as isize + 1) - ghost(&snap.values, i as isize - 1)) / (2.0 * dx);
            dissipation.push(cfg.viscosity * d * d);
            states.push(snap.values[i]);
        }
    }
    let m = traj.times.len();
    let mut time_weights = vec![0.0; m];
    for k in 1..m {
        let h = traj.times[k] - traj.times[k - 1];
        time_weights[k - 1] += 0.5 * h;
        time_weights[k] += 0.5 * h;
    }
    let mut est = DefectMeasureEstimate {
        times: traj.times.clone(),
        x_grid: grid,
        xi_grid: *xi_grid,
        delta,
        dissipation,
        states,
        time_weights,
        total_mass: 0.0,
    };
    est.total_mass = *est.cumulative_moment(|_| 1.0).last().unwrap_or(&0.0);
    Ok(est)
}

/// `‖div b‖_{L¹(grid × [−M, M])}` per unit time, with a 64-cell ξ lattice.
pub fn divergence_l1(b: &FluxField, grid: &Grid, m: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let xi = Grid::symmetric(m, 64).expect("positive state bound");
    let h = xi.spacing();
    grid.centers()
        .iter()
        .map(|x| xi.centers().iter().map(|z| b.div_x(*x, *z).abs()).sum::<f64>() * h)
        .sum::<f64>()
        * grid.spacing()
}

/// Maximum principle and `L^p` budget of a viscous trajectory.
///
/// The budget is checked at every snapshot time `t`:
/// `‖u(t)‖_p^p + p(p−1)∫₀ᵗ∫∫|ξ|^{p−2} m ≤ ‖u₀‖_p^p + p‖u₀‖_∞^{p−1}‖div b‖_{L¹([0,t]×grid×[−‖u₀‖_∞,‖u₀‖_∞])}`;
/// the certificate allows a discretization slack of `1e-3·‖u₀‖_p^p`.
pub fn check_apriori_bounds(traj: &Trajectory, m: &DefectMeasureEstimate, b: &FluxField, p: f64) -> Result<Certificate> {
    if !(p >= 1.0) {
        return invalid(format!("exponent p must be at least 1, got {p}"));
    }
    let u0 = traj.initial();
    let sup0 = u0.linf_norm();
    let max_sup = traj.snapshots.iter().map(|s| s.linf_norm()).fold(0.0, f64::max);
    let linf_slack = sup0 + 1e-12 * sup0 - max_sup;

    let norm0 = u0.lp_norm_pow(p);
    let div_rate = divergence_l1(b, &u0.grid, sup0);
    let moments = m.cumulative_moment(|xi| xi.abs().powf(p - 2.0));
    let mut budget_slack = f64::INFINITY;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let t = traj.times[k];
        let lhs = snap.lp_norm_pow(p) + p * (p - 1.0) * moments[k];
        let rhs = norm0 + p * sup0.powf(p - 1.0) * div_rate * t;
        budget_slack = budget_slack.min(rhs - lhs);
    }
    let mut c = Certificate::new("apriori_bounds");
    c.at_least("max_principle_slack", linf_slack, 0.0)
        .at_least("lp_budget_slack", budget_slack, -1e-3 * norm0)
        .record("p", p)
        .record("u0_linf", sup0)
        .record("u0_lp_pow", norm0)
        .record("div_b_l1_rate", div_rate)
        .record("defect_total_mass", m.total_mass);
    Ok(c)
}

/// Quadrature resolution for [`kruzkov_entropy_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualQuadrature {
    pub t_final: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub nt: usize,
    pub nx: usize,
}

/// `∫∫ |u−k| φ_t + sgn(u−k)(B(x,u) − B(x,k)) φ_x + sgn(u−k)((∂ₓB)(x,u) − (∂ₓB)(x,k)) φ dx dt`
/// by the midpoint rule over the support of `φ`; nonnegative for entropy solutions.
pub fn kruzkov_entropy_residual(
    u: &dyn Fn(f64, f64) -> f64,
    b: &FluxField,
    k: f64,
    phi: &SpaceTimeBump,
    quad: &ResidualQuadrature,
) -> Result<f64> {
    let (t0, t1) = phi.time.support();
    let (x0, x1) = phi.space.support();
    if t0 <= 0.0 || t1 >= quad.t_final || x0 <= quad.x_lo || x1 >= quad.x_hi {
        return Err(Error::InvalidTestFunction(format!(
            "support [{t0}, {t1}]×[{x0}, {x1}] must lie inside (0, {})×({}, {})",
            quad.t_final, quad.x_lo, quad.x_hi
        )));
    }
    if quad.nt == 0 || quad.nx == 0 {
        return invalid("quadrature needs at least one cell per direction");
    }
    let mut breaks = vec![x0];
    breaks.extend(b.kinks().into_iter().filter(|k| *k > x0 && *k < x1));
    breaks.push(x1);
    breaks.sort_by(f64::total_cmp);
    // x = a + (c − a)·s²(3 − 2s) clusters nodes at panel ends, where the
    // spatial derivative of b may blow up like an inverse square root
    let mut nodes = Vec::new();
    for w in breaks.windows(2) {
        let (a, c) = (w[0], w[1]);
        let m = ((c - a) / (x1 - x0) * quad.nx as f64).ceil().max(1.0) as usize;
        let hs = 1.0 / m as f64;
        for q in 0..m {
            let s = (q as f64 + 0.5) * hs;
            nodes.push((a + (c - a) * s * s * (3.0 - 2.0 * s), (c - a) * 6.0 * s * (1.0 - s) * hs));
        }
    }
    let ht = (t1 - t0) / quad.nt as f64;
    let mut total = 0.0;
    for a in 0..quad.nt {
        let t = t0 + (a as f64 + 0.5) * ht;
        let mut row = 0.0;
        for &(x, wx) in &nodes {
            let w = u(t, x);
            let s = if w > k { 1.0 } else if w < k { -1.0 } else { 0.0 };
            row += wx
                * ((w - k).abs() * phi.dt(t, x)
                    + s * (b.primitive(x, w) - b.primitive(x, k)) * phi.dx(t, x)
                    + s * (b.primitive_div(x, w) - b.primitive_div(x, k)) * phi.value(t, x));
        }
        total += row;
    }
    Ok(total * ht)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, s: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x| (-x * x / (2.0 * s * s)).exp())
    }

    #[test]
    fn heat_flow_matches_gaussian_spreading() {
        let grid = Grid::new(-4.0, 4.0, 400).unwrap();
        let cfg = SolverConfig::new(0.01, 0.9, Boundary::CompactSupportPad).unwrap();
        let u0 = gaussian(grid, 0.3);
        let traj = solve_viscous(&FluxField::constant(0.0), &u0, &cfg, 1.0, &[]).unwrap();
        let s2: f64 = 0.09 + 2.0 * 0.01;
        let amp = (0.09 / s2).sqrt();
        let err = traj
            .last()
            .values
            .iter()
            .zip(grid.centers())
            .map(|(v, x)| (v - amp * (-x * x / (2.0 * s2)).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-4, "max error {err}");
    }

    #[test]
    fn constant_transport_shifts_profile() {
        let grid = Grid::new(-3.0, 4.0, 1400).unwrap();
        let cfg = SolverConfig::new(0.0, 0.9, Boundary::CompactSupportPad).unwrap();
        let u0 = gaussian(grid, 0.3);
        let traj = solve_viscous(&FluxField::constant(1.0), &u0, &cfg, 1.0, &[0.5]).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.5, 1.0]);
        let err = traj
            .last()
            .values
            .iter()
            .zip(grid.centers())
            .map(|(v, x)| (v - (-(x - 1.0) * (x - 1.0) / 0.18).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.05, "max error {err}");
    }

    #[test]
    fn support_reaching_the_pad_aborts() {
        let grid = Grid::new(-1.0, 1.0, 100).unwrap();
        let cfg = SolverConfig::new(0.0, 0.5, Boundary::CompactSupportPad).unwrap();
        let u0 = gaussian(grid, 0.05);
        let err = solve_viscous(&FluxField::constant(1.0), &u0, &cfg, 2.0, &[]).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall { side: "right", .. }));
    }

    struct Growing;
    impl TimeDependentFlux for Growing {
        fn eval(&self, t: f64, _x: f64, _xi: f64) -> f64 {
            1.0 + 1e9 * t
        }
        fn primitive(&self, t: f64, x: f64, w: f64) -> f64 {
            self.eval(t, x, w) * w
        }
        fn sup_bound(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn runaway_velocity_underflows() {
        let grid = Grid::new(-1.0, 1.0, 100).unwrap();
        let cfg = SolverConfig::new(0.0, 0.5, Boundary::Outflow).unwrap();
        let err = solve_viscous(&Growing, &gaussian(grid, 0.1), &cfg, 1.0, &[]).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. }));
    }

    #[test]
    fn defect_requires_viscosity() {
        let grid = Grid::new(-2.0, 2.0, 100).unwrap();
        let cfg = SolverConfig::new(0.0, 0.5, Boundary::CompactSupportPad).unwrap();
        let traj = solve_viscous(&FluxField::constant(0.0), &gaussian(grid, 0.2), &cfg, 0.1, &[]).unwrap();
        let xi = Grid::symmetric(1.0, 32).unwrap();
        assert!(matches!(defect_measure(&traj, &cfg, &xi, 0.1), Err(Error::DefectUndefined)));
    }

    #[test]
    fn constant_state_has_zero_defect_and_zero_slack() {
        let grid = Grid::new(0.0, 1.0, 50).unwrap();
        let cfg = SolverConfig::new(0.01, 0.5, Boundary::Outflow).unwrap();
        let u0 = GridFunction::from_fn(grid, |_| 0.5);
        let traj = solve_viscous(&FluxField::constant(0.0), &u0, &cfg, 0.5, &[0.25]).unwrap();
        let xi = Grid::symmetric(1.0, 32).unwrap();
        let m = defect_measure(&traj, &cfg, &xi, default_delta(&xi)).unwrap();
        assert_eq!(m.total_mass, 0.0);
        let cert = check_apriori_bounds(&traj, &m, &FluxField::constant(0.0), 2.0).unwrap();
        assert!(cert.passed());
        assert!(cert.value("lp_budget_slack").unwrap().abs() < 1e-14);
        assert!(cert.value("max_principle_slack").unwrap().abs() < 1e-12);
    }

    #[test]
    fn smooth_solution_of_linear_stretching_has_zero_residual() {
        // ∂t u + x ∂x u = 0 is solved by u(t, x) = u0(x e^{-t})
        let b = FluxField::affine(1.0, 0.0, 0.0);
        let u = |t: f64, x: f64| (-(x * (-t).exp()).powi(2)).exp() * 0.8;
        let phi = SpaceTimeBump::new(0.5, 0.3, 0.2, 0.9).unwrap();
        let quad = ResidualQuadrature { t_final: 1.0, x_lo: -2.0, x_hi: 2.0, nt: 400, nx: 400 };
        for k in [-0.1, 0.3, 0.5] {
            let r = kruzkov_entropy_residual(&u, &b, k, &phi, &quad).unwrap();
            assert!(r.abs() < 1e-4, "k = {k}: residual {r}");
        }
    }

    #[test]
    fn test_function_touching_initial_time_is_rejected() {
        let b = FluxField::burgers_like(1.0);
        let phi = SpaceTimeBump::new(0.2, 0.2, 0.0, 0.5).unwrap();
        let quad = ResidualQuadrature { t_final: 1.0, x_lo: -2.0, x_hi: 2.0, nt: 10, nx: 10 };
        let r = kruzkov_entropy_residual(&|_, _| 0.0, &b, 0.0, &phi, &quad);
        assert!(matches!(r, Err(Error::InvalidTestFunction(_))));
    }
}
