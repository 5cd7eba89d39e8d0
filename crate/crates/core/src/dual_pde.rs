//! Heat-kernel norms, the backward dual problem
//! `∂tφ + ½∂xxφ + (F + h)φ = 0, φ(t_fin) = ψ`, its Feynman–Kac
//! representation, and certificates for the bounds used with it.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::certificate::Certificate;
use crate::error::{invalid, Error, Result};
use crate::flux::FluxField;
use crate::grid::{Grid, GridFunction};
use crate::rng::CounterRng;
use crate::solver_det::{explicit_step, Boundary};
use crate::table::Table;

const TAU: f64 = std::f64::consts::TAU;

/// Exact `‖p_t‖_{L^m(ℝ^d)}` (or `‖∇p_t‖_{L^m}` when `gradient`) for the heat
/// kernel `p_t(x) = (2πt)^{−d/2} e^{−|x|²/2t}`; `m = ∞` is allowed.
pub fn heat_kernel_norm(t: f64, m: f64, d: usize, gradient: bool) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("heat kernel time must be positive, got {t}"));
    }
    if !(m >= 1.0) || d == 0 {
        return invalid(format!("need m ≥ 1 and d ≥ 1, got m = {m}, d = {d}"));
    }
    let df = d as f64;
    let peak = (TAU * t).powf(-0.5 * df);
    if m.is_infinite() {
        // |∇p_t| = p_t |x|/t peaks at |x| = √t
        return Ok(if gradient { peak * (-0.5f64).exp() / t.sqrt() } else { peak });
    }
    if !gradient {
        // ∫p_t^m = (2πt)^{−d(m−1)/2} m^{−d/2}
        return Ok((TAU * t).powf(-0.5 * df * (m - 1.0) / m) * m.powf(-0.5 * df / m));
    }
    // ∫|x|^m e^{−a|x|²} dx = π^{d/2} Γ((m+d)/2) / (Γ(d/2) a^{(m+d)/2}) with a = m/2t
    let a = m / (2.0 * t);
    let ln_int = 0.5 * df * std::f64::consts::PI.ln() + ln_gamma(0.5 * (m + df)) - ln_gamma(0.5 * df) - 0.5 * (m + df) * a.ln();
    let ln_pow = m * (peak.ln() - t.ln()) + ln_int;
    Ok((ln_pow / m).exp())
}

/// Hölder conjugate `m/(m−1)`, infinite for `m = 1`.
pub fn conjugate(m: f64) -> f64 {
    if m == 1.0 {
        f64::INFINITY
    } else if m.is_infinite() {
        1.0
    } else {
        m / (m - 1.0)
    }
}

/// `ψ = 1` on `|x| ≤ r`, quintic smoothstep down to 0 on `r ≤ |x| ≤ r + w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub radius: f64,
    pub width: f64,
}

impl Cutoff {
    pub fn new(radius: f64, width: f64) -> Result<Self> {
        if !(radius >= 0.0) || !(width > 0.0) {
            return invalid(format!("cutoff needs r ≥ 0 and w > 0, got ({radius}, {width})"));
        }
        Ok(Cutoff { radius, width })
    }

    pub fn value(&self, x: f64) -> f64 {
        let z = 1.0 - (x.abs() - self.radius) / self.width;
        if z >= 1.0 {
            1.0
        } else if z <= 0.0 {
            0.0
        } else {
            (z * z * z * (10.0 - 15.0 * z + 6.0 * z * z)).clamp(0.0, 1.0)
        }
    }

    /// `sup|ψ'| = 15/(8w)`.
    pub fn lipschitz(&self) -> f64 {
        15.0 / (8.0 * self.width)
    }

    pub fn on(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.value(x))
    }
}

/// Potentials, terminal datum and horizon of the backward dual problem.
#[derive(Debug, Clone)]
pub struct DualPDEProblem {
    /// `F ≥ 0` on the grid.
    pub f: GridFunction,
    /// Bounded extra potential.
    pub h: GridFunction,
    pub terminal: GridFunction,
    pub t_fin: f64,
    /// Overall horizon `T ≥ t_fin`; `φ = ψ` on `[t_fin, T]`.
    pub horizon: f64,
}

impl DualPDEProblem {
    pub fn new(f: GridFunction, h: GridFunction, terminal: GridFunction, t_fin: f64, horizon: f64) -> Result<Self> {
        if !(t_fin > 0.0) || !(horizon >= t_fin) {
            return invalid(format!("need 0 < t_fin ≤ T, got t_fin = {t_fin}, T = {horizon}"));
        }
        if !f.grid.same_as(&h.grid) || !f.grid.same_as(&terminal.grid) {
            return invalid("potentials and terminal datum must share a grid");
        }
        if let Some(v) = f.values.iter().find(|v| !(**v >= 0.0)) {
            return invalid(format!("F must be nonnegative, found {v}"));
        }
        if terminal.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("terminal datum must take values in [0, 1]");
        }
        Ok(DualPDEProblem { f, h, terminal, t_fin, horizon })
    }
}

/// Stored slices of `φ` on `[0, t_fin]`, ascending in `t`, with `∂tφ` from
/// the scheme's stencil.
#[derive(Debug, Clone)]
pub struct DualField {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub values: Vec<GridFunction>,
    pub time_derivative: Vec<GridFunction>,
    pub terminal: GridFunction,
    pub t_fin: f64,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
}

impl DualField {
    /// Slice nearest to `t`; `ψ` for `t ≥ t_fin`.
    pub fn at(&self, t: f64) -> &GridFunction {
        if t >= self.t_fin {
            return &self.terminal;
        }
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(k, _)| k);
        &self.values[k]
    }

    pub fn initial(&self) -> &GridFunction {
        &self.values[0]
    }

    /// `max_t (‖φ_t‖_∞ + ‖∇φ_t‖_∞)` with one-sided differences.
    pub fn w1inf_sup(&self) -> f64 {
        self.values.iter().map(w1inf_norm).fold(0.0, f64::max)
    }

    /// Columns `t, x, phi`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "x", "phi"]);
        for (time, s) in self.times.iter().zip(&self.values) {
            for (i, v) in s.values.iter().enumerate() {
                t.rows.push(vec![(*time).into(), self.grid.center(i).into(), (*v).into()]);
            }
        }
        t
    }
}

/// `max|u| + max|u_{i+1} − u_i|/Δx`.
pub fn w1inf_norm(u: &GridFunction) -> f64 {
    u.linf_norm() + lipschitz_on_grid(u)
}

pub fn lipschitz_on_grid(u: &GridFunction) -> f64 {
    let dx = u.dx();
    u.values.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max)
}

/// Number of stored time intervals of [`solve_dual_backward`].
pub const DUAL_SLICES: usize = 100;

/// Solves the dual problem backward from `t_fin` with the explicit stencil
/// of the viscous solver (diffusion `½`, zero velocity, zero-gradient edges).
pub fn solve_dual_backward(prob: &DualPDEProblem, cfl: f64) -> Result<DualField> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return invalid(format!("CFL number must lie in (0, 1), got {cfl}"));
    }
    let grid = prob.f.grid;
    let n = grid.len();
    let dx = grid.spacing();
    let potential: Vec<f64> = prob.f.values.iter().zip(&prob.h.values).map(|(a, b)| a + b).collect();
    let vmax = potential.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if !vmax.is_finite() {
        return invalid("potential is not finite");
    }
    let dt_max = cfl / (1.0 / (dx * dx) + vmax);
    let per_slice = ((prob.t_fin / dt_max) / DUAL_SLICES as f64).ceil().max(1.0) as usize;
    let steps = per_slice * DUAL_SLICES;
    let dt = prob.t_fin / steps as f64;
    let zeros = vec![0.0; n];
    let rate = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let vm = if i > 0 { v[i - 1] } else { v[0] };
                let vp = if i + 1 < n { v[i + 1] } else { v[n - 1] };
                0.5 * (vp - 2.0 * v[i] + vm) / (dx * dx) + potential[i] * v[i]
            })
            .collect()
    };
    let mut v = prob.terminal.values.clone();
    let mut scratch = vec![0.0; n];
    // slices collected in reversed time s = t_fin − t, where ∂sφ = ½φ'' + Vφ = −∂tφ
    let mut rev_values = vec![v.clone()];
    let mut rev_dt = vec![rate(&v).iter().map(|r| -r).collect::<Vec<_>>()];
    for k in 1..=steps {
        explicit_step(&v, &mut scratch, &zeros, &zeros, Some(&potential), 0.5, dt, dx, Boundary::Outflow);
        std::mem::swap(&mut v, &mut scratch);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(Error::SchemeMonotonicityViolation { min, t: prob.t_fin - k as f64 * dt });
        }
        if k % per_slice == 0 {
            rev_values.push(v.clone());
            rev_dt.push(rate(&v).iter().map(|r| -r).collect());
        }
    }
    let field = |values: Vec<f64>| GridFunction { grid, values };
    let times = (0..=DUAL_SLICES).map(|j| prob.t_fin - (DUAL_SLICES - j) as f64 * per_slice as f64 * dt).collect::<Vec<_>>();
    let mut times = times;
    times[DUAL_SLICES] = prob.t_fin;
    times[0] = 0.0;
    Ok(DualField {
        grid,
        times,
        values: rev_values.into_iter().rev().map(field).collect(),
        time_derivative: rev_dt.into_iter().rev().map(field).collect(),
        terminal: prob.terminal.clone(),
        t_fin: prob.t_fin,
        horizon: prob.horizon,
        dt,
        steps,
    })
}

/// Monte Carlo estimate of
/// `E[exp(∫₀ᵗ (g + h)(x + W_r − W_t) dr) · data(x − W_t)]` with a trapezoid
/// rule on `n_steps` intervals; sample `i` uses stream `i` of `seed`.
/// Returns `(estimate, stderr)`.
#[allow(clippy::too_many_arguments)]
pub fn feynman_kac<G, H, D>(g: G, h: H, data: D, t: f64, x: f64, n_samples: usize, seed: u64, n_steps: usize) -> Result<(f64, f64)>
where
    G: Fn(f64) -> f64 + Sync,
    H: Fn(f64) -> f64 + Sync,
    D: Fn(f64) -> f64 + Sync,
{
    if n_samples < 100 {
        return invalid(format!("need at least 100 samples, got {n_samples}"));
    }
    if !(t > 0.0) || n_steps == 0 {
        return invalid(format!("need t > 0 and at least one step, got t = {t}, {n_steps} steps"));
    }
    let dt = t / n_steps as f64;
    let scale = dt.sqrt();
    let sample = |i: usize| {
        let rng = CounterRng::new(seed, i as u64);
        let mut w = Vec::with_capacity(n_steps + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for k in 0..n_steps {
            acc += scale * rng.normal(k as u64);
            w.push(acc);
        }
        let wt = w[n_steps];
        let pot = |r: usize| {
            let y = x + w[r] - wt;
            g(y) + h(y)
        };
        let mut integral = 0.0;
        let mut prev = pot(0);
        for r in 1..=n_steps {
            let next = pot(r);
            integral += 0.5 * dt * (prev + next);
            prev = next;
        }
        integral.exp() * data(x - wt)
    };
    let values: Vec<f64> = (0..n_samples).into_par_iter().map(sample).collect();
    let n = n_samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Norms entering the explicit `W^{1,∞}` bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialNorms {
    /// `‖g‖_{L^p}`.
    pub g_lp: f64,
    pub p: f64,
    /// `‖h‖_∞`.
    pub h_inf: f64,
}

/// `(‖ψ‖_∞, ‖∇ψ‖_∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatumNorms {
    pub sup: f64,
    pub lipschitz: f64,
}

/// Explicit bound `(M_∞, M_∇)` on `sup_t ‖φ_t‖_∞` and `sup_t ‖∇φ_t‖_∞` for
/// `∂tφ = ½∂xxφ + (g + h)φ` on `[0, T]` in one dimension.
///
/// With `c_m = ‖p_1‖_m`, `c'_m = ‖∇p_1‖_m` and `q = p/(p−1)`:
/// `A = 3(c_q² ‖g‖_p² T^{1−1/p}/(1−1/p) + ‖h‖² T)`, `M_∞ = √3 ‖φ₀‖_∞ e^{AT/2}` and
/// `M_∇ = ‖∇φ₀‖_∞ + M_∞ (2c'_q ‖g‖_p T^{(1−1/p)/2}/(1−1/p) + 2c'_1 ‖h‖ √T)`.
pub fn w1inf_bound(norms: PotentialNorms, datum: DatumNorms, horizon: f64) -> Result<(f64, f64)> {
    if !(norms.p > 1.0) {
        return invalid(format!("the bound needs p > 1, got {}", norms.p));
    }
    let q = conjugate(norms.p);
    let a = 1.0 - 1.0 / norms.p;
    let cq = heat_kernel_norm(1.0, q, 1, false)?;
    let cq_grad = heat_kernel_norm(1.0, q, 1, true)?;
    let c1_grad = heat_kernel_norm(1.0, 1.0, 1, true)?;
    let t = horizon;
    let big_a = 3.0 * (cq * cq * norms.g_lp * norms.g_lp * t.powf(a) / a + norms.h_inf * norms.h_inf * t);
    let m_inf = 3f64.sqrt() * datum.sup * (0.5 * big_a * t).exp();
    let m_grad = datum.lipschitz
        + m_inf * (2.0 * cq_grad * norms.g_lp * t.powf(0.5 * a) / a + 2.0 * c1_grad * norms.h_inf * t.sqrt());
    Ok((m_inf, m_grad))
}

/// Measured `max_t ‖φ_t‖_{W^{1,∞}}` against the explicit bound.
pub fn w1inf_certificate(phi: &DualField, norms: PotentialNorms, datum: DatumNorms) -> Result<Certificate> {
    let (m_inf, m_grad) = w1inf_bound(norms, datum, phi.t_fin)?;
    let sup = phi.values.iter().map(|s| s.linf_norm()).fold(0.0, f64::max);
    let grad = phi.values.iter().map(lipschitz_on_grid).fold(0.0, f64::max);
    let mut c = Certificate::new("w1inf");
    c.at_most("phi_w1inf", sup + grad, m_inf + m_grad)
        .record("phi_sup", sup)
        .record("phi_grad_sup", grad)
        .record("bound_sup", m_inf)
        .record("bound_grad", m_grad)
        .record("g_lp", norms.g_lp)
        .record("h_inf", norms.h_inf);
    Ok(c)
}

/// Relative tolerance of [`gronwall_certificate`].
pub const GRONWALL_TOLERANCE: f64 = 0.05;

/// `sup` over stored `(t, x)` slices in `[0, t_fin]` and a ξ lattice on
/// `[−R, R]` of `∂tφ + ½∂xxφ + ∂x(b(x, ξ)φ)`, compared to `C_target`
/// (default `‖b‖_∞ ‖∇φ‖_∞`) with a 5% tolerance.
pub fn gronwall_certificate(phi: &DualField, b: &FluxField, r: f64, c_target: Option<f64>) -> Result<Certificate> {
    if !(r >= 0.0) || r > b.support_radius() * (1.0 + 1e-12) {
        return invalid(format!("R = {r} exceeds the flux state bound {}", b.support_radius()));
    }
    let grid = phi.grid;
    let n = grid.len();
    let dx = grid.spacing();
    let xs = grid.centers();
    let xis = crate::flux::xi_lattice(r, 33);
    let grad_sup = phi.values.iter().map(lipschitz_on_grid).fold(0.0, f64::max);
    let target = match c_target {
        Some(c) => c,
        None => b.linf_bound() * grad_sup,
    };
    let mut sup = f64::NEG_INFINITY;
    for (s, dt) in phi.values.iter().zip(&phi.time_derivative) {
        let v = &s.values;
        for i in 1..n - 1 {
            let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (dx * dx);
            let grad = (v[i + 1] - v[i - 1]) / (2.0 * dx);
            let base = dt.values[i] + 0.5 * lap;
            for xi in &xis {
                let lhs = base + b.eval(xs[i], *xi) * grad + b.div_x(xs[i], *xi) * v[i];
                sup = sup.max(lhs);
            }
        }
    }
    let mut c = Certificate::new("gronwall");
    c.at_most("lhs_sup", sup, target * (1.0 + GRONWALL_TOLERANCE) + 1e-12)
        .record("c_target", target)
        .record("grad_sup", grad_sup)
        .record("b_linf", b.linf_bound());
    Ok(c)
}
