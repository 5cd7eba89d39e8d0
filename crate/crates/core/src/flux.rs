//! Flux fields `b(x, ξ)`, their mollifications and divergence data, and the
//! capped square-root model with its two closed-form entropy solutions.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::mollifier::{self, MollifierSpec};
use crate::quadrature::{gl32, integrate};

/// Integrability exponent recorded for the model flux (any `1 < p < 2` works).
pub const MODEL_P_EXPONENT: f64 = 1.5;

/// One-dimensional spatial profile.
#[derive(Debug, Clone)]
enum Profile {
    Const(f64),
    Linear { slope: f64, offset: f64 },
    /// `scale · sgn(x) · min(√|x|, cap)`
    CappedRoot { cap: f64, scale: f64 },
    Table(Arc<HermiteTable>),
    /// `x ↦ inner(x + shift)`
    Shifted { inner: Box<Profile>, shift: f64 },
}

impl Profile {
    fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Const(c) => *c,
            Profile::Linear { slope, offset } => slope * x + offset,
            Profile::CappedRoot { cap, scale } => {
                if x == 0.0 {
                    0.0
                } else {
                    scale * x.signum() * x.abs().sqrt().min(*cap)
                }
            }
            Profile::Table(t) => t.value(x),
            Profile::Shifted { inner, shift } => inner.value(x + shift),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            Profile::Const(_) => 0.0,
            Profile::Linear { slope, .. } => *slope,
            Profile::CappedRoot { cap, scale } => {
                let a = x.abs();
                if a == 0.0 || a >= cap * cap {
                    0.0
                } else {
                    0.5 * scale / a.sqrt()
                }
            }
            Profile::Table(t) => t.deriv(x),
            Profile::Shifted { inner, shift } => inner.deriv(x + shift),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match self {
            Profile::CappedRoot { cap, .. } => vec![-cap * cap, 0.0, cap * cap],
            Profile::Shifted { inner, shift } => inner.kinks().into_iter().map(|k| k - shift).collect(),
            _ => Vec::new(),
        }
    }

    fn sup_abs(&self) -> f64 {
        match self {
            Profile::Const(c) => c.abs(),
            Profile::Linear { slope, offset } => {
                if *slope == 0.0 {
                    offset.abs()
                } else {
                    f64::INFINITY
                }
            }
            Profile::CappedRoot { cap, scale } => (scale * cap).abs(),
            Profile::Table(t) => t.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            Profile::Shifted { inner, .. } => inner.sup_abs(),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Profile::Const(c) if *c == 0.0)
    }

    fn mollified(&self, eps: f64) -> Profile {
        match self {
            // the even kernel reproduces affine functions
            Profile::Const(_) | Profile::Linear { .. } => self.clone(),
            Profile::CappedRoot { cap, scale } => {
                let (cap, scale) = (*cap, *scale);
                let h = eps / 32.0;
                let reach = cap * cap + eps + 2.0 * h;
                let table = HermiteTable::build(-reach, reach, h, |x| {
                    capped_root_mollified(cap, scale, eps, x)
                });
                Profile::Table(Arc::new(table))
            }
            Profile::Table(t) => {
                let h = t.h.min(eps / 32.0);
                let lo = t.x0 - eps - 2.0 * h;
                let hi = t.x0 + t.h * (t.values.len() - 1) as f64 + eps + 2.0 * h;
                let t = t.clone();
                let table = HermiteTable::build(lo, hi, h, |x| {
                    let v = integrate(-1.0, 1.0, |z| t.value(x - eps * z) * mollifier::kernel(z));
                    let d = integrate(-1.0, 1.0, |z| t.deriv(x - eps * z) * mollifier::kernel(z));
                    (v, d)
                });
                Profile::Table(Arc::new(table))
            }
            Profile::Shifted { inner, shift } => Profile::Shifted {
                inner: Box::new(inner.mollified(eps)),
                shift: *shift,
            },
        }
    }
}

/// Convolution of the capped root with `ρ_ε` and its derivative, by Gauss
/// rules on pieces where the substitution `y = ±s²` makes the integrand a
/// polynomial (so the rule is exact up to rounding).
fn capped_root_mollified(cap: f64, scale: f64, eps: f64, x: f64) -> (f64, f64) {
    let k2 = cap * cap;
    let (a, b) = (x - eps, x + eps);
    let mut cuts = vec![a];
    for c in [-k2, 0.0, k2] {
        if c > a && c < b {
            cuts.push(c);
        }
    }
    cuts.push(b);
    let mut val = 0.0;
    let mut der = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        if mid.abs() >= k2 {
            let s = scale * cap * mid.signum();
            val += s * integrate(lo, hi, |y| mollifier::scaled(x - y, eps));
            der += s * integrate(lo, hi, |y| mollifier::scaled_deriv(x - y, eps));
        } else if mid > 0.0 {
            let (s0, s1) = (lo.sqrt(), hi.sqrt());
            val += integrate(s0, s1, |s| scale * s * mollifier::scaled(x - s * s, eps) * 2.0 * s);
            der += integrate(s0, s1, |s| scale * s * mollifier::scaled_deriv(x - s * s, eps) * 2.0 * s);
        } else {
            let (s0, s1) = ((-hi).sqrt(), (-lo).sqrt());
            val -= integrate(s0, s1, |s| scale * s * mollifier::scaled(x + s * s, eps) * 2.0 * s);
            der -= integrate(s0, s1, |s| scale * s * mollifier::scaled_deriv(x + s * s, eps) * 2.0 * s);
        }
    }
    (val, der)
}

/// Cubic Hermite interpolant on a uniform lattice, constant beyond its ends.
#[derive(Debug, Clone)]
struct HermiteTable {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl HermiteTable {
    fn build(lo: f64, hi: f64, h: f64, f: impl Fn(f64) -> (f64, f64) + Sync) -> Self {
        let n = ((hi - lo) / h).ceil() as usize + 1;
        let pairs: Vec<(f64, f64)> = (0..n).into_par_iter().map(|i| f(lo + i as f64 * h)).collect();
        let (values, derivs) = pairs.into_iter().unzip();
        HermiteTable { x0: lo, h, values, derivs }
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.x0) / self.h;
        let last = self.values.len() - 1;
        if !(s >= 0.0) || s >= last as f64 {
            return None;
        }
        let k = s.floor() as usize;
        Some((k, s - k as f64))
    }

    fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, t)) => {
                let (t2, t3) = (t * t, t * t * t);
                (2.0 * t3 - 3.0 * t2 + 1.0) * self.values[k]
                    + (t3 - 2.0 * t2 + t) * self.h * self.derivs[k]
                    + (-2.0 * t3 + 3.0 * t2) * self.values[k + 1]
                    + (t3 - t2) * self.h * self.derivs[k + 1]
            }
            None if x < self.x0 => self.values[0],
            None => self.values[self.values.len() - 1],
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, t)) => {
                let t2 = t * t;
                (6.0 * t2 - 6.0 * t) * (self.values[k] - self.values[k + 1]) / self.h
                    + (3.0 * t2 - 4.0 * t + 1.0) * self.derivs[k]
                    + (3.0 * t2 - 2.0 * t) * self.derivs[k + 1]
            }
            None => 0.0,
        }
    }
}

/// Samples `(x, ξ, b, div_b)` on a tensor lattice, bilinearly interpolated
/// and clamped to the lattice outside it.
#[derive(Debug, Clone)]
pub struct FluxTable {
    xs: Vec<f64>,
    xis: Vec<f64>,
    b: Vec<f64>,
    div_b: Vec<f64>,
}

impl FluxTable {
    /// Builds a table from unordered rows; every `(x, ξ)` pair must appear once.
    pub fn from_rows(rows: &[[f64; 4]]) -> Result<Self> {
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut xis: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        for v in xs.iter_mut().chain(xis.iter_mut()) {
            if !v.is_finite() {
                return invalid("non-finite flux table coordinate");
            }
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xis.sort_by(f64::total_cmp);
        xis.dedup();
        if xs.len() < 2 || xis.len() < 2 {
            return invalid("flux table needs at least two x and two ξ values");
        }
        if xs.len() * xis.len() != rows.len() {
            return invalid(format!(
                "flux table has {} rows, expected a full {}×{} lattice",
                rows.len(),
                xs.len(),
                xis.len()
            ));
        }
        let mut b = vec![f64::NAN; rows.len()];
        let mut div_b = vec![f64::NAN; rows.len()];
        for r in rows {
            let i = xs.binary_search_by(|v| v.total_cmp(&r[0])).unwrap();
            let j = xis.binary_search_by(|v| v.total_cmp(&r[1])).unwrap();
            let k = i * xis.len() + j;
            if !b[k].is_nan() {
                return invalid(format!("duplicate flux table entry at ({}, {})", r[0], r[1]));
            }
            b[k] = r[2];
            div_b[k] = r[3];
        }
        Ok(FluxTable { xs, xis, b, div_b })
    }

    /// Reads a CSV with header `x,xi,b,div_b`.
    pub fn load(path: &Path) -> Result<Self> {
        let ctx = || format!("reading flux table {}", path.display());
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv { context: ctx(), source: e })?;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv { context: ctx(), source: e })?;
            let mut row = [0.0; 4];
            for (k, slot) in row.iter_mut().enumerate() {
                let field = rec.get(k).ok_or_else(|| Error::InvalidParameter(format!("{}: short row", ctx())))?;
                *slot = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("{}: bad number {field:?}", ctx())))?;
            }
            rows.push(row);
        }
        FluxTable::from_rows(&rows)
    }

    fn bracket(axis: &[f64], v: f64) -> (usize, f64) {
        let n = axis.len();
        if v <= axis[0] {
            return (0, 0.0);
        }
        if v >= axis[n - 1] {
            return (n - 2, 1.0);
        }
        let k = axis.partition_point(|a| *a <= v) - 1;
        (k, (v - axis[k]) / (axis[k + 1] - axis[k]))
    }

    fn interp(&self, data: &[f64], x: f64, xi: f64) -> f64 {
        let (i, s) = Self::bracket(&self.xs, x);
        let (j, t) = Self::bracket(&self.xis, xi);
        let m = self.xis.len();
        let at = |a: usize, b: usize| data[a * m + b];
        (1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1))
            + s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1))
    }

    fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn xi_bound(&self) -> f64 {
        self.xis[0].abs().min(self.xis[self.xis.len() - 1].abs())
    }

    fn sup_abs(&self) -> f64 {
        self.b.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `b(x, ξ) = offset(x) + slope(x)·ξ`
    StateAffine { offset: Profile, slope: Profile },
    Table { table: Arc<FluxTable>, shift: f64 },
    MollifiedTable { table: Arc<FluxTable>, shift: f64, spec: MollifierSpec },
}

/// Flux field `b(x, ξ)` with its spatial divergence and norm metadata.
///
/// Immutable once built; clones share their tabulated data.
#[derive(Debug, Clone)]
pub struct FluxField {
    kind: Kind,
    name: String,
    support_radius: f64,
    linf_bound: f64,
    p_exponent: f64,
    window: Option<(f64, f64)>,
}

impl FluxField {
    fn state_affine(name: &str, offset: Profile, slope: Profile, r: f64, p: f64) -> Self {
        let linf_bound = offset.sup_abs() + r * slope.sup_abs();
        FluxField {
            kind: Kind::StateAffine { offset, slope },
            name: name.to_string(),
            support_radius: r,
            linf_bound,
            p_exponent: p,
            window: None,
        }
    }

    /// `b(x, ξ) = c`.
    pub fn constant(c: f64) -> Self {
        Self::state_affine("constant", Profile::Const(c), Profile::Const(0.0), 1.0, MODEL_P_EXPONENT)
    }

    /// `b(x, ξ) = scale·ξ`, the velocity of `∂t u + ∂x(scale·u²/2) = 0`.
    pub fn burgers_like(scale: f64) -> Self {
        Self::state_affine("burgers_like", Profile::Const(0.0), Profile::Const(scale), 1.0, MODEL_P_EXPONENT)
    }

    /// `b(x, ξ) = ax·x + axi·ξ + c`; unbounded unless a window is declared.
    pub fn affine(ax: f64, axi: f64, c: f64) -> Self {
        Self::state_affine(
            "affine",
            Profile::Linear { slope: ax, offset: c },
            Profile::Const(axi),
            1.0,
            MODEL_P_EXPONENT,
        )
    }

    /// Custom tabulated field; the state bound is the smaller end of the ξ range.
    pub fn custom_table(table: FluxTable) -> Self {
        let (lo, hi) = table.x_range();
        let r = table.xi_bound();
        FluxField {
            linf_bound: table.sup_abs(),
            kind: Kind::Table { table: Arc::new(table), shift: 0.0 },
            name: "custom_table".into(),
            support_radius: r,
            p_exponent: MODEL_P_EXPONENT,
            window: Some((lo, hi)),
        }
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match &self.kind {
            Kind::StateAffine { offset, slope } => offset.value(x) + slope.value(x) * xi,
            Kind::Table { table, shift } => table.interp(&table.b, x + shift, xi),
            Kind::MollifiedTable { table, shift, spec } => {
                tensor_mollify(spec, |y, z| table.interp(&table.b, y + shift, z), x, xi)
            }
        }
    }

    pub fn div_x(&self, x: f64, xi: f64) -> f64 {
        match &self.kind {
            Kind::StateAffine { offset, slope } => offset.deriv(x) + slope.deriv(x) * xi,
            Kind::Table { table, shift } => table.interp(&table.div_b, x + shift, xi),
            Kind::MollifiedTable { table, shift, spec } => {
                tensor_mollify(spec, |y, z| table.interp(&table.div_b, y + shift, z), x, xi)
            }
        }
    }

    /// `B(x, w) = ∫₀ʷ b(x, v) dv`.
    pub fn primitive(&self, x: f64, w: f64) -> f64 {
        match &self.kind {
            Kind::StateAffine { offset, slope } => offset.value(x) * w + 0.5 * slope.value(x) * w * w,
            _ => signed_integral(w, |v| self.eval(x, v)),
        }
    }

    /// `(∂x B)(x, w) = ∫₀ʷ div_x b(x, v) dv`.
    pub fn primitive_div(&self, x: f64, w: f64) -> f64 {
        match &self.kind {
            Kind::StateAffine { offset, slope } => offset.deriv(x) * w + 0.5 * slope.deriv(x) * w * w,
            _ => signed_integral(w, |v| self.div_x(x, v)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
    pub fn linf_bound(&self) -> f64 {
        self.linf_bound
    }
    pub fn p_exponent(&self) -> f64 {
        self.p_exponent
    }
    pub fn window(&self) -> Option<(f64, f64)> {
        self.window
    }

    /// Points where `div_x` is undefined.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::StateAffine { offset, slope } => {
                let mut k = offset.kinks();
                k.extend(slope.kinks());
                k.sort_by(f64::total_cmp);
                k.dedup();
                k
            }
            _ => Vec::new(),
        }
    }

    /// Same field with a new state bound `R`; the sup bound is recomputed.
    pub fn with_support_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return invalid(format!("support radius must be positive, got {r}"));
        }
        self.support_radius = r;
        if let Kind::StateAffine { offset, slope } = &self.kind {
            self.linf_bound = offset.sup_abs() + r * slope.sup_abs();
        }
        Ok(self)
    }

    /// Declares the spatial working window, which also bounds `linf_bound`
    /// for fields growing in x.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return invalid(format!("window [{lo}, {hi}] is empty"));
        }
        self.window = Some((lo, hi));
        if !self.linf_bound.is_finite() {
            let r = self.support_radius;
            let mut m: f64 = 0.0;
            for x in [lo, hi] {
                for xi in [-r, r] {
                    m = m.max(self.eval(x, xi).abs());
                }
            }
            self.linf_bound = m;
        }
        Ok(self)
    }

    /// `x ↦ b(x + a, ·)`.
    pub fn shifted(&self, a: f64) -> FluxField {
        let kind = match &self.kind {
            Kind::StateAffine { offset, slope } => Kind::StateAffine {
                offset: shift_profile(offset, a),
                slope: shift_profile(slope, a),
            },
            Kind::Table { table, shift } => Kind::Table { table: table.clone(), shift: shift + a },
            Kind::MollifiedTable { table, shift, spec } => Kind::MollifiedTable {
                table: table.clone(),
                shift: shift + a,
                spec: *spec,
            },
        };
        FluxField {
            kind,
            name: self.name.clone(),
            window: self.window.map(|(lo, hi)| (lo - a, hi - a)),
            ..*self
        }
    }

    /// True when `b` does not depend on ξ at all and vanishes identically.
    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, Kind::StateAffine { offset, slope } if offset.is_zero() && slope.is_zero())
    }
}

fn shift_profile(p: &Profile, a: f64) -> Profile {
    match p {
        Profile::Const(_) => p.clone(),
        Profile::Shifted { inner, shift } => Profile::Shifted { inner: inner.clone(), shift: shift + a },
        _ => Profile::Shifted { inner: Box::new(p.clone()), shift: a },
    }
}

fn signed_integral(w: f64, f: impl Fn(f64) -> f64) -> f64 {
    if w >= 0.0 {
        integrate(0.0, w, f)
    } else {
        -integrate(w, 0.0, f)
    }
}

fn tensor_mollify(spec: &MollifierSpec, f: impl Fn(f64, f64) -> f64, x: f64, xi: f64) -> f64 {
    let (nodes, weights) = gl32();
    let mut acc = 0.0;
    for (z, wz) in nodes.iter().zip(weights) {
        let kz = wz * mollifier::kernel(*z);
        let mut inner = 0.0;
        for (e, we) in nodes.iter().zip(weights) {
            inner += we * mollifier::kernel(*e) * f(x - spec.eps_x * z, xi - spec.delta_xi * e);
        }
        acc += kz * inner;
    }
    acc
}

/// Model field `b(x, u) = 2·sgn(x)·min(√|x|, K)·u` with state bound 1.
pub fn model_flux(k: f64) -> Result<FluxField> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("cap K must be positive, got {k}"));
    }
    Ok(FluxField::state_affine(
        "model",
        Profile::Const(0.0),
        Profile::CappedRoot { cap: k, scale: 2.0 },
        1.0,
        MODEL_P_EXPONENT,
    ))
}

/// Convolution of `b` with `ρ_ε(x)·ρ̄_δ(ξ)`.
///
/// Fields affine in ξ are convolved in x only, which is exact for the even
/// kernel; tabulated fields use a 32×32 tensor Gauss rule per evaluation.
pub fn mollify_flux(b: &FluxField, spec: MollifierSpec) -> Result<FluxField> {
    let spec = MollifierSpec::new(spec.eps_x, spec.delta_xi)?;
    if let Some((lo, hi)) = b.window {
        if 2.0 * spec.eps_x > hi - lo {
            return invalid(format!(
                "mollifier scale {} exceeds the working window [{lo}, {hi}]",
                spec.eps_x
            ));
        }
    }
    let kind = match &b.kind {
        Kind::StateAffine { offset, slope } => Kind::StateAffine {
            offset: offset.mollified(spec.eps_x),
            slope: slope.mollified(spec.eps_x),
        },
        Kind::Table { table, shift } => Kind::MollifiedTable { table: table.clone(), shift: *shift, spec },
        Kind::MollifiedTable { .. } => return invalid("tabulated field is already mollified"),
    };
    Ok(FluxField {
        kind,
        name: format!("{}~{}", b.name, spec.eps_x),
        window: b.window,
        ..*b
    })
}

/// `F(x) = sup_{|ξ| ≤ R} |div_x b(x, ξ)|` sampled on a spatial grid.
#[derive(Debug, Clone)]
pub struct DivergenceProfile {
    pub values: GridFunction,
    /// Cells within half a cell of a kink; their value is recorded as 0.
    pub skipped: Vec<usize>,
    pub p: f64,
    /// `(Σ F^p Δx)^{1/p}` over the grid.
    pub lp_norm: f64,
}

/// Number of vertex-centered ξ points used for the supremum.
pub const DIVERGENCE_XI_POINTS: usize = 65;

pub fn xi_lattice(r: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| -r + 2.0 * r * j as f64 / (n - 1) as f64).collect()
}

pub fn divergence_sup(b: &FluxField, r: f64, grid: &Grid) -> Result<DivergenceProfile> {
    if !(r >= 0.0) || r > b.support_radius * (1.0 + 1e-12) {
        return invalid(format!("R = {r} exceeds the flux state bound {}", b.support_radius));
    }
    let xis = xi_lattice(r, DIVERGENCE_XI_POINTS);
    let kinks = b.kinks();
    let half = 0.5 * grid.spacing();
    let mut skipped = Vec::new();
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            if kinks.iter().any(|k| (x - k).abs() <= half) {
                skipped.push(i);
                return 0.0;
            }
            xis.iter().fold(0.0, |m: f64, xi| m.max(b.div_x(x, *xi).abs()))
        })
        .collect();
    let p = b.p_exponent;
    let lp_norm = (values.iter().map(|v| v.powf(p)).sum::<f64>() * grid.spacing()).powf(1.0 / p);
    Ok(DivergenceProfile {
        values: GridFunction { grid: *grid, values },
        skipped,
        p,
        lp_norm,
    })
}

/// Which closed-form entropy solution of the model problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceVariant {
    /// Support `[0, (t/2+1)²]`.
    U1,
    /// Support `[-(t/2)², (t/2+1)²]`.
    U2,
}

impl ReferenceVariant {
    pub fn from_index(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ReferenceVariant::U1),
            2 => Ok(ReferenceVariant::U2),
            _ => invalid(format!("reference variant must be 1 or 2, got {v}")),
        }
    }

    /// Support interval at time `t`.
    pub fn support(self, t: f64) -> (f64, f64) {
        let right = (0.5 * t + 1.0).powi(2);
        match self {
            ReferenceVariant::U1 => (0.0, right),
            ReferenceVariant::U2 => (-(0.5 * t).powi(2), right),
        }
    }
}

/// Value of the closed-form solution with data `1_{[0,1]}` for the model field.
pub fn reference_solutions(variant: ReferenceVariant, t: f64, x: f64, k: f64, t_max: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= t_max) {
        return invalid(format!("t = {t} outside [0, {t_max}]"));
    }
    if !(k > 0.5 * t_max + 1.0) {
        return invalid(format!("cap K = {k} must exceed T/2 + 1 = {}", 0.5 * t_max + 1.0));
    }
    let (lo, hi) = variant.support(t);
    Ok(if x >= lo && x <= hi { 1.0 } else { 0.0 })
}

/// The closed-form solution sampled on a grid.
pub fn reference_grid_function(variant: ReferenceVariant, t: f64, grid: &Grid, k: f64, t_max: f64) -> Result<GridFunction> {
    reference_solutions(variant, t, 0.0, k, t_max)?;
    let (lo, hi) = variant.support(t);
    Ok(GridFunction::from_fn(*grid, |x| if x >= lo && x <= hi { 1.0 } else { 0.0 }))
}

/// Exact `∫|u¹ − u²| dx` of the cell averages of the closed forms on `grid`.
pub fn reference_gap_cell_average(t: f64, grid: &Grid, k: f64, t_max: f64) -> Result<f64> {
    reference_solutions(ReferenceVariant::U1, t, 0.0, k, t_max)?;
    let dx = grid.spacing();
    let avg = |v: ReferenceVariant, i: usize| {
        let (lo, hi) = v.support(t);
        let a = grid.lo() + i as f64 * dx;
        let overlap = (hi.min(a + dx) - lo.max(a)).max(0.0);
        overlap / dx
    };
    Ok((0..grid.len())
        .map(|i| (avg(ReferenceVariant::U2, i) - avg(ReferenceVariant::U1, i)).abs())
        .sum::<f64>()
        * dx)
}
