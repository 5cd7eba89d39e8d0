//! Kinetic representation `χ(u, ξ) = 1_{ξ<u} − 1_{ξ<0}` and the tools built on it.

use rayon::prelude::*;

use crate::certificate::Certificate;
use crate::error::{invalid, Error, KineticFlag, Result};
use crate::flux::FluxField;
use crate::grid::{Grid, GridFunction};
use crate::mollifier;
use crate::table::Table;
use crate::testfn::Bump;

/// Tolerance used by [`gap_report`].
pub const DEFAULT_GAP_TOL: f64 = 1e-12;

/// Values `f(x_i, ξ_j)` stored row-major in x.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub x_grid: Grid,
    pub xi_grid: Grid,
    pub values: Vec<f64>,
}

/// Cell-centered ξ lattice on `[-R, R]` with spacing `dxi`, where `R` is
/// `u_max` rounded up to a whole cell.
pub fn xi_grid_covering(u_max: f64, dxi: f64) -> Result<Grid> {
    if !(dxi > 0.0) || !(u_max >= 0.0) {
        return invalid(format!("bad ξ lattice request (u_max {u_max}, Δξ {dxi})"));
    }
    let cells = ((u_max / dxi) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Grid::symmetric(cells as f64 * dxi, 2 * cells)
}

impl KineticField {
    pub fn new(x_grid: Grid, xi_grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != x_grid.len() * xi_grid.len() {
            return invalid("kinetic field size does not match its grids");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("kinetic field has non-finite values");
        }
        Ok(KineticField { x_grid, xi_grid, values })
    }

    pub fn from_fn(x_grid: Grid, xi_grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(x_grid.len() * xi_grid.len());
        for i in 0..x_grid.len() {
            let x = x_grid.center(i);
            for j in 0..xi_grid.len() {
                values.push(f(x, xi_grid.center(j)));
            }
        }
        KineticField { x_grid, xi_grid, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.xi_grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.xi_grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    fn same_grids(&self, other: &KineticField) -> bool {
        self.x_grid.same_as(&other.x_grid) && self.xi_grid.same_as(&other.xi_grid)
    }

    /// Pointwise `a·self + b·other` on matching grids.
    pub fn combine(&self, a: f64, other: &KineticField, b: f64) -> Result<KineticField> {
        if !self.same_grids(other) {
            return invalid("kinetic fields live on different grids");
        }
        let values = self.values.iter().zip(&other.values).map(|(u, v)| a * u + b * v).collect();
        Ok(KineticField { x_grid: self.x_grid, xi_grid: self.xi_grid, values })
    }

    /// Long-format table with columns `x, xi, f`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "xi", "f"]);
        for i in 0..self.x_grid.len() {
            for j in 0..self.xi_grid.len() {
                t.rows.push(vec![
                    self.x_grid.center(i).into(),
                    self.xi_grid.center(j).into(),
                    self.get(i, j).into(),
                ]);
            }
        }
        t
    }
}

/// `χ(u, ξ)`.
pub fn chi(u: f64, xi: f64) -> f64 {
    (xi < u) as i32 as f64 - (xi < 0.0) as i32 as f64
}

fn check_range(u: &GridFunction, xi_grid: &Grid) -> Result<()> {
    let r = xi_grid.hi().min(-xi_grid.lo());
    for (cell, v) in u.values.iter().enumerate() {
        if v.abs() > r {
            return Err(Error::StateOutOfRange { value: *v, bound: r, cell });
        }
    }
    Ok(())
}

/// `χ(u(x_i), ξ_j)` at cell centers.
pub fn chi_field(u: &GridFunction, xi_grid: &Grid) -> Result<KineticField> {
    check_range(u, xi_grid)?;
    let xis = xi_grid.centers();
    let mut values = Vec::with_capacity(u.values.len() * xis.len());
    for v in &u.values {
        values.extend(xis.iter().map(|xi| chi(*v, *xi)));
    }
    Ok(KineticField { x_grid: u.grid, xi_grid: *xi_grid, values })
}

/// ξ-cell averages of `χ(u(x_i), ·)`; fractional only in the cell holding `u`.
pub fn chi_field_cell_averaged(u: &GridFunction, xi_grid: &Grid) -> Result<KineticField> {
    check_range(u, xi_grid)?;
    let h = xi_grid.spacing();
    let mut values = Vec::with_capacity(u.values.len() * xi_grid.len());
    for v in &u.values {
        for j in 0..xi_grid.len() {
            let a = xi_grid.lo() + j as f64 * h;
            let b = a + h;
            // ∫_a^b χ(v, ξ) dξ = |[a,b] ∩ [0,v]| with the sign of v
            let (lo, hi) = if *v >= 0.0 { (0.0, *v) } else { (*v, 0.0) };
            let overlap = (hi.min(b) - lo.max(a)).max(0.0);
            values.push(v.signum() * overlap / h);
        }
    }
    Ok(KineticField { x_grid: u.grid, xi_grid: *xi_grid, values })
}

/// `u = Σ f Δξ` and `moment_p = p Σ |ξ|^{p−1} sgn(ξ) f Δξ`.
pub fn reconstruct_u(f: &KineticField, p: f64) -> (GridFunction, GridFunction) {
    let h = f.xi_grid.spacing();
    let weights: Vec<f64> = f
        .xi_grid
        .centers()
        .iter()
        .map(|xi| p * xi.abs().powf(p - 1.0) * xi.signum())
        .collect();
    let mut u = Vec::with_capacity(f.x_grid.len());
    let mut m = Vec::with_capacity(f.x_grid.len());
    for i in 0..f.x_grid.len() {
        let row = f.row(i);
        u.push(row.iter().sum::<f64>() * h);
        m.push(row.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() * h);
    }
    (
        GridFunction { grid: f.x_grid, values: u },
        GridFunction { grid: f.x_grid, values: m },
    )
}

/// Gap functional and generalized-kinetic flags of a candidate field.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub gap_total: f64,
    pub gap_density_max: f64,
    pub sign_ok: bool,
    pub bound_ok: bool,
    pub monotone_ok: bool,
    pub jump_ok: bool,
    pub tol: f64,
}

impl GapReport {
    pub fn flags_ok(&self) -> bool {
        self.sign_ok && self.bound_ok && self.monotone_ok && self.jump_ok
    }

    /// First violated condition when the gap itself must stay below `gap_tol`.
    pub fn first_failure(&self, gap_tol: f64) -> Option<KineticFlag> {
        if !self.bound_ok {
            Some(KineticFlag::Bound)
        } else if !self.sign_ok {
            Some(KineticFlag::Sign)
        } else if self.gap_total > gap_tol {
            Some(KineticFlag::Gap)
        } else if !self.monotone_ok {
            Some(KineticFlag::Monotone)
        } else if !self.jump_ok {
            Some(KineticFlag::Jump)
        } else {
            None
        }
    }

    pub fn to_certificate(&self) -> Certificate {
        let mut c = Certificate::new("gap_report");
        c.record("gap_total", self.gap_total)
            .record("gap_density_max", self.gap_density_max)
            .record("tol", self.tol)
            .at_least("sign", self.sign_ok as u8 as f64, 1.0)
            .at_least("bound", self.bound_ok as u8 as f64, 1.0)
            .at_least("monotone", self.monotone_ok as u8 as f64, 1.0)
            .at_least("jump", self.jump_ok as u8 as f64, 1.0);
        c
    }

    pub fn to_kv(&self) -> String {
        format!(
            "gap_total = {:?}\ngap_density_max = {:?}\nsign_ok = {}\nbound_ok = {}\nmonotone_ok = {}\njump_ok = {}\ntol = {:?}\n",
            self.gap_total, self.gap_density_max, self.sign_ok, self.bound_ok, self.monotone_ok, self.jump_ok, self.tol
        )
    }
}

pub fn gap_report(f: &KineticField) -> GapReport {
    gap_report_with_tol(f, DEFAULT_GAP_TOL)
}

pub fn gap_report_with_tol(f: &KineticField, tol: f64) -> GapReport {
    let xis = f.xi_grid.centers();
    let cell = f.x_grid.spacing() * f.xi_grid.spacing();
    let mut gap_total = 0.0;
    let mut gap_density_max: f64 = 0.0;
    let (mut sign_ok, mut bound_ok, mut monotone_ok, mut jump_ok) = (true, true, true, true);
    for i in 0..f.x_grid.len() {
        let row = f.row(i);
        let mut running_min = f64::INFINITY;
        for (j, &v) in row.iter().enumerate() {
            let g = v.abs() - v * v;
            gap_total += g;
            gap_density_max = gap_density_max.max(g);
            if xis[j].signum() * v < -tol {
                sign_ok = false;
            }
            if v.abs() > 1.0 + tol {
                bound_ok = false;
            }
            if j + 1 < row.len() && xis[j] * xis[j + 1] > 0.0 && v < row[j + 1] - tol {
                monotone_ok = false;
            }
            // f(ξ) − f(ξ + h) + 1 ≥ 0 for every h > 0
            if v - running_min > 1.0 + tol {
                jump_ok = false;
            }
            running_min = running_min.min(v);
        }
    }
    GapReport {
        gap_total: gap_total * cell,
        gap_density_max,
        sign_ok,
        bound_ok,
        monotone_ok,
        jump_ok,
        tol,
    }
}

/// Gap of `½(χ1 + χ2)` against `¼ ∫∫ |χ1 − χ2|²`.
pub fn pair_gap_identity(chi1: &KineticField, chi2: &KineticField) -> Result<(f64, f64)> {
    let avg = chi1.combine(0.5, chi2, 0.5)?;
    let lhs = gap_report(&avg).gap_total;
    let cell = chi1.x_grid.spacing() * chi1.xi_grid.spacing();
    let rhs = 0.25
        * chi1
            .values
            .iter()
            .zip(&chi2.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
        * cell;
    Ok((lhs, rhs))
}

/// Recovers `u` from a generalized kinetic field with vanishing gap and
/// returns it with the residual `‖f − χ(u)‖₁`.
pub fn reconstruct_from_generalized(f: &KineticField, tol: f64) -> Result<(GridFunction, f64)> {
    let report = gap_report_with_tol(f, tol);
    if let Some(flag) = report.first_failure(tol) {
        return Err(Error::NotAKineticFunction { flag });
    }
    let (u, _) = reconstruct_u(f, 1.0);
    let r = f.xi_grid.hi().min(-f.xi_grid.lo());
    let clamped = GridFunction {
        grid: u.grid,
        values: u.values.iter().map(|v| v.clamp(-r, r)).collect(),
    };
    let back = chi_field(&clamped, &f.xi_grid)?;
    let cell = f.x_grid.spacing() * f.xi_grid.spacing();
    let residual = f
        .values
        .iter()
        .zip(&back.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * cell;
    Ok((u, residual))
}

/// Quadrature of
/// `∫∫∫∫ f^{ε,δ}(x,ξ) f(y,ζ) ρ̄_δ(ξ−ζ) [ρ_ε'(x−y)(b(x,ξ) − b(y,ζ)) + ρ_ε(x−y) div_y b(y,ζ)] φ(x)`
/// on the grids of `f`, with `f^{ε,δ}` the discrete mollification of `f`.
pub fn commutator_error(b: &FluxField, f: &KineticField, eps: f64, delta: f64, phi: &Bump) -> Result<f64> {
    let (xg, zg) = (f.x_grid, f.xi_grid);
    let (dx, dxi) = (xg.spacing(), zg.spacing());
    if eps < 2.0 * dx || delta < 2.0 * dxi {
        return Err(Error::ResolutionInsufficient(format!(
            "(ε, δ) = ({eps}, {delta}) must span at least two cells (Δx = {dx}, Δξ = {dxi})"
        )));
    }
    if 2.0 * eps > xg.hi() - xg.lo() || 2.0 * delta > zg.hi() - zg.lo() {
        return invalid(format!("(ε, δ) = ({eps}, {delta}) exceed half the working window"));
    }
    let (sl, sh) = phi.support();
    if sl < xg.lo() + eps || sh > xg.hi() - eps {
        return invalid("test function support must stay one mollifier radius inside the x grid");
    }
    let (nx, nz) = (xg.len(), zg.len());
    let wx = mollifier::lattice_weights(eps, dx);
    let wdx = mollifier::lattice_deriv_weights(eps, dx);
    let wz = mollifier::lattice_weights(delta, dxi);
    let rx = (wx.len() / 2) as isize;
    let rz = (wz.len() / 2) as isize;
    let xs = xg.centers();
    let zs = zg.centers();
    let mut bv = vec![0.0; nx * nz];
    let mut dv = vec![0.0; nx * nz];
    bv.par_chunks_mut(nz).zip(dv.par_chunks_mut(nz)).enumerate().for_each(|(i, (brow, drow))| {
        for j in 0..nz {
            brow[j] = b.eval(xs[i], zs[j]);
            drow[j] = b.div_x(xs[i], zs[j]);
        }
    });
    let rows: Vec<usize> = (0..nx).filter(|&i| phi.value(xs[i]) != 0.0).collect();
    let partial: Vec<f64> = rows
        .par_iter()
        .map(|&i| {
            let phi_i = phi.value(xs[i]);
            let k_lo = (i as isize - rx).max(0) as usize;
            let k_hi = ((i as isize + rx) as usize).min(nx - 1);
            let mut row_sum = 0.0;
            for j in 0..nz {
                let l_lo = (j as isize - rz).max(0) as usize;
                let l_hi = ((j as isize + rz) as usize).min(nz - 1);
                let b_ij = bv[i * nz + j];
                let mut fmoll = 0.0;
                let mut inner = 0.0;
                for k in k_lo..=k_hi {
                    let off = (i as isize - k as isize + rx) as usize;
                    let (w, wd) = (wx[off], wdx[off]);
                    for l in l_lo..=l_hi {
                        let fkl = f.values[k * nz + l];
                        if fkl == 0.0 {
                            continue;
                        }
                        let wzl = wz[(j as isize - l as isize + rz) as usize];
                        fmoll += fkl * w * wzl;
                        inner += fkl * wzl * (wd * (b_ij - bv[k * nz + l]) + w * dv[k * nz + l]);
                    }
                }
                row_sum += fmoll * inner;
            }
            row_sum * phi_i
        })
        .collect();
    Ok(partial.iter().sum::<f64>() * dx * dxi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cell() -> Grid {
        Grid::new(0.0, 1.0, 1).unwrap()
    }

    #[test]
    fn chi_values() {
        assert_eq!(chi(1.0, 0.5), 1.0);
        assert_eq!(chi(-2.0, -1.0), -1.0);
        assert_eq!(chi(0.0, 0.3), 0.0);
        assert_eq!(chi(0.0, -0.3), 0.0);
    }

    #[test]
    fn chi_field_rejects_states_beyond_r() {
        let xi = Grid::symmetric(1.0, 8).unwrap();
        let u = GridFunction::new(unit_cell(), vec![1.5]).unwrap();
        assert!(matches!(chi_field(&u, &xi), Err(Error::StateOutOfRange { .. })));
    }

    #[test]
    fn reconstruct_constant_states() {
        let xi = Grid::symmetric(4.0, 64).unwrap();
        let u = GridFunction::new(unit_cell(), vec![3.0]).unwrap();
        let (r, _) = reconstruct_u(&chi_field(&u, &xi).unwrap(), 1.0);
        assert!((r.values[0] - 3.0).abs() <= xi.spacing());
        let u = GridFunction::new(unit_cell(), vec![2.0]).unwrap();
        let (_, m) = reconstruct_u(&chi_field(&u, &xi).unwrap(), 2.0);
        assert!((m.values[0] - 4.0).abs() <= 2.0 * xi.spacing());
    }

    #[test]
    fn gap_of_pair_on_unit_cell_is_a_quarter() {
        let xi = Grid::symmetric(2.0, 4).unwrap();
        let c1 = chi_field(&GridFunction::new(unit_cell(), vec![1.0]).unwrap(), &xi).unwrap();
        let c2 = chi_field(&GridFunction::new(unit_cell(), vec![2.0]).unwrap(), &xi).unwrap();
        let avg = c1.combine(0.5, &c2, 0.5).unwrap();
        let rep = gap_report(&avg);
        assert_eq!(rep.gap_total, 0.25);
        assert_eq!(rep.gap_density_max, 0.25);
        assert_eq!(pair_gap_identity(&c1, &c2).unwrap(), (0.25, 0.25));
        assert_eq!(pair_gap_identity(&c1, &c1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn indicator_above_zero_gap_fails_monotonicity() {
        let xi = Grid::symmetric(3.0, 12).unwrap();
        let f = KineticField::from_fn(unit_cell(), xi, |_, z| if z > 1.0 && z < 2.0 { 1.0 } else { 0.0 });
        let rep = gap_report(&f);
        assert!(!rep.monotone_ok);
        assert!(rep.sign_ok && rep.bound_ok);
        assert_eq!(rep.gap_total, 0.0);
    }

    #[test]
    fn jump_flag_catches_rise_on_negative_side() {
        // f = -1 then 0.5 further up violates f(ξ) − f(ξ+h) + 1 ≥ 0 only when
        // the rise exceeds one; build a rise of 1.5 across ξ = 0
        let xi = Grid::symmetric(2.0, 4).unwrap();
        let f = KineticField::new(unit_cell(), xi, vec![0.0, -1.0, 0.5, 0.0]).unwrap();
        let rep = gap_report(&f);
        assert!(!rep.jump_ok);
    }

    #[test]
    fn flipped_cell_is_rejected() {
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        let xi = Grid::symmetric(1.0, 8).unwrap();
        let u = GridFunction::new(g, vec![0.2, 0.6, 0.9, -0.4]).unwrap();
        let mut f = chi_field(&u, &xi).unwrap();
        f.values[8 + 5] = 0.5;
        let err = reconstruct_from_generalized(&f, 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotAKineticFunction { flag: KineticFlag::Gap }));
    }

    #[test]
    fn step_profile_round_trip_is_exact() {
        let g = Grid::new(0.0, 1.0, 16).unwrap();
        let xi = Grid::symmetric(1.0, 16).unwrap();
        let u = GridFunction::from_fn(g, |x| if x < 0.5 { 0.75 } else { -0.5 });
        let (back, residual) = reconstruct_from_generalized(&chi_field(&u, &xi).unwrap(), 1e-12).unwrap();
        assert_eq!(residual, 0.0);
        assert!(back.l1_distance(&u) < 1e-12);
    }

    #[test]
    fn commutator_vanishes_for_constant_flux() {
        let g = Grid::new(-1.0, 1.0, 128).unwrap();
        let xi = Grid::symmetric(1.0, 64).unwrap();
        let u = GridFunction::from_fn(g, |x| 0.5 + 0.3 * (3.0 * x).sin());
        let f = chi_field(&u, &xi).unwrap();
        let phi = Bump::new(0.0, 0.5).unwrap();
        let b = FluxField::constant(1.7);
        assert_eq!(commutator_error(&b, &f, 0.1, 0.1, &phi).unwrap(), 0.0);
        assert!(matches!(
            commutator_error(&b, &f, 0.01, 0.1, &phi),
            Err(Error::ResolutionInsufficient(_))
        ));
    }
}
