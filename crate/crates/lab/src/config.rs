//! Experiment configuration: flat TOML sections, one level deep.

use serde::{Deserialize, Serialize};

use sclwp::flux::{model_flux, mollify_flux, FluxField, FluxTable};
use sclwp::mollifier::MollifierSpec;
use sclwp::solver_det::{Boundary, SolverConfig};
use sclwp::{Grid, GridFunction};

/// Experiments known to the driver.
pub const REGISTRY: [&str; 8] = [
    "nonuniqueness_demo",
    "stability_by_noise",
    "gap_decay",
    "selection_study",
    "commutator_convergence",
    "dual_pde_check",
    "apriori_bounds",
    "heat_kernel_table",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    /// `model`, `constant`, `burgers_like`, `affine` or `custom_table`.
    pub name: String,
    /// Cap `K` of the model field.
    #[serde(default = "default_cap")]
    pub cap: f64,
    /// Constant value, Burgers scale or affine slope in x.
    #[serde(default)]
    pub scale: f64,
    /// Flux mollification scale in x and ξ; 0 leaves the field as is.
    #[serde(default)]
    pub mollify: f64,
    /// CSV of `(x, xi, b, div_b)` samples for `custom_table`.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub table: String,
}

fn default_cap() -> f64 {
    3.0
}

impl FluxSpec {
    pub fn model(mollify: f64) -> Self {
        FluxSpec { name: "model".into(), cap: 3.0, scale: 0.0, mollify, table: String::new() }
    }

    /// The field before mollification.
    pub fn raw(&self) -> anyhow::Result<FluxField> {
        Ok(match self.name.as_str() {
            "model" => model_flux(self.cap)?,
            "constant" => FluxField::constant(self.scale),
            "burgers_like" => FluxField::burgers_like(self.scale),
            "affine" => FluxField::affine(self.scale, 0.0, 0.0),
            "custom_table" => FluxField::custom_table(FluxTable::load(std::path::Path::new(&self.table))?),
            other => anyhow::bail!("unknown flux `{other}`"),
        })
    }

    pub fn build(&self) -> anyhow::Result<FluxField> {
        self.build_at(self.mollify)
    }

    /// The field mollified at `eps` in x and ξ (unmollified for `eps = 0`).
    pub fn build_at(&self, eps: f64) -> anyhow::Result<FluxField> {
        let raw = self.raw()?;
        if eps == 0.0 {
            return Ok(raw);
        }
        Ok(mollify_flux(&raw, MollifierSpec::new(eps, eps)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    /// `indicator` on `[a, b]`, `gaussian` with center `a` and width `b`, or
    /// `step` equal to `amplitude` left of `a`.
    pub profile: String,
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn indicator(a: f64, b: f64) -> Self {
        ProfileSpec { profile: "indicator".into(), a, b, amplitude: 1.0 }
    }

    pub fn sample(&self, grid: Grid) -> anyhow::Result<GridFunction> {
        let (a, b, amp) = (self.a, self.b, self.amplitude);
        Ok(match self.profile.as_str() {
            "indicator" => GridFunction::from_fn(grid, |x| if x >= a && x <= b { amp } else { 0.0 }),
            "gaussian" => GridFunction::from_fn(grid, |x| amp * (-(x - a) * (x - a) / (2.0 * b * b)).exp()),
            "step" => GridFunction::from_fn(grid, |x| if x < a { amp } else { 0.0 }),
            other => anyhow::bail!("unknown initial profile `{other}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl GridSpec {
    pub fn build(&self) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.x_min, self.x_max, self.n_cells)?)
    }

    pub fn with_cells(&self, n_cells: usize) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.x_min, self.x_max, n_cells)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiSpec {
    pub r: f64,
    pub n_cells: usize,
}

impl XiSpec {
    pub fn build(&self) -> anyhow::Result<Grid> {
        Ok(Grid::symmetric(self.r, self.n_cells)?)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.r / self.n_cells as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Viscosity `ε`; 0 couples it to the cell size.
    #[serde(default)]
    pub viscosity: f64,
    pub cfl: f64,
}

impl SolverSpec {
    pub fn build(&self, dx: f64) -> anyhow::Result<SolverConfig> {
        let eps = if self.viscosity == 0.0 { dx } else { self.viscosity };
        Ok(SolverConfig::new(eps, self.cfl, Boundary::CompactSupportPad)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub n_paths: usize,
    pub base_seed: u64,
    pub noise_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub t_final: f64,
    /// Number of equally spaced output times in `(0, T]`.
    pub n_outputs: usize,
}

impl RunSpec {
    pub fn output_times(&self) -> Vec<f64> {
        (1..=self.n_outputs).map(|k| self.t_final * k as f64 / self.n_outputs as f64).collect()
    }
}

/// Experiment-specific knobs; each experiment reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Flux mollification scales (stability) or x scales (commutator).
    pub eps_list: Vec<f64>,
    /// ξ scales of the commutator sweep.
    pub delta_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    /// Cell counts of a refinement sequence.
    pub refinements: Vec<usize>,
    pub exponent: f64,
    pub fk_samples: usize,
    pub fk_steps: usize,
    pub probes: Vec<f64>,
    pub cutoff_radius: f64,
    pub cutoff_width: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps_list: Vec::new(),
            delta_list: Vec::new(),
            sigma_list: Vec::new(),
            refinements: Vec::new(),
            exponent: 2.0,
            fk_samples: 0,
            fk_steps: 0,
            probes: Vec::new(),
            cutoff_radius: 2.0,
            cutoff_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub flux: FluxSpec,
    pub initial: ProfileSpec,
    /// Second datum of coupled experiments.
    pub partner: ProfileSpec,
    pub grid: GridSpec,
    pub xi: XiSpec,
    pub solver: SolverSpec,
    pub noise: NoiseSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    /// Full-size defaults of a registered experiment.
    pub fn defaults(name: &str) -> anyhow::Result<Self> {
        if !REGISTRY.contains(&name) {
            anyhow::bail!("unknown experiment `{name}`; registered: {}", REGISTRY.join(", "));
        }
        let mut c = ExperimentConfig {
            experiment: name.to_string(),
            flux: FluxSpec::model(0.0),
            initial: ProfileSpec::indicator(0.0, 1.0),
            partner: ProfileSpec::indicator(0.0, 1.0),
            grid: GridSpec { x_min: -2.0, x_max: 6.0, n_cells: 1024 },
            xi: XiSpec { r: 1.0, n_cells: 64 },
            solver: SolverSpec { viscosity: 0.0, cfl: 0.9 },
            noise: NoiseSpec { sigma: 1.0, n_paths: 64, base_seed: 1234, noise_dt: 1e-3 },
            run: RunSpec { t_final: 1.0, n_outputs: 10 },
            params: Params::default(),
        };
        match name {
            "nonuniqueness_demo" => {
                c.run = RunSpec { t_final: 2.0, n_outputs: 16 };
                c.noise.n_paths = 1;
                c.noise.sigma = 0.0;
            }
            "stability_by_noise" => {
                c.grid = GridSpec { x_min: -6.0, x_max: 8.0, n_cells: 256 };
                c.params.eps_list = vec![0.2, 0.1, 0.05];
                c.params.refinements = vec![256, 512];
                c.partner = ProfileSpec::indicator(-0.5, 1.0);
                c.flux = FluxSpec::model(0.05);
            }
            "gap_decay" => {
                c.grid = GridSpec { x_min: -6.0, x_max: 8.0, n_cells: 224 };
                c.flux = FluxSpec::model(0.05);
                c.partner = ProfileSpec::indicator(-0.5, 1.0);
                c.noise.base_seed = 99;
                c.params.refinements = vec![224, 448, 896];
            }
            "selection_study" => {
                c.grid = GridSpec { x_min: -6.0, x_max: 8.0, n_cells: 512 };
                c.flux = FluxSpec::model(0.05);
                c.params.sigma_list = vec![1.0, 0.5, 0.25, 0.125];
            }
            "commutator_convergence" => {
                c.flux = FluxSpec { name: "affine".into(), cap: 3.0, scale: 1.0, mollify: 0.0, table: String::new() };
                c.initial = ProfileSpec { profile: "gaussian".into(), a: 0.0, b: std::f64::consts::FRAC_1_SQRT_2, amplitude: 0.8 };
                c.grid = GridSpec { x_min: -3.0, x_max: 3.0, n_cells: 960 };
                c.xi = XiSpec { r: 1.0, n_cells: 320 };
                c.params.eps_list = vec![0.2, 0.1, 0.05];
                c.params.delta_list = vec![0.2, 0.1, 0.05];
            }
            "dual_pde_check" => {
                c.flux = FluxSpec::model(0.1);
                c.grid = GridSpec { x_min: -10.0, x_max: 10.0, n_cells: 5121 };
                c.run = RunSpec { t_final: 0.5, n_outputs: 1 };
                c.noise.base_seed = 2024;
                c.params.fk_samples = 100_000;
                c.params.fk_steps = 1000;
                c.params.probes = vec![-2.0, -1.0, 0.0, 1.0, 2.5];
            }
            "apriori_bounds" => {
                c.flux = FluxSpec::model(0.05);
                c.grid = GridSpec { x_min: -1.5, x_max: 3.5, n_cells: 2560 };
                c.run = RunSpec { t_final: 1.0, n_outputs: 40 };
                c.params.exponent = 2.0;
            }
            "heat_kernel_table" => {}
            _ => unreachable!("registry checked above"),
        }
        Ok(c)
    }

    /// Shrinks the experiment to a seconds-scale profile.
    pub fn smoke(&mut self) {
        match self.experiment.as_str() {
            "stability_by_noise" => {
                self.noise.n_paths = 8;
                self.params.eps_list = vec![0.2, 0.05];
                self.params.refinements = vec![256];
            }
            "gap_decay" => {
                self.grid = GridSpec { x_min: -12.0, x_max: 14.0, n_cells: 104 };
                self.noise.n_paths = 8;
                self.params.refinements = vec![104, 208];
            }
            "selection_study" => {
                self.grid.n_cells = 112;
                self.noise.n_paths = 8;
                self.params.sigma_list = vec![1.0, 0.5];
            }
            "commutator_convergence" => {
                self.grid.n_cells = 240;
                self.xi.n_cells = 80;
            }
            "dual_pde_check" => {
                self.grid.n_cells = 1281;
                self.params.fk_samples = 2000;
                self.params.fk_steps = 100;
            }
            "apriori_bounds" => self.grid.n_cells = 640,
            _ => {}
        }
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let c: ExperimentConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !REGISTRY.contains(&self.experiment.as_str()) {
            anyhow::bail!("unknown experiment `{}`; registered: {}", self.experiment, REGISTRY.join(", "));
        }
        let positive = [
            ("grid.n_cells", self.grid.n_cells as f64),
            ("xi.r", self.xi.r),
            ("xi.n_cells", self.xi.n_cells as f64),
            ("solver.cfl", self.solver.cfl),
            ("noise.n_paths", self.noise.n_paths as f64),
            ("noise.noise_dt", self.noise.noise_dt),
            ("run.t_final", self.run.t_final),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                anyhow::bail!("{name} must be positive, got {v}");
            }
        }
        if !(self.grid.x_max > self.grid.x_min) {
            anyhow::bail!("grid.x_max must exceed grid.x_min");
        }
        if self.noise.sigma < 0.0 || self.solver.viscosity < 0.0 || self.flux.mollify < 0.0 {
            anyhow::bail!("noise.sigma, solver.viscosity and flux.mollify must be nonnegative");
        }
        Ok(())
    }
}
