use sclwp_lab::{ExperimentConfig, REGISTRY};

#[test]
fn every_default_round_trips_bit_exactly() {
    for name in REGISTRY {
        for smoke in [false, true] {
            let mut c = ExperimentConfig::defaults(name).unwrap();
            if smoke {
                c.smoke();
            }
            let text = c.to_toml().unwrap();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, c, "{name}");
            assert_eq!(back.to_toml().unwrap(), text, "{name}");
        }
    }
}

#[test]
fn awkward_floats_survive_the_round_trip() {
    let mut c = ExperimentConfig::defaults("dual_pde_check").unwrap();
    c.noise.noise_dt = 0.1;
    c.solver.cfl = 1.0 / 3.0;
    c.params.probes = vec![-0.0, 1e-300, std::f64::consts::PI, 2.5];
    let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(back.noise.noise_dt.to_bits(), 0.1f64.to_bits());
    assert_eq!(back.solver.cfl.to_bits(), (1.0f64 / 3.0).to_bits());
    for (a, b) in back.params.probes.iter().zip(&c.params.probes) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn sections_are_one_level_deep() {
    let text = ExperimentConfig::defaults("gap_decay").unwrap().to_toml().unwrap();
    for line in text.lines().filter(|l| l.starts_with('[')) {
        assert!(!line.trim_matches(|c| c == '[' || c == ']').contains('.'), "{line}");
    }
}

#[test]
fn unknown_names_and_fields_are_rejected() {
    assert!(ExperimentConfig::defaults("no_such_experiment").is_err());
    let text = ExperimentConfig::defaults("gap_decay").unwrap().to_toml().unwrap();
    let renamed = text.replace("experiment = \"gap_decay\"", "experiment = \"other\"");
    assert!(ExperimentConfig::from_toml(&renamed).is_err());
    let extra = text.replace("[grid]\n", "[grid]\nspacing = 0.1\n");
    assert!(ExperimentConfig::from_toml(&extra).is_err());
}

#[test]
fn nonpositive_sizes_are_rejected() {
    let base = ExperimentConfig::defaults("stability_by_noise").unwrap();
    let mut c = base.clone();
    c.grid.n_cells = 0;
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.noise.n_paths = 0;
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.run.t_final = -1.0;
    assert!(c.validate().is_err());
    let mut c = base.clone();
    c.grid.x_max = c.grid.x_min;
    assert!(c.validate().is_err());
    let mut c = base;
    c.noise.sigma = -0.5;
    assert!(c.validate().is_err());
}

#[test]
fn output_times_end_at_the_horizon() {
    let c = ExperimentConfig::defaults("nonuniqueness_demo").unwrap();
    let t = c.run.output_times();
    assert_eq!(t.len(), c.run.n_outputs);
    assert_eq!(*t.last().unwrap(), c.run.t_final);
    assert!(t.contains(&0.5) && t.contains(&1.0) && t.contains(&2.0));
}
