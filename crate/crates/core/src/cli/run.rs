//! Executes a [`RunConfig`] into in-memory artifacts, then writes them.
//!
//! Everything is computed before the first byte hits the disk, so a failed
//! run leaves no partial output.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::analysis::{
    default_fit_window, find_min_temperature, fit_decay_rate, geomspace, sweep, SweepOptions, Trajectory,
};
use crate::hilbert::{product_thermal, MachineSpec, Qubit};
use crate::integrate::IntegratorOptions;
use crate::liouvillian::ReducedState;
use crate::observables::{
    max_entanglement, min_unitary_temperature, temperature_from_ground, virtual_temperature, witness_reduced,
    EntanglementKind, Partition,
};
use crate::spectral::{classify, eigendecompose};

use super::config::{RunConfig, RunKind};
use super::output::{
    classification_json, minimum_json, render_json, spectrum_csv, sweep_csv, temperature_json, timeseries_csv,
};
use super::CliError;

/// Samples used for the optional decay fit.
const FIT_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

fn trajectory(config: &RunConfig, spec: &MachineSpec) -> Result<Trajectory, CliError> {
    let mut options = IntegratorOptions {
        dt: config.dt,
        ..IntegratorOptions::default()
    };
    if let Some(n) = config.max_steps {
        options.max_steps = n;
    }
    let initial = ReducedState::extract(product_thermal(spec).matrix()).map_err(CliError::solver("initial state"))?;
    Trajectory::from_initial(spec, initial, config.solver, options).map_err(CliError::solver("solver setup"))
}

fn steady_json(traj: &Trajectory) -> Value {
    let spec = traj.spec();
    let Some(s) = traj.steady() else {
        return Value::Null;
    };
    let temp = |q| temperature_json(&temperature_from_ground(s.ground_population(q), spec.energy(q)));
    json!({
        "T_c": temp(Qubit::C),
        "T_r": temp(Qubit::R),
        "T_h": temp(Qubit::H),
        "populations": s.populations().to_vec(),
        "re_rho36": s.coherence().re,
        "im_rho36": s.coherence().im,
        "W_R_CH": witness_reduced(s, Partition::RvsCH).value,
        "W_genuine": witness_reduced(s, Partition::Genuine).value,
    })
}

fn summary_value(config: &RunConfig, traj: &Trajectory) -> Result<Value, CliError> {
    let spec = traj.spec();
    let spectrum = match eigendecompose(traj.system()) {
        Ok(eig) => {
            let mut v = classification_json(eig.values.as_slice(), &classify(&eig));
            if let Some(sp) = traj.spectrum() {
                v["condition_number"] = json!(sp.condition_number);
            }
            v
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let tv = virtual_temperature(spec).map_err(CliError::solver("virtual temperature"))?;
    let w = |k| max_entanglement(spec, k).map_err(CliError::solver("entanglement bound"));
    let swap = match min_unitary_temperature(spec) {
        Ok(b) => json!({ "T_min": temperature_json(&b.temperature), "t_opt": b.time }),
        Err(_) => Value::Null,
    };
    let horizon = config.search_horizon();
    let minimum = find_min_temperature(traj, horizon).map_err(CliError::solver("minimum search"))?;
    // where the files go does not change them
    let echo: serde_json::Map<String, Value> = config
        .entries()
        .into_iter()
        .filter(|(k, _)| *k != "out_dir")
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    Ok(json!({
        "config": echo,
        "solver": traj.solver(),
        "spectrum": spectrum,
        "steady_state": steady_json(traj),
        "virtual_temperature": { "value": tv.value, "cools": tv.cools },
        "w_max": { "R_CH": w(EntanglementKind::Bipartite)?, "genuine": w(EntanglementKind::Genuine)? },
        "swap_bound": swap,
        "transient_minimum": { "t_max": horizon, "minimum": minimum_json(&minimum) },
        "version": env!("CARGO_PKG_VERSION"),
    }))
}

fn fit_value(traj: &Trajectory) -> Value {
    let eig = match eigendecompose(traj.system()) {
        Ok(e) => e,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let class = classify(&eig);
    let window = default_fit_window(class.decay_rate);
    let damping = class.damping_rate.unwrap_or(class.decay_rate);
    let times = geomspace(window.0, window.1, FIT_SAMPLES);
    let fitted = traj.series(&times).and_then(|ts| fit_decay_rate(&ts, window, damping));
    let mut v = json!({
        "window": [window.0, window.1],
        "expected_decay_rate": class.decay_rate,
    });
    match fitted {
        Ok(rate) => v["decay_rate"] = json!(rate),
        Err(e) => v["error"] = json!(e.to_string()),
    }
    v
}

/// Runs `config` and returns the files it would write.
pub fn execute(config: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let spec = config.spec();
    let traj = trajectory(config, &spec)?;
    let mut summary = summary_value(config, &traj)?;
    let mut artifacts = Vec::new();
    match config.kind {
        RunKind::Timeseries => {
            let grid = config.grid.expect("timeseries config has a grid");
            let points = grid.points().map_err(|e| CliError::Config(e.to_string()))?;
            let series = traj.series(&points).map_err(CliError::solver("time evolution"))?;
            if config.fit {
                summary["fit"] = fit_value(&traj);
            }
            artifacts.push(Artifact {
                file_name: format!("{}.csv", config.label),
                contents: timeseries_csv(&series),
            });
        }
        RunKind::Sweep => {
            let sw = config.sweep.as_ref().expect("sweep config has sweep settings");
            let options = SweepOptions {
                t_max: config.search_horizon(),
                solver: config.solver,
            };
            let mut series = vec![("base".to_string(), config.machine)];
            series.extend(sw.variants.iter().map(|v| (v.label(), v.apply(&config.machine))));
            let mut results = Vec::new();
            for (label, params) in series {
                let template =
                    MachineSpec::new(params).map_err(|e| CliError::Config(format!("variant {label}: {e}")))?;
                results.push((label, sweep(&template, sw.parameter, &sw.values, &options)));
            }
            let failed: usize = results
                .iter()
                .map(|(_, r)| r.rows.iter().filter(|row| row.outcome.is_err()).count())
                .sum();
            summary["sweep"] = json!({
                "parameter": sw.parameter.name(),
                "series": results.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                "rows": results.iter().map(|(_, r)| r.rows.len()).sum::<usize>(),
                "failed_rows": failed,
            });
            artifacts.push(Artifact {
                file_name: format!("{}.csv", config.label),
                contents: sweep_csv(&results),
            });
        }
        RunKind::Spectrum => {
            let sp = traj.spectrum().ok_or_else(|| CliError::Solver {
                stage: "spectral expansion",
                source: crate::Error::InvalidSpec("spectrum runs need the spectral solver".into()),
            })?;
            artifacts.push(Artifact {
                file_name: format!("{}_spectrum.csv", config.label),
                contents: spectrum_csv(sp),
            });
        }
        RunKind::Summary => {}
    }
    artifacts.push(Artifact {
        file_name: format!("{}.json", config.label),
        contents: render_json(&summary),
    });
    Ok(artifacts)
}

/// The JSON summary alone, as printed by `qfridge summary`.
pub fn summary_json(config: &RunConfig) -> Result<String, CliError> {
    let spec = config.spec();
    let traj = trajectory(config, &spec)?;
    Ok(render_json(&summary_value(config, &traj)?))
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.file_name);
        fs::write(&path, &a.contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TimeGrid;
    use crate::cli::output::TIMESERIES_HEADER;
    use crate::cli::presets::find;

    fn small(name: &str) -> RunConfig {
        let mut c = find(name).unwrap().config();
        c.grid = Some(TimeGrid::Log {
            t_first: 1.0,
            t_final: 1e4,
            samples: 21,
        });
        c
    }

    #[test]
    fn timeseries_artifacts() {
        let a = execute(&small("fig2a")).unwrap();
        assert_eq!(
            a.iter().map(|x| x.file_name.as_str()).collect::<Vec<_>>(),
            ["fig2a.csv", "fig2a.json"]
        );
        let mut lines = a[0].contents.lines();
        assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
        assert_eq!(lines.count(), 21);
        let v: Value = serde_json::from_str(&a[1].contents).unwrap();
        assert_eq!(v["solver"], "spectral");
        assert_eq!(v["virtual_temperature"]["value"], 0.01);
        assert_eq!(v["spectrum"]["eigenvalues"].as_array().unwrap().len(), 9);
        assert_eq!(v["config"]["g"], "0.01");
        assert!(v["config"].get("out_dir").is_none());
    }

    #[test]
    fn integrator_solver_override() {
        let mut c = small("fig2a");
        c.solver = crate::analysis::SolverChoice::Integrator;
        c.t_max = Some(500.0);
        let a = execute(&c).unwrap();
        let v: Value = serde_json::from_str(&a[1].contents).unwrap();
        assert_eq!(v["solver"], "integrator");
    }

    #[test]
    fn sweep_artifacts_have_all_series() {
        let mut c = find("fig3b").unwrap().config();
        let sw = c.sweep.as_mut().unwrap();
        sw.values = vec![1e-4, 1e-2];
        sw.values_text = "1e-4,1e-2".into();
        let a = execute(&c).unwrap();
        let rows: Vec<&str> = a[0].contents.lines().collect();
        assert!(rows[0].starts_with("series,g,"));
        assert_eq!(rows.len(), 5);
        assert!(rows[3].starts_with("\"p_C=2e-5,p_H=2e-5\",0.0001,"));
    }

    #[test]
    fn spectrum_and_summary_kinds() {
        let mut c = small("fig2a");
        c.kind = RunKind::Spectrum;
        c.grid = None;
        let a = execute(&c).unwrap();
        assert_eq!(a[0].file_name, "fig2a_spectrum.csv");
        assert_eq!(a[0].contents.lines().count(), 10);
        c.kind = RunKind::Summary;
        let a = execute(&c).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].contents, summary_json(&c).unwrap());
    }

    #[test]
    fn fit_section() {
        let mut c = small("fig4d");
        c.fit = true;
        let a = execute(&c).unwrap();
        let v: Value = serde_json::from_str(&a[1].contents).unwrap();
        let fitted = v["fit"]["decay_rate"].as_f64().unwrap();
        let expected = v["fit"]["expected_decay_rate"].as_f64().unwrap();
        assert!((fitted / expected - 1.0).abs() < 0.02, "{fitted} vs {expected}");
    }

    #[test]
    fn solver_errors_exit_three() {
        let mut c = small("fig2a");
        c.max_steps = Some(10);
        c.solver = crate::analysis::SolverChoice::Integrator;
        let err = execute(&c).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("minimum search"), "{err}");
    }
}
