//! Named scenarios covering the reference machine's transient regimes.

use std::path::PathBuf;

use crate::analysis::{SolverChoice, SweepParameter, TimeGrid};
use crate::hilbert::MachineParams;

use super::config::{parse_values, parse_variants, RunConfig, RunKind, SweepConfig};
use super::CliError;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> RunConfig,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        (self.build)()
    }
}

const LOG_GRID: TimeGrid = TimeGrid::Log {
    t_first: 1.0,
    t_final: 2e6,
    samples: 1001,
};
const G_SWEEP: &str = "logspace(-6, -1, 51)";

fn timeseries(label: &str, p: (f64, f64, f64), g: f64, grid: TimeGrid) -> RunConfig {
    RunConfig {
        label: label.to_string(),
        kind: RunKind::Timeseries,
        machine: MachineParams::reference(p.0, p.1, p.2, g),
        grid: Some(grid),
        t_max: None,
        sweep: None,
        solver: SolverChoice::Auto,
        dt: None,
        max_steps: None,
        out_dir: PathBuf::from("."),
        fit: false,
    }
}

fn g_sweep(label: &str, p: (f64, f64, f64), t_max: f64, variants: &str) -> RunConfig {
    RunConfig {
        label: label.to_string(),
        kind: RunKind::Sweep,
        machine: MachineParams::reference(p.0, p.1, p.2, 0.0),
        grid: None,
        t_max: Some(t_max),
        sweep: Some(SweepConfig {
            parameter: SweepParameter::G,
            values_text: G_SWEEP.to_string(),
            values: parse_values(G_SWEEP).expect("preset sweep values"),
            variants: parse_variants(variants).expect("preset variants"),
        }),
        solver: SolverChoice::Auto,
        dt: None,
        max_steps: None,
        out_dir: PathBuf::from("."),
        fit: false,
    }
}

const FIG2_RATES: (f64, f64, f64) = (1e-5, 1e-3, 1e-5);

macro_rules! fig2 {
    ($name:literal, $g:expr, $what:literal) => {
        Preset {
            name: $name,
            description: concat!($what, " vs time, reference rates, g = ", stringify!($g)),
            build: || timeseries($name, FIG2_RATES, $g, LOG_GRID),
        }
    };
}

pub const PRESETS: [Preset; 15] = [
    fig2!("fig2a", 1e-2, "distance to steady state"),
    fig2!("fig2b", 1e-4, "distance to steady state"),
    fig2!("fig2c", 1e-2, "qubit temperatures"),
    fig2!("fig2d", 1e-4, "qubit temperatures"),
    fig2!("fig2e", 1e-2, "bipartite entanglement witness"),
    fig2!("fig2f", 1e-4, "bipartite entanglement witness"),
    fig2!("fig2g", 1e-2, "genuine tripartite witness"),
    fig2!("fig2h", 1e-4, "genuine tripartite witness"),
    Preset {
        name: "fig3a",
        description: "damping rate and oscillation frequency vs g, p_C = p_H = 1e-4, p_R = 1e-3",
        build: || g_sweep("fig3a", (1e-4, 1e-3, 1e-4), 500.0, ""),
    },
    Preset {
        name: "fig3b",
        description: "decay rate vs g, p_C = 1e-4, p_R = 1e-3, p_H = 1e-5, plus p_C = p_H = 2e-5",
        build: || g_sweep("fig3b", (1e-4, 1e-3, 1e-5), 500.0, "p_C=2e-5,p_H=2e-5"),
    },
    Preset {
        name: "fig4a",
        description: "lowest cold temperature within t = 500 vs g, p_C = 1e-5",
        build: || g_sweep("fig4a", (1e-5, 1e-3, 1e-5), 500.0, ""),
    },
    Preset {
        name: "fig4b",
        description: "lowest cold temperature within t = 500 vs g, p_C = 1e-4",
        build: || g_sweep("fig4b", (1e-4, 1e-3, 1e-5), 500.0, ""),
    },
    Preset {
        name: "fig4c",
        description: "cold temperature vs time at g = 5e-3, p_C = 1e-5",
        build: || timeseries("fig4c", (1e-5, 1e-3, 1e-5), 5e-3, LOG_GRID),
    },
    Preset {
        name: "fig4d",
        description: "cold temperature vs time at g = 5e-3, p_C = 1e-4",
        build: || timeseries("fig4d", (1e-4, 1e-3, 1e-5), 5e-3, LOG_GRID),
    },
    Preset {
        name: "fig5",
        description: "overdamped approach with a finite-time minimum search, g = 1e-4",
        build: || {
            timeseries(
                "fig5",
                FIG2_RATES,
                1e-4,
                TimeGrid::Log {
                    t_first: 1.0,
                    t_final: 3e6,
                    samples: 1001,
                },
            )
        },
    },
];

pub fn find(name: &str) -> Result<&'static Preset, CliError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Config(format!("unknown preset '{name}'; valid presets: {}", names.join(", ")))
    })
}
