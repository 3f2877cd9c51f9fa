//! Named scenarios used by the CLI and the acceptance runs.

use crate::diagnostics::{wiener_norm, Diagnostics};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::integrator::StepperConfig;
use crate::operators::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Multi-mode mean-zero data with `||u0||_inf = 0.05`.
    SmallData,
    /// `x`-odd data with `||u0||_A0 = 0.1`, `mu = 1`, no rotation.
    WienerSmall,
    /// Same shape scaled to `||u0||_A0 = 10 mu`.
    WienerLarge,
    /// Large data, tiny viscosity and a step far above the advective limit.
    BlowupStress,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SmallData,
        Preset::WienerSmall,
        Preset::WienerLarge,
        Preset::BlowupStress,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::SmallData => "small_data",
            Preset::WienerSmall => "wiener_small",
            Preset::WienerLarge => "wiener_large",
            Preset::BlowupStress => "blowup_stress",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{name}' (expected one of small_data, wiener_small, wiener_large, blowup_stress)"
                ))
            })
    }

    pub fn grid(&self) -> Grid {
        Grid::new(32, 32, 2).expect("valid preset grid")
    }

    pub fn params(&self) -> ModelParams {
        let (mu, alpha, beta) = match self {
            Preset::SmallData => (1.0, -0.1, 0.5),
            Preset::WienerSmall | Preset::WienerLarge => (1.0, -0.1, 0.0),
            Preset::BlowupStress => (1e-4, 0.0, 0.5),
        };
        ModelParams::new(mu, alpha, beta).expect("valid preset parameters")
    }

    pub fn stepper(&self) -> StepperConfig {
        let base = StepperConfig {
            dt: 1e-3,
            t_end: 2.0,
            // the energy residual needs every step
            log_every: 1,
            ..Default::default()
        };
        match self {
            Preset::WienerLarge => StepperConfig { adapt: true, ..base },
            Preset::BlowupStress => StepperConfig { dt: 1e-2, ..base },
            _ => base,
        }
    }

    /// Initial condition on `grid` (the truncation must hold modes up to 3).
    pub fn initial(&self, grid: Grid) -> SpectralField {
        let mut u = SpectralField::zeros(grid);
        match self {
            Preset::SmallData => {
                for &(n, m, a, ph) in &[
                    (1, 1, 1.0, 0.3),
                    (2, 1, 0.5, 1.1),
                    (1, 2, -0.4, 2.0),
                    (3, 2, 0.25, 0.7),
                    (2, 3, 0.2, 4.0),
                    (0, 2, 0.3, 1.2),
                ] {
                    u.add_sine_mode(n, m, a, ph);
                }
                let diag = Diagnostics::new(grid, self.params());
                let sup = diag.sup_norm(&u);
                u.scale(0.05 / sup);
            }
            Preset::WienerSmall | Preset::WienerLarge | Preset::BlowupStress => {
                for &(n, m, a) in &[
                    (1, 1, 1.0),
                    (2, 1, 0.5),
                    (1, 2, -0.4),
                    (3, 2, 0.25),
                    (2, 3, 0.2),
                ] {
                    u.add_sine_mode(n, m, a, 0.0);
                }
                let target = match self {
                    Preset::WienerSmall => 0.1,
                    Preset::WienerLarge => 10.0 * self.params().mu,
                    _ => 100.0,
                };
                let w = wiener_norm(&u, 0);
                u.scale(target / w);
            }
        }
        u
    }
}

/// Everything needed to start a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub u0: SpectralField,
}

impl Scenario {
    pub fn from_preset(p: Preset) -> Self {
        Self {
            name: p.name().to_string(),
            params: p.params(),
            stepper: p.stepper(),
            u0: p.initial(p.grid()),
        }
    }
}
