//! `RunConfig`: a TOML file with `[crossbar]`, `[devices]`, `[inputs]` and
//! `[run]` sections.
//!
//! ```toml
//! [crossbar]
//! rows = 4
//! cols = 3
//! r_wire_wl = 5.0        # ohms
//! r_wire_bl = 5.0
//! ordering = "auto"      # auto | row-major | col-major
//!
//! [devices]              # exactly one of values / csv / random
//! random = { seed = 1, g_min = 1e-6, g_max = 1e-4 }
//!
//! [inputs]               # exactly one of values / csv / random
//! random = { seed = 1, v_min = 0.0, v_max = 1.0, batch = 10 }
//!
//! [run]
//! repeats = 10
//! out = "results"
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use crossbar_core::crossbar::{load_devices_csv, load_inputs_csv, DEFAULT_WIRE_RESISTANCE};
use crossbar_core::{CrossbarConfig, DeviceGrid, InputBatch, NodeOrdering, RandomSpec};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub crossbar: CrossbarSection,
    pub devices: DevicesSection,
    pub inputs: InputsSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(skip)]
    base_dir: PathBuf,
    #[serde(skip)]
    text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossbarSection {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_wire")]
    pub r_wire_wl: f64,
    #[serde(default = "default_wire")]
    pub r_wire_bl: f64,
    #[serde(default)]
    pub ordering: NodeOrdering,
}

fn default_wire() -> f64 {
    DEFAULT_WIRE_RESISTANCE
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevicesSection {
    pub values: Option<Vec<Vec<f64>>>,
    pub csv: Option<PathBuf>,
    pub random: Option<RandomDevices>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDevices {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_g_min")]
    pub g_min: f64,
    #[serde(default = "default_g_max")]
    pub g_max: f64,
}

fn default_g_min() -> f64 {
    RandomSpec::default().g_min
}

fn default_g_max() -> f64 {
    RandomSpec::default().g_max
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSection {
    pub values: Option<Vec<Vec<f64>>>,
    pub csv: Option<PathBuf>,
    pub random: Option<RandomInputs>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInputs {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
}

fn default_v_max() -> f64 {
    RandomSpec::default().v_max
}

fn default_batch() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            repeats: default_repeats(),
            out: None,
        }
    }
}

pub fn default_repeats() -> usize {
    10
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .map_or(String::new(), |l| format!("line {l}: "));
            anyhow!("config error: {line}{}", e.message())
        })?;
        config.text = text.to_string();
        config.check()?;
        Ok(config)
    }

    fn line_of(&self, needle: &str) -> String {
        self.text
            .lines()
            .position(|l| l.trim_start().starts_with(needle))
            .map_or(String::new(), |l| format!("line {}: ", l + 1))
    }

    fn check(&self) -> Result<()> {
        let d = &self.devices;
        let count = [d.values.is_some(), d.csv.is_some(), d.random.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if count != 1 {
            bail!(
                "config error: {}key devices: specify exactly one of values, csv, random (found {count})",
                self.line_of("[devices]")
            );
        }
        let i = &self.inputs;
        let count = [i.values.is_some(), i.csv.is_some(), i.random.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if count != 1 {
            bail!(
                "config error: {}key inputs: specify exactly one of values, csv, random (found {count})",
                self.line_of("[inputs]")
            );
        }
        if self.run.repeats == 0 {
            bail!(
                "config error: {}key run.repeats: must be at least 1",
                self.line_of("repeats")
            );
        }
        for (key, r) in [
            ("r_wire_wl", self.crossbar.r_wire_wl),
            ("r_wire_bl", self.crossbar.r_wire_bl),
        ] {
            if !(r.is_finite() && r > 0.0) {
                bail!(
                    "config error: {}key crossbar.{key}: must be a positive resistance, got {r}",
                    self.line_of(key)
                );
            }
        }
        Ok(())
    }

    /// Replaces every random seed.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(r) = &mut self.devices.random {
            r.seed = seed;
        }
        if let Some(r) = &mut self.inputs.random {
            r.seed = seed;
        }
    }

    pub fn override_repeats(&mut self, repeats: usize) -> Result<()> {
        if repeats == 0 {
            bail!("--repeats must be at least 1");
        }
        self.run.repeats = repeats;
        Ok(())
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.run.out.as_deref().map(|p| self.resolve(p))
    }

    pub fn crossbar(&self) -> Result<CrossbarConfig> {
        let c = &self.crossbar;
        let devices = if let Some(values) = &self.devices.values {
            DeviceGrid::from_rows(values).context("key devices.values")?
        } else if let Some(path) = &self.devices.csv {
            load_devices_csv(self.resolve(path)).context("key devices.csv")?
        } else {
            let r = self.devices.random.as_ref().expect("checked");
            let spec = RandomSpec {
                seed: r.seed,
                g_min: r.g_min,
                g_max: r.g_max,
                ..RandomSpec::default()
            };
            spec.random_devices(c.rows, c.cols).context("key devices.random")?
        };
        let config = CrossbarConfig {
            rows: c.rows,
            cols: c.cols,
            g_wl: 1.0 / c.r_wire_wl,
            g_bl: 1.0 / c.r_wire_bl,
            devices,
            ordering: c.ordering,
        };
        config.validate().context("invalid crossbar")?;
        Ok(config)
    }

    pub fn inputs(&self) -> Result<InputBatch> {
        let inputs = if let Some(values) = &self.inputs.values {
            InputBatch::from_rows(values).context("key inputs.values")?
        } else if let Some(path) = &self.inputs.csv {
            load_inputs_csv(self.resolve(path)).context("key inputs.csv")?
        } else {
            let r = self.inputs.random.as_ref().expect("checked");
            let spec = RandomSpec {
                seed: r.seed,
                v_min: r.v_min,
                v_max: r.v_max,
                ..RandomSpec::default()
            };
            spec.random_inputs(self.crossbar.rows, r.batch)
                .context("key inputs.random")?
        };
        if inputs.width() != self.crossbar.rows {
            bail!(
                "inputs have {} columns but the crossbar has {} word lines",
                inputs.width(),
                self.crossbar.rows
            );
        }
        Ok(inputs)
    }
}
