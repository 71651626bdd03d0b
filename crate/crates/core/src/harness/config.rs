//! Sweep definitions and their fixed parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reflection::ReflectionMode;

/// The experiment families of the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Radar/communication residual versus direct-path strength.
    RadarCommSigmaD,
    /// Radar/communication residual versus number of elements.
    RadarCommK,
    /// Radar/communication residual versus clusters of a mmWave channel.
    RadarCommClusters,
    /// D2D worst SINR versus transmit amplitude.
    #[serde(rename = "d2d-power")]
    D2DPower,
    /// D2D worst SINR versus direct-path strength.
    #[serde(rename = "d2d-sigma-d")]
    D2DSigmaD,
    /// D2D worst SINR versus number of elements.
    #[serde(rename = "d2d-k")]
    D2DK,
    /// Secrecy cost per outer Dinkelbach iteration.
    PlsConvergence,
    /// Secrecy rate versus base-station-to-Eve strength.
    PlsSigmaDe,
    /// Secrecy rate versus jammer-to-Eve strength.
    PlsSigmaDj,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::RadarCommSigmaD,
        Experiment::RadarCommK,
        Experiment::RadarCommClusters,
        Experiment::D2DPower,
        Experiment::D2DSigmaD,
        Experiment::D2DK,
        Experiment::PlsConvergence,
        Experiment::PlsSigmaDe,
        Experiment::PlsSigmaDj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::RadarCommSigmaD => "radar-comm-sigma-d",
            Experiment::RadarCommK => "radar-comm-k",
            Experiment::RadarCommClusters => "radar-comm-clusters",
            Experiment::D2DPower => "d2d-power",
            Experiment::D2DSigmaD => "d2d-sigma-d",
            Experiment::D2DK => "d2d-k",
            Experiment::PlsConvergence => "pls-convergence",
            Experiment::PlsSigmaDe => "pls-sigma-de",
            Experiment::PlsSigmaDj => "pls-sigma-dj",
        }
    }

    pub fn application(self) -> Application {
        match self {
            Experiment::RadarCommSigmaD | Experiment::RadarCommK | Experiment::RadarCommClusters => Application::RadarComm,
            Experiment::D2DPower | Experiment::D2DSigmaD | Experiment::D2DK => Application::D2D,
            Experiment::PlsConvergence | Experiment::PlsSigmaDe | Experiment::PlsSigmaDj => Application::Pls,
        }
    }

    /// Name of the parameter the sweep values are written to.
    pub fn sweep_param(self) -> &'static str {
        match self {
            Experiment::RadarCommSigmaD | Experiment::D2DSigmaD => "direct_db",
            Experiment::RadarCommK | Experiment::D2DK => "elements",
            Experiment::RadarCommClusters => "clusters",
            Experiment::D2DPower => "power",
            Experiment::PlsConvergence => "iteration",
            Experiment::PlsSigmaDe => "de_db",
            Experiment::PlsSigmaDj => "dj_db",
        }
    }

    /// Name of the reported metric.
    pub fn metric_name(self) -> &'static str {
        match self.application() {
            Application::RadarComm => "residual_norm",
            Application::D2D => "worst_sinr_db",
            Application::Pls if self == Experiment::PlsConvergence => "secrecy_cost",
            Application::Pls => "secrecy_rate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Application {
    RadarComm,
    D2D,
    Pls,
}

/// Fixed parameters of a sweep. Strengths are channel variances in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Base-station antennas `M`.
    pub tx_antennas: usize,
    /// Radar antennas `N`.
    pub rx_antennas: usize,
    /// Surface elements `K`.
    pub elements: usize,
    /// D2D links `L`.
    pub links: usize,
    /// Angular clusters `T` of the mmWave model.
    pub clusters: usize,
    /// Subpaths per cluster `J`.
    pub subpaths: usize,
    pub direct_db: f64,
    pub to_ris_db: f64,
    pub from_ris_db: f64,
    /// Transmit amplitude of every D2D link.
    pub power: f64,
    pub noise_var: f64,
    pub db_db: f64,
    pub g_db: f64,
    pub hb_db: f64,
    pub de_db: f64,
    pub he_db: f64,
    pub dj_db: f64,
    pub gj_db: f64,
    /// Residual jammer leakage at Bob; absent means fully cancelled.
    pub jb_db: Option<f64>,
    pub jammer: bool,
    pub randomization_trials: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            tx_antennas: 6,
            rx_antennas: 6,
            elements: 64,
            links: 6,
            clusters: 1,
            subpaths: 4,
            direct_db: 0.0,
            to_ris_db: 0.0,
            from_ris_db: 0.0,
            power: 50.0,
            noise_var: 1.0,
            db_db: 10.0,
            g_db: 10.0,
            hb_db: 0.0,
            de_db: 0.0,
            he_db: 0.0,
            dj_db: 0.0,
            gj_db: 0.0,
            jb_db: None,
            jammer: true,
            randomization_trials: 200,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse '{value}' for '{key}'")))
}

fn to_count(key: &str, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidArgument(format!("'{key}' needs a non-negative integer, got {value}")))
    }
}

impl Params {
    pub const KEYS: [&'static str; 21] = [
        "tx_antennas",
        "rx_antennas",
        "elements",
        "links",
        "clusters",
        "subpaths",
        "direct_db",
        "to_ris_db",
        "from_ris_db",
        "power",
        "noise_var",
        "db_db",
        "g_db",
        "hb_db",
        "de_db",
        "he_db",
        "dj_db",
        "gj_db",
        "jb_db",
        "jammer",
        "randomization_trials",
    ];

    /// Sets one parameter from its textual value. `jb_db = none` clears the leakage.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "jammer" => self.jammer = parse(key, value)?,
            "jb_db" => {
                self.jb_db = match value.trim() {
                    "none" | "" => None,
                    v => Some(parse(key, v)?),
                }
            }
            _ => self.set_number(key, parse(key, value)?)?,
        }
        Ok(())
    }

    /// Sets a numeric parameter; used for sweep points.
    pub fn set_number(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "tx_antennas" => self.tx_antennas = to_count(key, value)?,
            "rx_antennas" => self.rx_antennas = to_count(key, value)?,
            "elements" => self.elements = to_count(key, value)?,
            "links" => self.links = to_count(key, value)?,
            "clusters" => self.clusters = to_count(key, value)?,
            "subpaths" => self.subpaths = to_count(key, value)?,
            "randomization_trials" => self.randomization_trials = to_count(key, value)?,
            "direct_db" => self.direct_db = value,
            "to_ris_db" => self.to_ris_db = value,
            "from_ris_db" => self.from_ris_db = value,
            "power" => self.power = value,
            "noise_var" => self.noise_var = value,
            "db_db" => self.db_db = value,
            "g_db" => self.g_db = value,
            "hb_db" => self.hb_db = value,
            "de_db" => self.de_db = value,
            "he_db" => self.he_db = value,
            "dj_db" => self.dj_db = value,
            "gj_db" => self.gj_db = value,
            "jb_db" => self.jb_db = Some(value),
            _ => return Err(Error::InvalidArgument(format!("unknown parameter '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("tx_antennas", self.tx_antennas),
            ("rx_antennas", self.rx_antennas),
            ("elements", self.elements),
            ("links", self.links),
            ("clusters", self.clusters),
            ("subpaths", self.subpaths),
            ("randomization_trials", self.randomization_trials),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("'{k}' must be at least 1")));
        }
        let strengths = [
            self.direct_db,
            self.to_ris_db,
            self.from_ris_db,
            self.db_db,
            self.g_db,
            self.hb_db,
            self.de_db,
            self.he_db,
            self.dj_db,
            self.gj_db,
            self.jb_db.unwrap_or(0.0),
        ];
        if strengths.iter().any(|v| !v.is_finite() || v.abs() > 200.0) {
            return Err(Error::InvalidArgument("channel strengths must be finite and within +-200 dB".into()));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::InvalidArgument("'power' must be positive".into()));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(Error::InvalidArgument("'noise_var' must be positive".into()));
        }
        Ok(())
    }
}

/// A complete sweep: what to vary, over which values, how often, with which surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of the output files.
    pub name: String,
    pub experiment: Experiment,
    pub sweep: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub modes: Vec<ReflectionMode>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    /// Desk-scale version of the setting behind each figure.
    pub fn preset(experiment: Experiment) -> Self {
        let p = Params::default();
        let (name, sweep, trials, params): (&str, Vec<f64>, usize, Params) = match experiment {
            Experiment::RadarCommSigmaD => ("fig3", vec![-10.0, 0.0, 10.0, 20.0, 30.0], 50, p),
            Experiment::RadarCommK => (
                "fig4",
                vec![8.0, 16.0, 24.0, 32.0, 40.0, 48.0, 56.0, 64.0],
                50,
                Params { direct_db: 5.0, ..p },
            ),
            Experiment::RadarCommClusters => (
                "fig5",
                vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                30,
                Params { direct_db: 10.0, ..p },
            ),
            Experiment::D2DPower => ("fig7", vec![10.0, 30.0, 50.0, 100.0], 20, p),
            Experiment::D2DSigmaD => ("fig8", vec![-10.0, 0.0, 10.0, 20.0, 30.0], 20, p),
            Experiment::D2DK => (
                "fig9",
                vec![16.0, 32.0, 48.0, 64.0],
                20,
                Params { direct_db: 10.0, ..p },
            ),
            Experiment::PlsConvergence => (
                "fig11",
                (0..8).map(f64::from).collect(),
                10,
                Params { elements: 16, db_db: 0.0, g_db: 0.0, ..p },
            ),
            Experiment::PlsSigmaDe => (
                "fig12",
                vec![-20.0, -10.0, 0.0, 10.0, 20.0],
                30,
                Params { elements: 2, ..p },
            ),
            Experiment::PlsSigmaDj => (
                "fig13",
                vec![-20.0, -10.0, 0.0, 10.0, 20.0],
                30,
                Params { elements: 2, ..p },
            ),
        };
        Self {
            name: name.to_string(),
            experiment,
            sweep,
            trials,
            base_seed: 1,
            modes: vec![ReflectionMode::Absorptive, ReflectionMode::Conventional],
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidArgument("sweep must not be empty".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument("at least one mode is required".into()));
        }
        if self.modes.len() == 2 && self.modes[0] == self.modes[1] || self.modes.len() > 2 {
            return Err(Error::InvalidArgument("modes must not repeat".into()));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!("'{}' is not a valid output name", self.name)));
        }
        self.params.validate()?;
        for &v in &self.sweep {
            self.point_params(v)?;
        }
        Ok(())
    }

    /// Parameters at one sweep value.
    pub fn point_params(&self, value: f64) -> Result<Params> {
        let mut p = self.params.clone();
        if self.experiment != Experiment::PlsConvergence {
            p.set_number(self.experiment.sweep_param(), value)?;
        } else {
            to_count("iteration", value)?;
        }
        p.validate()?;
        Ok(p)
    }
}
