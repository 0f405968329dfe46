//! Run configuration: a single JSON document with defaults for every key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mbasis::WeightSpec;
use crate::scalar::{parse_rational, Mode, Rational};
use crate::variants::SupportSpec;

/// Weight sequence selection. Rationals are written as strings (`"4/3"`, `"0.5"`, `"7"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    OmegaPower {
        alpha: u32,
    },
    EtaReciprocal,
    OmegaList {
        values: Vec<String>,
        #[serde(default)]
        summable_reciprocal: bool,
        #[serde(default)]
        nth_root_limit_one: bool,
    },
    EtaList {
        eta_sq: Vec<String>,
        #[serde(default)]
        summable_reciprocal: bool,
        #[serde(default)]
        nth_root_limit_one: bool,
    },
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig::OmegaPower { alpha: 2 }
    }
}

fn parse_list(values: &[String], what: &str) -> Result<Vec<Rational>> {
    values
        .iter()
        .enumerate()
        .map(|(i, s)| parse_rational(s).ok_or_else(|| Error::Config(format!("{what}[{i}] = {s:?} is not a rational"))))
        .collect()
}

impl WeightsConfig {
    pub fn to_spec(&self) -> Result<WeightSpec> {
        match self {
            WeightsConfig::OmegaPower { alpha } => {
                WeightSpec::omega_power(&Rational::from_integer((*alpha).into()))
            }
            WeightsConfig::EtaReciprocal => Ok(WeightSpec::eta_reciprocal()),
            WeightsConfig::OmegaList {
                values,
                summable_reciprocal,
                nth_root_limit_one,
            } => WeightSpec::omega_list(parse_list(values, "omega")?, *summable_reciprocal, *nth_root_limit_one),
            WeightsConfig::EtaList {
                eta_sq,
                summable_reciprocal,
                nth_root_limit_one,
            } => WeightSpec::eta_list(parse_list(eta_sq, "eta_sq")?, *summable_reciprocal, *nth_root_limit_one),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportConfig {
    Evens,
    Odds,
    Squares,
    Custom {
        #[serde(default)]
        members: Vec<usize>,
        #[serde(default)]
        prefix_len: usize,
        period: usize,
        residues: Vec<usize>,
    },
}

impl SupportConfig {
    pub fn to_spec(&self) -> SupportSpec {
        match self {
            SupportConfig::Evens => SupportSpec::Evens,
            SupportConfig::Odds => SupportSpec::Odds,
            SupportConfig::Squares => SupportSpec::Squares,
            SupportConfig::Custom {
                members,
                prefix_len,
                period,
                residues,
            } => SupportSpec::Custom {
                members: members.clone(),
                prefix_len: *prefix_len,
                period: *period,
                residues: residues.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VariantConfig {
    #[default]
    Identity,
    Support {
        set: SupportConfig,
    },
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Levels {
    /// Truncation level `M` of the witness `f`.
    pub m: usize,
    /// Truncation level `N` of the witness `g`.
    pub n: usize,
    /// Odd-span levels `k` for the headline contrast.
    pub headline: Vec<usize>,
    /// Indices checked for biorthogonality and reconstruction.
    pub biorthogonality: usize,
    /// Indices checked against the monomial norm bound.
    pub norm_bound: usize,
    pub growth_min: usize,
    pub growth_max: usize,
    /// Ceiling for `||s_k(f)||^{1/k}` over the growth range.
    pub growth_root_limit: f64,
    pub radii: Vec<String>,
    pub random_rows: usize,
    /// Symmetric partial sums reported by the Fourier variant.
    pub partial_sums: Vec<usize>,
}

impl Default for Levels {
    fn default() -> Self {
        Levels {
            m: 64,
            n: 64,
            headline: vec![4, 8, 16, 32, 64],
            biorthogonality: 128,
            norm_bound: 512,
            growth_min: 32,
            growth_max: 256,
            growth_root_limit: 1.1,
            radii: vec!["1/2".into(), "9/10".into(), "99/100".into()],
            random_rows: 20,
            partial_sums: vec![1, 2, 5, 16],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub plot_data: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("reports"),
            formats: vec![Format::Json, Format::Csv],
            plot_data: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Zero test for approximate values, relative to the natural scale.
    pub zero: f64,
    /// Relative pivot-drop threshold for approximate projections.
    pub pivot: f64,
    /// Allowed gap between the two residual computations of a projection.
    pub residual: f64,
    /// Largest `|<x_n, y_m> - delta_nm|` accepted in approx mode.
    pub biorthogonality: f64,
    /// Target for the truncation tail of series methods.
    pub series_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero: 1e-12,
            pivot: 1e-12,
            residual: 1e-8,
            biorthogonality: 1e-10,
            series_tail: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub weights: WeightsConfig,
    pub mode: Mode,
    pub levels: Levels,
    /// Seed for the random triangular rows.
    pub seed: u64,
    pub variant: VariantConfig,
    pub outputs: Outputs,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: WeightsConfig::default(),
            mode: Mode::Exact,
            levels: Levels::default(),
            seed: 20_240_601,
            variant: VariantConfig::default(),
            outputs: Outputs::default(),
            tolerances: Tolerances::default(),
        }
    }
}

fn positive(value: f64, what: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be a positive finite number, got {value}")))
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn weight_spec(&self) -> Result<WeightSpec> {
        self.weights.to_spec().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn radii(&self) -> Result<Vec<Rational>> {
        self.levels
            .radii
            .iter()
            .map(|s| {
                parse_rational(s)
                    .filter(|r| *r > Rational::from_integer(0.into()) && *r < Rational::from_integer(1.into()))
                    .ok_or_else(|| Error::Config(format!("radius {s:?} must be a rational in (0, 1)")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.levels;
        if l.m == 0 || l.n == 0 {
            return Err(Error::Config(format!("levels m and n must be positive, got m={} n={}", l.m, l.n)));
        }
        if let Some(k) = l.headline.iter().find(|k| **k == 0) {
            return Err(Error::Config(format!("headline levels must be positive, got {k}")));
        }
        if l.biorthogonality == 0 || l.norm_bound == 0 {
            return Err(Error::Config("biorthogonality and norm_bound ranges must be positive".into()));
        }
        if l.growth_min == 0 || l.growth_min > l.growth_max {
            return Err(Error::Config(format!(
                "growth range must satisfy 0 < min <= max, got {}..={}",
                l.growth_min, l.growth_max
            )));
        }
        positive(l.growth_root_limit, "growth_root_limit")?;
        self.radii()?;
        let t = &self.tolerances;
        positive(t.zero, "tolerances.zero")?;
        positive(t.pivot, "tolerances.pivot")?;
        positive(t.residual, "tolerances.residual")?;
        positive(t.biorthogonality, "tolerances.biorthogonality")?;
        positive(t.series_tail, "tolerances.series_tail")?;
        if self.outputs.formats.is_empty() {
            return Err(Error::Config("at least one output format is required".into()));
        }
        self.weight_spec()?;
        Ok(())
    }
}
