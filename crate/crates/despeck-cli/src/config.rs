//! Monte Carlo run configuration: defaults, the optional key=value
//! config file, command-line precedence, and the manifest echo.
//!
//! Precedence is strictly flags > config file > defaults, applied per
//! key. The effective configuration is serialized into a manifest next
//! to the outputs so a run can be reproduced from its artifacts alone;
//! the manifest carries no timestamps or environment state, keeping
//! reruns byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use despeck_core::filter::FilterMethod;
use despeck_core::phantom::PhantomSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub replicates: u32,
    pub looks_list: Vec<f64>,
    pub filters: Vec<FilterMethod>,
    pub significance: f64,
    pub base_seed: u64,
    pub phantom: PhantomSpec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            looks_list: vec![1.0, 4.0],
            filters: vec![FilterMethod::Kl, FilterMethod::Lee],
            significance: 0.05,
            base_seed: 7,
            phantom: PhantomSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            bail!("replicates must be at least 1");
        }
        if self.looks_list.is_empty() {
            bail!("looks list must not be empty");
        }
        for &l in &self.looks_list {
            if !(l >= 1.0) || !l.is_finite() {
                bail!("every looks level must be a finite real >= 1, got {l}");
            }
        }
        if self.filters.is_empty() {
            bail!("filter list must not be empty");
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            bail!("significance must lie in (0, 1), got {}", self.significance);
        }
        self.phantom.validate().map_err(anyhow::Error::from)?;
        Ok(())
    }

    /// Deterministic manifest of the effective configuration.
    pub fn manifest(&self) -> String {
        let mut out = String::from("# effective configuration\n");
        let looks = self
            .looks_list
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let filters = self
            .filters
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(",");
        // Keys stay alphabetical so diffs between manifests are stable.
        for (key, value) in [
            ("background_mean", self.phantom.background_mean.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("filters", filters),
            ("line_mean", self.phantom.line_mean.to_string()),
            ("looks", looks),
            ("replicates", self.replicates.to_string()),
            ("side", self.phantom.side.to_string()),
            ("significance", self.significance.to_string()),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Unresolved overrides from one source (flags or file). `None` means
/// "not given here, fall through".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub replicates: Option<u32>,
    pub looks_list: Option<Vec<f64>>,
    pub filters: Option<Vec<FilterMethod>>,
    pub significance: Option<f64>,
    pub base_seed: Option<u64>,
    pub side: Option<usize>,
    pub background_mean: Option<f64>,
    pub line_mean: Option<f64>,
}

impl RunOverrides {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(v) = self.replicates {
            config.replicates = v;
        }
        if let Some(v) = &self.looks_list {
            config.looks_list = v.clone();
        }
        if let Some(v) = &self.filters {
            config.filters = v.clone();
        }
        if let Some(v) = self.significance {
            config.significance = v;
        }
        if let Some(v) = self.base_seed {
            config.base_seed = v;
        }
        if let Some(v) = self.side {
            config.phantom.side = v;
        }
        if let Some(v) = self.background_mean {
            config.phantom.background_mean = v;
        }
        if let Some(v) = self.line_mean {
            config.phantom.line_mean = v;
        }
    }
}

/// Builds the effective configuration from defaults, an optional config
/// file, and command-line overrides, in rising precedence.
pub fn resolve(file: Option<&Path>, flags: &RunOverrides) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        parse_config_file(&text)
            .with_context(|| format!("parsing config file {}", path.display()))?
            .apply(&mut config);
    }
    flags.apply(&mut config);
    config.validate()?;
    Ok(config)
}

pub fn parse_looks_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid looks value {part:?}"))
        })
        .collect()
}

pub fn parse_filter_list(text: &str) -> Result<Vec<FilterMethod>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<FilterMethod>()
                .map_err(|e| anyhow::anyhow!("{e}"))
        })
        .collect()
}

/// Key=value lines; `#` or `;` starts a comment; blank lines ignored.
fn parse_config_file(text: &str) -> Result<RunOverrides> {
    let mut seen = BTreeMap::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value, got {raw:?}", number + 1);
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if seen.insert(key.clone(), (number + 1, value)).is_some() {
            bail!("line {}: duplicate key {key:?}", number + 1);
        }
    }
    let mut overrides = RunOverrides::default();
    for (key, (number, value)) in seen {
        let context = || format!("line {number}: key {key:?}");
        match key.as_str() {
            "replicates" => {
                overrides.replicates = Some(value.parse().with_context(context)?);
            }
            "looks" => {
                overrides.looks_list = Some(parse_looks_list(&value).with_context(context)?);
            }
            "filters" => {
                overrides.filters = Some(parse_filter_list(&value).with_context(context)?);
            }
            "significance" => {
                overrides.significance = Some(value.parse().with_context(context)?);
            }
            "base_seed" => {
                overrides.base_seed = Some(value.parse().with_context(context)?);
            }
            "side" => {
                overrides.side = Some(value.parse().with_context(context)?);
            }
            "background_mean" => {
                overrides.background_mean = Some(value.parse().with_context(context)?);
            }
            "line_mean" => {
                overrides.line_mean = Some(value.parse().with_context(context)?);
            }
            other => bail!("line {number}: unknown key {other:?}"),
        }
    }
    Ok(overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let c = RunConfig::default();
        assert_eq!(c.replicates, 100);
        assert_eq!(c.looks_list, vec![1.0, 4.0]);
        assert_eq!(c.filters, vec![FilterMethod::Kl, FilterMethod::Lee]);
        assert_eq!(c.significance, 0.05);
        assert_eq!(c.phantom.side, 256);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_overrides_defaults_and_flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        std::fs::write(
            &path,
            "# protocol tweaks\nreplicates = 10\nsignificance = 0.01 ; stricter\nlooks=2,8\n",
        )
        .unwrap();
        let flags = RunOverrides { replicates: Some(3), ..Default::default() };
        let config = resolve(Some(path.as_path()), &flags).unwrap();
        assert_eq!(config.replicates, 3);
        assert_eq!(config.significance, 0.01);
        assert_eq!(config.looks_list, vec![2.0, 8.0]);
        assert_eq!(config.base_seed, RunConfig::default().base_seed);
    }

    #[test]
    fn malformed_config_files_are_rejected_with_line_numbers() {
        for (text, needle) in [
            ("replicates 10\n", "line 1"),
            ("replicates = ten\n", "line 1"),
            ("speed = 9\n", "unknown key"),
            ("side = 128\nside = 64\n", "duplicate key"),
        ] {
            let err = format!("{:?}", parse_config_file(text).unwrap_err());
            assert!(err.contains(needle), "{text:?} -> {err}");
        }
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        let mut c = RunConfig { replicates: 0, ..Default::default() };
        assert!(c.validate().is_err());
        c.replicates = 1;
        c.significance = 1.0;
        assert!(c.validate().is_err());
        c.significance = 0.05;
        c.looks_list = vec![0.5];
        assert!(c.validate().is_err());
    }

    #[test]
    fn manifest_is_deterministic_and_complete() {
        let config = RunConfig::default();
        let a = config.manifest();
        assert_eq!(a, config.manifest());
        for key in [
            "background_mean",
            "base_seed",
            "filters",
            "line_mean",
            "looks",
            "replicates",
            "side",
            "significance",
        ] {
            assert!(a.contains(&format!("{key} = ")), "missing {key} in {a}");
        }
        assert!(a.contains("filters = kl,lee"));
        assert!(a.contains("looks = 1,4"));
    }
}
