use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use gadqec_core::codes::CodeName;
use gadqec_core::fidelity::EpsRule;

use crate::CliError;

/// `start:end:count`, evenly spaced and inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        gadqec_core::fidelity::SweepGrid::linspace(self.start, self.end, self.count)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("grid '{s}' is not start:end:count"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number in grid '{s}'"));
        let start = num(a)?;
        let end = num(b)?;
        let count = c.trim().parse::<usize>().map_err(|_| format!("'{c}' is not a count in grid '{s}'"))?;
        if count == 0 {
            return Err(format!("grid '{s}' is empty"));
        }
        if !start.is_finite() || !end.is_finite() || end < start {
            return Err(format!("grid '{s}' needs finite start <= end"));
        }
        Ok(Self { start, end, count })
    }
}

/// `fixed:<epsilon>` or `prop:<c>` with ε = c·γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsSpec(pub EpsRule);

impl FromStr for EpsSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s.split_once(':').ok_or_else(|| format!("epsilon rule '{s}' is not fixed:<v> or prop:<c>"))?;
        let v: f64 = value.trim().parse().map_err(|_| format!("'{value}' is not a number"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("epsilon rule value {v} must be finite and nonnegative"));
        }
        match kind.trim() {
            "fixed" => Ok(Self(EpsRule::Fixed(v))),
            "prop" => Ok(Self(EpsRule::Proportional(v))),
            other => Err(format!("unknown epsilon rule '{other}'")),
        }
    }
}

/// Comma-separated code names.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeList(pub Vec<CodeName>);

impl FromStr for CodeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let codes = s
            .split(',')
            .map(|c| c.trim())
            .filter(|c| !c.is_empty())
            .map(|c| c.parse::<CodeName>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        if codes.is_empty() {
            return Err("no code names given".into());
        }
        Ok(Self(codes))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Flat `key = value` file. Blank lines and lines starting with `#` are skipped.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Parses `key` if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }
}

/// Keeps the command-line value when given, else falls back to the config file.
pub fn merge<T: FromStr>(cli: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: fmt::Display,
{
    match cli {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("0:0.1:50".parse::<GridSpec>().unwrap(), GridSpec { start: 0.0, end: 0.1, count: 50 });
        assert!("0:0.1:0".parse::<GridSpec>().is_err());
        assert!("0:0.1".parse::<GridSpec>().is_err());
        assert!("0.2:0.1:3".parse::<GridSpec>().is_err());
    }

    #[test]
    fn eps_rules() {
        assert_eq!("prop:0.1".parse::<EpsSpec>().unwrap().0, EpsRule::Proportional(0.1));
        assert_eq!("fixed:0".parse::<EpsSpec>().unwrap().0, EpsRule::Fixed(0.0));
        assert!("linear:1".parse::<EpsSpec>().is_err());
    }

    #[test]
    fn config_lines() {
        let c = ConfigFile::parse("# sweep\ncode = five_qubit, css_seven\nmax_weight=3\n\n").unwrap();
        assert_eq!(c.get::<usize>("max-weight").unwrap(), Some(3));
        assert_eq!(c.get::<CodeList>("code").unwrap().unwrap().0.len(), 2);
        assert!(ConfigFile::parse("nonsense").is_err());
        assert_eq!(merge(Some(2usize), &c, "max-weight").unwrap(), Some(2));
    }
}
