//! Run configuration shared by the command line and config files.
//!
//! The canonical form is TOML with fields in declaration order, grids and
//! shifts as the same comma-separated strings the flags accept, and unset
//! optional fields omitted; parsing it and writing it again reproduces it
//! byte for byte.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c64;
use crate::pseudospectra::GridSpec;

/// Shift for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MuPolicy {
    #[default]
    Auto,
    Value(Complex64),
}

impl FromStr for MuPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(MuPolicy::Auto);
        }
        let v = parse_f64_list(s)?;
        match v[..] {
            [re] => Ok(MuPolicy::Value(c64(re, 0.0))),
            [re, im] => Ok(MuPolicy::Value(c64(re, im))),
            _ => Err(Error::InvalidArgument(format!("shift must be 'auto' or 'RE,IM', got '{s}'"))),
        }
    }
}

impl fmt::Display for MuPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuPolicy::Auto => f.write_str("auto"),
            MuPolicy::Value(z) => write!(f, "{},{}", z.re, z.im),
        }
    }
}

impl TryFrom<String> for MuPolicy {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MuPolicy> for String {
    fn from(m: MuPolicy) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::InvalidArgument(format!("unknown output format '{other}' (csv, json, svg)"))),
        }
    }
}

/// Comma-separated floats; every entry must be finite.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::InvalidArgument(format!("'{t}' is not a finite number"))),
            }
        })
        .collect()
}

/// `re0,re1,im0,im1,nx,ny`.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(Error::InvalidArgument(format!("grid needs re0,re1,im0,im1,nx,ny; got '{s}'")));
    }
    let b = parse_f64_list(&parts[..4].join(","))?;
    let n = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("grid size '{t}' is not a positive integer")))
    };
    GridSpec::new(b[0], b[1], b[2], b[3], n(parts[4])?, n(parts[5])?)
}

pub fn format_grid(g: &GridSpec) -> String {
    format!("{},{},{},{},{},{}", g.re_min, g.re_max, g.im_min, g.im_max, g.nx, g.ny)
}

mod grid_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &Option<GridSpec>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match g {
            Some(g) => s.serialize_some(&format_grid(g)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<GridSpec>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_grid(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub const DEFAULT_TMAX: f64 = 20.0;
pub const DEFAULT_NT: usize = 201;

/// `logspace(-6, 0, 13)`.
pub fn default_epsilons() -> Vec<f64> {
    (0..13).map(|k| 10f64.powf(-6.0 + 0.5 * k as f64)).collect()
}

fn default_tmax() -> f64 {
    DEFAULT_TMAX
}

fn default_nt() -> usize {
    DEFAULT_NT
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h: Option<PathBuf>,
    #[serde(default)]
    pub mu: MuPolicy,
    /// Number of infinite eigenvalues, overriding detection.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(with = "grid_string", skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_epsilons")]
    pub eps: Vec<f64>,
    #[serde(default = "default_tmax")]
    pub tmax: f64,
    #[serde(default = "default_nt")]
    pub nt: usize,
    /// Projection subspace dimension.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            a: None,
            e: None,
            h: None,
            mu: MuPolicy::Auto,
            d: None,
            grid: None,
            eps: default_epsilons(),
            tmax: DEFAULT_TMAX,
            nt: DEFAULT_NT,
            k: None,
            seed: 0,
            out: None,
            formats: default_formats(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(1);
            Error::Parse { line, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("every field is TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidArgument(format!("eps must be a nonempty list of positive numbers, got {:?}", self.eps)));
        }
        if !(self.tmax.is_finite() && self.tmax > 0.0) {
            return Err(Error::InvalidArgument(format!("tmax must be positive, got {}", self.tmax)));
        }
        if self.nt < 2 {
            return Err(Error::InvalidArgument(format!("nt must be at least 2, got {}", self.nt)));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidArgument("k must be positive".into()));
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        if let MuPolicy::Value(z) = self.mu {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidArgument("shift must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_fill_an_empty_file() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.eps.len(), 13);
        assert!((c.eps[0] - 1e-6).abs() < 1e-21 && c.eps[12] == 1.0);
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let text = "mu = \"0.25, 1\"\n  grid = \"-3,1,-2,2,41,41\"\nformats=['svg','csv']\nk=5\na='A.mtx'\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.mu, MuPolicy::Value(c64(0.25, 1.0)));
        let canon = c.canonical();
        assert_eq!(RunConfig::parse(&canon).unwrap().canonical(), canon);
        assert!(canon.starts_with("a = \"A.mtx\"\nmu = \"0.25,1\"\n"), "{canon}");
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(matches!(RunConfig::parse("unknown = 1"), Err(Error::Parse { .. })));
        assert!(matches!(RunConfig::parse("\n\nnt = \"x\""), Err(Error::Parse { line: 3, .. })));
        assert!(RunConfig::parse("eps = [1e-3, -1]").is_err());
        assert!(RunConfig::parse("grid = \"1,0,0,1,5,5\"").is_err());
        assert!(RunConfig::parse("mu = \"1,2,3\"").is_err());
        assert!(RunConfig::parse("k = 0").is_err());
    }

    #[test]
    fn flag_parsers() {
        assert_eq!("auto".parse::<MuPolicy>().unwrap(), MuPolicy::Auto);
        assert_eq!("-1".parse::<MuPolicy>().unwrap(), MuPolicy::Value(c64(-1.0, 0.0)));
        let g = parse_grid("-3,1,-2,2,41,31").unwrap();
        assert_eq!((g.nx, g.ny, g.re_min), (41, 31, -3.0));
        assert_eq!(parse_grid(&format_grid(&g)).unwrap(), g);
        assert!(parse_f64_list("1,nan").is_err());
        assert_eq!("SVG".parse::<OutputFormat>().unwrap(), OutputFormat::Svg);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip(re in -1e3f64..1e3, im in -1e3f64..1e3, eps in proptest::collection::vec(1e-12f64..1e2, 1..5),
                      tmax in 1e-3f64..1e3, nt in 2usize..1000, k in proptest::option::of(1usize..100), seed in any::<u64>()) {
            let c = RunConfig { mu: MuPolicy::Value(c64(re, im)), eps, tmax, nt, k, seed,
                                grid: Some(GridSpec::new(re - 1.0, re + 1.0, im - 0.5, im + 0.5, 11, 13).unwrap()),
                                h: Some(PathBuf::from("dir with space/H.mtx")), ..RunConfig::default() };
            let canon = c.canonical();
            let back = RunConfig::parse(&canon).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.canonical(), canon);
        }
    }
}
