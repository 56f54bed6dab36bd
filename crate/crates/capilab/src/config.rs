//! Run configuration: the TOML file schema and shared flag parsing.
//!
//! Command-line flags and a config file feed the same knobs; an explicit flag
//! wins over the file, the file wins over the built-in default. Unknown keys
//! in a file are rejected so that typos cannot silently fall back to
//! defaults.

use crate::error::{Error, Result};
use crate::geometry::Mode;
use serde::Deserialize;
use std::path::Path;

/// Schema version accepted by this binary; bump on any incompatible change.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub version: Option<u32>,
    pub mode: Option<String>,
    pub r: Option<f64>,
    pub theta: Option<f64>,
    /// Interpret `theta` as degrees.
    pub deg: Option<bool>,
    pub k: Option<u32>,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub amps: Option<Vec<f64>>,
    pub n_radial: Option<usize>,
    pub n_angular: Option<usize>,
    pub levels: Option<Vec<[usize; 2]>>,
    pub out: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        match cfg.version {
            Some(CONFIG_VERSION) => Ok(cfg),
            Some(v) => Err(Error::Config(format!(
                "unsupported config version {v}; this binary reads version {CONFIG_VERSION}"
            ))),
            None => Err(Error::Config(
                "config file must declare `version = 1`".into(),
            )),
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "planar" => Ok(Mode::Planar),
        "axisymmetric" => Ok(Mode::Axisymmetric),
        other => Err(Error::Config(format!(
            "mode must be `planar` or `axisymmetric`, got `{other}`"
        ))),
    }
}

/// Parse a refinement level written as `RADIALxANGULAR`, e.g. `32x64`.
pub fn parse_level(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("level `{s}` is not of the form RADIALxANGULAR"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    let nr = a.trim().parse::<usize>().map_err(|_| bad())?;
    let na = b.trim().parse::<usize>().map_err(|_| bad())?;
    if nr == 0 || na == 0 {
        return Err(bad());
    }
    Ok((nr, na))
}

pub fn to_radians(theta: f64, degrees: bool) -> f64 {
    if degrees {
        theta.to_radians()
    } else {
        theta
    }
}

/// Snap command-line angles within 1e-4 of the upright value to exactly
/// pi/2, so that truncated decimals like 1.5708 name the half ball instead
/// of tripping the strict domain validation.
pub fn snap_angle(theta: f64) -> f64 {
    if (theta - std::f64::consts::FRAC_PI_2).abs() <= 1e-4 {
        std::f64::consts::FRAC_PI_2
    } else {
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_round_trip_and_reject_unknown_keys() {
        let dir = std::env::temp_dir().join("capilab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.toml");
        std::fs::write(
            &good,
            "version = 1\nmode = \"planar\"\ntheta = 60.0\ndeg = true\namps = [0.05, 0.1]\n",
        )
        .unwrap();
        let cfg = FileConfig::load(&good).unwrap();
        assert_eq!(cfg.mode.as_deref(), Some("planar"));
        assert_eq!(cfg.deg, Some(true));
        assert_eq!(cfg.amps.as_deref(), Some(&[0.05, 0.1][..]));

        let bad = dir.join("bad.toml");
        std::fs::write(&bad, "version = 1\nthetaa = 1.0\n").unwrap();
        assert!(matches!(FileConfig::load(&bad), Err(Error::Config(_))));

        let stale = dir.join("stale.toml");
        std::fs::write(&stale, "version = 99\n").unwrap();
        assert!(matches!(FileConfig::load(&stale), Err(Error::Config(_))));

        let unversioned = dir.join("unversioned.toml");
        std::fs::write(&unversioned, "theta = 1.0\n").unwrap();
        assert!(matches!(FileConfig::load(&unversioned), Err(Error::Config(_))));
    }

    #[test]
    fn flag_helpers_parse_and_validate() {
        assert_eq!(parse_mode("planar").unwrap(), Mode::Planar);
        assert_eq!(parse_mode("axisymmetric").unwrap(), Mode::Axisymmetric);
        assert!(parse_mode("spherical").is_err());
        assert_eq!(parse_level("16x32").unwrap(), (16, 32));
        assert_eq!(parse_level(" 64x128 ").unwrap(), (64, 128));
        assert!(parse_level("16").is_err());
        assert!(parse_level("0x32").is_err());
        assert!((to_radians(90.0, true) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(to_radians(1.25, false), 1.25);
        assert_eq!(snap_angle(1.5708), std::f64::consts::FRAC_PI_2);
        assert_eq!(snap_angle(to_radians(90.0, true)), std::f64::consts::FRAC_PI_2);
        assert_eq!(snap_angle(1.0472), 1.0472);
    }
}
