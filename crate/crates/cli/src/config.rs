//! Config file: TOML with one section per module.
//!
//! ```toml
//! [environment]
//! variant = "iid_bounded"
//! M = 3
//! p = 0.9
//!
//! [experiment]
//! replicas = 500
//! horizon = 100000
//! master_seed = 7
//!
//! [verify]
//! window = "0:3"
//! depth = 4
//!
//! [delta_sweep]
//! specs = [[3, 0.9], [2, 0.6]]
//! ```

use std::path::Path;

use erw_core::EnvFamilySpec;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub environment: Option<EnvFamilySpec>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub delta_sweep: DeltaSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub replicas: Option<u64>,
    pub horizon: Option<u64>,
    pub right_threshold: Option<u64>,
    pub return_cutoff: Option<u64>,
    pub master_seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub window: Option<String>,
    pub depth: Option<u32>,
    pub horizon: Option<u64>,
    pub u_depth: Option<u32>,
    pub max_xyl: Option<u64>,
    pub coupling: Option<bool>,
    pub coupling_profile: Option<Vec<f64>>,
    pub coupling_samples: Option<u64>,
    pub coupling_steps: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    /// `[M, p]` pairs of `iid_bounded` environments.
    pub specs: Option<Vec<(u32, f64)>>,
}

pub fn load(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

/// Parses `lo:hi`.
pub fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("window `{s}` is not of the form lo:hi"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("window lower end `{lo}` is not an integer"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("window upper end `{hi}` is not an integer"))?;
    if lo > hi {
        return Err(format!("window {lo}:{hi} is empty"));
    }
    Ok((lo, hi))
}

/// Parses the short environment forms `single_cookie:P`, `iid_bounded:M:P`
/// and `constant_profile:P1,P2,...`.
pub fn parse_env(s: &str) -> Result<EnvFamilySpec, String> {
    let mut parts = s.split(':');
    let variant = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let prob = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("env: `{t}` is not a number"))
    };
    let spec = match (variant, rest.as_slice()) {
        ("single_cookie", [p]) => EnvFamilySpec::SingleCookie { p: prob(p)? },
        ("iid_bounded", [m, p]) => EnvFamilySpec::IidBounded {
            m: m.trim()
                .parse()
                .map_err(|_| format!("env: M `{m}` is not a non-negative integer"))?,
            p: prob(p)?,
        },
        ("constant_profile", [profile]) => EnvFamilySpec::ConstantProfile {
            profile: profile.split(',').map(prob).collect::<Result<_, _>>()?,
        },
        _ => {
            return Err(format!(
                "env `{s}`: expected single_cookie:P, iid_bounded:M:P or constant_profile:P1,P2,... \
                 (markov_modulated only via [environment] in --config)"
            ))
        }
    };
    spec.validate().map_err(|e| format!("env: {e}"))?;
    Ok(spec)
}

/// Parses `M:p` into an `iid_bounded` spec.
pub fn parse_delta_spec(s: &str) -> Result<EnvFamilySpec, String> {
    parse_env(&format!("iid_bounded:{s}"))
}
