//! Experiment manifests: the shipped defaults, flag overrides and files.

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use rdm_core::potential::{make_alt2_site, DisplacementLaw, RadialProfile, Shape, SingleSite};

pub const DEFAULTS: &str = include_str!("../defaults.json");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub site: SingleSite,
    pub law: DisplacementLaw,
    pub dim: usize,
    pub extent: usize,
    pub resolution: usize,
    pub trials: usize,
    pub seed: u64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_res: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halvings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eigs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<bool>,
}

impl Manifest {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get<T: Copy>(&self, field: Option<T>, name: &str) -> anyhow::Result<T> {
        field.ok_or_else(|| anyhow!("manifest for `{}` lacks `{name}`", self.command))
    }
}

/// How a manifest key is parsed from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Site,
    Law,
    Int,
    Real,
    Bool,
    IntList,
    Format,
}

/// Manifest keys exposed as flags: (key, flag, kind, help).
pub const FLAGS: &[(&str, &str, Kind, &str)] = &[
    ("site", "site", Kind::Site, "single-site potential: default, cosine_sq, alt2 or zero"),
    ("law", "law", Kind::Law, "displacement law: corner_uniform, box_uniform, corner_smoothed or minimizer"),
    ("dim", "dim", Kind::Int, "spatial dimension"),
    ("extent", "extent", Kind::Int, "half-extent L of the box (largest L for scaling commands)"),
    ("resolution", "resolution", Kind::Int, "grid nodes per unit cell and axis"),
    ("trials", "trials", Kind::Int, "Monte Carlo trials"),
    ("seed", "seed", Kind::Int, "random seed"),
    ("format", "format", Kind::Format, "data file format: csv or json"),
    ("c1", "c1", Kind::Real, "threshold constant in E0 + c1/L^2"),
    ("grid_res", "grid-res", Kind::Int, "displacement grid points per axis"),
    ("k_max", "k-max", Kind::Int, "excited levels in spectral sums"),
    ("delta2", "delta2", Kind::Real, "energy filter; computed from the periodic minimizer cell when unset"),
    ("interval_width", "interval-width", Kind::Real, "width of the widest counting interval"),
    ("halvings", "halvings", Kind::Int, "number of interval halvings"),
    ("ids_lo", "ids-lo", Kind::Real, "smallest E - E0, in units of the site amplitude"),
    ("ids_hi", "ids-hi", Kind::Real, "largest E - E0, in units of the site amplitude"),
    ("ids_points", "ids-points", Kind::Int, "number of grid energies"),
    ("n_eigs", "n-eigs", Kind::Int, "eigenvectors per trial"),
    ("periods", "periods", Kind::IntList, "comma-separated periods"),
    ("defect", "defect", Kind::Bool, "insert one non-matching pair"),
];

pub fn named_site(name: &str) -> anyhow::Result<SingleSite> {
    Ok(match name {
        "default" => SingleSite::default_site(),
        "cosine_sq" => SingleSite { shape: Shape::CosineSq, ..SingleSite::default_site() },
        "alt2" => make_alt2_site(RadialProfile { height: 0.5, radius: 0.2 }, 0.2)?,
        "zero" => SingleSite::zero(),
        other => bail!("unknown site `{other}`"),
    })
}

pub fn named_law(name: &str) -> anyhow::Result<DisplacementLaw> {
    Ok(match name {
        "corner_uniform" => DisplacementLaw::CornerUniform,
        "box_uniform" => DisplacementLaw::BoxUniform,
        "corner_smoothed" => DisplacementLaw::corner_smoothed(),
        "minimizer" => DisplacementLaw::Minimizer,
        other => bail!("unknown law `{other}`"),
    })
}

fn defaults() -> Value {
    serde_json::from_str(DEFAULTS).expect("defaults manifest is valid JSON")
}

pub fn command_names() -> Vec<String> {
    defaults()["commands"].as_object().expect("commands").keys().cloned().collect()
}

/// Defaults for one command, with site and law still given by name.
pub fn command_defaults(command: &str) -> anyhow::Result<Map<String, Value>> {
    let all = defaults();
    let mut out = all["common"].as_object().expect("common").clone();
    let own = all["commands"].get(command).and_then(Value::as_object).ok_or_else(|| anyhow!("unknown command `{command}`"))?;
    for (k, v) in own {
        out.insert(k.clone(), v.clone());
    }
    out.insert("command".into(), Value::String(command.into()));
    out.insert("schema_version".into(), Value::from(all["schema_version"].as_u64().unwrap_or(1)));
    Ok(out)
}

/// Text shown as a flag default.
pub fn display_default(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => Some(items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
        other => Some(other.to_string()),
    }
}

pub fn parse_flag(kind: Kind, raw: &str) -> anyhow::Result<Value> {
    Ok(match kind {
        Kind::Site | Kind::Law | Kind::Format => Value::String(raw.into()),
        Kind::Int => Value::from(raw.parse::<u64>().with_context(|| format!("`{raw}` is not a nonnegative integer"))?),
        Kind::Real => Value::from(raw.parse::<f64>().with_context(|| format!("`{raw}` is not a number"))?),
        Kind::Bool => Value::Bool(raw.parse::<bool>().with_context(|| format!("`{raw}` is not true or false"))?),
        Kind::IntList => Value::Array(
            raw.split(',')
                .map(|s| s.trim().parse::<u64>().map(Value::from).with_context(|| format!("`{s}` is not an integer")))
                .collect::<anyhow::Result<_>>()?,
        ),
    })
}

/// Turns a merged key map into a manifest, resolving site and law names.
pub fn finish(mut map: Map<String, Value>) -> anyhow::Result<Manifest> {
    if let Some(Value::String(name)) = map.get("site") {
        let site = named_site(name)?;
        map.insert("site".into(), serde_json::to_value(site)?);
    }
    if let Some(Value::String(name)) = map.get("law") {
        let law = named_law(name)?;
        map.insert("law".into(), serde_json::to_value(law)?);
    }
    map.retain(|_, v| !v.is_null());
    let m: Manifest = serde_json::from_value(Value::Object(map)).context("invalid manifest")?;
    if m.schema_version != SCHEMA_VERSION {
        bail!("manifest schema version {} is not {SCHEMA_VERSION}", m.schema_version);
    }
    m.site.validate()?;
    Ok(m)
}

/// Reads a manifest file: either a bare manifest or a `.meta.json` holding one.
pub fn read_manifest_file(path: &std::path::Path) -> anyhow::Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let obj = match v.get("manifest") {
        Some(inner) => inner.clone(),
        None => v,
    };
    match obj {
        Value::Object(map) => Ok(map),
        _ => bail!("{} does not hold a manifest object", path.display()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_command_default_is_a_valid_manifest() {
        for c in command_names() {
            let m = finish(command_defaults(&c).unwrap()).unwrap();
            let back: Manifest = serde_json::from_str(&m.canonical_json()).unwrap();
            assert_eq!(back, m);
            assert_eq!(m.sha256().len(), 64);
        }
    }

    #[test]
    fn every_default_key_has_a_flag() {
        for c in command_names() {
            for k in command_defaults(&c).unwrap().keys() {
                if k != "command" && k != "schema_version" {
                    assert!(FLAGS.iter().any(|f| f.0 == k), "{k}");
                }
            }
        }
    }
}
