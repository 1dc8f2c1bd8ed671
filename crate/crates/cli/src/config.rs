//! Run configuration: one JSON file plus `--set a.b=value` overrides on leaves.

use crate::CliError;
use levy_embed::density::DensitySpec;
use levy_embed::levy::LevyTriplet;
use levy_embed::poisson::{FeasibilityOptions, GridParams};
use levy_embed::verify::MCConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub h0: DensitySpec,
    pub h1: DensitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub triplet: LevyTriplet,
    pub pair: PairSpec,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub feasibility: FeasibilityOptions,
    #[serde(default)]
    pub mc: MCConfig,
    /// Regularization strength in (0, 1); absent means none.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    /// Brownian motion from N(0,1) to N(0,2).
    fn default() -> Self {
        Self {
            triplet: LevyTriplet::brownian(1.0),
            pair: PairSpec { h0: DensitySpec::gaussian(0.0, 1.0), h1: DensitySpec::gaussian(0.0, 2.0) },
            grid: GridParams::default(),
            feasibility: FeasibilityOptions::default(),
            mc: MCConfig::default(),
            epsilon: None,
            output_dir: default_output(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Read `path` (or start from the default) and apply `key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_json(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })?
            }
            None => Self::default(),
        };
        if overrides.is_empty() {
            return Ok(base);
        }
        let mut v = serde_json::to_value(&base).expect("config serializes");
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("after overrides: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Config(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        self.mc.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Set the leaf at a dotted path. The value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` has an empty segment")));
    }
    let mut node = root;
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| CliError::Config(format!("`{part}` in `{key}` is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| CliError::Config(format!("index {idx} in `{key}` is out of range ({len} items)")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            Value::Null => {
                *node = Value::Object(Default::default());
                let Value::Object(map) = node else { unreachable!() };
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            _ => return Err(CliError::Config(format!("`{key}` descends into a scalar at `{part}`"))),
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use levy_embed::density::MixtureComponent;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_json(
            r#"{"triplet": {"alpha2": 1.0, "gamma": 0.0, "nu": {"kind": "none"}},
                "pair": {"h0": {"kind": "gaussian", "params": {"mean": 0.0, "variance": 1.0}},
                         "h1": {"kind": "gaussian", "params": {"mean": 0.0, "variance": 2.0}}}}"#,
        )
        .unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_errors() {
        let mut v = serde_json::to_value(RunConfig::default()).unwrap();
        v["mc"]["n_path"] = 5.into();
        let err = RunConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("n_path"), "{err}");
        assert!(RunConfig::from_json("{ not json").unwrap_err().to_string().contains("line 1 column"));
    }

    #[test]
    fn overrides_reach_leaves() {
        let sets = ["mc.n_paths=500", "mc.path.seed=9", "epsilon=0.1", "pair.h1.params.variance=3", "mc.u_probe.1=4.5", "output_dir=elsewhere"];
        let c = RunConfig::load(None, &sets.map(String::from)).unwrap();
        assert_eq!(c.mc.n_paths, 500);
        assert_eq!(c.mc.path.seed, 9);
        assert_eq!(c.epsilon, Some(0.1));
        assert_eq!(c.pair.h1, DensitySpec::gaussian(0.0, 3.0));
        assert_eq!(c.mc.u_probe, vec![0.5, 4.5, 2.0]);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
        assert!(RunConfig::load(None, &["mc.nope=1".into()]).is_err());
        assert!(RunConfig::load(None, &["mc.n_paths".into()]).is_err());
        assert!(RunConfig::load(None, &["epsilon.x=1".into()]).is_err());
        assert!(RunConfig::load(None, &["mc.n_paths.x=1".into()]).is_err());
    }

    fn density() -> impl Strategy<Value = DensitySpec> {
        prop_oneof![
            (-5f64..5.0, 0.1f64..10.0).prop_map(|(m, v)| DensitySpec::gaussian(m, v)),
            (-5f64..5.0, 0.1f64..10.0).prop_map(|(location, scale)| DensitySpec::Laplace { location, scale }),
            (1.05f64..1.95, 0.1f64..3.0, 0.1f64..3.0).prop_map(|(index, scale, time)| DensitySpec::StableMarginal { index, scale, time }),
            prop::collection::vec((0.01f64..1.0, -3f64..3.0, 0.1f64..4.0), 1..4).prop_map(|c| DensitySpec::GaussianMixture {
                components: c.into_iter().map(|(weight, mean, variance)| MixtureComponent { weight, mean, variance }).collect()
            }),
        ]
    }

    fn triplet() -> impl Strategy<Value = LevyTriplet> {
        prop_oneof![
            (0.1f64..4.0).prop_map(LevyTriplet::brownian),
            (1.05f64..1.95, 0.1f64..3.0).prop_map(|(a, c)| LevyTriplet::symmetric_stable(a, c)),
            prop::collection::vec((-3f64..3.0, 0.01f64..2.0), 1..4).prop_map(|a| LevyTriplet::compound_poisson(&a, 0.0)),
        ]
    }

    proptest! {
        #[test]
        fn config_round_trips(
            triplet in triplet(), h0 in density(), h1 in density(),
            n in 100usize..1_000_000, seed in any::<u64>(), dt in 1e-5f64..1e-1,
            eps in prop::option::of(0.001f64..0.999),
            half_width in prop::option::of(1f64..1e3),
            probes in prop::collection::vec(-10f64..10.0, 0..5),
        ) {
            let mut c = RunConfig { triplet, pair: PairSpec { h0, h1 }, epsilon: eps, ..Default::default() };
            c.mc.n_paths = n;
            c.mc.path.seed = seed;
            c.mc.path.dt_base = dt;
            c.mc.u_probe = probes;
            c.grid.half_width = half_width;
            let text = c.to_json();
            let back = RunConfig::from_json(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
