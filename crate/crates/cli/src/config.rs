//! JSON configuration: model parameters, sweep definition and series.
//!
//! All powers are given in dB. A config may carry `series`, each a partial
//! document merged over the base before the sweep runs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use rffso_core::analysis::{HarqParams, Method};
use rffso_core::channel::{db_to_linear, FsoLinkParams, RfLinkParams};
use rffso_core::mc::McConfig;
use rffso_core::scenario::Scenario;
use rffso_core::special::Detection;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsoConfig {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub detection: Detection,
    #[serde(default = "unit")]
    pub mean_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfConfig {
    pub nu: f64,
    pub omega: f64,
    /// Ideal amplifier: unit efficiency, linear, no output limit. When set,
    /// `epsilon`, `vartheta` and `p_max_db` are ignored.
    #[serde(default)]
    pub ideal_pa: bool,
    #[serde(default = "unit")]
    pub epsilon: f64,
    #[serde(default)]
    pub vartheta: f64,
    #[serde(default)]
    pub p_max_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    /// Total SNR used when the sweep axis is not `snr_db`.
    #[serde(default)]
    pub snr_db: f64,
    #[serde(default = "half")]
    pub split: f64,
}

fn unit() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SnrDb,
    Xi,
    NFso,
    Rate,
    MMax,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::Xi => "xi",
            Axis::NFso => "n_fso",
            Axis::Rate => "rate",
            Axis::MMax => "m_max",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Axis::NFso | Axis::MMax)
    }
}

/// Grid given either explicitly or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values { grid: Vec<f64> },
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: Axis,
    #[serde(flatten)]
    pub grid: Grid,
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match &self.grid {
            Grid::Values { grid } => grid.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || !(stop >= start) {
                    return Err(CliError::Config(format!(
                        "bad grid range {start}..{stop} step {step}"
                    )));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() {
            return Err(CliError::Config("sweep grid is empty".into()));
        }
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(CliError::Config("sweep grid has non-finite values".into()));
        }
        let up = pts.windows(2).all(|w| w[1] > w[0]);
        let down = pts.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(CliError::Config(
                "sweep grid must be strictly monotone".into(),
            ));
        }
        if self.axis.is_integer() && pts.iter().any(|p| p.fract() != 0.0 || *p < 1.0) {
            return Err(CliError::Config(format!(
                "axis {} needs positive integers",
                self.axis.as_str()
            )));
        }
        Ok(pts)
    }
}

/// Parameters of one evaluated system, before the sweep value is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub fso: FsoConfig,
    pub rf: RfConfig,
    pub harq: HarqParams,
    pub power: PowerConfig,
    pub mc: McConfig,
}

impl ModelConfig {
    /// Copy with the sweep coordinate set to `v`.
    pub fn at(&self, axis: Axis, v: f64) -> ModelConfig {
        let mut c = self.clone();
        match axis {
            Axis::SnrDb => c.power.snr_db = v,
            Axis::Xi => c.fso.xi = v,
            Axis::NFso => c.harq.n_fso = v as usize,
            Axis::Rate => c.harq.rate = v,
            Axis::MMax => c.harq.m_max = v as usize,
        }
        c
    }

    pub fn scenario(&self) -> rffso_core::Result<Scenario> {
        let f = &self.fso;
        let fso = FsoLinkParams::new(f.alpha, f.beta, f.xi, f.detection, f.mean_gain, 0.0)?;
        let r = &self.rf;
        let rf = if r.ideal_pa {
            RfLinkParams::ideal(r.nu, r.omega, 0.0)
        } else {
            RfLinkParams {
                nu: r.nu,
                omega: r.omega,
                epsilon: r.epsilon,
                vartheta: r.vartheta,
                p_max: r.p_max_db.map_or(f64::INFINITY, db_to_linear),
                p_cons: 0.0,
            }
        };
        let sc = Scenario {
            fso,
            rf,
            harq: self.harq,
            split: self.power.split,
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub name: String,
    #[serde(default)]
    pub overrides: Value,
}

/// A resolved series: a name and its full model.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub model: ModelConfig,
}

/// Everything needed to run a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    pub methods: Vec<Method>,
}

/// Parses a comma separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>, CliError> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: Method = part.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("method list is empty".into()));
    }
    Ok(out)
}

/// Recursively overlays `patch` on `base`; objects merge, everything else replaces.
pub fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p.clone(),
    }
}

/// Sets a dotted path such as `harq.rate` to a value parsed as JSON, or as
/// a plain string when it is not valid JSON.
pub fn set_path(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected key=value, got '{assignment}'")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    for key in path.split('.') {
        if key.is_empty() {
            return Err(CliError::Usage(format!("bad path '{path}'")));
        }
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        cur = cur
            .as_object_mut()
            .expect("object")
            .entry(key.to_string())
            .or_insert(Value::Null);
    }
    *cur = value;
    Ok(())
}

const MODEL_KEYS: [&str; 5] = ["fso", "rf", "harq", "power", "mc"];
const TOP_KEYS: [&str; 4] = ["name", "sweep", "methods", "series"];

fn model_part(doc: &Value) -> Value {
    let mut m = serde_json::Map::new();
    if let Value::Object(o) = doc {
        for k in MODEL_KEYS {
            if let Some(v) = o.get(k) {
                m.insert(k.to_string(), v.clone());
            }
        }
    }
    Value::Object(m)
}

fn parse_model(v: Value, what: &str) -> Result<ModelConfig, CliError> {
    let model: ModelConfig =
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    model
        .scenario()
        .map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    Ok(model)
}

/// Resolves a full config document into a sweep specification.
pub fn sweep_spec(doc: &Value) -> Result<SweepSpec, CliError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    if let Some(k) = obj
        .keys()
        .find(|k| !MODEL_KEYS.contains(&k.as_str()) && !TOP_KEYS.contains(&k.as_str()))
    {
        return Err(CliError::Config(format!("unknown config key '{k}'")));
    }
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .unwrap_or("custom")
        .to_string();
    let sweep: SweepConfig = serde_json::from_value(
        obj.get("sweep")
            .cloned()
            .ok_or_else(|| CliError::Config("missing 'sweep'".into()))?,
    )
    .map_err(|e| CliError::Config(format!("sweep: {e}")))?;
    let grid = sweep.points()?;

    let methods: Vec<Method> = match obj.get("methods") {
        None => vec![Method::Exact, Method::Linearized, Method::Asymptotic],
        Some(v) => {
            let names: Vec<String> = serde_json::from_value(v.clone())
                .map_err(|e| CliError::Config(format!("methods: {e}")))?;
            parse_methods(&names.join(",")).map_err(|e| CliError::Config(e.to_string()))?
        }
    };

    let base = model_part(doc);
    let series_cfg: Vec<SeriesConfig> = match obj.get("series") {
        None => Vec::new(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Config(format!("series: {e}")))?,
    };
    let series = if series_cfg.is_empty() {
        vec![Series {
            name: name.clone(),
            model: parse_model(base, "config")?,
        }]
    } else {
        let mut out = Vec::with_capacity(series_cfg.len());
        for s in series_cfg {
            let mut v = base.clone();
            merge(&mut v, &s.overrides);
            out.push(Series {
                model: parse_model(v, &format!("series '{}'", s.name))?,
                name: s.name,
            });
        }
        out
    };
    // Every grid point must produce a valid model.
    for s in &series {
        for &g in &grid {
            parse_model(
                serde_json::to_value(s.model.at(sweep.axis, g)).expect("serializable"),
                &format!("series '{}' at {}={g}", s.name, sweep.axis.as_str()),
            )?;
        }
    }
    Ok(SweepSpec {
        name,
        axis: sweep.axis,
        grid,
        series,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc() -> Value {
        crate::presets::preset("fig3").unwrap()
    }

    #[test]
    fn range_grid_is_inclusive() {
        let s: SweepConfig =
            serde_json::from_value(json!({"axis": "snr_db", "start": 0, "stop": 35, "step": 1}))
                .unwrap();
        let p = s.points().unwrap();
        assert_eq!(p.len(), 36);
        assert_eq!(p[35], 35.0);
    }

    #[test]
    fn grid_must_be_monotone() {
        let s: SweepConfig =
            serde_json::from_value(json!({"axis": "xi", "grid": [1, 3, 2]})).unwrap();
        assert!(s.points().is_err());
        let s: SweepConfig =
            serde_json::from_value(json!({"axis": "n_fso", "grid": [1, 2.5]})).unwrap();
        assert!(s.points().is_err());
    }

    #[test]
    fn empty_methods_rejected() {
        let mut d = doc();
        d["methods"] = json!([]);
        assert!(matches!(sweep_spec(&d), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut d = doc();
        d["harq"]["bogus"] = json!(1);
        assert!(sweep_spec(&d).is_err());
        let mut d = doc();
        d["extra"] = json!(1);
        assert!(sweep_spec(&d).is_err());
    }

    #[test]
    fn set_path_overrides_fields() {
        let mut d = doc();
        set_path(&mut d, "harq.rate=0.5").unwrap();
        set_path(&mut d, "fso.detection=im_dd").unwrap();
        let spec = sweep_spec(&d).unwrap();
        assert_eq!(spec.series[0].model.harq.rate, 0.5);
        assert_eq!(spec.series[0].model.fso.detection, Detection::ImDd);
        assert!(set_path(&mut d, "novalue").is_err());
    }

    #[test]
    fn series_merge_partial_documents() {
        let mut base = json!({"rf": {"nu": 1, "ideal_pa": true}});
        merge(
            &mut base,
            &json!({"rf": {"ideal_pa": false, "p_max_db": 18}}),
        );
        assert_eq!(
            base,
            json!({"rf": {"nu": 1, "ideal_pa": false, "p_max_db": 18}})
        );
    }

    #[test]
    fn ideal_flag_builds_unbounded_pa() {
        let spec = sweep_spec(&doc()).unwrap();
        let sc = spec.series[0].model.scenario().unwrap();
        assert_eq!(sc.rf.p_max, f64::INFINITY);
        assert_eq!(sc.rf.epsilon, 1.0);
    }
}
