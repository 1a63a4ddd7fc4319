//! Run configuration: parsing, defaults and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use solibound::kp::{Alpha, KpParams};
use solibound::toda::{Example, TodaParams};
use solibound::verify::{toda_contour_range, toda_desk_box};
use solibound::{AxisRange, GridSpec, C64};

/// A configuration problem; always exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<solibound::Error> for ConfigError {
    fn from(e: solibound::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Verify,
    Contour,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Kp,
    Toda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solution {
    Seed,
    Dressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `axis:min:max:count`. Lattice axes take integer bounds and may omit the count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for AxisSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("grid {s:?}: {v:?} is not a number")))
        };
        match parts.as_slice() {
            [axis, min, max, count] => Ok(AxisSpec {
                axis: axis.trim().to_string(),
                min: num(min)?,
                max: num(max)?,
                count: count
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("grid {s:?}: count {count:?} is not a positive integer")))?,
            }),
            [axis, min, max] if axis.trim() == "n" => {
                let (lo, hi) = (num(min)?, num(max)?);
                Ok(AxisSpec {
                    axis: "n".into(),
                    min: lo,
                    max: hi,
                    count: (hi - lo).max(0.0) as usize + 1,
                })
            }
            _ => Err(bad(format!("grid {s:?}: expected axis:min:max:count"))),
        }
    }
}

impl AxisSpec {
    fn new(axis: &str, min: f64, max: f64, count: usize) -> Self {
        AxisSpec {
            axis: axis.into(),
            min,
            max,
            count,
        }
    }

    fn range(&self) -> AxisRange {
        AxisRange::new(self.min, self.max, self.count)
    }

    fn lattice(&self) -> Result<(i64, i64), ConfigError> {
        let int = |v: f64| {
            if v.fract() == 0.0 && v.abs() < 1e9 {
                Ok(v as i64)
            } else {
                Err(bad(format!("grid axis n: bounds must be integers, got {v}")))
            }
        };
        let (lo, hi) = (int(self.min)?, int(self.max)?);
        if hi < lo {
            return Err(bad(format!("grid axis n: empty range {lo}..{hi}")));
        }
        if self.count as i64 != hi - lo + 1 {
            return Err(bad(format!(
                "grid axis n: count must be {} for {lo}..{hi}, got {}",
                hi - lo + 1,
                self.count
            )));
        }
        Ok((lo, hi))
    }
}

/// Everything a run depends on. Embedded, fully resolved, in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub model: Option<Model>,
    #[serde(default)]
    pub example: Option<String>,
    #[serde(default)]
    pub solution: Option<Solution>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub grid: Vec<AxisSpec>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            model: None,
            example: None,
            solution: None,
            params: BTreeMap::new(),
            grid: Vec::new(),
            h: None,
            suite: None,
            format: None,
            out: None,
        }
    }

    /// Reads a configuration file: either a bare config or a report embedding one.
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("config {}: {e}", path.display())))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| bad(format!("config {}: {e}", path.display())))?;
        let v = match v.get("config") {
            Some(inner) => inner.clone(),
            None => v,
        };
        serde_json::from_value(v).map_err(|e| bad(format!("config {}: {e}", path.display())))
    }

    pub fn format(&self) -> Format {
        self.format.expect("resolved config has a format")
    }
}

/// Parses `key=value`.
pub fn parse_param(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| bad(format!("param {s:?}: expected key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(bad(format!("param {s:?}: expected key=value")));
    }
    Ok((k.to_string(), v.to_string()))
}

fn real(params: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ConfigError> {
    params
        .get(key)
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("param {key}: {v:?} is not a finite number")))
        })
        .transpose()
}

fn complex(params: &BTreeMap<String, String>, key: &str) -> Result<Option<C64>, ConfigError> {
    params
        .get(key)
        .map(|v| {
            C64::from_str(v)
                .ok()
                .filter(|z| z.is_finite())
                .ok_or_else(|| bad(format!("param {key}: {v:?} is not a finite complex number")))
        })
        .transpose()
}

fn check_keys(params: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), ConfigError> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(bad(format!(
                "param {k}: unknown for this model (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Model parameters built from a resolved config.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(untagged)]
pub enum ModelParams {
    Kp(KpParams),
    Toda(TodaParams),
}

/// KP parameters with defaults `alpha = 1`, `y0 = 1`, `p = 0.5`. Fills `params` in place.
fn kp_params(params: &mut BTreeMap<String, String>) -> Result<KpParams, ConfigError> {
    check_keys(params, &["alpha", "y0", "p"])?;
    let alpha = match params.get("alpha") {
        Some(a) => a.parse::<Alpha>()?,
        None => Alpha::One,
    };
    let y0 = real(params, "y0")?.unwrap_or(1.0);
    let p = complex(params, "p")?.unwrap_or(C64::new(0.5, 0.0));
    params.insert("alpha".into(), alpha.to_string());
    params.entry("y0".into()).or_insert_with(|| num(y0));
    params.entry("p".into()).or_insert_with(|| p.to_string());
    let prm = KpParams::new(alpha, y0, p);
    prm.validate()?;
    Ok(prm)
}

/// Lattice parameters. The contour may be given by `x0` or by `D`, not both.
fn toda_params(example: Example, params: &mut BTreeMap<String, String>) -> Result<TodaParams, ConfigError> {
    check_keys(params, &["c", "x0", "D", "p", "k"])?;
    let desk = TodaParams::desk(example);
    let c = real(params, "c")?;
    let x0 = real(params, "x0")?;
    let d = real(params, "D")?;
    let p = complex(params, "p")?.unwrap_or(desk.p);
    let k = complex(params, "k")?.unwrap_or(C64::new(1.0, 0.0));
    if x0.is_some() && d.is_some() {
        return Err(bad("params x0 and D both fix the contour; give one"));
    }
    if let Some(d) = d {
        if !(d > 0.0) {
            return Err(bad(format!("param D: contour constant must be positive, got {d}")));
        }
    }
    let fixed_c = |want: f64| match c {
        Some(v) if v != want => Err(bad(format!("param c: {example} has c = {want}, got {v}"))),
        _ => Ok(want),
    };
    let prm = match example {
        Example::Ex1 => {
            let c = c.unwrap_or(desk.c);
            let x0 = x0.or(d.map(|d| d.ln() / (2.0 * c))).unwrap_or(desk.x0);
            TodaParams::ex1(c, x0, p)?
        }
        Example::Ex1c1 => {
            let c = fixed_c(1.0)?;
            let x0 = x0.or(d.map(|d| d.ln() / (2.0 * c))).unwrap_or(desk.x0);
            TodaParams::ex1c1(x0, p)?
        }
        Example::Ex2 => {
            let c = c.unwrap_or(desk.c);
            let x0 = x0.or(d.map(|d| 0.5 * d.ln())).unwrap_or(desk.x0);
            TodaParams::ex2(c, x0, p)?
        }
        Example::Ex3 => {
            fixed_c(-1.0)?;
            let d = d.or(x0.map(|x0| (-2.0 * x0).exp())).unwrap_or(desk.d);
            TodaParams::ex3(d, p)?
        }
    }
    .with_amplitude(k)?;
    prm.validate()?;
    params.insert("c".into(), num(prm.c));
    if example == Example::Ex3 {
        params.entry("D".into()).or_insert_with(|| num(prm.d));
    } else if !params.contains_key("D") {
        params.entry("x0".into()).or_insert_with(|| num(prm.x0));
    }
    params.entry("p".into()).or_insert_with(|| prm.p.to_string());
    params.entry("k".into()).or_insert_with(|| prm.k.to_string());
    Ok(prm)
}

/// A resolved run: the config with every default written in, and what it builds.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub params: Option<ModelParams>,
    pub grid: Option<GridSpec>,
}

fn fill_axes(given: &[AxisSpec], defaults: Vec<AxisSpec>) -> Result<Vec<AxisSpec>, ConfigError> {
    for g in given {
        if !defaults.iter().any(|d| d.axis == g.axis) {
            let names: Vec<&str> = defaults.iter().map(|d| d.axis.as_str()).collect();
            return Err(bad(format!(
                "grid axis {:?}: expected one of {}",
                g.axis,
                names.join(", ")
            )));
        }
        if given.iter().filter(|o| o.axis == g.axis).count() > 1 {
            return Err(bad(format!("grid axis {:?} given twice", g.axis)));
        }
    }
    Ok(defaults
        .into_iter()
        .map(|d| given.iter().find(|g| g.axis == d.axis).cloned().unwrap_or(d))
        .collect())
}

fn build_grid(axes: &[AxisSpec]) -> Result<GridSpec, ConfigError> {
    let (lattice, cont): (Vec<&AxisSpec>, Vec<&AxisSpec>) = axes.iter().partition(|a| a.axis == "n");
    for a in &cont {
        if a.count == 0 || !a.min.is_finite() || !a.max.is_finite() || (a.count == 1 && a.min != a.max) {
            return Err(bad(format!(
                "grid axis {}: needs finite bounds and count >= 1 (count 1 needs min = max)",
                a.axis
            )));
        }
    }
    let mut g = GridSpec::new(cont.iter().map(|a| a.range()).collect())?;
    if let Some(n) = lattice.first() {
        let (lo, hi) = n.lattice()?;
        g = g.with_lattice(lo, hi)?;
    }
    Ok(g)
}

impl RunConfig {
    /// Fills defaults and validates. The returned config reproduces the run.
    pub fn resolve(mut self) -> Result<Resolved, ConfigError> {
        if self.command == Command::Verify {
            let suite = self.suite.get_or_insert_with(|| "all".into()).clone();
            if !solibound::verify::SUITE_NAMES.contains(&suite.as_str()) {
                return Err(bad(format!("unknown suite {suite:?}")));
            }
            if let Some(h) = self.h {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(bad(format!("h must be positive and finite, got {h}")));
                }
            }
            if self.model.is_some() || self.example.is_some() || !self.params.is_empty() || !self.grid.is_empty() {
                return Err(bad("verify takes --suite, --h, --format and --out only"));
            }
            self.format.get_or_insert(Format::Json);
            return Ok(Resolved {
                config: self,
                params: None,
                grid: None,
            });
        }
        if self.suite.is_some() {
            return Err(bad("--suite applies to verify only"));
        }
        let model = *self.model.get_or_insert(Model::Kp);
        self.solution.get_or_insert(Solution::Dressed);
        self.format.get_or_insert(Format::Csv);
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(bad(format!("h must be positive and finite, got {h}")));
            }
        }
        let (params, defaults) = match model {
            Model::Kp => {
                if self.example.is_some() {
                    return Err(bad("--example applies to the toda model only"));
                }
                let prm = kp_params(&mut self.params)?;
                if self.solution == Some(Solution::Dressed) {
                    prm.validate_dressed()?;
                }
                let axes = match self.command {
                    Command::Contour => vec![AxisSpec::new("x", 0.0, 0.0, 1), AxisSpec::new("t", 0.5, 2.0, 100)],
                    _ => vec![
                        AxisSpec::new("x", -4.0, 4.0, 21),
                        AxisSpec::new("Y", -2.0, 2.0, 21),
                        AxisSpec::new("T", 0.5, 2.0, 21),
                    ],
                };
                (ModelParams::Kp(prm), axes)
            }
            Model::Toda => {
                let example: Example = self.example.get_or_insert_with(|| "ex1".into()).parse()?;
                self.example = Some(example.name().into());
                let prm = toda_params(example, &mut self.params)?;
                let axes = match self.command {
                    Command::Contour => {
                        let (lo, hi) = toda_contour_range(example);
                        vec![AxisSpec::new("y", lo, hi, 100), AxisSpec::new("n", -5.0, 5.0, 11)]
                    }
                    _ => {
                        let (x, y) = toda_desk_box(example);
                        vec![
                            AxisSpec::new("X", x.min, x.max, x.count),
                            AxisSpec::new("Y", y.min, y.max, y.count),
                            AxisSpec::new("n", -5.0, 5.0, 11),
                        ]
                    }
                };
                (ModelParams::Toda(prm), axes)
            }
        };
        self.grid = fill_axes(&self.grid, defaults)?;
        let grid = build_grid(&self.grid)?;
        Ok(Resolved {
            config: self,
            params: Some(params),
            grid: Some(grid),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_specs() {
        let a: AxisSpec = "x:-4:4:21".parse().unwrap();
        assert_eq!(a, AxisSpec::new("x", -4.0, 4.0, 21));
        let n: AxisSpec = "n:-3:3".parse().unwrap();
        assert_eq!(n.count, 7);
        assert!("x:0:1".parse::<AxisSpec>().is_err());
        assert!("x:a:1:3".parse::<AxisSpec>().is_err());
        assert!(AxisSpec::new("n", 0.5, 2.0, 2).lattice().is_err());
    }

    #[test]
    fn params() {
        assert_eq!(parse_param("p=0.5").unwrap(), ("p".into(), "0.5".into()));
        assert!(parse_param("p").is_err());
        let mut m = BTreeMap::new();
        m.insert("q".to_string(), "1".to_string());
        assert!(kp_params(&mut m).is_err());
    }

    #[test]
    fn resolution_is_idempotent() {
        for (model, example) in [
            (Model::Kp, None),
            (Model::Toda, Some("ex3")),
            (Model::Toda, Some("ex2")),
        ] {
            let mut c = RunConfig::new(Command::Eval);
            c.model = Some(model);
            c.example = example.map(String::from);
            let once = c.resolve().unwrap().config;
            let twice = once.clone().resolve().unwrap().config;
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn contour_by_constant_or_base_point() {
        let mut m = BTreeMap::new();
        m.insert("D".to_string(), "1".to_string());
        m.insert("c".to_string(), "1".to_string());
        let prm = toda_params(Example::Ex2, &mut m).unwrap();
        assert_eq!(prm.x0, 0.0);
        m.insert("x0".to_string(), "0".to_string());
        assert!(toda_params(Example::Ex2, &mut m).is_err());
        let mut m = BTreeMap::new();
        m.insert("c".to_string(), "2".to_string());
        assert!(toda_params(Example::Ex3, &mut m).is_err());
    }

    #[test]
    fn verify_rejects_unknown_suite() {
        let mut c = RunConfig::new(Command::Verify);
        c.suite = Some("kp-nope".into());
        assert!(c.resolve().is_err());
    }
}
