//! The three subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use solibound::kp::{contour_point, kp_boundary_residual, kp_dressed, kp_seed, KpParams, Phase};
use solibound::real::cx;
use solibound::toda::{toda_boundary_residual, TodaField, TodaParams, TodaSolution, BOUNDARY_STEP};
use solibound::verify::{suite, suite_with_step, CheckOutcome};
use solibound::{Dd, Error, Location, Point, Real, ScalarField, C64};

use crate::config::{ConfigError, Format, ModelParams, Resolved, RunConfig, Solution};

/// Outcome of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum Status {
    Ok,
    /// Poles (eval, contour) or failed checks (verify).
    Flagged,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleRecord {
    pub at: Location,
    pub code: &'static str,
    pub message: String,
}

/// A table of rows; missing entries are poles.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Option<f64>>>,
}

fn cell(name: &str, v: Option<f64>) -> String {
    match v {
        Some(x) if name == "n" => format!("{}", x as i64),
        Some(x) => format!("{x:?}"),
        None => "NaN".into(),
    }
}

impl Table {
    fn csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(self.header.iter().zip(r).map(|(k, v)| cell(k, *v)))?;
        }
        Ok(w.into_inner()?)
    }

    fn json(&self) -> anyhow::Result<Vec<u8>> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| {
                        let j = match v {
                            Some(x) if *k == "n" => json!(*x as i64),
                            Some(x) => json!(x),
                            None => Value::Null,
                        };
                        (k.to_string(), j)
                    })
                    .collect();
                Value::Object(m)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&records)?;
        out.push(b'\n');
        Ok(out)
    }

    fn render(&self, format: Format) -> anyhow::Result<Vec<u8>> {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }
}

fn emit(bytes: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn sidecar_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => {
            let mut s = p.as_os_str().to_owned();
            s.push(".poles.json");
            PathBuf::from(s)
        }
        None => PathBuf::from("solibound.poles.json"),
    }
}

fn re_im(z: C64) -> [Option<f64>; 2] {
    [Some(z.re), Some(z.im)]
}

/// Rows of one sample: values, or a pole, or a configuration error.
type RowResult = Result<Vec<Option<f64>>, Error>;

fn collect(
    locations: Vec<(Location, Vec<Option<f64>>)>,
    results: Vec<RowResult>,
    width: usize,
) -> Result<(Vec<Vec<Option<f64>>>, Vec<PoleRecord>), ConfigError> {
    let mut rows = Vec::with_capacity(results.len());
    let mut poles = Vec::new();
    for ((at, coords), r) in locations.into_iter().zip(results) {
        match r {
            Ok(vals) => rows.push(coords.into_iter().chain(vals).collect()),
            Err(e) if e.is_pole() => {
                poles.push(PoleRecord {
                    at: e.location().unwrap_or(at),
                    code: e.code(),
                    message: e.to_string(),
                });
                let mut row = coords;
                row.resize(width, None);
                rows.push(row);
            }
            Err(e) => return Err(ConfigError(format!("evaluation failed: {e}"))),
        }
    }
    Ok((rows, poles))
}

fn finish(table: Table, poles: Vec<PoleRecord>, cfg: &RunConfig, params: &ModelParams) -> anyhow::Result<Status> {
    emit(&table.render(cfg.format())?, cfg.out.as_deref())?;
    if poles.is_empty() {
        return Ok(Status::Ok);
    }
    let path = sidecar_path(cfg.out.as_deref());
    let report = json!({ "config": cfg, "resolved_params": params, "poles": poles });
    std::fs::write(&path, serde_json::to_vec_pretty(&report)?)?;
    for p in poles.iter().take(5) {
        eprintln!("{}", p.message);
    }
    eprintln!("{} pole(s); report written to {}", poles.len(), path.display());
    Ok(Status::Flagged)
}

fn kp_row(pt: &Point, prm: &KpParams, solution: Solution) -> RowResult {
    match solution {
        Solution::Seed => {
            let (u, w) = kp_seed(pt, prm)?;
            Ok([re_im(u), re_im(w)].concat())
        }
        Solution::Dressed => {
            let d = kp_dressed(pt, prm, Phase::Corrected)?;
            Ok([re_im(d.u), re_im(d.w), re_im(d.tau)].concat())
        }
    }
}

fn toda_solution(s: Solution) -> TodaSolution {
    match s {
        Solution::Seed => TodaSolution::Seed,
        Solution::Dressed => TodaSolution::Dressed,
    }
}

pub fn eval(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let params = r.params.expect("resolved model params");
    let points = r
        .grid
        .as_ref()
        .expect("resolved grid")
        .points()
        .map_err(ConfigError::from)?;
    let solution = cfg.solution.expect("resolved solution");
    let (header, results): (Vec<&'static str>, Vec<RowResult>) = match params {
        ModelParams::Kp(prm) => {
            let mut header = vec!["x", "Y", "T", "u_re", "u_im", "w_re", "w_im"];
            if solution == Solution::Dressed {
                header.extend(["tau_re", "tau_im"]);
            }
            (header, points.par_iter().map(|p| kp_row(p, &prm, solution)).collect())
        }
        ModelParams::Toda(prm) => {
            let u = TodaField::new(&prm, toda_solution(solution));
            (
                vec!["X", "Y", "n", "u_re", "u_im"],
                points
                    .par_iter()
                    .map(|p| Ok(re_im(u.eval::<f64>(p)?).to_vec()))
                    .collect(),
            )
        }
    };
    let locs = points
        .iter()
        .map(|p| {
            let coords = match params {
                ModelParams::Kp(_) => p.axes.iter().map(|&v| Some(v)).collect(),
                ModelParams::Toda(_) => vec![Some(p.axes[0]), Some(p.axes[1]), Some(p.n as f64)],
            };
            (p.location(), coords)
        })
        .collect();
    let (rows, poles) = collect(locs, results, header.len())?;
    finish(Table { header, rows }, poles, cfg, &params)
}

fn kp_contour_row(x: f64, t: f64, prm: &KpParams, solution: Solution) -> RowResult {
    let pt = contour_point(Dd::from(x), Dd::from(t), prm.y0)?;
    let fields = solibound::kp::kp_fields(
        prm,
        match solution {
            Solution::Seed => solibound::kp::KpSolution::Seed,
            Solution::Dressed => solibound::kp::KpSolution::Dressed,
        },
    );
    let res = cx::lower(kp_boundary_residual(&pt, &fields, prm)?);
    let low = pt.lower();
    let defect = (pt.axes[1] * pt.axes[2] - Dd::from(prm.y0 * prm.y0)).abs().to_f64();
    Ok(vec![
        Some(low.axes[1]),
        Some(low.axes[2]),
        Some(defect),
        Some(res.re),
        Some(res.im),
    ])
}

fn toda_contour_row(y: f64, n: i64, prm: &TodaParams, u: &TodaField, h: f64) -> RowResult {
    let pt = prm.contour_point(y, n);
    let res = toda_boundary_residual(&pt, u, prm, h)?;
    let defect = prm.contour_defect(pt.axes[0], pt.axes[1]) * prm.d;
    Ok(vec![
        Some(pt.axes[0]),
        Some(pt.axes[1]),
        Some(defect),
        Some(res.re),
        Some(res.im),
    ])
}

pub fn contour(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let params = r.params.expect("resolved model params");
    let solution = cfg.solution.expect("resolved solution");
    let grid = r.grid.as_ref().expect("resolved grid");
    let (header, locs, results): (Vec<&'static str>, Vec<_>, Vec<RowResult>) = match params {
        ModelParams::Kp(prm) => {
            // axes are (x, t)
            let samples: Vec<(f64, f64)> = grid.axes()[0]
                .values()
                .flat_map(|x| grid.axes()[1].values().map(move |t| (x, t)))
                .collect();
            let results = samples
                .par_iter()
                .map(|&(x, t)| kp_contour_row(x, t, &prm, solution))
                .collect();
            let locs = samples
                .iter()
                .map(|&(x, t)| (Point::new(x, prm.y0, t).location(), vec![Some(x), Some(t)]))
                .collect();
            (
                vec!["x", "t", "Y", "T", "defect", "residual_re", "residual_im"],
                locs,
                results,
            )
        }
        ModelParams::Toda(prm) => {
            let (lo, hi) = grid.lattice().expect("contour grid has n");
            let samples: Vec<(f64, i64)> = grid.axes()[0]
                .values()
                .flat_map(|y| (lo..=hi).map(move |n| (y, n)))
                .collect();
            let u = TodaField::new(&prm, toda_solution(solution));
            let h = cfg.h.unwrap_or(BOUNDARY_STEP);
            let results = samples
                .par_iter()
                .map(|&(y, n)| toda_contour_row(y, n, &prm, &u, h))
                .collect();
            let locs = samples
                .iter()
                .map(|&(y, n)| (Point::lattice(prm.x0, y, n).location(), vec![Some(y), Some(n as f64)]))
                .collect();
            (
                vec!["y", "n", "X", "Y", "defect", "residual_re", "residual_im"],
                locs,
                results,
            )
        }
    };
    let (rows, poles) = collect(locs, results, header.len())?;
    finish(Table { header, rows }, poles, cfg, &params)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: &'a RunConfig,
    suite: &'a str,
    all_pass: bool,
    passed: usize,
    failed: usize,
    checks: &'a [CheckOutcome],
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3e}"))
}

pub fn verify(r: &Resolved) -> anyhow::Result<Status> {
    let cfg = &r.config;
    let name = cfg.suite.as_deref().expect("resolved suite");
    let s = match cfg.h {
        Some(h) => suite_with_step(name, h),
        None => suite(name),
    }
    .map_err(ConfigError::from)?;
    let outcomes = s.run();
    let passed = outcomes.iter().filter(|o| o.pass).count();
    let failed = outcomes.len() - passed;
    for o in &outcomes {
        eprintln!(
            "{} {:<44} value={} threshold={} order={}{}",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            fmt_opt(o.value),
            fmt_opt(o.threshold),
            o.order.map_or_else(|| "-".into(), |x| format!("{x:.2}")),
            o.error.as_ref().map_or_else(String::new, |e| format!(" error: {e}")),
        );
    }
    eprintln!("{passed} passed, {failed} failed");
    let bytes = match cfg.format() {
        Format::Json => {
            let report = VerifyReport {
                config: cfg,
                suite: name,
                all_pass: failed == 0,
                passed,
                failed,
                checks: &outcomes,
            };
            let mut b = serde_json::to_vec_pretty(&report)?;
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "tag", "value", "threshold", "order", "pass"])?;
            for o in &outcomes {
                let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:?}"));
                w.write_record([
                    o.name.clone(),
                    o.tag.to_string(),
                    opt(o.value),
                    opt(o.threshold),
                    opt(o.order),
                    o.pass.to_string(),
                ])?;
            }
            w.into_inner()?
        }
    };
    emit(&bytes, cfg.out.as_deref())?;
    Ok(if failed == 0 { Status::Ok } else { Status::Flagged })
}
