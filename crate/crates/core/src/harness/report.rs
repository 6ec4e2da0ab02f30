//! Run directories: per-scenario CSV, aggregate JSON, plot-ready tables and
//! optional SVG renderings.
//!
//! Files written by [`write_run`]:
//! - `manifest.json`: schema version, config hash, seeds, expected record counts
//! - `records.csv`: `agent,scenario,dod,horizon_noise,accepted,emission,rejections,offline_failure`
//! - `timings.csv`: `agent,scenario,dod,horizon_noise,scenario_secs,step_secs`
//!
//! Files written by [`report`]:
//! - `summary.json`: aggregates recomputed from `records.csv`
//! - `improvements.csv`: `agent,dod,horizon_noise,scenario,improvement` (paired against FAFS)
//! - `dod_curve.csv`: `agent,dod,mean,ci95`
//! - `improvements.svg`, `dod_curve.svg`, `learning_curve.svg` when the data exists

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::{summarize, AgentSummary, Evaluation, RunRecord};
use super::spec::ExperimentSpec;
use super::stats::Estimate;
use crate::error::{Error, Result};
use crate::nn::CurvePoint;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.csv";
pub const TIMINGS: &str = "timings.csv";
pub const SUMMARY: &str = "summary.json";
pub const CURVE: &str = "learning_curve.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub base_seed: u64,
    pub num_scenarios: usize,
    /// Rows `records.csv` must contain for the run to be complete.
    pub expected_records: usize,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    agent: String,
    scenario: usize,
    dod: f64,
    horizon_noise: f64,
    accepted: u64,
    emission: f64,
    rejections: usize,
    offline_failure: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimingRow {
    agent: String,
    scenario: usize,
    dod: f64,
    horizon_noise: f64,
    scenario_secs: f64,
    step_secs: f64,
}

/// Write the records of one or more evaluations of `spec` into `dir`.
/// `records.csv` holds only deterministic columns, so reruns with the same
/// seeds reproduce it byte for byte; wall-clock lives in `timings.csv`.
pub fn write_run(dir: &Path, spec: &ExperimentSpec, evaluations: &[&Evaluation]) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let records: Vec<&RunRecord> = evaluations.iter().flat_map(|e| &e.records).collect();
    let mut w = csv::Writer::from_path(dir.join(RECORDS))?;
    let mut t = csv::Writer::from_path(dir.join(TIMINGS))?;
    for r in &records {
        w.serialize(Row {
            agent: r.agent.clone(),
            scenario: r.scenario,
            dod: r.dod,
            horizon_noise: r.horizon_noise,
            accepted: r.accepted,
            emission: r.emission,
            rejections: r.rejections,
            offline_failure: r.offline_failure,
        })?;
        t.serialize(TimingRow {
            agent: r.agent.clone(),
            scenario: r.scenario,
            dod: r.dod,
            horizon_noise: r.horizon_noise,
            scenario_secs: r.scenario_secs,
            step_secs: r.step_secs,
        })?;
    }
    w.flush()?;
    t.flush()?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: spec.config_hash(),
        base_seed: spec.base_seed,
        num_scenarios: spec.num_test_scenarios,
        expected_records: records.len(),
        spec: spec.clone(),
    };
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregates of one `(dod, horizon_noise)` slice of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub dod: f64,
    pub horizon_noise: f64,
    pub agents: Vec<AgentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_hash: String,
    pub base_seed: u64,
    pub num_scenarios: usize,
    pub slices: Vec<Slice>,
    pub files: Vec<String>,
}

fn read_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let timings: BTreeMap<(String, usize, u64, u64), TimingRow> = match csv::Reader::from_path(dir.join(TIMINGS)) {
        Ok(mut r) => r
            .deserialize::<TimingRow>()
            .map(|row| row.map(|t| ((t.agent.clone(), t.scenario, t.dod.to_bits(), t.horizon_noise.to_bits()), t)))
            .collect::<std::result::Result<_, _>>()?,
        Err(_) => BTreeMap::new(),
    };
    let mut out = Vec::new();
    for row in csv::Reader::from_path(dir.join(RECORDS))?.deserialize::<Row>() {
        let r = row?;
        let t = timings.get(&(r.agent.clone(), r.scenario, r.dod.to_bits(), r.horizon_noise.to_bits()));
        out.push(RunRecord {
            scenario_secs: t.map_or(f64::NAN, |t| t.scenario_secs),
            step_secs: t.map_or(f64::NAN, |t| t.step_secs),
            agent: r.agent,
            scenario: r.scenario,
            dod: r.dod,
            horizon_noise: r.horizon_noise,
            accepted: r.accepted,
            emission: r.emission,
            rejections: r.rejections,
            offline_failure: r.offline_failure,
        });
    }
    Ok(out)
}

/// Recompute every aggregate of the run in `dir` from its CSV files and emit
/// the summary, plot tables and SVGs. Incomplete runs are refused.
pub fn report(dir: &Path, render_svg: bool) -> Result<Summary> {
    let missing: Vec<&str> = [MANIFEST, RECORDS].into_iter().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(Error::Report(format!(
            "{} is not a complete run directory: missing {} (expected {MANIFEST}, {RECORDS}, and optionally {TIMINGS}, {CURVE})",
            dir.display(),
            missing.join(", ")
        )));
    }
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST))?)?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(Error::Report(format!("unsupported schema version {}", manifest.schema_version)));
    }
    let records = read_records(dir)?;
    if records.len() != manifest.expected_records {
        return Err(Error::Report(format!(
            "partial run: {} of {} records present in {}",
            records.len(),
            manifest.expected_records,
            dir.join(RECORDS).display()
        )));
    }

    let mut groups: BTreeMap<(u64, u64), Vec<RunRecord>> = BTreeMap::new();
    for r in &records {
        groups.entry((r.dod.to_bits(), r.horizon_noise.to_bits())).or_default().push(r.clone());
    }
    let mut slices = Vec::new();
    for rs in groups.values() {
        let agents = summarize(rs);
        for a in &agents {
            let n = rs.iter().filter(|r| r.agent == a.agent).count();
            if n != manifest.num_scenarios {
                return Err(Error::Report(format!(
                    "partial run: {} has {n} of {} scenarios at DoD {}",
                    a.agent, manifest.num_scenarios, rs[0].dod
                )));
            }
        }
        slices.push(Slice { dod: rs[0].dod, horizon_noise: rs[0].horizon_noise, agents });
    }
    slices.sort_by(|a, b| a.dod.total_cmp(&b.dod).then(a.horizon_noise.total_cmp(&b.horizon_noise)));

    let mut files = vec![SUMMARY.to_string()];
    let mut imp = csv::Writer::from_path(dir.join("improvements.csv"))?;
    imp.write_record(["agent", "dod", "horizon_noise", "scenario", "improvement"])?;
    let mut box_groups: Vec<(String, Vec<f64>)> = Vec::new();
    for rs in groups.values() {
        let fafs: BTreeMap<usize, u64> = rs.iter().filter(|r| r.agent == "FAFS").map(|r| (r.scenario, r.accepted)).collect();
        if fafs.is_empty() {
            continue;
        }
        let mut by_agent: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in rs.iter().filter(|r| r.agent != "FAFS") {
            let d = r.accepted as f64 - fafs[&r.scenario] as f64;
            imp.write_record([r.agent.clone(), r.dod.to_string(), r.horizon_noise.to_string(), r.scenario.to_string(), d.to_string()])?;
            by_agent.entry(&r.agent).or_default().push(d);
        }
        if groups.len() == 1 {
            box_groups = by_agent.into_iter().map(|(a, v)| (a.to_string(), v)).collect();
        }
    }
    imp.flush()?;
    files.push("improvements.csv".into());

    let mut dod = csv::Writer::from_path(dir.join("dod_curve.csv"))?;
    dod.write_record(["agent", "dod", "mean", "ci95"])?;
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in &slices {
        for a in &s.agents {
            let ci = a.accepted.ci95.map_or_else(|| "n/a".to_string(), |c| c.to_string());
            dod.write_record([a.agent.clone(), s.dod.to_string(), a.accepted.mean.to_string(), ci])?;
            series.entry(a.agent.clone()).or_default().push((s.dod, a.accepted.mean));
        }
    }
    dod.flush()?;
    files.push("dod_curve.csv".into());

    if render_svg {
        if !box_groups.is_empty() {
            std::fs::write(dir.join("improvements.svg"), box_svg("Improvement over FAFS per scenario", &box_groups))?;
            files.push("improvements.svg".into());
        }
        let dods: Vec<f64> = slices.iter().map(|s| s.dod).collect();
        if dods.windows(2).any(|w| w[0] != w[1]) {
            let series: Vec<_> = series.into_iter().collect();
            std::fs::write(dir.join("dod_curve.svg"), line_svg("Mean accepted demands", "degree of dynamism", &series))?;
            files.push("dod_curve.svg".into());
        }
        if dir.join(CURVE).is_file() {
            let curve: Vec<CurvePoint> =
                csv::Reader::from_path(dir.join(CURVE))?.deserialize().collect::<std::result::Result<_, _>>()?;
            let pts = |f: fn(&CurvePoint) -> f64| curve.iter().map(|p| (p.episode as f64, f(p))).collect::<Vec<_>>();
            let series = vec![
                ("validation".to_string(), pts(|p| p.validation_mean)),
                ("training".to_string(), pts(|p| p.train_return_mean)),
            ];
            std::fs::write(dir.join("learning_curve.svg"), line_svg("Learning curve", "episode", &series))?;
            files.push("learning_curve.svg".into());
        }
    }

    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        config_hash: manifest.config_hash,
        base_seed: manifest.base_seed,
        num_scenarios: manifest.num_scenarios,
        slices,
        files,
    };
    std::fs::write(dir.join(SUMMARY), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Default run directory for `spec`.
pub fn run_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(&spec.config_hash()[..12]))
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    )
}

fn axis_labels(s: &mut String, (lo, hi): (f64, f64), scale: impl Fn(f64) -> f64) {
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let y = scale(v);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\">{v:.2}</text>", PAD - 4.0);
        let _ = writeln!(s, "<line x1=\"{PAD}\" x2=\"{}\" y1=\"{y:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>", W - PAD);
    }
}

pub fn line_svg(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let xs = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let ys = bounds(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let sx = |x: f64| PAD + (x - xs.0) / (xs.1 - xs.0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - ys.0) / (ys.1 - ys.0) * (H - 2.0 * PAD);
    let mut s = svg_header(title);
    axis_labels(&mut s, ys, sy);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>", W / 2.0, H - 12.0);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" points=\"{}\"/>", path.join(" "));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{name}</text>", W - PAD - 120.0, PAD + 14.0 * i as f64);
    }
    s.push_str("</svg>\n");
    s
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    sorted[i] + f * (sorted[(i + 1).min(sorted.len() - 1)] - sorted[i])
}

/// Box plot (quartiles, whiskers at min/max) per group.
pub fn box_svg(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let ys = bounds(groups.iter().flat_map(|(_, v)| v.iter().copied()).chain([0.0]));
    let sy = |y: f64| H - PAD - (y - ys.0) / (ys.1 - ys.0) * (H - 2.0 * PAD);
    let mut s = svg_header(title);
    axis_labels(&mut s, ys, sy);
    let slot = (W - 2.0 * PAD) / groups.len().max(1) as f64;
    for (i, (name, values)) in groups.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        let [lo, q1, med, q3, hi] = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| sy(quantile(&v, q)));
        let x = PAD + slot * (i as f64 + 0.5);
        let half = slot * 0.25;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, "<line x1=\"{x:.1}\" x2=\"{x:.1}\" y1=\"{lo:.1}\" y2=\"{hi:.1}\" stroke=\"{c}\"/>");
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{q3:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"white\" stroke=\"{c}\"/>",
            x - half,
            2.0 * half,
            (q1 - q3).max(0.5)
        );
        let _ = writeln!(s, "<line x1=\"{:.1}\" x2=\"{:.1}\" y1=\"{med:.1}\" y2=\"{med:.1}\" stroke=\"{c}\" stroke-width=\"2\"/>", x - half, x + half);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{name}</text>", H - PAD + 16.0);
    }
    s.push_str("</svg>\n");
    s
}

/// Mean accepted of `agent` in a summary slice.
pub fn slice_mean(slice: &Slice, agent: &str) -> Option<Estimate> {
    slice.agents.iter().find(|a| a.agent == agent).map(|a| a.accepted)
}
