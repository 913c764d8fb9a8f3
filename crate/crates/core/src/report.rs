//! Batch runs: scheduling, sampling, auditing and writing result files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::blocks::{SpecialPointKind, DEFAULT_GRID_DENSITY};
use crate::error::{Error, Result};
use crate::interpolator::{generate_reference_points, ReferencePoint};
use crate::limits::{KinematicLimits, SchedulerMode};
use crate::path::PhSplinePath;
use crate::scheduler::{schedule, Schedule, ScheduleOptions};
use crate::verify::{audit_bounds, sample_kinematics, AuditReport, KinematicSample, DEFAULT_AUDIT_GRID};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub path_file: PathBuf,
    pub limits_file: PathBuf,
    pub modes: Vec<SchedulerMode>,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
    /// Audit samples per sampling period.
    pub audit_grid: usize,
    /// Grid samples per spline piece for maximum statistics.
    pub grid_density: usize,
}

impl RunConfig {
    pub fn new(path_file: impl Into<PathBuf>, limits_file: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            path_file: path_file.into(),
            limits_file: limits_file.into(),
            modes: SchedulerMode::ALL.to_vec(),
            out_dir: out_dir.into(),
            emit_svg: false,
            audit_grid: DEFAULT_AUDIT_GRID,
            grid_density: DEFAULT_GRID_DENSITY,
        }
    }
}

/// Parses a mode argument: one of `R0`..`S2` or `all`.
pub fn parse_modes(text: &str) -> Result<Vec<SchedulerMode>> {
    if text.eq_ignore_ascii_case("all") {
        Ok(SchedulerMode::ALL.to_vec())
    } else {
        Ok(vec![text.parse()?])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointSummary {
    pub segment: usize,
    pub xi: f64,
    pub arclength: f64,
    pub kind: SpecialPointKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSummary {
    #[serde(rename = "S")]
    pub length: f64,
    pub kappa_stat: f64,
    pub w_stat: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub v_cap: f64,
    pub t_acc: f64,
    pub t_con: f64,
    pub t_dec: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceSummary {
    pub count: usize,
    pub max_chord_error: f64,
    pub undefined_chords: usize,
    pub mean_newton_iterations: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub mode: String,
    pub kappa_cr: f64,
    pub special_points: Vec<PointSummary>,
    pub blocks: Vec<BlockSummary>,
    pub segment_times: Vec<f64>,
    pub total_time: f64,
    pub reference_points: ReferenceSummary,
    pub audit: AuditReport,
}

/// Everything computed for one mode.
pub struct ModeResult {
    pub schedule: Schedule,
    pub points: Vec<ReferencePoint>,
    pub samples: Vec<KinematicSample>,
    pub summary: Summary,
}

/// Schedules, interpolates and audits one mode without touching the
/// filesystem.
pub fn evaluate_mode(
    path: &PhSplinePath,
    limits: &KinematicLimits,
    mode: SchedulerMode,
    audit_grid: usize,
    grid_density: usize,
) -> Result<ModeResult> {
    let options = ScheduleOptions { grid_density, ..ScheduleOptions::default() };
    let schedule = schedule(path, limits, mode, &options)?;
    let points = generate_reference_points(path, &schedule.profile, limits)?;
    let samples = sample_kinematics(path, &schedule.profile, limits, audit_grid);
    let audit = audit_bounds(&samples, limits, mode);
    let chords: Vec<f64> = points.iter().filter_map(|p| p.chord_error).collect();
    let reference_points = ReferenceSummary {
        count: points.len(),
        max_chord_error: chords.iter().copied().fold(0.0, f64::max),
        undefined_chords: points.len() - chords.len(),
        mean_newton_iterations: points.iter().map(|p| p.newton_iterations as f64).sum::<f64>()
            / points.len() as f64,
    };
    let summary = Summary {
        mode: mode.to_string(),
        kappa_cr: schedule.kappa_cr,
        special_points: schedule
            .special_points
            .iter()
            .map(|p| PointSummary { segment: p.segment, xi: p.xi, arclength: p.arclength, kind: p.kind })
            .collect(),
        blocks: schedule
            .blocks
            .iter()
            .map(|b| BlockSummary {
                length: b.length,
                kappa_stat: b.kappa_stat,
                w_stat: b.w_stat,
                v_start: b.v_start,
                v_end: b.v_end,
                v_cap: b.v_cap,
                t_acc: b.t_acc,
                t_con: b.t_con,
                t_dec: b.t_dec,
            })
            .collect(),
        segment_times: schedule.segment_times.clone(),
        total_time: schedule.profile.total_time(),
        reference_points,
        audit,
    };
    Ok(ModeResult { schedule, points, samples, summary })
}

/// Outcome of a batch run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summaries: Vec<Summary>,
}

impl RunOutcome {
    /// Whether some strict mode broke a bound it guarantees.
    pub fn audit_failed(&self) -> bool {
        self.summaries.iter().any(|s| !s.audit.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.audit_failed() {
            2
        } else {
            0
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidDocument(format!("{}: {e}", path.display())))
}

pub fn load_inputs(config: &RunConfig) -> Result<(PhSplinePath, KinematicLimits)> {
    let path = PhSplinePath::from_json(&read(&config.path_file)?)?;
    let limits = KinematicLimits::from_json(&read(&config.limits_file)?)?;
    Ok((path, limits))
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn reference_csv(points: &[ReferencePoint]) -> String {
    let mut out = String::from("k,t,segment,xi,x,y,v,chord_error\n");
    for p in points {
        let chord = p.chord_error.map_or_else(|| "NaN".to_string(), sci);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.k,
            sci(p.t),
            p.segment,
            sci(p.xi),
            sci(p.position[0]),
            sci(p.position[1]),
            sci(p.feedrate),
            chord
        );
    }
    out
}

fn profile_csv(samples: &[KinematicSample]) -> String {
    let mut out = String::from("t,v,vdot,vddot,ax,ay,jx,jy\n");
    for s in samples {
        let row = [s.t, s.v, s.vdot, s.vddot, s.a[0], s.a[1], s.j[0], s.j[1]].map(sci);
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

fn write_mode(dir: &Path, path: &PhSplinePath, result: &ModeResult, emit_svg: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_file(dir, "reference_points.csv", &reference_csv(&result.points))?;
    write_file(dir, "profile.csv", &profile_csv(&result.samples))?;
    let mut json = serde_json::to_string_pretty(&result.summary)?;
    json.push('\n');
    write_file(dir, "summary.json", &json)?;
    if emit_svg {
        write_plots(dir, path, result)?;
    }
    Ok(())
}

/// Runs every configured mode and writes `<out>/<mode>/...`. Outputs are
/// staged in a temporary directory beside `out` and moved into place only
/// after all modes succeeded.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    if config.modes.is_empty() {
        return Err(Error::InvalidDocument("no modes selected".into()));
    }
    if config.audit_grid == 0 || config.grid_density == 0 {
        return Err(Error::InvalidDocument("grid sizes must be positive".into()));
    }
    let (path, limits) = load_inputs(config)?;

    let results: Vec<Result<ModeResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .modes
            .iter()
            .map(|&mode| {
                let (path, limits) = (&path, &limits);
                scope.spawn(move || evaluate_mode(path, limits, mode, config.audit_grid, config.grid_density))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Domain("worker panicked".into()))))
            .collect()
    });
    let results: Vec<ModeResult> = results.into_iter().collect::<Result<_>>()?;

    let out = &config.out_dir;
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new().prefix(".feedplan-").tempdir_in(&parent)?;
    for r in &results {
        write_mode(&staging.path().join(&r.summary.mode), &path, r, config.emit_svg)?;
    }
    if out.exists() {
        for r in &results {
            let target = out.join(&r.summary.mode);
            if target.exists() {
                fs::remove_dir_all(&target)?;
            }
            fs::rename(staging.path().join(&r.summary.mode), target)?;
        }
    } else {
        fs::rename(staging.path(), out)?;
    }
    for r in &results {
        log::info!(
            "{}: T = {:.6} s, {} blocks, audit {}",
            r.summary.mode,
            r.summary.total_time,
            r.summary.blocks.len(),
            if r.summary.audit.passed { "passed" } else { "FAILED" }
        );
    }
    Ok(RunOutcome { summaries: results.into_iter().map(|r| r.summary).collect() })
}

/// Human-readable path statistics.
pub fn info(path_file: &Path) -> Result<String> {
    let path = PhSplinePath::from_json(&read(path_file)?)?;
    let (kmin, kmax) = path.curvature_range();
    let mut out = String::new();
    let _ = writeln!(out, "segments: {}", path.len());
    let _ = writeln!(out, "total length: {:.12} mm", path.total_length());
    let _ = writeln!(out, "curvature range: [{kmin:.9e}, {kmax:.9e}] 1/mm");
    let _ = writeln!(out, "breakpoints: {:?}", path.breakpoints());
    for (i, r) in path.motion_segments().into_iter().enumerate() {
        let len = path.segment_offset(r.end - 1) + path.segment(r.end - 1).length() - path.segment_offset(r.start);
        let _ = writeln!(out, "halting segment {i}: pieces {}..{}, length {len:.12} mm", r.start, r.end);
    }
    Ok(out)
}

fn polyline_plot(title: &str, xlabel: &str, series: &[(&str, Vec<(f64, f64)>)], rule: Option<f64>) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let all = series.iter().flat_map(|(_, pts)| pts.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some(r) = rule {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{M}" y="20">{title}</text>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{}">{xlabel}</text>"#, W / 2.0, H - 10.0);
    let _ = writeln!(svg, r#"<text x="5" y="{}">{y1:.4e}</text><text x="5" y="{}">{y0:.4e}</text>"#, M, H - M);
    let _ = writeln!(
        svg,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    if let Some(r) = rule {
        let y = sy(r);
        let _ = writeln!(svg, r#"<line x1="{M}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4"/>"#, W - M);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let step = (pts.len() / 4000).max(1);
        let coords: Vec<String> = pts
            .iter()
            .step_by(step)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, W - M - 60.0, M + 15.0 * (i as f64 + 1.0));
    }
    svg.push_str("</svg>\n");
    svg
}

fn write_plots(dir: &Path, path: &PhSplinePath, result: &ModeResult) -> Result<()> {
    let s = &result.samples;
    let col = |f: fn(&KinematicSample) -> f64| s.iter().map(|k| (k.t, f(k))).collect::<Vec<_>>();
    write_file(dir, "feedrate.svg", &polyline_plot("feedrate (mm/s)", "t (s)", &[("v", col(|k| k.v))], None))?;
    let mut curvature = Vec::new();
    for (i, seg) in path.segments().iter().enumerate() {
        let offset = path.segment_offset(i);
        for n in 0..=200 {
            let xi = n as f64 / 200.0;
            curvature.push((offset + seg.arclength(xi), seg.curvature(xi).abs()));
        }
    }
    write_file(
        dir,
        "curvature.svg",
        &polyline_plot("|curvature| (1/mm)", "arc length (mm)", &[("|k|", curvature)], Some(result.schedule.kappa_cr)),
    )?;
    write_file(
        dir,
        "acceleration.svg",
        &polyline_plot("acceleration (mm/s^2)", "t (s)", &[("ax", col(|k| k.a[0])), ("ay", col(|k| k.a[1]))], None),
    )?;
    write_file(
        dir,
        "jerk.svg",
        &polyline_plot("jerk (mm/s^3)", "t (s)", &[("jx", col(|k| k.j[0])), ("jy", col(|k| k.j[1]))], None),
    )?;
    Ok(())
}
