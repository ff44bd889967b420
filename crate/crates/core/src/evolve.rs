//! Method-of-lines integration of `u_t = u_xx + f(u)` on `[0, L]` with
//! `u(0) = 1`, `u(L) = 0`, and front tracking at the level `u = 1/2`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::fmt12;
use crate::reaction::ReactionTerm;

/// Tracked level.
pub const LEVEL: f64 = 0.5;
/// Distance from the right boundary at which the run is aborted.
pub const BOUNDARY_MARGIN: f64 = 10.0;
/// Snapshot spacing in time units.
pub const SNAPSHOT_EVERY: u64 = 10;
/// Minimum number of track points in a speed fit.
pub const MIN_FIT_POINTS: usize = 10;
const COURANT: f64 = 0.2;
const BLOW_UP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("grid spacing {0} must lie in (0, 0.1]")]
    Spacing(f64),
    #[error("domain length {length} is too short for spacing {dx}")]
    Length { length: f64, dx: f64 },
    #[error("end time {0} must be finite and non-negative")]
    EndTime(f64),
    #[error("front reached x = {x} at t = {t}, within {BOUNDARY_MARGIN} of the boundary L = {length}; use a larger L")]
    FrontAtBoundary { t: f64, x: f64, length: f64 },
    #[error("solution left the admissible range at t = {t} (value {value})")]
    BlowUp { t: f64, value: f64 },
    #[error("no level crossing of u = {LEVEL} at t = {0}")]
    NoFront(f64),
    #[error("fit window holds {found} track points, at least {MIN_FIT_POINTS} are needed")]
    TooFewPoints { found: usize },
    #[error("front track is not monotone in the fit window near t = {t}; the transient has not finished")]
    NonMonotone { t: f64 },
    #[error("window fraction {0} must lie in (0, 1]")]
    Window(f64),
    #[error("CSV output failed: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `u = 1` for `x < x₀`, `0` beyond.
    Step,
    /// `u = cos²(πx / 2x₀)` for `x < x₀`, `0` beyond: half of a compactly
    /// supported bump centred on the left boundary.
    CompactBump,
}

impl std::str::FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step" => Ok(InitialCondition::Step),
            "compact_bump" => Ok(InitialCondition::CompactBump),
            _ => Err(format!("unknown initial condition `{s}` (expected step or compact_bump)")),
        }
    }
}

/// Parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveParams {
    pub ic: InitialCondition,
    pub length: f64,
    pub dx: f64,
    pub t_end: f64,
    /// Width `x₀` of the initial datum.
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    20.0
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams { ic: InitialCondition::Step, length: 400.0, dx: 0.1, t_end: 150.0, width: default_width() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub t: f64,
    pub x_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub params: EvolveParams,
    pub dt: f64,
    pub x_grid: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub front_track: Vec<TrackPoint>,
    /// Largest distance of any computed value from `[0, 1]`.
    pub max_excursion: f64,
}

/// Rightmost downward crossing of `LEVEL`, by linear interpolation.
fn level_crossing(x: &[f64], u: &[f64]) -> Option<f64> {
    (0..u.len() - 1).rev().find_map(|i| {
        let (a, b) = (u[i], u[i + 1]);
        (a >= LEVEL && b < LEVEL).then(|| x[i] + (a - LEVEL) / (a - b) * (x[i + 1] - x[i]))
    })
}

fn rhs(f: &ReactionTerm, u: &[f64], inv_dx2: f64, out: &mut [f64]) {
    let n = u.len();
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for i in 1..n - 1 {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2 + f.f(u[i]);
    }
}

/// Runs the evolution up to `t_end`.
pub fn evolve(f: &ReactionTerm, params: EvolveParams) -> Result<Evolution, EvolveError> {
    let EvolveParams { ic, length, dx, t_end, width } = params;
    if !(dx > 0.0 && dx <= 0.1) {
        return Err(EvolveError::Spacing(dx));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(EvolveError::EndTime(t_end));
    }
    if !(length.is_finite() && length > width + BOUNDARY_MARGIN && width > 0.0) {
        return Err(EvolveError::Length { length, dx });
    }
    let cells = (length / dx).round() as usize;
    let x: Vec<f64> = (0..=cells).map(|i| i as f64 * dx).collect();
    let mut u: Vec<f64> = x
        .iter()
        .map(|&xi| match ic {
            InitialCondition::Step => (xi < width) as u8 as f64,
            InitialCondition::CompactBump => {
                if xi < width {
                    (std::f64::consts::FRAC_PI_2 * xi / width).cos().powi(2)
                } else {
                    0.0
                }
            }
        })
        .collect();
    u[0] = 1.0;
    u[cells] = 0.0;

    let steps_per_unit = (1.0 / (COURANT * dx * dx)).ceil() as u64;
    let dt = 1.0 / steps_per_unit as f64;
    let inv_dx2 = 1.0 / (dx * dx);
    let units = t_end.floor() as u64;
    let tail_steps = ((t_end - units as f64) / dt).round() as u64;

    let mut track = Vec::new();
    let mut snapshots = vec![Snapshot { t: 0.0, u: u.clone() }];
    let x0 = level_crossing(&x, &u).ok_or(EvolveError::NoFront(0.0))?;
    track.push(TrackPoint { t: 0.0, x_level: x0 });

    let n = u.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut excursion: f64 = 0.0;
    let mut step = |u: &mut Vec<f64>| {
        rhs(f, u, inv_dx2, &mut k1);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k1[i];
        }
        rhs(f, &tmp, inv_dx2, &mut k2);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * dt * k2[i];
        }
        rhs(f, &tmp, inv_dx2, &mut k3);
        for i in 0..n {
            tmp[i] = u[i] + dt * k3[i];
        }
        rhs(f, &tmp, inv_dx2, &mut k4);
        for i in 0..n {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };
    let mut check = |u: &[f64], t: f64| -> Result<(), EvolveError> {
        for &v in u {
            let e = if v < 0.0 { -v } else { v - 1.0 };
            if !(e <= BLOW_UP) {
                return Err(EvolveError::BlowUp { t, value: v });
            }
            excursion = excursion.max(e);
        }
        Ok(())
    };

    for unit in 1..=units {
        for _ in 0..steps_per_unit {
            step(&mut u);
        }
        let t = unit as f64;
        check(&u, t)?;
        let xl = level_crossing(&x, &u).ok_or(EvolveError::NoFront(t))?;
        if xl > length - BOUNDARY_MARGIN {
            return Err(EvolveError::FrontAtBoundary { t, x: xl, length });
        }
        track.push(TrackPoint { t, x_level: xl });
        if unit % SNAPSHOT_EVERY == 0 {
            snapshots.push(Snapshot { t, u: u.clone() });
        }
    }
    if tail_steps > 0 {
        for _ in 0..tail_steps {
            step(&mut u);
        }
        check(&u, t_end)?;
    }
    if snapshots.last().is_none_or(|s| s.t != t_end) {
        snapshots.push(Snapshot { t: t_end, u: u.clone() });
    }
    Ok(Evolution { params, dt, x_grid: x, snapshots, front_track: track, max_excursion: excursion.max(0.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub intercept: f64,
    /// Largest absolute residual of the linear fit.
    pub fit_residual: f64,
    pub points: usize,
}

/// Least-squares slope of the front track over the final `window_fraction`
/// of its time span.
pub fn spreading_speed(track: &[TrackPoint], window_fraction: f64) -> Result<SpeedFit, EvolveError> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(EvolveError::Window(window_fraction));
    }
    let (t0, t1) = match (track.first(), track.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(EvolveError::TooFewPoints { found: 0 }),
    };
    let start = t1 - window_fraction * (t1 - t0);
    let pts: Vec<TrackPoint> = track.iter().copied().filter(|p| p.t >= start - 1e-12).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(EvolveError::TooFewPoints { found: pts.len() });
    }
    if let Some(w) = pts.windows(2).find(|w| w[1].x_level < w[0].x_level) {
        return Err(EvolveError::NonMonotone { t: w[1].t });
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.t).sum::<f64>() / m;
    let xm = pts.iter().map(|p| p.x_level).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.t - tm).powi(2)).sum();
    let stx: f64 = pts.iter().map(|p| (p.t - tm) * (p.x_level - xm)).sum();
    let speed = stx / stt;
    let intercept = xm - speed * tm;
    let fit_residual = pts.iter().map(|p| (p.x_level - intercept - speed * p.t).abs()).fold(0.0, f64::max);
    Ok(SpeedFit { speed, intercept, fit_residual, points: pts.len() })
}

/// Writes snapshots in long format `t,x,u`.
pub fn write_snapshots_csv<W: Write>(ev: &Evolution, out: W) -> Result<(), EvolveError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| EvolveError::Csv(e.to_string());
    w.write_record(["t", "x", "u"]).map_err(err)?;
    for s in &ev.snapshots {
        for (x, u) in ev.x_grid.iter().zip(&s.u) {
            w.write_record([fmt12(s.t), fmt12(*x), fmt12(*u)]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| EvolveError::Csv(e.to_string()))
}

/// Writes the front track as `t,x_level`.
pub fn write_track_csv<W: Write>(track: &[TrackPoint], out: W) -> Result<(), EvolveError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| EvolveError::Csv(e.to_string());
    w.write_record(["t", "x_level"]).map_err(err)?;
    for p in track {
        w.write_record([fmt12(p.t), fmt12(p.x_level)]).map_err(err)?;
    }
    w.flush().map_err(|e| EvolveError::Csv(e.to_string()))
}
