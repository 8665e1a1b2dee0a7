//! Reference paths, map zones, and reference-pose selection.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{wrap_angle, Pose};

pub const DEFAULT_SPACING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub s: f64,
}

impl PathPoint {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }

    fn dist2(&self, x: f64, y: f64) -> f64 {
        (self.x - x).powi(2) + (self.y - y).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    points: Vec<PathPoint>,
    spacing: f64,
}

impl ReferencePath {
    /// Builds a path from `(x, y, theta)` samples; arc length is accumulated
    /// along the polyline.
    pub fn from_poses(poses: &[(f64, f64, f64)], spacing: f64) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::EmptyPath);
        }
        let mut points = Vec::with_capacity(poses.len());
        let mut s = 0.0;
        for (i, &(x, y, theta)) in poses.iter().enumerate() {
            if i > 0 {
                let (px, py, _) = poses[i - 1];
                s += (x - px).hypot(y - py);
            }
            points.push(PathPoint { x, y, theta: wrap_angle(theta), s });
        }
        Self::from_points(points, spacing)
    }

    pub fn from_points(points: Vec<PathPoint>, spacing: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptyPath);
        }
        if !(spacing > 0.0) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        if points
            .iter()
            .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.theta.is_finite() && p.s.is_finite()))
        {
            return Err(Error::NonFinite("path point"));
        }
        if points.windows(2).any(|w| w[1].s <= w[0].s) {
            return Err(Error::invalid("path", "arc length must be strictly increasing"));
        }
        Ok(Self { points, spacing })
    }

    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &PathPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &PathPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.last().s - self.first().s
    }

    /// Index of the point nearest to `(x, y)`; ties go to the smaller index.
    pub fn nearest_index(&self, x: f64, y: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = p.dist2(x, y);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Index of the last point with arc length `<= s` (clamped to the path).
    fn segment_index(&self, s: f64) -> usize {
        let i = self.points.partition_point(|p| p.s <= s);
        i.saturating_sub(1).min(self.points.len() - 2)
    }

    /// Pose at arc length `s`, linearly interpolated and clamped to the ends.
    pub fn pose_at(&self, s: f64) -> Pose {
        if s <= self.first().s {
            return self.first().pose();
        }
        if s >= self.last().s {
            return self.last().pose();
        }
        let i = self.segment_index(s);
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        let u = (s - a.s) / (b.s - a.s);
        Pose::new(
            a.x + u * (b.x - a.x),
            a.y + u * (b.y - a.y),
            a.theta + u * wrap_angle(b.theta - a.theta),
        )
    }

    /// Distance from `(x, y)` to the polyline segments adjacent to point `i`.
    pub fn distance_near(&self, i: usize, x: f64, y: f64) -> f64 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.points.len() - 1);
        (lo..hi)
            .map(|k| segment_distance(&self.points[k], &self.points[k + 1], x, y))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,theta,s")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.x, p.y, p.theta, p.s)?;
        }
        Ok(())
    }

    /// Reads `x,y,theta,s` rows. Lines starting with `#` and the header are skipped.
    pub fn read_csv<R: BufRead>(r: R, spacing: f64) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('x') {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            if vals.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 fields", n + 1)));
            }
            points.push(PathPoint { x: vals[0], y: vals[1], theta: vals[2], s: vals[3] });
        }
        Self::from_points(points, spacing)
    }
}

fn segment_distance(a: &PathPoint, b: &PathPoint, x: f64, y: f64) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let u = if len2 > 0.0 {
        (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a.x + u * dx - x).hypot(a.y + u * dy - y)
}

/// Appends geometric primitives, each starting at the end pose of the
/// previous one.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    poses: Vec<(f64, f64, f64)>,
    spacing: f64,
}

impl PathBuilder {
    pub fn new(start: Pose, spacing: f64) -> Self {
        Self { poses: vec![(start.x, start.y, start.theta)], spacing }
    }

    /// Number of samples so far; useful to mark segment boundaries.
    pub fn mark(&self) -> usize {
        self.poses.len()
    }

    fn end(&self) -> (f64, f64, f64) {
        *self.poses.last().expect("builder always has a start pose")
    }

    fn push_local<F>(&mut self, steps: usize, f: F)
    where
        F: Fn(f64) -> (f64, f64, f64),
    {
        let (x0, y0, th0) = self.end();
        let (s, c) = th0.sin_cos();
        for k in 1..=steps {
            let (lx, ly, lth) = f(k as f64 / steps as f64);
            self.poses
                .push((x0 + c * lx - s * ly, y0 + s * lx + c * ly, wrap_angle(th0 + lth)));
        }
    }

    pub fn straight(mut self, length: f64) -> Self {
        if length > 0.0 {
            let n = (length / self.spacing).ceil().max(1.0) as usize;
            self.push_local(n, |u| (u * length, 0.0, 0.0));
        }
        self
    }

    /// Circular arc; positive `sweep` turns left (counterclockwise).
    pub fn arc(mut self, radius: f64, sweep: f64) -> Self {
        if sweep != 0.0 {
            let n = (radius * sweep.abs() / self.spacing).ceil().max(1.0) as usize;
            let sign = sweep.signum();
            self.push_local(n, |u| {
                let a = u * sweep.abs();
                (radius * a.sin(), sign * radius * (1.0 - a.cos()), sign * a)
            });
        }
        self
    }

    /// Cosine-blend lateral shift over `length`; positive `shift` moves left.
    pub fn lateral_shift(mut self, length: f64, shift: f64) -> Self {
        if length > 0.0 {
            let n = (length / self.spacing).ceil().max(1.0) as usize;
            self.push_local(n, |u| {
                let lateral = shift * (1.0 - (PI * u).cos()) / 2.0;
                let slope = shift * PI / (2.0 * length) * (PI * u).sin();
                (u * length, lateral, slope.atan())
            });
        }
        self
    }

    pub fn build(self) -> Result<ReferencePath> {
        ReferencePath::from_poses(&self.poses, self.spacing)
    }
}

/// Straight approach, cosine lane shift to the right, straight exit.
pub fn make_lane_change_path(
    lane_width: f64,
    approach: f64,
    transition: f64,
    exit: f64,
) -> Result<ReferencePath> {
    if !(lane_width >= 0.0 && approach > 0.0 && transition > 0.0 && exit > 0.0) {
        return Err(Error::invalid("lane change", "lengths must be positive"));
    }
    PathBuilder::new(Pose::default(), DEFAULT_SPACING)
        .straight(approach)
        .lateral_shift(transition, -lane_width)
        .straight(exit)
        .build()
}

/// Straight entry, counterclockwise arc of `sweep` radians, straight exit.
/// The arc centre sits at `(entry, radius)`.
pub fn make_roundabout_path(
    radius: f64,
    entry: f64,
    sweep: f64,
    exit: f64,
) -> Result<ReferencePath> {
    if !(radius > 0.0) {
        return Err(Error::invalid("roundabout radius", "must be positive"));
    }
    if !(sweep > 0.0 && sweep <= 2.0 * PI) {
        return Err(Error::invalid("roundabout sweep", "must lie in (0, 2pi]"));
    }
    if !(entry > 0.0 && exit > 0.0) {
        return Err(Error::invalid("roundabout", "entry and exit must be positive"));
    }
    PathBuilder::new(Pose::default(), DEFAULT_SPACING)
        .straight(entry)
        .arc(radius, sweep)
        .straight(exit)
        .build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Maneuver {
    LaneChange,
    Roundabout,
    Default,
}

impl Maneuver {
    pub fn as_str(&self) -> &'static str {
        match self {
            Maneuver::LaneChange => "lane-change",
            Maneuver::Roundabout => "roundabout",
            Maneuver::Default => "default",
        }
    }
}

impl std::fmt::Display for Maneuver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Maneuver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lane-change" | "lane_change" | "lanechange" => Ok(Maneuver::LaneChange),
            "roundabout" => Ok(Maneuver::Roundabout),
            "default" => Ok(Maneuver::Default),
            other => Err(Error::Parse(format!("unknown maneuver {other:?}"))),
        }
    }
}

/// Closed region in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    Rect { min_x: f64, min_y: f64, max_x: f64, max_y: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Region::Rect { min_x, min_y, max_x, max_y } => {
                x >= min_x && x <= max_x && y >= min_y && y <= max_y
            }
            Region::Circle { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub region: Region,
    pub maneuver: Maneuver,
}

pub fn zone_of(zones: &[Zone], x: f64, y: f64) -> Maneuver {
    zones
        .iter()
        .find(|z| z.region.contains(x, y))
        .map_or(Maneuver::Default, |z| z.maneuver)
}

/// The composite test circuit and its zones.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub path: ReferencePath,
    pub zones: Vec<Zone>,
    /// Index range of the lane-change shift inside `path`.
    pub lane_change_span: std::ops::Range<usize>,
}

/// Straight, lane change, straight, 90 degree left turn, half roundabout, straight.
pub fn make_full_circuit() -> Result<Circuit> {
    const LANE: f64 = 3.5;
    const SHIFT_LEN: f64 = 20.0;
    const RB_RADIUS: f64 = 20.0;
    const RB_ENTRY: f64 = 10.0;

    let b = PathBuilder::new(Pose::default(), DEFAULT_SPACING).straight(15.0);
    let lc_start = b.mark() - 1;
    let b = b.lateral_shift(SHIFT_LEN, -LANE);
    let lc_end = b.mark();
    let b = b.straight(20.0).arc(12.0, PI / 2.0).straight(15.0).straight(RB_ENTRY);
    let (ex, ey, eth) = b.end();
    let b = b.arc(RB_RADIUS, PI).straight(10.0).straight(10.0);

    let poses = &b.poses;
    let lc = &poses[lc_start..lc_end];
    let (mut min_x, mut min_y, mut max_x, mut max_y) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y, _) in lc {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let lane_change = Zone {
        id: "lane-change".into(),
        region: Region::Rect {
            min_x: min_x - 1.0,
            min_y: min_y - 2.0,
            max_x: max_x + 1.0,
            max_y: max_y + 2.0,
        },
        maneuver: Maneuver::LaneChange,
    };
    // arc centre lies to the left of the entry-end heading
    let (cx, cy) = (ex - RB_RADIUS * eth.sin(), ey + RB_RADIUS * eth.cos());
    let roundabout = Zone {
        id: "roundabout".into(),
        region: Region::Circle { cx, cy, r: RB_RADIUS + 3.0 },
        maneuver: Maneuver::Roundabout,
    };
    Ok(Circuit {
        path: b.build()?,
        zones: vec![lane_change, roundabout],
        lane_change_span: lc_start..lc_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookaheadPolicy {
    pub lookahead_dist: f64,
}

impl Default for LookaheadPolicy {
    fn default() -> Self {
        Self { lookahead_dist: 2.0 }
    }
}

/// Nearest path point to `odom` (ties to smaller arc length), advanced by
/// the lookahead distance and clamped to the final point.
pub fn reference_pose(path: &ReferencePath, odom: &Pose, policy: &LookaheadPolicy) -> Pose {
    let anchor = &path.points()[path.nearest_index(odom.x, odom.y)];
    let target = anchor.s + policy.lookahead_dist;
    if target >= path.last().s {
        return path.last().pose();
    }
    // snap to the sampled point closest in arc length
    let i = path.segment_index(target);
    let (a, b) = (&path.points()[i], &path.points()[i + 1]);
    if (target - a.s) <= (b.s - target) {
        a.pose()
    } else {
        b.pose()
    }
}

/// Incremental nearest-point tracker for closed-loop runs. Searches a
/// window around the previous match instead of the whole path.
#[derive(Debug, Clone)]
pub struct PathCursor {
    index: usize,
}

impl PathCursor {
    const BACK: usize = 20;
    const AHEAD: usize = 200;

    pub fn new(path: &ReferencePath, x: f64, y: f64) -> Self {
        Self { index: path.nearest_index(x, y) }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn update(&mut self, path: &ReferencePath, x: f64, y: f64) -> usize {
        let lo = self.index.saturating_sub(Self::BACK);
        let hi = (self.index + Self::AHEAD).min(path.len() - 1);
        let mut best = self.index;
        let mut best_d = f64::INFINITY;
        for (i, p) in path.points()[lo..=hi].iter().enumerate() {
            let d = p.dist2(x, y);
            if d < best_d {
                best = lo + i;
                best_d = d;
            }
        }
        self.index = best;
        best
    }

    pub fn distance_to_path(&self, path: &ReferencePath, x: f64, y: f64) -> f64 {
        path.distance_near(self.index, x, y)
    }
}
