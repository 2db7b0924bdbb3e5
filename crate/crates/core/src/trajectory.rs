//! Trajectories: ordered points with a coordinate-frame tag.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("timestamps: {0}")]
    Timestamps(String),
    #[error("all points coincide; arc length is zero")]
    ZeroLength,
    #[error("malformed trajectory record: {0}")]
    Json(String),
}

/// Coordinate frame of a trajectory's points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Pixels of the image the trajectory was drawn on (x right, y down).
    ImagePx,
    /// Pixel coordinates divided per-axis by the image width and height.
    Normalized,
    /// Meters, expressed in the world frame of a camera rig.
    TaskPlaneM,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryRecord {
    frame: Frame,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamps: Option<Vec<f64>>,
}

/// An ordered list of equal-dimension points, optionally timestamped.
///
/// Construction validates that there are at least two points, that every
/// coordinate is finite and that timestamps, when present, are finite and
/// strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRecord", into = "TrajectoryRecord")]
pub struct Trajectory {
    frame: Frame,
    points: Vec<Vec<f64>>,
    timestamps: Option<Vec<f64>>,
}

impl TryFrom<TrajectoryRecord> for Trajectory {
    type Error = TrajectoryError;

    fn try_from(r: TrajectoryRecord) -> Result<Self, Self::Error> {
        let t = Trajectory::new(r.frame, r.points)?;
        match r.timestamps {
            Some(ts) => t.with_timestamps(ts),
            None => Ok(t),
        }
    }
}

impl From<Trajectory> for TrajectoryRecord {
    fn from(t: Trajectory) -> Self {
        TrajectoryRecord {
            frame: t.frame,
            points: t.points,
            timestamps: t.timestamps,
        }
    }
}

impl Trajectory {
    pub fn new(frame: Frame, points: Vec<Vec<f64>>) -> Result<Self, TrajectoryError> {
        if points.len() < 2 {
            return Err(TrajectoryError::TooFewPoints(points.len()));
        }
        let dim = points[0].len();
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim || dim == 0 {
                return Err(TrajectoryError::DimensionMismatch {
                    index,
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(TrajectoryError::NonFinite(index));
            }
        }
        Ok(Self {
            frame,
            points,
            timestamps: None,
        })
    }

    /// Builds a planar trajectory from `[x, y]` pairs.
    pub fn from_xy(frame: Frame, points: &[[f64; 2]]) -> Result<Self, TrajectoryError> {
        Self::new(frame, points.iter().map(|p| p.to_vec()).collect())
    }

    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Result<Self, TrajectoryError> {
        if timestamps.len() != self.points.len() {
            return Err(TrajectoryError::Timestamps(format!(
                "{} timestamps for {} points",
                timestamps.len(),
                self.points.len()
            )));
        }
        if timestamps.iter().any(|t| !t.is_finite()) {
            return Err(TrajectoryError::Timestamps("non-finite timestamp".into()));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TrajectoryError::Timestamps(
                "timestamps must be strictly increasing".into(),
            ));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// First two coordinates of point `i`.
    pub fn xy(&self, i: usize) -> [f64; 2] {
        let p = &self.points[i];
        [p[0], p[1]]
    }

    pub fn first(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn last(&self) -> &[f64] {
        &self.points[self.points.len() - 1]
    }

    /// Applies `f` to every point, keeping order and timestamps.
    pub fn map_points<F>(&self, frame: Frame, mut f: F) -> Result<Self, TrajectoryError>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let points = self.points.iter().map(|p| f(p)).collect();
        let t = Self::new(frame, points)?;
        match &self.timestamps {
            Some(ts) => t.with_timestamps(ts.clone()),
            None => Ok(t),
        }
    }

    /// Same points in reverse order; timestamps are dropped.
    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            frame: self.frame,
            points,
            timestamps: None,
        }
    }

    /// Cumulative arc length at each point, starting at 0.
    pub fn cumulative_arc_length(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.points.len());
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.points.windows(2) {
            s += distance(&w[0], &w[1]);
            acc.push(s);
        }
        acc
    }

    /// Arc-length phase of every point in `[0, 1]`.
    pub fn arc_length_phases(&self) -> Result<Vec<f64>, TrajectoryError> {
        let acc = self.cumulative_arc_length();
        let total = *acc.last().unwrap();
        if total <= 1e-12 {
            return Err(TrajectoryError::ZeroLength);
        }
        Ok(acc.into_iter().map(|s| s / total).collect())
    }

    /// Phase of every point: normalized time when timestamps are present,
    /// normalized arc length otherwise.
    pub fn phases(&self) -> Result<Vec<f64>, TrajectoryError> {
        match &self.timestamps {
            Some(ts) => {
                let t0 = ts[0];
                let span = ts[ts.len() - 1] - t0;
                Ok(ts.iter().map(|t| (t - t0) / span).collect())
            }
            None => self.arc_length_phases(),
        }
    }

    /// Resamples to `count` points spaced uniformly along the polyline's arc
    /// length. Timestamps are dropped.
    pub fn resample_arc_length(&self, count: usize) -> Result<Self, TrajectoryError> {
        if count < 2 {
            return Err(TrajectoryError::TooFewPoints(count));
        }
        let acc = self.cumulative_arc_length();
        let total = *acc.last().unwrap();
        if total <= 1e-12 {
            return Err(TrajectoryError::ZeroLength);
        }
        let dim = self.dim();
        let mut out = Vec::with_capacity(count);
        let mut seg = 0;
        for i in 0..count {
            let s = total * i as f64 / (count - 1) as f64;
            while seg + 2 < acc.len() && acc[seg + 1] < s {
                seg += 1;
            }
            let len = acc[seg + 1] - acc[seg];
            let u = if len > 0.0 {
                ((s - acc[seg]) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let a = &self.points[seg];
            let b = &self.points[seg + 1];
            out.push((0..dim).map(|d| a[d] + u * (b[d] - a[d])).collect());
        }
        Self::new(self.frame, out)
    }

    /// Diagonal of the axis-aligned bounding box of all points.
    pub fn bounding_box_diagonal(&self) -> f64 {
        let dim = self.dim();
        let mut sq = 0.0;
        for d in 0..dim {
            let (lo, hi) = self
                .points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[d]), hi.max(p[d]))
                });
            sq += (hi - lo).powi(2);
        }
        sq.sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TrajectoryError> {
        serde_json::from_str(s).map_err(|e| TrajectoryError::Json(e.to_string()))
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
