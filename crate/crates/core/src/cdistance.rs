//! Spatially aware comparison of two partitions.
//!
//! Clusters are compared by the transport cost between their members'
//! coordinates; the partitions are then compared by transporting cluster
//! mass over those costs, normalized by the cost of the product coupling.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{LocationTable, Partition};
use crate::transport::solve_transport;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A location's coordinates: `(lat, lon)` in degrees, or plain `(x, y)` for
/// the euclidean metric.
pub type Point = (f64, f64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMetric {
    #[default]
    Haversine,
    Euclidean,
}

impl GroundMetric {
    pub fn distance(self, a: Point, b: Point) -> f64 {
        match self {
            GroundMetric::Euclidean => (a.0 - b.0).hypot(a.1 - b.1),
            GroundMetric::Haversine => {
                let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
                let dp = p2 - p1;
                let dl = (b.1 - a.1).to_radians();
                let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
                2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
            }
        }
    }
}

impl fmt::Display for GroundMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroundMetric::Haversine => "haversine",
            GroundMetric::Euclidean => "euclidean",
        })
    }
}

impl FromStr for GroundMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haversine" | "haversine_km" => Ok(GroundMetric::Haversine),
            "euclidean" => Ok(GroundMetric::Euclidean),
            other => Err(Error::Invalid(format!(
                "unknown ground metric '{other}' (expected haversine or euclidean)"
            ))),
        }
    }
}

/// Transport cost between uniform distributions on `a` and `b`.
pub fn cluster_emd(a: &[Point], b: &[Point], metric: GroundMetric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("cluster_emd needs two non-empty point sets".into()));
    }
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|&p| b.iter().map(move |&q| metric.distance(p, q)))
        .collect();
    let s = vec![1.0 / a.len() as f64; a.len()];
    let d = vec![1.0 / b.len() as f64; b.len()];
    Ok(solve_transport(&s, &d, &cost)?.cost)
}

/// Breakdown of one partition comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CDistance {
    /// Cluster-level ground costs, `P` clusters by `Q` clusters.
    pub cluster_costs: Vec<Vec<f64>>,
    pub optimal: f64,
    pub naive: f64,
    pub score: f64,
}

/// Score in `[0, 1]`; 0 means the partitions agree spatially.
pub fn cdistance(p: &Partition, q: &Partition, table: &LocationTable, metric: GroundMetric) -> Result<f64> {
    Ok(cdistance_detail(p, q, table, metric)?.score)
}

pub fn cdistance_detail(
    p: &Partition,
    q: &Partition,
    table: &LocationTable,
    metric: GroundMetric,
) -> Result<CDistance> {
    let p_ids: HashSet<&str> = p.index().iter().map(String::as_str).collect();
    let q_ids: HashSet<&str> = q.index().iter().map(String::as_str).collect();
    if p_ids != q_ids {
        let mut diff: Vec<&str> = p_ids.symmetric_difference(&q_ids).copied().collect();
        diff.sort_unstable();
        return Err(Error::Invalid(format!(
            "partitions cover different locations: {}",
            diff.join(", ")
        )));
    }
    let q = q.reindexed(p.index())?;
    let points = p
        .index()
        .iter()
        .map(|id| {
            table
                .get(id)
                .map(|l| (l.lat, l.lon))
                .ok_or_else(|| Error::Invalid(format!("location '{id}' missing from the location table")))
        })
        .collect::<Result<Vec<Point>>>()?;
    let gather = |cluster: &[usize]| cluster.iter().map(|&i| points[i]).collect::<Vec<_>>();
    let a: Vec<Vec<Point>> = p.clusters().iter().map(|c| gather(c)).collect();
    let b: Vec<Vec<Point>> = q.clusters().iter().map(|c| gather(c)).collect();
    compare_clusters(&a, &b, metric)
}

/// Two-level comparison over explicit clusterings of one point set.
pub fn compare_clusters(a: &[Vec<Point>], b: &[Vec<Point>], metric: GroundMetric) -> Result<CDistance> {
    let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let flat = pairs
        .par_iter()
        .map(|&(i, j)| cluster_emd(&a[i], &b[j], metric))
        .collect::<Result<Vec<f64>>>()?;
    let n: usize = a.iter().map(Vec::len).sum();
    if n != b.iter().map(Vec::len).sum::<usize>() {
        return Err(Error::Invalid("clusterings cover different numbers of points".into()));
    }
    let wa: Vec<f64> = a.iter().map(|c| c.len() as f64 / n as f64).collect();
    let wb: Vec<f64> = b.iter().map(|c| c.len() as f64 / n as f64).collect();
    let optimal = solve_transport(&wa, &wb, &flat)?.cost;
    let naive: f64 = pairs
        .iter()
        .zip(&flat)
        .map(|(&(i, j), d)| wa[i] * wb[j] * d)
        .sum();
    let score = if naive == 0.0 {
        0.0
    } else {
        (optimal / naive).clamp(0.0, 1.0)
    };
    Ok(CDistance {
        cluster_costs: flat.chunks(b.len()).map(<[f64]>::to_vec).collect(),
        optimal,
        naive,
        score,
    })
}
