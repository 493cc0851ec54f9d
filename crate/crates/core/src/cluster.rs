//! Agglomerative clustering with the Lance-Williams update, dendrogram
//! cutting and cophenetic correlation.
//!
//! Centroid (`uc`, `wc`) and minimum-variance (`mv`) linkages run on squared
//! distances and report square-rooted merge heights; the other four run on
//! the raw distances.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dendrogram, DistanceMatrix, Merge, Partition};

/// Recorded alongside sweep results so cophenetic values can be compared.
pub const HEIGHT_CONVENTION: &str = "uc/wc/mv merge on squared distances; reported heights are square roots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkageMethod {
    /// `sl`
    Single,
    /// `cl`
    Complete,
    /// `ga`, UPGMA
    Average,
    /// `wa`, WPGMA
    Weighted,
    /// `uc`, UPGMC
    Centroid,
    /// `wc`, WPGMC
    Median,
    /// `mv`, Ward
    Ward,
}

impl LinkageMethod {
    /// All methods in tie-break order.
    pub const ALL: [LinkageMethod; 7] = [
        LinkageMethod::Single,
        LinkageMethod::Complete,
        LinkageMethod::Average,
        LinkageMethod::Weighted,
        LinkageMethod::Centroid,
        LinkageMethod::Median,
        LinkageMethod::Ward,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LinkageMethod::Single => "sl",
            LinkageMethod::Complete => "cl",
            LinkageMethod::Average => "ga",
            LinkageMethod::Weighted => "wa",
            LinkageMethod::Centroid => "uc",
            LinkageMethod::Median => "wc",
            LinkageMethod::Ward => "mv",
        }
    }

    pub fn uses_squared(self) -> bool {
        matches!(self, LinkageMethod::Centroid | LinkageMethod::Median | LinkageMethod::Ward)
    }

    /// Whether merge heights are guaranteed non-decreasing.
    pub fn is_monotone(self) -> bool {
        !matches!(self, LinkageMethod::Centroid | LinkageMethod::Median)
    }

    /// Lance-Williams `(α_i, α_j, β, γ)` for merging clusters of sizes
    /// `ni`, `nj` and updating the distance to a cluster of size `nk`.
    pub fn coefficients(self, ni: usize, nj: usize, nk: usize) -> (f64, f64, f64, f64) {
        let (ni, nj, nk) = (ni as f64, nj as f64, nk as f64);
        match self {
            LinkageMethod::Single => (0.5, 0.5, 0.0, -0.5),
            LinkageMethod::Complete => (0.5, 0.5, 0.0, 0.5),
            LinkageMethod::Average => (ni / (ni + nj), nj / (ni + nj), 0.0, 0.0),
            LinkageMethod::Weighted => (0.5, 0.5, 0.0, 0.0),
            LinkageMethod::Centroid => {
                let s = ni + nj;
                (ni / s, nj / s, -ni * nj / (s * s), 0.0)
            }
            LinkageMethod::Median => (0.5, 0.5, -0.25, 0.0),
            LinkageMethod::Ward => {
                let s = ni + nj + nk;
                ((ni + nk) / s, (nj + nk) / s, -nk / s, 0.0)
            }
        }
    }
}

impl fmt::Display for LinkageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LinkageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkageMethod::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown linkage method '{s}' (expected sl, cl, ga, wa, uc, wc or mv)")))
    }
}

/// Naive O(n³) agglomeration.
///
/// Each step merges the globally closest pair; equal distances go to the
/// lexicographically smallest (left node id, right node id).
pub fn linkage(m: &DistanceMatrix, method: LinkageMethod) -> Result<Dendrogram> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Invalid("linkage needs at least two locations".into()));
    }
    let squared = method.uses_squared();
    let mut d: Vec<f64> = (0..n * n)
        .map(|x| {
            let v = m.get(x / n, x % n);
            if squared {
                v * v
            } else {
                v
            }
        })
        .collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linkage input".into()));
    }
    let mut node: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for t in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let v = d[a * n + b];
                let ids = (node[a].min(node[b]), node[a].max(node[b]));
                let better = match best {
                    None => true,
                    Some((bv, bids, _, _)) => v < bv || (v == bv && ids < bids),
                };
                if better {
                    best = Some((v, ids, a, b));
                }
            }
        }
        let (v, (left, right), a, b) = best.expect("at least two active clusters");
        let height = if squared { v.max(0.0).sqrt() } else { v };
        merges.push(Merge { left, right, height });

        let (ni, nj) = (size[a], size[b]);
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let (ai, aj, beta, gamma) = method.coefficients(ni, nj, size[k]);
            let (dik, djk) = (d[a * n + k], d[b * n + k]);
            let updated = ai * dik + aj * djk + beta * v + gamma * (dik - djk).abs();
            d[a * n + k] = updated;
            d[k * n + a] = updated;
        }
        node[a] = n + t;
        size[a] = ni + nj;
        active.retain(|&s| s != b);
    }
    Dendrogram::new(m.index().to_vec(), merges)
}

/// Partition present after the first `n - k` merges.
pub fn cut(d: &Dendrogram, k: usize) -> Result<Partition> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("cannot cut {n} leaves into {k} clusters")));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for (t, m) in d.merges()[..n - k].iter().enumerate() {
        parent[m.left] = n + t;
        parent[m.right] = n + t;
    }
    let roots: Vec<usize> = (0..n)
        .map(|mut x| {
            while parent[x] != x {
                x = parent[x];
            }
            x
        })
        .collect();
    Partition::from_labels(d.labels().to_vec(), &roots)
}

/// Condensed cophenetic distances in `DistanceMatrix::condensed` order.
pub fn cophenetic_distances(d: &Dendrogram) -> Vec<f64> {
    let n = d.n();
    let members = d.members();
    let mut full = vec![0.0; n * n];
    for m in d.merges() {
        for &a in &members[m.left] {
            for &b in &members[m.right] {
                full[a * n + b] = m.height;
                full[b * n + a] = m.height;
            }
        }
    }
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(full[i * n + j]);
        }
    }
    out
}

/// Pearson correlation between input distances and cophenetic distances.
pub fn cophenetic_correlation(m: &DistanceMatrix, d: &Dendrogram) -> Result<f64> {
    if m.index() != d.labels() {
        return Err(Error::Invalid("dendrogram labels do not match the matrix index".into()));
    }
    pearson(&m.condensed(), &cophenetic_distances(d))
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("input distances"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("cophenetic distances"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub method: LinkageMethod,
    pub dendrogram: Dendrogram,
    pub ccc: f64,
}

/// Runs every linkage and keeps the one with the highest cophenetic
/// correlation; exact ties go to the earlier method in `LinkageMethod::ALL`.
pub fn select_method(m: &DistanceMatrix) -> Result<Selection> {
    if m.len() < 3 {
        return Err(Error::Invalid(
            "method selection needs at least three locations (cophenetic correlation is undefined for two)".into(),
        ));
    }
    let runs: Vec<Result<Selection>> = LinkageMethod::ALL
        .par_iter()
        .map(|&method| {
            let dendrogram = linkage(m, method)?;
            let ccc = cophenetic_correlation(m, &dendrogram)?;
            Ok(Selection { method, dendrogram, ccc })
        })
        .collect();
    let mut best: Option<Selection> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(s) => {
                if best.as_ref().is_none_or(|b| s.ccc > b.ccc) {
                    best = Some(s);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("seven runs"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_points() -> DistanceMatrix {
        DistanceMatrix::from_upper(vec!["p".into(), "q".into(), "r".into()], |i, j| match (i, j) {
            (0, 1) => 1.0,
            (0, 2) => 4.0,
            _ => 5.0,
        })
        .unwrap()
    }

    fn heights(d: &Dendrogram) -> Vec<f64> {
        d.merges().iter().map(|m| m.height).collect()
    }

    #[test]
    fn two_points_single_merge() {
        let m = DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 0.7, 0.7, 0.0]).unwrap();
        for method in LinkageMethod::ALL {
            let d = linkage(&m, method).unwrap();
            assert_eq!(d.merges(), &[Merge { left: 0, right: 1, height: 0.7 }], "{method}");
        }
    }

    #[test]
    fn three_point_heights() {
        let m = three_points();
        assert_eq!(heights(&linkage(&m, LinkageMethod::Single).unwrap()), vec![1.0, 4.0]);
        assert_eq!(heights(&linkage(&m, LinkageMethod::Complete).unwrap()), vec![1.0, 5.0]);
        assert_eq!(heights(&linkage(&m, LinkageMethod::Average).unwrap()), vec![1.0, 4.5]);
        let d = linkage(&m, LinkageMethod::Single).unwrap();
        assert_eq!(d.merges()[1], Merge { left: 2, right: 3, height: 4.0 });
    }

    #[test]
    fn cut_extremes_and_three_point_split() {
        let d = linkage(&three_points(), LinkageMethod::Single).unwrap();
        assert_eq!(cut(&d, 3).unwrap().labels(), &[0, 1, 2]);
        assert_eq!(cut(&d, 1).unwrap().labels(), &[0, 0, 0]);
        assert_eq!(cut(&d, 2).unwrap().labels(), &[0, 0, 1]);
        assert!(cut(&d, 0).is_err());
        assert!(cut(&d, 4).is_err());
    }

    #[test]
    fn three_point_cophenetic_correlation() {
        let m = three_points();
        let d = linkage(&m, LinkageMethod::Single).unwrap();
        assert_eq!(cophenetic_distances(&d), vec![1.0, 4.0, 4.0]);
        let r = cophenetic_correlation(&m, &d).unwrap();
        assert!((r - 7.0 / 52f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn star_dendrogram_has_zero_variance() {
        let m = DistanceMatrix::from_upper(vec!["a".into(), "b".into(), "c".into()], |_, _| 2.0).unwrap();
        let d = linkage(&m, LinkageMethod::Single).unwrap();
        assert!(matches!(cophenetic_correlation(&m, &d), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn ultrametric_selects_single_link() {
        // two tight pairs joined high: an ultrametric
        let m = DistanceMatrix::from_upper((0..4).map(|i| i.to_string()).collect(), |i, j| {
            if i / 2 == j / 2 {
                1.0
            } else {
                3.0
            }
        })
        .unwrap();
        let s = select_method(&m).unwrap();
        assert_eq!(s.method, LinkageMethod::Single);
        assert_eq!(s.ccc, 1.0);
    }

    #[test]
    fn selection_needs_three_points() {
        let m = DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(select_method(&m).is_err());
    }

    #[test]
    fn centroid_inversion_is_kept() {
        // near-equilateral triangle: the centroid of the first pair is closer to the third point
        let pts: [(f64, f64); 3] = [(0.0, 0.0), (1.0, 0.0), (0.5, 0.9)];
        let m = DistanceMatrix::from_upper(vec!["a".into(), "b".into(), "c".into()], |i, j| {
            let (p, q) = (pts[i], pts[j]);
            ((p.0 - q.0) * (p.0 - q.0) + (p.1 - q.1) * (p.1 - q.1)).sqrt()
        })
        .unwrap();
        let d = linkage(&m, LinkageMethod::Centroid).unwrap();
        assert!(d.has_inversions());
        assert!((d.merges()[1].height - 0.9).abs() < 1e-12);
        assert!(!linkage(&m, LinkageMethod::Average).unwrap().has_inversions());
    }

    #[test]
    fn codes_round_trip() {
        for m in LinkageMethod::ALL {
            assert_eq!(m.code().parse::<LinkageMethod>().unwrap(), m);
        }
        assert!("xx".parse::<LinkageMethod>().is_err());
    }
}
