//! Classical (Torgerson) scaling and RGB colorings of the result.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::DistanceMatrix;

/// Dimensions whose range is below this fraction of the widest one count as constant.
pub const FLAT_AXIS_RATIO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Mds {
    /// One row of `dims` coordinates per location, in matrix order.
    pub coords: Vec<Vec<f64>>,
    /// All eigenvalues of the centred Gram matrix, descending, unclamped.
    pub eigenvalues: Vec<f64>,
    pub stress: StressInfo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressInfo {
    pub trace: f64,
    /// Share of the positive eigenvalue mass captured by the kept dimensions.
    pub explained: f64,
    pub negative_mass: f64,
}

pub fn classical_mds(m: &DistanceMatrix, dims: usize) -> Result<Mds> {
    let n = m.len();
    if n < 2 {
        return Err(Error::Invalid("MDS needs at least two locations".into()));
    }
    if dims == 0 || dims > n - 1 {
        return Err(Error::Invalid(format!("MDS dims must be in 1..={}, got {dims}", n - 1)));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| m.get(i, j) * m.get(i, j));
    let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand));
    let trace = b.trace();

    let eig = SymmetricEigen::new(b);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();

    let mut coords = vec![vec![0.0; dims]; n];
    for (axis, &k) in order.iter().take(dims).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0) {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        for (row, x) in coords.iter_mut().zip(v) {
            row[axis] = x * scale;
        }
    }

    let positive: f64 = eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    let kept: f64 = eigenvalues.iter().take(dims).map(|v| v.max(0.0)).sum();
    Ok(Mds {
        coords,
        stress: StressInfo {
            trace,
            explained: if positive > 0.0 { kept / positive } else { 0.0 },
            negative_mass: eigenvalues.iter().filter(|&&v| v < 0.0).map(|v| -v).sum(),
        },
        eigenvalues,
    })
}

/// Maps the first three coordinate dimensions to `#RRGGBB`, missing ones padded with zeros.
pub fn mds_to_rgb(coords: &[Vec<f64>]) -> Vec<String> {
    let column = |axis: usize| -> Vec<f64> { coords.iter().map(|r| r.get(axis).copied().unwrap_or(0.0)).collect() };
    let bounds = |vals: &[f64]| vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let ranges: Vec<f64> = (0..3)
        .map(|axis| {
            let (lo, hi) = bounds(&column(axis));
            hi - lo
        })
        .collect();
    let widest = ranges.iter().copied().fold(0.0, f64::max);
    let channels: Vec<Vec<u8>> = (0..3)
        .map(|axis| {
            if coords.is_empty() || ranges[axis] == 0.0 || ranges[axis] <= FLAT_AXIS_RATIO * widest {
                return vec![128; coords.len()];
            }
            let vals = column(axis);
            let (lo, hi) = bounds(&vals);
            vals.iter().map(|&x| ((x - lo) / (hi - lo) * 255.0 + 0.5).floor() as u8).collect()
        })
        .collect();
    (0..coords.len())
        .map(|i| format!("#{:02X}{:02X}{:02X}", channels[0][i], channels[1][i], channels[2][i]))
        .collect()
}
