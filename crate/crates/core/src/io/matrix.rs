//! Full-matrix distance CSV: header `id,<loc1>,…`, one row per location,
//! values printed with 9 significant digits.

use std::path::Path;

use super::text::csv_field;
use super::{format_sig9, read_text, write_text};
use crate::error::{Error, Result};
use crate::model::DistanceMatrix;

pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;
pub const DIAGONAL_TOLERANCE: f64 = 1e-12;

pub fn matrix_to_csv(m: &DistanceMatrix) -> Result<String> {
    let n = m.len();
    let mut text = String::from("id");
    for id in m.index() {
        text.push(',');
        text.push_str(&csv_field(id)?);
    }
    text.push('\n');
    for i in 0..n {
        text.push_str(&m.index()[i]);
        for j in 0..n {
            text.push(',');
            text.push_str(&format_sig9(m.get(i, j)));
        }
        text.push('\n');
    }
    Ok(text)
}

pub fn write_distance_matrix(m: &DistanceMatrix, path: &Path) -> Result<()> {
    write_text(path, &matrix_to_csv(m)?)
}

pub fn read_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    parse_distance_matrix(path, &read_text(path)?)
}

/// Checks symmetry and diagonal within tolerance, then averages the two
/// triangles and zeroes the diagonal.
pub fn parse_distance_matrix(path: &Path, text: &str) -> Result<DistanceMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty matrix file"))?;
    let mut head = header.split(',').map(str::trim);
    if head.next() != Some("id") {
        return Err(Error::parse(path, 1, "header must start with 'id'"));
    }
    let index: Vec<String> = head.map(str::to_owned).collect();
    let n = index.len();
    let mut values = vec![0.0; n * n];
    let mut rows = 0;
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        if rows == n {
            return Err(Error::parse(path, lineno, "more rows than header columns"));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n + 1 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, found {}", n + 1, fields.len()),
            ));
        }
        if fields[0] != index[rows] {
            return Err(Error::parse(
                path,
                lineno,
                format!("row id '{}' does not match header column '{}'", fields[0], index[rows]),
            ));
        }
        for (j, f) in fields[1..].iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad number '{f}'")))?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::parse(path, lineno, format!("distance {v} is not a nonnegative finite number")));
            }
            values[rows * n + j] = v;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(path, 0, format!("expected {n} rows, found {rows}")));
    }
    for i in 0..n {
        let d = values[i * n + i];
        if d.abs() > DIAGONAL_TOLERANCE {
            return Err(Error::parse(path, i + 2, format!("nonzero diagonal {d} at '{}'", index[i])));
        }
        values[i * n + i] = 0.0;
        for j in i + 1..n {
            let (a, b) = (values[i * n + j], values[j * n + i]);
            if (a - b).abs() > ASYMMETRY_TOLERANCE {
                return Err(Error::parse(
                    path,
                    i + 2,
                    format!("asymmetric entries for ('{}', '{}'): {a} vs {b}", index[i], index[j]),
                ));
            }
            let avg = if a == b { a } else { (a + b) / 2.0 };
            values[i * n + j] = avg;
            values[j * n + i] = avg;
        }
    }
    DistanceMatrix::new(index, values).map_err(|e| Error::parse(path, 0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("L{i:03}")).collect()
    }

    #[test]
    fn two_by_two_round_trip() {
        let m = DistanceMatrix::new(ids(2), vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        let text = matrix_to_csv(&m).unwrap();
        assert_eq!(text, "id,L000,L001\nL000,0,0.5\nL001,0.5,0\n");
        assert_eq!(parse_distance_matrix(Path::new("m"), &text).unwrap(), m);
    }

    #[test]
    fn asymmetry_rejected() {
        let err = parse_distance_matrix(Path::new("m"), "id,a,b\na,0,0.5\nb,0.6,0\n").unwrap_err();
        assert!(err.to_string().contains("asymmetric"), "{err}");
        let err = parse_distance_matrix(Path::new("m"), "id,a,b\na,0.001,0.5\nb,0.5,0\n").unwrap_err();
        assert!(err.to_string().contains("diagonal"), "{err}");
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let m = parse_distance_matrix(Path::new("m"), "id,a,b\na,0,0.5\nb,0.5000000001,0\n").unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!((m.get(0, 1) - 0.50000000005).abs() < 1e-15);
    }

    #[test]
    fn shape_of_106_locations() {
        let m = DistanceMatrix::from_upper(ids(106), |i, j| (i + j) as f64 / 7.0).unwrap();
        let text = matrix_to_csv(&m).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 107);
        assert!(lines.iter().all(|l| l.split(',').count() == 107));
        let back = parse_distance_matrix(Path::new("m"), &text).unwrap();
        for (a, b) in back.condensed().iter().zip(m.condensed()) {
            assert!((a - b).abs() <= 1e-8 * b);
        }
    }
}
