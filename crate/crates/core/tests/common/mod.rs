//! Brute-force oracles and seeded fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use dialectometry::cluster::LinkageMethod;
use dialectometry::io::{self, Manifest, ModelEntry};
use dialectometry::model::{Frames, Location, LocationTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- DTW

/// Minimum over every monotone warping path, each enumerated explicitly.
pub fn dtw_by_paths(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    fn local(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }
    fn walk(x: &[Vec<f64>], y: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        if i == x.len() - 1 && j == y.len() - 1 {
            *best = best.min(acc);
            return;
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc + 2.0 * local(&x[i + 1], &y[j + 1]), best);
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc + local(&x[i + 1], &y[j]), best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc + local(&x[i], &y[j + 1]), best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, local(&x[0], &y[0]), &mut best);
    best / (x.len() + y.len()) as f64
}

pub fn random_sequence(r: &mut impl Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..dim).map(|_| r.gen_range(-2.0f32..2.0) as f64).collect())
        .collect()
}

pub fn to_frames(seq: &[Vec<f64>]) -> Frames {
    let rows: Vec<Vec<f32>> = seq.iter().map(|r| r.iter().map(|&v| v as f32).collect()).collect();
    Frames::from_rows(&rows).unwrap()
}

// ---------------------------------------------------------------- alignment

/// Least cost over all admissible alignments, normalized by the longest
/// least-cost alignment. Walks every alignment without storing them.
pub fn alignment_distance_by_enumeration(a: &[&str], b: &[&str], adm: &dyn Fn(&str, &str) -> bool) -> f64 {
    fn go(a: &[&str], b: &[&str], i: usize, j: usize, cost: f64, len: usize, best: &mut (f64, usize), adm: &dyn Fn(&str, &str) -> bool) {
        if i == a.len() && j == b.len() {
            if cost < best.0 || (cost == best.0 && len > best.1) {
                *best = (cost, len);
            }
            return;
        }
        if i < a.len() && j < b.len() && adm(a[i], b[j]) {
            let c = if a[i] == b[j] { 0.0 } else { 1.0 };
            go(a, b, i + 1, j + 1, cost + c, len + 1, best, adm);
        }
        if i < a.len() {
            go(a, b, i + 1, j, cost + 1.0, len + 1, best, adm);
        }
        if j < b.len() {
            go(a, b, i, j + 1, cost + 1.0, len + 1, best, adm);
        }
    }
    let mut best = (f64::INFINITY, 0);
    go(a, b, 0, 0, 0.0, 0, &mut best, adm);
    best.0 / best.1 as f64
}

// ---------------------------------------------------------------- linkage

/// Agglomeration that recomputes every inter-cluster distance from the
/// member sets at each step (no update formula). Returns (left, right, height).
pub fn naive_linkage(d: &[Vec<f64>], method: LinkageMethod) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    struct Node {
        id: usize,
        members: Vec<usize>,
        // centroid weights: uniform for ga/uc/mv, halved per merge for wa/wc
        weights: Vec<f64>,
    }
    let halving = matches!(method, LinkageMethod::Weighted | LinkageMethod::Median);
    let mut active: Vec<Node> = (0..n)
        .map(|i| {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            Node {
                id: i,
                members: vec![i],
                weights: w,
            }
        })
        .collect();
    let sq = |a: usize, b: usize| d[a][b] * d[a][b];
    let bilinear = |u: &[f64], w: &[f64], f: &dyn Fn(usize, usize) -> f64| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                if u[a] != 0.0 && w[b] != 0.0 {
                    s += u[a] * w[b] * f(a, b);
                }
            }
        }
        s
    };
    let centroid_gap = |x: &Node, y: &Node| -> f64 {
        bilinear(&x.weights, &y.weights, &sq)
            - 0.5 * bilinear(&x.weights, &x.weights, &sq)
            - 0.5 * bilinear(&y.weights, &y.weights, &sq)
    };
    let dist = |x: &Node, y: &Node| -> f64 {
        let pairs = || x.members.iter().flat_map(|&a| y.members.iter().map(move |&b| d[a][b]));
        match method {
            LinkageMethod::Single => pairs().fold(f64::INFINITY, f64::min),
            LinkageMethod::Complete => pairs().fold(0.0, f64::max),
            LinkageMethod::Average => pairs().sum::<f64>() / (x.members.len() * y.members.len()) as f64,
            LinkageMethod::Weighted => bilinear(&x.weights, &y.weights, &|a, b| d[a][b]),
            LinkageMethod::Centroid | LinkageMethod::Median => centroid_gap(x, y),
            LinkageMethod::Ward => {
                let (p, q) = (x.members.len() as f64, y.members.len() as f64);
                2.0 * p * q / (p + q) * centroid_gap(x, y)
            }
        }
    };
    let mut merges = Vec::new();
    for t in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let v = dist(&active[i], &active[j]);
                let ids = (active[i].id.min(active[j].id), active[i].id.max(active[j].id));
                if best.is_none_or(|(bv, bids, _, _)| v < bv || (v == bv && ids < bids)) {
                    best = Some((v, ids, i, j));
                }
            }
        }
        let (v, ids, i, j) = best.unwrap();
        let height = if method.uses_squared() { v.max(0.0).sqrt() } else { v };
        merges.push((ids.0, ids.1, height));
        let y = active.remove(j);
        let x = active.remove(i);
        let mut members = x.members.clone();
        members.extend(&y.members);
        let weights = if halving {
            x.weights.iter().zip(&y.weights).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
        } else {
            let k = members.len() as f64;
            let mut w = vec![0.0; n];
            members.iter().for_each(|&m| w[m] = 1.0 / k);
            w
        };
        active.push(Node {
            id: n + t,
            members,
            weights,
        });
    }
    merges
}

pub fn random_matrix(r: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = r.gen_range(0.1..10.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

// ---------------------------------------------------------------- transport

/// Exact optimum over all vertices of the transportation polytope with
/// integer masses. Every vertex is reached by repeatedly saturating some
/// open cell, so the memoized search below covers them all.
pub fn transport_by_vertices(supply: &[u64], demand: &[u64], cost: &[f64]) -> f64 {
    fn go(s: &mut Vec<u64>, d: &mut Vec<u64>, cost: &[f64], memo: &mut HashMap<(Vec<u64>, Vec<u64>), f64>) -> f64 {
        if s.iter().all(|&v| v == 0) {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(s.clone(), d.clone())) {
            return v;
        }
        let n = d.len();
        let mut best = f64::INFINITY;
        for i in 0..s.len() {
            if s[i] == 0 {
                continue;
            }
            for j in 0..n {
                if d[j] == 0 {
                    continue;
                }
                let x = s[i].min(d[j]);
                s[i] -= x;
                d[j] -= x;
                let v = x as f64 * cost[i * n + j] + go(s, d, cost, memo);
                s[i] += x;
                d[j] += x;
                best = best.min(v);
            }
        }
        memo.insert((s.clone(), d.clone()), best);
        best
    }
    let total: u64 = supply.iter().sum();
    assert_eq!(total, demand.iter().sum::<u64>());
    go(&mut supply.to_vec(), &mut demand.to_vec(), cost, &mut HashMap::new()) / total as f64
}

pub fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

pub fn cluster_emd_oracle(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let cost: Vec<f64> = a.iter().flat_map(|&p| b.iter().map(move |&q| euclid(p, q))).collect();
    transport_by_vertices(&vec![b.len() as u64; a.len()], &vec![a.len() as u64; b.len()], &cost)
}

/// Two-level score computed entirely with the vertex-enumeration oracle.
pub fn cdistance_oracle(points: &[(f64, f64)], p: &[usize], q: &[usize]) -> f64 {
    let groups = |labels: &[usize]| -> Vec<Vec<(f64, f64)>> {
        let k = labels.iter().max().unwrap() + 1;
        let mut g = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            g[l].push(points[i]);
        }
        g.into_iter().filter(|c| !c.is_empty()).collect()
    };
    let (a, b) = (groups(p), groups(q));
    let n = points.len() as f64;
    let cost: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| cluster_emd_oracle(x, y))).collect();
    let sa: Vec<u64> = a.iter().map(|c| c.len() as u64).collect();
    let sb: Vec<u64> = b.iter().map(|c| c.len() as u64).collect();
    let otd = transport_by_vertices(&sa, &sb, &cost);
    let mut naive = 0.0;
    for (i, x) in sa.iter().enumerate() {
        for (j, y) in sb.iter().enumerate() {
            naive += (*x as f64) * (*y as f64) / (n * n) * cost[i * b.len() + j];
        }
    }
    if naive == 0.0 {
        0.0
    } else {
        (otd / naive).min(1.0)
    }
}

/// Restricted growth strings: all set partitions of `n` items into at most `max_k` blocks.
pub fn set_partitions(n: usize, max_k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max_k: usize, cur: &mut Vec<usize>, used: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in 0..=used.min(max_k - 1) {
            cur.push(l);
            go(n, max_k, cur, used.max(l + 1), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, max_k, &mut Vec::new(), 0, &mut out);
    out
}

// ---------------------------------------------------------------- sweep fixture

pub const FIXTURE_MODEL: &str = "synth";
pub const FIXTURE_DIM: usize = 4;
pub const FIXTURE_LAYERS: u32 = 3;

/// Four well separated regions of ten locations each.
const CENTRES: [(f64, f64, &str); 4] = [
    (53.2, 5.8, "frisian"),
    (52.9, 6.7, "low_saxon"),
    (50.9, 5.9, "limburgish"),
    (52.1, 4.6, "dutch"),
];

pub struct SweepFixture {
    pub dir: PathBuf,
    pub locations: PathBuf,
    pub words: PathBuf,
    pub archive: PathBuf,
    pub table: LocationTable,
    pub word_ids: Vec<String>,
}

/// Layer 1 carries the group structure cleanly, layer 2 weakly and layer 3
/// not at all.
pub fn sweep_fixture(dir: &Path, seed: u64, per_group: usize, n_words: usize) -> SweepFixture {
    let mut r = rng(seed);
    let mut locs = Vec::new();
    for (g, &(lat, lon, label)) in CENTRES.iter().enumerate() {
        for i in 0..per_group {
            locs.push(Location {
                location_id: format!("L{g}{i:02}"),
                name: format!("{label} {i}"),
                lat: lat + r.gen_range(-0.15..0.15),
                lon: lon + r.gen_range(-0.15..0.15),
                gold_label: Some(label.to_string()),
            });
        }
    }
    let table = LocationTable::validate(locs).unwrap();
    let word_ids: Vec<String> = (0..n_words).map(|w| format!("w{w}")).collect();

    let archive = dir.join("archive");
    Manifest::new(vec![ModelEntry {
        model_id: FIXTURE_MODEL.into(),
        layers: FIXTURE_LAYERS,
        dim: FIXTURE_DIM as u32,
        sample_rate: 16000,
    }])
    .write(&archive)
    .unwrap();

    for w in &word_ids {
        let len = r.gen_range(4..8);
        let protos: Vec<Vec<Vec<f64>>> = (0..4).map(|_| scaled(random_sequence(&mut r, len, FIXTURE_DIM), 3.0)).collect();
        for loc in table.entries() {
            let g = CENTRES.iter().position(|c| Some(c.2) == loc.gold_label.as_deref()).unwrap();
            for layer in 1..=FIXTURE_LAYERS {
                let seq: Vec<Vec<f64>> = match layer {
                    1 => jitter(&mut r, &protos[g], 0.05),
                    2 => jitter(&mut r, &protos[g], 2.5),
                    _ => random_sequence(&mut r, len, FIXTURE_DIM),
                };
                let seq = stretch(&mut r, seq);
                io::archive::write_archive_frames(&archive, FIXTURE_MODEL, layer, &loc.location_id, w, &to_frames(&seq))
                    .unwrap();
            }
        }
    }

    let locations = dir.join("locations.csv");
    io::write_locations(&table, &locations).unwrap();
    let words = dir.join("words.txt");
    std::fs::write(&words, word_ids.join("\n") + "\n").unwrap();
    SweepFixture {
        dir: dir.to_path_buf(),
        locations,
        words,
        archive,
        table,
        word_ids,
    }
}

fn scaled(seq: Vec<Vec<f64>>, s: f64) -> Vec<Vec<f64>> {
    seq.into_iter().map(|f| f.into_iter().map(|v| v * s).collect()).collect()
}

fn jitter(r: &mut impl Rng, seq: &[Vec<f64>], amount: f64) -> Vec<Vec<f64>> {
    seq.iter()
        .map(|f| f.iter().map(|v| v + r.gen_range(-amount..amount)).collect())
        .collect()
}

/// Repeats one random frame so sequence lengths differ across locations.
fn stretch(r: &mut impl Rng, mut seq: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if r.gen_bool(0.5) {
        let t = r.gen_range(0..seq.len());
        let f = seq[t].clone();
        seq.insert(t, f);
    }
    seq
}
