mod common;

use common::*;
use dialectometry::cdistance::{cluster_emd, compare_clusters, GroundMetric};
use dialectometry::cluster::{cophenetic_correlation, cut, linkage, LinkageMethod};
use dialectometry::dtw::{dtw_frames, DtwConfig};
use dialectometry::levenshtein::Aligner;
use dialectometry::model::DistanceMatrix;
use dialectometry::segments::{SegmentClass, SegmentClassTable, SegmentDistanceTable};
use dialectometry::transport::solve_transport;
use proptest::prelude::*;
use rand::Rng;

fn matrix(d: &[Vec<f64>]) -> DistanceMatrix {
    let ids = (0..d.len()).map(|i| format!("x{i}")).collect();
    DistanceMatrix::from_upper(ids, |i, j| d[i][j]).unwrap()
}

#[test]
fn dtw_matches_path_enumeration() {
    let mut r = rng(11);
    for _ in 0..60 {
        let dim = r.gen_range(1..=3);
        let (tx, ty) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let x = random_sequence(&mut r, tx, dim);
        let y = random_sequence(&mut r, ty, dim);
        let got = dtw_frames(&to_frames(&x), &to_frames(&y), &DtwConfig::default()).unwrap();
        let want = dtw_by_paths(&x, &y);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn alignment_matches_enumeration_up_to_length_three() {
    let classes = SegmentClassTable::default();
    let alphabet = ["a", "e", "t", "d"];
    let seqs: Vec<Vec<&str>> = (1..=3)
        .flat_map(|len| {
            (0..4usize.pow(len as u32)).map(move |code| (0..len).map(|p| alphabet[(code >> (2 * p)) & 3]).collect())
        })
        .collect();
    let unit = SegmentDistanceTable::unit();
    let aligner = Aligner::new(&unit);
    let class_of = |t: &str| classes.segment(t).unwrap().class;
    let adm = |x: &str, y: &str| class_of(x) == class_of(y);
    for a in &seqs {
        for b in &seqs {
            let sa: Vec<_> = a.iter().map(|t| classes.segment(t).unwrap()).collect();
            let sb: Vec<_> = b.iter().map(|t| classes.segment(t).unwrap()).collect();
            let al = aligner.align(&sa, &sb).unwrap();
            let want = alignment_distance_by_enumeration(a, b, &adm);
            assert!((al.distance() - want).abs() < 1e-12, "{a:?} {b:?}");
            for c in al.columns.iter().filter(|c| c.is_substitution()) {
                let (x, y) = c.tokens();
                assert_eq!(class_of(x), class_of(y));
            }
        }
    }
    assert_eq!(class_of("a"), SegmentClass::Vowel);
    assert_eq!(class_of("t"), SegmentClass::Consonant);
}

#[test]
fn linkage_matches_set_recomputation() {
    let mut r = rng(23);
    for _ in 0..20 {
        let n = r.gen_range(2..=7);
        let d = random_matrix(&mut r, n);
        let m = matrix(&d);
        for method in LinkageMethod::ALL {
            let got = linkage(&m, method).unwrap();
            let want = naive_linkage(&d, method);
            for (g, w) in got.merges().iter().zip(&want) {
                assert_eq!((g.left, g.right), (w.0, w.1), "{method}");
                assert!((g.height - w.2).abs() < 1e-9, "{method}: {} vs {}", g.height, w.2);
            }
        }
    }
}

#[test]
fn cut_nesting_and_monotone_heights() {
    let mut r = rng(31);
    for _ in 0..10 {
        let m = matrix(&random_matrix(&mut r, 8));
        for method in LinkageMethod::ALL {
            let d = linkage(&m, method).unwrap();
            if method.is_monotone() {
                assert!(d.merges().windows(2).all(|w| w[0].height <= w[1].height), "{method}");
            }
            for k in 1..8 {
                assert!(cut(&d, k + 1).unwrap().refines(&cut(&d, k).unwrap()));
            }
        }
    }
}

#[test]
fn cophenetic_three_point_case() {
    // sl/cl/ga on d(a,b)=1, d(a,c)=4, d(b,c)=5; ga gives heights 1 and 4.5
    let m = matrix(&[vec![0.0, 1.0, 4.0], vec![1.0, 0.0, 5.0], vec![4.0, 5.0, 0.0]]);
    let d = linkage(&m, LinkageMethod::Average).unwrap();
    let ccc = cophenetic_correlation(&m, &d).unwrap();
    assert!((ccc - 0.9707).abs() < 1e-3, "{ccc}");
}

#[test]
fn transport_matches_vertex_enumeration() {
    let mut r = rng(41);
    for _ in 0..200 {
        let (rows, cols) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let total: u64 = 12;
        let split = |r: &mut rand_chacha::ChaCha8Rng, parts: usize| -> Vec<u64> {
            let mut cuts: Vec<u64> = (0..parts - 1).map(|_| r.gen_range(0..=total)).collect();
            cuts.sort_unstable();
            let mut out = Vec::new();
            let mut prev = 0;
            for c in cuts.into_iter().chain([total]) {
                out.push(c - prev);
                prev = c;
            }
            out
        };
        let s = split(&mut r, rows);
        let d = split(&mut r, cols);
        let cost: Vec<f64> = (0..rows * cols).map(|_| r.gen_range(0.0..10.0)).collect();
        let sf: Vec<f64> = s.iter().map(|&v| v as f64 / total as f64).collect();
        let df: Vec<f64> = d.iter().map(|&v| v as f64 / total as f64).collect();
        let plan = solve_transport(&sf, &df, &cost).unwrap();
        let want = transport_by_vertices(&s, &d, &cost);
        assert!((plan.cost - want).abs() < 1e-9, "{} vs {want}", plan.cost);
        for i in 0..rows {
            let row: f64 = (0..cols).map(|j| plan.flow(i, j)).sum();
            assert!((row - sf[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn cdistance_matches_oracle_for_five_points() {
    let mut r = rng(53);
    let pts: Vec<(f64, f64)> = (0..5).map(|_| (r.gen_range(0.0..10.0), r.gen_range(0.0..10.0))).collect();
    let parts = set_partitions(5, 3);
    for p in parts.iter().step_by(3) {
        for q in &parts {
            let groups = |l: &[usize]| -> Vec<Vec<(f64, f64)>> {
                let mut g = vec![Vec::new(); l.iter().max().unwrap() + 1];
                l.iter().enumerate().for_each(|(i, &c)| g[c].push(pts[i]));
                g
            };
            let got = compare_clusters(&groups(p), &groups(q), GroundMetric::Euclidean).unwrap().score;
            let want = cdistance_oracle(&pts, p, q);
            assert!((got - want).abs() < 1e-9, "{p:?} {q:?}: {got} vs {want}");
        }
    }
}

#[test]
fn cdistance_is_rigid_motion_invariant() {
    let mut r = rng(59);
    let pts: Vec<(f64, f64)> = (0..6).map(|_| (r.gen_range(0.0..10.0), r.gen_range(0.0..10.0))).collect();
    let (th, dx, dy) = (0.7f64, 3.0, -2.0);
    let moved: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(x, y)| (x * th.cos() - y * th.sin() + dx, x * th.sin() + y * th.cos() + dy))
        .collect();
    let split = |p: &[(f64, f64)], l: &[usize]| -> Vec<Vec<(f64, f64)>> {
        let mut g = vec![Vec::new(); 3];
        l.iter().enumerate().for_each(|(i, &c)| g[c].push(p[i]));
        g
    };
    let (a, b) = ([0, 0, 1, 1, 2, 2], [0, 1, 2, 0, 1, 2]);
    let e = GroundMetric::Euclidean;
    let s1 = compare_clusters(&split(&pts, &a), &split(&pts, &b), e).unwrap().score;
    let s2 = compare_clusters(&split(&moved, &a), &split(&moved, &b), e).unwrap().score;
    assert!((s1 - s2).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_emd_symmetric_and_matches_oracle(
        a in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..5),
        b in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..5),
    ) {
        let ab = cluster_emd(&a, &b, GroundMetric::Euclidean).unwrap();
        let ba = cluster_emd(&b, &a, GroundMetric::Euclidean).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((ab - cluster_emd_oracle(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn cophenetic_of_ultrametric_is_one(seed in 0u64..1000) {
        // cophenetic distances of any dendrogram are ultrametric
        let mut r = rng(seed);
        let m = matrix(&random_matrix(&mut r, 6));
        let d = linkage(&m, LinkageMethod::Average).unwrap();
        let coph = dialectometry::cluster::cophenetic_distances(&d);
        let mut it = coph.into_iter();
        let ultra = DistanceMatrix::from_upper(m.index().to_vec(), |_, _| it.next().unwrap()).unwrap();
        let sel = dialectometry::cluster::select_method(&ultra).unwrap();
        prop_assert_eq!(sel.ccc, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cdistance_in_unit_range_and_symmetric(
        pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..9),
        seed in 0u64..10_000,
    ) {
        let mut r = rng(seed);
        let n = pts.len();
        let labels = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> { (0..n).map(|_| r.gen_range(0..3)).collect() };
        let (a, b) = (labels(&mut r), labels(&mut r));
        let groups = |l: &[usize]| -> Vec<Vec<(f64, f64)>> {
            let mut g = vec![Vec::new(); 3];
            l.iter().enumerate().for_each(|(i, &c)| g[c].push(pts[i]));
            g.into_iter().filter(|c| !c.is_empty()).collect()
        };
        let e = GroundMetric::Euclidean;
        let ab = compare_clusters(&groups(&a), &groups(&b), e).unwrap();
        let ba = compare_clusters(&groups(&b), &groups(&a), e).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.score));
        prop_assert!((ab.score - ba.score).abs() < 1e-12);
        prop_assert!(ab.optimal <= ab.naive + 1e-12);
    }

    #[test]
    fn mds_distances_survive_index_permutation(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..9),
        seed in 0u64..10_000,
    ) {
        use rand::seq::SliceRandom;
        let n = pts.len();
        let ids: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        let m = DistanceMatrix::from_upper(ids, |i, j| euclid(pts[i], pts[j])).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng(seed));
        let pm = m.permuted(&order).unwrap();
        let (a, b) = (
            dialectometry::mds::classical_mds(&m, 2).unwrap(),
            dialectometry::mds::classical_mds(&pm, 2).unwrap(),
        );
        let dist = |c: &[Vec<f64>], i: usize, j: usize| (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((dist(&a.coords, order[i], order[j]) - dist(&b.coords, i, j)).abs() < 1e-8);
            }
        }
        prop_assert!((a.eigenvalues.iter().sum::<f64>() - a.stress.trace).abs() < 1e-9);
    }
}
