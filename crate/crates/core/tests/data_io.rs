mod common;

use std::fs;
use std::path::{Path, PathBuf};

use age_core::data::{
    generate_sbm, link_split, load_dataset, read_features, read_snapshot, save_dataset, write_features_bin,
    write_features_tsv, write_run, DatasetSpec, RunConfig,
};
use age_core::encoder::EmbeddingSnapshot;
use age_core::AgeError;
use common::{random_graph, rng};
use ndarray::{array, Array2};
use rand::Rng;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn toy_tsv_fixture_loads_to_the_expected_graph() {
    let g = load_dataset(&DatasetSpec::tsv("toy", &fixture("toy"))).unwrap();
    assert_eq!(g.node_count(), 4);
    assert_eq!(g.edges(), vec![(0, 1), (0, 2), (1, 2)]);
    assert_eq!(g.degrees(), vec![2, 2, 2, 0]);
    assert_eq!(g.features(), &array![[1.0, 0.0], [0.5, 0.25], [0.0, 1.0], [2.0, -1.5]]);
    assert_eq!(g.labels().unwrap(), &[1, 0, 1, 0]);
    assert_eq!(g.class_names().unwrap(), &["a".to_string(), "b".to_string()]);
}

#[test]
fn content_cites_drops_dangling_citations_and_self_loops() {
    let g = load_dataset(&DatasetSpec::content_cites("mini", &fixture("mini"))).unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.feature_dim(), 3);
    assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
    assert_eq!(g.features().row(1).to_vec(), vec![0.0, 1.0, 1.0]);
    assert_eq!(g.class_count(), Some(2));
    assert_eq!(g.labels().unwrap()[0], g.labels().unwrap()[2]);
}

fn write_tsv_dataset(dir: &Path, edges: &str, features: &str) -> DatasetSpec {
    fs::write(dir.join("edges.tsv"), edges).unwrap();
    fs::write(dir.join("features.tsv"), features).unwrap();
    DatasetSpec::tsv("bad", dir)
}

#[test]
fn parse_errors_carry_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_tsv_dataset(tmp.path(), "0\t1\n", "2 2\n1\t0\n0\tx\n");
    match load_dataset(&spec) {
        Err(AgeError::Parse { path, line, .. }) => {
            assert_eq!(line, 3);
            assert!(path.ends_with("features.tsv"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    let spec = write_tsv_dataset(tmp.path(), "0\t1\n1\t5\n", "2 2\n1\t0\n0\t1\n");
    assert!(matches!(load_dataset(&spec), Err(AgeError::Parse { line: 2, .. })));
    let spec = write_tsv_dataset(tmp.path(), "0\t1\n", "3 2\n1\t0\n0\t1\n");
    assert!(matches!(load_dataset(&spec), Err(AgeError::Parse { .. })));
    fs::remove_file(tmp.path().join("edges.tsv")).unwrap();
    assert!(matches!(load_dataset(&spec), Err(AgeError::Io { .. })));
}

#[test]
fn save_then_load_is_lossless_in_both_feature_formats() {
    for seed in 0..10u64 {
        let mut r = rng(seed);
        let mut g = random_graph(25, 0.2, 4, seed);
        let x = Array2::from_shape_fn((25, 4), |_| r.random::<f64>() * 1e-3 + r.random_range(-1e6..1e6));
        g = g.with_features(x).unwrap();
        let labels: Vec<usize> = (0..25).map(|i| i % 3).collect();
        let g = age_core::build_graph(&g.edges(), g.features().clone(), Some(labels)).unwrap();
        for binary in [false, true] {
            let tmp = tempfile::tempdir().unwrap();
            let spec = save_dataset(&g, "rt", tmp.path(), binary).unwrap();
            let back = load_dataset(&spec).unwrap();
            assert_eq!(back.edges(), g.edges());
            assert_eq!(back.features(), g.features());
            assert_eq!(back.labels(), g.labels());
        }
    }
}

#[test]
fn feature_files_round_trip_bit_exactly() {
    let x = array![
        [f64::MIN_POSITIVE, -0.0, 1.0 / 3.0],
        [1e300, -2.5e-300, std::f64::consts::PI]
    ];
    let tmp = tempfile::tempdir().unwrap();
    let (t, b) = (tmp.path().join("f.tsv"), tmp.path().join("f.bin"));
    write_features_tsv(&t, &x).unwrap();
    write_features_bin(&b, &x).unwrap();
    for p in [t, b] {
        let y = read_features(&p).unwrap();
        assert!(x.iter().zip(y.iter()).all(|(a, c)| a.to_bits() == c.to_bits()));
    }
}

#[test]
fn split_fixture_counts() {
    let edges: Vec<(usize, usize)> = (0..20).map(|i| (i, (i + 1) % 20)).collect();
    let g = age_core::build_graph(&edges, Array2::ones((20, 1)), None).unwrap();
    let s = link_split(&g, 0.05, 0.10, 3).unwrap();
    assert_eq!((s.val_pos.len(), s.test_pos.len()), (1, 2));
    assert_eq!((s.val_neg.len(), s.test_neg.len()), (1, 2));
    let again = link_split(&g, 0.05, 0.10, 3).unwrap();
    assert_eq!(s.test_pos, again.test_pos);
    assert_eq!(s.val_neg, again.val_neg);
}

#[test]
fn split_invariants_hold_on_random_graphs() {
    for seed in 0..100u64 {
        let g = random_graph(30 + (seed as usize % 20), 0.15, 2, seed);
        let m = g.edge_count();
        if m < 20 {
            continue;
        }
        let s = link_split(&g, 0.05, 0.10, seed).unwrap();
        assert_eq!(s.val_pos.len(), (0.05 * m as f64).round() as usize);
        assert_eq!(s.test_pos.len(), (0.10 * m as f64).round() as usize);
        assert_eq!(s.val_neg.len(), s.val_pos.len());
        assert_eq!(s.test_neg.len(), s.test_pos.len());
        assert_eq!(s.train_edges.len() + s.val_pos.len() + s.test_pos.len(), m);
        for &(i, j) in s.test_neg.iter().chain(&s.val_neg) {
            assert!(i != j && !g.has_edge(i, j), "seed {seed}: ({i},{j}) is an edge");
        }
        for &(i, j) in s.test_pos.iter().chain(&s.val_pos) {
            assert!(g.has_edge(i, j) && !s.residual_graph.has_edge(i, j));
        }
        let mut negs: Vec<_> = s
            .test_neg
            .iter()
            .chain(&s.val_neg)
            .map(|&(i, j)| (i.min(j), i.max(j)))
            .collect();
        let count = negs.len();
        negs.sort_unstable();
        negs.dedup();
        assert_eq!(negs.len(), count);
        assert_eq!(s.residual_graph.node_count(), g.node_count());
        assert_eq!(s.residual_graph.features(), g.features());
        assert_eq!(s.residual_graph.edge_count(), s.train_edges.len());
    }
}

#[test]
fn split_rejects_tiny_graphs() {
    let g = age_core::build_graph(&[(0, 1), (1, 2), (0, 2)], Array2::ones((3, 1)), None).unwrap();
    assert!(matches!(link_split(&g, 0.3, 0.4, 0), Err(AgeError::Config(_))));
}

#[test]
fn sbm_extremes_and_preconditions() {
    let g = generate_sbm(&[4, 5], 1.0, 0.0, 3, 0.0, 1).unwrap();
    assert_eq!(g.edge_count(), 6 + 10);
    for (i, j) in g.edges() {
        assert_eq!(g.labels().unwrap()[i], g.labels().unwrap()[j]);
    }
    assert_eq!(g.features().row(0).to_vec(), vec![1.0, 0.0, 0.0]);
    assert!(generate_sbm(&[4, 5], 0.3, 0.3, 3, 0.1, 1).is_err());
    assert!(generate_sbm(&[4, 5], 0.3, 0.1, 1, 0.1, 1).is_err());
    let a = generate_sbm(&[10, 10], 0.5, 0.1, 4, 0.1, 9).unwrap();
    let b = generate_sbm(&[10, 10], 0.5, 0.1, 4, 0.1, 9).unwrap();
    assert_eq!(a.edges(), b.edges());
    assert_eq!(a.features(), b.features());
}

#[test]
fn config_round_trips_and_rejects_bad_ratios() {
    for name in ["cora", "citeseer", "wiki", "pubmed", "sbm"] {
        let cfg = RunConfig::preset(name);
        cfg.validate().unwrap();
        let back = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
    assert!(RunConfig::from_json_str(r#"{"r_pos_st_ratio": 0.001, "r_pos_ed_ratio": 0.01}"#).is_err());
    assert!(RunConfig::from_json_str(r#"{"r_neg_st_ratio": 0.0}"#).is_err());
    assert!(RunConfig::from_json_str(r#"{"nonsense": 1}"#).is_err());
    let cfg = RunConfig::from_json_str(r#"{"t": 3, "k_mode": 0.5, "T": 5}"#).unwrap();
    assert_eq!(cfg.t, 3);
    assert_eq!(cfg.threshold_updates, 5);
}

#[test]
fn run_artifacts_are_written_atomically_and_read_back() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let snaps = vec![
        EmbeddingSnapshot::new(array![[0.0, 1.0], [0.25, 0.5]], 10),
        EmbeddingSnapshot::new(array![[1.0, 0.0], [0.125, 1.0 / 3.0]], 20),
    ];
    let cfg = RunConfig::preset("sbm");
    let files = write_run(&out, "toy", &cfg, &snaps, Some(1)).unwrap();
    assert!(files.iter().all(|f| f.starts_with(&out) && f.is_file()));
    let back = read_snapshot(&out.join("snapshot_0020.tsv")).unwrap();
    assert_eq!(back, snaps[1].z);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["selected_epoch"], 20);
    assert_eq!(manifest["config_sha256"], cfg.hash());
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers, vec![std::ffi::OsString::from("run")]);
}
