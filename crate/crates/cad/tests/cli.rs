mod common;

use std::fs;

use common::*;
use lesion_cad::featfile::save_features;
use lesion_cad::model_io::{load_model, save_model};
use lesion_cad::pgm::load_mask;
use lesion_cad::text::parse_f64;
use lesion_core::boosting::{BoostedModel, Loss};
use lesion_core::features::{FeatureFile, FeatureRecord};
use lesion_core::imaging::normalize;
use lesion_core::levelset::{fuzzy_level_set_segment, LevelSetOverrides, SegmentOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn help_and_version_succeed() {
    assert_eq!(lesioncad(&["--help"]).status.code(), Some(0));
    assert_eq!(lesioncad(&["--version"]).status.code(), Some(0));
    assert_eq!(lesioncad(&["segment", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(lesioncad(&[]).status.code(), Some(1));
    assert_eq!(lesioncad(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lesioncad(&["train"]).status.code(), Some(1));
    assert_eq!(lesioncad(&["segment", "x.pgm", "--seed", "minus"]).status.code(), Some(1));
}

#[test]
fn config_mistakes_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_image(dir.path(), "ph", &disk_phantom(64.0, 64.0, 15.0, 0.0, 0).0);
    let cfg = dir.path().join("c.conf");
    fs::write(&cfg, "fcm.clusterz = 3\n").unwrap();
    let o = lesioncad(&["segment", p(&img), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `fcm.clusterz`"));
    fs::write(&cfg, "levelset.tau = 0.9\n").unwrap();
    assert_eq!(lesioncad(&["segment", p(&img), "--config", p(&cfg)]).status.code(), Some(1));
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.pgm");
    assert_eq!(lesioncad(&["segment", p(&missing)]).status.code(), Some(3));
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n4 4\n255\n\x00").unwrap();
    assert_eq!(lesioncad(&["segment", p(&bad)]).status.code(), Some(3));
    let feat = dir.path().join("f.feat");
    fs::write(&feat, "lesionfeat v9\ndim 1\n").unwrap();
    assert_eq!(lesioncad(&["train", "--features", p(&feat)]).status.code(), Some(3));
    let model = dir.path().join("m.txt");
    fs::write(&model, "model v1\nloss logistic\n").unwrap();
    fs::write(&feat, "lesionfeat v1\ndim 1\na 1 0\n").unwrap();
    assert_eq!(lesioncad(&["classify", p(&model), "--features", p(&feat)]).status.code(), Some(3));
}

#[test]
fn uniform_image_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_image(dir.path(), "flat", &flat_image(0.3, 0.0, 0));
    let o = lesioncad(&["segment", p(&img), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no lesion region"));
    assert!(!dir.path().join("flat.mask.pgm").exists());
}

#[test]
fn segment_writes_mask_overlay_and_dice() {
    let dir = tempfile::tempdir().unwrap();
    let (img, truth) = disk_phantom(60.0, 70.0, 15.0, 0.05, 9);
    let path = write_image(dir.path(), "case", &img);
    let truth_path = dir.path().join("truth.pgm");
    lesion_cad::pgm::save_mask(&truth, &truth_path).unwrap();
    let out = dir.path().join("out");
    let o = lesioncad(&["segment", p(&path), "--truth", p(&truth_path), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(&fields[..2], &["case", "iterations"]);
    let dice = parse_f64(fields[fields.iter().position(|&f| f == "dice").unwrap() + 1]).unwrap();
    assert!(dice >= 0.95, "{line}");

    let mask = load_mask(out.join("case.mask.pgm")).unwrap();
    assert_eq!(fields[3], "area");
    assert_eq!(mask.area().to_string(), fields[4]);
    let overlay = lesion_cad::pgm::load_image(out.join("case.overlay.pgm")).unwrap();
    let edge = mask.boundary();
    for i in 0..overlay.len() {
        let expected = if edge.bits()[i] { 255.0 } else { img.values()[i] };
        assert_eq!(overlay.values()[i], expected);
    }
}

#[test]
fn zero_iteration_override_keeps_cluster_mask() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = disk_phantom(64.0, 64.0, 15.0, 0.05, 4);
    let path = write_image(dir.path(), "z", &img);
    let cfg = dir.path().join("c.conf");
    fs::write(&cfg, "levelset.iterations = 0\nseed = 5\n").unwrap();
    let o = lesioncad(&["segment", p(&path), "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("iterations 0 "));

    let opts = SegmentOptions {
        overrides: LevelSetOverrides { iterations: Some(0), ..Default::default() },
        fcm: lesion_core::fcm::FcmConfig { seed: 5, ..Default::default() },
        ..Default::default()
    };
    let seg = fuzzy_level_set_segment(&normalize(&img), &opts).unwrap();
    assert_eq!(load_mask(dir.path().join("z.mask.pgm")).unwrap(), seg.initial_mask);
}

#[test]
fn degenerate_labels_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let feat = dir.path().join("one.feat");
    let records = (0..10).map(|i| FeatureRecord::new(format!("r{i}"), Some(1), vec![i as f64])).collect();
    save_features(&FeatureFile::new(1, records).unwrap(), &feat).unwrap();
    let o = lesioncad(&["train", "--features", p(&feat), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate labels"));

    let records = vec![FeatureRecord::new("u", None, vec![0.0]), FeatureRecord::new("v", Some(0), vec![1.0])];
    save_features(&FeatureFile::new(1, records).unwrap(), &feat).unwrap();
    assert_eq!(lesioncad(&["train", "--features", p(&feat), "--out", p(dir.path())]).status.code(), Some(1));
}

#[test]
fn configured_dimension_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let feat = dir.path().join("s.feat");
    save_features(&separable_features(40, 1), &feat).unwrap();
    let cfg = dir.path().join("c.conf");
    fs::write(&cfg, "features.dim = 3\n").unwrap();
    let o = lesioncad(&["train", "--features", p(&feat), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_then_eval_and_classify_agree_with_library() {
    let dir = tempfile::tempdir().unwrap();
    let feat = dir.path().join("s.feat");
    save_features(&separable_features(200, 3), &feat).unwrap();
    let o = lesioncad(&["train", "--features", p(&feat), "--out", p(dir.path()), "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("train 160 holdout 40"), "{report}");
    assert!(report.contains("confusion tp "));
    let model_path = dir.path().join("model.txt");
    let model = load_model(&model_path).unwrap();

    let e = lesioncad(&["eval", p(&model_path), "--features", p(&feat)]);
    assert_eq!(e.status.code(), Some(0));
    assert!(stdout(&e).lines().any(|l| l.starts_with("accuracy ")));

    // 50 random rows: the printed score is the library score, bit for bit
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let records: Vec<FeatureRecord> = (0..50)
        .map(|i| FeatureRecord::new(format!("q{i}"), None, vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]))
        .collect();
    let queries = dir.path().join("q.feat");
    save_features(&FeatureFile::new(2, records.clone()).unwrap(), &queries).unwrap();
    let c = lesioncad(&["classify", p(&model_path), "--features", p(&queries)]);
    assert_eq!(c.status.code(), Some(0));
    let text = stdout(&c);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 50);
    for (line, r) in lines.iter().zip(&records) {
        let f: Vec<&str> = line.split(' ').collect();
        let score = model.predict_score(&r.vector).unwrap();
        assert_eq!(f[0], r.id);
        assert_eq!(parse_f64(f[2]).unwrap().to_bits(), score.to_bits());
        assert_eq!(f[1], if score >= 0.5 { "1" } else { "0" });
    }
}

#[test]
fn treeless_models_classify_from_base_score() {
    let dir = tempfile::tempdir().unwrap();
    let feat = dir.path().join("x.feat");
    save_features(&FeatureFile::new(1, vec![FeatureRecord::new("x", None, vec![3.0])]).unwrap(), &feat).unwrap();
    let model_path = dir.path().join("m.txt");
    for (base, expected) in [(-0.7, "x 0 "), (0.0, "x 1 0.5"), (0.4, "x 1 ")] {
        save_model(&BoostedModel::new(base, 0.3, Loss::Logistic, 1, vec![]).unwrap(), &model_path).unwrap();
        let o = lesioncad(&["classify", p(&model_path), "--features", p(&feat)]);
        assert!(stdout(&o).starts_with(expected), "{base}: {}", stdout(&o));
    }
}

#[test]
fn builtin_path_requires_matching_model_width() {
    let dir = tempfile::tempdir().unwrap();
    let img = write_image(dir.path(), "a", &flat_image(0.3, 0.02, 1));
    let model_path = dir.path().join("m.txt");
    save_model(&BoostedModel::new(0.0, 0.3, Loss::Logistic, 2, vec![]).unwrap(), &model_path).unwrap();
    let o = lesioncad(&["classify", p(&model_path), p(&img), "--builtin-features"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lesioncad(&["classify", p(&model_path), p(&img), "--builtin-features", "--features", p(&img)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pipeline_segments_only_positives() {
    let dir = tempfile::tempdir().unwrap();
    let pos = write_image(dir.path(), "pos", &disk_phantom(64.0, 64.0, 15.0, 0.03, 2).0);
    let neg = write_image(dir.path(), "neg", &flat_image(0.4, 0.0, 0));
    // features from a table: the positive row scores high, the negative low
    let table = dir.path().join("t.feat");
    let records = vec![FeatureRecord::new("pos", None, vec![1.0]), FeatureRecord::new("neg", None, vec![0.0])];
    save_features(&FeatureFile::new(1, records).unwrap(), &table).unwrap();
    let tree = lesion_core::boosting::RegressionTree::from_nodes(vec![
        lesion_core::boosting::Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
        lesion_core::boosting::Node::Leaf { weight: -10.0 },
        lesion_core::boosting::Node::Leaf { weight: 10.0 },
    ])
    .unwrap();
    let model_path = dir.path().join("m.txt");
    save_model(&BoostedModel::new(0.0, 1.0, Loss::Logistic, 1, vec![tree]).unwrap(), &model_path).unwrap();
    let out = dir.path().join("out");
    let o = lesioncad(&["pipeline", p(&model_path), p(&pos), p(&neg), "--features", p(&table), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("pos 1 ") && lines[1].starts_with("neg 0 "));
    assert!(out.join("pos.mask.pgm").exists() && out.join("pos.overlay.pgm").exists());
    assert!(!out.join("neg.mask.pgm").exists());

    // a positive call on a flat slice still classifies, then reports exit 2
    let records = vec![FeatureRecord::new("neg", None, vec![1.0])];
    save_features(&FeatureFile::new(1, records).unwrap(), &table).unwrap();
    let o = lesioncad(&["pipeline", p(&model_path), p(&neg), "--features", p(&table), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("neg 1 "));
}

#[test]
fn extract_builds_builtin_feature_file() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = training_images(dir.path(), 3, 8);
    let out = dir.path().join("out");
    let o = lesioncad(&["extract", p(&manifest), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = lesion_cad::featfile::load_features(out.join("features.feat")).unwrap();
    assert_eq!(file.dim(), 144);
    assert_eq!(file.records().len(), 6);
    assert_eq!(file.records()[0].id, "pos000");
    assert_eq!(file.records()[0].label, Some(1));
}
