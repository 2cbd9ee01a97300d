use std::fs;
use std::path::Path;

use perturbench::raster::{encode_png, load_png, synth_dataset, Sampling, SynthSpec};
use perturbench::suite::{
    check_disjoint, find_group, generate_suite, group_dir, load_manifest, read_group_dir, verify_suite, SuiteParams,
    MANIFEST_FILE,
};
use perturbench::{Error, LabeledDataset, SeedSpec, SuiteManifest};

fn dataset(n: usize) -> LabeledDataset {
    synth_dataset(&SynthSpec::default(), n, &SeedSpec::new(3)).unwrap()
}

fn build(dir: &Path, n: usize) -> (LabeledDataset, SuiteManifest) {
    let ds = dataset(40);
    let manifest = generate_suite(&ds, &SuiteParams::new(3, n, "synthetic"), dir).unwrap();
    (ds, manifest)
}

#[test]
fn fresh_suite_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, manifest) = build(tmp.path(), 4);
    let loaded = load_manifest(tmp.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, manifest);
    let report = verify_suite(&loaded, tmp.path()).unwrap();
    assert_eq!(report.groups_checked, 69);
    assert!(report.is_clean());
}

#[test]
fn flipped_byte_flags_exactly_one_group() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, manifest) = build(tmp.path(), 3);
    let g = find_group("GA0.15").unwrap();
    let png = group_dir(tmp.path(), &g).join("1.png");
    let mut bytes = fs::read(&png).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&png, bytes).unwrap();

    let report = verify_suite(&manifest, tmp.path()).unwrap();
    assert_eq!(report.mismatches.len(), 1);
    assert_eq!(report.mismatches[0].group_id, g.group_id);
    assert_eq!(report.mismatches[0].payload, "images");
}

#[test]
fn edited_labels_are_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, manifest) = build(tmp.path(), 2);
    let g = find_group("RR60").unwrap();
    fs::write(group_dir(tmp.path(), &g).join("labels.txt"), "2\n2\n").unwrap();
    let report = verify_suite(&manifest, tmp.path()).unwrap();
    assert_eq!(report.mismatches.len(), 1);
    assert_eq!(report.mismatches[0].payload, "labels");
}

#[test]
fn truncated_manifest_is_a_structural_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, mut manifest) = build(tmp.path(), 1);
    manifest.groups.pop();
    let path = tmp.path().join("short.json");
    manifest.save(&path).unwrap();
    assert!(matches!(load_manifest(&path), Err(Error::Structure(_))));
}

#[test]
fn other_version_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, mut manifest) = build(tmp.path(), 1);
    manifest.spec_version = "perturbench/0".into();
    let path = tmp.path().join("old.json");
    manifest.save(&path).unwrap();
    assert!(matches!(load_manifest(&path), Err(Error::Version { .. })));
}

#[test]
fn clean_group_holds_the_source_images() {
    let tmp = tempfile::tempdir().unwrap();
    let (ds, manifest) = build(tmp.path(), 5);
    let clean = find_group("clean").unwrap();
    for (k, &src) in manifest.source.indices.iter().enumerate() {
        let path = group_dir(tmp.path(), &clean).join(format!("{k}.png"));
        assert_eq!(fs::read(&path).unwrap(), encode_png(&ds.images()[src]).unwrap());
        assert_eq!(load_png(&path).unwrap(), ds.images()[src]);
    }
    let (_, labels) = read_group_dir(group_dir(tmp.path(), &clean)).unwrap();
    let expected: Vec<u32> = manifest.source.indices.iter().map(|&i| ds.labels()[i]).collect();
    assert_eq!(labels, expected);
}

#[test]
fn composition_order_shows_up_on_disk() {
    let tmp = tempfile::tempdir().unwrap();
    build(tmp.path(), 3);
    let a = find_group("SP0.1RL30").unwrap();
    let b = find_group("RL30SP0.1").unwrap();
    let (ia, _) = read_group_dir(group_dir(tmp.path(), &a)).unwrap();
    let (ib, _) = read_group_dir(group_dir(tmp.path(), &b)).unwrap();
    assert_ne!(ia, ib);
}

#[test]
fn missing_group_directory_is_structural() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, manifest) = build(tmp.path(), 1);
    fs::remove_dir_all(group_dir(tmp.path(), &find_group("SP0.2").unwrap())).unwrap();
    assert!(matches!(verify_suite(&manifest, tmp.path()), Err(Error::Structure(_))));
}

#[test]
fn skipped_draws_are_disjoint() {
    let ds = dataset(60);
    let tmp = tempfile::tempdir().unwrap();
    let mut first = SuiteParams::new(8, 10, "synthetic");
    first.sampling = Sampling::Sequential { skip: 0 };
    let mut second = first.clone();
    second.sampling = Sampling::Sequential { skip: 10 };
    let a = generate_suite(&ds, &first, tmp.path().join("a")).unwrap();
    let b = generate_suite(&ds, &second, tmp.path().join("b")).unwrap();
    check_disjoint(&a.source, &b.source).unwrap();

    let mut overlapping = first.clone();
    overlapping.sampling = Sampling::Sequential { skip: 5 };
    let c = generate_suite(&ds, &overlapping, tmp.path().join("c")).unwrap();
    assert!(matches!(check_disjoint(&a.source, &c.source), Err(Error::Structure(_))));

    let mut shuffled = first.clone();
    shuffled.sampling = Sampling::Shuffled { skip: 0 };
    let d = generate_suite(&ds, &shuffled, tmp.path().join("d")).unwrap();
    shuffled.sampling = Sampling::Shuffled { skip: 10 };
    let e = generate_suite(&ds, &shuffled, tmp.path().join("e")).unwrap();
    check_disjoint(&d.source, &e.source).unwrap();
}

#[test]
fn zero_images_per_group_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = dataset(5);
    let err = generate_suite(&ds, &SuiteParams::new(1, 0, "synthetic"), tmp.path()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}
