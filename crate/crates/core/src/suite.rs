//! The 69 benchmark groups, suite generation and verification.
//!
//! Canonical group order:
//!
//! | ids    | family | grid (outer × inner), both-zero cell removed |
//! |--------|--------|-----------------------------------------------|
//! | 1      | clean  | –                                             |
//! | 2–16   | SP→GA  | SP {0, .1, .15, .2} × GA {0, .1, .15, .2}      |
//! | 17–31  | GA→SP  | GA {0, .1, .15, .2} × SP {0, .1, .15, .2}      |
//! | 32–50  | SP→RO  | SP {0, .1, .15, .2} × RO {−60, −30, 0, 30, 60} |
//! | 51–69  | RO→SP  | RO {−60, −30, 0, 30, 60} × SP {0, .1, .15, .2} |
//!
//! Zero-severity factors are dropped from the chain, so the zero rows of a
//! grid are single-factor groups. The same effective chain can occur in
//! several families; each occurrence is a distinct group.
//!
//! On disk a suite is `<out>/manifest.json` plus one directory per group,
//! `<out>/<id>_<name>/`, holding `<k>.png` for each image index `k` and a
//! `labels.txt` with one integer label per line. A group digest is the
//! lowercase hex SHA-256 of its PNG files concatenated in index order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::perturb::{apply_chain_seeded, PerturbationChain, PerturbationStep};
use crate::raster::{decode_png, encode_png, LabeledDataset, RasterImage, Sampling, SeedSpec};
use crate::FORMAT_VERSION;

pub const GROUP_COUNT: usize = 69;
pub const CLEAN_GROUP_ID: u32 = 1;

/// Noise severities, including the degenerate zero level.
pub const NOISE_LEVELS: [f64; 4] = [0.0, 0.1, 0.15, 0.2];
/// Rotation angles in degrees, positive clockwise.
pub const ROTATION_ANGLES: [f64; 5] = [-60.0, -30.0, 0.0, 30.0, 60.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "CLEAN")]
    Clean,
    #[serde(rename = "SP_GA")]
    SpGa,
    #[serde(rename = "GA_SP")]
    GaSp,
    #[serde(rename = "SP_RO")]
    SpRo,
    #[serde(rename = "RO_SP")]
    RoSp,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Clean, Family::SpGa, Family::GaSp, Family::SpRo, Family::RoSp];

    pub fn expected_size(self) -> usize {
        match self {
            Family::Clean => 1,
            Family::SpGa | Family::GaSp => 15,
            Family::SpRo | Family::RoSp => 19,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Clean => "CLEAN",
            Family::SpGa => "SP_GA",
            Family::GaSp => "GA_SP",
            Family::SpRo => "SP_RO",
            Family::RoSp => "RO_SP",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group_id: u32,
    pub name: String,
    pub family: Family,
    pub chain: PerturbationChain,
}

impl GroupSpec {
    pub fn dir_name(&self) -> String {
        format!("{}_{}", self.group_id, self.name)
    }
}

fn sp(density: f64) -> Option<PerturbationStep> {
    (density != 0.0).then_some(PerturbationStep::SaltPepper { density })
}

fn ga(variance: f64) -> Option<PerturbationStep> {
    (variance != 0.0).then_some(PerturbationStep::Gaussian { variance })
}

fn ro(degrees: f64) -> Option<PerturbationStep> {
    (degrees != 0.0).then_some(PerturbationStep::Rotation { degrees })
}

/// The canonical 69 groups in id order.
pub fn enumerate_groups() -> Vec<GroupSpec> {
    let mut chains: Vec<(Family, Vec<PerturbationStep>)> = vec![(Family::Clean, vec![])];
    let mut grid = |family: Family, cells: Vec<(Option<PerturbationStep>, Option<PerturbationStep>)>| {
        for (first, second) in cells {
            let steps: Vec<_> = first.into_iter().chain(second).collect();
            if !steps.is_empty() {
                chains.push((family, steps));
            }
        }
    };
    let noise = NOISE_LEVELS;
    let angles = ROTATION_ANGLES;
    grid(Family::SpGa, noise.iter().flat_map(|&a| noise.iter().map(move |&b| (sp(a), ga(b)))).collect());
    grid(Family::GaSp, noise.iter().flat_map(|&a| noise.iter().map(move |&b| (ga(a), sp(b)))).collect());
    grid(Family::SpRo, noise.iter().flat_map(|&a| angles.iter().map(move |&b| (sp(a), ro(b)))).collect());
    grid(Family::RoSp, angles.iter().flat_map(|&a| noise.iter().map(move |&b| (ro(a), sp(b)))).collect());

    chains
        .into_iter()
        .enumerate()
        .map(|(i, (family, steps))| {
            let chain = PerturbationChain::new(steps).expect("canonical severities are valid");
            GroupSpec {
                group_id: i as u32 + 1,
                name: chain.name(),
                family,
                chain,
            }
        })
        .collect()
}

/// Looks up a canonical group by name, preferring the lowest id when the
/// same effective chain occurs in several families.
pub fn find_group(name: &str) -> Option<GroupSpec> {
    enumerate_groups().into_iter().find(|g| g.name == name)
}

/// Mapping from canonical group names to an external numbering scheme.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupAliases(pub BTreeMap<String, u32>);

impl GroupAliases {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let aliases: GroupAliases = serde_json::from_str(&text)?;
        for name in aliases.0.keys() {
            if find_group(name).is_none() {
                return Err(Error::structure(format!("alias for unknown group {name:?}")));
            }
        }
        Ok(aliases)
    }

    pub fn external_id(&self, name: &str) -> Option<u32> {
        self.0.get(name).copied()
    }

    pub fn canonical_name(&self, external_id: u32) -> Option<&str> {
        self.0
            .iter()
            .find(|(_, &id)| id == external_id)
            .map(|(n, _)| n.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    /// Free-form dataset identifier, e.g. a file path or `synthetic:...`.
    pub dataset: String,
    pub dataset_len: usize,
    pub images_per_group: usize,
    pub sampling: Sampling,
    /// Dataset indices of the source images, in group image order.
    pub indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    #[serde(flatten)]
    pub spec: GroupSpec,
    pub digest: String,
    pub labels_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub spec_version: String,
    pub master_seed: u64,
    pub source: SourceInfo,
    pub groups: Vec<GroupRecord>,
    /// Resolved configuration of the command that produced the suite.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

impl SuiteManifest {
    /// Checks the version tag and that the groups are exactly the canonical 69.
    pub fn validate(&self) -> Result<()> {
        if self.spec_version != FORMAT_VERSION {
            return Err(Error::Version {
                expected: FORMAT_VERSION.into(),
                found: self.spec_version.clone(),
            });
        }
        if self.groups.len() != GROUP_COUNT {
            return Err(Error::structure(format!(
                "manifest lists {} groups, expected {GROUP_COUNT}",
                self.groups.len()
            )));
        }
        let mut sizes: BTreeMap<Family, usize> = BTreeMap::new();
        let mut names: HashSet<(Family, &str)> = HashSet::new();
        for g in &self.groups {
            *sizes.entry(g.spec.family).or_default() += 1;
            if !names.insert((g.spec.family, g.spec.name.as_str())) {
                return Err(Error::structure(format!(
                    "duplicate group name {} in family {}",
                    g.spec.name, g.spec.family
                )));
            }
            if g.spec.chain.name() != g.spec.name {
                return Err(Error::structure(format!(
                    "group {} named {:?} but its chain is {}",
                    g.spec.group_id, g.spec.name, g.spec.chain
                )));
            }
        }
        for f in Family::ALL {
            let n = sizes.get(&f).copied().unwrap_or(0);
            if n != f.expected_size() {
                return Err(Error::structure(format!(
                    "family {f} has {n} groups, expected {}",
                    f.expected_size()
                )));
            }
        }
        let canonical = enumerate_groups();
        for (g, c) in self.groups.iter().zip(&canonical) {
            if g.spec != *c {
                return Err(Error::structure(format!(
                    "group {} ({}) does not match canonical group {} ({})",
                    g.spec.group_id, g.spec.name, c.group_id, c.name
                )));
            }
        }
        if self.source.indices.len() != self.source.images_per_group {
            return Err(Error::structure("source index count differs from images_per_group"));
        }
        Ok(())
    }

    pub fn group(&self, group_id: u32) -> Option<&GroupRecord> {
        self.groups.iter().find(|g| g.spec.group_id == group_id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<SuiteManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: SuiteManifest = serde_json::from_str(&text)?;
    manifest.validate()?;
    Ok(manifest)
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LABELS_FILE: &str = "labels.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub master_seed: u64,
    pub images_per_group: usize,
    pub sampling: Sampling,
    pub dataset_id: String,
    /// Generate groups on the rayon pool; output bytes are identical either way.
    #[serde(skip)]
    pub parallel: bool,
}

impl SuiteParams {
    pub fn new(master_seed: u64, images_per_group: usize, dataset_id: impl Into<String>) -> Self {
        SuiteParams {
            master_seed,
            images_per_group,
            sampling: Sampling::default(),
            dataset_id: dataset_id.into(),
            parallel: true,
        }
    }
}

fn labels_text(labels: &[u32]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

fn sha256_hex<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for c in chunks {
        h.update(c);
    }
    hex::encode(h.finalize())
}

/// Corrupted images of one group, in source order.
pub fn corrupt_group(source: &[RasterImage], group: &GroupSpec, seed: &SeedSpec) -> Result<Vec<RasterImage>> {
    source
        .iter()
        .enumerate()
        .map(|(k, img)| apply_chain_seeded(img, &group.chain, seed, group.group_id as u64, k as u64))
        .collect()
}

fn write_group(
    out_dir: &Path,
    group: &GroupSpec,
    source: &LabeledDataset,
    seed: &SeedSpec,
) -> Result<GroupRecord> {
    let wrap = |e: Error| Error::Group {
        group_id: group.group_id,
        name: group.name.clone(),
        source: Box::new(e),
    };
    let dir = out_dir.join(group.dir_name());
    fs::create_dir_all(&dir).map_err(|e| wrap(Error::io(&dir, e)))?;
    let images = corrupt_group(source.images(), group, seed).map_err(wrap)?;
    let mut hasher = Sha256::new();
    for (k, img) in images.iter().enumerate() {
        let bytes = encode_png(img).map_err(wrap)?;
        hasher.update(&bytes);
        let path = dir.join(format!("{k}.png"));
        fs::write(&path, &bytes).map_err(|e| wrap(Error::io(&path, e)))?;
    }
    let labels = labels_text(source.labels());
    let path = dir.join(LABELS_FILE);
    fs::write(&path, &labels).map_err(|e| wrap(Error::io(&path, e)))?;
    Ok(GroupRecord {
        spec: group.clone(),
        digest: hex::encode(hasher.finalize()),
        labels_digest: sha256_hex([labels.as_bytes()]),
    })
}

/// Writes all 69 groups of `params.images_per_group` images drawn from
/// `dataset`, then `manifest.json`. The dataset itself is not modified.
pub fn generate_suite(dataset: &LabeledDataset, params: &SuiteParams, out_dir: impl AsRef<Path>) -> Result<SuiteManifest> {
    let out_dir = out_dir.as_ref();
    if params.images_per_group == 0 {
        return Err(Error::domain("images_per_group must be at least 1"));
    }
    let seed = SeedSpec::new(params.master_seed);
    let indices = dataset.sample_indices(params.sampling, params.images_per_group, &seed)?;
    let source = dataset.select(&indices)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let groups = enumerate_groups();
    let records: Vec<GroupRecord> = if params.parallel {
        groups
            .par_iter()
            .map(|g| write_group(out_dir, g, &source, &seed))
            .collect::<Result<_>>()?
    } else {
        groups
            .iter()
            .map(|g| write_group(out_dir, g, &source, &seed))
            .collect::<Result<_>>()?
    };

    let manifest = SuiteManifest {
        spec_version: FORMAT_VERSION.to_string(),
        master_seed: params.master_seed,
        source: SourceInfo {
            dataset: params.dataset_id.clone(),
            dataset_len: dataset.len(),
            images_per_group: params.images_per_group,
            sampling: params.sampling,
            indices,
        },
        groups: records,
        config: serde_json::Value::Null,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn read_labels(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::format(format!("{}:{}: bad label {l:?}", path.display(), i + 1)))
        })
        .collect()
}

/// Images and labels of one group directory.
pub fn read_group_dir(dir: impl AsRef<Path>) -> Result<(Vec<RasterImage>, Vec<u32>)> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::structure(format!("missing group directory {}", dir.display())));
    }
    let labels = read_labels(&dir.join(LABELS_FILE))?;
    let images = (0..labels.len())
        .map(|k| {
            let p = dir.join(format!("{k}.png"));
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            decode_png(&bytes)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((images, labels))
}

pub fn group_dir(suite_dir: impl AsRef<Path>, group: &GroupSpec) -> PathBuf {
    suite_dir.as_ref().join(group.dir_name())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestMismatch {
    pub group_id: u32,
    pub name: String,
    pub expected: String,
    pub actual: String,
    /// `images` or `labels`.
    pub payload: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub groups_checked: usize,
    pub mismatches: Vec<DigestMismatch>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Re-hashes every group payload under `dir` against `manifest`.
pub fn verify_suite(manifest: &SuiteManifest, dir: impl AsRef<Path>) -> Result<VerifyReport> {
    let dir = dir.as_ref();
    let n = manifest.source.images_per_group;
    let mut report = VerifyReport::default();
    for g in &manifest.groups {
        let gdir = group_dir(dir, &g.spec);
        if !gdir.is_dir() {
            return Err(Error::structure(format!("missing group directory {}", gdir.display())));
        }
        let mut hasher = Sha256::new();
        for k in 0..n {
            let p = gdir.join(format!("{k}.png"));
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            hasher.update(&bytes);
        }
        let actual = hex::encode(hasher.finalize());
        let labels_path = gdir.join(LABELS_FILE);
        let labels = fs::read(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
        let labels_actual = sha256_hex([labels.as_slice()]);
        for (payload, expected, actual) in [
            ("images", &g.digest, actual),
            ("labels", &g.labels_digest, labels_actual),
        ] {
            if *expected != actual {
                report.mismatches.push(DigestMismatch {
                    group_id: g.spec.group_id,
                    name: g.spec.name.clone(),
                    expected: expected.clone(),
                    actual,
                    payload: payload.into(),
                });
            }
        }
        report.groups_checked += 1;
    }
    Ok(report)
}

/// Fails when two manifests drawn from the same dataset share source images.
pub fn check_disjoint(a: &SourceInfo, b: &SourceInfo) -> Result<()> {
    if a.dataset != b.dataset {
        return Ok(());
    }
    let left: BTreeSet<usize> = a.indices.iter().copied().collect();
    let shared: Vec<usize> = b.indices.iter().copied().filter(|i| left.contains(i)).collect();
    if shared.is_empty() {
        Ok(())
    } else {
        Err(Error::structure(format!(
            "{} source images shared between sets drawn from {}, first index {}",
            shared.len(),
            a.dataset,
            shared[0]
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{synth_dataset, SynthSpec};

    /// Independent enumeration: brute-force every grid cell, drop both-zero.
    fn brute_force_family_sizes() -> [usize; 5] {
        let noise = [0.0, 0.1, 0.15, 0.2];
        let angles = [-60.0, -30.0, 0.0, 30.0, 60.0];
        let mut sg = 0;
        for a in noise {
            for b in noise {
                if a != 0.0 || b != 0.0 {
                    sg += 1;
                }
            }
        }
        let mut sr = 0;
        for a in noise {
            for b in angles {
                if a != 0.0 || b != 0.0 {
                    sr += 1;
                }
            }
        }
        [1, sg, sg, sr, sr]
    }

    #[test]
    fn sixty_nine_groups_with_expected_family_sizes() {
        let groups = enumerate_groups();
        assert_eq!(groups.len(), 69);
        let sizes: Vec<usize> = Family::ALL
            .iter()
            .map(|f| groups.iter().filter(|g| g.family == *f).count())
            .collect();
        assert_eq!(sizes, brute_force_family_sizes().to_vec());
        assert_eq!(sizes, vec![1, 15, 15, 19, 19]);
        for (i, g) in groups.iter().enumerate() {
            assert_eq!(g.group_id as usize, i + 1);
            assert_eq!(g.name, g.chain.name());
        }
    }

    #[test]
    fn anchored_ids() {
        let g = enumerate_groups();
        assert_eq!(g[0].name, "clean");
        assert!(g[0].chain.is_empty());
        assert_eq!(g[4].name, "SP0.1");
        assert_eq!(g[5].name, "SP0.1GA0.1");
        assert_eq!(g[1].name, "GA0.1");
        assert_eq!(g[16].name, "SP0.1");
        assert_eq!(g[16].family, Family::GaSp);
        assert_eq!(g[31].name, "RL60");
        assert_eq!(g[50].name, "RL60");
        assert_eq!(g[51].name, "RL60SP0.1");
        assert_eq!(g[68].name, "RR60SP0.2");
    }

    #[test]
    fn only_the_clean_group_has_an_empty_chain() {
        for g in enumerate_groups() {
            assert_eq!(g.group_id == 1, g.chain.is_empty());
            assert_eq!(g.group_id == 1, g.name == "clean");
            assert!(g.chain.len() <= 2);
            for s in g.chain.steps() {
                match *s {
                    PerturbationStep::SaltPepper { density: v } | PerturbationStep::Gaussian { variance: v } => {
                        assert!([0.1, 0.15, 0.2].contains(&v))
                    }
                    PerturbationStep::Rotation { degrees } => {
                        assert!([-60.0, -30.0, 30.0, 60.0].contains(&degrees))
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_is_constant() {
        assert_eq!(enumerate_groups(), enumerate_groups());
    }

    #[test]
    fn aliases_resolve_both_ways() {
        let mut m = BTreeMap::new();
        m.insert("GA0.1".to_string(), 24);
        let a = GroupAliases(m);
        assert_eq!(a.external_id("GA0.1"), Some(24));
        assert_eq!(a.canonical_name(24), Some("GA0.1"));
        assert_eq!(a.external_id("RR30"), None);
    }

    #[test]
    fn disjointness() {
        let mk = |ds: &str, idx: Vec<usize>| SourceInfo {
            dataset: ds.into(),
            dataset_len: 100,
            images_per_group: idx.len(),
            sampling: Sampling::default(),
            indices: idx,
        };
        assert!(check_disjoint(&mk("a", vec![0, 1]), &mk("a", vec![2, 3])).is_ok());
        assert!(check_disjoint(&mk("a", vec![0, 1]), &mk("a", vec![1, 3])).is_err());
        assert!(check_disjoint(&mk("a", vec![0, 1]), &mk("b", vec![0, 1])).is_ok());
    }

    #[test]
    fn insufficient_images_is_an_error() {
        let ds = synth_dataset(&SynthSpec { side: 8, ..SynthSpec::default() }, 5, &SeedSpec::new(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(generate_suite(&ds, &SuiteParams::new(1, 6, "synthetic"), dir.path()).is_err());
    }
}
