//! Plan expansion, parallel corpus generation, manifests and integrity checks.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use rfmix_core::rng::derive_seed;
use rfmix_core::{IqBuffer, Rng, Standard};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::iq::{self, FileEntry};
use crate::scenario::{run_scenario, GenerationStat, ScenarioMetrics, ScenarioSpec};

pub const FORMAT_VERSION: &str = "1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const THROUGHPUT_FILE: &str = "throughput.json";

/// Closed interval a value is drawn uniformly from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    fn validate(&self, what: &str) -> Result<()> {
        if !(self.0.is_finite() && self.1.is_finite() && self.0 <= self.1) {
            return Err(HarnessError::validation(format!(
                "{what} must be [lo, hi] with lo <= hi, got [{}, {}]",
                self.0, self.1
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.uniform_range(self.0, self.1)
        }
    }
}

/// Per-sample variation applied on top of a template. Power is added to
/// each source's configured level; frequency offsets and Doppler replace
/// the configured values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Randomization {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_db: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_offset_hz: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_snr_db: Option<Range>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doppler_hz: Option<Range>,
}

impl Randomization {
    fn validate(&self) -> Result<()> {
        for (what, r) in [
            ("power_db", self.power_db),
            ("freq_offset_hz", self.freq_offset_hz),
            ("noise_snr_db", self.noise_snr_db),
            ("doppler_hz", self.doppler_hz),
        ] {
            if let Some(r) = r {
                r.validate(what)?;
            }
        }
        Ok(())
    }

    fn apply(&self, spec: &mut ScenarioSpec, rng: &mut Rng) {
        for src in &mut spec.sources {
            if let Some(r) = self.power_db {
                src.placement.power_db += r.draw(rng);
            }
            if let Some(r) = self.freq_offset_hz {
                src.placement.freq_offset_hz = r.draw(rng);
            }
            if let (Some(r), Some(f)) = (self.doppler_hz, src.fading.as_mut()) {
                f.doppler_hz = r.draw(rng);
            }
        }
        if let Some(r) = self.noise_snr_db {
            spec.noise_snr_db = Some(r.draw(rng));
        }
    }
}

/// `count` samples built from `scenario`, whose id prefixes every sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub count: usize,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub randomize: Randomization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    pub master_seed: u64,
    pub templates: Vec<Template>,
}

impl Plan {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(HarnessError::validation("plan has no templates"));
        }
        let mut names = HashSet::new();
        for t in &self.templates {
            if !names.insert(t.scenario.id.as_str()) {
                return Err(HarnessError::validation(format!(
                    "template id {:?} appears twice",
                    t.scenario.id
                )));
            }
            if t.count == 0 {
                return Err(HarnessError::validation(format!(
                    "template {:?} has count 0",
                    t.scenario.id
                )));
            }
            t.scenario.validate()?;
            t.randomize.validate()?;
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.templates.iter().map(|t| t.count).sum()
    }

    /// Every concrete sample spec. Sample `g` (counting across templates)
    /// gets seed `derive_seed(master_seed, g)`, so any subset can be
    /// regenerated on its own.
    pub fn expand(&self) -> Result<Vec<(String, ScenarioSpec)>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.total());
        let mut g = 0u64;
        for t in &self.templates {
            for k in 0..t.count {
                let seed = derive_seed(self.master_seed, g);
                let mut spec = t.scenario.clone();
                spec.id = format!("{}-{k:05}", t.scenario.id);
                spec.seed = seed;
                t.randomize.apply(&mut spec, &mut Rng::new(seed).fork(1));
                out.push((t.scenario.id.clone(), spec));
                g += 1;
            }
        }
        Ok(out)
    }

    pub fn hash(&self) -> String {
        iq::sha256_hex(&serde_json::to_vec(self).expect("plan serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub template: String,
    pub seed: u64,
    pub standards: Vec<Standard>,
    pub spec: ScenarioSpec,
    /// One file per receive antenna.
    pub mixture: Vec<FileEntry>,
    pub components: Vec<FileEntry>,
    pub metrics: ScenarioMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    /// Digest of the plan that produced the corpus.
    pub config_hash: String,
    pub samples: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }

    /// Digest of the manifest as written to disk.
    pub fn hash(&self) -> String {
        iq::sha256_hex(&self.to_bytes())
    }

    pub fn entry(&self, id: &str) -> Result<&ManifestEntry> {
        self.samples
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| HarnessError::NotFound(id.to_string()))
    }

    pub fn count_by_standard(&self) -> BTreeMap<Standard, usize> {
        let mut m = BTreeMap::new();
        for e in &self.samples {
            for s in &e.standards {
                *m.entry(*s).or_default() += 1;
            }
        }
        m
    }
}

/// Generation speed for one standard. `realtime_multiple` is seconds of
/// signal produced per second of wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub standard: Standard,
    pub n_sources: usize,
    pub n_samples: usize,
    pub signal_s: f64,
    pub wall_s: f64,
    pub samples_per_s: f64,
    pub realtime_multiple: f64,
}

impl ThroughputRow {
    pub fn from_stats<'a>(standard: Standard, stats: impl IntoIterator<Item = &'a GenerationStat>) -> Self {
        let mut row = ThroughputRow {
            standard,
            n_sources: 0,
            n_samples: 0,
            signal_s: 0.0,
            wall_s: 0.0,
            samples_per_s: 0.0,
            realtime_multiple: 0.0,
        };
        for s in stats.into_iter().filter(|s| s.standard == standard) {
            row.n_sources += 1;
            row.n_samples += s.n_samples;
            row.signal_s += s.signal_s;
            row.wall_s += s.wall_s;
        }
        if row.wall_s > 0.0 {
            row.samples_per_s = row.n_samples as f64 / row.wall_s;
            row.realtime_multiple = row.signal_s / row.wall_s;
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub standards: Vec<ThroughputRow>,
    pub n_dataset_samples: usize,
    pub total_wall_s: f64,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| HarnessError::json(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut v = serde_json::to_vec_pretty(value).expect("value serializes");
    v.push(b'\n');
    fs::write(path, v).map_err(|e| HarnessError::io(path, e))
}

/// Runs one spec and writes its files under `root/samples/<id>/`.
pub fn write_sample(root: &Path, template: &str, spec: &ScenarioSpec) -> Result<(ManifestEntry, Vec<GenerationStat>)> {
    let out = run_scenario(spec)?;
    let dir = format!("samples/{}", spec.id);
    let mixture = out
        .observations
        .iter()
        .enumerate()
        .map(|(r, b)| iq::write(root, &format!("{dir}/mixture_rx{r}.iq"), b))
        .collect::<Result<Vec<_>>>()?;
    let components = out
        .components
        .iter()
        .enumerate()
        .map(|(i, b)| iq::write(root, &format!("{dir}/source{i}.iq"), b))
        .collect::<Result<Vec<_>>>()?;
    let entry = ManifestEntry {
        id: spec.id.clone(),
        template: template.to_string(),
        seed: spec.seed,
        standards: spec.sources.iter().map(|s| s.standard()).collect(),
        spec: spec.clone(),
        mixture,
        components,
        metrics: out.metrics,
    };
    Ok((entry, out.generation))
}

/// Generates every sample of `plan` in parallel, then writes the manifest
/// and a separate throughput report (timings vary run to run, so they stay
/// out of the manifest).
pub fn generate_dataset(plan: &Plan, out_dir: &Path) -> Result<(DatasetManifest, ThroughputReport)> {
    let specs = plan.expand()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let t0 = Instant::now();
    let results = specs
        .par_iter()
        .map(|(template, spec)| write_sample(out_dir, template, spec))
        .collect::<Result<Vec<_>>>()?;
    let total_wall_s = t0.elapsed().as_secs_f64();

    let stats: Vec<GenerationStat> = results.iter().flat_map(|(_, g)| g.iter().copied()).collect();
    let standards = Standard::ALL
        .into_iter()
        .filter(|s| stats.iter().any(|g| g.standard == *s))
        .map(|s| ThroughputRow::from_stats(s, &stats))
        .collect();
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION.to_string(),
        config_hash: plan.hash(),
        samples: results.into_iter().map(|(e, _)| e).collect(),
    };
    let report = ThroughputReport {
        standards,
        n_dataset_samples: manifest.samples.len(),
        total_wall_s,
    };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_bytes()).map_err(|e| HarnessError::io(&path, e))?;
    write_json(&out_dir.join(THROUGHPUT_FILE), &report)?;
    Ok((manifest, report))
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = read_json(path)?;
    if m.format_version != FORMAT_VERSION {
        return Err(HarnessError::validation(format!(
            "unsupported manifest format_version {:?}",
            m.format_version
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub observations: Vec<IqBuffer>,
    pub components: Vec<IqBuffer>,
    pub spec: ScenarioSpec,
}

impl Sample {
    pub fn mixture(&self) -> &IqBuffer {
        &self.observations[0]
    }
}

/// Loads one sample, checking every file against its recorded digest.
pub fn read_sample(manifest: &DatasetManifest, root: &Path, id: &str) -> Result<Sample> {
    let e = manifest.entry(id)?;
    let load = |files: &[FileEntry]| files.iter().map(|f| iq::read(root, f)).collect::<Result<Vec<_>>>();
    Ok(Sample {
        observations: load(&e.mixture)?,
        components: load(&e.components)?,
        spec: e.spec.clone(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n_samples: usize,
    pub n_files: usize,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks that every referenced file exists, matches its digest and holds
/// the declared number of samples, and that sample ids are unique.
pub fn verify(manifest: &DatasetManifest, root: &Path) -> VerifyReport {
    let mut report = VerifyReport {
        n_samples: manifest.samples.len(),
        ..Default::default()
    };
    let mut ids = HashSet::new();
    for e in &manifest.samples {
        if !ids.insert(e.id.as_str()) {
            report.problems.push(format!("duplicate sample id {:?}", e.id));
        }
        if e.mixture.is_empty() || e.components.len() != e.spec.sources.len() {
            report
                .problems
                .push(format!("{}: file list does not match its scenario", e.id));
        }
        for f in e.mixture.iter().chain(&e.components) {
            report.n_files += 1;
            if let Err(err) = iq::check(root, f) {
                report.problems.push(err.to_string());
            }
        }
    }
    report
}
