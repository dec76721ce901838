//! Experiment runner: loads or renders a corpus, sweeps color-space
//! configurations, and writes raw CSV rows plus aggregated rankings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, KMeansOptions, SilhouetteForm, DEFAULT_SAMPLE};
use crate::colorspace::Space;
use crate::colorspace::{to_space, ColorSpaceId};
use crate::detect::{build_histogram, color_checker, Bins, QuantizedImage, Template, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::palette;
use crate::raster::{LabelMap, RasterImage};
use crate::scenegen::{self, SceneConfig};
use crate::searchsim::{self, SearchConfig, ViewCache, World, BENCHMARK_STARTS};

pub const SCHEMA_VERSION: u32 = 1;

pub const DETECT_CSV: &str = "detect.csv";
pub const DETECT_JSON: &str = "detect_ranking.json";
pub const CLUSTER_CSV: &str = "cluster.csv";
pub const CLUSTER_JSON: &str = "cluster_ranking.json";
pub const SEARCH_CSV: &str = "search.csv";
pub const SEARCH_JSON: &str = "search_summary.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Full,
}

impl Preset {
    pub fn scene(self) -> SceneConfig {
        match self {
            Preset::Desk => SceneConfig::desk(),
            Preset::Full => SceneConfig::full(),
        }
    }
}

mod space_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        ids: &[ColorSpaceId],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(ids.iter().map(|id| id.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<ColorSpaceId>, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        names
            .iter()
            .map(|n| n.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Everything a run needs. Unset sources fall back to the desk preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory of `<stem>_img.png` / `<stem>_label.png` pairs.
    pub corpus: Option<PathBuf>,
    /// Scene to render when no corpus is given.
    pub scene: Option<SceneConfig>,
    pub preset: Option<Preset>,
    /// Directory of `<abbrev>_template.png` patches. Defaults to references
    /// cut from the scene (rendered, or recorded in a corpus `manifest.json`),
    /// else the color checker.
    pub templates: Option<PathBuf>,
    #[serde(with = "space_list")]
    pub spaces: Vec<ColorSpaceId>,
    pub bins: Vec<Bins>,
    pub tau: f64,
    pub seed: u64,
    pub sample_size: usize,
    pub silhouette_form: SilhouetteForm,
    pub search: SearchConfig,
    /// World JSON for `search`; the seeded benchmark world when unset.
    pub world: Option<PathBuf>,
    /// Start cells `[x, y]`; required with a custom world.
    pub starts: Option<Vec<[usize; 2]>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus: None,
            scene: None,
            preset: None,
            templates: None,
            spaces: ColorSpaceId::sweep(),
            bins: Bins::ALL.to_vec(),
            tau: DEFAULT_TAU,
            seed: 0,
            sample_size: DEFAULT_SAMPLE,
            silhouette_form: SilhouetteForm::Standard,
            search: SearchConfig::default(),
            world: None,
            starts: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.spaces.is_empty() {
            return Err(Error::Config("no color spaces selected".into()));
        }
        if self.bins.is_empty() {
            return Err(Error::Config("no bin sizes selected".into()));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau {} outside [0, 1]", self.tau)));
        }
        if self.sample_size < 2 {
            return Err(Error::Config("sample size must be at least 2".into()));
        }
        if let Some(scene) = &self.scene {
            scene.validate()?;
        }
        self.search.validate()?;
        if self.world.is_some() && self.starts.as_ref().is_none_or(|s| s.is_empty()) {
            return Err(Error::Config(
                "a custom world needs explicit start cells".into(),
            ));
        }
        Ok(())
    }

    /// The scene used when rendering: explicit scene, then preset, then desk.
    pub fn scene_config(&self) -> SceneConfig {
        self.scene
            .clone()
            .unwrap_or_else(|| self.preset.unwrap_or(Preset::Desk).scene())
    }
}

/// Parses a comma-separated selection. A plain name selects both the
/// original and normalized variants, a trailing `'` only the normalized one,
/// and `all` the full sweep. Output is in sweep order.
pub fn parse_space_list(s: &str) -> Result<Vec<ColorSpaceId>> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if tok.eq_ignore_ascii_case("all") {
            out.extend(ColorSpaceId::sweep());
        } else if tok.ends_with('\'') {
            out.push(tok.parse()?);
        } else {
            let space: Space = tok.parse()?;
            out.push(ColorSpaceId::original(space));
            out.push(ColorSpaceId::normalized(space));
        }
    }
    out.sort_by_key(|id| (id.primed, id.space));
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("empty color space list".into()));
    }
    Ok(out)
}

pub fn parse_bins_list(s: &str) -> Result<Vec<Bins>> {
    let mut out = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad bin count `{t}`")))
                .and_then(Bins::new)
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub stem: String,
    pub image: RasterImage,
    pub labels: LabelMap,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
}

const IMG_SUFFIX: &str = "_img.png";
const LABEL_SUFFIX: &str = "_label.png";

impl Corpus {
    /// Loads every `<stem>_img.png` with its `<stem>_label.png`, sorted by stem.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingInput(dir.to_path_buf()));
        }
        let mut images = Vec::new();
        let mut labels = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
            let name = name.to_string_lossy();
            if let Some(stem) = name.strip_suffix(IMG_SUFFIX) {
                images.push(stem.to_string());
            } else if let Some(stem) = name.strip_suffix(LABEL_SUFFIX) {
                labels.push(stem.to_string());
            }
        }
        images.sort();
        labels.sort();
        if images != labels {
            let unpaired: Vec<_> = images
                .iter()
                .filter(|s| !labels.contains(s))
                .chain(labels.iter().filter(|s| !images.contains(s)))
                .cloned()
                .collect();
            return Err(Error::CorpusMismatch(format!(
                "unpaired stems: {}",
                unpaired.join(", ")
            )));
        }
        if images.is_empty() {
            return Err(Error::CorpusMismatch(format!(
                "no image/label pairs in {}",
                dir.display()
            )));
        }
        let items = images
            .par_iter()
            .map(|stem| {
                let image = RasterImage::load_png(&dir.join(format!("{stem}{IMG_SUFFIX}")))?;
                let labels = LabelMap::load_png(&dir.join(format!("{stem}{LABEL_SUFFIX}")))?;
                if (image.width(), image.height()) != labels.dims() {
                    return Err(Error::CorpusMismatch(format!(
                        "{stem}: image and label sizes differ"
                    )));
                }
                Ok(CorpusItem {
                    stem: stem.clone(),
                    image,
                    labels,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { items })
    }

    /// Renders a scene in memory; stems match what `generate_dataset` writes.
    pub fn render(cfg: &SceneConfig) -> Result<Self> {
        let jobs = scenegen::enumerate_configs(cfg)?;
        let items = jobs
            .par_iter()
            .map(|job| {
                let (image, labels) = scenegen::render(cfg, job);
                CorpusItem {
                    stem: format!("{:04}", job.index),
                    image,
                    labels,
                }
            })
            .collect();
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Corpus and templates for a run, resolved from the config.
pub fn resolve_inputs(cfg: &ExperimentConfig) -> Result<(Corpus, Vec<Template>)> {
    cfg.validate()?;
    let corpus = match &cfg.corpus {
        Some(dir) => Corpus::load(dir)?,
        None => Corpus::render(&cfg.scene_config())?,
    };
    Ok((corpus, resolve_templates(cfg)?))
}

/// Explicit template directory, then references from the rendered or
/// recorded scene, then the color checker.
pub fn resolve_templates(cfg: &ExperimentConfig) -> Result<Vec<Template>> {
    if let Some(dir) = &cfg.templates {
        return load_templates(dir);
    }
    match &cfg.corpus {
        None => scenegen::reference_templates(&cfg.scene_config()),
        Some(dir) => {
            let manifest = dir.join(scenegen::MANIFEST_FILE);
            if manifest.exists() {
                let m: scenegen::Manifest = read_json(&manifest)?;
                scenegen::reference_templates(&m.config)
            } else {
                Ok(color_checker())
            }
        }
    }
}

pub fn template_file(class: u8) -> String {
    format!("{}_template.png", palette::abbrev(class))
}

/// Writes each template as a one-row PNG strip.
pub fn save_templates(templates: &[Template], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in templates {
        t.pixels.save_png(&dir.join(template_file(t.color_class)))?;
    }
    Ok(())
}

pub fn load_templates(dir: &Path) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    for c in &palette::WHEEL {
        let path = dir.join(template_file(c.class));
        if path.exists() {
            out.push(Template::new(RasterImage::load_png(&path)?, c.class));
        }
    }
    if out.is_empty() {
        return Err(Error::MissingInput(dir.to_path_buf()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRow {
    pub space: String,
    pub primed: bool,
    pub bins: usize,
    pub tau: f64,
    pub image: String,
    pub class: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub recall: f64,
    pub precision: f64,
    pub fmeasure: f64,
}

impl DetectRow {
    pub fn id(&self) -> Result<ColorSpaceId> {
        Ok(ColorSpaceId::new(self.space.parse()?, self.primed))
    }

    /// Rows whose class is absent from the image carry no recall signal and
    /// are left out of the means.
    pub fn counts_toward_mean(&self) -> bool {
        self.tp + self.fn_ > 0
    }
}

/// One row per (image, space, bins, template class).
pub fn detect_rows(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    templates: &[Template],
) -> Result<Vec<DetectRow>> {
    cfg.validate()?;
    let hists = cfg
        .spaces
        .par_iter()
        .map(|&id| {
            cfg.bins
                .iter()
                .map(|&b| {
                    templates
                        .iter()
                        .map(|t| build_histogram(t, id, b))
                        .collect()
                })
                .collect::<Result<Vec<Vec<_>>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|i| (0..cfg.spaces.len()).map(move |s| (i, s)))
        .collect();
    let chunks = cells
        .par_iter()
        .map(|&(i, s)| {
            let item = &corpus.items[i];
            let id = cfg.spaces[s];
            let plane = to_space(&item.image, id);
            let mut rows = Vec::with_capacity(cfg.bins.len() * templates.len());
            for (b, &bins) in cfg.bins.iter().enumerate() {
                let q = QuantizedImage::new(&plane, bins);
                for (t, tpl) in templates.iter().enumerate() {
                    let sc =
                        q.score_class(&hists[s][b][t], &item.labels, tpl.color_class, cfg.tau)?;
                    rows.push(DetectRow {
                        space: id.space.to_string(),
                        primed: id.primed,
                        bins: bins.get(),
                        tau: cfg.tau,
                        image: item.stem.clone(),
                        class: palette::abbrev(tpl.color_class).to_string(),
                        tp: sc.true_pos,
                        fp: sc.false_pos,
                        fn_: sc.false_neg,
                        recall: sc.recall,
                        precision: sc.precision,
                        fmeasure: sc.fmeasure,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rpf {
    pub recall: f64,
    pub precision: f64,
    pub fmeasure: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectEntry {
    pub space: String,
    pub primed: bool,
    #[serde(flatten)]
    pub mean: Rpf,
    pub per_class: BTreeMap<String, Rpf>,
    /// 1-based position among all configurations by mean F-measure.
    pub rank: usize,
    /// 1-based position among configurations with the same `primed` flag.
    pub rank_in_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub space: String,
    pub primed: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRanking {
    pub schema_version: u32,
    pub tau: f64,
    pub bins: Vec<usize>,
    pub images: usize,
    /// In sweep order.
    pub entries: Vec<DetectEntry>,
    /// Per class: best three original and best three normalized configurations.
    pub top3_original: BTreeMap<String, Vec<TopEntry>>,
    pub top3_normalized: BTreeMap<String, Vec<TopEntry>>,
}

impl DetectRanking {
    pub fn entry(&self, id: ColorSpaceId) -> Option<&DetectEntry> {
        let name = id.space.to_string();
        self.entries
            .iter()
            .find(|e| e.space == name && e.primed == id.primed)
    }

    /// Entries of one group, best first.
    pub fn ranked(&self, primed: bool) -> Vec<&DetectEntry> {
        let mut v: Vec<_> = self.entries.iter().filter(|e| e.primed == primed).collect();
        v.sort_by_key(|e| e.rank_in_group);
        v
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    r: f64,
    p: f64,
    f: f64,
    n: usize,
}

impl Acc {
    fn add(&mut self, row: &DetectRow) {
        self.r += row.recall;
        self.p += row.precision;
        self.f += row.fmeasure;
        self.n += 1;
    }

    fn finish(self) -> Rpf {
        let d = self.n.max(1) as f64;
        Rpf {
            recall: self.r / d,
            precision: self.p / d,
            fmeasure: self.f / d,
            n: self.n,
        }
    }
}

/// Competition ranking order by descending value; ties keep input order.
fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut out = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        out[i] = pos + 1;
    }
    out
}

fn group_ranks(ids: &[ColorSpaceId], values: &[f64]) -> Vec<usize> {
    let mut out = vec![0; ids.len()];
    for primed in [false, true] {
        let members: Vec<usize> = (0..ids.len())
            .filter(|&i| ids[i].primed == primed)
            .collect();
        let vals: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        for (j, r) in ranks(&vals).into_iter().enumerate() {
            out[members[j]] = r;
        }
    }
    out
}

/// Means over rows where the class is present, overall and per class.
pub fn rank_detection(
    cfg: &ExperimentConfig,
    images: usize,
    rows: &[DetectRow],
) -> Result<DetectRanking> {
    let ids = &cfg.spaces;
    let mut overall = vec![Acc::default(); ids.len()];
    let mut per_class: Vec<BTreeMap<String, Acc>> = vec![BTreeMap::new(); ids.len()];
    let index: BTreeMap<ColorSpaceId, usize> =
        ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    for row in rows.iter().filter(|r| r.counts_toward_mean()) {
        let i = *index
            .get(&row.id()?)
            .ok_or_else(|| Error::Invariant(format!("row for unselected space {}", row.space)))?;
        overall[i].add(row);
        per_class[i].entry(row.class.clone()).or_default().add(row);
    }
    let means: Vec<Rpf> = overall.iter().map(|a| a.finish()).collect();
    let f: Vec<f64> = means.iter().map(|m| m.fmeasure).collect();
    let rank = ranks(&f);
    let rank_in_group = group_ranks(ids, &f);
    let entries: Vec<DetectEntry> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| DetectEntry {
            space: id.space.to_string(),
            primed: id.primed,
            mean: means[i],
            per_class: per_class[i]
                .iter()
                .map(|(k, a)| (k.clone(), a.finish()))
                .collect(),
            rank: rank[i],
            rank_in_group: rank_in_group[i],
        })
        .collect();

    let classes: Vec<String> = {
        let mut c: Vec<String> = per_class.iter().flat_map(|m| m.keys().cloned()).collect();
        c.sort();
        c.dedup();
        c
    };
    let top3 = |primed: bool| -> BTreeMap<String, Vec<TopEntry>> {
        classes
            .iter()
            .map(|class| {
                let mut cands: Vec<TopEntry> = entries
                    .iter()
                    .filter(|e| e.primed == primed)
                    .filter_map(|e| {
                        e.per_class.get(class).map(|m| TopEntry {
                            space: e.space.clone(),
                            primed,
                            value: m.fmeasure,
                        })
                    })
                    .collect();
                cands.sort_by(|a, b| b.value.total_cmp(&a.value));
                cands.truncate(3);
                (class.clone(), cands)
            })
            .collect()
    };
    Ok(DetectRanking {
        schema_version: SCHEMA_VERSION,
        tau: cfg.tau,
        bins: cfg.bins.iter().map(|b| b.get()).collect(),
        images,
        top3_original: top3(false),
        top3_normalized: top3(true),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub space: String,
    pub primed: bool,
    pub image: String,
    pub k: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub mean: f64,
    pub single_cluster: bool,
}

pub fn cluster_rows(cfg: &ExperimentConfig, corpus: &Corpus) -> Result<Vec<ClusterRow>> {
    cfg.validate()?;
    let opts = KMeansOptions {
        sample: cfg.sample_size,
        ..KMeansOptions::default()
    };
    let cells: Vec<(usize, usize)> = (0..corpus.len())
        .flat_map(|i| (0..cfg.spaces.len()).map(move |s| (i, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, s)| {
            let item = &corpus.items[i];
            let id = cfg.spaces[s];
            let plane = to_space(&item.image, id);
            let rep = cluster::discriminability_with(
                &plane,
                &item.labels,
                cfg.seed,
                &opts,
                cfg.silhouette_form,
            )?;
            Ok(ClusterRow {
                space: id.space.to_string(),
                primed: id.primed,
                image: item.stem.clone(),
                k: rep.k,
                sample_size: rep.sample_size,
                seed: rep.seed,
                mean: rep.mean,
                single_cluster: rep.single_cluster,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub space: String,
    pub primed: bool,
    pub mean_silhouette: f64,
    /// Images contributing to the mean; flagged single-cluster images are excluded.
    pub images: usize,
    pub excluded: usize,
    pub rank: usize,
    pub rank_in_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRanking {
    pub schema_version: u32,
    pub seed: u64,
    pub sample_size: usize,
    pub entries: Vec<ClusterEntry>,
}

impl ClusterRanking {
    pub fn entry(&self, id: ColorSpaceId) -> Option<&ClusterEntry> {
        let name = id.space.to_string();
        self.entries
            .iter()
            .find(|e| e.space == name && e.primed == id.primed)
    }
}

pub fn rank_clusters(cfg: &ExperimentConfig, rows: &[ClusterRow]) -> Result<ClusterRanking> {
    let ids = &cfg.spaces;
    let mut sums = vec![(0.0f64, 0usize, 0usize); ids.len()];
    for row in rows {
        let id = ColorSpaceId::new(row.space.parse()?, row.primed);
        let i = ids
            .iter()
            .position(|&x| x == id)
            .ok_or_else(|| Error::Invariant(format!("row for unselected space {id}")))?;
        if row.single_cluster {
            sums[i].2 += 1;
        } else {
            sums[i].0 += row.mean;
            sums[i].1 += 1;
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .map(|&(s, n, _)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    let rank = ranks(&means);
    let rank_in_group = group_ranks(ids, &means);
    Ok(ClusterRanking {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        sample_size: cfg.sample_size,
        entries: ids
            .iter()
            .enumerate()
            .map(|(i, id)| ClusterEntry {
                space: id.space.to_string(),
                primed: id.primed,
                mean_silhouette: means[i],
                images: sums[i].1,
                excluded: sums[i].2,
                rank: rank[i],
                rank_in_group: rank_in_group[i],
            })
            .collect(),
    })
}

pub const UNINFORMED: &str = "uninformed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRow {
    pub space: String,
    pub primed: bool,
    pub seed: u64,
    pub start: usize,
    pub steps: usize,
    pub found: bool,
}

/// Seeds x starts for the uninformed baseline first, then for every space.
pub fn search_rows(cfg: &ExperimentConfig) -> Result<Vec<SearchRow>> {
    cfg.validate()?;
    let sc = cfg.search;
    let custom = cfg.world.as_deref().map(World::load).transpose()?;
    let worlds: Vec<(World, ViewCache)> = (0..sc.seeds)
        .into_par_iter()
        .map(|seed| {
            let w = custom.clone().unwrap_or_else(|| World::benchmark(seed));
            let cache = ViewCache::new(&w, &sc);
            (w, cache)
        })
        .collect();
    let starts: Vec<[usize; 2]> = match &cfg.starts {
        Some(s) => s.clone(),
        None => BENCHMARK_STARTS.iter().map(|&(x, y)| [x, y]).collect(),
    };
    let baseline_id = ColorSpaceId::original(Space::C1C2C3);
    let mut arms: Vec<(Option<ColorSpaceId>, SearchConfig)> = vec![(None, sc.uninformed())];
    arms.extend(cfg.spaces.iter().map(|&id| (Some(id), sc)));
    let n_starts = starts.len();
    let cells: Vec<(usize, u64, usize)> = (0..arms.len())
        .flat_map(|a| (0..sc.seeds).flat_map(move |s| (0..n_starts).map(move |st| (a, s, st))))
        .collect();
    cells
        .par_iter()
        .map(|&(a, seed, st)| {
            let (id, params) = arms[a];
            let (world, cache) = &worlds[seed as usize];
            let [x, y] = starts[st];
            if x >= world.width || y >= world.height {
                return Err(Error::Config(format!("start ({x}, {y}) outside the world")));
            }
            let r = searchsim::run_search(
                world,
                cache,
                &params,
                id.unwrap_or(baseline_id),
                world.index(x, y),
                seed,
            )?;
            Ok(SearchRow {
                space: id.map_or_else(|| UNINFORMED.to_string(), |i| i.space.to_string()),
                primed: id.is_some_and(|i| i.primed),
                seed,
                start: st,
                steps: r.steps,
                found: r.found,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub space: String,
    pub primed: bool,
    pub mean_steps: f64,
    pub found_rate: f64,
    pub trials: usize,
    /// `1 - mean_steps / baseline_mean_steps`.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub schema_version: u32,
    pub seeds: u64,
    pub starts: usize,
    pub baseline: SearchEntry,
    pub entries: Vec<SearchEntry>,
}

impl SearchSummary {
    pub fn entry(&self, id: ColorSpaceId) -> Option<&SearchEntry> {
        let name = id.space.to_string();
        self.entries
            .iter()
            .find(|e| e.space == name && e.primed == id.primed)
    }
}

/// Groups rows by `(space, primed)` in first-seen order.
pub fn summarize_search(rows: &[SearchRow]) -> Result<SearchSummary> {
    let mut groups: Vec<((String, bool), Vec<&SearchRow>)> = Vec::new();
    for r in rows {
        let key = (r.space.clone(), r.primed);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mean = |v: &[&SearchRow]| v.iter().map(|r| r.steps as f64).sum::<f64>() / v.len() as f64;
    let (_, base_rows) = groups
        .iter()
        .find(|((s, _), _)| s == UNINFORMED)
        .ok_or_else(|| Error::CorpusMismatch("search rows lack the uninformed baseline".into()))?;
    let base_mean = mean(base_rows);
    let entry = |(space, primed): &(String, bool), v: &[&SearchRow]| {
        let m = mean(v);
        SearchEntry {
            space: space.clone(),
            primed: *primed,
            mean_steps: m,
            found_rate: v.iter().filter(|r| r.found).count() as f64 / v.len() as f64,
            trials: v.len(),
            improvement: if base_mean > 0.0 {
                1.0 - m / base_mean
            } else {
                0.0
            },
        }
    };
    let seeds = rows.iter().map(|r| r.seed).max().map_or(0, |s| s + 1);
    let starts = rows.iter().map(|r| r.start).max().map_or(0, |s| s + 1);
    Ok(SearchSummary {
        schema_version: SCHEMA_VERSION,
        seeds,
        starts,
        baseline: entry(&(UNINFORMED.to_string(), false), base_rows),
        entries: groups
            .iter()
            .filter(|((s, _), _)| s != UNINFORMED)
            .map(|(k, v)| entry(k, v))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub space: String,
    pub primed: bool,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_fmeasure: Option<f64>,
    pub detect_rank: Option<usize>,
    pub mean_silhouette: Option<f64>,
    pub cluster_rank: Option<usize>,
    pub mean_steps: Option<f64>,
    pub search_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub detection: Option<DetectRanking>,
    pub clustering: Option<ClusterRanking>,
    pub search: Option<SearchSummary>,
    pub entries: Vec<ReportEntry>,
}

/// Flat, plot-ready row of `report.csv`; empty cells where a part is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub space: String,
    pub primed: bool,
    pub mean_recall: Option<f64>,
    pub mean_precision: Option<f64>,
    pub mean_fmeasure: Option<f64>,
    pub detect_rank: Option<usize>,
    pub mean_silhouette: Option<f64>,
    pub cluster_rank: Option<usize>,
    pub mean_steps: Option<f64>,
    pub search_improvement: Option<f64>,
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::MissingInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Merges whichever of the three summaries exist in `dir`; parts that were
/// not run are `null`.
pub fn build_report(dir: &Path) -> Result<Report> {
    let detection: Option<DetectRanking> = optional(read_json(&dir.join(DETECT_JSON)))?;
    let clustering: Option<ClusterRanking> = optional(read_json(&dir.join(CLUSTER_JSON)))?;
    let search: Option<SearchSummary> = optional(read_json(&dir.join(SEARCH_JSON)))?;
    if detection.is_none() && clustering.is_none() && search.is_none() {
        return Err(Error::MissingInput(dir.to_path_buf()));
    }
    let mut ids: Vec<ColorSpaceId> = Vec::new();
    let mut add = |space: &str, primed: bool| -> Result<()> {
        let id = ColorSpaceId::new(space.parse()?, primed);
        if !ids.contains(&id) {
            ids.push(id);
        }
        Ok(())
    };
    for e in detection.iter().flat_map(|d| &d.entries) {
        add(&e.space, e.primed)?;
    }
    for e in clustering.iter().flat_map(|c| &c.entries) {
        add(&e.space, e.primed)?;
    }
    for e in search.iter().flat_map(|s| &s.entries) {
        add(&e.space, e.primed)?;
    }
    ids.sort_by_key(|id| (id.primed, id.space));
    let entries = ids
        .iter()
        .map(|&id| {
            let d = detection.as_ref().and_then(|d| d.entry(id));
            let c = clustering.as_ref().and_then(|c| c.entry(id));
            let s = search.as_ref().and_then(|s| s.entry(id));
            ReportEntry {
                space: id.space.to_string(),
                primed: id.primed,
                mean_recall: d.map(|e| e.mean.recall),
                mean_precision: d.map(|e| e.mean.precision),
                mean_fmeasure: d.map(|e| e.mean.fmeasure),
                detect_rank: d.map(|e| e.rank),
                mean_silhouette: c.map(|e| e.mean_silhouette),
                cluster_rank: c.map(|e| e.rank),
                mean_steps: s.map(|e| e.mean_steps),
                search_improvement: s.map(|e| e.improvement),
            }
        })
        .collect();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        detection,
        clustering,
        search,
        entries,
    })
}

pub fn report_rows(report: &Report) -> Vec<ReportRow> {
    report
        .entries
        .iter()
        .map(|e| ReportRow {
            schema_version: report.schema_version,
            space: e.space.clone(),
            primed: e.primed,
            mean_recall: e.mean_recall,
            mean_precision: e.mean_precision,
            mean_fmeasure: e.mean_fmeasure,
            detect_rank: e.detect_rank,
            mean_silhouette: e.mean_silhouette,
            cluster_rank: e.cluster_rank,
            mean_steps: e.mean_steps,
            search_improvement: e.search_improvement,
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::Space;

    #[test]
    fn ranks_break_ties_by_position() {
        assert_eq!(ranks(&[0.5, 0.9, 0.5, 0.1]), vec![2, 1, 3, 4]);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            spaces: vec![
                ColorSpaceId::normalized(Space::C1C2C3),
                ColorSpaceId::original(Space::Rg),
            ],
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"C1C2C3'\""));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn empty_selection_rejected() {
        let cfg = ExperimentConfig {
            spaces: vec![],
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn space_lists() {
        let v = parse_space_list("rg, C1C2C3'").unwrap();
        assert_eq!(
            v,
            vec![
                ColorSpaceId::original(Space::Rg),
                ColorSpaceId::normalized(Space::Rg),
                ColorSpaceId::normalized(Space::C1C2C3),
            ]
        );
        assert_eq!(parse_space_list("all").unwrap().len(), 40);
        assert!(parse_space_list("teal").is_err());
        assert_eq!(
            parse_bins_list("32,16").unwrap(),
            vec![Bins::ALL[0], Bins::ALL[1]]
        );
        assert!(parse_bins_list("20").is_err());
    }

    #[test]
    fn report_needs_some_input() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_report(dir.path()),
            Err(Error::MissingInput(_))
        ));
    }

    #[test]
    fn missing_corpus_dir() {
        assert!(matches!(
            Corpus::load(Path::new("/nonexistent/corpus")),
            Err(Error::MissingInput(_))
        ));
    }
}
