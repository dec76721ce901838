//! Histogram backprojection and detection scoring.
//!
//! A template is converted into the target space, each channel is mapped to
//! `[0, 1]` through [`channel_range`] and quantized into `B` bins. The ratio
//! histogram divides every count by the modal count, so backprojected values
//! are in `[0, 1]` and a threshold has the same meaning at every bin size.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::colorspace::{convert_rgb8, range_of, to_space, ChannelRange, ColorSpaceId, PlaneImage};
use crate::error::{Error, Result};
use crate::palette::{CLASS_COUNT, WHEEL};
use crate::raster::{save_gray, LabelMap, RasterImage};

pub const DEFAULT_TAU: f64 = 0.5;

/// Bins per channel; one of 16, 32, 64 or 128.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Bins(usize);

impl Bins {
    pub const ALL: [Bins; 4] = [Bins(16), Bins(32), Bins(64), Bins(128)];

    pub fn new(n: usize) -> Result<Self> {
        match n {
            16 | 32 | 64 | 128 => Ok(Bins(n)),
            _ => Err(Error::InvalidBins(n)),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Bins {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Bins::new(n)
    }
}

impl From<Bins> for usize {
    fn from(b: Bins) -> usize {
        b.0
    }
}

/// Flattened bin index `(i0 * B + i1) * B + i2` of a converted pixel.
#[inline]
pub fn bin_index(range: &ChannelRange, bins: Bins, v: [f64; 3]) -> u32 {
    let b = bins.0;
    let q = |c: usize| -> usize { ((range.unit(c, v[c]) * b as f64) as usize).min(b - 1) };
    ((q(0) * b + q(1)) * b + q(2)) as u32
}

/// Single-color-class sample used to build a model histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub pixels: RasterImage,
    pub color_class: u8,
}

impl Template {
    pub fn new(pixels: RasterImage, color_class: u8) -> Self {
        Self {
            pixels,
            color_class,
        }
    }

    pub fn from_pixels(pixels: &[[u8; 3]], color_class: u8) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::EmptyTemplate);
        }
        Ok(Self::new(RasterImage::from_pixels(pixels)?, color_class))
    }

    /// Gathers every pixel labeled `class`, in scan order.
    pub fn cut(img: &RasterImage, labels: &LabelMap, class: u8) -> Result<Self> {
        if (img.width(), img.height()) != labels.dims() {
            return Err(Error::DimensionMismatch {
                left: (img.width(), img.height()),
                right: labels.dims(),
            });
        }
        let pixels: Vec<[u8; 3]> = labels
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| img.pixel(i))
            .collect();
        Self::from_pixels(&pixels, class)
    }
}

/// Solid 32x32 patches of the twelve wheel colors.
pub fn color_checker() -> Vec<Template> {
    WHEEL
        .iter()
        .map(|c| {
            Template::new(
                RasterImage::filled(32, 32, c.rgb).expect("fixed size"),
                c.class,
            )
        })
        .collect()
}

/// Sparse `B^3` histogram with its ratio form.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram3D {
    bins: Bins,
    space: ColorSpaceId,
    counts: HashMap<u32, u32>,
    max_count: u32,
    total: u64,
}

impl Histogram3D {
    pub fn bins(&self) -> Bins {
        self.bins
    }

    pub fn space(&self) -> ColorSpaceId {
        self.space
    }

    pub fn count(&self, index: u32) -> u32 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// `count / max_count`, zero for empty bins.
    pub fn ratio(&self, index: u32) -> f64 {
        match self.counts.get(&index) {
            Some(&c) if self.max_count > 0 => c as f64 / self.max_count as f64,
            _ => 0.0,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    /// Occupied bins with their counts, sorted by index.
    pub fn entries(&self) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = self.counts.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable();
        v
    }
}

pub fn build_histogram(
    template: &Template,
    space: ColorSpaceId,
    bins: Bins,
) -> Result<Histogram3D> {
    if template.pixels.is_empty() {
        return Err(Error::EmptyTemplate);
    }
    let range = range_of(space);
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for p in template.pixels.pixels() {
        let idx = bin_index(&range, bins, convert_rgb8(space, p));
        *counts.entry(idx).or_insert(0) += 1;
    }
    let max_count = counts.values().copied().max().unwrap_or(0);
    Ok(Histogram3D {
        bins,
        space,
        counts,
        max_count,
        total: template.pixels.len() as u64,
    })
}

/// Backprojected likelihood per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct BackprojectionMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl BackprojectionMap {
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let data = self
            .values
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect();
        save_gray(path, self.width, self.height, data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        save_gray(path, self.width, self.height, data)
    }
}

/// Bin indices of a converted image, stored as codes into the list of
/// distinct bins so one histogram lookup serves every pixel sharing a bin.
#[derive(Debug, Clone)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub id: ColorSpaceId,
    pub bins: Bins,
    unique: Vec<u32>,
    codes: Vec<u32>,
}

impl QuantizedImage {
    pub fn new(img: &PlaneImage, bins: Bins) -> Self {
        let range = range_of(img.id);
        let raw: Vec<u32> = (0..img.len())
            .map(|i| bin_index(&range, bins, img.pixel(i)))
            .collect();
        let mut unique = raw.clone();
        unique.sort_unstable();
        unique.dedup();
        let lookup: HashMap<u32, u32> = unique
            .iter()
            .enumerate()
            .map(|(i, &b)| (b, i as u32))
            .collect();
        let codes = raw.iter().map(|b| lookup[b]).collect();
        Self {
            width: img.width,
            height: img.height,
            id: img.id,
            bins,
            unique,
            codes,
        }
    }

    pub fn bin_of(&self, pixel: usize) -> u32 {
        self.unique[self.codes[pixel] as usize]
    }

    fn check(&self, hist: &Histogram3D) -> Result<Vec<f64>> {
        if self.id != hist.space {
            return Err(Error::SpaceMismatch {
                image: self.id.to_string(),
                histogram: hist.space.to_string(),
            });
        }
        if self.bins != hist.bins {
            return Err(Error::InvalidBins(hist.bins.get()));
        }
        Ok(self.unique.iter().map(|&b| hist.ratio(b)).collect())
    }

    pub fn backproject(&self, hist: &Histogram3D) -> Result<BackprojectionMap> {
        let ratios = self.check(hist)?;
        Ok(BackprojectionMap {
            width: self.width,
            height: self.height,
            values: self.codes.iter().map(|&c| ratios[c as usize]).collect(),
        })
    }

    /// Same result as `score(&binarize(&self.backproject(hist)?, tau), ...)`
    /// without materializing the map.
    pub fn score_class(
        &self,
        hist: &Histogram3D,
        truth: &LabelMap,
        class: u8,
        tau: f64,
    ) -> Result<DetectionScore> {
        if (self.width, self.height) != truth.dims() {
            return Err(Error::DimensionMismatch {
                left: (self.width, self.height),
                right: truth.dims(),
            });
        }
        let hits: Vec<bool> = self.check(hist)?.into_iter().map(|r| r >= tau).collect();
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (&code, &label) in self.codes.iter().zip(&truth.labels) {
            match (hits[code as usize], label == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        Ok(DetectionScore::from_counts(tp, fp, fn_))
    }
}

pub fn backproject(img: &PlaneImage, hist: &Histogram3D) -> Result<BackprojectionMap> {
    if img.id != hist.space {
        return Err(Error::SpaceMismatch {
            image: img.id.to_string(),
            histogram: hist.space.to_string(),
        });
    }
    QuantizedImage::new(img, hist.bins).backproject(hist)
}

pub fn binarize(map: &BackprojectionMap, tau: f64) -> Mask {
    Mask {
        width: map.width,
        height: map.height,
        bits: map.values.iter().map(|&v| v >= tau).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub recall: f64,
    pub precision: f64,
    pub fmeasure: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl DetectionScore {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| {
            if den > 0 {
                num as f64 / den as f64
            } else {
                0.0
            }
        };
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        Self {
            recall,
            precision,
            fmeasure: f_measure(recall, precision),
            true_pos: tp,
            false_pos: fp,
            false_neg: fn_,
        }
    }

    /// Arithmetic mean of R, P and F taken independently; counts are summed.
    pub fn mean(scores: &[DetectionScore]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        Some(Self {
            recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
            precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
            fmeasure: scores.iter().map(|s| s.fmeasure).sum::<f64>() / n,
            true_pos: scores.iter().map(|s| s.true_pos).sum(),
            false_pos: scores.iter().map(|s| s.false_pos).sum(),
            false_neg: scores.iter().map(|s| s.false_neg).sum(),
        })
    }
}

pub fn f_measure(recall: f64, precision: f64) -> f64 {
    if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    }
}

pub fn score(mask: &Mask, truth: &LabelMap, color_class: u8) -> Result<DetectionScore> {
    if (mask.width, mask.height) != truth.dims() {
        return Err(Error::DimensionMismatch {
            left: (mask.width, mask.height),
            right: truth.dims(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&hit, &label) in mask.bits.iter().zip(&truth.labels) {
        let positive = label == color_class;
        tp += (hit && positive) as u64;
        fp += (hit && !positive) as u64;
        fn_ += (!hit && positive) as u64;
    }
    Ok(DetectionScore::from_counts(tp, fp, fn_))
}

/// Scores at every bin size and averages the metrics.
pub fn score_averaged(
    img: &RasterImage,
    truth: &LabelMap,
    template: &Template,
    space: ColorSpaceId,
    tau: f64,
) -> Result<DetectionScore> {
    let plane = to_space(img, space);
    let scores = Bins::ALL
        .iter()
        .map(|&bins| {
            let hist = build_histogram(template, space, bins)?;
            QuantizedImage::new(&plane, bins).score_class(&hist, truth, template.color_class, tau)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionScore::mean(&scores).expect("four bin sizes"))
}

/// Class indices a template set covers, for sanity checks on corpora.
pub fn template_classes(templates: &[Template]) -> Vec<u8> {
    let mut v: Vec<u8> = templates.iter().map(|t| t.color_class).collect();
    v.sort_unstable();
    v.dedup();
    v.retain(|&c| (c as usize) < CLASS_COUNT);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::Space;
    use crate::raster::BACKGROUND;

    fn id(s: Space) -> ColorSpaceId {
        ColorSpaceId::original(s)
    }

    #[test]
    fn rejects_bad_bins() {
        assert!(matches!(Bins::new(8), Err(Error::InvalidBins(8))));
        assert!(Bins::new(64).is_ok());
    }

    #[test]
    fn empty_template_rejected() {
        assert!(matches!(
            Template::from_pixels(&[], 0),
            Err(Error::EmptyTemplate)
        ));
    }

    #[test]
    fn single_pixel_template() {
        let t = Template::from_pixels(&[[10, 200, 30]], 6).unwrap();
        let h = build_histogram(&t, id(Space::Rgb), Bins::new(16).unwrap()).unwrap();
        assert_eq!(h.occupied(), 1);
        let (idx, c) = h.entries()[0];
        assert_eq!(c, 1);
        assert_eq!(h.ratio(idx), 1.0);
        assert_eq!(h.total(), 1);
    }

    #[test]
    fn solid_template_fills_one_bin() {
        let t = Template::new(RasterImage::filled(5, 4, [0, 255, 128]).unwrap(), 7);
        let h = build_histogram(&t, id(Space::Hsv), Bins::new(32).unwrap()).unwrap();
        assert_eq!(h.entries().len(), 1);
        assert_eq!(h.entries()[0].1, 20);
    }

    #[test]
    fn two_pixel_template_hand_quantized() {
        // RGB at 16 bins: 255 -> 15, 0 -> 0, 128 -> floor(128/255*16) = 8.
        let t = Template::from_pixels(&[[255, 0, 0], [0, 128, 255]], 0).unwrap();
        let h = build_histogram(&t, id(Space::Rgb), Bins::new(16).unwrap()).unwrap();
        let a = (15 * 16) * 16;
        let b = (8) * 16 + 15;
        assert_eq!(h.entries(), vec![(b, 1), (a, 1)]);
        assert_eq!(h.ratio(a), 1.0);
        assert_eq!(h.ratio(b), 1.0);
    }

    #[test]
    fn backproject_half_image() {
        // 2x2: top row template color, bottom row a color in a far bin.
        let img = RasterImage::new(2, 2, vec![255, 0, 0, 255, 0, 0, 0, 0, 255, 0, 0, 255]).unwrap();
        let t = Template::from_pixels(&[[255, 0, 0]], 0).unwrap();
        let s = id(Space::C1C2C3);
        let h = build_histogram(&t, s, Bins::new(16).unwrap()).unwrap();
        let map = backproject(&to_space(&img, s), &h).unwrap();
        assert_eq!(map.values, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn backproject_space_mismatch() {
        let img = RasterImage::filled(2, 2, [1, 2, 3]).unwrap();
        let t = Template::from_pixels(&[[1, 2, 3]], 0).unwrap();
        let h = build_histogram(&t, id(Space::Rgb), Bins::new(16).unwrap()).unwrap();
        let plane = to_space(&img, ColorSpaceId::normalized(Space::Rgb));
        assert!(matches!(
            backproject(&plane, &h),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn binarize_examples() {
        let m = BackprojectionMap {
            width: 2,
            height: 1,
            values: vec![0.2, 0.6],
        };
        assert_eq!(binarize(&m, 0.5).bits, vec![false, true]);
        let ones = BackprojectionMap {
            width: 2,
            height: 1,
            values: vec![1.0; 2],
        };
        assert!(binarize(&ones, 0.5).bits.iter().all(|&b| b));
        let zeros = BackprojectionMap {
            width: 2,
            height: 1,
            values: vec![0.0; 2],
        };
        assert!(binarize(&zeros, 0.5).bits.iter().all(|&b| !b));
    }

    #[test]
    fn score_three_by_three() {
        // class 3 at pixels 0,1,3,4; mask hits 0,1 and background pixel 8.
        let mut labels = vec![BACKGROUND; 9];
        for i in [0, 1, 3, 4] {
            labels[i] = 3;
        }
        let truth = LabelMap::new(3, 3, labels).unwrap();
        let mut bits = vec![false; 9];
        for i in [0, 1, 8] {
            bits[i] = true;
        }
        let s = score(
            &Mask {
                width: 3,
                height: 3,
                bits,
            },
            &truth,
            3,
        )
        .unwrap();
        assert_eq!((s.true_pos, s.false_pos, s.false_neg), (2, 1, 2));
        assert_eq!(s.recall, 0.5);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.fmeasure - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn empty_mask_scores_zero() {
        let truth = LabelMap::filled(2, 2, 1);
        let s = score(
            &Mask {
                width: 2,
                height: 2,
                bits: vec![false; 4],
            },
            &truth,
            1,
        )
        .unwrap();
        assert_eq!((s.recall, s.precision, s.fmeasure), (0.0, 0.0, 0.0));
        let perfect = score(
            &Mask {
                width: 2,
                height: 2,
                bits: vec![true; 4],
            },
            &truth,
            1,
        )
        .unwrap();
        assert_eq!(
            (perfect.recall, perfect.precision, perfect.fmeasure),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn score_dimension_mismatch() {
        let truth = LabelMap::filled(2, 2, 1);
        let mask = Mask {
            width: 1,
            height: 2,
            bits: vec![true; 2],
        };
        assert!(matches!(
            score(&mask, &truth, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mean_of_recalls() {
        let s: Vec<_> = [0.2, 0.4, 0.6, 0.8]
            .iter()
            .map(|&r| DetectionScore {
                recall: r,
                precision: 0.5,
                fmeasure: 0.1,
                true_pos: 1,
                false_pos: 0,
                false_neg: 0,
            })
            .collect();
        let m = DetectionScore::mean(&s).unwrap();
        assert!((m.recall - 0.5).abs() < 1e-15);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.true_pos, 4);
    }

    #[test]
    fn averaged_solid_scene_is_perfect() {
        let img = RasterImage::filled(8, 8, [255, 128, 0]).unwrap();
        let truth = LabelMap::filled(8, 8, 2);
        let t = &color_checker()[2];
        for s in [Space::C1C2C3, Space::Lab, Space::Hsv] {
            for primed in [false, true] {
                let sc = score_averaged(&img, &truth, t, ColorSpaceId::new(s, primed), DEFAULT_TAU)
                    .unwrap();
                assert_eq!((sc.recall, sc.precision, sc.fmeasure), (1.0, 1.0, 1.0));
            }
        }
    }

    #[test]
    fn score_class_matches_pipeline() {
        let img = RasterImage::new(3, 1, vec![255, 0, 0, 200, 10, 0, 0, 0, 255]).unwrap();
        let truth = LabelMap::new(3, 1, vec![0, 0, BACKGROUND]).unwrap();
        let t = Template::from_pixels(&[[255, 0, 0], [250, 0, 0], [201, 9, 0]], 0).unwrap();
        for s in [Space::Rgb, Space::Rg, Space::Lab] {
            let sid = id(s);
            let plane = to_space(&img, sid);
            let bins = Bins::new(32).unwrap();
            let h = build_histogram(&t, sid, bins).unwrap();
            let slow = score(&binarize(&backproject(&plane, &h).unwrap(), 0.5), &truth, 0).unwrap();
            let fast = QuantizedImage::new(&plane, bins)
                .score_class(&h, &truth, 0, 0.5)
                .unwrap();
            assert_eq!(slow, fast);
        }
    }
}
