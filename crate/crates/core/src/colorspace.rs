//! RGB to color-space conversion for the evaluated spaces.
//!
//! Every transform takes RGB in `[0, 1]` (either `value / 255` or the output of
//! [`normalize_pixelwise`]) and produces three channels. Two-channel spaces
//! (`rg`, `COPP`, `NOPP`, `xyz`) keep a third plane fixed at zero so that every
//! space flows through the same histogram shape.
//!
//! All numeric constants live in [`catalog`]; the table in
//! `docs/colorspaces.md` mirrors it.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{FloatRaster, RasterImage};

/// Transform constants. Swapping a matrix here changes both the forward
/// conversion and the inverse used by the round-trip checks.
pub mod catalog {
    /// sRGB (D65) linear RGB to CIE XYZ.
    pub const SRGB_TO_XYZ: [[f64; 3]; 3] = [
        [0.412_456_4, 0.357_576_1, 0.180_437_5],
        [0.212_672_9, 0.715_152_2, 0.072_175_0],
        [0.019_333_9, 0.119_192_0, 0.950_304_1],
    ];

    /// D65 reference white, taken as the XYZ image of RGB white.
    pub const WHITE: [f64; 3] = [
        SRGB_TO_XYZ[0][0] + SRGB_TO_XYZ[0][1] + SRGB_TO_XYZ[0][2],
        SRGB_TO_XYZ[1][0] + SRGB_TO_XYZ[1][1] + SRGB_TO_XYZ[1][2],
        SRGB_TO_XYZ[2][0] + SRGB_TO_XYZ[2][1] + SRGB_TO_XYZ[2][2],
    ];

    pub const RGB_TO_YIQ: [[f64; 3]; 3] = [
        [0.299, 0.587, 0.114],
        [0.596, -0.274, -0.322],
        [0.211, -0.523, 0.312],
    ];

    pub const RGB_TO_YUV: [[f64; 3]; 3] = [
        [0.299, 0.587, 0.114],
        [-0.147_13, -0.288_86, 0.436],
        [0.615, -0.514_99, -0.100_01],
    ];

    /// Full-range YCrCb; chroma rows are `0.713 (R - Y)` and `0.564 (B - Y)`
    /// and get [`YCRCB_OFFSET`] added.
    pub const RGB_TO_YCRCB: [[f64; 3]; 3] = [
        [0.299, 0.587, 0.114],
        [0.713 * 0.701, 0.713 * -0.587, 0.713 * -0.114],
        [0.564 * -0.299, 0.564 * -0.587, 0.564 * 0.886],
    ];
    pub const YCRCB_OFFSET: [f64; 3] = [0.0, 0.5, 0.5];

    pub const RGB_TO_YES: [[f64; 3]; 3] =
        [[0.253, 0.684, 0.063], [0.5, -0.5, 0.0], [0.25, 0.25, -0.5]];

    pub const RGB_TO_I1I2I3: [[f64; 3]; 3] = [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [0.5, 0.0, -0.5],
        [-0.25, 0.5, -0.25],
    ];

    const S2: f64 = std::f64::consts::SQRT_2;
    // sqrt(6) and sqrt(3)
    const S6: f64 = 2.449_489_742_783_178;
    const S3: f64 = 1.732_050_807_568_877_2;

    pub const RGB_TO_OPP: [[f64; 3]; 3] = [
        [1.0 / S2, -1.0 / S2, 0.0],
        [1.0 / S6, 1.0 / S6, -2.0 / S6],
        [1.0 / S3, 1.0 / S3, 1.0 / S3],
    ];

    /// Ratio of the OPP chromatic scale to the intensity scale:
    /// `O1 / O3 = sqrt(3/2) (R - G) / (R + G + B)`,
    /// `O2 / O3 = sqrt(1/2) (R + G - 2B) / (R + G + B)`.
    pub const NOPP_SCALE: [f64; 2] = [S3 / S2, 1.0 / S2];

    /// CIE 1964 U*V*W*: `W = 25 (100 Y)^(1/3) - 17`, `U = 13 W (u - u0)`,
    /// `V = 13 W (v - v0)` with CIE 1960 `(u, v)`.
    pub const UVW_W_SCALE: f64 = 25.0;
    pub const UVW_W_OFFSET: f64 = 17.0;
}

/// Base color-space identifiers. `Rgb` is the reference; the other twenty are
/// the evaluated set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Space {
    Rgb,
    Xyz,
    XyzChroma,
    XyY,
    Lab,
    Luv,
    Uvw,
    Yiq,
    Yuv,
    YCrCb,
    Yes,
    Cmy,
    Hsi,
    Hsv,
    Hsl,
    I1I2I3,
    Opp,
    Nopp,
    Copp,
    Rg,
    C1C2C3,
}

impl Space {
    pub const ALL: [Space; 21] = [
        Space::Rgb,
        Space::Xyz,
        Space::XyzChroma,
        Space::XyY,
        Space::Lab,
        Space::Luv,
        Space::Uvw,
        Space::Yiq,
        Space::Yuv,
        Space::YCrCb,
        Space::Yes,
        Space::Cmy,
        Space::Hsi,
        Space::Hsv,
        Space::Hsl,
        Space::I1I2I3,
        Space::Opp,
        Space::Nopp,
        Space::Copp,
        Space::Rg,
        Space::C1C2C3,
    ];

    /// The twenty evaluated spaces (everything except the RGB reference).
    pub fn evaluated() -> &'static [Space] {
        &Self::ALL[1..]
    }

    /// Spaces whose output does not change under uniform RGB scaling.
    pub fn is_photometric_invariant(self) -> bool {
        matches!(self, Space::C1C2C3 | Space::Rg | Space::Nopp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Space::Rgb => "RGB",
            Space::Xyz => "XYZ",
            Space::XyzChroma => "xyz",
            Space::XyY => "xyY",
            Space::Lab => "Lab",
            Space::Luv => "Luv",
            Space::Uvw => "UVW",
            Space::Yiq => "YIQ",
            Space::Yuv => "YUV",
            Space::YCrCb => "YCrCb",
            Space::Yes => "YES",
            Space::Cmy => "CMY",
            Space::Hsi => "HSI",
            Space::Hsv => "HSV",
            Space::Hsl => "HSL",
            Space::I1I2I3 => "I1I2I3",
            Space::Opp => "OPP",
            Space::Nopp => "NOPP",
            Space::Copp => "COPP",
            Space::Rg => "rg",
            Space::C1C2C3 => "C1C2C3",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Space {
    type Err = Error;

    /// Case matters only where two names collide (`XYZ` vs `xyz`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(sp) = Space::ALL.iter().find(|sp| sp.name() == s) {
            return Ok(*sp);
        }
        let lower = s.to_ascii_lowercase();
        if lower == "xyz" {
            return Err(Error::UnknownSpace(s.to_string()));
        }
        Space::ALL
            .iter()
            .find(|sp| sp.name().to_ascii_lowercase() == lower)
            .copied()
            .ok_or_else(|| Error::UnknownSpace(s.to_string()))
    }
}

/// A space together with whether it runs on pixel-wise normalized input.
/// Displayed with a trailing `'` when primed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColorSpaceId {
    pub space: Space,
    pub primed: bool,
}

impl ColorSpaceId {
    pub fn new(space: Space, primed: bool) -> Self {
        Self { space, primed }
    }

    pub fn original(space: Space) -> Self {
        Self::new(space, false)
    }

    pub fn normalized(space: Space) -> Self {
        Self::new(space, true)
    }

    /// Every evaluated space, original then normalized.
    pub fn sweep() -> Vec<ColorSpaceId> {
        let mut v: Vec<_> = Space::evaluated()
            .iter()
            .map(|&s| Self::original(s))
            .collect();
        v.extend(Space::evaluated().iter().map(|&s| Self::normalized(s)));
        v
    }
}

impl fmt::Display for ColorSpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.space, if self.primed { "'" } else { "" })
    }
}

impl FromStr for ColorSpaceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.strip_suffix('\'') {
            Some(base) => Ok(Self::normalized(base.parse()?)),
            None => Ok(Self::original(s.parse()?)),
        }
    }
}

/// Theoretical per-channel bounds used to map values to `[0, 1]` for binning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl ChannelRange {
    const fn uniform(min: f64, max: f64) -> Self {
        Self {
            min: [min; 3],
            max: [max; 3],
        }
    }

    /// Affine map of channel `c` into `[0, 1]`.
    #[inline]
    pub fn unit(&self, c: usize, v: f64) -> f64 {
        ((v - self.min[c]) / (self.max[c] - self.min[c])).clamp(0.0, 1.0)
    }

    #[inline]
    pub fn clamp(&self, v: [f64; 3]) -> [f64; 3] {
        [
            v[0].clamp(self.min[0], self.max[0]),
            v[1].clamp(self.min[1], self.max[1]),
            v[2].clamp(self.min[2], self.max[2]),
        ]
    }

    pub fn contains(&self, v: [f64; 3]) -> bool {
        (0..3).all(|c| v[c] >= self.min[c] && v[c] <= self.max[c])
    }
}

const SQRT_1_5: f64 = 1.224_744_871_391_589;

/// Bounds for each space. Lab, Luv and UVW use the extents of the sRGB cube
/// rounded outward; the rest follow from their formulas.
pub fn channel_range(space: Space) -> ChannelRange {
    use catalog::*;
    let o = |row: usize| -> (f64, f64) {
        let m = &RGB_TO_OPP[row];
        let lo = m.iter().filter(|&&v| v < 0.0).sum::<f64>();
        let hi = m.iter().filter(|&&v| v > 0.0).sum::<f64>();
        (lo, hi)
    };
    match space {
        Space::Rgb | Space::Cmy | Space::YCrCb => ChannelRange::uniform(0.0, 1.0),
        Space::Xyz => ChannelRange {
            min: [0.0; 3],
            max: WHITE,
        },
        Space::XyzChroma | Space::Rg => ChannelRange::uniform(0.0, 1.0),
        Space::XyY => ChannelRange {
            min: [0.0; 3],
            max: [1.0, 1.0, WHITE[1]],
        },
        Space::Lab => ChannelRange {
            min: [0.0, -87.0, -108.0],
            max: [100.0, 99.0, 95.0],
        },
        Space::Luv => ChannelRange {
            min: [0.0, -84.0, -135.0],
            max: [100.0, 176.0, 108.0],
        },
        Space::Uvw => ChannelRange {
            min: [-83.0, -88.0, -UVW_W_OFFSET],
            max: [172.0, 71.0, 100.0],
        },
        Space::Yiq => ChannelRange {
            min: [0.0, -0.596, -0.523],
            max: [1.0, 0.596, 0.523],
        },
        Space::Yuv => ChannelRange {
            min: [0.0, -0.436, -0.615],
            max: [1.0, 0.436, 0.615],
        },
        Space::Yes => ChannelRange {
            min: [0.0, -0.5, -0.5],
            max: [1.0, 0.5, 0.5],
        },
        Space::I1I2I3 => ChannelRange {
            min: [0.0, -0.5, -0.5],
            max: [1.0, 0.5, 0.5],
        },
        Space::Hsi | Space::Hsv | Space::Hsl => ChannelRange {
            min: [0.0; 3],
            max: [TAU, 1.0, 1.0],
        },
        Space::Opp => {
            let (a, b, c) = (o(0), o(1), o(2));
            ChannelRange {
                min: [a.0, b.0, c.0],
                max: [a.1, b.1, c.1],
            }
        }
        Space::Copp => {
            let (a, b) = (o(0), o(1));
            ChannelRange {
                min: [a.0, b.0, 0.0],
                max: [a.1, b.1, 1.0],
            }
        }
        Space::Nopp => ChannelRange {
            min: [-SQRT_1_5, -2.0 * NOPP_SCALE[1], 0.0],
            max: [SQRT_1_5, NOPP_SCALE[1], 1.0],
        },
        Space::C1C2C3 => ChannelRange::uniform(0.0, FRAC_PI_2),
    }
}

/// Bounds for a configuration. Original spaces use [`channel_range`].
/// Primed spaces only ever see inputs on the simplex `r + g + b = 1`, so
/// their bounds are the extents of that simplex under the transform, padded
/// by half a percent and kept inside the original bounds. Flat channels keep
/// the original bounds.
pub fn range_of(id: ColorSpaceId) -> ChannelRange {
    if !id.primed {
        return channel_range(id.space);
    }
    static PRIMED: OnceLock<Vec<ChannelRange>> = OnceLock::new();
    let table = PRIMED.get_or_init(|| Space::ALL.iter().map(|&s| simplex_range(s)).collect());
    let i = Space::ALL
        .iter()
        .position(|&s| s == id.space)
        .expect("every space is listed");
    table[i]
}

/// Simplex grid resolution; a multiple of 3 so the gray point is sampled.
const SIMPLEX_STEPS: usize = 510;
const SIMPLEX_PAD: f64 = 0.005;

fn simplex_range(space: Space) -> ChannelRange {
    let base = channel_range(space);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let n = SIMPLEX_STEPS;
    for i in 0..=n {
        for j in 0..=n - i {
            let r = i as f64 / n as f64;
            let g = j as f64 / n as f64;
            let v = convert_pixel(space, [r, g, (1.0 - r - g).max(0.0)]);
            for c in 0..3 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
    }
    let mut out = base;
    for c in 0..3 {
        let width = hi[c] - lo[c];
        if width > 1e-9 {
            out.min[c] = (lo[c] - SIMPLEX_PAD * width).max(base.min[c]);
            out.max[c] = (hi[c] + SIMPLEX_PAD * width).min(base.max[c]);
        }
    }
    out
}

/// Divides each channel by the per-pixel channel sum; black maps to
/// `(1/3, 1/3, 1/3)`.
pub fn normalize_pixelwise(img: &RasterImage) -> FloatRaster {
    let data = img
        .pixels()
        .map(|p| normalize_rgb([p[0] as f64, p[1] as f64, p[2] as f64]))
        .collect();
    FloatRaster {
        width: img.width(),
        height: img.height(),
        data,
        normalized: true,
    }
}

/// Pixel-wise normalization of a single (non-negative) triple.
#[inline]
pub fn normalize_rgb(p: [f64; 3]) -> [f64; 3] {
    let sum = p[0] + p[1] + p[2];
    if sum <= 0.0 {
        [1.0 / 3.0; 3]
    } else {
        [p[0] / sum, p[1] / sum, p[2] / sum]
    }
}

/// Per-space float image: three row-major planes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneImage {
    pub width: usize,
    pub height: usize,
    pub id: ColorSpaceId,
    pub channels: [Vec<f64>; 3],
}

impl PlaneImage {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn normalized_input(&self) -> bool {
        self.id.primed
    }

    #[inline]
    pub fn pixel(&self, i: usize) -> [f64; 3] {
        [
            self.channels[0][i],
            self.channels[1][i],
            self.channels[2][i],
        ]
    }

    /// Planar little-endian `f32` dump with the 16-byte header.
    pub fn write_planar<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        crate::raster::write_planar(out, self.width, self.height, &self.channels)
    }

    /// Channels mapped through [`ChannelRange::unit`] to 8-bit, for viewing.
    pub fn to_visual(&self) -> RasterImage {
        let range = range_of(self.id);
        let mut data = Vec::with_capacity(self.len() * 3);
        for i in 0..self.len() {
            let p = self.pixel(i);
            for (c, v) in p.iter().enumerate() {
                data.push((range.unit(c, *v) * 255.0).round() as u8);
            }
        }
        RasterImage::new(self.width, self.height, data).expect("dimensions carried from source")
    }
}

/// Converts a float raster; the result is primed iff the raster is normalized.
pub fn convert(img: &FloatRaster, space: Space) -> PlaneImage {
    let n = img.len();
    let id = ColorSpaceId::new(space, img.normalized);
    let range = range_of(id);
    let mut channels = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (i, &p) in img.data.iter().enumerate() {
        let v = range.clamp(convert_pixel(space, p));
        channels[0][i] = v[0];
        channels[1][i] = v[1];
        channels[2][i] = v[2];
    }
    PlaneImage {
        width: img.width,
        height: img.height,
        id,
        channels,
    }
}

/// Normalizes first when `id.primed`, then converts.
pub fn to_space(img: &RasterImage, id: ColorSpaceId) -> PlaneImage {
    let float = if id.primed {
        normalize_pixelwise(img)
    } else {
        FloatRaster::from_raster(img)
    };
    convert(&float, id.space)
}

/// Prepares a single 8-bit pixel the way [`to_space`] would.
#[inline]
pub fn convert_rgb8(id: ColorSpaceId, p: [u8; 3]) -> [f64; 3] {
    if id.primed {
        let rgb = normalize_rgb([p[0] as f64, p[1] as f64, p[2] as f64]);
        range_of(id).clamp(convert_pixel(id.space, rgb))
    } else {
        convert_pixel(
            id.space,
            [
                p[0] as f64 / 255.0,
                p[1] as f64 / 255.0,
                p[2] as f64 / 255.0,
            ],
        )
    }
}

#[inline]
fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

#[inline]
fn rgb_to_xyz(rgb: [f64; 3]) -> [f64; 3] {
    let lin = [
        srgb_to_linear(rgb[0]),
        srgb_to_linear(rgb[1]),
        srgb_to_linear(rgb[2]),
    ];
    mul(&catalog::SRGB_TO_XYZ, lin)
}

/// `(x, y)` chromaticity; black takes the white point's chromaticity.
#[inline]
fn chromaticity(xyz: [f64; 3]) -> (f64, f64) {
    let s = xyz[0] + xyz[1] + xyz[2];
    if s <= 0.0 {
        let w = catalog::WHITE;
        let ws = w[0] + w[1] + w[2];
        (w[0] / ws, w[1] / ws)
    } else {
        (xyz[0] / s, xyz[1] / s)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if t > D * D * D {
        t.cbrt()
    } else {
        t / (3.0 * D * D) + 4.0 / 29.0
    }
}

#[inline]
fn cie_lightness(y_rel: f64) -> f64 {
    const D: f64 = 6.0 / 29.0;
    if y_rel > D * D * D {
        116.0 * y_rel.cbrt() - 16.0
    } else {
        (29.0f64 / 3.0).powi(3) * y_rel
    }
}

/// Returns `(u', v')` of CIE 1976 given a `v` multiplier of 9 or, for the
/// 1960 UCS, 6. `None` for black.
#[inline]
fn ucs(xyz: [f64; 3], v_mul: f64) -> Option<(f64, f64)> {
    let d = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
    (d > 0.0).then(|| (4.0 * xyz[0] / d, v_mul * xyz[1] / d))
}

fn hue_hexcone(r: f64, g: f64, b: f64, max: f64, min: f64) -> f64 {
    let delta = max - min;
    if delta <= 0.0 {
        return 0.0;
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = sector * PI / 3.0;
    if h >= TAU {
        h - TAU
    } else {
        h
    }
}

/// Converts one RGB triple in `[0, 1]`; output is clamped into
/// [`channel_range`].
pub fn convert_pixel(space: Space, rgb: [f64; 3]) -> [f64; 3] {
    use catalog::*;
    let [r, g, b] = rgb;
    let out = match space {
        Space::Rgb => rgb,
        Space::Cmy => [1.0 - r, 1.0 - g, 1.0 - b],
        Space::Xyz => rgb_to_xyz(rgb),
        Space::XyzChroma => {
            let (x, y) = chromaticity(rgb_to_xyz(rgb));
            [x, y, 0.0]
        }
        Space::XyY => {
            let xyz = rgb_to_xyz(rgb);
            let (x, y) = chromaticity(xyz);
            [x, y, xyz[1]]
        }
        Space::Lab => {
            let xyz = rgb_to_xyz(rgb);
            let fx = lab_f(xyz[0] / WHITE[0]);
            let fy = lab_f(xyz[1] / WHITE[1]);
            let fz = lab_f(xyz[2] / WHITE[2]);
            [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
        }
        Space::Luv => {
            let xyz = rgb_to_xyz(rgb);
            let l = cie_lightness(xyz[1] / WHITE[1]);
            match (ucs(xyz, 9.0), ucs(WHITE, 9.0)) {
                (Some((u, v)), Some((un, vn))) => [l, 13.0 * l * (u - un), 13.0 * l * (v - vn)],
                _ => [l, 0.0, 0.0],
            }
        }
        Space::Uvw => {
            let xyz = rgb_to_xyz(rgb);
            let w = UVW_W_SCALE * (100.0 * xyz[1] / WHITE[1]).cbrt() - UVW_W_OFFSET;
            match (ucs(xyz, 6.0), ucs(WHITE, 6.0)) {
                (Some((u, v)), Some((u0, v0))) => [13.0 * w * (u - u0), 13.0 * w * (v - v0), w],
                _ => [0.0, 0.0, w],
            }
        }
        Space::Yiq => mul(&RGB_TO_YIQ, rgb),
        Space::Yuv => mul(&RGB_TO_YUV, rgb),
        Space::YCrCb => {
            let v = mul(&RGB_TO_YCRCB, rgb);
            [
                v[0] + YCRCB_OFFSET[0],
                v[1] + YCRCB_OFFSET[1],
                v[2] + YCRCB_OFFSET[2],
            ]
        }
        Space::Yes => mul(&RGB_TO_YES, rgb),
        Space::I1I2I3 => mul(&RGB_TO_I1I2I3, rgb),
        Space::Opp => mul(&RGB_TO_OPP, rgb),
        Space::Copp => {
            let v = mul(&RGB_TO_OPP, rgb);
            [v[0], v[1], 0.0]
        }
        Space::Nopp => {
            let s = r + g + b;
            if s <= 0.0 {
                [0.0; 3]
            } else {
                [
                    NOPP_SCALE[0] * (r - g) / s,
                    NOPP_SCALE[1] * (r + g - 2.0 * b) / s,
                    0.0,
                ]
            }
        }
        Space::Rg => {
            let s = r + g + b;
            if s <= 0.0 {
                [1.0 / 3.0, 1.0 / 3.0, 0.0]
            } else {
                [r / s, g / s, 0.0]
            }
        }
        Space::C1C2C3 => [r.atan2(g.max(b)), g.atan2(r.max(b)), b.atan2(r.max(g))],
        Space::Hsv => {
            let max = r.max(g).max(b);
            let min = r.min(g).min(b);
            let s = if max > 0.0 { (max - min) / max } else { 0.0 };
            [hue_hexcone(r, g, b, max, min), s, max]
        }
        Space::Hsl => {
            let max = r.max(g).max(b);
            let min = r.min(g).min(b);
            let l = (max + min) / 2.0;
            let denom = 1.0 - (2.0 * l - 1.0).abs();
            let s = if max > min && denom > 0.0 {
                (max - min) / denom
            } else {
                0.0
            };
            [hue_hexcone(r, g, b, max, min), s, l]
        }
        Space::Hsi => {
            let i = (r + g + b) / 3.0;
            let min = r.min(g).min(b);
            let s = if i > 0.0 { 1.0 - min / i } else { 0.0 };
            let num = 0.5 * ((r - g) + (r - b));
            let den = ((r - g) * (r - g) + (r - b) * (g - b)).sqrt();
            let h = if den <= 0.0 {
                0.0
            } else {
                let theta = (num / den).clamp(-1.0, 1.0).acos();
                if b <= g {
                    theta
                } else {
                    TAU - theta
                }
            };
            [if h >= TAU { 0.0 } else { h }, s, i]
        }
    };
    channel_range(space).clamp(out)
}

/// Small 3x3 matrix helper for the linear inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        mul(&self.0, v)
    }

    pub fn inverse(&self) -> Option<Mat3> {
        let m = &self.0;
        let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
        let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
        let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
        let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
        if det.abs() < 1e-12 {
            return None;
        }
        let inv = 1.0 / det;
        Some(Mat3([
            [
                c00 * inv,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv,
            ],
            [
                c01 * inv,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv,
            ],
            [
                c02 * inv,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv,
            ],
        ]))
    }
}

/// Inverse transform for the linear (or gamma-wrapped linear) spaces. Returns
/// `None` for spaces without a closed-form inverse here.
pub fn invert_pixel(space: Space, v: [f64; 3]) -> Option<[f64; 3]> {
    use catalog::*;
    let lin = |m: [[f64; 3]; 3], x: [f64; 3]| Mat3(m).inverse().map(|inv| inv.apply(x));
    match space {
        Space::Rgb => Some(v),
        Space::Cmy => Some([1.0 - v[0], 1.0 - v[1], 1.0 - v[2]]),
        Space::Xyz => lin(SRGB_TO_XYZ, v).map(|l| {
            [
                linear_to_srgb(l[0]),
                linear_to_srgb(l[1]),
                linear_to_srgb(l[2]),
            ]
        }),
        Space::Yiq => lin(RGB_TO_YIQ, v),
        Space::Yuv => lin(RGB_TO_YUV, v),
        Space::YCrCb => lin(
            RGB_TO_YCRCB,
            [
                v[0] - YCRCB_OFFSET[0],
                v[1] - YCRCB_OFFSET[1],
                v[2] - YCRCB_OFFSET[2],
            ],
        ),
        Space::Yes => lin(RGB_TO_YES, v),
        Space::I1I2I3 => lin(RGB_TO_I1I2I3, v),
        Space::Opp => lin(RGB_TO_OPP, v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn px(space: Space, p: [u8; 3]) -> [f64; 3] {
        convert_rgb8(ColorSpaceId::original(space), p)
    }

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn normalize_examples() {
        let img = RasterImage::from_pixels(&[[100, 100, 200], [0, 0, 0], [50, 50, 100]]).unwrap();
        let n = normalize_pixelwise(&img);
        assert!(n.normalized);
        assert_eq!(n.data[0], [0.25, 0.25, 0.5]);
        assert_eq!(n.data[1], [1.0 / 3.0; 3]);
        assert_eq!(n.data[2], n.data[0]);
    }

    #[test]
    fn c1c2c3_gray_is_quarter_pi() {
        for v in [1u8, 17, 128, 255] {
            let c = px(Space::C1C2C3, [v, v, v]);
            assert!(close(c, [FRAC_PI_4; 3], 1e-15), "{c:?}");
        }
    }

    #[test]
    fn c1c2c3_pure_red() {
        // atan2(1, max(0,0)) = pi/2; atan2(0, max(1,0)) = 0
        assert_eq!(px(Space::C1C2C3, [255, 0, 0]), [FRAC_PI_2, 0.0, 0.0]);
        assert_eq!(px(Space::C1C2C3, [0, 0, 0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn rg_pure_red() {
        assert_eq!(px(Space::Rg, [255, 0, 0]), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn cmy_is_complement() {
        let p = [10u8, 128, 255];
        let c = px(Space::Cmy, p);
        let want = [1.0 - 10.0 / 255.0, 1.0 - 128.0 / 255.0, 0.0];
        assert!(close(c, want, 1e-15));
    }

    #[test]
    fn ranges_are_ordered() {
        for s in Space::ALL {
            let r = channel_range(s);
            for c in 0..3 {
                assert!(r.min[c] < r.max[c], "{s} channel {c}");
            }
        }
        assert_eq!(channel_range(Space::Rg), ChannelRange::uniform(0.0, 1.0));
        assert_eq!(
            channel_range(Space::C1C2C3),
            ChannelRange::uniform(0.0, FRAC_PI_2)
        );
        assert_eq!(channel_range(Space::Hsv).max[0], TAU);
    }

    #[test]
    fn white_maps_to_reference_white() {
        let lab = px(Space::Lab, [255, 255, 255]);
        assert!(close(lab, [100.0, 0.0, 0.0], 1e-9), "{lab:?}");
        let luv = px(Space::Luv, [255, 255, 255]);
        assert!(close(luv, [100.0, 0.0, 0.0], 1e-9), "{luv:?}");
        let uvw = px(Space::Uvw, [255, 255, 255]);
        assert!((uvw[0]).abs() < 1e-9 && (uvw[1]).abs() < 1e-9);
    }

    #[test]
    fn hue_of_primaries() {
        let h = |p| px(Space::Hsv, p)[0];
        assert_eq!(h([255, 0, 0]), 0.0);
        assert!((h([0, 255, 0]) - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!((h([0, 0, 255]) - 4.0 * PI / 3.0).abs() < 1e-12);
        let hi = |p| px(Space::Hsi, p)[0];
        assert!((hi([0, 255, 0]) - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!((hi([0, 0, 255]) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(px(Space::Hsl, [255, 0, 0]), [0.0, 1.0, 0.5]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("xyz".parse::<Space>().unwrap(), Space::XyzChroma);
        assert_eq!("XYZ".parse::<Space>().unwrap(), Space::Xyz);
        assert_eq!("hsi".parse::<Space>().unwrap(), Space::Hsi);
        assert!(matches!(
            "Xyz".parse::<Space>(),
            Err(Error::UnknownSpace(_))
        ));
        assert!(matches!(
            "HSB".parse::<Space>(),
            Err(Error::UnknownSpace(_))
        ));
        let id: ColorSpaceId = "UVW'".parse().unwrap();
        assert_eq!(id, ColorSpaceId::normalized(Space::Uvw));
        assert_eq!(id.to_string(), "UVW'");
        assert_eq!(ColorSpaceId::sweep().len(), 40);
    }

    #[test]
    fn to_space_sets_primed_flag() {
        let img = RasterImage::filled(2, 2, [10, 20, 30]).unwrap();
        let p = to_space(&img, ColorSpaceId::normalized(Space::Hsv));
        assert!(p.normalized_input());
        assert_eq!(p.id, ColorSpaceId::normalized(Space::Hsv));
        assert!(!to_space(&img, ColorSpaceId::original(Space::Hsv)).normalized_input());
    }
}
