//! Ray-cast synthetic scenes: colored primitives on a ring, a gray floor,
//! swept directional and point lights, and pixel-exact label maps.
//!
//! World frame is z-up. Objects sit on the floor (`z = 0`) around a ring
//! centered at the origin; camera stations orbit outside the ring and look at
//! the nearest object.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::fs;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::Template;
use crate::error::{Error, Result};
use crate::palette::{self, CLASS_COUNT};
use crate::raster::{LabelMap, RasterImage, BACKGROUND};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }
    pub fn x(self) -> f64 {
        self.0[0]
    }
    pub fn y(self) -> f64 {
        self.0[1]
    }
    pub fn z(self) -> f64 {
        self.0[2]
    }
    pub fn dot(self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y() * o.z() - self.z() * o.y(),
            self.z() * o.x() - self.x() * o.z(),
            self.x() * o.y() - self.y() * o.x(),
        )
    }
    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }
    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.length())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x() + o.x(), self.y() + o.y(), self.z() + o.z())
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x() - o.x(), self.y() - o.y(), self.z() - o.z())
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x() * s, self.y() * s, self.z() * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Sphere,
    Cylinder,
    Cube,
    /// Cycles sphere, cylinder, cube around the ring.
    Mixed,
}

impl Shape {
    fn for_object(self, i: usize) -> Shape {
        match self {
            Shape::Mixed => [Shape::Sphere, Shape::Cylinder, Shape::Cube][i % 3],
            s => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Closed angular sweep `start, start + step, ..., start + interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSweep {
    pub start: f64,
    pub interval: f64,
    pub step: f64,
}

impl AngleSweep {
    pub fn fixed(angle: f64) -> Self {
        Self {
            start: angle,
            interval: 0.0,
            step: 1.0,
        }
    }

    pub fn count(&self) -> Result<usize> {
        if !self.step.is_finite()
            || self.step <= 0.0
            || !self.interval.is_finite()
            || self.interval < 0.0
            || !self.start.is_finite()
        {
            return Err(Error::InvalidSweep(format!("{self:?}")));
        }
        let n = self.interval / self.step;
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::InvalidSweep(format!(
                "step {} does not divide interval {}",
                self.step, self.interval
            )));
        }
        Ok(n.round() as usize + 1)
    }

    pub fn angles(&self) -> Result<Vec<f64>> {
        let n = self.count()?;
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LightSpec {
    /// Straight-down light rotated about `axis` by each sweep angle.
    Directional {
        axis: Axis,
        sweep: AngleSweep,
        intensities: Vec<f64>,
    },
    /// Light `elevation` meters from the origin, tilted along an arc in the
    /// x-z plane, with the arc itself rotated about z.
    Point {
        elevation: f64,
        arc: AngleSweep,
        rotation: AngleSweep,
        intensities: Vec<f64>,
    },
}

impl LightSpec {
    fn intensities(&self) -> &[f64] {
        match self {
            LightSpec::Directional { intensities, .. } | LightSpec::Point { intensities, .. } => {
                intensities
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let levels = self.intensities();
        if levels.is_empty() || levels.iter().any(|&i| !i.is_finite() || i < 0.0) {
            return Err(Error::InvalidSweep(format!(
                "bad intensity levels {levels:?}"
            )));
        }
        match self {
            LightSpec::Directional { sweep, .. } => sweep.count().map(|_| ()),
            LightSpec::Point {
                elevation,
                arc,
                rotation,
                ..
            } => {
                if !elevation.is_finite() || *elevation <= 0.0 {
                    return Err(Error::InvalidSweep(format!("elevation {elevation}")));
                }
                arc.count()?;
                rotation.count().map(|_| ())
            }
        }
    }

    /// Every concrete light this spec produces, in sweep order.
    pub fn states(&self) -> Result<Vec<LightState>> {
        self.validate()?;
        let mut out = Vec::new();
        match self {
            LightSpec::Directional {
                axis,
                sweep,
                intensities,
            } => {
                for angle in sweep.angles()? {
                    let (s, c) = angle.sin_cos();
                    let to_light = match axis {
                        Axis::X => Vec3::new(0.0, -s, c),
                        Axis::Y => Vec3::new(s, 0.0, c),
                        Axis::Z => Vec3::new(0.0, 0.0, 1.0),
                    };
                    for &intensity in intensities {
                        out.push(LightState::Directional {
                            to_light,
                            angle,
                            intensity,
                        });
                    }
                }
            }
            LightSpec::Point {
                elevation,
                arc,
                rotation,
                intensities,
            } => {
                for beta in rotation.angles()? {
                    for alpha in arc.angles()? {
                        let (sa, ca) = alpha.sin_cos();
                        let (sb, cb) = beta.sin_cos();
                        let position =
                            Vec3::new(elevation * sa * cb, elevation * sa * sb, elevation * ca);
                        for &intensity in intensities {
                            out.push(LightState::Point {
                                position,
                                arc_angle: alpha,
                                rotation_angle: beta,
                                intensity,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LightState {
    Directional {
        to_light: Vec3,
        angle: f64,
        intensity: f64,
    },
    Point {
        position: Vec3,
        arc_angle: f64,
        rotation_angle: f64,
        intensity: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Height of the camera above the floor, meters.
    pub height: f64,
    /// Horizontal field of view, degrees.
    pub fov_deg: f64,
    pub width: usize,
    pub height_px: usize,
    pub orbit_radius: f64,
    pub n_stations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub shapes: Vec<Shape>,
    pub ring_radius: f64,
    pub object_radius: f64,
    /// Wheel class per object; the object count is the list length.
    pub colors: Vec<u8>,
    pub camera: CameraConfig,
    pub lights: Vec<LightSpec>,
    pub ambient: f64,
    pub floor_albedo: [u8; 3],
    /// Seeds the yaw of cube objects.
    pub seed: u64,
}

fn all_classes() -> Vec<u8> {
    (0..CLASS_COUNT as u8).collect()
}

impl SceneConfig {
    /// 36 images at 320x256: 3 stations x (4 directional + 2 arc x 4
    /// rotations) x 1 intensity.
    pub fn desk() -> Self {
        Self {
            shapes: vec![Shape::Mixed],
            ring_radius: 2.0,
            object_radius: 0.3,
            colors: all_classes(),
            camera: CameraConfig {
                height: 1.0,
                fov_deg: 110.0,
                width: 320,
                height_px: 256,
                orbit_radius: 3.0,
                n_stations: 3,
            },
            lights: vec![
                LightSpec::Directional {
                    axis: Axis::Y,
                    sweep: AngleSweep {
                        start: -FRAC_PI_2,
                        interval: PI,
                        step: FRAC_PI_3,
                    },
                    intensities: vec![0.8],
                },
                LightSpec::Point {
                    elevation: 10.0,
                    arc: AngleSweep {
                        start: -FRAC_PI_3,
                        interval: 2.0 * FRAC_PI_3,
                        step: 2.0 * FRAC_PI_3,
                    },
                    rotation: AngleSweep {
                        start: -FRAC_PI_2,
                        interval: 3.0 * FRAC_PI_2,
                        step: FRAC_PI_2,
                    },
                    intensities: vec![0.8],
                },
            ],
            ambient: 0.2,
            floor_albedo: [128, 128, 128],
            seed: 7,
        }
    }

    /// Full sweep: three shapes, 12 stations, 12 directional orientations
    /// plus a 5-step arc rotated 6 times, low and high intensity, 1280x1024.
    pub fn full() -> Self {
        Self {
            shapes: vec![Shape::Sphere, Shape::Cylinder, Shape::Cube],
            camera: CameraConfig {
                width: 1280,
                height_px: 1024,
                n_stations: 12,
                ..Self::desk().camera
            },
            lights: vec![
                LightSpec::Directional {
                    axis: Axis::Y,
                    sweep: AngleSweep {
                        start: 0.0,
                        interval: 11.0 * PI / 6.0,
                        step: PI / 6.0,
                    },
                    intensities: vec![0.5, 1.0],
                },
                LightSpec::Point {
                    elevation: 10.0,
                    arc: AngleSweep {
                        start: -FRAC_PI_3,
                        interval: 2.0 * FRAC_PI_3,
                        step: PI / 6.0,
                    },
                    rotation: AngleSweep {
                        start: -FRAC_PI_2,
                        interval: 3.0 * FRAC_PI_2,
                        step: 3.0 * PI / 10.0,
                    },
                    intensities: vec![0.5, 1.0],
                },
            ],
            ..Self::desk()
        }
    }

    /// Same geometry, lights removed and ambient at 1, so every object pixel
    /// shows its palette color.
    pub fn ambient_only(&self) -> Self {
        Self {
            lights: Vec::new(),
            ambient: 1.0,
            ..self.clone()
        }
    }

    pub fn n_objects(&self) -> usize {
        self.colors.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.shapes.is_empty() {
            return bad("at least one shape variant is required".into());
        }
        if self.colors.is_empty() {
            return bad("scene needs at least one object".into());
        }
        for &c in &self.colors {
            palette::color(c)?;
        }
        let cam = &self.camera;
        if !(cam.fov_deg > 0.0 && cam.fov_deg < 180.0) {
            return bad(format!("fov {} outside (0, 180)", cam.fov_deg));
        }
        if cam.width == 0 || cam.height_px == 0 || cam.n_stations == 0 {
            return bad("camera resolution and station count must be positive".into());
        }
        if !(self.ring_radius > 0.0 && self.object_radius > 0.0 && cam.orbit_radius > 0.0) {
            return bad("radii must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.ambient) {
            return bad(format!("ambient {} outside [0, 1]", self.ambient));
        }
        for l in &self.lights {
            l.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SceneConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub target: Vec3,
}

/// One image to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderJob {
    pub index: usize,
    pub shape: Shape,
    pub station: usize,
    pub camera: CameraPose,
    pub lights: Vec<LightState>,
}

#[derive(Debug, Clone, Copy)]
enum Primitive {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    Cylinder {
        base: Vec3,
        radius: f64,
        height: f64,
    },
    Cube {
        center: Vec3,
        half: f64,
        yaw: f64,
    },
}

#[derive(Debug, Clone, Copy)]
struct Object {
    prim: Primitive,
    class: u8,
    albedo: [u8; 3],
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    normal: Vec3,
}

const EPS: f64 = 1e-9;

impl Primitive {
    fn intersect(&self, o: Vec3, d: Vec3) -> Option<Hit> {
        match *self {
            Primitive::Sphere { center, radius } => {
                let oc = o - center;
                let b = oc.dot(d);
                let c = oc.dot(oc) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t = [-b - sq, -b + sq].into_iter().find(|&t| t > EPS)?;
                Some(Hit {
                    t,
                    normal: (o + d * t - center) * (1.0 / radius),
                })
            }
            Primitive::Cylinder {
                base,
                radius,
                height,
            } => {
                let mut best: Option<Hit> = None;
                let mut consider = |h: Hit| {
                    if h.t > EPS && best.is_none_or(|b| h.t < b.t) {
                        best = Some(h);
                    }
                };
                let (ox, oy) = (o.x() - base.x(), o.y() - base.y());
                let a = d.x() * d.x() + d.y() * d.y();
                if a > 0.0 {
                    let b = ox * d.x() + oy * d.y();
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / a, (-b + sq) / a] {
                            let z = o.z() + d.z() * t - base.z();
                            if (0.0..=height).contains(&z) {
                                let p = o + d * t;
                                let n = Vec3::new(p.x() - base.x(), p.y() - base.y(), 0.0)
                                    * (1.0 / radius);
                                consider(Hit { t, normal: n });
                            }
                        }
                    }
                }
                if d.z() != 0.0 {
                    for (zc, nz) in [(base.z() + height, 1.0), (base.z(), -1.0)] {
                        let t = (zc - o.z()) / d.z();
                        let p = o + d * t;
                        let (dx, dy) = (p.x() - base.x(), p.y() - base.y());
                        if dx * dx + dy * dy <= radius * radius {
                            consider(Hit {
                                t,
                                normal: Vec3::new(0.0, 0.0, nz),
                            });
                        }
                    }
                }
                best
            }
            Primitive::Cube { center, half, yaw } => {
                let (s, c) = yaw.sin_cos();
                let to_local =
                    |v: Vec3| Vec3::new(c * v.x() + s * v.y(), -s * v.x() + c * v.y(), v.z());
                let lo = to_local(o - center);
                let ld = to_local(d);
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let mut near_axis = (0, 0.0);
                let mut far_axis = (0, 0.0);
                for ax in 0..3 {
                    let (oa, da) = (lo.0[ax], ld.0[ax]);
                    if da.abs() < 1e-15 {
                        if oa.abs() > half {
                            return None;
                        }
                        continue;
                    }
                    let mut t0 = (-half - oa) / da;
                    let mut t1 = (half - oa) / da;
                    let mut sign0 = -1.0;
                    if t0 > t1 {
                        std::mem::swap(&mut t0, &mut t1);
                        sign0 = 1.0;
                    }
                    if t0 > t_near {
                        t_near = t0;
                        near_axis = (ax, sign0);
                    }
                    if t1 < t_far {
                        t_far = t1;
                        far_axis = (ax, -sign0);
                    }
                    if t_near > t_far {
                        return None;
                    }
                }
                let (t, (ax, sign)) = if t_near > EPS {
                    (t_near, near_axis)
                } else if t_far > EPS {
                    (t_far, far_axis)
                } else {
                    return None;
                };
                let mut ln = [0.0; 3];
                ln[ax] = sign;
                let n = Vec3::new(c * ln[0] - s * ln[1], s * ln[0] + c * ln[1], ln[2]);
                Some(Hit { t, normal: n })
            }
        }
    }
}

/// Concrete scene geometry for one shape variant.
#[derive(Debug, Clone)]
pub struct Scene {
    objects: Vec<Object>,
    ambient: f64,
    floor_albedo: [u8; 3],
}

enum Surface {
    Object(usize),
    Floor,
}

impl Scene {
    pub fn new(cfg: &SceneConfig, shape: Shape) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let n = cfg.n_objects();
        let r = cfg.object_radius;
        let objects = cfg
            .colors
            .iter()
            .enumerate()
            .map(|(i, &class)| {
                let theta = object_angle(i, n);
                let (s, c) = theta.sin_cos();
                let (x, y) = (cfg.ring_radius * c, cfg.ring_radius * s);
                let yaw = rng.random::<f64>() * FRAC_PI_2;
                let prim = match shape.for_object(i) {
                    Shape::Sphere => Primitive::Sphere {
                        center: Vec3::new(x, y, r),
                        radius: r,
                    },
                    Shape::Cylinder => Primitive::Cylinder {
                        base: Vec3::new(x, y, 0.0),
                        radius: r,
                        height: 2.0 * r,
                    },
                    Shape::Cube | Shape::Mixed => Primitive::Cube {
                        center: Vec3::new(x, y, r),
                        half: r,
                        yaw,
                    },
                };
                Object {
                    prim,
                    class,
                    albedo: palette::WHEEL[class as usize].rgb,
                }
            })
            .collect();
        Self {
            objects,
            ambient: cfg.ambient,
            floor_albedo: cfg.floor_albedo,
        }
    }

    fn trace(&self, o: Vec3, d: Vec3, t_max: f64) -> Option<(f64, Vec3, Surface)> {
        let mut best: Option<(f64, Vec3, Surface)> = None;
        for (i, obj) in self.objects.iter().enumerate() {
            if let Some(h) = obj.prim.intersect(o, d) {
                if h.t < t_max && best.as_ref().is_none_or(|b| h.t < b.0) {
                    best = Some((h.t, h.normal, Surface::Object(i)));
                }
            }
        }
        if d.z() < 0.0 {
            let t = -o.z() / d.z();
            if t > EPS && t < t_max && best.as_ref().is_none_or(|b| t < b.0) {
                best = Some((t, Vec3::new(0.0, 0.0, 1.0), Surface::Floor));
            }
        }
        best
    }

    fn occluded(&self, p: Vec3, to_light: Vec3, dist: f64) -> bool {
        self.trace(p, to_light, dist).is_some()
    }

    /// Ambient plus the unshadowed Lambertian term of every light.
    fn shade(&self, p: Vec3, n: Vec3, lights: &[LightState]) -> f64 {
        let origin = p + n * 1e-6;
        let mut s = self.ambient;
        for light in lights {
            let (l, dist, intensity) = match *light {
                LightState::Directional {
                    to_light,
                    intensity,
                    ..
                } => (to_light, f64::INFINITY, intensity),
                LightState::Point {
                    position,
                    intensity,
                    ..
                } => {
                    let v = position - p;
                    let dist = v.length();
                    (v * (1.0 / dist), dist, intensity)
                }
            };
            let ndotl = n.dot(l);
            if ndotl > 0.0 && !self.occluded(origin, l, dist) {
                s += intensity * ndotl;
            }
        }
        s
    }
}

/// Angular position of object `i` on the ring.
pub fn object_angle(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

fn object_center(cfg: &SceneConfig, i: usize) -> Vec3 {
    let (s, c) = object_angle(i, cfg.n_objects()).sin_cos();
    Vec3::new(cfg.ring_radius * c, cfg.ring_radius * s, cfg.object_radius)
}

/// Pose on the orbit at `angle`, looking at the nearest object.
pub fn camera_at(cfg: &SceneConfig, angle: f64) -> CameraPose {
    let (s, c) = angle.sin_cos();
    let position = Vec3::new(
        cfg.camera.orbit_radius * c,
        cfg.camera.orbit_radius * s,
        cfg.camera.height,
    );
    let target = (0..cfg.n_objects())
        .map(|i| object_center(cfg, i))
        .min_by(|a, b| {
            (*a - position)
                .length()
                .partial_cmp(&(*b - position).length())
                .expect("finite distances")
        })
        .expect("validated non-empty");
    CameraPose { position, target }
}

/// Stations x shape variants x light states, in a fixed order.
pub fn enumerate_configs(cfg: &SceneConfig) -> Result<Vec<RenderJob>> {
    cfg.validate()?;
    let mut states: Vec<Vec<LightState>> = Vec::new();
    for spec in &cfg.lights {
        states.extend(spec.states()?.into_iter().map(|s| vec![s]));
    }
    if states.is_empty() {
        states.push(Vec::new());
    }
    let n = cfg.camera.n_stations;
    let mut jobs = Vec::new();
    for &shape in &cfg.shapes {
        for station in 0..n {
            let camera = camera_at(cfg, TAU * station as f64 / n as f64);
            for lights in &states {
                jobs.push(RenderJob {
                    index: jobs.len(),
                    shape,
                    station,
                    camera,
                    lights: lights.clone(),
                });
            }
        }
    }
    Ok(jobs)
}

/// Renders one job: pinhole primary rays, nearest hit, Lambertian plus
/// ambient with hard shadows. Sky is black, floor gray; both labeled
/// background.
pub fn render(cfg: &SceneConfig, job: &RenderJob) -> (RasterImage, LabelMap) {
    let scene = Scene::new(cfg, job.shape);
    render_scene(&scene, &cfg.camera, job)
}

fn render_scene(scene: &Scene, cam: &CameraConfig, job: &RenderJob) -> (RasterImage, LabelMap) {
    let (w, h) = (cam.width, cam.height_px);
    let forward = (job.camera.target - job.camera.position).normalized();
    let up_world = Vec3::new(0.0, 0.0, 1.0);
    let mut right = forward.cross(up_world);
    if right.length() < 1e-12 {
        right = Vec3::new(1.0, 0.0, 0.0);
    }
    let right = right.normalized();
    let up = right.cross(forward);
    let half_w = (cam.fov_deg.to_radians() / 2.0).tan();
    let half_h = half_w * h as f64 / w as f64;

    let rows: Vec<(Vec<u8>, Vec<u8>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut rgb = Vec::with_capacity(w * 3);
            let mut labels = Vec::with_capacity(w);
            for x in 0..w {
                let sx = (2.0 * (x as f64 + 0.5) / w as f64 - 1.0) * half_w;
                let sy = (1.0 - 2.0 * (y as f64 + 0.5) / h as f64) * half_h;
                let dir = (forward + right * sx + up * sy).normalized();
                let (px, label) = match scene.trace(job.camera.position, dir, f64::INFINITY) {
                    None => ([0, 0, 0], BACKGROUND),
                    Some((t, n, surface)) => {
                        let p = job.camera.position + dir * t;
                        let (albedo, label) = match surface {
                            Surface::Object(i) => (scene.objects[i].albedo, scene.objects[i].class),
                            Surface::Floor => (scene.floor_albedo, BACKGROUND),
                        };
                        let s = scene.shade(p, n, &job.lights);
                        (shade_albedo(albedo, s), label)
                    }
                };
                rgb.extend_from_slice(&px);
                labels.push(label);
            }
            (rgb, labels)
        })
        .collect();

    let mut data = Vec::with_capacity(w * h * 3);
    let mut labels = Vec::with_capacity(w * h);
    for (r, l) in rows {
        data.extend(r);
        labels.extend(l);
    }
    (
        RasterImage::new(w, h, data).expect("sized from camera"),
        LabelMap::new(w, h, labels).expect("sized from camera"),
    )
}

/// `albedo * shade`, clamped to 8 bits.
#[inline]
pub fn shade_albedo(albedo: [u8; 3], shade: f64) -> [u8; 3] {
    albedo.map(|a| ((a as f64 / 255.0 * shade).clamp(0.0, 1.0) * 255.0).round() as u8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stem: String,
    pub image: String,
    pub label: String,
    pub job: RenderJob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SceneConfig,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Renders every job into `out_dir` and writes `manifest.json`.
pub fn generate_dataset(cfg: &SceneConfig, out_dir: &Path) -> Result<Manifest> {
    let jobs = enumerate_configs(cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scenes: Vec<Scene> = cfg.shapes.iter().map(|&s| Scene::new(cfg, s)).collect();
    let entries = jobs
        .into_par_iter()
        .map(|job| {
            let variant = cfg
                .shapes
                .iter()
                .position(|&s| s == job.shape)
                .expect("job shape from config");
            let (img, labels) = render_scene(&scenes[variant], &cfg.camera, &job);
            let stem = format!("{:04}", job.index);
            let image = format!("{stem}_img.png");
            let label = format!("{stem}_label.png");
            img.save_png(&out_dir.join(&image))?;
            labels.save_png(&out_dir.join(&label))?;
            Ok(ManifestEntry {
                stem,
                image,
                label,
                job,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        config: cfg.clone(),
        entries,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// One template per object, cut from a rendering with the camera facing
/// that object under the first light state (first shape variant).
pub fn reference_templates(cfg: &SceneConfig) -> Result<Vec<Template>> {
    let jobs = enumerate_configs(cfg)?;
    let lights = jobs[0].lights.clone();
    let shape = cfg.shapes[0];
    let scene = Scene::new(cfg, shape);
    let mut out: Vec<Template> = Vec::new();
    for (i, &class) in cfg.colors.iter().enumerate() {
        if out.iter().any(|t| t.color_class == class) {
            continue;
        }
        let job = RenderJob {
            index: 0,
            shape,
            station: 0,
            camera: camera_at(cfg, object_angle(i, cfg.n_objects())),
            lights: lights.clone(),
        };
        let (img, labels) = render_scene(&scene, &cfg.camera, &job);
        out.push(Template::cut(&img, &labels, class)?);
    }
    out.sort_by_key(|t| t.color_class);
    Ok(out)
}
