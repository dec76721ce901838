//! Grid-world visual search. An agent with a cone-shaped view greedily picks
//! viewpoints that either reveal unseen cells or bring color matches for the
//! target within detection range.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::colorspace::{convert_rgb8, range_of, ColorSpaceId};
use crate::detect::{bin_index, build_histogram, color_checker, Bins, Histogram3D};
use crate::error::{Error, Result};
use crate::palette::{self, CLASS_COUNT};

/// Heading `h` points at angle `h * 45°`, x to the right, y down.
pub const HEADINGS: usize = 8;
const DIRS: [(i32, i32); HEADINGS] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Obstacle,
    Object { class: u8, target: bool },
}

impl Cell {
    fn blocks_sight(self) -> bool {
        !matches!(self, Cell::Free)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LegendEntry {
    Kind(LegendKind),
    Object {
        class: String,
        #[serde(default)]
        target: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegendKind {
    Free,
    Obstacle,
}

fn default_exposure() -> f64 {
    2.0 / 3.0
}

fn default_noise() -> [f64; 2] {
    [0.5, 1.5]
}

/// On-disk world description: grid rows plus a character legend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub rows: Vec<String>,
    pub legend: BTreeMap<char, LegendEntry>,
    #[serde(default)]
    pub seed: u64,
    /// Scales palette colors before noise so noisy cells stay below 255.
    #[serde(default = "default_exposure")]
    pub exposure: f64,
    /// Per-cell multiplicative brightness range; `[1, 1]` disables noise.
    #[serde(default = "default_noise")]
    pub noise: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
    /// Observed RGB per cell; meaningful for object cells only.
    pub colors: Vec<[u8; 3]>,
    pub seed: u64,
    target: usize,
}

impl World {
    pub fn new(
        width: usize,
        height: usize,
        cells: Vec<Cell>,
        exposure: f64,
        noise: [f64; 2],
        seed: u64,
    ) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::InvalidWorld(format!(
                "{} cells for a {width}x{height} grid",
                cells.len()
            )));
        }
        let finite = exposure.is_finite() && noise.iter().all(|n| n.is_finite());
        if !finite || exposure <= 0.0 || noise[0] <= 0.0 || noise[0] > noise[1] {
            return Err(Error::InvalidWorld(format!(
                "bad exposure {exposure} or noise {noise:?}"
            )));
        }
        let targets: Vec<usize> = (0..cells.len())
            .filter(|&i| matches!(cells[i], Cell::Object { target: true, .. }))
            .collect();
        let [target] = targets[..] else {
            return Err(Error::InvalidWorld(format!(
                "expected exactly one target, found {}",
                targets.len()
            )));
        };
        for c in &cells {
            if let Cell::Object { class, .. } = c {
                palette::color(*class)
                    .map_err(|_| Error::InvalidWorld(format!("bad class {class}")))?;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let colors = cells
            .iter()
            .map(|c| match c {
                Cell::Object { class, .. } => {
                    let k = exposure * rng.random_range(noise[0]..=noise[1]);
                    palette::WHEEL[*class as usize]
                        .rgb
                        .map(|v| (v as f64 * k).round().clamp(0.0, 255.0) as u8)
                }
                _ => [0, 0, 0],
            })
            .collect();
        let world = Self {
            width,
            height,
            cells,
            colors,
            seed,
            target,
        };
        if !world
            .neighbors4(target)
            .any(|n| world.cells[n] == Cell::Free)
        {
            return Err(Error::InvalidWorld("target has no free neighbor".into()));
        }
        Ok(world)
    }

    pub fn from_spec(spec: &WorldSpec) -> Result<Self> {
        let height = spec.rows.len();
        let width = spec.rows.first().map_or(0, |r| r.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (y, row) in spec.rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::InvalidWorld(format!(
                    "row {y} has a different width"
                )));
            }
            for ch in row.chars() {
                let entry = spec.legend.get(&ch).ok_or_else(|| {
                    Error::InvalidWorld(format!("character `{ch}` missing from legend"))
                })?;
                cells.push(match entry {
                    LegendEntry::Kind(LegendKind::Free) => Cell::Free,
                    LegendEntry::Kind(LegendKind::Obstacle) => Cell::Obstacle,
                    LegendEntry::Object { class, target } => Cell::Object {
                        class: palette::parse_class(class)
                            .map_err(|e| Error::InvalidWorld(e.to_string()))?,
                        target: *target,
                    },
                });
            }
        }
        Self::new(width, height, cells, spec.exposure, spec.noise, spec.seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: WorldSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_spec(&spec)
    }

    /// 20x20 four-room office. The seed picks the target class, shuffles
    /// objects over fixed slots (including the two wheel neighbors of the
    /// target as distractors), and draws the brightness noise.
    pub fn benchmark(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EA4_C4B0);
        let target_class = BENCHMARK_TARGETS[(seed % BENCHMARK_TARGETS.len() as u64) as usize];
        let mut slots = BENCHMARK_SLOTS.to_vec();
        slots.shuffle(&mut rng);
        let near = |d: i32| ((target_class as i32 + d).rem_euclid(CLASS_COUNT as i32)) as u8;
        let mut classes = vec![near(1), near(-1)];
        let mut others: Vec<u8> = (0..CLASS_COUNT as u8)
            .filter(|c| *c != target_class && !classes.contains(c))
            .collect();
        others.shuffle(&mut rng);
        classes.extend(others.into_iter().take(BENCHMARK_DISTRACTORS - 2));

        let mut cells: Vec<Cell> = BENCHMARK_MAP
            .iter()
            .flat_map(|r| r.bytes())
            .map(|b| {
                if b == b'#' {
                    Cell::Obstacle
                } else {
                    Cell::Free
                }
            })
            .collect();
        let at = |(x, y): (usize, usize)| y * BENCHMARK_SIZE + x;
        cells[at(slots[0])] = Cell::Object {
            class: target_class,
            target: true,
        };
        for (slot, &class) in slots[1..].iter().zip(&classes) {
            cells[at(*slot)] = Cell::Object {
                class,
                target: false,
            };
        }
        World::new(
            BENCHMARK_SIZE,
            BENCHMARK_SIZE,
            cells,
            default_exposure(),
            default_noise(),
            rng.random(),
        )
        .expect("benchmark layout is valid")
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn target_class(&self) -> u8 {
        match self.cells[self.target] {
            Cell::Object { class, .. } => class,
            _ => unreachable!("target index always holds an object"),
        }
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    fn neighbors4(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.coords(i);
        [(0i32, -1i32), (-1, 0), (1, 0), (0, 1)]
            .into_iter()
            .filter_map(move |(dx, dy)| {
                let nx = x as i32 + dx;
                let ny = y as i32 + dy;
                (nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height)
                    .then(|| self.index(nx as usize, ny as usize))
            })
    }

    /// Bresenham line of sight; only cells strictly between the endpoints
    /// can block.
    pub fn line_of_sight(&self, from: usize, to: usize) -> bool {
        let (x0, y0) = self.coords(from);
        let (x1, y1) = self.coords(to);
        let (mut x, mut y) = (x0 as i64, y0 as i64);
        let (x1, y1) = (x1 as i64, y1 as i64);
        let dx = (x1 - x).abs();
        let dy = -(y1 - y).abs();
        let sx = if x < x1 { 1 } else { -1 };
        let sy = if y < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            if (x, y) == (x1, y1) {
                return true;
            }
            if (x, y) != (x0 as i64, y0 as i64)
                && self.cells[self.index(x as usize, y as usize)].blocks_sight()
            {
                return false;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        ((ax as f64 - bx as f64).powi(2) + (ay as f64 - by as f64).powi(2)).sqrt()
    }

    /// Breadth-first distances over free cells, 4-connected; `u32::MAX`
    /// where unreachable.
    pub fn bfs(&self, from: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.cells.len()];
        let mut queue = VecDeque::from([from]);
        dist[from] = 0;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors4(c) {
                if self.cells[n] == Cell::Free && dist[n] == u32::MAX {
                    dist[n] = dist[c] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Shortest free-cell path from `from` to `to`, both ends included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let dist = self.bfs(to);
        if dist[from] == u32::MAX {
            return None;
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self
                .neighbors4(cur)
                .find(|&n| dist[n] == dist[cur] - 1)
                .expect("bfs gradient leads to goal");
            path.push(cur);
        }
        Some(path)
    }
}

const BENCHMARK_SIZE: usize = 20;
const BENCHMARK_DISTRACTORS: usize = 7;
const BENCHMARK_TARGETS: [u8; 6] = [8, 4, 6, 10, 0, 2];

const BENCHMARK_MAP: [&str; BENCHMARK_SIZE] = [
    "####################",
    "#........#.........#",
    "#........#.........#",
    "#........#.........#",
    "#........#.........#",
    "#..................#",
    "#........#.........#",
    "#........#.........#",
    "###.######.####.####",
    "#..................#",
    "#..................#",
    "#.....##....##.....#",
    "#.....##....##.....#",
    "#..................#",
    "#..................#",
    "#.......#..#.......#",
    "#.......#..#.......#",
    "#.......#..#.......#",
    "#.......#..#.......#",
    "####################",
];

/// Object positions `(x, y)` along room walls, clear of doorways.
const BENCHMARK_SLOTS: [(usize, usize); 12] = [
    (1, 1),
    (8, 3),
    (1, 7),
    (18, 1),
    (10, 6),
    (18, 7),
    (1, 10),
    (18, 10),
    (9, 14),
    (1, 18),
    (7, 17),
    (18, 18),
];

/// Fixed starting cells for the benchmark world.
pub const BENCHMARK_STARTS: [(usize, usize); 4] = [(4, 4), (14, 3), (4, 13), (15, 15)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Weight on similarity mass.
    pub alpha: f64,
    /// Weight on the unseen fraction of the view.
    pub beta: f64,
    pub fov_deg: f64,
    pub view_range: f64,
    pub detect_range: f64,
    pub max_steps: usize,
    pub bins: Bins,
    /// Benchmark world seeds `0..seeds`.
    pub seeds: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
            fov_deg: 90.0,
            view_range: 7.0,
            detect_range: 2.0,
            max_steps: 400,
            bins: Bins::ALL[0],
            seeds: 50,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && self.fov_deg > 0.0
            && self.fov_deg <= 360.0
            && self.view_range > 0.0
            && self.detect_range > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid search parameters {self:?}")));
        }
        Ok(())
    }

    pub fn uninformed(&self) -> Self {
        Self {
            alpha: 0.0,
            ..*self
        }
    }
}

/// Per-pose visible cells, precomputed once per world and sensor.
#[derive(Debug, Clone)]
pub struct ViewCache {
    /// `cone[cell * 8 + heading]`: cells inside the view cone with clear sight.
    cone: Vec<Vec<u32>>,
    /// `near[cell]`: cells within detection range with clear sight.
    near: Vec<Vec<u32>>,
}

impl ViewCache {
    pub fn new(world: &World, cfg: &SearchConfig) -> Self {
        let n = world.cells.len();
        let half_fov = cfg.fov_deg.to_radians() / 2.0;
        let reach = cfg.view_range.max(cfg.detect_range).ceil() as i64;
        let mut cone = vec![Vec::new(); n * HEADINGS];
        let mut near = vec![Vec::new(); n];
        for c in (0..n).filter(|&c| world.cells[c] == Cell::Free) {
            let (cx, cy) = world.coords(c);
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                    if (dx, dy) == (0, 0)
                        || x < 0
                        || y < 0
                        || x >= world.width as i64
                        || y >= world.height as i64
                    {
                        continue;
                    }
                    let v = world.index(x as usize, y as usize);
                    let d = world.distance(c, v);
                    if d > cfg.view_range && d > cfg.detect_range {
                        continue;
                    }
                    if !world.line_of_sight(c, v) {
                        continue;
                    }
                    if d <= cfg.detect_range {
                        near[c].push(v as u32);
                    }
                    if d <= cfg.view_range {
                        let angle = (dy as f64).atan2(dx as f64);
                        for h in 0..HEADINGS {
                            let diff = angle_diff(angle, h as f64 * PI / 4.0);
                            if diff <= half_fov + 1e-9 {
                                cone[c * HEADINGS + h].push(v as u32);
                            }
                        }
                    }
                }
            }
        }
        Self { cone, near }
    }

    pub fn visible(&self, cell: usize, heading: usize) -> &[u32] {
        &self.cone[cell * HEADINGS + heading]
    }

    pub fn near(&self, cell: usize) -> &[u32] {
        &self.near[cell]
    }
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub cell: usize,
    pub heading: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub position: usize,
    pub heading: usize,
    pub fov: f64,
    pub view_range: f64,
    /// Cells that have entered the view cone at least once.
    pub visited: Vec<bool>,
    /// Last observed similarity per cell; 0 until observed.
    pub similarity: Vec<f64>,
    /// Cells already inspected from within detection range.
    pub resolved: Vec<bool>,
    pub step_count: usize,
}

impl AgentState {
    pub fn new(world: &World, cfg: &SearchConfig, start: usize, heading: usize) -> Result<Self> {
        if world.cells.get(start) != Some(&Cell::Free) {
            return Err(Error::InvalidWorld(format!(
                "start cell {:?} is not free",
                world.coords(start)
            )));
        }
        let n = world.cells.len();
        Ok(Self {
            position: start,
            heading: heading % HEADINGS,
            fov: cfg.fov_deg.to_radians(),
            view_range: cfg.view_range,
            visited: vec![false; n],
            similarity: vec![0.0; n],
            resolved: vec![false; n],
            step_count: 0,
        })
    }
}

/// Backprojection ratio of every cell's color in the target histogram.
/// Free and obstacle cells score 0.
pub fn similarity_field(world: &World, space: ColorSpaceId, hist: &Histogram3D) -> Vec<f64> {
    let range = range_of(space);
    world
        .cells
        .iter()
        .zip(&world.colors)
        .map(|(c, &rgb)| match c {
            Cell::Object { .. } => {
                hist.ratio(bin_index(&range, hist.bins(), convert_rgb8(space, rgb)))
            }
            _ => 0.0,
        })
        .collect()
}

/// Target histogram from the flat color-checker patch of `class`.
pub fn target_histogram(class: u8, space: ColorSpaceId, bins: Bins) -> Result<Histogram3D> {
    let tpl = color_checker()
        .into_iter()
        .find(|t| t.color_class == class)
        .ok_or_else(|| Error::Config(format!("no template for class {class}")))?;
    build_histogram(&tpl, space, bins)
}

/// Reveals the current view: returns `(cell, similarity)` for each visible
/// cell, marks them visited, and resolves everything within detection range.
pub fn observe(field: &[f64], cache: &ViewCache, agent: &mut AgentState) -> Vec<(usize, f64)> {
    let seen: Vec<(usize, f64)> = cache
        .visible(agent.position, agent.heading)
        .iter()
        .map(|&v| (v as usize, field[v as usize]))
        .collect();
    for &(v, s) in &seen {
        agent.visited[v] = true;
        agent.similarity[v] = s;
    }
    for &v in cache.near(agent.position) {
        agent.resolved[v as usize] = true;
        agent.visited[v as usize] = true;
        agent.similarity[v as usize] = field[v as usize];
    }
    seen
}

/// Utility of every reachable pose; `None` for unreachable cells.
///
/// `(alpha * S + beta * U) / (1 + travel)`, where `S` sums the similarity of
/// unresolved observed cells within detection range of the pose and `U` is
/// the unseen fraction of the pose's view cone.
pub fn utilities(
    world: &World,
    cache: &ViewCache,
    agent: &AgentState,
    cfg: &SearchConfig,
) -> Vec<Option<f64>> {
    let dist = world.bfs(agent.position);
    let mut out = vec![None; world.cells.len() * HEADINGS];
    for c in 0..world.cells.len() {
        if dist[c] == u32::MAX {
            continue;
        }
        let s: f64 = cache
            .near(c)
            .iter()
            .map(|&v| v as usize)
            .filter(|&v| !agent.resolved[v])
            .map(|v| agent.similarity[v])
            .sum();
        let travel = 1.0 + dist[c] as f64;
        for h in 0..HEADINGS {
            let vis = cache.visible(c, h);
            let u = if vis.is_empty() {
                0.0
            } else {
                vis.iter().filter(|&&v| !agent.visited[v as usize]).count() as f64
                    / vis.len() as f64
            };
            out[c * HEADINGS + h] = Some((cfg.alpha * s + cfg.beta * u) / travel);
        }
    }
    out
}

/// Highest-utility pose; ties go to the lowest `cell * 8 + heading`.
pub fn plan_next(
    world: &World,
    cache: &ViewCache,
    agent: &AgentState,
    cfg: &SearchConfig,
) -> Result<Pose> {
    let util = utilities(world, cache, agent, cfg);
    let mut best: Option<(usize, f64)> = None;
    for (i, u) in util.iter().enumerate() {
        if let Some(u) = *u {
            if u > 0.0 && best.is_none_or(|(_, b)| u > b) {
                best = Some((i, u));
            }
        }
    }
    let (i, _) = best.ok_or(Error::NoCandidates)?;
    Ok(Pose {
        cell: i / HEADINGS,
        heading: i % HEADINGS,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub found: bool,
    pub steps: usize,
    pub space: ColorSpaceId,
    pub trajectory: Vec<(usize, usize)>,
}

fn heading_between(world: &World, from: usize, to: usize) -> usize {
    let (fx, fy) = world.coords(from);
    let (tx, ty) = world.coords(to);
    let d = (tx as i32 - fx as i32, ty as i32 - fy as i32);
    DIRS.iter().position(|&x| x == d).expect("adjacent cells")
}

/// Observe, plan, and walk until the target is within detection range with
/// clear sight, no candidate remains, or `max_steps` is reached.
pub fn run_search(
    world: &World,
    cache: &ViewCache,
    cfg: &SearchConfig,
    space: ColorSpaceId,
    start: usize,
    seed: u64,
) -> Result<SearchResult> {
    cfg.validate()?;
    let hist = target_histogram(world.target_class(), space, cfg.bins)?;
    let field = similarity_field(world, space, &hist);
    let heading = ChaCha8Rng::seed_from_u64(seed).random_range(0..HEADINGS);
    let mut agent = AgentState::new(world, cfg, start, heading)?;
    let mut trajectory = vec![start];
    let found_at = |pos: usize| cache.near(pos).contains(&(world.target() as u32));

    observe(&field, cache, &mut agent);
    let mut found = found_at(start);
    'search: while !found && agent.step_count < cfg.max_steps {
        let goal = match plan_next(world, cache, &agent, cfg) {
            Ok(p) => p,
            Err(Error::NoCandidates) => break,
            Err(e) => return Err(e),
        };
        let path = world
            .path(agent.position, goal.cell)
            .ok_or_else(|| Error::Invariant("planned pose is unreachable".into()))?;
        for w in path.windows(2) {
            agent.heading = heading_between(world, w[0], w[1]);
            agent.position = w[1];
            agent.step_count += 1;
            trajectory.push(w[1]);
            observe(&field, cache, &mut agent);
            found = found_at(agent.position);
            if found || agent.step_count >= cfg.max_steps {
                break 'search;
            }
        }
        agent.heading = goal.heading;
        observe(&field, cache, &mut agent);
    }
    Ok(SearchResult {
        found,
        steps: agent.step_count,
        space,
        trajectory: trajectory.into_iter().map(|c| world.coords(c)).collect(),
    })
}

/// One benchmark trial: world and initial heading both derive from `seed`.
pub fn benchmark_trial(
    cfg: &SearchConfig,
    space: ColorSpaceId,
    seed: u64,
    start: usize,
) -> Result<SearchResult> {
    let world = World::benchmark(seed);
    let cache = ViewCache::new(&world, cfg);
    let (x, y) = BENCHMARK_STARTS[start];
    run_search(&world, &cache, cfg, space, world.index(x, y), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::Space;

    fn legend() -> BTreeMap<char, LegendEntry> {
        BTreeMap::from([
            ('.', LegendEntry::Kind(LegendKind::Free)),
            ('#', LegendEntry::Kind(LegendKind::Obstacle)),
            (
                'T',
                LegendEntry::Object {
                    class: "b".into(),
                    target: true,
                },
            ),
            (
                'd',
                LegendEntry::Object {
                    class: "vb".into(),
                    target: false,
                },
            ),
        ])
    }

    fn world(rows: &[&str]) -> World {
        World::from_spec(&WorldSpec {
            rows: rows.iter().map(|s| s.to_string()).collect(),
            legend: legend(),
            seed: 1,
            exposure: 2.0 / 3.0,
            noise: [0.5, 1.5],
        })
        .unwrap()
    }

    fn c1() -> ColorSpaceId {
        ColorSpaceId::original(Space::C1C2C3)
    }

    #[test]
    fn world_requires_single_target() {
        let spec = WorldSpec {
            rows: vec!["...".into()],
            legend: legend(),
            seed: 0,
            exposure: 1.0,
            noise: [1.0, 1.0],
        };
        assert!(matches!(
            World::from_spec(&spec),
            Err(Error::InvalidWorld(_))
        ));
    }

    #[test]
    fn world_json_round_trip() {
        let text = r##"{"rows": ["#T.", "..."], "legend": {"#": "obstacle", ".": "free", "T": {"class": "b", "target": true}}}"##;
        let spec: WorldSpec = serde_json::from_str(text).unwrap();
        let w = World::from_spec(&spec).unwrap();
        assert_eq!(w.target(), 1);
        assert_eq!(w.target_class(), 8);
    }

    #[test]
    fn target_in_clear_view_has_similarity_one() {
        let w = world(&[".....", ".....", "....T"]);
        let hist = target_histogram(8, c1(), Bins::ALL[0]).unwrap();
        let field = similarity_field(&w, c1(), &hist);
        assert_eq!(field[w.target()], 1.0);
        assert!(field
            .iter()
            .enumerate()
            .all(|(i, &s)| i == w.target() || s == 0.0));
    }

    #[test]
    fn free_region_observes_zero() {
        let w = world(&["......", "......", "#####T"]);
        let cfg = SearchConfig::default();
        let cache = ViewCache::new(&w, &cfg);
        let hist = target_histogram(8, c1(), Bins::ALL[0]).unwrap();
        let field = similarity_field(&w, c1(), &hist);
        let mut agent = AgentState::new(&w, &cfg, 0, 0).unwrap();
        let seen = observe(&field, &cache, &mut agent);
        assert!(!seen.is_empty());
        assert!(seen.iter().all(|&(_, s)| s == 0.0));
    }

    #[test]
    fn distractor_lookup_matches_hand_quantization() {
        // vb cell against a blue template at 16 bins in RGB. Blue quantizes
        // to (0, 0, 15); the distractor's own bin is occupied only if it
        // matches, so its similarity is 0.
        let w = world(&["T.d"]);
        let id = ColorSpaceId::original(Space::Rgb);
        let hist = target_histogram(8, id, Bins::ALL[0]).unwrap();
        let field = similarity_field(&w, id, &hist);
        let d = w.colors[2];
        let q = |v: u8| ((v as f64 / 255.0 * 16.0) as usize).min(15);
        let expected = if (q(d[0]), q(d[1]), q(d[2])) == (0, 0, 15) {
            1.0
        } else {
            0.0
        };
        assert_eq!(field[2], expected);
    }

    #[test]
    fn bresenham_blocks_behind_walls() {
        let w = world(&["..#..", ".....", "....T"]);
        assert!(!w.line_of_sight(0, 4));
        assert!(w.line_of_sight(0, 10));
    }

    #[test]
    fn single_candidate_is_chosen() {
        // Only cell (0, 0) is free; every heading but one sees nothing new.
        let w = world(&[".T"]);
        let cfg = SearchConfig::default();
        let cache = ViewCache::new(&w, &cfg);
        let agent = AgentState::new(&w, &cfg, 0, 4).unwrap();
        let pose = plan_next(&w, &cache, &agent, &cfg).unwrap();
        assert_eq!(pose.cell, 0);
    }

    #[test]
    fn similarity_beats_equal_exploration() {
        let w = world(&[".....", ".....", "T...d"]);
        let cfg = SearchConfig::default();
        let cache = ViewCache::new(&w, &cfg);
        let mut agent = AgentState::new(&w, &cfg, w.index(4, 0), 0).unwrap();
        agent.visited.iter_mut().for_each(|v| *v = true);
        agent.similarity[w.target()] = 1.0;
        let pose = plan_next(&w, &cache, &agent, &cfg).unwrap();
        assert!(w.distance(pose.cell, w.target()) <= cfg.detect_range);
    }

    #[test]
    fn no_candidates_when_all_known() {
        let w = world(&["..T"]);
        let cfg = SearchConfig::default();
        let cache = ViewCache::new(&w, &cfg);
        let mut agent = AgentState::new(&w, &cfg, 0, 0).unwrap();
        agent.visited.iter_mut().for_each(|v| *v = true);
        agent.resolved.iter_mut().for_each(|v| *v = true);
        assert!(matches!(
            plan_next(&w, &cache, &agent, &cfg),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn adjacent_target_found_immediately() {
        let w = world(&["#####", "#.T.#", "#...#", "#####"]);
        let cfg = SearchConfig::default();
        let cache = ViewCache::new(&w, &cfg);
        let r = run_search(&w, &cache, &cfg, c1(), w.index(1, 1), 3).unwrap();
        assert!(r.found);
        assert_eq!(r.steps, 0);
        assert_eq!(r.trajectory.len(), r.steps + 1);
    }

    #[test]
    fn enclosed_target_not_found() {
        let w = world(&["......#.T", "......###", "........."]);
        let cfg = SearchConfig {
            max_steps: 30,
            ..Default::default()
        };
        let cache = ViewCache::new(&w, &cfg);
        let r = run_search(&w, &cache, &cfg, c1(), 0, 0).unwrap();
        assert!(!r.found);
        assert!(r.steps <= 30);
    }

    #[test]
    fn trajectory_is_connected_free_path() {
        let cfg = SearchConfig::default();
        let r = benchmark_trial(&cfg, c1(), 5, 2).unwrap();
        let w = World::benchmark(5);
        assert_eq!(r.steps + 1, r.trajectory.len());
        for pair in r.trajectory.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            assert_eq!(a.0.abs_diff(b.0) + a.1.abs_diff(b.1), 1);
            assert_eq!(w.cells[w.index(b.0, b.1)], Cell::Free);
        }
    }

    #[test]
    fn benchmark_is_deterministic_and_valid() {
        for seed in 0..12 {
            let a = World::benchmark(seed);
            assert_eq!(a, World::benchmark(seed));
            for (x, y) in BENCHMARK_STARTS {
                assert_eq!(a.cells[a.index(x, y)], Cell::Free);
                let dist = a.bfs(a.index(x, y));
                assert!(a.neighbors4(a.target()).any(|n| dist[n] != u32::MAX));
            }
        }
    }
}
