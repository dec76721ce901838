use proptest::prelude::*;

use chromaprobe::cluster::{self, ClusterResult, KMeansOptions, Point};
use chromaprobe::colorspace::{
    convert_pixel, convert_rgb8, invert_pixel, normalize_rgb, range_of, to_space, ColorSpaceId,
    Space,
};
use chromaprobe::detect::{binarize, build_histogram, score, Bins, QuantizedImage, Template};
use chromaprobe::raster::{LabelMap, RasterImage};
use chromaprobe::searchsim::{
    observe, plan_next, AgentState, SearchConfig, ViewCache, World, BENCHMARK_STARTS,
};

const INVERTIBLE: [Space; 8] = [
    Space::Xyz,
    Space::Yiq,
    Space::Yuv,
    Space::YCrCb,
    Space::I1I2I3,
    Space::Opp,
    Space::Cmy,
    Space::Yes,
];

fn any_space() -> impl Strategy<Value = Space> {
    proptest::sample::select(Space::evaluated().to_vec())
}

fn any_id() -> impl Strategy<Value = ColorSpaceId> {
    proptest::sample::select(ColorSpaceId::sweep())
}

fn unit_rgb() -> impl Strategy<Value = [f64; 3]> {
    [0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64]
}

proptest! {
    #[test]
    fn invariant_spaces_ignore_intensity_scaling(
        space in proptest::sample::select(vec![Space::C1C2C3, Space::Rg, Space::Nopp]),
        rgb in [0.01..=1.0f64, 0.01..=1.0f64, 0.01..=1.0f64],
        k in 0.05..1.0f64,
    ) {
        let a = convert_pixel(space, rgb);
        let b = convert_pixel(space, rgb.map(|c| c * k));
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() < 1e-9, "{space}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn normalization_is_idempotent(rgb in [0.0..=255.0f64, 0.0..=255.0f64, 0.0..=255.0f64]) {
        let once = normalize_rgb(rgb);
        let twice = normalize_rgb(once);
        for c in 0..3 {
            prop_assert!((once[c] - twice[c]).abs() < 1e-12);
        }
        prop_assert!((once.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_spaces_round_trip(space in proptest::sample::select(INVERTIBLE.to_vec()), rgb in unit_rgb()) {
        let back = invert_pixel(space, convert_pixel(space, rgb)).expect("invertible space");
        for c in 0..3 {
            prop_assert!((back[c] - rgb[c]).abs() <= 1.0 / 255.0, "{space}: {rgb:?} -> {back:?}");
        }
    }

    #[test]
    fn conversions_stay_in_declared_range(id in any_id(), rgb in any::<[u8; 3]>()) {
        let v = convert_rgb8(id, rgb);
        prop_assert!(range_of(id).contains(v), "{id}: {rgb:?} -> {v:?}");
    }

    #[test]
    fn conversion_is_deterministic(id in any_id(), rgb in any::<[u8; 3]>()) {
        prop_assert_eq!(convert_rgb8(id, rgb), convert_rgb8(id, rgb));
    }

    #[test]
    fn score_matches_brute_force(
        pairs in proptest::collection::vec((any::<bool>(), 0u8..4), 1..200),
        class in 0u8..4,
    ) {
        let n = pairs.len();
        let mask = chromaprobe::detect::Mask { width: n, height: 1, bits: pairs.iter().map(|p| p.0).collect() };
        let truth = LabelMap::new(n, 1, pairs.iter().map(|p| p.1).collect()).unwrap();
        let s = score(&mask, &truth, class).unwrap();
        let tp = pairs.iter().filter(|p| p.0 && p.1 == class).count() as u64;
        let fp = pairs.iter().filter(|p| p.0 && p.1 != class).count() as u64;
        let fn_ = pairs.iter().filter(|p| !p.0 && p.1 == class).count() as u64;
        prop_assert_eq!((s.true_pos, s.false_pos, s.false_neg), (tp, fp, fn_));
        prop_assert!((0.0..=1.0).contains(&s.fmeasure));
    }

    #[test]
    fn recall_falls_as_tau_rises(
        space in any_space(),
        tpl in proptest::collection::vec(any::<[u8; 3]>(), 1..32),
        img in proptest::collection::vec(any::<[u8; 3]>(), 16..64),
        t1 in 0.0..=1.0f64,
        t2 in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let id = ColorSpaceId::original(space);
        let template = Template::from_pixels(&tpl, 0).unwrap();
        let bins = Bins::new(16).unwrap();
        let hist = build_histogram(&template, id, bins).unwrap();
        let raster = RasterImage::from_pixels(&img).unwrap();
        let map = QuantizedImage::new(&to_space(&raster, id), bins).backproject(&hist).unwrap();
        let truth = LabelMap::new(img.len(), 1, (0..img.len()).map(|i| (i % 2) as u8).collect()).unwrap();
        let (a, b) = (binarize(&map, lo), binarize(&map, hi));
        prop_assert!(a.bits.iter().zip(&b.bits).all(|(&x, &y)| x || !y));
        let (ra, rb) = (score(&a, &truth, 0).unwrap(), score(&b, &truth, 0).unwrap());
        prop_assert!(ra.recall >= rb.recall);
    }
}

fn points_strategy() -> impl Strategy<Value = (Vec<Point>, Vec<usize>, usize)> {
    (2usize..6).prop_flat_map(|k| {
        proptest::collection::vec(([0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64], 0..k), 2..80)
            .prop_map(move |v| {
                (
                    v.iter().map(|p| p.0).collect(),
                    v.iter().map(|p| p.1).collect(),
                    k,
                )
            })
    })
}

fn blobs(offsets: &[Point]) -> Vec<Point> {
    let centers = [[0.2, 0.2, 0.2], [0.8, 0.2, 0.5], [0.5, 0.8, 0.8]];
    offsets
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let c = centers[i % 3];
            [c[0] + o[0], c[1] + o[1], c[2] + o[2]]
        })
        .collect()
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn silhouette_values_are_bounded((points, assignments, k) in points_strategy()) {
        let n = points.len();
        let result = ClusterResult { k, assignments, centers: vec![[0.0; 3]; k], sampled_indices: (0..n).collect(), wcss: 0.0 };
        let report = cluster::silhouette(&result, &points).unwrap();
        prop_assert!(report.per_pixel.iter().all(|s| (-1.0..=1.0).contains(s)));
        prop_assert!((-1.0..=1.0).contains(&report.mean));
    }

    #[test]
    fn kmeans_is_deterministic(offsets in proptest::collection::vec([-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64], 9..60), seed in any::<u64>()) {
        let points = blobs(&offsets);
        let opts = KMeansOptions::default();
        let a = cluster::cluster_points(&points, 3, seed, &opts).unwrap();
        let b = cluster::cluster_points(&points, 3, seed, &opts).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kmeans_partition_follows_point_order(
        offsets in proptest::collection::vec([-0.05..0.05f64, -0.05..0.05f64, -0.05..0.05f64], 9..60),
        rotate in 0usize..60,
        seed in any::<u64>(),
    ) {
        let points = blobs(&offsets);
        let n = points.len();
        let shift = rotate % n;
        let mut permuted = points.clone();
        permuted.rotate_left(shift);
        let opts = KMeansOptions::default();
        let a = cluster::cluster_points(&points, 3, seed, &opts).unwrap();
        let b = cluster::cluster_points(&permuted, 3, seed, &opts).unwrap();
        let mut unpermuted = b.assignments.clone();
        unpermuted.rotate_right(shift);
        prop_assert!(same_partition(&a.assignments, &unpermuted));
    }

    #[test]
    fn plan_ignores_similarity_scale_without_exploration(seed in 0u64..20, start in 0usize..4, exp in -6i32..6) {
        let world = World::benchmark(seed);
        let cfg = SearchConfig { beta: 0.0, ..SearchConfig::default() };
        let cache = ViewCache::new(&world, &cfg);
        let (x, y) = BENCHMARK_STARTS[start];
        let at = world.index(x, y);
        let id = ColorSpaceId::original(Space::C1C2C3);
        let hist = chromaprobe::searchsim::target_histogram(world.target_class(), id, cfg.bins).unwrap();
        let field = chromaprobe::searchsim::similarity_field(&world, id, &hist);
        // Powers of two scale every utility exactly, so ties are preserved.
        let scale = 2f64.powi(exp);
        let scaled: Vec<f64> = field.iter().map(|s| s * scale).collect();
        let plan = |f: &[f64]| {
            let mut agent = AgentState::new(&world, &cfg, at, 0).unwrap();
            observe(f, &cache, &mut agent);
            plan_next(&world, &cache, &agent, &cfg).map(|p| (p.cell, p.heading)).ok()
        };
        prop_assert_eq!(plan(&field), plan(&scaled));
    }
}
