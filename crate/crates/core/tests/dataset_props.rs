mod oracles;

use std::collections::{BTreeMap, BTreeSet};

use geoseq_core::dataset::{
    self, BuildConfig, Direction, DirectionSet, Kind, OffsetConfig, OutputFormat, Poi, Sample,
    Split,
};
use geoseq_core::geodesic::{self, inverse_distance};
use geoseq_core::geohash::{self, BBox, LatLon};
use geoseq_core::reward::{self, RewardParams};

fn city(n: usize, seed: u64) -> Vec<Poi> {
    dataset::synth_city(n, BBox::new(39.90, 39.96, 116.30, 116.40).unwrap(), seed).unwrap()
}

fn offsets(pois: &[Poi], directions: DirectionSet, per_poi: usize, seed: u64) -> Vec<Sample> {
    let config = OffsetConfig {
        directions,
        per_poi,
        ..OffsetConfig::default()
    };
    dataset::build_anchor_offset(pois, &config, OutputFormat::Geohash, seed).unwrap()
}

#[test]
fn offset_distances_are_uniform() {
    let pois = city(100, 1);
    let samples = offsets(&pois, DirectionSet::Cardinal, 50, 2);
    let d: Vec<f64> = samples
        .iter()
        .map(|s| s.offset_meta.as_ref().unwrap().distance_m)
        .collect();
    assert!(d
        .iter()
        .all(|&x| (30.0..=500.0).contains(&x) && x.fract() == 0.0));
    // integer rounding shifts the empirical CDF by at most 1/470
    let stat = oracles::ks_uniform(&d, 29.5, 500.5);
    assert!(stat < oracles::ks_critical_001(d.len()), "KS {stat}");
}

#[test]
fn offset_labels_sit_at_the_stated_distance_and_bearing() {
    let pois = city(100, 3);
    for s in offsets(&pois, DirectionSet::Both, 5, 4) {
        let meta = s.offset_meta.as_ref().unwrap();
        let inv = geodesic::inverse(meta.anchor, s.target());
        assert!((inv.distance_m - meta.distance_m).abs() <= 1e-3, "{}", s.id);
        let diff = (inv.initial_bearing.degrees() - meta.direction.azimuth().degrees() + 540.0)
            % 360.0
            - 180.0;
        assert!(diff.abs() < 1e-6, "{}: {diff}", s.id);
        assert!(s.input.starts_with(&format!(
            "{} meters {} of ",
            meta.distance_m, meta.direction
        )));
        assert_eq!(s.kind, Kind::AnchorOffset);
        assert_eq!(s.output, geohash::encode(s.target(), 9).unwrap().as_str());
    }
}

#[test]
fn direction_sets_are_respected() {
    let pois = city(50, 5);
    let count = |set| {
        let mut m = BTreeMap::new();
        for s in offsets(&pois, set, 40, 6) {
            *m.entry(s.offset_meta.unwrap().direction.word())
                .or_insert(0usize) += 1;
        }
        m
    };
    let cardinal = count(DirectionSet::Cardinal);
    assert_eq!(
        cardinal.keys().copied().collect::<Vec<_>>(),
        vec!["east", "north", "south", "west"]
    );
    let inter = count(DirectionSet::Intercardinal);
    assert_eq!(
        inter.keys().copied().collect::<Vec<_>>(),
        vec!["northeast", "northwest", "southeast", "southwest"]
    );
    // 2000 draws over four directions: each share within 500 +- 100
    for n in cardinal.values().chain(inter.values()) {
        assert!((400..=600).contains(n), "{cardinal:?} {inter:?}");
    }
}

#[test]
fn compass_words_round_trip() {
    for d in Direction::COMPASS {
        assert_eq!(Direction::nearest(d.azimuth()), d);
        assert_eq!(d.word().parse::<Direction>().unwrap(), d);
    }
}

#[test]
fn build_splits_by_poi_with_coverage() {
    let pois = city(256, 7);
    let config = BuildConfig {
        seed: 7,
        ..BuildConfig::default()
    };
    let bundle = dataset::build_dataset(&pois, &config).unwrap();
    let by_location = |split| -> BTreeSet<String> {
        bundle
            .base_split(split)
            .iter()
            .map(|s| format!("{:.9},{:.9}", s.lat, s.lon))
            .collect()
    };
    let train_locs = by_location(Split::Train);
    let test_locs = by_location(Split::Test);
    assert!(!test_locs.is_empty());
    assert!(train_locs.is_disjoint(&test_locs));

    let train: Vec<LatLon> = bundle
        .base_split(Split::Train)
        .iter()
        .map(Sample::target)
        .collect();
    for s in bundle.base_split(Split::Test) {
        let nearest = train
            .iter()
            .map(|&t| inverse_distance(t, s.target()))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 500.0, "{} is {nearest} m from train", s.id);
    }
    // each offset sample shares its anchor POI's side of the split
    let base_side: BTreeMap<String, Split> = bundle
        .base
        .iter()
        .map(|s| (format!("{:.9},{:.9}", s.lat, s.lon), s.split))
        .collect();
    for s in &bundle.anchor_offset {
        let a = s.offset_meta.as_ref().unwrap().anchor;
        assert_eq!(
            base_side[&format!("{:.9},{:.9}", a.lat, a.lon)],
            s.split,
            "{}",
            s.id
        );
    }
}

#[test]
fn builds_are_deterministic() {
    let pois = city(80, 8);
    let config = BuildConfig {
        cot: true,
        seed: 9,
        ..BuildConfig::default()
    };
    assert_eq!(
        dataset::build_dataset(&pois, &config).unwrap(),
        dataset::build_dataset(&pois, &config).unwrap()
    );
    assert_eq!(city(80, 8), pois);
    assert_ne!(city(80, 9), pois);
}

#[test]
fn cot_records_score_like_their_labels() {
    let pois = city(60, 10);
    let config = BuildConfig {
        cot: true,
        seed: 11,
        ..BuildConfig::default()
    };
    let bundle = dataset::build_dataset(&pois, &config).unwrap();
    for s in bundle.base.iter().chain(&bundle.anchor_offset) {
        let thinking = s.thinking.as_deref().expect("cot fills reasoning");
        let rec = dataset::format_cot(s, Some(thinking));
        assert!(rec.input.ends_with(dataset::THINK_OPEN));
        assert!(rec.output.contains(dataset::THINK_CLOSE));
        let r = reward::reward_of_output(&rec.output, s.target(), &RewardParams::default());
        assert!(r > 0.0, "{}: {r}", s.id);
    }
}

#[test]
fn coordinate_output_format() {
    let pois = city(10, 12);
    let samples =
        dataset::build_base(&pois, Default::default(), OutputFormat::Coordinates, 1).unwrap();
    for s in samples {
        let (lat, lon) = s.output.split_once(", ").unwrap();
        assert!((lat.parse::<f64>().unwrap() - s.lat).abs() <= 5e-7);
        assert!((lon.parse::<f64>().unwrap() - s.lon).abs() <= 5e-7);
    }
}

#[test]
fn road_samples_hug_the_polyline() {
    let line = [
        LatLon::new(39.905, 116.305).unwrap(),
        LatLon::new(39.905, 116.335).unwrap(),
    ];
    let samples = dataset::road_samples("Long Road", &line, 100, 5.0, 1).unwrap();
    assert_eq!(samples[3].input, "No.7 Long Road");
    for s in &samples {
        // an east-west road: distance to it is the meridian offset
        let foot = LatLon::new(39.905, s.lon).unwrap();
        assert!(inverse_distance(foot, s.target()) <= 5.0 + 0.05, "{}", s.id);
    }
}

#[test]
fn jsonl_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pois = city(20, 13);
    let path = dir.path().join("pois.jsonl");
    dataset::write_jsonl(&path, &pois).unwrap();
    assert_eq!(dataset::read_pois(&path).unwrap(), pois);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"id\":\"a\",\"name\":\"n\",\"address\":\"x\",\"lat\":1,\"lon\":2}\n\nnot json\n",
    )
    .unwrap();
    let err = dataset::read_pois(&bad).unwrap_err();
    assert!(err.to_string().contains(":3"), "{err}");
    let out_of_range = dir.path().join("range.jsonl");
    std::fs::write(
        &out_of_range,
        "{\"id\":\"a\",\"name\":\"n\",\"address\":\"x\",\"lat\":91,\"lon\":2}\n",
    )
    .unwrap();
    assert!(dataset::read_pois(&out_of_range).is_err());
    assert!(dataset::read_pois(&dir.path().join("nope.jsonl"))
        .unwrap_err()
        .is_io());
}
