mod oracles;

use geoseq_core::geodesic::{self, inverse_distance, Bearing};
use geoseq_core::geohash::LatLon;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ll(lat: f64, lon: f64) -> LatLon {
    LatLon::new(lat, lon).unwrap()
}

#[test]
fn oracles_agree_with_each_other() {
    for lat in [1.0, 10.0, 45.0, 60.0, 89.0] {
        let a = oracles::meridian_arc(lat);
        let b = oracles::meridian_arc_quadrature(lat, 20_000);
        assert!((a - b).abs() < 1e-5, "lat {lat}: {a} vs {b}");
    }
}

#[test]
fn equatorial_arcs() {
    for dlon in [0.001, 1.0, 10.0, 90.0, 170.0] {
        let d = inverse_distance(ll(0.0, 0.0), ll(0.0, dlon));
        assert!(
            (d - oracles::equatorial_arc(dlon)).abs() <= 1e-3,
            "{dlon}: {d}"
        );
    }
    let d = inverse_distance(ll(0.0, 0.0), ll(0.0, 1.0));
    assert!((d - 111_319.491).abs() <= 1e-3);
}

#[test]
fn meridian_arcs() {
    for (lat0, lat1) in [
        (0.0, 1.0),
        (0.0, 45.0),
        (10.0, 30.0),
        (-20.0, 50.0),
        (0.0, 90.0),
    ] {
        let d = inverse_distance(ll(lat0, 17.0), ll(lat1, 17.0));
        let want = oracles::meridian_arc(lat1) - oracles::meridian_arc(lat0);
        assert!((d - want).abs() <= 1e-3, "{lat0}->{lat1}: {d} vs {want}");
    }
    let d = inverse_distance(ll(0.0, 0.0), ll(1.0, 0.0));
    assert!((d - 110_574.389).abs() < 1e-2, "{d}");
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let point = |r: &mut ChaCha8Rng| {
        let z: f64 = r.gen_range(-1.0..=1.0);
        ll(z.asin().to_degrees(), r.gen_range(-180.0..180.0))
    };
    for _ in 0..1_000 {
        let (a, b, c) = (point(&mut r), point(&mut r), point(&mut r));
        assert_eq!(inverse_distance(a, a), 0.0);
        assert!((inverse_distance(a, b) - inverse_distance(b, a)).abs() <= 1e-9);
        let (ab, bc, ac) = (
            inverse_distance(a, b),
            inverse_distance(b, c),
            inverse_distance(a, c),
        );
        assert!(ac <= ab + bc + 1e-6, "{a} {b} {c}: {ac} > {ab} + {bc}");
    }
}

#[test]
fn forward_round_trip_anchor_offset_range() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10_000 {
        let start = ll(r.gen_range(-80.0..80.0), r.gen_range(-180.0..180.0));
        let bearing = Bearing::new(r.gen_range(0.0..360.0));
        let d = r.gen_range(30.0..=500.0);
        let end = geodesic::forward(start, bearing, d);
        let back = inverse_distance(start, end);
        assert!((back - d).abs() <= 1e-3, "{start} {bearing:?} {d}: {back}");
    }
}

#[test]
fn forward_examples() {
    let p = ll(40.0, 116.0);
    assert_eq!(geodesic::forward(p, Bearing::new(123.0), 0.0), p);
    let q = geodesic::forward(ll(0.0, 0.0), Bearing::new(90.0), 111_319.491);
    assert!(q.lat.abs() < 1e-8 && (q.lon - 1.0).abs() < 1e-8, "{q}");
}

#[test]
fn antipodal_pairs_return_finite_distances() {
    let d = inverse_distance(ll(0.0, 0.0), ll(0.0, 180.0));
    assert!(d.is_finite() && d > 19_900_000.0 && d < 20_040_000.0, "{d}");
    let inv = geodesic::inverse(ll(0.5, 0.0), ll(-0.5, 179.7));
    assert!(inv.distance_m.is_finite());
}

proptest! {
    #[test]
    fn bearings_normalize(deg in -1.0e4f64..1.0e4) {
        let b = Bearing::new(deg).degrees();
        prop_assert!((0.0..360.0).contains(&b));
        let k = ((deg - b) / 360.0).round();
        prop_assert!((deg - b - 360.0 * k).abs() < 1e-9);
    }

    #[test]
    fn short_round_trips(lat in -85.0f64..85.0, lon in -180.0f64..180.0, az in 0.0f64..360.0, d in 0.0f64..1000.0) {
        let end = geodesic::forward(ll(lat, lon), Bearing::new(az), d);
        prop_assert!((inverse_distance(ll(lat, lon), end) - d).abs() <= 1e-3);
    }
}
