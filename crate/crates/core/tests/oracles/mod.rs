//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the code under test except
//! for plain data types.
#![allow(dead_code)]

use std::cmp::Ordering;

pub const BASE32: &[u8] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Textbook geohash: interleave one bisection bit per step, longitude first.
pub fn bisect_encode(lat: f64, lon: f64, len: usize) -> String {
    let lon = if lon == 180.0 { -180.0 } else { lon };
    let mut lat_iv = [-90.0f64, 90.0];
    let mut lon_iv = [-180.0f64, 180.0];
    let mut out = String::new();
    let mut value = 0usize;
    for bit in 0..len * 5 {
        let (iv, x) = if bit % 2 == 0 {
            (&mut lon_iv, lon)
        } else {
            (&mut lat_iv, lat)
        };
        let mid = (iv[0] + iv[1]) / 2.0;
        value <<= 1;
        if x >= mid {
            value |= 1;
            iv[0] = mid;
        } else {
            iv[1] = mid;
        }
        if bit % 5 == 4 {
            out.push(BASE32[value] as char);
            value = 0;
        }
    }
    out
}

/// Cell of a geohash as `(lat_min, lat_max, lon_min, lon_max)`.
pub fn bisect_cell(hash: &str) -> (f64, f64, f64, f64) {
    let mut lat_iv = [-90.0f64, 90.0];
    let mut lon_iv = [-180.0f64, 180.0];
    let mut bit = 0;
    for c in hash.bytes() {
        let v = BASE32.iter().position(|&b| b == c).expect("base32 symbol");
        for shift in (0..5).rev() {
            let iv = if bit % 2 == 0 {
                &mut lon_iv
            } else {
                &mut lat_iv
            };
            let mid = (iv[0] + iv[1]) / 2.0;
            if (v >> shift) & 1 == 1 {
                iv[0] = mid;
            } else {
                iv[1] = mid;
            }
            bit += 1;
        }
    }
    (lat_iv[0], lat_iv[1], lon_iv[0], lon_iv[1])
}

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_INV_F: f64 = 298.257_223_563;

/// Equatorial arc between two longitudes `dlon_deg` apart (valid while the
/// equator is the shortest path, i.e. well below 179.4 degrees).
pub fn equatorial_arc(dlon_deg: f64) -> f64 {
    WGS84_A * dlon_deg.to_radians().abs()
}

/// Meridian distance from the equator to latitude `lat_deg`, Helmert's
/// series in the third flattening truncated after n^4.
pub fn meridian_arc(lat_deg: f64) -> f64 {
    let f = 1.0 / WGS84_INV_F;
    let b = WGS84_A * (1.0 - f);
    let n = (WGS84_A - b) / (WGS84_A + b);
    let (n2, n3, n4) = (n * n, n * n * n, n * n * n * n);
    let phi = lat_deg.to_radians();
    (WGS84_A + b) / 2.0
        * ((1.0 + n2 / 4.0 + n4 / 64.0) * phi - (1.5 * n - 3.0 / 16.0 * n3) * (2.0 * phi).sin()
            + (15.0 / 16.0 * n2 - 15.0 / 64.0 * n4) * (4.0 * phi).sin()
            - 35.0 / 48.0 * n3 * (6.0 * phi).sin()
            + 315.0 / 512.0 * n4 * (8.0 * phi).sin())
}

/// Meridian distance by composite Simpson integration of the radius of
/// curvature; a second, structurally different oracle.
pub fn meridian_arc_quadrature(lat_deg: f64, steps: usize) -> f64 {
    let f = 1.0 / WGS84_INV_F;
    let e2 = f * (2.0 - f);
    let m = |phi: f64| WGS84_A * (1.0 - e2) / (1.0 - e2 * phi.sin().powi(2)).powf(1.5);
    let steps = steps + steps % 2;
    let h = lat_deg.to_radians() / steps as f64;
    let mut sum = m(0.0) + m(lat_deg.to_radians());
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * m(i as f64 * h);
    }
    sum * h / 3.0
}

/// Acc@k, ADD and EC recomputed record by record.
pub struct BruteMetrics {
    pub add: Option<f64>,
    pub acc: Vec<f64>,
    pub ec: usize,
}

/// `distances[i] == None` marks an invalid output; `assign` is the distance
/// charged to invalid outputs, or `None` to leave them out of ADD.
pub fn brute_metrics(
    distances: &[Option<f64>],
    thresholds: &[f64],
    assign: Option<f64>,
) -> BruteMetrics {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut ec = 0;
    let mut hits = vec![0usize; thresholds.len()];
    for d in distances {
        let effective = match (d, assign) {
            (Some(d), _) => Some(*d),
            (None, a) => {
                ec += 1;
                a
            }
        };
        if let Some(d) = effective {
            sum += d;
            count += 1;
            for (h, k) in hits.iter_mut().zip(thresholds) {
                if d <= *k {
                    *h += 1;
                }
            }
        }
    }
    BruteMetrics {
        add: if count == 0 {
            None
        } else {
            Some(sum / count as f64)
        },
        acc: hits
            .iter()
            .map(|&h| h as f64 / distances.len() as f64)
            .collect(),
        ec,
    }
}

/// Every sequence over `vocab` symbols of length `len`, scored by `score`,
/// best first with lexicographic tie-break, truncated to `k`.
pub fn exhaustive_top_k<F>(vocab: usize, len: usize, k: usize, mut score: F) -> Vec<(Vec<u8>, f64)>
where
    F: FnMut(&[u8]) -> f64,
{
    let total = vocab.pow(len as u32);
    let mut all = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut seq = vec![0u8; len];
        for slot in seq.iter_mut().rev() {
            *slot = (code % vocab) as u8;
            code /= vocab;
        }
        let s = score(&seq);
        all.push((seq, s));
    }
    all.sort_by(|a, b| match b.1.partial_cmp(&a.1) {
        Some(Ordering::Equal) | None => a.0.cmp(&b.0),
        Some(o) => o,
    });
    all.truncate(k);
    all
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic against U(lo, hi).
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical value of the KS statistic at significance 0.001 (asymptotic).
pub fn ks_critical_001(n: usize) -> f64 {
    1.949 / (n as f64).sqrt()
}

/// Central finite difference.
pub fn central_diff<F: FnMut(f64) -> f64>(x: f64, h: f64, mut f: F) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative agreement with an absolute floor for entries that are
/// numerically zero.
pub fn close_rel(analytic: f64, numeric: f64, rel: f64, abs_floor: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= abs_floor || diff <= rel * analytic.abs().max(numeric.abs())
}

/// Distance in metres from `(lat, lon)` to a polyline of `(lat, lon)`
/// vertices, on a local tangent plane scaled by the ellipsoid's radii of
/// curvature at the polyline's mean latitude. Good to well under a metre
/// over a few kilometres.
pub fn polyline_distance_m(p: (f64, f64), line: &[(f64, f64)]) -> f64 {
    let f = 1.0 / WGS84_INV_F;
    let e2 = f * (2.0 - f);
    let lat0 = (line.iter().map(|v| v.0).sum::<f64>() / line.len() as f64).to_radians();
    let w = (1.0 - e2 * lat0.sin().powi(2)).sqrt();
    let meridional = WGS84_A * (1.0 - e2) / w.powi(3);
    let normal = WGS84_A / w;
    let xy = |(lat, lon): (f64, f64)| {
        (
            lon.to_radians() * normal * lat0.cos(),
            lat.to_radians() * meridional,
        )
    };
    let (px, py) = xy(p);
    line.windows(2)
        .map(|seg| {
            let (ax, ay) = xy(seg[0]);
            let (bx, by) = xy(seg[1]);
            let (dx, dy) = (bx - ax, by - ay);
            let t = (((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            (px - ax - t * dx).hypot(py - ay - t * dy)
        })
        .fold(f64::INFINITY, f64::min)
}
