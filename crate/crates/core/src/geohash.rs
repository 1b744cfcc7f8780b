//! Geohash codec.
//!
//! Bits are produced by alternately bisecting the longitude interval
//! `[-180, 180)` and the latitude interval `[-90, 90]`, longitude first. A
//! value at or above the midpoint yields bit 1 and keeps the upper half.
//! Every five bits select one symbol of [`ALPHABET`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard geohash Base32 alphabet: digits and lowercase letters without
/// `a`, `i`, `l`, `o`. Sorted, so symbol index order equals string order.
pub const ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

pub const DEFAULT_LENGTH: usize = 9;
pub const MAX_LENGTH: usize = 12;

const INVALID: u8 = 0xff;

const DECODE_TABLE: [u8; 128] = {
    let mut table = [INVALID; 128];
    let mut i = 0;
    while i < 32 {
        table[ALPHABET[i] as usize] = i as u8;
        i += 1;
    }
    table
};

/// Index of `c` in [`ALPHABET`], if it is a geohash symbol.
pub fn symbol_index(c: char) -> Option<u8> {
    if c.is_ascii() {
        let v = DECODE_TABLE[c as usize];
        (v != INVALID).then_some(v)
    } else {
        None
    }
}

pub fn symbol_char(index: u8) -> char {
    ALPHABET[index as usize] as char
}

/// A geodetic coordinate in degrees.
///
/// Longitude is kept in `[-180, 180)`; `180` is stored as `-180`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidArgument(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        let lon = if lon == 180.0 { -180.0 } else { lon };
        Ok(LatLon { lat, lon })
    }

    /// Builds a coordinate from an arbitrary finite longitude, wrapping it
    /// into `[-180, 180)`. Latitude is clamped to the poles.
    pub fn wrapped(lat: f64, lon: f64) -> Self {
        let mut lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        if lon >= 180.0 {
            lon -= 360.0;
        }
        LatLon {
            lat: lat.clamp(-90.0, 90.0),
            lon,
        }
    }
}

impl fmt::Display for LatLon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Axis-aligned cell in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let ok = lat_min < lat_max
            && lon_min < lon_max
            && lat_min >= -90.0
            && lat_max <= 90.0
            && lon_min >= -180.0
            && lon_max <= 180.0;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "bad bbox lat [{lat_min}, {lat_max}] lon [{lon_min}, {lon_max}]"
            )));
        }
        Ok(BBox {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        })
    }

    /// Half-open containment matching the bisection rule; the north edge is
    /// closed at the pole.
    pub fn contains(&self, p: LatLon) -> bool {
        let lat_ok = self.lat_min <= p.lat && (p.lat < self.lat_max || self.lat_max == 90.0);
        let lon_ok = self.lon_min <= p.lon && p.lon < self.lon_max;
        lat_ok && lon_ok
    }

    pub fn centroid(&self) -> LatLon {
        LatLon {
            lat: (self.lat_min + self.lat_max) / 2.0,
            lon: (self.lon_min + self.lon_max) / 2.0,
        }
    }

    pub fn lat_span(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    pub fn lon_span(&self) -> f64 {
        self.lon_max - self.lon_min
    }
}

/// A validated geohash of 1 to 12 symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Geohash(String);

impl Geohash {
    pub fn parse(text: &str) -> Result<Self> {
        if text.is_empty() || text.len() > MAX_LENGTH {
            return Err(Error::InvalidGeohash(format!(
                "length {} outside [1, {MAX_LENGTH}]: {text:?}",
                text.chars().count()
            )));
        }
        if let Some(bad) = text.chars().find(|&c| symbol_index(c).is_none()) {
            return Err(Error::InvalidGeohash(format!(
                "character {bad:?} not in alphabet: {text:?}"
            )));
        }
        Ok(Geohash(text.to_owned()))
    }

    /// Builds a geohash from symbol indices (each `< 32`).
    pub fn from_symbols(symbols: &[u8]) -> Result<Self> {
        if symbols.is_empty() || symbols.len() > MAX_LENGTH {
            return Err(Error::InvalidGeohash(format!(
                "length {} outside [1, {MAX_LENGTH}]",
                symbols.len()
            )));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= 32) {
            return Err(Error::InvalidGeohash(format!("symbol index {bad} >= 32")));
        }
        Ok(Geohash(symbols.iter().map(|&s| symbol_char(s)).collect()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> Vec<u8> {
        self.0.bytes().map(|b| DECODE_TABLE[b as usize]).collect()
    }

    /// Symbols separated by single spaces, the form the policy emits.
    pub fn spaced(&self) -> String {
        let mut out = String::with_capacity(self.0.len() * 2);
        for (i, c) in self.0.chars().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push(c);
        }
        out
    }

    pub fn decode(&self) -> BBox {
        decode(self)
    }

    pub fn centroid(&self) -> LatLon {
        decode(self).centroid()
    }
}

impl fmt::Display for Geohash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Geohash {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Geohash::parse(&value)
    }
}

impl From<Geohash> for String {
    fn from(g: Geohash) -> String {
        g.0
    }
}

impl AsRef<str> for Geohash {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub fn encode(p: LatLon, length: usize) -> Result<Geohash> {
    if !(1..=MAX_LENGTH).contains(&length) {
        return Err(Error::InvalidArgument(format!(
            "geohash length {length} outside [1, {MAX_LENGTH}]"
        )));
    }
    let p = LatLon::new(p.lat, p.lon)?;

    let (mut lat_lo, mut lat_hi) = (-90.0f64, 90.0f64);
    let (mut lon_lo, mut lon_hi) = (-180.0f64, 180.0f64);
    let mut text = String::with_capacity(length);
    let mut lon_turn = true;
    for _ in 0..length {
        let mut symbol = 0u8;
        for _ in 0..5 {
            let bit = if lon_turn {
                let mid = (lon_lo + lon_hi) / 2.0;
                if p.lon >= mid {
                    lon_lo = mid;
                    1
                } else {
                    lon_hi = mid;
                    0
                }
            } else {
                let mid = (lat_lo + lat_hi) / 2.0;
                if p.lat >= mid {
                    lat_lo = mid;
                    1
                } else {
                    lat_hi = mid;
                    0
                }
            };
            symbol = (symbol << 1) | bit;
            lon_turn = !lon_turn;
        }
        text.push(symbol_char(symbol));
    }
    Ok(Geohash(text))
}

/// The exact dyadic cell named by `g`.
pub fn decode(g: &Geohash) -> BBox {
    let (mut lat_lo, mut lat_hi) = (-90.0f64, 90.0f64);
    let (mut lon_lo, mut lon_hi) = (-180.0f64, 180.0f64);
    let mut lon_turn = true;
    for symbol in g.symbols() {
        for shift in (0..5).rev() {
            let bit = (symbol >> shift) & 1;
            if lon_turn {
                let mid = (lon_lo + lon_hi) / 2.0;
                if bit == 1 {
                    lon_lo = mid;
                } else {
                    lon_hi = mid;
                }
            } else {
                let mid = (lat_lo + lat_hi) / 2.0;
                if bit == 1 {
                    lat_lo = mid;
                } else {
                    lat_hi = mid;
                }
            }
            lon_turn = !lon_turn;
        }
    }
    BBox {
        lat_min: lat_lo,
        lat_max: lat_hi,
        lon_min: lon_lo,
        lon_max: lon_hi,
    }
}

pub fn decode_str(text: &str) -> Result<BBox> {
    Ok(decode(&Geohash::parse(text)?))
}

pub fn centroid(b: &BBox) -> LatLon {
    b.centroid()
}

/// Checks raw model output against the geohash grammar.
///
/// ASCII whitespace is removed and letters are lowercased first, so the
/// space-separated form `"w x 4 e j 8 m d t"` is accepted. The result must
/// be exactly `expected_len` alphabet symbols.
pub fn validate(text: &str, expected_len: usize) -> Result<Geohash> {
    let canonical: String = text
        .chars()
        .filter(|c| !c.is_ascii_whitespace())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    let n = canonical.chars().count();
    if n != expected_len {
        return Err(Error::InvalidGeohash(format!(
            "expected {expected_len} symbols, got {n}: {text:?}"
        )));
    }
    Geohash::parse(&canonical)
}
