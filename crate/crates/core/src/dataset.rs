//! Training and evaluation data: synthetic city, base and anchor-offset
//! samples, chain-of-thought records, neighbourhood-covering splits and
//! JSONL persistence.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{forward, inverse, inverse_distance, Bearing};
use crate::geohash::{encode, BBox, Geohash, LatLon, DEFAULT_LENGTH};
use crate::rng;

/// A named place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoiRecord", into = "PoiRecord")]
pub struct Poi {
    pub id: String,
    pub name: String,
    pub address: String,
    pub location: LatLon,
}

/// POI ingest line: `{id, name, address, lat, lon}`.
#[derive(Serialize, Deserialize)]
struct PoiRecord {
    id: String,
    name: String,
    address: String,
    lat: f64,
    lon: f64,
}

impl TryFrom<PoiRecord> for Poi {
    type Error = Error;

    fn try_from(r: PoiRecord) -> Result<Self> {
        Ok(Poi {
            location: LatLon::new(r.lat, r.lon)?,
            id: r.id,
            name: r.name,
            address: r.address,
        })
    }
}

impl From<Poi> for PoiRecord {
    fn from(p: Poi) -> Self {
        PoiRecord {
            id: p.id,
            name: p.name,
            address: p.address,
            lat: p.location.lat,
            lon: p.location.lon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Base,
    AnchorOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Compass direction with its azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    Northeast,
    East,
    Southeast,
    South,
    Southwest,
    West,
    Northwest,
}

impl Direction {
    pub const CARDINAL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];
    pub const INTERCARDINAL: [Direction; 4] = [
        Direction::Northeast,
        Direction::Southeast,
        Direction::Southwest,
        Direction::Northwest,
    ];
    /// Clockwise from north.
    pub const COMPASS: [Direction; 8] = [
        Direction::North,
        Direction::Northeast,
        Direction::East,
        Direction::Southeast,
        Direction::South,
        Direction::Southwest,
        Direction::West,
        Direction::Northwest,
    ];

    pub fn azimuth(self) -> Bearing {
        let deg = match self {
            Direction::North => 0.0,
            Direction::Northeast => 45.0,
            Direction::East => 90.0,
            Direction::Southeast => 135.0,
            Direction::South => 180.0,
            Direction::Southwest => 225.0,
            Direction::West => 270.0,
            Direction::Northwest => 315.0,
        };
        Bearing::new(deg)
    }

    pub fn word(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::Northeast => "northeast",
            Direction::East => "east",
            Direction::Southeast => "southeast",
            Direction::South => "south",
            Direction::Southwest => "southwest",
            Direction::West => "west",
            Direction::Northwest => "northwest",
        }
    }

    /// Nearest of the eight compass points to `bearing`.
    pub fn nearest(bearing: Bearing) -> Direction {
        let sector = ((bearing.degrees() + 22.5) / 45.0).floor() as usize % 8;
        Direction::COMPASS[sector]
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Direction::COMPASS
            .into_iter()
            .find(|d| d.word() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown direction {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionSet {
    Cardinal,
    Intercardinal,
    Both,
}

impl DirectionSet {
    pub fn directions(self) -> &'static [Direction] {
        match self {
            DirectionSet::Cardinal => &Direction::CARDINAL,
            DirectionSet::Intercardinal => &Direction::INTERCARDINAL,
            DirectionSet::Both => &Direction::COMPASS,
        }
    }
}

impl FromStr for DirectionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cardinal" => Ok(DirectionSet::Cardinal),
            "intercardinal" => Ok(DirectionSet::Intercardinal),
            "both" => Ok(DirectionSet::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown direction set {other:?} (cardinal|intercardinal|both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetMeta {
    pub direction: Direction,
    pub distance_m: f64,
    pub anchor: LatLon,
}

/// One record of a sample file.
///
/// `output` is the training target text: the geohash, or the coordinate
/// pair when the coordinate output format is selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub input: String,
    pub output: String,
    pub lat: f64,
    pub lon: f64,
    pub kind: Kind,
    pub split: Split,
    pub thinking: Option<String>,
    pub offset_meta: Option<OffsetMeta>,
}

impl Sample {
    pub fn target(&self) -> LatLon {
        LatLon {
            lat: self.lat,
            lon: self.lon,
        }
    }

    pub fn target_geohash(&self) -> Geohash {
        encode(self.target(), DEFAULT_LENGTH).expect("sample targets are valid coordinates")
    }
}

/// How the target is rendered in `output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Geohash,
    /// `"lat, lon"` with six decimals.
    Coordinates,
}

impl OutputFormat {
    pub fn render(self, target: LatLon) -> String {
        match self {
            OutputFormat::Geohash => encode(target, DEFAULT_LENGTH)
                .expect("valid target")
                .to_string(),
            OutputFormat::Coordinates => format!("{:.6}, {:.6}", target.lat, target.lon),
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geohash" => Ok(OutputFormat::Geohash),
            "coordinates" => Ok(OutputFormat::Coordinates),
            other => Err(Error::InvalidArgument(format!(
                "unknown output format {other:?} (geohash|coordinates)"
            ))),
        }
    }
}

/// Which textual sources of a POI become base samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSources {
    pub name: bool,
    pub address: bool,
    /// The name with light character noise, standing in for a typed search.
    pub search_query: bool,
}

impl Default for BaseSources {
    fn default() -> Self {
        BaseSources {
            name: true,
            address: true,
            search_query: false,
        }
    }
}

const NOISE_PROB: f64 = 0.05;

/// Drops or swaps characters with probability 0.05 each.
pub fn noisy_query<R: Rng>(text: &str, rng: &mut R) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let u: f64 = rng.gen();
        if u < NOISE_PROB {
            i += 1;
            continue;
        }
        if u < 2.0 * NOISE_PROB && i + 1 < chars.len() {
            chars.swap(i, i + 1);
        }
        out.push(chars[i]);
        i += 1;
    }
    if out.is_empty() {
        return text.to_owned();
    }
    out.into_iter().collect()
}

fn sample(id: String, input: String, target: LatLon, kind: Kind, format: OutputFormat) -> Sample {
    Sample {
        id,
        input,
        output: format.render(target),
        lat: target.lat,
        lon: target.lon,
        kind,
        split: Split::Train,
        thinking: None,
        offset_meta: None,
    }
}

/// One sample per enabled source per POI, each targeting the POI location.
pub fn build_base(
    pois: &[Poi],
    sources: BaseSources,
    format: OutputFormat,
    seed: u64,
) -> Result<Vec<Sample>> {
    Ok(base_indexed(pois, sources, format, seed)?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}

fn base_indexed(
    pois: &[Poi],
    sources: BaseSources,
    format: OutputFormat,
    seed: u64,
) -> Result<Vec<(usize, Sample)>> {
    if pois.is_empty() {
        return Err(Error::InvalidArgument("no POIs".into()));
    }
    let mut noise = rng::stream(seed, "search-query");
    let mut out = Vec::new();
    for (i, poi) in pois.iter().enumerate() {
        if sources.name {
            out.push((
                i,
                sample(
                    format!("base-{}-name", poi.id),
                    poi.name.clone(),
                    poi.location,
                    Kind::Base,
                    format,
                ),
            ));
        }
        if sources.address {
            out.push((
                i,
                sample(
                    format!("base-{}-address", poi.id),
                    poi.address.clone(),
                    poi.location,
                    Kind::Base,
                    format,
                ),
            ));
        }
        if sources.search_query {
            out.push((
                i,
                sample(
                    format!("base-{}-query", poi.id),
                    noisy_query(&poi.name, &mut noise),
                    poi.location,
                    Kind::Base,
                    format,
                ),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetConfig {
    pub directions: DirectionSet,
    pub dist_min: f64,
    pub dist_max: f64,
    pub per_poi: usize,
}

impl Default for OffsetConfig {
    fn default() -> Self {
        OffsetConfig {
            directions: DirectionSet::Cardinal,
            dist_min: 30.0,
            dist_max: 500.0,
            per_poi: 1,
        }
    }
}

/// `"{distance} meters {direction} of {base}"`.
pub fn offset_phrase(distance_m: f64, direction: Direction, base: &str) -> String {
    format!("{distance_m} meters {direction} of {base}")
}

/// Anchor-offset samples: the POI address prefixed by a distance and
/// direction, labelled with the point that lies that far in that direction
/// from the POI.
///
/// Distances are drawn uniformly from `[dist_min, dist_max]` and rounded to
/// whole metres so that the text and the label agree.
pub fn build_anchor_offset(
    pois: &[Poi],
    config: &OffsetConfig,
    format: OutputFormat,
    seed: u64,
) -> Result<Vec<Sample>> {
    Ok(offset_indexed(pois, config, format, seed)?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}

fn offset_indexed(
    pois: &[Poi],
    config: &OffsetConfig,
    format: OutputFormat,
    seed: u64,
) -> Result<Vec<(usize, Sample)>> {
    if !(config.dist_min < config.dist_max) || config.dist_min < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "offset range [{}, {}] is empty",
            config.dist_min, config.dist_max
        )));
    }
    let mut r = rng::stream(seed, "anchor-offset");
    let dirs = config.directions.directions();
    let mut out = Vec::with_capacity(pois.len() * config.per_poi);
    for (i, poi) in pois.iter().enumerate() {
        for k in 0..config.per_poi {
            let direction = *dirs.choose(&mut r).expect("direction sets are nonempty");
            let raw: f64 = r.gen_range(config.dist_min..=config.dist_max);
            let distance_m = raw
                .round()
                .clamp(config.dist_min.ceil(), config.dist_max.floor());
            let target = forward(poi.location, direction.azimuth(), distance_m);
            let mut s = sample(
                format!("offset-{}-{k}", poi.id),
                offset_phrase(distance_m, direction, &poi.address),
                target,
                Kind::AnchorOffset,
                format,
            );
            s.offset_meta = Some(OffsetMeta {
                direction,
                distance_m,
                anchor: poi.location,
            });
            out.push((i, s));
        }
    }
    Ok(out)
}

/// A prompt/response pair ready for supervised fine-tuning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub input: String,
    pub output: String,
}

pub const THINK_OPEN: &str = "<thinking>";
pub const THINK_CLOSE: &str = "</thinking>";

/// Relative position of `target` as seen from `neighbor`, in whole metres
/// and the nearest compass point.
pub fn neighbor_sentence(target: LatLon, neighbor: &Poi) -> String {
    let inv = inverse(neighbor.location, target);
    let direction = Direction::nearest(inv.initial_bearing);
    format!(
        "{} meters {direction} of {}",
        inv.distance_m.round(),
        neighbor.address
    )
}

/// Index of the POI nearest to `p` among those at least 1 m away.
pub fn nearest_poi(pois: &[Poi], p: LatLon) -> Option<usize> {
    pois.iter()
        .enumerate()
        .map(|(i, q)| (i, inverse_distance(p, q.location)))
        .filter(|&(_, d)| d >= 1.0)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
}

/// Fills `thinking` of every sample with the sentence relating its target
/// to the nearest other POI.
pub fn attach_thinking(samples: &mut [Sample], pois: &[Poi]) {
    for s in samples {
        s.thinking = nearest_poi(pois, s.target()).map(|j| neighbor_sentence(s.target(), &pois[j]));
    }
}

/// Chain-of-thought record: the input ends with the opening tag and the
/// output is the reasoning text, the closing tag and the spaced geohash.
/// Without reasoning text the plain form is emitted.
pub fn format_cot(sample: &Sample, neighbor_text: Option<&str>) -> SftRecord {
    let answer = sample.target_geohash().spaced();
    match neighbor_text {
        Some(text) if !text.trim().is_empty() => SftRecord {
            input: format!("{} {THINK_OPEN}", sample.input),
            output: format!("{text} {THINK_CLOSE} {answer}"),
        },
        _ => SftRecord {
            input: sample.input.clone(),
            output: answer,
        },
    }
}

/// Shuffled train/test assignment in which every test location has a
/// training location within `radius_m`. Test items without such a
/// neighbour are moved to train.
pub fn split_by_location(
    locations: &[LatLon],
    train_fraction: f64,
    radius_m: f64,
    seed: u64,
) -> Result<Vec<Split>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = locations.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "split"));
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let mut splits = vec![Split::Test; n];
    for &i in &order[..n_train.min(n)] {
        splits[i] = Split::Train;
    }
    for &i in &order[n_train.min(n)..] {
        let covered = (0..n).any(|j| {
            splits[j] == Split::Train && inverse_distance(locations[i], locations[j]) <= radius_m
        });
        if !covered {
            splits[i] = Split::Train;
        }
    }
    Ok(splits)
}

/// Splits samples by their target location. See [`split_by_location`].
pub fn split_dataset(
    mut samples: Vec<Sample>,
    train_fraction: f64,
    radius_m: f64,
    seed: u64,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let locs: Vec<LatLon> = samples.iter().map(Sample::target).collect();
    let splits = split_by_location(&locs, train_fraction, radius_m, seed)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut s, split) in samples.drain(..).zip(splits) {
        s.split = split;
        match split {
            Split::Train => train.push(s),
            Split::Test => test.push(s),
        }
    }
    Ok((train, test))
}

const STREETS: [&str; 32] = [
    "Maple", "Cedar", "Willow", "Birch", "Aspen", "Juniper", "Magnolia", "Chestnut", "Hawthorn",
    "Linden", "Poplar", "Sycamore", "Cypress", "Hickory", "Laurel", "Spruce", "Alder", "Rowan",
    "Hazel", "Walnut", "Elm", "Oak", "Pine", "Fir", "Beech", "Olive", "Acacia", "Banyan",
    "Camphor", "Ginkgo", "Mulberry", "Peach",
];
const DISTRICTS: [&str; 4] = ["Northgate", "Eastbank", "Southfield", "Westbrook"];
const ADJECTIVES: [&str; 24] = [
    "Golden", "Silver", "Jade", "Crimson", "Azure", "Quiet", "Bright", "Ancient", "Grand", "Lucky",
    "Misty", "Sunny", "Royal", "Hidden", "Red", "Green", "Blue", "White", "Autumn", "Spring",
    "Harbor", "Lotus", "Cloud", "Pearl",
];
const NOUNS: [&str; 24] = [
    "Dragon", "Phoenix", "Crane", "Tiger", "Garden", "River", "Mountain", "Bridge", "Lantern",
    "Bamboo", "Orchid", "Plum", "Moon", "Star", "Lake", "Stone", "Willow", "Maple", "Peony",
    "Swallow", "Tea", "Silk", "Jasmine", "Harvest",
];
const PLACES: [&str; 16] = [
    "Cafe",
    "Library",
    "Hotel",
    "Market",
    "Clinic",
    "Bakery",
    "Bookstore",
    "Gym",
    "Theater",
    "School",
    "Pharmacy",
    "Restaurant",
    "Gallery",
    "Bank",
    "Courtyard",
    "Plaza",
];

/// Procedural POIs on a jittered street grid inside `bbox`.
///
/// Rows of the grid are east-west roads; a POI's address names its road and
/// a house number that grows eastwards, and its district is the quadrant of
/// the box it falls in.
pub fn synth_city(n: usize, bbox: BBox, seed: u64) -> Result<Vec<Poi>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one POI".into()));
    }
    let mut r = rng::stream(seed, "city");
    let rows = (n as f64).sqrt().ceil() as usize;
    let cols = n.div_ceil(rows);
    if rows > STREETS.len() {
        return Err(Error::InvalidArgument(format!(
            "at most {} POIs supported by the street list",
            STREETS.len() * STREETS.len()
        )));
    }
    let mut streets: Vec<&str> = STREETS.to_vec();
    streets.shuffle(&mut r);

    let mut names: Vec<(usize, usize, usize)> = (0..ADJECTIVES.len())
        .flat_map(|a| (0..NOUNS.len()).flat_map(move |b| (0..PLACES.len()).map(move |c| (a, b, c))))
        .collect();
    names.shuffle(&mut r);

    let dlat = bbox.lat_span() / rows as f64;
    let dlon = bbox.lon_span() / cols as f64;
    let mut pois = Vec::with_capacity(n);
    for k in 0..n {
        let (row, col) = (k / cols, k % cols);
        let jl: f64 = r.gen_range(-0.2..=0.2);
        let jo: f64 = r.gen_range(-0.2..=0.2);
        let lat = bbox.lat_min + (row as f64 + 0.5 + jl) * dlat;
        let lon = bbox.lon_min + (col as f64 + 0.5 + jo) * dlon;
        let location = LatLon::new(lat, lon)?;
        let house = 10 * (col + 1) + r.gen_range(0..10usize);
        let district = DISTRICTS[usize::from(lat < bbox.lat_min + bbox.lat_span() / 2.0) * 2
            + usize::from(lon < bbox.lon_min + bbox.lon_span() / 2.0)];
        let (a, b, c) = names[k % names.len()];
        let mut name = format!("{} {} {}", ADJECTIVES[a], NOUNS[b], PLACES[c]);
        if k >= names.len() {
            name = format!("{name} {}", k / names.len() + 1);
        }
        pois.push(Poi {
            id: format!("{k:04}"),
            name,
            address: format!("No.{house} {} Road, {district} District", streets[row]),
            location,
        });
    }
    Ok(pois)
}

/// Points spaced evenly (by geodesic length) along `polyline`, each with
/// the query `"No.{k} {road}"` and a perpendicular jitter of up to
/// `jitter_m` metres.
pub fn road_samples(
    road: &str,
    polyline: &[LatLon],
    n: usize,
    jitter_m: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    if polyline.len() < 2 || n == 0 {
        return Err(Error::InvalidArgument(
            "need a polyline of at least two points and n >= 1".into(),
        ));
    }
    let legs: Vec<_> = polyline.windows(2).map(|w| inverse(w[0], w[1])).collect();
    let total: f64 = legs.iter().map(|l| l.distance_m).sum();
    let mut r = rng::stream(seed, "road");
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut along = total * (k as f64 + 0.5) / n as f64;
        let mut leg = 0;
        while leg + 1 < legs.len() && along > legs[leg].distance_m {
            along -= legs[leg].distance_m;
            leg += 1;
        }
        let on_road = forward(polyline[leg], legs[leg].initial_bearing, along);
        let side: f64 = r.gen_range(-jitter_m..=jitter_m);
        let turn = if side < 0.0 { 270.0 } else { 90.0 };
        let normal = Bearing::new(legs[leg].initial_bearing.degrees() + turn);
        let p = forward(on_road, normal, side.abs());
        out.push(sample(
            format!("road-{k:04}"),
            format!("No.{} {road}", 2 * k + 1),
            p,
            Kind::Base,
            OutputFormat::Geohash,
        ));
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads one JSON value per line; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[Sample]) -> Result<()> {
    write_jsonl(path, samples)
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>> {
    read_jsonl(path)
}

pub fn read_pois(path: &Path) -> Result<Vec<Poi>> {
    read_jsonl(path)
}

/// Everything `dataset build` needs besides the POIs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub sources: BaseSources,
    pub offset: OffsetConfig,
    pub output_format: OutputFormat,
    pub cot: bool,
    pub train_fraction: f64,
    pub coverage_radius_m: f64,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            sources: BaseSources::default(),
            offset: OffsetConfig::default(),
            output_format: OutputFormat::Geohash,
            cot: false,
            train_fraction: 0.9,
            coverage_radius_m: 500.0,
            seed: 0,
        }
    }
}

/// Base and anchor-offset samples with their POI-level split.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub base: Vec<Sample>,
    pub anchor_offset: Vec<Sample>,
}

impl Bundle {
    pub fn base_split(&self, split: Split) -> Vec<Sample> {
        self.base
            .iter()
            .filter(|s| s.split == split)
            .cloned()
            .collect()
    }

    pub fn offset_split(&self, split: Split) -> Vec<Sample> {
        self.anchor_offset
            .iter()
            .filter(|s| s.split == split)
            .cloned()
            .collect()
    }
}

/// Builds both data classes. The split is drawn over POIs so that all
/// samples derived from one POI land on the same side.
pub fn build_dataset(pois: &[Poi], config: &BuildConfig) -> Result<Bundle> {
    let seed = config.seed;
    let locs: Vec<LatLon> = pois.iter().map(|p| p.location).collect();
    let splits = split_by_location(&locs, config.train_fraction, config.coverage_radius_m, seed)?;
    let assign = |tagged: Vec<(usize, Sample)>| -> Vec<Sample> {
        tagged
            .into_iter()
            .map(|(i, mut s)| {
                s.split = splits[i];
                s
            })
            .collect()
    };
    let mut base = assign(base_indexed(
        pois,
        config.sources,
        config.output_format,
        seed,
    )?);
    let mut anchor_offset = assign(offset_indexed(
        pois,
        &config.offset,
        config.output_format,
        seed,
    )?);
    if config.cot {
        attach_thinking(&mut base, pois);
        attach_thinking(&mut anchor_offset, pois);
    }
    Ok(Bundle {
        base,
        anchor_offset,
    })
}
