use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use geoseq_core::config::RunConfig;
use geoseq_core::dataset::{
    self, BaseSources, BuildConfig, DirectionSet, OffsetConfig, OutputFormat, Sample, Split,
};
use geoseq_core::eval::{
    self, DecodeMode, Geocoder, InvalidPolicy, LevenshteinGeocoder, PolicyGeocoder, VectorGeocoder,
    VectorIndex, DEFAULT_THRESHOLDS,
};
use geoseq_core::geohash::{self, BBox, LatLon};
use geoseq_core::grpo::{self, GrpoConfig, GrpoParams, Prompt};
use geoseq_core::policy::{self, MleConfig, PolicyModel, TrainExample};
use geoseq_core::reward::RewardParams;

/// Geocoding as geohash sequence generation.
#[derive(Parser)]
#[command(name = "geoseq", version)]
struct Cli {
    /// Run seed; every random sub-stream is derived from it.
    #[arg(long, global = true, env = "GEOSEQ_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode or decode geohashes.
    #[command(subcommand)]
    Geohash(GeohashCmd),
    /// Build synthetic POIs and training/evaluation samples.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Supervised (MLE) or GRPO training of the policy.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Score a model or a baseline on a sample file.
    Eval(EvalArgs),
    /// Geocode one query.
    Predict(PredictArgs),
    /// Beam-search a query and write the candidate centroids as GeoJSON.
    Render(RenderArgs),
}

#[derive(Subcommand)]
enum GeohashCmd {
    Encode {
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long, default_value_t = geohash::DEFAULT_LENGTH)]
        len: usize,
    },
    Decode {
        hash: String,
    },
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Procedural POIs on a jittered street grid.
    Synth {
        #[arg(long)]
        n: usize,
        /// lat_min,lat_max,lon_min,lon_max
        #[arg(
            long,
            default_value = "39.90,39.96,116.30,116.40",
            allow_hyphen_values = true
        )]
        bbox: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Base and anchor-offset samples split into train and test.
    Build(BuildArgs),
    /// Samples spread along a road polyline.
    Road {
        #[arg(long, default_value = "Long Road")]
        name: String,
        /// lat,lon;lat,lon;...
        #[arg(long, allow_hyphen_values = true)]
        polyline: String,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 5.0)]
        jitter: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Directions {
    Cardinal,
    Intercardinal,
    Both,
}

impl From<Directions> for DirectionSet {
    fn from(d: Directions) -> Self {
        match d {
            Directions::Cardinal => DirectionSet::Cardinal,
            Directions::Intercardinal => DirectionSet::Intercardinal,
            Directions::Both => DirectionSet::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Geohash,
    Coordinates,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    pois: PathBuf,
    #[arg(long, value_enum, default_value = "cardinal")]
    directions: Directions,
    #[arg(long, default_value_t = 30.0)]
    offset_min: f64,
    #[arg(long, default_value_t = 500.0)]
    offset_max: f64,
    /// Anchor-offset samples per POI.
    #[arg(long, default_value_t = 1)]
    offsets_per_poi: usize,
    /// Fill the reasoning text and write chain-of-thought SFT records.
    #[arg(long)]
    cot: bool,
    /// Also emit a noisy-name search query per POI.
    #[arg(long)]
    search_queries: bool,
    #[arg(long, value_enum, default_value = "geohash")]
    output_format: Format,
    #[arg(long, default_value_t = 0.9)]
    train_fraction: f64,
    #[arg(long, default_value_t = 500.0)]
    coverage_radius: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Maximum-likelihood training on query/geohash pairs.
    Sft {
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = policy::DEFAULT_BUCKETS)]
        buckets: usize,
        /// Continue from an existing model instead of a zero model.
        #[arg(long)]
        model_in: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group-relative policy optimization with the distance reward.
    Grpo {
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        model_in: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        group_size: usize,
        #[arg(long, default_value_t = 3)]
        epochs: usize,
        #[arg(long, default_value_t = 0.2)]
        clip: f64,
        #[arg(long, default_value_t = 0.0)]
        kl: f64,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch_size: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        /// Also write the per-epoch log to this file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    /// Edit distance against names and addresses.
    Lev,
    /// Bigram cosine, top-1.
    Vec1,
    /// Bigram cosine, top-5 reranked by edit distance.
    Vec5r,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(
        long,
        conflicts_with = "baseline",
        required_unless_present = "baseline"
    )]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    /// POI database for the baselines.
    #[arg(long, required_if_eq_any = [("baseline", "lev"), ("baseline", "vec1"), ("baseline", "vec5r")])]
    pois: Option<PathBuf>,
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-record output; defaults to the report path with `.records.jsonl`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Decode with this beam width instead of greedily.
    #[arg(long)]
    beam: Option<usize>,
    /// Count invalid outputs as this many metres off instead of excluding
    /// them from ADD.
    #[arg(long)]
    invalid_distance: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 50)]
    beam: usize,
    #[arg(long, default_value_t = 50)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for filesystem failures, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<geoseq_core::Error>() {
            if core.is_io() {
                return 2;
            }
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Geohash(cmd) => cmd_geohash(cmd),
        Command::Dataset(cmd) => cmd_dataset(cmd, seed),
        Command::Train(cmd) => cmd_train(cmd, seed),
        Command::Eval(args) => cmd_eval(args, seed),
        Command::Predict(args) => cmd_predict(args),
        Command::Render(args) => cmd_render(args, seed),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn parse_floats(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| anyhow!("bad {what} {text:?}: {e}"))?;
    if values.len() != expected {
        bail!("{what} needs {expected} comma-separated numbers, got {text:?}");
    }
    Ok(values)
}

fn cmd_geohash(cmd: GeohashCmd) -> Result<()> {
    match cmd {
        GeohashCmd::Encode { lat, lon, len } => {
            let g = geohash::encode(LatLon { lat, lon }, len)?;
            println!("{g}");
        }
        GeohashCmd::Decode { hash } => {
            let bbox = geohash::decode_str(&hash)?;
            let c = bbox.centroid();
            let out = json!({
                "geohash": hash,
                "bbox": bbox,
                "centroid": c,
            });
            println!("{}", serde_json::to_string(&out)?);
        }
    }
    Ok(())
}

fn cmd_dataset(cmd: DatasetCmd, seed: u64) -> Result<()> {
    match cmd {
        DatasetCmd::Synth { n, bbox, out } => {
            let v = parse_floats(&bbox, 4, "bbox")?;
            let b = BBox::new(v[0], v[1], v[2], v[3])?;
            let pois = dataset::synth_city(n, b, seed)?;
            dataset::write_jsonl(&out, &pois)?;
            let cfg = RunConfig::new("dataset synth", seed)
                .with_option("n", n)
                .with_option("bbox", b)
                .with_option("out", &out);
            write_json(
                &manifest_path(&out),
                &json!({"config_echo": cfg.echo(), "seed": seed, "pois": pois.len()}),
            )?;
            eprintln!("wrote {} POIs to {}", pois.len(), out.display());
        }
        DatasetCmd::Build(args) => cmd_build(args, seed)?,
        DatasetCmd::Road {
            name,
            polyline,
            n,
            jitter,
            out,
        } => {
            let points = polyline
                .split(';')
                .map(|pair| {
                    let v = parse_floats(pair, 2, "polyline vertex")?;
                    Ok(LatLon::new(v[0], v[1])?)
                })
                .collect::<Result<Vec<_>>>()?;
            let samples = dataset::road_samples(&name, &points, n, jitter, seed)?;
            dataset::write_samples(&out, &samples)?;
            let cfg = RunConfig::new("dataset road", seed)
                .with_option("name", &name)
                .with_option("polyline", &points)
                .with_option("n", n)
                .with_option("jitter_m", jitter)
                .with_option("out", &out);
            write_json(
                &manifest_path(&out),
                &json!({"config_echo": cfg.echo(), "seed": seed, "samples": samples.len()}),
            )?;
        }
    }
    Ok(())
}

fn cmd_build(args: BuildArgs, seed: u64) -> Result<()> {
    let pois = dataset::read_pois(&args.pois)?;
    let build = BuildConfig {
        sources: BaseSources {
            search_query: args.search_queries,
            ..BaseSources::default()
        },
        offset: OffsetConfig {
            directions: args.directions.into(),
            dist_min: args.offset_min,
            dist_max: args.offset_max,
            per_poi: args.offsets_per_poi,
        },
        output_format: match args.output_format {
            Format::Geohash => OutputFormat::Geohash,
            Format::Coordinates => OutputFormat::Coordinates,
        },
        cot: args.cot,
        train_fraction: args.train_fraction,
        coverage_radius_m: args.coverage_radius,
        seed,
    };
    let bundle = dataset::build_dataset(&pois, &build)?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut counts = serde_json::Map::new();
    for split in [Split::Train, Split::Test] {
        for (kind, samples) in [
            ("base", bundle.base_split(split)),
            ("anchor_offset", bundle.offset_split(split)),
        ] {
            let name = format!("{kind}_{split}.jsonl");
            dataset::write_samples(&args.out_dir.join(&name), &samples)?;
            counts.insert(name, json!(samples.len()));
        }
    }
    if args.cot {
        let records: Vec<_> = bundle
            .base_split(Split::Train)
            .iter()
            .chain(bundle.offset_split(Split::Train).iter())
            .map(|s| dataset::format_cot(s, s.thinking.as_deref()))
            .collect();
        dataset::write_jsonl(&args.out_dir.join("sft_cot_train.jsonl"), &records)?;
        counts.insert("sft_cot_train.jsonl".into(), json!(records.len()));
    }

    let mut cfg = RunConfig::new("dataset build", seed)
        .with_option("pois", &args.pois)
        .with_option("out_dir", &args.out_dir)
        .with_option("build", &build)
        .with_option("offset_labels", "ellipsoidal forward geodesic");
    cfg.dataset.offset_min_m = args.offset_min;
    cfg.dataset.offset_max_m = args.offset_max;
    cfg.dataset.directions = args.directions.into();
    write_json(
        &args.out_dir.join("manifest.json"),
        &json!({"config_echo": cfg.echo(), "seed": seed, "files": counts}),
    )?;
    Ok(())
}

fn read_all_samples(paths: &[PathBuf]) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(dataset::read_samples(p)?);
    }
    if out.is_empty() {
        bail!("no samples in {paths:?}");
    }
    Ok(out)
}

fn load_model(path: &Path) -> Result<PolicyModel> {
    Ok(policy::load_model(path)?)
}

fn cmd_train(cmd: TrainCmd, seed: u64) -> Result<()> {
    match cmd {
        TrainCmd::Sft {
            data,
            epochs,
            lr,
            buckets,
            model_in,
            out,
        } => {
            let samples = read_all_samples(&data)?;
            let mut model = match &model_in {
                Some(p) => load_model(p)?,
                None => PolicyModel::new(buckets, geohash::DEFAULT_LENGTH)?,
            };
            let examples: Vec<TrainExample> = samples
                .iter()
                .map(|s| TrainExample::new(&model, &s.input, &s.target_geohash()))
                .collect();
            let mle = MleConfig {
                epochs,
                learning_rate: lr,
                shuffle: true,
                seed,
            };
            let report = policy::mle_train(&mut model, &examples, &mle)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for (epoch, ll) in report.epoch_mean_log_likelihood.iter().enumerate() {
                writeln!(
                    lock,
                    "{}",
                    json!({"epoch": epoch, "mean_log_likelihood": ll})
                )?;
            }
            let mut cfg = RunConfig::new("train sft", seed)
                .with_option("data", &data)
                .with_option("buckets", model.buckets())
                .with_option("model_in", &model_in)
                .with_option("out", &out);
            cfg.sft.epochs = epochs;
            cfg.sft.learning_rate = lr;
            policy::save_model(&model, &out, Some(&cfg.echo()))?;
        }
        TrainCmd::Grpo {
            data,
            model_in,
            out,
            group_size,
            epochs,
            clip,
            kl,
            lr,
            batch_size,
            temperature,
            log,
        } => {
            if group_size < 2 {
                bail!("--group-size must be at least 2 (got {group_size})");
            }
            let samples = read_all_samples(&data)?;
            let mut model = load_model(&model_in)?;
            if model.sequence_length() != geohash::DEFAULT_LENGTH {
                bail!(
                    "model emits {} symbols; GRPO scoring needs {}",
                    model.sequence_length(),
                    geohash::DEFAULT_LENGTH
                );
            }
            let prompts: Vec<Prompt> = samples
                .iter()
                .map(|s| Prompt {
                    id: s.id.clone(),
                    query: s.input.clone(),
                    truth: s.target(),
                })
                .collect();
            let config = GrpoConfig {
                group_size,
                epochs,
                batch_size,
                temperature,
                params: GrpoParams {
                    clip_eps: clip,
                    learning_rate: lr,
                    kl_coeff: kl,
                },
                reward: RewardParams::default(),
                seed,
            };
            let logs = grpo::grpo_train(&mut model, &prompts, &config)?;
            let lines: Vec<String> = logs
                .iter()
                .map(serde_json::to_string)
                .collect::<std::result::Result<_, _>>()?;
            for l in &lines {
                println!("{l}");
            }
            if let Some(path) = &log {
                fs::write(path, lines.join("\n") + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let mut cfg = RunConfig::new("train grpo", seed)
                .with_option("data", &data)
                .with_option("model_in", &model_in)
                .with_option("out", &out);
            cfg.grpo.group_size = group_size;
            cfg.grpo.epochs = epochs;
            cfg.grpo.clip_eps = clip;
            cfg.grpo.kl_coeff = kl;
            cfg.grpo.learning_rate = lr;
            cfg.grpo.batch_size = batch_size;
            cfg.grpo.temperature = temperature;
            policy::save_model(&model, &out, Some(&cfg.echo()))?;
        }
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs, seed: u64) -> Result<()> {
    let samples = read_all_samples(&args.data)?;
    let model;
    let geocoder: Box<dyn Geocoder + '_> = match (&args.model, args.baseline) {
        (Some(path), _) => {
            model = load_model(path)?;
            Box::new(PolicyGeocoder {
                model: &model,
                mode: args.beam.map_or(DecodeMode::Greedy, DecodeMode::Beam),
            })
        }
        (None, Some(b)) => {
            let path = args
                .pois
                .as_ref()
                .ok_or_else(|| anyhow!("--pois is required for baselines"))?;
            let pois = dataset::read_pois(path)?;
            match b {
                Baseline::Lev => Box::new(LevenshteinGeocoder { pois }),
                Baseline::Vec1 => Box::new(VectorGeocoder {
                    index: VectorIndex::new(&pois)?,
                    top_k: 1,
                    rerank: false,
                }),
                Baseline::Vec5r => Box::new(VectorGeocoder {
                    index: VectorIndex::new(&pois)?,
                    top_k: 5,
                    rerank: true,
                }),
            }
        }
        (None, None) => bail!("one of --model or --baseline is required"),
    };
    let policy = args
        .invalid_distance
        .map_or(InvalidPolicy::Exclude, InvalidPolicy::AssignDistance);
    let out = eval::run_eval(geocoder.as_ref(), &samples, &DEFAULT_THRESHOLDS, policy)?;

    let records_path = args
        .records
        .clone()
        .unwrap_or_else(|| args.out.with_extension("records.jsonl"));
    dataset::write_jsonl(&records_path, &out.lines())?;

    let cfg = RunConfig::new("eval", seed)
        .with_option("method", geocoder.name())
        .with_option("model", &args.model)
        .with_option("pois", &args.pois)
        .with_option("data", &args.data)
        .with_option("beam", args.beam)
        .with_option("invalid_policy", policy)
        .with_option("records", &records_path);
    let mut report = serde_json::to_value(&out.report)?;
    report["method"] = json!(geocoder.name());
    report["config_echo"] = cfg.echo();
    write_json(&args.out, &report)?;
    println!("{}", serde_json::to_string(&out.report)?);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let feats = model.featurize(&args.query);
    match args.beam {
        None => {
            let symbols = model.greedy_decode(&feats);
            let g = geohash::Geohash::from_symbols(&symbols)?;
            let c = g.centroid();
            let lp = model.sequence_log_prob(&feats, &symbols);
            println!(
                "{}",
                json!({"geohash": g.as_str(), "lat": c.lat, "lon": c.lon, "log_prob": lp})
            );
        }
        Some(width) => {
            let top = args.top.unwrap_or(1);
            let beams = model.beam_search(&feats, width, top)?;
            for (rank, b) in beams.iter().enumerate() {
                let g = b.geohash()?;
                let c = g.centroid();
                println!(
                    "{}",
                    json!({"rank": rank, "geohash": g.as_str(), "lat": c.lat, "lon": c.lon, "log_prob": b.log_prob})
                );
            }
        }
    }
    Ok(())
}

fn cmd_render(args: RenderArgs, seed: u64) -> Result<()> {
    let model = load_model(&args.model)?;
    let feats = model.featurize(&args.query);
    let beams = model.beam_search(&feats, args.beam, args.top)?;
    let features = beams
        .iter()
        .enumerate()
        .map(|(rank, b)| {
            let g = b.geohash()?;
            let c = g.centroid();
            Ok(json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [c.lon, c.lat]},
                "properties": {"rank": rank, "log_prob": b.log_prob, "geohash": g.as_str()},
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = RunConfig::new("render", seed)
        .with_option("model", &args.model)
        .with_option("query", &args.query)
        .with_option("beam", args.beam)
        .with_option("top", args.top)
        .with_option("out", &args.out);
    let doc = json!({
        "type": "FeatureCollection",
        "features": features,
        "config_echo": cfg.echo(),
    });
    write_json(&args.out, &doc)
}
