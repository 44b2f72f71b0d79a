//! Command-line front end. Every command writes its outputs into one
//! directory together with a `run.json` manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::baselines::CfModel;
use crate::config::{hex, ExperimentConfig, ModelChoice};
use crate::corpus::planted::{generate, PlantedConfig};
use crate::corpus::ratings::RatingsTable;
use crate::corpus::synth::{synthesize_groups_from_ratings, SynthConfig, SynthMode};
use crate::corpus::{
    canonical_members, load_events, split_dataset, write_events, Dataset, IdMap, InteractionEvent, SplitRatios,
};
use crate::error::{Error, Result};
use crate::evaluation::report::{read_per_event_block, write_ablation_csv, write_breakdown_csv, write_metrics_csv};
use crate::evaluation::{
    ablation_remove_top_users, evaluate, group_size_breakdown, paired_t_test, CfScorer, EvalOptions, GroupScorer,
    MetricsReport, NeuralScorer, RemovalPolicy, ReportMeta, SizeBin, DEFAULT_BINS,
};
use crate::mosan::attention_map;
use crate::params::{load_params_checked, save_params, ModelParams};
use crate::training::{train, NeuralModel};

pub const MANIFEST: &str = "run.json";

#[derive(Debug, Parser)]
#[command(name = "mosan", version, about = "Group recommendation with sub-attention networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split an event log into train/valid/test with id maps.
    Prepare(PrepareArgs),
    /// Build group events from individual star ratings.
    Synth(SynthArgs),
    /// Generate a planted-influencer event log.
    Plant(PlantArgs),
    /// Train an embedding model.
    Train(RunArgs),
    /// Evaluate a model on the test (or validation) partition.
    Eval(EvalArgs),
    /// Export attention weights of selected groups.
    Explain(ExplainArgs),
    /// Re-evaluate after removing each group's most influential members.
    Ablate(AblateArgs),
    /// Evaluate per group-size bin.
    Breakdown(BreakdownArgs),
    /// Paired t-test between the per-event columns of two metrics files.
    Ttest(TtestArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Event log: `event_id<TAB>item<TAB>user,user,...` per line.
    #[arg(long)]
    pub events: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ratings: `user<TAB>item<TAB>stars` per line.
    #[arg(long)]
    pub ratings: PathBuf,
    #[arg(long, default_value = "simi")]
    pub mode: String,
    #[arg(long, default_value_t = 5)]
    pub group_size: usize,
    #[arg(long, default_value_t = 4)]
    pub threshold: u8,
    /// Number of groups to emit.
    #[arg(long, default_value_t = 1000)]
    pub groups: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlantArgs {
    #[arg(long, default_value_t = 1000)]
    pub users: usize,
    #[arg(long, default_value_t = 200)]
    pub items: usize,
    #[arg(long, default_value_t = 5000)]
    pub groups: usize,
    #[arg(long, default_value_t = 5)]
    pub min_size: usize,
    #[arg(long, default_value_t = 5)]
    pub max_size: usize,
    #[arg(long, default_value_t = 20)]
    pub communities: usize,
    #[arg(long, default_value_t = 0.5)]
    pub homophily: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Settings shared by the config-driven commands. Flags override the config
/// file, which overrides the defaults.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Prepared data directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// mosan, mf-avg, att-avg, cf-avg, cf-lm or cf-rd.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Any config key, as `KEY=VALUE`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Parameter file from `train`; not used by the CF models.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Partition to evaluate: test or valid.
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub params: PathBuf,
    /// Event id from any partition; repeatable.
    #[arg(long = "group")]
    pub groups: Vec<String>,
    /// Ad-hoc group as comma-separated external user ids; repeatable.
    #[arg(long = "members")]
    pub members: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Removal levels.
    #[arg(long, default_value = "0,1,2,3")]
    pub k_remove: String,
    /// per-group or global.
    #[arg(long, default_value = "per-group")]
    pub removal: String,
}

#[derive(Debug, Args)]
pub struct BreakdownArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Inclusive size ranges such as `1-5,6-10`.
    #[arg(long)]
    pub bins: Option<String>,
}

#[derive(Debug, Args)]
pub struct TtestArgs {
    /// Metrics CSV of the first system.
    #[arg(long)]
    pub a: PathBuf,
    /// Metrics CSV of the second system.
    #[arg(long)]
    pub b: PathBuf,
    /// Per-event column to compare.
    #[arg(long, default_value = "ndcg@5")]
    pub column: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => cmd_prepare(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Plant(a) => cmd_plant(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Breakdown(a) => cmd_breakdown(&a),
        Command::Ttest(a) => cmd_ttest(&a),
    }
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::read_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data_dir = d.clone();
        }
        if let Some(m) = &self.model {
            cfg.model = m.parse()?;
        }
        if let Some(s) = self.seed {
            cfg.hp.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(e) = self.epochs {
            cfg.hp.epochs = e;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}

/// Input paths to hash: a file itself, or every file directly inside a
/// directory.
fn input_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.is_file());
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Writes `run.json` into `out`: the command, its settings, and SHA-256
/// hashes of inputs and outputs. Contains nothing time-dependent.
fn write_manifest(out: &Path, command: &str, settings: Value, inputs: &[&Path], outputs: &[&str]) -> Result<()> {
    let mut input_hashes = BTreeMap::new();
    for path in inputs {
        for file in input_files(path)? {
            input_hashes.insert(file.display().to_string(), sha256_file(&file)?);
        }
    }
    let mut output_hashes = BTreeMap::new();
    for name in outputs {
        output_hashes.insert(name.to_string(), sha256_file(&out.join(name))?);
    }
    let manifest = json!({
        "tool": concat!("mosan ", env!("CARGO_PKG_VERSION")),
        "command": command,
        "settings": settings,
        "inputs": input_hashes,
        "outputs": output_hashes,
    });
    let mut w = create(&out.join(MANIFEST))?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn config_settings(cfg: &ExperimentConfig) -> Value {
    let echo: BTreeMap<&str, String> = crate::config::KEYS
        .iter()
        .map(|&k| (k, cfg.get(k).expect("known key")))
        .collect();
    json!({ "config": echo, "config_hash": cfg.hash(), "seed": cfg.hp.seed })
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

pub fn cmd_prepare(a: &PrepareArgs) -> Result<()> {
    let r: Vec<f64> = parse_list(&a.ratios, "ratio")?;
    let [train, valid, test] = r[..] else {
        return Err(Error::InvalidArgument("--ratios needs three values".into()));
    };
    let log = load_events(open(&a.events)?)?;
    let ds = split_dataset(log, SplitRatios { train, valid, test }, a.seed)?;
    ds.write_dir(&a.out)?;
    write_manifest(
        &a.out,
        "prepare",
        json!({ "ratios": [train, valid, test], "seed": a.seed }),
        &[&a.events],
        &[
            "train.tsv",
            "valid.tsv",
            "test.tsv",
            "users.idmap.tsv",
            "items.idmap.tsv",
        ],
    )
}

fn write_event_log(out: &Path, events: &[InteractionEvent], users: &IdMap, items: &IdMap) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("events.tsv"))?;
    write_events(&mut w, events, users, items)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mode: SynthMode = a.mode.parse()?;
    let rt = RatingsTable::read_tsv(open(&a.ratings)?)?;
    let cfg = SynthConfig {
        mode,
        group_size: a.group_size,
        star_threshold: a.threshold,
        num_groups: a.groups,
        max_attempts: a.max_attempts,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let events = synthesize_groups_from_ratings(&rt, &cfg)?;
    write_event_log(&a.out, &events, &rt.users, &rt.items)?;
    write_manifest(
        &a.out,
        "synth",
        json!({
            "mode": a.mode, "group_size": a.group_size, "threshold": a.threshold,
            "groups": a.groups, "max_attempts": a.max_attempts, "seed": a.seed,
        }),
        &[&a.ratings],
        &["events.tsv"],
    )
}

pub fn cmd_plant(a: &PlantArgs) -> Result<()> {
    let cfg = PlantedConfig {
        num_users: a.users,
        num_items: a.items,
        num_groups: a.groups,
        min_group_size: a.min_size,
        max_group_size: a.max_size,
        communities: a.communities,
        homophily: a.homophily,
        seed: a.seed,
    };
    let data = generate(&cfg)?;
    write_event_log(&a.out, &data.log.events, &data.log.users, &data.log.items)?;
    write_manifest(
        &a.out,
        "plant",
        json!({
            "users": a.users, "items": a.items, "groups": a.groups, "min_size": a.min_size,
            "max_size": a.max_size, "communities": a.communities, "homophily": a.homophily, "seed": a.seed,
        }),
        &[],
        &["events.tsv"],
    )
}

fn neural(cfg: &ExperimentConfig) -> Result<NeuralModel> {
    match cfg.model {
        ModelChoice::Neural(m) => Ok(m),
        other => Err(Error::InvalidArgument(format!(
            "{} has no trainable parameters; evaluate it directly",
            other.name()
        ))),
    }
}

pub fn cmd_train(a: &RunArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let model = neural(&cfg)?;
    let ds = Dataset::read_dir(&cfg.data_dir)?;
    let outcome = train(&ds, model, &cfg.hp, cfg.candidates)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;

    let mut w = create(&out.join("params.bin"))?;
    save_params(&outcome.params, &mut w)?;
    w.flush()?;
    let mut h = create(&out.join("history.csv"))?;
    let mut t = create(&out.join("timing.csv"))?;
    writeln!(h, "epoch,loss,val_ndcg5")?;
    writeln!(t, "epoch,seconds")?;
    for r in &outcome.history {
        writeln!(h, "{},{},{}", r.epoch, r.loss, r.val_ndcg5)?;
        writeln!(t, "{},{:.3}", r.epoch, r.seconds)?;
    }
    h.flush()?;
    t.flush()?;
    fs::write(out.join("config.conf"), cfg.to_text())?;

    let mut settings = config_settings(&cfg);
    settings["best_epoch"] = json!(outcome.best_epoch);
    write_manifest(
        out,
        "train",
        settings,
        &[&cfg.data_dir],
        &["params.bin", "history.csv", "config.conf"],
    )
}

/// A model ready to score: trained parameters or a fitted CF model.
enum Loaded {
    Neural(NeuralModel, Box<ModelParams>),
    Cf(CfModel, ModelChoice),
}

impl Loaded {
    fn load(cfg: &ExperimentConfig, ds: &Dataset, params: Option<&Path>) -> Result<Self> {
        match cfg.model {
            ModelChoice::Neural(m) => {
                let path = params
                    .ok_or_else(|| Error::InvalidArgument(format!("{} needs --params <file from train>", m.name())))?;
                let p = load_params_checked(open(path)?, ds.num_users(), ds.num_items())?;
                Ok(Loaded::Neural(m, Box::new(p)))
            }
            choice => Ok(Loaded::Cf(
                CfModel::fit(&ds.train, ds.num_users(), ds.num_items(), cfg.k_nn)?,
                choice,
            )),
        }
    }

    fn scorer(&self, cfg: &ExperimentConfig) -> Box<dyn GroupScorer + '_> {
        match self {
            Loaded::Neural(m, p) => Box::new(NeuralScorer::new(*m, p)),
            Loaded::Cf(model, choice) => Box::new(CfScorer {
                model,
                strategy: choice.aggregation(cfg.rd_lambda).expect("cf model"),
            }),
        }
    }
}

fn eval_options(cfg: &ExperimentConfig) -> EvalOptions {
    EvalOptions {
        policy: cfg.candidates,
        ks: cfg.ks.clone(),
        threads: cfg.threads,
    }
}

fn with_meta(mut report: MetricsReport, cfg: &ExperimentConfig) -> MetricsReport {
    report.meta = ReportMeta {
        model: cfg.model.name().to_owned(),
        seed: cfg.hp.seed,
        config_hash: cfg.hash(),
        candidates: cfg.candidates.name().to_owned(),
    };
    report
}

fn report_settings(cfg: &ExperimentConfig, report: &MetricsReport) -> Value {
    let mut s = config_settings(cfg);
    s["model"] = json!(report.meta.model);
    s["candidates"] = json!(report.meta.candidates);
    s["events"] = json!(report.records.len());
    s
}

fn inputs<'a>(cfg: &'a ExperimentConfig, params: Option<&'a Path>) -> Vec<&'a Path> {
    let mut v: Vec<&Path> = vec![&cfg.data_dir];
    if let (ModelChoice::Neural(_), Some(p)) = (cfg.model, params) {
        v.push(p);
    }
    v
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let ds = Dataset::read_dir(&cfg.data_dir)?;
    let events = match a.split.as_str() {
        "test" => &ds.test,
        "valid" => &ds.valid,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown split {other:?} (expected test or valid)"
            )))
        }
    };
    let loaded = Loaded::load(&cfg, &ds, a.params.as_deref())?;
    let report = with_meta(evaluate(&*loaded.scorer(&cfg), &ds, events, &eval_options(&cfg))?, &cfg);
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("metrics.csv"))?;
    write_metrics_csv(&report, &mut w)?;
    w.flush()?;
    let mut settings = report_settings(&cfg, &report);
    settings["split"] = json!(a.split);
    write_manifest(
        out,
        "eval",
        settings,
        &inputs(&cfg, a.params.as_deref()),
        &["metrics.csv"],
    )
}

pub fn cmd_explain(a: &ExplainArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    if cfg.model != ModelChoice::Neural(NeuralModel::Mosan) {
        return Err(Error::InvalidArgument("explain needs --model mosan".into()));
    }
    if a.groups.is_empty() && a.members.is_empty() {
        return Err(Error::InvalidArgument("give at least one --group or --members".into()));
    }
    let ds = Dataset::read_dir(&cfg.data_dir)?;
    let p = load_params_checked(open(&a.params)?, ds.num_users(), ds.num_items())?;

    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for id in &a.groups {
        let ev = ds
            .train
            .iter()
            .chain(&ds.valid)
            .chain(&ds.test)
            .find(|e| &e.event_id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no event with id {id:?}")))?;
        groups.push((id.clone(), ev.members.clone()));
    }
    for list in &a.members {
        let members = list
            .split(',')
            .map(|u| {
                ds.users
                    .get(u.trim())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown user {u:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let members = canonical_members(&members);
        if members.is_empty() {
            return Err(Error::InvalidArgument("empty --members list".into()));
        }
        groups.push((format!("members:{}", list.trim()), members));
    }

    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("attention.tsv"))?;
    let maps: Vec<_> = groups.iter().map(|(_, m)| attention_map(&p, m)).collect();
    writeln!(w, "group_id\tuser_external_id\tbeta")?;
    for ((gid, _), map) in groups.iter().zip(&maps) {
        for (&u, b) in map.members.iter().zip(&map.beta) {
            writeln!(w, "{gid}\t{}\t{b}", ds.users.external(u))?;
        }
    }
    for ((gid, _), map) in groups.iter().zip(&maps) {
        writeln!(w)?;
        write!(w, "alpha\t{gid}")?;
        for &m in &map.members {
            write!(w, "\t{}", ds.users.external(m))?;
        }
        writeln!(w)?;
        for (&l, row) in map.members.iter().zip(&map.alpha) {
            write!(w, "{}", ds.users.external(l))?;
            for x in row {
                write!(w, "\t{x}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    let mut settings = config_settings(&cfg);
    settings["groups"] = json!(groups.iter().map(|(g, _)| g).collect::<Vec<_>>());
    write_manifest(
        out,
        "explain",
        settings,
        &[&cfg.data_dir, &a.params],
        &["attention.tsv"],
    )
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let levels: Vec<usize> = parse_list(&a.k_remove, "k_remove")?;
    let policy = match a.removal.as_str() {
        "per-group" => RemovalPolicy::PerGroup,
        "global" => RemovalPolicy::Global,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown removal {other:?} (per-group or global)"
            )))
        }
    };
    let ds = Dataset::read_dir(&cfg.data_dir)?;
    let loaded = Loaded::load(&cfg, &ds, a.params.as_deref())?;
    let scorer = loaded.scorer(&cfg);
    let opts = eval_options(&cfg);
    let rows = levels
        .iter()
        .map(|&k| Ok((k, ablation_remove_top_users(&*scorer, &ds, &ds.test, k, policy, &opts)?)))
        .collect::<Result<Vec<_>>>()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("ablation.csv"))?;
    write_ablation_csv(&rows, &mut w)?;
    w.flush()?;
    let mut settings = config_settings(&cfg);
    settings["k_remove"] = json!(levels);
    settings["removal"] = json!(a.removal);
    write_manifest(
        out,
        "ablate",
        settings,
        &inputs(&cfg, a.params.as_deref()),
        &["ablation.csv"],
    )
}

fn parse_bins(raw: &str) -> Result<Vec<SizeBin>> {
    raw.split(',')
        .map(|b| {
            let (lo, hi) = b
                .trim()
                .split_once('-')
                .ok_or_else(|| Error::InvalidArgument(format!("bad bin {b:?}, expected MIN-MAX")))?;
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad bin {b:?}")))
            };
            Ok(SizeBin {
                min: parse(lo)?,
                max: parse(hi)?,
            })
        })
        .collect()
}

pub fn cmd_breakdown(a: &BreakdownArgs) -> Result<()> {
    let cfg = a.run.resolve()?;
    let bins = match &a.bins {
        Some(raw) => parse_bins(raw)?,
        None => DEFAULT_BINS.to_vec(),
    };
    let ds = Dataset::read_dir(&cfg.data_dir)?;
    let loaded = Loaded::load(&cfg, &ds, a.params.as_deref())?;
    let rows = group_size_breakdown(&*loaded.scorer(&cfg), &ds, &ds.test, &bins, &eval_options(&cfg))?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("breakdown.csv"))?;
    write_breakdown_csv(&rows, &mut w)?;
    w.flush()?;
    let mut settings = config_settings(&cfg);
    settings["bins"] = json!(bins.iter().map(SizeBin::label).collect::<Vec<_>>());
    write_manifest(
        out,
        "breakdown",
        settings,
        &inputs(&cfg, a.params.as_deref()),
        &["breakdown.csv"],
    )
}

pub fn cmd_ttest(a: &TtestArgs) -> Result<()> {
    let column = |path: &Path| -> Result<(Vec<String>, Vec<f64>)> {
        let (ids, mut cols) = read_per_event_block(open(path)?)?;
        let col = cols
            .remove(&a.column)
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no column {:?}", path.display(), a.column)))?;
        Ok((ids, col))
    };
    let (ids_a, xa) = column(&a.a)?;
    let (ids_b, xb) = column(&a.b)?;
    if ids_a != ids_b {
        return Err(Error::DimensionMismatch(
            "the two metrics files list different events".into(),
        ));
    }
    let t = paired_t_test(&xa, &xb)?;
    fs::create_dir_all(&a.out)?;
    let mut w = create(&a.out.join("ttest.csv"))?;
    writeln!(w, "column,events,mean_diff,t,df,p,degenerate")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        a.column,
        xa.len(),
        t.mean_diff,
        t.t,
        t.df,
        t.p,
        t.degenerate
    )?;
    w.flush()?;
    write_manifest(
        &a.out,
        "ttest",
        json!({ "column": a.column }),
        &[&a.a, &a.b],
        &["ttest.csv"],
    )
}
