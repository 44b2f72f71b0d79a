//! Event logs, id mappings, dataset splits and negative sampling.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

pub mod planted;
pub mod ratings;
pub mod synth;

pub use ratings::RatingsTable;
pub use synth::{synthesize_groups_from_ratings, SynthConfig, SynthMode};

/// Insertion-ordered mapping between external string ids and dense indexes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, allocating the next free one if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn external(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.ids.iter().enumerate().map(|(i, s)| (i, s.as_str()))
    }

    /// Writes the `external_id<TAB>index` sidecar format.
    pub fn write_tsv<W: Write>(&self, mut sink: W) -> Result<()> {
        for (i, id) in self.iter() {
            writeln!(sink, "{id}\t{i}")?;
        }
        Ok(())
    }

    /// Reads an id map sidecar. Indexes must be contiguous and in order.
    pub fn read_tsv<R: Read>(source: R) -> Result<Self> {
        let mut map = IdMap::new();
        for (lineno, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            let (id, idx) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected external_id<TAB>index"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad index {idx:?}")))?;
            if idx != map.len() || map.get(id).is_some() {
                return Err(Error::parse(lineno, "indexes must be unique and contiguous"));
            }
            map.intern(id);
        }
        Ok(map)
    }
}

/// One historical group decision: the members and the item they adopted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub event_id: String,
    pub members: Vec<usize>,
    pub item: usize,
}

impl InteractionEvent {
    pub fn new(event_id: impl Into<String>, members: Vec<usize>, item: usize) -> Self {
        Self {
            event_id: event_id.into(),
            members,
            item,
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Sorted member tuple used as the group's identity.
    pub fn member_key(&self) -> Vec<usize> {
        canonical_members(&self.members)
    }
}

pub fn canonical_members(members: &[usize]) -> Vec<usize> {
    let mut key = members.to_vec();
    key.sort_unstable();
    key
}

/// A parsed event log with the id maps allocated while reading it.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    pub users: IdMap,
    pub items: IdMap,
    pub events: Vec<InteractionEvent>,
}

impl EventLog {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }
}

struct RawLine<'a> {
    event_id: &'a str,
    item: &'a str,
    members: Vec<&'a str>,
}

fn parse_line(line: &str, lineno: usize) -> Result<RawLine<'_>> {
    let mut fields = line.split('\t');
    let (Some(event_id), Some(item), Some(users), None) = (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(Error::parse(lineno, "expected 3 tab-separated fields"));
    };
    if event_id.is_empty() {
        return Err(Error::parse(lineno, "empty event id"));
    }
    if item.is_empty() {
        return Err(Error::parse(lineno, "empty item id"));
    }
    if users.is_empty() {
        return Err(Error::parse(lineno, "empty member list"));
    }
    let members: Vec<&str> = users.split(',').collect();
    if members.iter().any(|m| m.is_empty()) {
        return Err(Error::parse(lineno, "empty user id in member list"));
    }
    Ok(RawLine {
        event_id,
        item,
        members,
    })
}

fn dedup_members(raw: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    raw.into_iter().filter(|m| seen.insert(*m)).collect()
}

/// Parses an event log (`event_id<TAB>item_id<TAB>user,user,...`), allocating
/// user and item indexes in order of first appearance.
pub fn load_events<R: Read>(source: R) -> Result<EventLog> {
    let mut log = EventLog::default();
    for (lineno, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let raw = parse_line(line, lineno)?;
        let item = log.items.intern(raw.item);
        let members = dedup_members(raw.members.iter().map(|u| log.users.intern(u)));
        log.events.push(InteractionEvent::new(raw.event_id, members, item));
    }
    if log.events.is_empty() {
        return Err(Error::Empty("event stream has no events".into()));
    }
    Ok(log)
}

/// Parses an event log against fixed id maps; unknown ids are errors.
pub fn load_events_with_maps<R: Read>(source: R, users: &IdMap, items: &IdMap) -> Result<Vec<InteractionEvent>> {
    let mut events = Vec::new();
    for (lineno, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let raw = parse_line(line, lineno)?;
        let item = items
            .get(raw.item)
            .ok_or_else(|| Error::parse(lineno, format!("unknown item id {:?}", raw.item)))?;
        let members = raw
            .members
            .iter()
            .map(|u| {
                users
                    .get(u)
                    .ok_or_else(|| Error::parse(lineno, format!("unknown user id {u:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        events.push(InteractionEvent::new(raw.event_id, dedup_members(members), item));
    }
    Ok(events)
}

/// Writes events in the event-log format using external ids.
pub fn write_events<W: Write>(mut sink: W, events: &[InteractionEvent], users: &IdMap, items: &IdMap) -> Result<()> {
    for ev in events {
        let members: Vec<&str> = ev.members.iter().map(|&m| users.external(m)).collect();
        writeln!(
            sink,
            "{}\t{}\t{}",
            ev.event_id,
            items.external(ev.item),
            members.join(",")
        )?;
    }
    Ok(())
}

/// Id-mapped users and items with train/validation/test partitions.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub users: IdMap,
    pub items: IdMap,
    pub train: Vec<InteractionEvent>,
    pub valid: Vec<InteractionEvent>,
    pub test: Vec<InteractionEvent>,
    group_adoptions: HashMap<Vec<usize>, BTreeSet<usize>>,
}

static NO_ADOPTIONS: BTreeSet<usize> = BTreeSet::new();

impl Dataset {
    pub fn from_partitions(
        users: IdMap,
        items: IdMap,
        train: Vec<InteractionEvent>,
        valid: Vec<InteractionEvent>,
        test: Vec<InteractionEvent>,
    ) -> Result<Self> {
        let (m, n) = (users.len(), items.len());
        for ev in train.iter().chain(&valid).chain(&test) {
            if ev.members.is_empty() {
                return Err(Error::InvalidArgument(format!("event {} has no members", ev.event_id)));
            }
            if ev.item >= n || ev.members.iter().any(|&u| u >= m) {
                return Err(Error::InvalidArgument(format!(
                    "event {} references an index outside {m} users / {n} items",
                    ev.event_id
                )));
            }
        }
        let mut group_adoptions: HashMap<Vec<usize>, BTreeSet<usize>> = HashMap::new();
        for ev in &train {
            group_adoptions.entry(ev.member_key()).or_default().insert(ev.item);
        }
        Ok(Self {
            users,
            items,
            train,
            valid,
            test,
            group_adoptions,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Items the exact member set adopted in the training partition.
    pub fn adoptions(&self, members: &[usize]) -> &BTreeSet<usize> {
        self.group_adoptions
            .get(&canonical_members(members))
            .unwrap_or(&NO_ADOPTIONS)
    }

    /// Keeps only events whose size lies in `min..=max` (`None` = unbounded).
    /// Id maps and train adoptions are left untouched.
    pub fn filter_by_group_size(&self, min: usize, max: Option<usize>) -> Result<Dataset> {
        if min == 0 || max.is_some_and(|mx| mx < min) {
            return Err(Error::InvalidArgument(format!(
                "group size range must satisfy 1 <= min <= max, got {min}..{max:?}"
            )));
        }
        let keep = |evs: &[InteractionEvent]| -> Vec<InteractionEvent> {
            evs.iter()
                .filter(|e| e.size() >= min && max.is_none_or(|mx| e.size() <= mx))
                .cloned()
                .collect()
        };
        Ok(Dataset {
            users: self.users.clone(),
            items: self.items.clone(),
            train: keep(&self.train),
            valid: keep(&self.valid),
            test: keep(&self.test),
            group_adoptions: self.group_adoptions.clone(),
        })
    }

    /// Writes the split as `train.tsv`, `valid.tsv`, `test.tsv` plus the
    /// `users.idmap.tsv` / `items.idmap.tsv` sidecars.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, part) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            let f = fs::File::create(dir.join(format!("{name}.tsv")))?;
            let mut w = std::io::BufWriter::new(f);
            write_events(&mut w, part, &self.users, &self.items)?;
            w.flush()?;
        }
        self.users.write_tsv(fs::File::create(dir.join("users.idmap.tsv"))?)?;
        self.items.write_tsv(fs::File::create(dir.join("items.idmap.tsv"))?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Dataset> {
        let open = |name: &str| {
            fs::File::open(dir.join(name)).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", dir.join(name).display()),
                ))
            })
        };
        let users = IdMap::read_tsv(open("users.idmap.tsv")?)?;
        let items = IdMap::read_tsv(open("items.idmap.tsv")?)?;
        let train = load_events_with_maps(open("train.tsv")?, &users, &items)?;
        let valid = load_events_with_maps(open("valid.tsv")?, &users, &items)?;
        let test = load_events_with_maps(open("test.tsv")?, &users, &items)?;
        Dataset::from_partitions(users, items, train, valid, test)
    }
}

/// Split ratios for train / validation / test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            valid: 0.1,
            test: 0.2,
        }
    }
}

/// Uniformly permutes events under `seed` and partitions them. Validation and
/// test sizes are floored; the remainder goes to train. Each partition keeps
/// the log order of its events.
pub fn split_dataset(log: EventLog, ratios: SplitRatios, seed: u64) -> Result<Dataset> {
    let SplitRatios { train, valid, test } = ratios;
    if [train, valid, test].iter().any(|r| !(0.0..=1.0).contains(r)) || (train + valid + test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be in [0,1] and sum to 1, got ({train}, {valid}, {test})"
        )));
    }
    let n = log.events.len();
    if n == 0 {
        return Err(Error::Empty("no events to split".into()));
    }
    // Guard against products like 0.1 * 30 = 2.9999999999999996.
    let floor = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
    let n_valid = floor(valid);
    let n_test = floor(test);
    let n_train = n - n_valid - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed);
    order.shuffle(&mut rng);

    let mut assignment = vec![0u8; n];
    for &i in &order[n_train..n_train + n_valid] {
        assignment[i] = 1;
    }
    for &i in &order[n_train + n_valid..] {
        assignment[i] = 2;
    }
    let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
    for (ev, part) in log.events.into_iter().zip(assignment) {
        match part {
            0 => tr.push(ev),
            1 => va.push(ev),
            _ => te.push(ev),
        }
    }
    Dataset::from_partitions(log.users, log.items, tr, va, te)
}

/// Draws up to `count` distinct negative items for `event`: items the exact
/// member set never adopted in train, excluding the positive item. When the
/// pool is smaller than `count` the whole pool is returned in index order.
pub fn sample_negatives(ds: &Dataset, event: &InteractionEvent, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let adopted = ds.adoptions(&event.members);
    let excluded = |i: usize| i == event.item || adopted.contains(&i);
    let n = ds.num_items();
    let blocked = adopted.len() + usize::from(!adopted.contains(&event.item));
    let pool = n.saturating_sub(blocked);
    if pool <= count {
        return (0..n).filter(|&i| !excluded(i)).collect();
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let cand = rng.gen_range(0..n);
        if !excluded(cand) && !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}
