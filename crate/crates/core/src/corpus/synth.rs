//! Builds group event logs out of individual star ratings.
//!
//! A group adopts a movie when every member rated it at or above the star
//! threshold. Member sets are either drawn uniformly (`Rand`) or restricted to
//! users whose every internal pair is among the most similar pairs in the
//! table (`Simi`).

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng as _;

use crate::corpus::{InteractionEvent, RatingsTable};
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthMode {
    Simi,
    Rand,
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simi" => Ok(SynthMode::Simi),
            "rand" => Ok(SynthMode::Rand),
            other => Err(Error::InvalidArgument(format!(
                "unknown synthesis mode {other:?} (expected simi or rand)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub mode: SynthMode,
    pub group_size: usize,
    pub star_threshold: u8,
    /// Number of distinct groups with at least one adoption to emit.
    pub num_groups: usize,
    /// Upper bound on sampled member sets before giving up.
    pub max_attempts: usize,
    /// Fraction of most-similar pairs that qualify in `Simi` mode.
    pub top_fraction: f64,
    /// Pairs with fewer co-rated items have no similarity.
    pub min_corated: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            mode: SynthMode::Rand,
            group_size: 5,
            star_threshold: 4,
            num_groups: 1000,
            max_attempts: 1_000_000,
            top_fraction: 0.33,
            min_corated: 3,
            seed: 0,
        }
    }
}

/// Cosine similarity of two users' mean-centred ratings over co-rated items.
/// Each user is centred on the mean of all of their ratings. `None` when
/// fewer than `min_corated` items are shared or a centred vector vanishes.
pub fn user_similarity(rt: &RatingsTable, a: usize, b: usize, min_corated: usize) -> Option<f64> {
    let (ra, rb) = (rt.user_ratings(a), rt.user_ratings(b));
    let mean = |r: &[(usize, u8)]| r.iter().map(|&(_, s)| f64::from(s)).sum::<f64>() / r.len() as f64;
    let (ma, mb) = (mean(ra), mean(rb));
    let (mut dot, mut na, mut nb, mut shared) = (0.0, 0.0, 0.0, 0usize);
    let (mut i, mut j) = (0, 0);
    while i < ra.len() && j < rb.len() {
        match ra[i].0.cmp(&rb[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let x = f64::from(ra[i].1) - ma;
                let y = f64::from(rb[j].1) - mb;
                dot += x * y;
                na += x * x;
                nb += y * y;
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    if shared < min_corated || na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na * nb).sqrt())
}

/// All defined pair similarities `(a, b, sim)` with `a < b`.
pub fn pairwise_similarities(rt: &RatingsTable, min_corated: usize) -> Vec<(usize, usize, f64)> {
    let m = rt.num_users();
    let mut out = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if let Some(s) = user_similarity(rt, a, b, min_corated) {
                out.push((a, b, s));
            }
        }
    }
    out
}

/// Similarity value at the boundary of the top `fraction` of `sims`; pairs at
/// or above it qualify. At least one pair always qualifies.
pub fn top_fraction_threshold(sims: &[f64], fraction: f64) -> Option<f64> {
    if sims.is_empty() {
        return None;
    }
    let mut sorted = sims.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let k = ((fraction * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[k - 1])
}

fn liked_items(rt: &RatingsTable, threshold: u8) -> Vec<Vec<usize>> {
    (0..rt.num_users())
        .map(|u| {
            rt.user_ratings(u)
                .iter()
                .filter(|&&(_, s)| s >= threshold)
                .map(|&(i, _)| i)
                .collect()
        })
        .collect()
}

fn common_items(liked: &[Vec<usize>], members: &[usize]) -> Vec<usize> {
    let mut common = liked[members[0]].clone();
    for &m in &members[1..] {
        let other = &liked[m];
        common.retain(|i| other.binary_search(i).is_ok());
        if common.is_empty() {
            break;
        }
    }
    common
}

/// Draws a member set in which every pair is adjacent, growing it from a
/// random seed user. Returns `None` when the draw dead-ends.
fn draw_similar_group(adjacency: &[Vec<usize>], size: usize, rng: &mut Rng) -> Option<Vec<usize>> {
    let starts: Vec<usize> = (0..adjacency.len())
        .filter(|&u| adjacency[u].len() + 1 >= size)
        .collect();
    if starts.is_empty() {
        return None;
    }
    let first = starts[rng.gen_range(0..starts.len())];
    let mut group = vec![first];
    let mut candidates = adjacency[first].clone();
    while group.len() < size {
        if candidates.is_empty() {
            return None;
        }
        let next = candidates.swap_remove(rng.gen_range(0..candidates.len()));
        candidates.retain(|c| adjacency[next].binary_search(c).is_ok());
        group.push(next);
    }
    group.sort_unstable();
    Some(group)
}

/// Emits one event per (group, movie) where every member rated the movie at or
/// above `star_threshold`. Indexes refer to `rt`'s id maps.
pub fn synthesize_groups_from_ratings(rt: &RatingsTable, cfg: &SynthConfig) -> Result<Vec<InteractionEvent>> {
    if cfg.group_size < 2 {
        return Err(Error::InvalidArgument("group_size must be at least 2".into()));
    }
    if rt.is_empty() {
        return Err(Error::Empty("ratings table is empty".into()));
    }
    let m = rt.num_users();
    if m < cfg.group_size {
        return Err(Error::Synthesis(format!(
            "only {m} users, cannot form groups of {}",
            cfg.group_size
        )));
    }
    let liked = liked_items(rt, cfg.star_threshold);
    let mut rng = seeded(cfg.seed);

    let adjacency = match cfg.mode {
        SynthMode::Rand => None,
        SynthMode::Simi => {
            let pairs = pairwise_similarities(rt, cfg.min_corated);
            let sims: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let Some(threshold) = top_fraction_threshold(&sims, cfg.top_fraction) else {
                return Err(Error::Synthesis(format!(
                    "no user pair shares {} co-rated items",
                    cfg.min_corated
                )));
            };
            let mut adj = vec![Vec::new(); m];
            for &(a, b, s) in &pairs {
                if s >= threshold {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
            adj.iter_mut().for_each(|v| v.sort_unstable());
            Some(adj)
        }
    };

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut events = Vec::new();
    let mut attempts = 0;
    let mut dead_ends = 0;
    while seen.len() < cfg.num_groups && attempts < cfg.max_attempts {
        attempts += 1;
        let group = match &adjacency {
            None => {
                let mut g = sample(&mut rng, m, cfg.group_size).into_vec();
                g.sort_unstable();
                g
            }
            Some(adj) => match draw_similar_group(adj, cfg.group_size, &mut rng) {
                Some(g) => g,
                None => {
                    dead_ends += 1;
                    continue;
                }
            },
        };
        if seen.contains(&group) {
            continue;
        }
        let common = common_items(&liked, &group);
        if common.is_empty() {
            continue;
        }
        let gid = seen.len();
        for item in common {
            events.push(InteractionEvent::new(
                format!("g{gid}_{}", rt.items.external(item)),
                group.clone(),
                item,
            ));
        }
        seen.insert(group);
    }
    if events.is_empty() {
        return Err(Error::Synthesis(format!(
            "no qualifying group after {attempts} attempts ({dead_ends} dead-end draws; {m} users, group size {}, threshold {})",
            cfg.group_size, cfg.star_threshold
        )));
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &str, u8)]) -> RatingsTable {
        let mut t = RatingsTable::new();
        for &(u, i, s) in rows {
            t.insert(u, i, s).unwrap();
        }
        t
    }

    fn five_users(stars_for_last: u8) -> RatingsTable {
        let mut rows = Vec::new();
        let names = ["a", "b", "c", "d", "e"];
        for (k, u) in names.iter().enumerate() {
            rows.push((*u, "m", if k == 4 { stars_for_last } else { 5 }));
        }
        table(&rows)
    }

    #[test]
    fn unanimous_movie_is_emitted() {
        let cfg = SynthConfig {
            num_groups: 1,
            ..SynthConfig::default()
        };
        let events = synthesize_groups_from_ratings(&five_users(5), &cfg).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].members, vec![0, 1, 2, 3, 4]);
        assert_eq!(events[0].item, 0);
    }

    #[test]
    fn one_low_rating_blocks_the_movie() {
        let cfg = SynthConfig {
            num_groups: 1,
            max_attempts: 50,
            ..SynthConfig::default()
        };
        let err = synthesize_groups_from_ratings(&five_users(3), &cfg).unwrap_err();
        assert!(matches!(err, Error::Synthesis(_)));
    }

    // Frozen from an independent numpy computation of centred cosine.
    const BLOCK_RATINGS: [[u8; 6]; 6] = [
        [5, 4, 4, 3, 2, 1],
        [5, 5, 4, 3, 3, 1],
        [4, 4, 3, 2, 2, 1],
        [1, 2, 2, 3, 4, 5],
        [1, 1, 2, 4, 4, 5],
        [2, 2, 3, 3, 4, 5],
    ];
    const BLOCK_SIMS: [[f64; 6]; 6] = [
        [
            1.0,
            0.940717722154696,
            0.9349469900084572,
            -1.0,
            -0.9334835455531586,
            -0.949177584176923,
        ],
        [
            0.940717722154696,
            1.0,
            0.9800379116648473,
            -0.940717722154696,
            -0.9570656179025434,
            -0.9588566892832552,
        ],
        [
            0.9349469900084572,
            0.9800379116648473,
            1.0,
            -0.9349469900084572,
            -0.9907642967559194,
            -0.9417632186960221,
        ],
        [
            -1.0,
            -0.940717722154696,
            -0.9349469900084572,
            1.0,
            0.9334835455531586,
            0.949177584176923,
        ],
        [
            -0.9334835455531586,
            -0.9570656179025434,
            -0.9907642967559194,
            0.9334835455531586,
            1.0,
            0.9104912108299725,
        ],
        [
            -0.949177584176923,
            -0.9588566892832552,
            -0.9417632186960221,
            0.949177584176923,
            0.9104912108299725,
            1.0,
        ],
    ];

    fn block_table() -> RatingsTable {
        let mut t = RatingsTable::new();
        for (u, row) in BLOCK_RATINGS.iter().enumerate() {
            for (i, &s) in row.iter().enumerate() {
                t.insert(&format!("u{u}"), &format!("m{i}"), s).unwrap();
            }
        }
        t
    }

    #[test]
    fn similarity_matches_oracle() {
        let t = block_table();
        for (a, row) in BLOCK_SIMS.iter().enumerate() {
            for (b, &want) in row.iter().enumerate() {
                if a != b {
                    let s = user_similarity(&t, a, b, 3).unwrap();
                    assert!((s - want).abs() < 1e-12, "{a},{b}: {s}");
                }
            }
        }
        let sims: Vec<f64> = pairwise_similarities(&t, 3).iter().map(|p| p.2).collect();
        assert_eq!(sims.len(), 15);
        let thr = top_fraction_threshold(&sims, 0.33).unwrap();
        assert!((thr - 0.9334835455531586).abs() < 1e-12);
    }

    #[test]
    fn simi_groups_stay_inside_a_block() {
        let t = block_table();
        let cfg = SynthConfig {
            mode: SynthMode::Simi,
            group_size: 3,
            num_groups: 10,
            max_attempts: 200,
            ..SynthConfig::default()
        };
        let events = synthesize_groups_from_ratings(&t, &cfg).unwrap();
        assert!(!events.is_empty());
        for ev in &events {
            let low = ev.members.iter().all(|&m| m < 3);
            let high = ev.members.iter().all(|&m| m >= 3);
            assert!(low || high, "{:?}", ev.members);
        }
    }

    #[test]
    fn too_few_corated_items_excluded() {
        let t = table(&[("a", "x", 5), ("a", "y", 1), ("b", "x", 4), ("b", "y", 2)]);
        assert_eq!(user_similarity(&t, 0, 1, 3), None);
        assert!(user_similarity(&t, 0, 1, 2).is_some());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("simi".parse::<SynthMode>().unwrap(), SynthMode::Simi);
        assert!("other".parse::<SynthMode>().is_err());
    }
}
