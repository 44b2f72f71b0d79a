//! Synthetic groups with a planted decision maker.
//!
//! Every user has a global influence level and a favourite item. In each
//! generated group the most influential member alone decides: the adopted item
//! is that member's favourite. Users belong to communities whose favourites
//! share a block of items, and groups are assembled with a configurable bias
//! towards a single community, so the remaining members carry partial
//! information about the decision.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{EventLog, IdMap, InteractionEvent};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub num_users: usize,
    pub num_items: usize,
    pub num_groups: usize,
    /// Group sizes are drawn uniformly from `min_group_size..=max_group_size`.
    pub min_group_size: usize,
    pub max_group_size: usize,
    pub communities: usize,
    /// Probability that each non-seed member comes from the seed's community.
    pub homophily: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            num_users: 1000,
            num_items: 200,
            num_groups: 5000,
            min_group_size: 5,
            max_group_size: 5,
            communities: 20,
            homophily: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedData {
    pub log: EventLog,
    /// Influence level per user; higher wins.
    pub influence: Vec<f64>,
    pub favorite: Vec<usize>,
    pub community: Vec<usize>,
}

impl PlantedData {
    /// The member that decided `event`.
    pub fn dominant(&self, event: &InteractionEvent) -> usize {
        dominant_member(&self.influence, &event.members)
    }
}

fn dominant_member(influence: &[f64], members: &[usize]) -> usize {
    *members
        .iter()
        .max_by(|&&a, &&b| influence[a].total_cmp(&influence[b]).then(b.cmp(&a)))
        .expect("non-empty group")
}

pub fn generate(cfg: &PlantedConfig) -> Result<PlantedData> {
    let PlantedConfig {
        num_users,
        num_items,
        num_groups,
        min_group_size,
        max_group_size,
        communities,
        homophily,
        seed,
    } = *cfg;
    if min_group_size < 2
        || min_group_size > max_group_size
        || communities == 0
        || num_users < max_group_size * communities
    {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= min_group_size <= max_group_size and at least max_group_size users per community \
             ({num_users} users, {communities} communities, sizes {min_group_size}..={max_group_size})"
        )));
    }
    if num_items < communities || !(0.0..=1.0).contains(&homophily) {
        return Err(Error::InvalidArgument(
            "need at least one item per community and homophily in [0, 1]".into(),
        ));
    }
    let mut rng = seeded(seed);

    let mut rank: Vec<usize> = (0..num_users).collect();
    rank.shuffle(&mut rng);
    let influence: Vec<f64> = rank.iter().map(|&r| r as f64 / num_users as f64).collect();

    let community: Vec<usize> = (0..num_users).map(|u| u % communities).collect();
    let block = num_items / communities;
    let favorite: Vec<usize> = community.iter().map(|&c| c * block + rng.gen_range(0..block)).collect();
    let mut by_community = vec![Vec::new(); communities];
    for (u, &c) in community.iter().enumerate() {
        by_community[c].push(u);
    }

    let mut users = IdMap::new();
    for u in 0..num_users {
        users.intern(&format!("u{u}"));
    }
    let mut items = IdMap::new();
    for i in 0..num_items {
        items.intern(&format!("i{i}"));
    }

    let mut events = Vec::with_capacity(num_groups);
    while events.len() < num_groups {
        let group_size = rng.gen_range(min_group_size..=max_group_size);
        let first = rng.gen_range(0..num_users);
        let mut members = vec![first];
        while members.len() < group_size {
            let cand = if rng.gen::<f64>() < homophily {
                let pool = &by_community[community[first]];
                pool[rng.gen_range(0..pool.len())]
            } else {
                rng.gen_range(0..num_users)
            };
            if !members.contains(&cand) {
                members.push(cand);
            }
        }
        members.sort_unstable();
        let decider = dominant_member(&influence, &members);
        let id = format!("p{}", events.len());
        events.push(InteractionEvent::new(id, members, favorite[decider]));
    }

    Ok(PlantedData {
        log: EventLog { users, items, events },
        influence,
        favorite,
        community,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decider_picks_the_item() {
        let cfg = PlantedConfig {
            num_users: 100,
            num_items: 40,
            num_groups: 300,
            communities: 4,
            ..PlantedConfig::default()
        };
        let data = generate(&cfg).unwrap();
        assert_eq!(data.log.events.len(), 300);
        for ev in &data.log.events {
            assert_eq!(ev.size(), 5);
            let d = data.dominant(ev);
            assert!(ev.members.iter().all(|&m| data.influence[m] <= data.influence[d]));
            assert_eq!(ev.item, data.favorite[d]);
        }
        let again = generate(&cfg).unwrap();
        let mixed = generate(&PlantedConfig {
            min_group_size: 2,
            max_group_size: 4,
            ..cfg.clone()
        })
        .unwrap();
        let sizes: std::collections::BTreeSet<usize> = mixed.log.events.iter().map(|e| e.size()).collect();
        assert_eq!(sizes.into_iter().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(again.log.events, data.log.events);
    }
}
