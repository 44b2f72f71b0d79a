//! User-based collaborative filtering with group score aggregation.

use std::collections::BTreeSet;

use crate::corpus::InteractionEvent;
use crate::error::{Error, Result};

/// How per-member scores are combined into a group score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregation {
    Average,
    LeastMisery,
    /// `lambda * mean - (1 - lambda) * population stddev`.
    RelevanceDisagreement {
        lambda: f64,
    },
}

pub fn cf_aggregate(scores: &[f64], strategy: Aggregation) -> f64 {
    assert!(!scores.is_empty(), "cannot aggregate an empty group");
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    match strategy {
        Aggregation::Average => mean,
        Aggregation::LeastMisery => scores.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::RelevanceDisagreement { lambda } => {
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
            lambda * mean - (1.0 - lambda) * var.sqrt()
        }
    }
}

/// Binary user-item interactions from training events (every member of an
/// event interacted with its item) plus each user's top-`k_nn` neighbours.
#[derive(Debug, Clone)]
pub struct CfModel {
    num_items: usize,
    k_nn: usize,
    interactions: Vec<Vec<usize>>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl CfModel {
    pub fn fit(train: &[InteractionEvent], num_users: usize, num_items: usize, k_nn: usize) -> Result<Self> {
        if k_nn == 0 {
            return Err(Error::InvalidArgument("k_nn must be at least 1".into()));
        }
        let mut sets = vec![BTreeSet::new(); num_users];
        let mut item_users = vec![BTreeSet::new(); num_items];
        for ev in train {
            for &u in &ev.members {
                sets[u].insert(ev.item);
                item_users[ev.item].insert(u);
            }
        }
        let interactions: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();

        let mut overlap = vec![0usize; num_users];
        let mut touched = Vec::new();
        let neighbors = (0..num_users)
            .map(|u| {
                for &i in &interactions[u] {
                    for &v in &item_users[i] {
                        if v != u {
                            if overlap[v] == 0 {
                                touched.push(v);
                            }
                            overlap[v] += 1;
                        }
                    }
                }
                let mut cands: Vec<(usize, f64)> = touched
                    .drain(..)
                    .map(|v| {
                        let sim = cosine(overlap[v], interactions[u].len(), interactions[v].len());
                        overlap[v] = 0;
                        (v, sim)
                    })
                    .collect();
                cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                cands.truncate(k_nn);
                cands
            })
            .collect();
        Ok(Self {
            num_items,
            k_nn,
            interactions,
            neighbors,
        })
    }

    pub fn k_nn(&self) -> usize {
        self.k_nn
    }

    /// Cosine similarity of two users' binary interaction rows.
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        let (ra, rb) = (&self.interactions[a], &self.interactions[b]);
        let shared = ra.iter().filter(|i| rb.binary_search(i).is_ok()).count();
        cosine(shared, ra.len(), rb.len())
    }

    pub fn neighbors(&self, user: usize) -> &[(usize, f64)] {
        &self.neighbors[user]
    }

    pub fn interacted(&self, user: usize, item: usize) -> bool {
        self.interactions[user].binary_search(&item).is_ok()
    }

    pub fn predict_individual(&self, user: usize, item: usize) -> f64 {
        let nb = &self.neighbors[user];
        let total: f64 = nb.iter().map(|(_, s)| s.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        nb.iter()
            .filter(|(v, _)| self.interacted(*v, item))
            .map(|(_, s)| s)
            .sum::<f64>()
            / total
    }

    /// Scores of every item for one user.
    pub fn predict_all(&self, user: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_items];
        let nb = &self.neighbors[user];
        let total: f64 = nb.iter().map(|(_, s)| s.abs()).sum();
        if total == 0.0 {
            return out;
        }
        for &(v, s) in nb {
            for &i in &self.interactions[v] {
                out[i] += s;
            }
        }
        out.iter_mut().for_each(|x| *x /= total);
        out
    }

    /// Aggregated group scores for every item.
    pub fn group_scores(&self, members: &[usize], strategy: Aggregation) -> Vec<f64> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        let per_member: Vec<Vec<f64>> = sorted.iter().map(|&u| self.predict_all(u)).collect();
        let mut buf = vec![0.0; sorted.len()];
        (0..self.num_items)
            .map(|i| {
                for (b, s) in buf.iter_mut().zip(&per_member) {
                    *b = s[i];
                }
                cf_aggregate(&buf, strategy)
            })
            .collect()
    }
}

fn cosine(shared: usize, len_a: usize, len_b: usize) -> f64 {
    if shared == 0 {
        return 0.0;
    }
    shared as f64 / ((len_a as f64) * (len_b as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_closed_forms() {
        let s = [0.2, 0.8];
        assert!((cf_aggregate(&s, Aggregation::Average) - 0.5).abs() < 1e-15);
        assert_eq!(cf_aggregate(&s, Aggregation::LeastMisery), 0.2);
        for lambda in [0.0, 0.3, 0.8, 1.0] {
            let rd = cf_aggregate(&[0.4; 3], Aggregation::RelevanceDisagreement { lambda });
            assert!((rd - lambda * 0.4).abs() < 1e-15);
        }
        let rd = cf_aggregate(&[0.0, 1.0], Aggregation::RelevanceDisagreement { lambda: 0.8 });
        assert!((rd - 0.3).abs() < 1e-15);
    }

    fn ev(members: &[usize], item: usize) -> InteractionEvent {
        InteractionEvent::new("e", members.to_vec(), item)
    }

    #[test]
    fn identical_neighbor_scores_one() {
        // Users 0 and 1 share items {0, 1}; user 1 also adopted item 2.
        let train = [ev(&[0, 1], 0), ev(&[0, 1], 1), ev(&[1], 2), ev(&[2], 3)];
        let cf = CfModel::fit(&train, 3, 4, 50).unwrap();
        assert_eq!(cf.neighbors(0).len(), 1);
        assert!((cf.predict_individual(0, 2) - 1.0).abs() < 1e-15);
        assert_eq!(cf.predict_individual(0, 3), 0.0);
        assert_eq!(cf.predict_individual(2, 0), 0.0);
        assert!(cf.neighbors(2).is_empty());
    }

    #[test]
    fn self_excluded_and_symmetric() {
        let train = [ev(&[0, 1, 2], 0), ev(&[1, 2], 1), ev(&[0, 3], 2)];
        let cf = CfModel::fit(&train, 4, 3, 2).unwrap();
        for u in 0..4 {
            assert!(cf.neighbors(u).iter().all(|&(v, _)| v != u));
            assert!(cf.neighbors(u).len() <= 2);
            for v in 0..4 {
                assert!((cf.similarity(u, v) - cf.similarity(v, u)).abs() < 1e-12);
            }
        }
    }
}
