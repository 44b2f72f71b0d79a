use crate::corpus::{Dataset, InteractionEvent};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalOptions, GroupScorer, MetricsReport};

/// Inclusive group-size range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBin {
    pub min: usize,
    pub max: usize,
}

impl SizeBin {
    pub fn contains(&self, size: usize) -> bool {
        (self.min..=self.max).contains(&size)
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.min, self.max)
    }
}

/// 1-5, 6-10, 11-15 and 16-20 members; larger groups are left out.
pub const DEFAULT_BINS: [SizeBin; 4] = [
    SizeBin { min: 1, max: 5 },
    SizeBin { min: 6, max: 10 },
    SizeBin { min: 11, max: 15 },
    SizeBin { min: 16, max: 20 },
];

/// Evaluates each bin separately. Bins without events come back as `None`.
pub fn group_size_breakdown<S: GroupScorer + ?Sized>(
    scorer: &S,
    ds: &Dataset,
    events: &[InteractionEvent],
    bins: &[SizeBin],
    opts: &EvalOptions,
) -> Result<Vec<(SizeBin, Option<MetricsReport>)>> {
    for (i, a) in bins.iter().enumerate() {
        if a.min == 0 || a.min > a.max {
            return Err(Error::InvalidArgument(format!("bad size bin {}", a.label())));
        }
        if bins[i + 1..].iter().any(|b| a.min <= b.max && b.min <= a.max) {
            return Err(Error::InvalidArgument("size bins overlap".into()));
        }
    }
    bins.iter()
        .map(|&bin| {
            let subset: Vec<InteractionEvent> = events.iter().filter(|e| bin.contains(e.size())).cloned().collect();
            let report = if subset.is_empty() {
                None
            } else {
                Some(evaluate(scorer, ds, &subset, opts)?)
            };
            Ok((bin, report))
        })
        .collect()
}
