//! Cross-validation fold plans over prompts.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("fold {0}: source and target overlap")]
    Overlap(String),
    #[error("fold {0}: empty source or target")]
    Empty(String),
    #[error("prompt {0} is a target in no fold")]
    Uncovered(String),
    #[error("prompt {0} is a target in more than one fold")]
    Repeated(String),
    #[error("group size must be positive")]
    GroupSize,
}

/// Numeric ids sort numerically, others lexically after them.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

fn sorted(prompts: &[String]) -> Vec<String> {
    let mut p = prompts.to_vec();
    p.sort_by(|a, b| compare_ids(a, b));
    p.dedup();
    p
}

/// Target groups of `group_size` prompts, sorted by id; optionally shuffled first.
pub fn grouped_plan(prompts: &[String], group_size: usize, shuffle_seed: Option<u64>) -> Result<Vec<FoldPlan>, FoldError> {
    if group_size == 0 {
        return Err(FoldError::GroupSize);
    }
    let mut order = sorted(prompts);
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let plans: Vec<FoldPlan> = order
        .chunks(group_size)
        .enumerate()
        .map(|(i, chunk)| {
            let mut target = chunk.to_vec();
            target.sort_by(|a, b| compare_ids(a, b));
            let source = sorted(prompts).into_iter().filter(|p| !target.contains(p)).collect();
            FoldPlan {
                fold_id: format!("fold{}", i + 1),
                source,
                target,
            }
        })
        .collect();
    validate_plan(&plans, prompts)?;
    Ok(plans)
}

/// One fold per prompt.
pub fn leave_one_prompt_out(prompts: &[String]) -> Result<Vec<FoldPlan>, FoldError> {
    let mut plans = grouped_plan(prompts, 1, None)?;
    for p in &mut plans {
        p.fold_id = format!("prompt{}", p.target[0]);
    }
    Ok(plans)
}

/// Groups of four prompts.
pub fn ellipse_plan(prompts: &[String]) -> Result<Vec<FoldPlan>, FoldError> {
    grouped_plan(prompts, 4, None)
}

pub fn validate_plan(plans: &[FoldPlan], prompts: &[String]) -> Result<(), FoldError> {
    let mut covered: Vec<&String> = Vec::new();
    for f in plans {
        if f.source.is_empty() || f.target.is_empty() {
            return Err(FoldError::Empty(f.fold_id.clone()));
        }
        if f.target.iter().any(|t| f.source.contains(t)) {
            return Err(FoldError::Overlap(f.fold_id.clone()));
        }
        for t in &f.target {
            if covered.contains(&t) {
                return Err(FoldError::Repeated(t.clone()));
            }
            covered.push(t);
        }
    }
    for p in prompts {
        if !covered.contains(&p) {
            return Err(FoldError::Uncovered(p.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn asap_plan() {
        let plans = leave_one_prompt_out(&ids(8)).unwrap();
        assert_eq!(plans.len(), 8);
        assert!(plans.iter().all(|p| p.target.len() == 1 && p.source.len() == 7));
        assert_eq!(plans[7].target, ["8"]);
    }

    #[test]
    fn ellipse_plan_covers_each_prompt_once() {
        let plans = ellipse_plan(&ids(44)).unwrap();
        assert_eq!(plans.len(), 11);
        assert!(plans.iter().all(|p| p.target.len() == 4 && p.source.len() == 40));
        assert_eq!(plans[1].target, ["5", "6", "7", "8"]);
    }

    #[test]
    fn seeded_shuffle_is_stable() {
        let a = grouped_plan(&ids(12), 4, Some(3)).unwrap();
        assert_eq!(a, grouped_plan(&ids(12), 4, Some(3)).unwrap());
    }
}
