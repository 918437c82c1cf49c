use serde::Serialize;

use super::instance::{Evaluator, SchedulingInstance};
use super::partition::{Group, PoolShape, SchedulingPartition};
use crate::{Error, Result};

pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveOutcome {
    pub best: SchedulingPartition,
    pub best_iud: f64,
    pub evaluated: u128,
}

fn binom(n: usize, k: usize) -> Option<u128> {
    (0..k).try_fold(1u128, |acc, i| {
        Some(acc.checked_mul((n - i) as u128)? / (i as u128 + 1))
    })
}

/// Number of distinct partitions: unordered uplink blocks, each paired with
/// an ordered choice of downlink users.
pub fn partition_count(shape: &PoolShape) -> Result<u128> {
    let l = shape.groups()?;
    let overflow = || Error::SearchSpace {
        size: u128::MAX,
        limit: EXHAUSTIVE_LIMIT,
    };
    let mut total = 1u128;
    let (mut ru, mut rd) = (shape.k_u_all, shape.k_d_all);
    for _ in 0..l {
        let ul = binom(ru - 1, shape.k_u - 1).ok_or_else(overflow)?;
        let dl = binom(rd, shape.k_d).ok_or_else(overflow)?;
        total = total
            .checked_mul(ul)
            .and_then(|t| t.checked_mul(dl))
            .ok_or_else(overflow)?;
        ru -= shape.k_u;
        rd -= shape.k_d;
    }
    Ok(total)
}

/// Calls `f` for every `k`-subset of `pool` in lexicographic order.
fn subsets(pool: &[usize], k: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn go(
        pool: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..=pool.len() - (k - cur.len()) {
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, f)?;
            cur.pop();
        }
        Ok(())
    }
    go(pool, k, 0, &mut Vec::with_capacity(k), f)
}

struct Search<'a> {
    shape: PoolShape,
    eval: Evaluator<'a>,
    groups: Vec<Group>,
    best: Option<(f64, Vec<Group>)>,
    evaluated: u128,
}

impl Search<'_> {
    fn recurse(&mut self, ul_left: &[usize], dl_left: &[usize], cost: f64) -> Result<()> {
        if ul_left.is_empty() {
            self.evaluated += 1;
            // Enumeration is lexicographic, so only a strict improvement replaces.
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.groups.clone()));
            }
            return Ok(());
        }
        let (head, rest) = (ul_left[0], &ul_left[1..]);
        let (ku, kd) = (self.shape.k_u, self.shape.k_d);
        subsets(rest, ku - 1, &mut |others| {
            let mut ul = Vec::with_capacity(ku);
            ul.push(head);
            ul.extend_from_slice(others);
            let ul_next: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|u| !others.contains(u))
                .collect();
            subsets(dl_left, kd, &mut |dl| {
                let g = Group {
                    ul: ul.clone(),
                    dl: dl.to_vec(),
                };
                let c = self.eval.group(&g)?.0;
                let dl_next: Vec<usize> = dl_left
                    .iter()
                    .copied()
                    .filter(|d| !dl.contains(d))
                    .collect();
                self.groups.push(g);
                self.recurse(&ul_next, &dl_next, cost + c)?;
                self.groups.pop();
                Ok(())
            })
        })
    }
}

/// Global minimizer of the interference objective by enumeration. Ties go
/// to the lexicographically smallest canonical partition.
pub fn exhaustive_schedule(inst: &SchedulingInstance) -> Result<ExhaustiveOutcome> {
    let shape = inst.shape;
    let size = partition_count(&shape)?;
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpace {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut s = Search {
        shape,
        eval: Evaluator::new(inst),
        groups: Vec::new(),
        best: None,
        evaluated: 0,
    };
    let ul: Vec<usize> = (0..shape.k_u_all).collect();
    let dl: Vec<usize> = (0..shape.k_d_all).collect();
    s.recurse(&ul, &dl, 0.0)?;
    let (best_iud, groups) = s.best.expect("at least one partition");
    Ok(ExhaustiveOutcome {
        best: SchedulingPartition::new(groups),
        best_iud,
        evaluated: s.evaluated,
    })
}
