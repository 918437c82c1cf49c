use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pool sizes: `k_*_all` waiting users split into groups of `k_*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolShape {
    pub k_u_all: usize,
    pub k_d_all: usize,
    pub k_u: usize,
    pub k_d: usize,
}

/// Users per role are tracked in 64-bit masks.
pub const MAX_POOL: usize = 64;

impl PoolShape {
    /// Number of groups `L`.
    pub fn groups(&self) -> Result<usize> {
        let bad = |msg: String| Err(Error::config("scheduler", msg));
        if self.k_u == 0 || self.k_d == 0 {
            return bad("k_u and k_d must be at least 1".into());
        }
        if self.k_u_all > MAX_POOL || self.k_d_all > MAX_POOL {
            return bad(format!("at most {MAX_POOL} waiting users per direction"));
        }
        if !self.k_u_all.is_multiple_of(self.k_u) || !self.k_d_all.is_multiple_of(self.k_d) {
            return bad(format!(
                "waiting users ({}, {}) are not multiples of the group sizes ({}, {})",
                self.k_u_all, self.k_d_all, self.k_u, self.k_d
            ));
        }
        let (lu, ld) = (self.k_u_all / self.k_u, self.k_d_all / self.k_d);
        if lu != ld || lu == 0 {
            return bad(format!(
                "uplink and downlink pools give different group counts ({lu} vs {ld})"
            ));
        }
        Ok(lu)
    }
}

/// One group: sorted uplink and downlink user ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Group {
    pub ul: Vec<usize>,
    pub dl: Vec<usize>,
}

impl Group {
    pub fn new(mut ul: Vec<usize>, mut dl: Vec<usize>) -> Self {
        ul.sort_unstable();
        dl.sort_unstable();
        Self { ul, dl }
    }

    pub(crate) fn key(&self) -> (u64, u64) {
        (mask(&self.ul), mask(&self.dl))
    }
}

pub(crate) fn mask(ids: &[usize]) -> u64 {
    ids.iter().fold(0, |m, &i| m | 1 << i)
}

/// A split of every waiting user into `L` disjoint groups. Canonical form
/// sorts members within groups and groups by their uplink members; the
/// derived ordering of canonical partitions is the tie-break order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchedulingPartition {
    pub groups: Vec<Group>,
}

impl SchedulingPartition {
    pub fn new(groups: Vec<Group>) -> Self {
        let mut groups: Vec<Group> = groups.into_iter().map(|g| Group::new(g.ul, g.dl)).collect();
        groups.sort();
        Self { groups }
    }

    /// From a group label per user.
    pub fn from_labels(ul: &[usize], dl: &[usize], l: usize) -> Self {
        let mut groups = vec![
            Group {
                ul: Vec::new(),
                dl: Vec::new()
            };
            l
        ];
        for (u, &g) in ul.iter().enumerate() {
            groups[g].ul.push(u);
        }
        for (d, &g) in dl.iter().enumerate() {
            groups[g].dl.push(d);
        }
        Self::new(groups)
    }

    /// Group label of every uplink and downlink user.
    pub fn labels(&self, shape: &PoolShape) -> (Vec<usize>, Vec<usize>) {
        let (mut ul, mut dl) = (vec![0; shape.k_u_all], vec![0; shape.k_d_all]);
        for (g, grp) in self.groups.iter().enumerate() {
            grp.ul.iter().for_each(|&u| ul[u] = g);
            grp.dl.iter().for_each(|&d| dl[d] = g);
        }
        (ul, dl)
    }

    /// Group sizes, disjointness and coverage.
    pub fn validate(&self, shape: &PoolShape) -> Result<()> {
        let l = shape.groups()?;
        if self.groups.len() != l {
            return Err(Error::Partition(format!(
                "{} groups, expected {l}",
                self.groups.len()
            )));
        }
        for (role, all, size, pick) in [
            (
                "uplink",
                shape.k_u_all,
                shape.k_u,
                (|g: &Group| &g.ul) as fn(&Group) -> &Vec<usize>,
            ),
            ("downlink", shape.k_d_all, shape.k_d, |g: &Group| &g.dl),
        ] {
            let mut seen = vec![false; all];
            for (gi, g) in self.groups.iter().enumerate() {
                let ids = pick(g);
                if ids.len() != size {
                    return Err(Error::Partition(format!(
                        "group {gi} has {} {role} users, expected {size}",
                        ids.len()
                    )));
                }
                for &u in ids {
                    if u >= all {
                        return Err(Error::Partition(format!(
                            "{role} user {u} is not in the pool of {all}"
                        )));
                    }
                    if std::mem::replace(&mut seen[u], true) {
                        return Err(Error::Partition(format!(
                            "{role} user {u} appears in more than one group"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniformly random valid partition.
pub fn random_schedule<R: Rng + ?Sized>(
    shape: &PoolShape,
    rng: &mut R,
) -> Result<SchedulingPartition> {
    let l = shape.groups()?;
    let mut ul: Vec<usize> = (0..shape.k_u_all).map(|u| u / shape.k_u).collect();
    let mut dl: Vec<usize> = (0..shape.k_d_all).map(|d| d / shape.k_d).collect();
    ul.shuffle(rng);
    dl.shuffle(rng);
    Ok(SchedulingPartition::from_labels(&ul, &dl, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: PoolShape = PoolShape {
        k_u_all: 8,
        k_d_all: 8,
        k_u: 2,
        k_d: 2,
    };

    #[test]
    fn canonical_order() {
        let p = SchedulingPartition::from_labels(&[1, 0], &[0, 1], 2);
        assert_eq!(p.groups[0], Group::new(vec![0], vec![1]));
        assert_eq!(
            p.labels(&PoolShape {
                k_u_all: 2,
                k_d_all: 2,
                k_u: 1,
                k_d: 1
            })
            .0,
            vec![0, 1]
        );
    }

    #[test]
    fn validation_catches_overlap() {
        let p = SchedulingPartition::new(vec![
            Group::new(vec![0], vec![0]),
            Group::new(vec![0], vec![1]),
        ]);
        assert!(matches!(
            p.validate(&PoolShape {
                k_u_all: 2,
                k_d_all: 2,
                k_u: 1,
                k_d: 1
            }),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn indivisible_pool() {
        assert!(PoolShape { k_u_all: 7, ..DESK }.groups().is_err());
        assert!(PoolShape { k_u_all: 4, ..DESK }.groups().is_err());
    }

    #[test]
    fn random_is_valid() {
        let mut rng = crate::rng::stream(1, &[]);
        for _ in 0..50 {
            random_schedule(&DESK, &mut rng)
                .unwrap()
                .validate(&DESK)
                .unwrap();
        }
    }
}
