use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::instance::{Evaluator, SchedulingInstance};
use super::partition::{random_schedule, SchedulingPartition};
use crate::rng::stream;
use crate::{Error, Result};

const FITNESS_EPS: f64 = 1e-9;
const DUPLICATE_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population: usize,
    pub iterations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
    /// Hill-climb every non-elite member of each generation over single swaps.
    pub local_search: bool,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 40,
            iterations: 100,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            elitism: 1,
            local_search: true,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 {
            return Err(Error::config(
                "scheduler.ga.population",
                "must be at least 1",
            ));
        }
        for (name, r) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(
                    format!("scheduler.ga.{name}"),
                    format!("{r} is outside [0, 1]"),
                ));
            }
        }
        if self.elitism > self.population {
            return Err(Error::config(
                "scheduler.ga.elitism",
                "cannot exceed the population",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaOutcome {
    pub best: SchedulingPartition,
    pub best_iud: f64,
    /// Best objective in the population after each generation, starting with
    /// the initial one.
    pub history: Vec<f64>,
}

#[derive(Clone)]
struct Genome {
    ul: Vec<usize>,
    dl: Vec<usize>,
}

/// Makes group `target` of `child` equal to `members`, swapping displaced
/// users into the groups the incoming ones left. Group sizes are preserved.
fn implant<R: Rng + ?Sized>(child: &mut [usize], members: &[usize], target: usize, rng: &mut R) {
    for &u in members {
        if child[u] == target {
            continue;
        }
        let out: Vec<usize> = (0..child.len())
            .filter(|&v| child[v] == target && !members.contains(&v))
            .collect();
        let v = out[rng.random_range(0..out.len())];
        child[v] = child[u];
        child[u] = target;
    }
}

fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, l: usize, rng: &mut R) -> Genome {
    let donor = rng.random_range(0..l);
    let pick = |labels: &[usize]| -> Vec<usize> {
        (0..labels.len()).filter(|&u| labels[u] == donor).collect()
    };
    let (ul, dl) = (pick(&b.ul), pick(&b.dl));
    // Target the group of the first parent that already shares most members.
    let overlap = |g: usize| {
        ul.iter().filter(|&&u| a.ul[u] == g).count() + dl.iter().filter(|&&d| a.dl[d] == g).count()
    };
    let target = (0..l)
        .max_by_key(|&g| (overlap(g), std::cmp::Reverse(g)))
        .unwrap_or(0);
    let mut child = a.clone();
    implant(&mut child.ul, &ul, target, rng);
    implant(&mut child.dl, &dl, target, rng);
    child
}

fn swap_once<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) {
    let labels = if rng.random_bool(0.5) {
        &mut g.ul
    } else {
        &mut g.dl
    };
    let u = rng.random_range(0..labels.len());
    let others: Vec<usize> = (0..labels.len())
        .filter(|&v| labels[v] != labels[u])
        .collect();
    if others.is_empty() {
        return;
    }
    let v = others[rng.random_range(0..others.len())];
    labels.swap(u, v);
}

/// One swap, then further swaps with probability 1/2 each.
fn mutate<R: Rng + ?Sized>(g: &mut Genome, rng: &mut R) {
    swap_once(g, rng);
    while rng.random_bool(0.5) {
        swap_once(g, rng);
    }
}

/// Best-improvement descent over single same-role swaps. Only the two
/// groups touched by a swap are rescored.
fn hill_climb(g: &mut Genome, l: usize, eval: &Evaluator) -> Result<()> {
    let masks = |labels: &[usize]| {
        let mut m = vec![0u64; l];
        for (u, &lab) in labels.iter().enumerate() {
            m[lab] |= 1 << u;
        }
        m
    };
    let (mut ul, mut dl) = (masks(&g.ul), masks(&g.dl));
    let mut cost: Vec<f64> = (0..l)
        .map(|x| eval.group_by_mask(ul[x], dl[x]).map(|c| c.0))
        .collect::<Result<_>>()?;
    loop {
        let scale = 1.0 + cost.iter().sum::<f64>().abs();
        let mut best: Option<(f64, usize, usize, usize, f64, f64)> = None;
        for role in 0..2 {
            let labels = if role == 0 { &g.ul } else { &g.dl };
            for u in 0..labels.len() {
                for v in u + 1..labels.len() {
                    let (a, b) = (labels[u], labels[v]);
                    if a == b {
                        continue;
                    }
                    let flip = 1u64 << u | 1u64 << v;
                    let (ca, cb) = if role == 0 {
                        (
                            eval.group_by_mask(ul[a] ^ flip, dl[a])?.0,
                            eval.group_by_mask(ul[b] ^ flip, dl[b])?.0,
                        )
                    } else {
                        (
                            eval.group_by_mask(ul[a], dl[a] ^ flip)?.0,
                            eval.group_by_mask(ul[b], dl[b] ^ flip)?.0,
                        )
                    };
                    let delta = (ca + cb) - (cost[a] + cost[b]);
                    if delta < -1e-12 * scale && best.as_ref().is_none_or(|x| delta < x.0) {
                        best = Some((delta, role, u, v, ca, cb));
                    }
                }
            }
        }
        let Some((_, role, u, v, ca, cb)) = best else {
            return Ok(());
        };
        let (labels, m) = if role == 0 {
            (&mut g.ul, &mut ul)
        } else {
            (&mut g.dl, &mut dl)
        };
        let (a, b) = (labels[u], labels[v]);
        let flip = 1u64 << u | 1u64 << v;
        m[a] ^= flip;
        m[b] ^= flip;
        labels.swap(u, v);
        cost[a] = ca;
        cost[b] = cb;
    }
}

fn rank(a: &(f64, SchedulingPartition), b: &(f64, SchedulingPartition)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

fn roulette<R: Rng + ?Sized>(fitness: &[f64], total: f64, rng: &mut R) -> usize {
    let mut x = rng.random::<f64>() * total;
    for (i, f) in fitness.iter().enumerate() {
        if x < *f {
            return i;
        }
        x -= f;
    }
    fitness.len() - 1
}

/// Genetic search for the partition minimizing the interference objective.
/// Selection is roulette on `1 / (IUD + 1e-9)`; crossover implants one group
/// of the second parent into the first; mutation swaps two same-role users
/// between groups.
pub fn ga_schedule(inst: &SchedulingInstance, params: &GaParams) -> Result<GaOutcome> {
    params.validate()?;
    let mut rng = stream(params.seed, &[0x6761]);
    let initial = (0..params.population)
        .map(|_| random_schedule(&inst.shape, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    evolve(inst, params, initial, &mut rng)
}

/// Runs the search from a given initial population.
pub fn ga_schedule_from(
    inst: &SchedulingInstance,
    params: &GaParams,
    initial: Vec<SchedulingPartition>,
) -> Result<GaOutcome> {
    params.validate()?;
    if initial.len() != params.population {
        return Err(Error::config(
            "scheduler.ga.population",
            "initial population has the wrong size",
        ));
    }
    let mut rng = stream(params.seed, &[0x6761]);
    evolve(inst, params, initial, &mut rng)
}

fn evolve<R: Rng + ?Sized>(
    inst: &SchedulingInstance,
    params: &GaParams,
    initial: Vec<SchedulingPartition>,
    rng: &mut R,
) -> Result<GaOutcome> {
    let l = inst.shape.groups()?;
    let eval = Evaluator::new(inst);
    let mut pop: Vec<Genome> = initial
        .iter()
        .map(|p| {
            p.validate(&inst.shape)?;
            let (ul, dl) = p.labels(&inst.shape);
            Ok(Genome { ul, dl })
        })
        .collect::<Result<_>>()?;
    let decode = |g: &Genome| SchedulingPartition::from_labels(&g.ul, &g.dl, l);
    let score = |pop: &[Genome]| -> Result<Vec<(f64, SchedulingPartition)>> {
        pop.iter()
            .map(|g| {
                let p = decode(g);
                Ok((eval.iud(&p)?, p))
            })
            .collect()
    };

    let mut scored = score(&pop)?;
    let mut best = scored
        .iter()
        .min_by(|a, b| rank(a, b))
        .cloned()
        .expect("population is non-empty");
    let mut history = vec![best.0];
    for _ in 0..params.iterations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&i, &j| rank(&scored[i], &scored[j]));
        let fitness: Vec<f64> = scored
            .iter()
            .map(|(c, _)| 1.0 / (c + FITNESS_EPS))
            .collect();
        let total: f64 = fitness.iter().sum();

        let mut next: Vec<Genome> = order[..params.elitism]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        let mut seen: HashSet<SchedulingPartition> = next.iter().map(decode).collect();
        while next.len() < params.population {
            let a = roulette(&fitness, total, rng);
            let mut child = if rng.random::<f64>() < params.crossover_rate {
                let b = roulette(&fitness, total, rng);
                crossover(&pop[a], &pop[b], l, rng)
            } else {
                pop[a].clone()
            };
            if rng.random::<f64>() < params.mutation_rate {
                mutate(&mut child, rng);
            }
            // Clones of an existing member are perturbed to keep the population diverse.
            for _ in 0..DUPLICATE_RETRIES {
                if !seen.contains(&decode(&child)) {
                    break;
                }
                swap_once(&mut child, rng);
            }
            seen.insert(decode(&child));
            next.push(child);
        }
        pop = next;
        scored = score(&pop)?;
        if params.local_search {
            for i in params.elitism..pop.len() {
                hill_climb(&mut pop[i], l, &eval)?;
                let p = decode(&pop[i]);
                scored[i] = (eval.iud(&p)?, p);
            }
        }
        let gen_best = scored
            .iter()
            .min_by(|a, b| rank(a, b))
            .cloned()
            .expect("population is non-empty");
        if rank(&gen_best, &best).is_lt() {
            best = gen_best.clone();
        }
        history.push(gen_best.0);
    }
    Ok(GaOutcome {
        best: best.1,
        best_iud: best.0,
        history,
    })
}
