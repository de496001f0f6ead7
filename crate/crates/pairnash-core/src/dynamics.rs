//! Sequential network formation and reachability analysis.
//!
//! Rounds start from the empty network. Each round a pair of agents is
//! selected; if either can strictly profit by severing some subset of its own
//! links the (lower-indexed) one does so and the round ends, otherwise the
//! pair forms its link when that weakly benefits both and strictly benefits
//! at least one. Deviation payoffs use the same re-equilibration semantics as
//! the stability module, and a run rests as soon as the current network is
//! pairwise Nash stable.

use alloc::collections::BTreeMap;
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::model::{fabs, payoffs, Instance, Network};
use crate::stability::{is_pairwise_nash_stable, ExactBase};
use crate::{Result, MAX_DEGREE, MAX_ENUM_AGENTS};

/// What happened in one formation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormationAction {
    /// One selected agent strictly profited from dropping these links and
    /// the round ended there.
    Severed {
        agent: usize,
        links: Vec<(usize, usize)>,
    },
    /// The selected pair formed its link by mutual consent.
    LinkFormed,
    /// Neither a profitable severance nor a mutually beneficial link.
    NoChange,
}

/// One round of the formation process: at time `t` the pair `pair` was
/// selected and `action` happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormationEvent {
    pub t: usize,
    pub pair: (usize, usize),
    pub action: FormationAction,
}

/// A simulated formation run: the network sequence, the per-round events,
/// and the resting point when one was reached within the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `networks[t]` is the network at the start of round `t`;
    /// `networks.len() == events.len() + 1`.
    pub networks: Vec<Network>,
    pub events: Vec<FormationEvent>,
    /// The pairwise Nash stable network the run rested on, with the first
    /// time it was checked stable.
    pub reached: Option<(Network, usize)>,
}

/// A strictly profitable severance: the link subset to drop and the
/// re-equilibrated utility gain for the severing agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Severance {
    pub links: Vec<(usize, usize)>,
    pub gain: f64,
}

/// All unordered pairs on `0..n` in lexicographic order.
pub(crate) fn lexicographic_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// The most profitable severance available to `i`, if any: the nonempty
/// subset of `i`'s links whose removal (re-equilibrated) raises `i`'s payoff
/// the most. Gain ties go to the lexicographically smallest subset in
/// canonical link order.
pub fn best_profitable_severance(
    instance: &Instance,
    network: &Network,
    i: usize,
    eps: f64,
) -> Result<Option<Severance>> {
    instance.check_network(network)?;
    instance.check_agent(i)?;
    let links = network.links_of(i)?;
    let d = links.len();
    if d > MAX_DEGREE {
        return Err(Error::DegreeGuard { agent: i, degree: d });
    }
    if d == 0 {
        return Ok(None);
    }
    let base = payoffs(instance, network)?;
    let mut exact = ExactBase::new(instance, network);
    let mut best: Option<Severance> = None;
    for mask in 1u32..(1u32 << d) {
        let subset: Vec<(usize, usize)> = (0..d)
            .filter(|bit| mask >> bit & 1 == 1)
            .map(|bit| links[bit])
            .collect();
        let after = network.without_edges(&subset)?;
        let post = payoffs(instance, &after)?;
        let gain = post[i] - base[i];
        let profitable = if fabs(gain) < eps {
            let deltas = exact.deltas(&after, &[i])?;
            deltas[0] > crate::exact::Rational::zero()
        } else {
            gain > 0.0
        };
        if !profitable {
            continue;
        }
        let better = match &best {
            None => true,
            Some(current) => {
                gain > current.gain || (gain == current.gain && subset < current.links)
            }
        };
        if better {
            best = Some(Severance {
                links: subset,
                gain,
            });
        }
    }
    Ok(best)
}

/// Whether forming the absent link `{i, j}` weakly benefits both endpoints
/// and strictly benefits at least one, at the re-equilibrated payoffs.
pub fn mutual_link_beneficial(
    instance: &Instance,
    network: &Network,
    i: usize,
    j: usize,
    eps: f64,
) -> Result<bool> {
    instance.check_network(network)?;
    instance.check_agent(i)?;
    instance.check_agent(j)?;
    if i == j {
        return Err(Error::NotAPair { i, j });
    }
    if network.has_edge(i, j) {
        return Err(Error::LinkPresent { i, j });
    }
    let base = payoffs(instance, network)?;
    let after = network.with_edge(i, j)?;
    let post = payoffs(instance, &after)?;
    let du = post[i] - base[i];
    let dv = post[j] - base[j];
    if fabs(du) < eps || fabs(dv) < eps {
        let mut exact = ExactBase::new(instance, network);
        let deltas = exact.deltas(&after, &[i, j])?;
        let zero = crate::exact::Rational::zero();
        return Ok(
            deltas[0] >= zero && deltas[1] >= zero && (deltas[0] > zero || deltas[1] > zero)
        );
    }
    Ok(du >= 0.0 && dv >= 0.0 && (du > 0.0 || dv > 0.0))
}

/// Run one formation round for the selected pair: severance first (lower
/// index, then higher; a severance ends the round), otherwise mutual link
/// formation, otherwise no change.
pub fn formation_step(
    instance: &Instance,
    network: &Network,
    pair: (usize, usize),
    eps: f64,
) -> Result<(Network, FormationAction)> {
    let (i, j) = pair;
    instance.check_network(network)?;
    instance.check_agent(i)?;
    instance.check_agent(j)?;
    if i == j {
        return Err(Error::NotAPair { i, j });
    }
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    for agent in [lo, hi] {
        if let Some(severance) = best_profitable_severance(instance, network, agent, eps)? {
            let after = network.without_edges(&severance.links)?;
            return Ok((
                after,
                FormationAction::Severed {
                    agent,
                    links: severance.links,
                },
            ));
        }
    }
    if !network.has_edge(lo, hi) && mutual_link_beneficial(instance, network, lo, hi, eps)? {
        return Ok((network.with_edge(lo, hi)?, FormationAction::LinkFormed));
    }
    Ok((network.clone(), FormationAction::NoChange))
}

/// Simulate the formation process from the empty network with a seeded
/// uniform pair draw each round. Stops as soon as the current network is
/// pairwise Nash stable (recording it in `reached`) or after `t_max` rounds.
/// Identical `(instance, seed, t_max)` give identical trajectories.
pub fn run_formation(instance: &Instance, seed: u64, t_max: usize, eps: f64) -> Result<Trajectory> {
    if t_max == 0 {
        return Err(Error::EmptyBudget);
    }
    let n = instance.n();
    let pairs = lexicographic_pairs(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = Network::empty(n)?;
    let mut networks = vec![current.clone()];
    let mut events = Vec::new();
    let mut reached = None;
    for t in 0..=t_max {
        if is_pairwise_nash_stable(instance, &current, eps)?.stable {
            reached = Some((current.clone(), t));
            break;
        }
        if t == t_max {
            break;
        }
        let pair = pairs[rng.random_range(0..pairs.len())];
        let (next, action) = formation_step(instance, &current, pair, eps)?;
        events.push(FormationEvent { t, pair, action });
        networks.push(next.clone());
        current = next;
    }
    Ok(Trajectory {
        networks,
        events,
        reached,
    })
}

/// Breadth-first reachability: can the formation process be steered from the
/// empty network to `target` by some pair-selection sequence of length at
/// most `horizon`?
///
/// Returns the lexicographically first shortest such sequence, or `None`
/// when the target is not pairwise Nash stable or not reachable within the
/// horizon. Guarded to `n <= 6`: the state space is every labeled network.
pub fn is_reachable(
    instance: &Instance,
    target: &Network,
    horizon: usize,
    eps: f64,
) -> Result<Option<Vec<(usize, usize)>>> {
    instance.check_network(target)?;
    let n = instance.n();
    if n > MAX_ENUM_AGENTS {
        return Err(Error::EnumerationGuard { n });
    }
    if !is_pairwise_nash_stable(instance, target, eps)?.stable {
        return Ok(None);
    }
    let pairs = lexicographic_pairs(n);
    let encode = |g: &Network| -> u64 {
        pairs
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| g.has_edge(i, j))
            .map(|(bit, _)| 1u64 << bit)
            .sum()
    };
    let start_net = Network::empty(n)?;
    let start = encode(&start_net);
    let goal = encode(target);
    if start == goal {
        return Ok(Some(Vec::new()));
    }
    // parent pointers for path reconstruction
    let mut seen: BTreeMap<u64, (u64, (usize, usize))> = BTreeMap::new();
    let mut queue: VecDeque<(u64, Network, usize)> = VecDeque::new();
    queue.push_back((start, start_net, 0));
    seen.insert(start, (start, (0, 0)));
    while let Some((state, net, depth)) = queue.pop_front() {
        if depth == horizon {
            continue;
        }
        for &pair in &pairs {
            let (next, action) = formation_step(instance, &net, pair, eps)?;
            if action == FormationAction::NoChange {
                continue;
            }
            let code = encode(&next);
            if seen.contains_key(&code) {
                continue;
            }
            seen.insert(code, (state, pair));
            if code == goal {
                let mut path = vec![pair];
                let mut cursor = state;
                while cursor != start {
                    let (prev, step) = seen[&cursor];
                    path.push(step);
                    cursor = prev;
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back((code, next, depth + 1));
        }
    }
    Ok(None)
}
