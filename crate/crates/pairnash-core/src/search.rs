//! Counterexample mining over parameter grids and network space.
//!
//! Two claims about this model family sound plausible and are both false:
//!
//! 1. every pairwise Nash stable network is locally complete (the
//!    completeness claim, `prop1` in the CLI), and
//! 2. an agent always prefers, by utility and by induced effort, to link
//!    with a higher-typed partner (the partner-monotonicity claim, `lemma2`
//!    in the CLI).
//!
//! The miners here sweep a [`SearchSpace`] of instances, test every labeled
//! network at desk scale, and emit only hits that survive full re-checking
//! in exact rational arithmetic, so the record lists contain no float
//! artifacts. Grid mode is deterministic: same space, same records, in
//! canonical order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{formation_step, is_reachable, lexicographic_pairs, FormationAction};
use crate::error::Error;
use crate::exact::{equilibrium_efforts_exact, payoffs_exact, ratio, Rational};
use crate::model::{equilibrium_efforts, fabs, payoffs, Instance, Network};
use crate::stability::{
    enumerate_deviations, is_locally_complete, is_locally_complete_exact,
    is_pairwise_nash_stable, Deviation, ExactBase, Lemma2Report, LocalCompletenessReport,
    StabilityReport,
};
use crate::{Result, MAX_ENUM_AGENTS};

/// How agent types are drawn for a search.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpace {
    /// One candidate list per agent; the product is swept in order.
    Grid(Vec<Vec<Rational>>),
    /// Seeded uniform draws on the hundredths grid in `(low, high]`,
    /// `draws` type vectors per search.
    Random {
        low: f64,
        high: f64,
        draws: usize,
        seed: u64,
    },
}

/// Parameter space for the miners.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub n: usize,
    pub theta: ThetaSpace,
    pub alpha_grid: Vec<Rational>,
    pub delta_grid: Vec<Rational>,
    /// Budget on the number of instances examined.
    pub max_instances: usize,
}

/// Which claim a record refutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterexampleKind {
    Prop1,
    Lemma2,
}

/// The checked facts behind a record.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    /// Stable yet not locally complete.
    Prop1 {
        stability: StabilityReport,
        local_completeness: LocalCompletenessReport,
    },
    /// At triple `(i, j, k)` with `theta_k > theta_j`, linking `j` beats
    /// linking `k` in utility, or at least ties it in induced effort.
    Lemma2 {
        i: usize,
        j: usize,
        k: usize,
        report: Lemma2Report,
    },
}

/// One verified counterexample: an instance, a network, and the evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleRecord {
    pub instance: Instance,
    pub network: Network,
    pub evidence: Evidence,
    /// Formation-process pair sequence from the empty network, when
    /// reachability annotation was requested and the target is reachable.
    pub reachable: Option<Vec<(usize, usize)>>,
    pub exact_verified: bool,
}

impl CounterexampleRecord {
    pub fn kind(&self) -> CounterexampleKind {
        match self.evidence {
            Evidence::Prop1 { .. } => CounterexampleKind::Prop1,
            Evidence::Lemma2 { .. } => CounterexampleKind::Lemma2,
        }
    }
}

/// Result of a mining sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub records: Vec<CounterexampleRecord>,
    pub instances_tested: usize,
    /// True when the space holds more instances than the budget allowed.
    pub budget_exhausted: bool,
}

/// Outcome of re-deriving a record's claims from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub passed: bool,
    pub mismatches: Vec<String>,
}

/// All `2^(n(n-1)/2)` labeled simple graphs on `n` agents, in canonical
/// bitmask order over the lexicographic pair list.
pub fn enumerate_networks(n: usize) -> Result<Vec<Network>> {
    if n == 0 || n > MAX_ENUM_AGENTS {
        return Err(Error::EnumerationGuard { n });
    }
    let pairs = lexicographic_pairs(n);
    let mut out = Vec::with_capacity(1 << pairs.len());
    for mask in 0u64..(1u64 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &pair)| pair)
            .collect();
        out.push(Network::from_edges(n, &edges)?);
    }
    Ok(out)
}

/// Materialize the space's instances in canonical order, honoring the
/// budget. Returns the instances and whether the budget truncated them.
fn expand_instances(space: &SearchSpace) -> Result<(Vec<Instance>, bool)> {
    if space.n == 0 {
        return Err(Error::AgentCount { n: 0 });
    }
    let mut thetas: Vec<Vec<Rational>> = Vec::new();
    match &space.theta {
        ThetaSpace::Grid(lists) => {
            if lists.len() != space.n {
                return Err(Error::LengthMismatch {
                    expected: space.n,
                    actual: lists.len(),
                });
            }
            if lists.iter().any(Vec::is_empty) {
                return Err(Error::EmptyBudget);
            }
            // odometer over the per-agent lists, agent 0 slowest
            let mut idx = vec![0usize; space.n];
            loop {
                thetas.push(
                    idx.iter()
                        .enumerate()
                        .map(|(agent, &v)| lists[agent][v].clone())
                        .collect(),
                );
                let mut agent = space.n;
                loop {
                    if agent == 0 {
                        break;
                    }
                    agent -= 1;
                    idx[agent] += 1;
                    if idx[agent] < lists[agent].len() {
                        break;
                    }
                    idx[agent] = 0;
                }
                if idx.iter().all(|&v| v == 0) {
                    break;
                }
            }
        }
        ThetaSpace::Random {
            low,
            high,
            draws,
            seed,
        } => {
            let lo = (low * 100.0) as i64;
            let hi = (high * 100.0) as i64;
            if hi <= lo {
                return Err(Error::EmptyBudget);
            }
            let floor = lo.max(0) + 1; // keep types strictly positive
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*draws {
                thetas.push(
                    (0..space.n)
                        .map(|_| ratio(rng.random_range(floor..=hi), 100))
                        .collect(),
                );
            }
        }
    }
    if space.alpha_grid.is_empty() || space.delta_grid.is_empty() {
        return Err(Error::EmptyBudget);
    }
    let mut instances = Vec::new();
    let mut exhausted = false;
    'outer: for theta in &thetas {
        for alpha in &space.alpha_grid {
            for delta in &space.delta_grid {
                if instances.len() == space.max_instances {
                    exhausted = true;
                    break 'outer;
                }
                instances.push(Instance::new(theta.clone(), alpha.clone(), delta.clone())?);
            }
        }
    }
    Ok((instances, exhausted))
}

/// Pairwise Nash stability decided entirely in exact arithmetic.
pub(crate) fn exact_pairwise_stable(instance: &Instance, network: &Network) -> Result<bool> {
    let mut base = ExactBase::new(instance, network);
    let zero = Rational::zero();
    for deviation in enumerate_deviations(network)? {
        match deviation {
            Deviation::AddLink { i, j } => {
                let after = network.with_edge(i, j)?;
                let d = base.deltas(&after, &[i, j])?;
                if d[0] >= zero && d[1] >= zero && (d[0] > zero || d[1] > zero) {
                    return Ok(false);
                }
            }
            Deviation::Sever { agent, ref links } => {
                let after = network.without_edges(links)?;
                let d = base.deltas(&after, &[agent])?;
                if d[0] > zero {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Replay a formation pair sequence from the empty network and confirm, in
/// exact arithmetic, that every round's improvement condition held and the
/// end point is `target`.
fn exact_witness_replay(
    instance: &Instance,
    path: &[(usize, usize)],
    target: &Network,
    eps: f64,
) -> Result<bool> {
    let zero = Rational::zero();
    let mut current = Network::empty(instance.n())?;
    for &pair in path {
        let (next, action) = formation_step(instance, &current, pair, eps)?;
        let mut base = ExactBase::new(instance, &current);
        match &action {
            FormationAction::LinkFormed => {
                let (i, j) = pair;
                let d = base.deltas(&next, &[i, j])?;
                if !(d[0] >= zero && d[1] >= zero && (d[0] > zero || d[1] > zero)) {
                    return Ok(false);
                }
            }
            FormationAction::Severed { agent, .. } => {
                let d = base.deltas(&next, &[*agent])?;
                if d[0] <= zero {
                    return Ok(false);
                }
            }
            FormationAction::NoChange => return Ok(false),
        }
        current = next;
    }
    Ok(&current == target)
}

/// Sweep the space for networks that are pairwise Nash stable yet not
/// locally complete. Every hit is re-verified exactly before it is emitted;
/// `with_reachability` additionally annotates each record with a formation
/// path from the empty network when one exists.
pub fn find_prop1_counterexamples(
    space: &SearchSpace,
    with_reachability: bool,
    eps: f64,
) -> Result<SearchOutcome> {
    let (instances, budget_exhausted) = expand_instances(space)?;
    let networks = enumerate_networks(space.n)?;
    let mut records = Vec::new();
    for instance in &instances {
        for network in &networks {
            let local = is_locally_complete(network, instance.theta())?;
            if local.locally_complete {
                continue;
            }
            let stability = is_pairwise_nash_stable(instance, network, eps)?;
            if !stability.stable {
                continue;
            }
            // exact re-verification gates emission
            if !exact_pairwise_stable(instance, network)?
                || is_locally_complete_exact(network, instance.theta_exact())
            {
                continue;
            }
            let reachable = if with_reachability {
                let horizon = 1usize << lexicographic_pairs(space.n).len();
                is_reachable(instance, network, horizon, eps)?
            } else {
                None
            };
            records.push(CounterexampleRecord {
                instance: instance.clone(),
                network: network.clone(),
                evidence: Evidence::Prop1 {
                    stability,
                    local_completeness: local,
                },
                reachable,
                exact_verified: true,
            });
        }
    }
    Ok(SearchOutcome {
        records,
        instances_tested: instances.len(),
        budget_exhausted,
    })
}

/// Sweep the space for triples that refute partner-type monotonicity: base
/// networks where some agent gets strictly more utility from linking the
/// lower-typed candidate, or at least as much induced effort. Hits are
/// emitted only when the reversal holds in exact arithmetic.
pub fn find_lemma2_counterexamples(space: &SearchSpace, eps: f64) -> Result<SearchOutcome> {
    let (instances, budget_exhausted) = expand_instances(space)?;
    let networks = enumerate_networks(space.n)?;
    let n = space.n;
    let mut records = Vec::new();
    for instance in &instances {
        for network in &networks {
            // float screen per candidate link, exact confirmation on demand
            let mut float_cache: Vec<Option<(f64, f64)>> = vec![None; n * n];
            let mut exact_cache: Vec<Option<(Rational, Rational)>> = vec![None; n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i == j || i == k || j == k {
                            continue;
                        }
                        if instance.theta_exact()[k] <= instance.theta_exact()[j] {
                            continue;
                        }
                        if network.has_edge(i, j) || network.has_edge(i, k) {
                            continue;
                        }
                        let (u_j, y_j) =
                            candidate_values(instance, network, i, j, &mut float_cache)?;
                        let (u_k, y_k) =
                            candidate_values(instance, network, i, k, &mut float_cache)?;
                        // quick reject: clear float margins in the claimed order
                        if u_j < u_k - eps && y_j < y_k - eps {
                            continue;
                        }
                        let (eu_j, ey_j) =
                            candidate_values_exact(instance, network, i, j, &mut exact_cache)?;
                        let (eu_k, ey_k) =
                            candidate_values_exact(instance, network, i, k, &mut exact_cache)?;
                        if !(eu_j > eu_k || ey_j >= ey_k) {
                            continue;
                        }
                        let report = Lemma2Report {
                            utility_order_violated: eu_k <= eu_j,
                            effort_order_violated: ey_k <= ey_j,
                            utility_link_k: u_k,
                            utility_link_j: u_j,
                            effort_link_k: y_k,
                            effort_link_j: y_j,
                        };
                        records.push(CounterexampleRecord {
                            instance: instance.clone(),
                            network: network.clone(),
                            evidence: Evidence::Lemma2 { i, j, k, report },
                            reachable: None,
                            exact_verified: true,
                        });
                    }
                }
            }
        }
    }
    Ok(SearchOutcome {
        records,
        instances_tested: instances.len(),
        budget_exhausted,
    })
}

/// Agent `i`'s re-equilibrated utility and effort after adding `{i, c}`,
/// memoized per candidate link.
fn candidate_values(
    instance: &Instance,
    network: &Network,
    i: usize,
    c: usize,
    cache: &mut [Option<(f64, f64)>],
) -> Result<(f64, f64)> {
    let slot = i * instance.n() + c;
    if let Some(hit) = cache[slot] {
        return Ok(hit);
    }
    let after = network.with_edge(i, c)?;
    let u = payoffs(instance, &after)?[i];
    let y = equilibrium_efforts(instance, &after)?[i];
    cache[slot] = Some((u, y));
    Ok((u, y))
}

fn candidate_values_exact(
    instance: &Instance,
    network: &Network,
    i: usize,
    c: usize,
    cache: &mut [Option<(Rational, Rational)>],
) -> Result<(Rational, Rational)> {
    let slot = i * instance.n() + c;
    if let Some(hit) = &cache[slot] {
        return Ok(hit.clone());
    }
    let after = network.with_edge(i, c)?;
    let u = payoffs_exact(instance, &after)?.swap_remove(i);
    let y = equilibrium_efforts_exact(instance, &after)?.swap_remove(i);
    cache[slot] = Some((u.clone(), y.clone()));
    Ok((u, y))
}

/// Re-derive every claim in a record from scratch through the exact path.
/// Never mutates the record; collects one message per mismatch.
pub fn verify_record(record: &CounterexampleRecord, eps: f64) -> Result<VerifyOutcome> {
    let mut mismatches = Vec::new();
    let instance = &record.instance;
    let network = &record.network;
    match &record.evidence {
        Evidence::Prop1 {
            stability,
            local_completeness,
        } => {
            if !stability.stable {
                mismatches.push(String::from("record claims instability"));
            }
            if local_completeness.locally_complete {
                mismatches.push(String::from("record claims local completeness"));
            }
            if !exact_pairwise_stable(instance, network)? {
                mismatches.push(String::from("exact check finds a profitable deviation"));
            }
            if is_locally_complete_exact(network, instance.theta_exact()) {
                mismatches.push(String::from("exact check finds the network locally complete"));
            }
            if let Some(path) = &record.reachable {
                if !exact_witness_replay(instance, path, network, eps)? {
                    mismatches.push(String::from("reachability witness fails to replay"));
                }
            }
        }
        Evidence::Lemma2 { i, j, k, report } => {
            if instance.theta_exact()[*k] <= instance.theta_exact()[*j] {
                mismatches.push(String::from("candidate types are not strictly ordered"));
            }
            if network.has_edge(*i, *j) || network.has_edge(*i, *k) {
                mismatches.push(String::from("a candidate link is already present"));
            } else {
                let g_j = network.with_edge(*i, *j)?;
                let g_k = network.with_edge(*i, *k)?;
                let u_j = payoffs_exact(instance, &g_j)?.swap_remove(*i);
                let u_k = payoffs_exact(instance, &g_k)?.swap_remove(*i);
                let y_j = equilibrium_efforts_exact(instance, &g_j)?.swap_remove(*i);
                let y_k = equilibrium_efforts_exact(instance, &g_k)?.swap_remove(*i);
                if !(u_j > u_k || y_j >= y_k) {
                    mismatches.push(String::from("claimed ordering reversal does not hold"));
                }
                if report.utility_order_violated != (u_k <= u_j) {
                    mismatches.push(String::from("utility verdict does not reproduce"));
                }
                if report.effort_order_violated != (y_k <= y_j) {
                    mismatches.push(String::from("effort verdict does not reproduce"));
                }
                for (label, reported, recomputed) in [
                    ("utility (lower type)", report.utility_link_j, u_j),
                    ("utility (higher type)", report.utility_link_k, u_k),
                    ("effort (lower type)", report.effort_link_j, y_j),
                    ("effort (higher type)", report.effort_link_k, y_k),
                ] {
                    let as_f64 = num_traits::ToPrimitive::to_f64(&recomputed).unwrap_or(f64::NAN);
                    if fabs(reported - as_f64) > 1e-9 {
                        mismatches.push(format!("{label} drifts from the exact value"));
                    }
                }
            }
        }
    }
    Ok(VerifyOutcome {
        passed: mismatches.is_empty(),
        mismatches,
    })
}

/// The reference grid the replication harness mines for completeness-claim
/// counterexamples: hub types around 19..21, a widened middle list, low
/// types around 9..12, the three standard weights, and integer link benefits
/// up to 30. Its first verified hit is the repository's hub-star fixture.
pub fn reference_prop1_space() -> SearchSpace {
    SearchSpace {
        n: 3,
        theta: ThetaSpace::Grid(vec![
            (19..=21).map(|v| ratio(v, 1)).collect(),
            (10..=18).map(|v| ratio(v, 1)).collect(),
            (9..=12).map(|v| ratio(v, 1)).collect(),
        ]),
        alpha_grid: vec![ratio(1, 3), ratio(1, 2), ratio(2, 3)],
        delta_grid: (0..=30).map(|v| ratio(v, 1)).collect(),
        max_instances: 20_000,
    }
}

/// The five-agent configuration the monotonicity miner is demonstrated on:
/// the four-agent baseline plus a high-typed outsider.
pub fn reference_lemma2_space() -> SearchSpace {
    SearchSpace {
        n: 5,
        theta: ThetaSpace::Grid(vec![
            vec![ratio(20, 1)],
            vec![ratio(10, 1)],
            vec![ratio(11, 1)],
            vec![ratio(13, 1)],
            vec![ratio(19, 1)],
        ]),
        alpha_grid: vec![ratio(2, 3)],
        delta_grid: vec![ratio(75, 1)],
        max_instances: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_EPS;

    #[test]
    fn network_enumeration_counts() {
        assert_eq!(enumerate_networks(2).unwrap().len(), 2);
        assert_eq!(enumerate_networks(3).unwrap().len(), 8);
        assert_eq!(enumerate_networks(4).unwrap().len(), 64);
        assert!(enumerate_networks(7).is_err());
    }

    fn fixture_neighborhood_space() -> SearchSpace {
        SearchSpace {
            n: 3,
            theta: ThetaSpace::Grid(vec![
                vec![ratio(19, 1)],
                vec![ratio(16, 1)],
                vec![ratio(9, 1)],
            ]),
            alpha_grid: vec![ratio(1, 3)],
            delta_grid: (10..=20).map(|v| ratio(v, 1)).collect(),
            max_instances: 100,
        }
    }

    #[test]
    fn miner_rediscovers_the_hub_star() {
        let outcome =
            find_prop1_counterexamples(&fixture_neighborhood_space(), true, DEFAULT_EPS).unwrap();
        assert_eq!(outcome.instances_tested, 11);
        assert!(!outcome.budget_exhausted);
        assert_eq!(outcome.records.len(), 1);
        let record = &outcome.records[0];
        assert_eq!(record.instance.delta(), 16.0);
        assert_eq!(record.network.edges(), vec![(0, 1), (0, 2)]);
        assert_eq!(record.reachable, Some(vec![(0, 1), (0, 2)]));
        assert!(record.exact_verified);
        assert!(verify_record(record, DEFAULT_EPS).unwrap().passed);
    }

    #[test]
    fn single_agent_spaces_yield_nothing() {
        let space = SearchSpace {
            n: 1,
            theta: ThetaSpace::Grid(vec![vec![ratio(5, 1)]]),
            alpha_grid: vec![ratio(1, 2)],
            delta_grid: vec![ratio(1, 1)],
            max_instances: 10,
        };
        let outcome = find_prop1_counterexamples(&space, false, DEFAULT_EPS).unwrap();
        assert!(outcome.records.is_empty());
    }

    #[test]
    fn free_severance_with_clustered_types_leaves_no_records() {
        // with delta = 0 and distinct close types, the higher endpoint of any
        // link profits from dropping it, so only the (locally complete)
        // empty network is stable
        let space = SearchSpace {
            n: 3,
            theta: ThetaSpace::Grid(vec![
                vec![ratio(10, 1)],
                vec![ratio(101, 10)],
                vec![ratio(102, 10)],
            ]),
            alpha_grid: vec![ratio(1, 3), ratio(1, 2)],
            delta_grid: vec![ratio(0, 1)],
            max_instances: 10,
        };
        let outcome = find_prop1_counterexamples(&space, false, DEFAULT_EPS).unwrap();
        assert!(outcome.records.is_empty());
    }

    #[test]
    fn grid_mode_is_deterministic() {
        let space = fixture_neighborhood_space();
        let a = find_prop1_counterexamples(&space, true, DEFAULT_EPS).unwrap();
        let b = find_prop1_counterexamples(&space, true, DEFAULT_EPS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_truncation_is_reported() {
        let mut space = fixture_neighborhood_space();
        space.max_instances = 3;
        let outcome = find_prop1_counterexamples(&space, false, DEFAULT_EPS).unwrap();
        assert!(outcome.budget_exhausted);
        assert_eq!(outcome.instances_tested, 3);
    }

    #[test]
    fn monotonicity_miner_finds_no_empty_base_records_on_small_spaces() {
        // linking a higher isolated type is always better from an empty
        // network, so no record may cite the empty base
        let space = SearchSpace {
            n: 3,
            theta: ThetaSpace::Grid(vec![
                vec![ratio(10, 1)],
                vec![ratio(5, 1)],
                vec![ratio(7, 1)],
            ]),
            alpha_grid: vec![ratio(1, 2)],
            delta_grid: vec![ratio(2, 1)],
            max_instances: 10,
        };
        let outcome = find_lemma2_counterexamples(&space, DEFAULT_EPS).unwrap();
        for record in &outcome.records {
            assert!(record.network.edge_count() > 0);
            assert!(verify_record(record, DEFAULT_EPS).unwrap().passed);
        }
    }

    #[test]
    fn tampered_records_fail_verification() {
        let outcome =
            find_prop1_counterexamples(&fixture_neighborhood_space(), false, DEFAULT_EPS).unwrap();
        let mut record = outcome.records[0].clone();
        let Evidence::Prop1 { stability, .. } = &mut record.evidence else {
            unreachable!()
        };
        stability.stable = false;
        let verdict = verify_record(&record, DEFAULT_EPS).unwrap();
        assert!(!verdict.passed);
        assert!(!verdict.mismatches.is_empty());
    }

    #[test]
    fn random_mode_is_seed_deterministic() {
        let space = SearchSpace {
            n: 3,
            theta: ThetaSpace::Random {
                low: 5.0,
                high: 15.0,
                draws: 4,
                seed: 11,
            },
            alpha_grid: vec![ratio(1, 2)],
            delta_grid: vec![ratio(3, 1)],
            max_instances: 100,
        };
        let a = find_prop1_counterexamples(&space, false, DEFAULT_EPS).unwrap();
        let b = find_prop1_counterexamples(&space, false, DEFAULT_EPS).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.instances_tested, 4);
    }
}
