//! Pairwise Nash stability, local completeness, and partner-monotonicity
//! checks.
//!
//! A network is pairwise Nash stable when no unlinked pair can add a link
//! that weakly benefits both and strictly benefits at least one, and no agent
//! strictly gains by severing any nonempty subset of its own links. Deviation
//! payoffs are re-equilibrated: each candidate network is solved afresh and
//! utilities are compared at its own equilibrium.
//!
//! Comparisons run on floats with an exact-arithmetic escalation: any
//! decision whose margin is smaller than `eps` is re-decided by the
//! [`crate::exact`] path, so verdicts never hinge on rounding.

use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::Error;
use crate::exact::{payoffs_exact, Rational};
use crate::model::{equilibrium_efforts, fabs, payoffs, utility, EffortProfile, Instance, Network};
use crate::{Result, MAX_DEGREE};

/// A unilateral or pairwise deviation from a status-quo network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Deviation {
    /// The unlinked pair `{i, j}` forms a link. In a witness, `i` is the
    /// agent with the strict gain.
    AddLink { i: usize, j: usize },
    /// `agent` severs the listed subset of its own links (normalized
    /// `(min, max)` pairs in canonical order).
    Sever {
        agent: usize,
        links: Vec<(usize, usize)>,
    },
}

/// A profitable deviation found during a stability check, with the
/// re-equilibrated utility changes of the agents involved.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub deviation: Deviation,
    /// Utility change of the deviating agent (severance) or of the strictly
    /// gaining endpoint (link addition).
    pub delta_actor: f64,
    /// Utility change of the other endpoint, for link additions.
    pub delta_partner: Option<f64>,
}

/// Verdict of a pairwise Nash stability check.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// First profitable deviation in canonical enumeration order, when
    /// unstable.
    pub witness: Option<Witness>,
    /// Number of decisions whose float margin fell below `eps` and were
    /// re-decided exactly.
    pub escalations: usize,
}

/// Verdict of a local-completeness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCompletenessReport {
    pub locally_complete: bool,
    /// A failing triple `(i, j, k)`: `{i, j}` is an edge with
    /// `theta_i <= theta_k <= theta_j`, yet the agents between `i` and `j`
    /// do not form a clique.
    pub violation: Option<(usize, usize, usize)>,
}

/// Outcome of checking the claimed partner-type monotonicity at one triple:
/// does linking to the higher type `k` really beat linking to `j`?
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Report {
    /// True when `U_i(g+ik) > U_i(g+ij)` fails.
    pub utility_order_violated: bool,
    /// True when `y*_i(g+ik) > y*_i(g+ij)` fails.
    pub effort_order_violated: bool,
    pub utility_link_k: f64,
    pub utility_link_j: f64,
    pub effort_link_k: f64,
    pub effort_link_j: f64,
}

/// Agents whose type lies in the closed interval spanned by the types of
/// `i` and `j` (endpoints ordered internally; ties included). Contains `i`
/// and `j` themselves. Ascending by index.
pub fn interval_agents(theta: &[f64], i: usize, j: usize) -> Result<Vec<usize>> {
    let n = theta.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let (lo, hi) = if theta[i] <= theta[j] {
        (theta[i], theta[j])
    } else {
        (theta[j], theta[i])
    };
    Ok((0..n).filter(|&k| lo <= theta[k] && theta[k] <= hi).collect())
}

/// Whether every linked pair is embedded in a clique of all agents with
/// types between theirs.
pub fn is_locally_complete(network: &Network, theta: &[f64]) -> Result<LocalCompletenessReport> {
    if theta.len() != network.n() {
        return Err(Error::LengthMismatch {
            expected: network.n(),
            actual: theta.len(),
        });
    }
    for (a, b) in network.edges() {
        let (i, j) = if theta[a] <= theta[b] { (a, b) } else { (b, a) };
        let members = interval_agents(theta, i, j)?;
        for (pos, &u) in members.iter().enumerate() {
            for &v in &members[pos + 1..] {
                if !network.has_edge(u, v) {
                    let k = if u != i && u != j { u } else { v };
                    return Ok(LocalCompletenessReport {
                        locally_complete: false,
                        violation: Some((i, j, k)),
                    });
                }
            }
        }
    }
    Ok(LocalCompletenessReport {
        locally_complete: true,
        violation: None,
    })
}

/// Local completeness decided on the exact type values; used by forced
/// rational verification and when checking mined records.
pub fn is_locally_complete_exact(network: &Network, theta: &[Rational]) -> bool {
    for (a, b) in network.edges() {
        let (lo, hi) = if theta[a] <= theta[b] {
            (&theta[a], &theta[b])
        } else {
            (&theta[b], &theta[a])
        };
        let members: Vec<usize> = (0..network.n())
            .filter(|&k| *lo <= theta[k] && theta[k] <= *hi)
            .collect();
        for (pos, &u) in members.iter().enumerate() {
            for &v in &members[pos + 1..] {
                if !network.has_edge(u, v) {
                    return false;
                }
            }
        }
    }
    true
}

/// All deviations from `network` in canonical order: link additions for
/// non-edges `(i, j)`, `i < j`, lexicographically; then severances per agent
/// ascending with link subsets in binary-counting order over the agent's
/// canonical link list.
pub fn enumerate_deviations(network: &Network) -> Result<Vec<Deviation>> {
    let n = network.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if !network.has_edge(i, j) {
                out.push(Deviation::AddLink { i, j });
            }
        }
    }
    for agent in 0..n {
        let links = network.links_of(agent)?;
        let d = links.len();
        if d > MAX_DEGREE {
            return Err(Error::DegreeGuard { agent, degree: d });
        }
        for mask in 1u32..(1u32 << d) {
            let subset: Vec<(usize, usize)> = (0..d)
                .filter(|bit| mask >> bit & 1 == 1)
                .map(|bit| links[bit])
                .collect();
            out.push(Deviation::Sever {
                agent,
                links: subset,
            });
        }
    }
    Ok(out)
}

/// Lazily computed exact payoffs for a stability check's base network.
pub(crate) struct ExactBase<'a> {
    instance: &'a Instance,
    network: &'a Network,
    payoffs: Option<Vec<Rational>>,
}

impl<'a> ExactBase<'a> {
    pub(crate) fn new(instance: &'a Instance, network: &'a Network) -> Self {
        ExactBase {
            instance,
            network,
            payoffs: None,
        }
    }

    /// Exact `U(after) - U(base)` for the given agents.
    pub(crate) fn deltas(&mut self, after: &Network, agents: &[usize]) -> Result<Vec<Rational>> {
        if self.payoffs.is_none() {
            self.payoffs = Some(payoffs_exact(self.instance, self.network)?);
        }
        let base = self.payoffs.as_ref().expect("just computed");
        let post = payoffs_exact(self.instance, after)?;
        Ok(agents.iter().map(|&a| &post[a] - &base[a]).collect())
    }
}

/// Whether `{u, v}` is a blocking pair given the two utility changes:
/// weak gain for both and strict gain for at least one.
fn blocking_f64(du: f64, dv: f64) -> bool {
    du >= 0.0 && dv >= 0.0 && (du > 0.0 || dv > 0.0)
}

fn blocking_exact(du: &Rational, dv: &Rational) -> bool {
    let zero = Rational::zero();
    *du >= zero && *dv >= zero && (*du > zero || *dv > zero)
}

/// Decide pairwise Nash stability of `network` by exhaustive deviation
/// enumeration with re-equilibrated payoffs.
///
/// Any comparison with float margin below `eps` is escalated to exact
/// arithmetic. The returned witness is the first profitable deviation in
/// canonical order; its deltas are the float-path values.
pub fn is_pairwise_nash_stable(
    instance: &Instance,
    network: &Network,
    eps: f64,
) -> Result<StabilityReport> {
    instance.check_network(network)?;
    let base = payoffs(instance, network)?;
    let mut exact = ExactBase::new(instance, network);
    let mut escalations = 0usize;
    for deviation in enumerate_deviations(network)? {
        match deviation {
            Deviation::AddLink { i, j } => {
                let after = network.with_edge(i, j)?;
                let post = payoffs(instance, &after)?;
                let du = post[i] - base[i];
                let dv = post[j] - base[j];
                let blocks = if fabs(du) < eps || fabs(dv) < eps {
                    escalations += 1;
                    let exact_deltas = exact.deltas(&after, &[i, j])?;
                    blocking_exact(&exact_deltas[0], &exact_deltas[1])
                } else {
                    blocking_f64(du, dv)
                };
                if blocks {
                    // report the strict gainer first
                    let (actor, partner, da, dp) =
                        if du > dv { (i, j, du, dv) } else { (j, i, dv, du) };
                    return Ok(StabilityReport {
                        stable: false,
                        witness: Some(Witness {
                            deviation: Deviation::AddLink {
                                i: actor,
                                j: partner,
                            },
                            delta_actor: da,
                            delta_partner: Some(dp),
                        }),
                        escalations,
                    });
                }
            }
            Deviation::Sever { agent, ref links } => {
                let after = network.without_edges(links)?;
                let post = payoffs(instance, &after)?;
                let du = post[agent] - base[agent];
                let profitable = if fabs(du) < eps {
                    escalations += 1;
                    let exact_deltas = exact.deltas(&after, &[agent])?;
                    exact_deltas[0] > Rational::zero()
                } else {
                    du > 0.0
                };
                if profitable {
                    return Ok(StabilityReport {
                        stable: false,
                        witness: Some(Witness {
                            deviation,
                            delta_actor: du,
                            delta_partner: None,
                        }),
                        escalations,
                    });
                }
            }
        }
    }
    Ok(StabilityReport {
        stable: true,
        witness: None,
        escalations,
    })
}

fn check_triple(
    instance: &Instance,
    network: &Network,
    i: usize,
    j: usize,
    k: usize,
    require_type_order: bool,
) -> Result<()> {
    instance.check_network(network)?;
    for idx in [i, j, k] {
        instance.check_agent(idx)?;
    }
    if i == j || i == k || j == k {
        return Err(Error::NotAPair {
            i,
            j: if i == j { j } else { k },
        });
    }
    if require_type_order && instance.theta_exact()[k] <= instance.theta_exact()[j] {
        return Err(Error::TypesNotOrdered { j, k });
    }
    if network.has_edge(i, j) {
        return Err(Error::LinkPresent { i, j });
    }
    if network.has_edge(i, k) {
        return Err(Error::LinkPresent { i, j: k });
    }
    Ok(())
}

/// Check the claimed partner monotonicity at one triple under
/// re-equilibration: with `theta_k > theta_j`, compare agent `i`'s utility
/// and equilibrium effort on `g+ik` against `g+ij` and report whether the
/// claimed strict orderings fail.
pub fn lemma2_violation(
    instance: &Instance,
    network: &Network,
    i: usize,
    j: usize,
    k: usize,
    eps: f64,
) -> Result<Lemma2Report> {
    check_triple(instance, network, i, j, k, true)?;
    let g_j = network.with_edge(i, j)?;
    let g_k = network.with_edge(i, k)?;
    let pay_j = payoffs(instance, &g_j)?;
    let pay_k = payoffs(instance, &g_k)?;
    let y_j = equilibrium_efforts(instance, &g_j)?;
    let y_k = equilibrium_efforts(instance, &g_k)?;

    let utility_order_violated = if fabs(pay_k[i] - pay_j[i]) < eps {
        let uk = payoffs_exact(instance, &g_k)?;
        let uj = payoffs_exact(instance, &g_j)?;
        uk[i] <= uj[i]
    } else {
        pay_k[i] <= pay_j[i]
    };
    let effort_order_violated = if fabs(y_k[i] - y_j[i]) < eps {
        let ek = crate::exact::equilibrium_efforts_exact(instance, &g_k)?;
        let ej = crate::exact::equilibrium_efforts_exact(instance, &g_j)?;
        ek[i] <= ej[i]
    } else {
        y_k[i] <= y_j[i]
    };

    Ok(Lemma2Report {
        utility_order_violated,
        effort_order_violated,
        utility_link_k: pay_k[i],
        utility_link_j: pay_j[i],
        effort_link_k: y_k[i],
        effort_link_j: y_j[i],
    })
}

/// Myopic variant of the partner comparison: all other agents' actions stay
/// frozen at the status-quo equilibrium, agent `i` plays its best response
/// to each candidate neighborhood, and the resulting utilities are compared.
/// Returns the preferred partner; exact ties go to the lower index.
pub fn myopic_link_preference(
    instance: &Instance,
    network: &Network,
    i: usize,
    j: usize,
    k: usize,
    eps: f64,
) -> Result<usize> {
    check_triple(instance, network, i, j, k, false)?;
    let frozen = equilibrium_efforts(instance, network)?;
    let u_j = myopic_utility(instance, network, &frozen, i, j)?;
    let u_k = myopic_utility(instance, network, &frozen, i, k)?;
    if fabs(u_j - u_k) < eps {
        let frozen_exact = crate::exact::equilibrium_efforts_exact(instance, network)?;
        let ej = myopic_utility_exact(instance, network, &frozen_exact, i, j)?;
        let ek = myopic_utility_exact(instance, network, &frozen_exact, i, k)?;
        return Ok(match ej.cmp(&ek) {
            core::cmp::Ordering::Greater => j,
            core::cmp::Ordering::Less => k,
            core::cmp::Ordering::Equal => j.min(k),
        });
    }
    Ok(if u_j > u_k { j } else { k })
}

/// Agent `i`'s payoff after adding `{i, c}`, playing its best response while
/// everyone else keeps the frozen profile.
fn myopic_utility(
    instance: &Instance,
    network: &Network,
    frozen: &EffortProfile,
    i: usize,
    c: usize,
) -> Result<f64> {
    let after = network.with_edge(i, c)?;
    let mut efforts: Vec<f64> = frozen.as_slice().to_vec();
    let d = after.degree(i);
    let sum: f64 = after.neighbors(i)?.map(|l| efforts[l]).sum();
    let alpha = instance.alpha();
    efforts[i] = (1.0 - alpha) * instance.theta()[i] + alpha * sum / d as f64;
    utility(instance, &after, &EffortProfile::new(efforts), i)
}

fn myopic_utility_exact(
    instance: &Instance,
    network: &Network,
    frozen: &[Rational],
    i: usize,
    c: usize,
) -> Result<Rational> {
    let after = network.with_edge(i, c)?;
    let mut efforts = frozen.to_vec();
    let d = after.degree(i);
    let mut sum = Rational::zero();
    for l in after.neighbors(i)? {
        sum += &efforts[l];
    }
    let alpha = instance.alpha_exact();
    let one = Rational::from_integer(1.into());
    efforts[i] = (&one - alpha) * &instance.theta_exact()[i]
        + alpha * sum / Rational::from_integer(d.into());
    crate::exact::utility_exact(instance, &after, &efforts, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::DEFAULT_EPS;
    use alloc::vec;

    fn inst(theta: &[i64], alpha: (i64, i64), delta: i64) -> Instance {
        let theta = theta.iter().map(|&t| ratio(t, 1)).collect();
        Instance::new(theta, ratio(alpha.0, alpha.1), ratio(delta, 1)).unwrap()
    }

    #[test]
    fn interval_agents_is_a_closed_interval_with_ties() {
        let theta = [20.0, 10.0, 11.0, 13.0];
        assert_eq!(interval_agents(&theta, 1, 3).unwrap(), vec![1, 2, 3]);
        assert_eq!(interval_agents(&theta, 0, 0).unwrap(), vec![0]);
        // tie on the lower endpoint is included
        let theta = [20.0, 10.0, 11.0, 13.0, 10.0];
        assert_eq!(interval_agents(&theta, 1, 2).unwrap(), vec![1, 2, 4]);
        assert!(interval_agents(&theta, 0, 9).is_err());
    }

    #[test]
    fn local_completeness_flags_the_skipped_middle_type() {
        let g = Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let theta = [1.0, 2.0, 3.0];
        let report = is_locally_complete(&g, &theta).unwrap();
        assert!(!report.locally_complete);
        assert_eq!(report.violation, Some((0, 2, 1)));

        let complete = Network::complete(3).unwrap();
        assert!(
            is_locally_complete(&complete, &theta)
                .unwrap()
                .locally_complete
        );

        let empty = Network::empty(3).unwrap();
        assert!(is_locally_complete(&empty, &theta).unwrap().locally_complete);
    }

    #[test]
    fn deviation_enumeration_is_exhaustive_and_ordered() {
        let g = Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let devs = enumerate_deviations(&g).unwrap();
        assert_eq!(
            devs,
            vec![
                Deviation::AddLink { i: 1, j: 2 },
                Deviation::Sever {
                    agent: 0,
                    links: vec![(0, 1)]
                },
                Deviation::Sever {
                    agent: 0,
                    links: vec![(0, 2)]
                },
                Deviation::Sever {
                    agent: 0,
                    links: vec![(0, 1), (0, 2)]
                },
                Deviation::Sever {
                    agent: 1,
                    links: vec![(0, 1)]
                },
                Deviation::Sever {
                    agent: 2,
                    links: vec![(0, 2)]
                },
            ]
        );

        let empty = Network::empty(3).unwrap();
        let devs = enumerate_deviations(&empty).unwrap();
        assert_eq!(
            devs,
            vec![
                Deviation::AddLink { i: 0, j: 1 },
                Deviation::AddLink { i: 0, j: 2 },
                Deviation::AddLink { i: 1, j: 2 },
            ]
        );

        let complete = Network::complete(3).unwrap();
        let devs = enumerate_deviations(&complete).unwrap();
        assert_eq!(devs.len(), 9);
        assert!(devs.iter().all(|d| matches!(d, Deviation::Sever { .. })));
    }

    #[test]
    fn hub_star_fixture_is_stable() {
        // first exact-verified hit of the reference grid search
        let instance = inst(&[19, 16, 9], (1, 3), 16);
        let g = Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let report = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS).unwrap();
        assert!(report.stable);
        assert!(report.witness.is_none());
        // ... and it is not locally complete
        assert!(
            !is_locally_complete(&g, instance.theta())
                .unwrap()
                .locally_complete
        );
    }

    #[test]
    fn generous_link_benefit_destabilizes_the_empty_network() {
        let instance = inst(&[10, 12], (1, 2), 50);
        let g = Network::empty(2).unwrap();
        let report = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS).unwrap();
        assert!(!report.stable);
        let witness = report.witness.unwrap();
        assert!(matches!(witness.deviation, Deviation::AddLink { .. }));
        assert!(witness.delta_actor > 0.0);
        assert!(witness.delta_partner.unwrap() >= 0.0);
    }

    #[test]
    fn witness_deltas_reproduce_from_scratch() {
        let instance = inst(&[10, 12], (1, 2), 50);
        let g = Network::empty(2).unwrap();
        let witness = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS)
            .unwrap()
            .witness
            .unwrap();
        let Deviation::AddLink { i, j } = witness.deviation else {
            panic!("expected an addition witness");
        };
        let base = payoffs(&instance, &g).unwrap();
        let post = payoffs(&instance, &g.with_edge(i, j).unwrap()).unwrap();
        assert!(fabs(post[i] - base[i] - witness.delta_actor) < 1e-9);
        assert!(fabs(post[j] - base[j] - witness.delta_partner.unwrap()) < 1e-9);
    }

    #[test]
    fn single_agent_network_is_trivially_stable() {
        let instance = inst(&[5], (1, 2), 3);
        let g = Network::empty(1).unwrap();
        let report = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS).unwrap();
        assert!(report.stable);
    }

    #[test]
    fn zero_delta_empty_network_is_stable_despite_one_sided_gains() {
        // Linking two isolated agents with distinct types always drags the
        // higher type's effort down, so with no link benefit there is never
        // mutual weak gain; the empty network rests.
        let instance = inst(&[10, 20], (1, 2), 0);
        let g = Network::empty(2).unwrap();
        let report = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS).unwrap();
        assert!(report.stable);
    }

    #[test]
    fn exact_escalation_settles_knife_edge_ties() {
        // equal types, zero delta: every addition delta is exactly zero,
        // which sits inside any float margin; the exact path must decide.
        let instance = inst(&[7, 7, 7], (1, 2), 0);
        let g = Network::empty(3).unwrap();
        let report = is_pairwise_nash_stable(&instance, &g, DEFAULT_EPS).unwrap();
        assert!(report.stable);
        assert!(report.escalations > 0);
    }

    #[test]
    fn monotonicity_fails_at_the_fifth_agent_configuration() {
        let instance = inst(&[20, 10, 11, 13, 19], (2, 3), 75);
        let g = Network::from_edges(5, &[(0, 1), (2, 3)]).unwrap();
        let report = lemma2_violation(&instance, &g, 4, 1, 2, DEFAULT_EPS).unwrap();
        assert!(report.utility_order_violated);
        assert!(report.effort_order_violated);
        assert!(fabs(report.effort_link_j - 233.0 / 15.0) < 1e-12);
        assert!(fabs(report.effort_link_k - 15.0) < 1e-12);
        assert!(fabs(report.utility_link_j - 88039.0 / 450.0) < 1e-9);
        assert!(fabs(report.utility_link_k - 187.5) < 1e-9);
    }

    #[test]
    fn linking_the_higher_isolated_type_is_better_when_symmetric() {
        let instance = inst(&[10, 5, 7], (1, 2), 2);
        let g = Network::empty(3).unwrap();
        let report = lemma2_violation(&instance, &g, 0, 1, 2, DEFAULT_EPS).unwrap();
        assert!(!report.utility_order_violated);
        assert!(!report.effort_order_violated);
    }

    #[test]
    fn triple_preconditions_are_enforced() {
        let instance = inst(&[10, 5, 7], (1, 2), 2);
        let g = Network::empty(3).unwrap();
        assert!(lemma2_violation(&instance, &g, 0, 0, 2, DEFAULT_EPS).is_err());
        // type order must be strict
        assert!(lemma2_violation(&instance, &g, 0, 2, 1, DEFAULT_EPS).is_err());
        // candidate links must be absent
        let linked = Network::from_edges(3, &[(0, 1)]).unwrap();
        assert!(lemma2_violation(&instance, &linked, 0, 1, 2, DEFAULT_EPS).is_err());
    }

    #[test]
    fn myopic_comparison_prefers_the_higher_frozen_action() {
        let instance = inst(&[20, 10, 11, 13, 19], (2, 3), 75);
        let g = Network::from_edges(5, &[(0, 1), (2, 3)]).unwrap();
        // frozen efforts are 14 for agent 1 and 11.8 for agent 2, so the
        // lower-typed agent 1 wins the comparison
        let preferred = myopic_link_preference(&instance, &g, 4, 1, 2, DEFAULT_EPS).unwrap();
        assert_eq!(preferred, 1);
    }

    #[test]
    fn myopic_ties_resolve_to_the_lower_index() {
        let instance = inst(&[9, 7, 7], (1, 2), 1);
        let g = Network::empty(3).unwrap();
        assert_eq!(
            myopic_link_preference(&instance, &g, 0, 1, 2, DEFAULT_EPS).unwrap(),
            1
        );
        assert_eq!(
            myopic_link_preference(&instance, &g, 0, 2, 1, DEFAULT_EPS).unwrap(),
            1
        );
    }
}
