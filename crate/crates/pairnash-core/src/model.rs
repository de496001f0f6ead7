//! Game primitives: instances, networks, effort profiles, and the
//! equilibrium effort solver.
//!
//! An agent `i` with a nonempty neighborhood earns
//! `(1 - alpha) * theta_i * y_i - y_i^2 / 2 + sum_j (delta + alpha * y_i * y_j / d_i)`
//! over its neighbors `j`; an isolated agent earns `theta_i * y_i - y_i^2 / 2`.
//! The first-order condition makes each best response a convex combination of
//! the agent's own type and the mean effort among its neighbors, so the
//! simultaneous equilibrium solves `(I - alpha * P) y = (1 - alpha) * theta`
//! with `P` the row-normalized adjacency and identity rows for isolated
//! agents.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use crate::error::Error;
use crate::exact::Rational;
use crate::{Result, MAX_AGENTS};

/// `|x|` without the std math intrinsics, so the crate stays `no_std`.
#[inline]
pub(crate) fn fabs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & (u64::MAX >> 1))
}

/// Problem parameters: agent count, types, spillover weight, link benefit.
///
/// Parameters are stored exactly as rationals alongside their `f64`
/// projections. The float fields drive the fast solver; the rationals feed
/// the [`crate::exact`] verification path. Plain floats passed to
/// [`Instance::from_f64`] are converted through their exact binary value, so
/// the two views always denote the same instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    theta: Vec<f64>,
    alpha: f64,
    delta: f64,
    theta_exact: Vec<Rational>,
    alpha_exact: Rational,
    delta_exact: Rational,
}

impl Instance {
    /// Build an instance from exact rational parameters.
    ///
    /// Requires `1 <= n <= 64`, every type strictly positive, `alpha` in
    /// `[0, 1)`, and `delta >= 0`.
    pub fn new(theta: Vec<Rational>, alpha: Rational, delta: Rational) -> Result<Self> {
        let n = theta.len();
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::AgentCount { n });
        }
        let zero = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        for (agent, t) in theta.iter().enumerate() {
            if *t <= zero {
                return Err(Error::TypeNotPositive { agent });
            }
        }
        if alpha < zero || alpha >= one {
            return Err(Error::AlphaOutOfRange);
        }
        if delta < zero {
            return Err(Error::DeltaNegative);
        }
        let theta_f: Option<Vec<f64>> = theta.iter().map(ToPrimitive::to_f64).collect();
        let (theta_f, alpha_f, delta_f) =
            match (theta_f, alpha.to_f64(), delta.to_f64()) {
                (Some(t), Some(a), Some(d)) => (t, a, d),
                _ => return Err(Error::NotFinite),
            };
        Ok(Instance {
            theta: theta_f,
            alpha: alpha_f,
            delta: delta_f,
            theta_exact: theta,
            alpha_exact: alpha,
            delta_exact: delta,
        })
    }

    /// Build an instance from floats, converted via their exact binary value.
    pub fn from_f64(theta: &[f64], alpha: f64, delta: f64) -> Result<Self> {
        let theta: Vec<Rational> = theta
            .iter()
            .map(|&t| Rational::from_float(t).ok_or(Error::NotFinite))
            .collect::<Result<_>>()?;
        let alpha = Rational::from_float(alpha).ok_or(Error::NotFinite)?;
        let delta = Rational::from_float(delta).ok_or(Error::NotFinite)?;
        Self::new(theta, alpha, delta)
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Type vector as floats.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Weight on neighborhood behavior, in `[0, 1)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exogenous benefit per link.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exact type vector.
    pub fn theta_exact(&self) -> &[Rational] {
        &self.theta_exact
    }

    /// Exact spillover weight.
    pub fn alpha_exact(&self) -> &Rational {
        &self.alpha_exact
    }

    /// Exact per-link benefit.
    pub fn delta_exact(&self) -> &Rational {
        &self.delta_exact
    }

    /// Same types and weight, different link benefit.
    pub fn with_delta(&self, delta: Rational) -> Result<Self> {
        Self::new(self.theta_exact.clone(), self.alpha_exact.clone(), delta)
    }

    pub(crate) fn check_agent(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            })
        }
    }

    pub(crate) fn check_network(&self, network: &Network) -> Result<()> {
        if self.n() == network.n() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                instance: self.n(),
                network: network.n(),
            })
        }
    }
}

/// Undirected simple graph on agents `0..n`, `n <= 64`.
///
/// Stored as one adjacency bitmask per agent; immutable after construction
/// (deviations build new networks).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Network {
    n: usize,
    adj: Vec<u64>,
}

impl Network {
    /// The edgeless network on `n` agents.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::AgentCount { n });
        }
        Ok(Network { n, adj: vec![0; n] })
    }

    /// The complete network on `n` agents.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in (i + 1)..n {
                g.insert(i, j);
            }
        }
        Ok(g)
    }

    /// Build a network from an edge list, rejecting self-loops, duplicate
    /// edges, and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::EndpointOutOfRange { i, j, n });
            }
            if i == j {
                return Err(Error::SelfLoop { agent: i });
            }
            if g.has_edge(i, j) {
                return Err(Error::DuplicateEdge { i, j });
            }
            g.insert(i, j);
        }
        Ok(g)
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.adj[i] |= 1 << j;
        self.adj[j] |= 1 << i;
    }

    fn remove(&mut self, i: usize, j: usize) {
        self.adj[i] &= !(1 << j);
        self.adj[j] &= !(1 << i);
    }

    /// Number of agents.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the unordered edge `{i, j}` is present.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adj[i] >> j & 1 == 1
    }

    /// Degree of agent `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].count_ones() as usize
    }

    /// Neighbors of agent `i` in ascending order.
    ///
    /// Errors if `i` is out of range.
    pub fn neighbors(&self, i: usize) -> Result<Neighbors> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(Neighbors { bits: self.adj[i] })
    }

    /// All edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let mut bits = self.adj[i] >> (i + 1) << (i + 1);
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                out.push((i, j));
                bits &= bits - 1;
            }
        }
        out
    }

    /// Total number of edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|b| b.count_ones() as usize).sum::<usize>() / 2
    }

    /// Links of agent `i` as normalized `(min, max)` pairs, neighbors
    /// ascending. This is the canonical link order used when enumerating
    /// severance subsets.
    pub fn links_of(&self, i: usize) -> Result<Vec<(usize, usize)>> {
        Ok(self
            .neighbors(i)?
            .map(|j| if i < j { (i, j) } else { (j, i) })
            .collect())
    }

    /// Copy of this network with the edge `{i, j}` added.
    pub fn with_edge(&self, i: usize, j: usize) -> Result<Self> {
        if i >= self.n || j >= self.n {
            return Err(Error::EndpointOutOfRange { i, j, n: self.n });
        }
        if i == j {
            return Err(Error::SelfLoop { agent: i });
        }
        if self.has_edge(i, j) {
            return Err(Error::DuplicateEdge { i, j });
        }
        let mut g = self.clone();
        g.insert(i, j);
        Ok(g)
    }

    /// Copy of this network with each listed edge removed. Edges must be
    /// present.
    pub fn without_edges(&self, links: &[(usize, usize)]) -> Result<Self> {
        let mut g = self.clone();
        for &(i, j) in links {
            if !g.has_edge(i, j) {
                return Err(Error::EndpointOutOfRange { i, j, n: self.n });
            }
            g.remove(i, j);
        }
        Ok(g)
    }
}

/// Iterator over a neighborhood, ascending.
#[derive(Debug, Clone)]
pub struct Neighbors {
    bits: u64,
}

impl Iterator for Neighbors {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.bits == 0 {
            return None;
        }
        let j = self.bits.trailing_zeros() as usize;
        self.bits &= self.bits - 1;
        Some(j)
    }
}

/// A vector of actions, one per agent. Not necessarily an equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EffortProfile {
    values: Vec<f64>,
}

impl EffortProfile {
    pub fn new(values: Vec<f64>) -> Self {
        EffortProfile { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied()
    }
}

impl core::ops::Index<usize> for EffortProfile {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl From<Vec<f64>> for EffortProfile {
    fn from(values: Vec<f64>) -> Self {
        EffortProfile::new(values)
    }
}

/// Agent `i`'s best response to the given efforts of everyone else:
/// `(1 - alpha) * theta_i + alpha * mean(neighbors)` when `i` has neighbors,
/// `theta_i` when isolated.
pub fn best_response(
    instance: &Instance,
    network: &Network,
    i: usize,
    efforts: &EffortProfile,
) -> Result<f64> {
    instance.check_network(network)?;
    instance.check_agent(i)?;
    if efforts.len() != instance.n() {
        return Err(Error::LengthMismatch {
            expected: instance.n(),
            actual: efforts.len(),
        });
    }
    let d = network.degree(i);
    if d == 0 {
        return Ok(instance.theta()[i]);
    }
    let sum: f64 = network.neighbors(i)?.map(|j| efforts[j]).sum();
    let alpha = instance.alpha();
    Ok((1.0 - alpha) * instance.theta()[i] + alpha * sum / d as f64)
}

/// The unique simultaneous fixed point of all best responses.
///
/// Solved directly as `(I - alpha * P) y = (1 - alpha) * theta` restricted to
/// non-isolated rows (`P` the row-normalized adjacency), with identity rows
/// `y_i = theta_i` for isolated agents. The system is strictly diagonally
/// dominant for `alpha` in `[0, 1)`, hence always nonsingular; use
/// [`fixed_point_residual`] as the conditioning diagnostic.
pub fn equilibrium_efforts(instance: &Instance, network: &Network) -> Result<EffortProfile> {
    instance.check_network(network)?;
    let n = instance.n();
    let alpha = instance.alpha();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        a[i * n + i] = 1.0;
        let d = network.degree(i);
        if d == 0 {
            b[i] = instance.theta()[i];
        } else {
            let w = alpha / d as f64;
            for j in network.neighbors(i)? {
                a[i * n + j] = -w;
            }
            b[i] = (1.0 - alpha) * instance.theta()[i];
        }
    }
    Ok(EffortProfile::new(solve_dense(&mut a, &mut b, n)))
}

/// Dense Gaussian elimination with partial pivoting; `a` is row-major and
/// consumed. The callers only build nonsingular systems.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let mut piv = col;
        let mut best = fabs(a[col * n + col]);
        for row in (col + 1)..n {
            let mag = fabs(a[row * n + col]);
            if mag > best {
                best = mag;
                piv = row;
            }
        }
        if piv != col {
            for c in col..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let pivot = a[col * n + col];
        debug_assert!(pivot != 0.0, "singular system");
        for row in (col + 1)..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for c in (col + 1)..n {
                a[row * n + c] -= factor * a[col * n + c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row * n + c] * y[c];
        }
        y[row] = acc / a[row * n + row];
    }
    y
}

/// Payoff of agent `i` at an arbitrary effort profile.
pub fn utility(
    instance: &Instance,
    network: &Network,
    efforts: &EffortProfile,
    i: usize,
) -> Result<f64> {
    instance.check_network(network)?;
    instance.check_agent(i)?;
    if efforts.len() != instance.n() {
        return Err(Error::LengthMismatch {
            expected: instance.n(),
            actual: efforts.len(),
        });
    }
    let yi = efforts[i];
    let theta_i = instance.theta()[i];
    let d = network.degree(i);
    if d == 0 {
        return Ok(theta_i * yi - yi * yi / 2.0);
    }
    let alpha = instance.alpha();
    let mut u = (1.0 - alpha) * theta_i * yi - yi * yi / 2.0;
    for j in network.neighbors(i)? {
        u += instance.delta() + alpha * yi * efforts[j] / d as f64;
    }
    Ok(u)
}

/// Equilibrium payoff of every agent on `network`.
pub fn payoffs(instance: &Instance, network: &Network) -> Result<Vec<f64>> {
    let efforts = equilibrium_efforts(instance, network)?;
    (0..instance.n())
        .map(|i| utility(instance, network, &efforts, i))
        .collect()
}

/// `max_i |y_i - best_response_i(y)|`, the fixed-point defect of a profile.
pub fn fixed_point_residual(
    instance: &Instance,
    network: &Network,
    efforts: &EffortProfile,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for i in 0..instance.n() {
        let r = fabs(efforts[i] - best_response(instance, network, i, efforts)?);
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn inst(theta: &[f64], alpha_num: i64, alpha_den: i64, delta: f64) -> Instance {
        let theta = theta
            .iter()
            .map(|&t| Rational::from_float(t).unwrap())
            .collect();
        Instance::new(
            theta,
            Rational::new(alpha_num.into(), alpha_den.into()),
            Rational::from_float(delta).unwrap(),
        )
        .unwrap()
    }

    fn two_pairs() -> (Instance, Network) {
        let instance = inst(&[20.0, 10.0, 11.0, 13.0], 2, 3, 75.0);
        let network = Network::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        (instance, network)
    }

    #[test]
    fn neighbors_follow_the_edge_set() {
        let g = Network::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let n0: Vec<usize> = g.neighbors(0).unwrap().collect();
        let n1: Vec<usize> = g.neighbors(1).unwrap().collect();
        assert_eq!(n0, vec![1, 2]);
        assert_eq!(n1, vec![0]);
        let empty = Network::empty(3).unwrap();
        assert_eq!(empty.neighbors(0).unwrap().count(), 0);
        assert!(matches!(
            g.neighbors(3),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(Network::from_edges(3, &[(1, 1)]).is_err());
        assert!(Network::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Network::from_edges(3, &[(0, 3)]).is_err());
        assert!(Network::empty(0).is_err());
        assert!(Instance::from_f64(&[1.0, 0.0], 0.5, 1.0).is_err());
        assert!(Instance::from_f64(&[1.0], 1.0, 1.0).is_err());
        assert!(Instance::from_f64(&[1.0], -0.1, 1.0).is_err());
        assert!(Instance::from_f64(&[1.0], 0.5, -1.0).is_err());
        assert!(Instance::from_f64(&[], 0.5, 1.0).is_err());
    }

    #[test]
    fn best_response_averages_the_neighborhood() {
        let (instance, network) = two_pairs();
        let efforts = EffortProfile::new(vec![0.0, 14.0, 0.0, 0.0]);
        let br = best_response(&instance, &network, 0, &efforts).unwrap();
        assert!(fabs(br - 16.0) < 1e-12);

        let lone = inst(&[7.0], 2, 3, 0.0);
        let g1 = Network::empty(1).unwrap();
        let br = best_response(&lone, &g1, 0, &EffortProfile::new(vec![0.0])).unwrap();
        assert_eq!(br, 7.0);

        // two neighbors: own type 11, neighbor efforts 13 and 15
        let inst5 = inst(&[20.0, 10.0, 11.0, 13.0, 19.0], 2, 3, 75.0);
        let g = Network::from_edges(5, &[(0, 1), (2, 3), (4, 2)]).unwrap();
        let efforts = EffortProfile::new(vec![0.0, 0.0, 0.0, 13.0, 15.0]);
        let br = best_response(&inst5, &g, 2, &efforts).unwrap();
        assert!(fabs(br - 13.0) < 1e-12);
    }

    #[test]
    fn equilibrium_matches_the_two_pair_baseline() {
        let (instance, network) = two_pairs();
        let y = equilibrium_efforts(&instance, &network).unwrap();
        let expected = [16.0, 14.0, 11.8, 12.2];
        for (i, e) in expected.iter().enumerate() {
            assert!(fabs(y[i] - e) < 1e-12, "agent {i}: {} vs {e}", y[i]);
        }
        assert!(fixed_point_residual(&instance, &network, &y).unwrap() < 1e-10);
    }

    #[test]
    fn empty_network_equilibrium_is_the_type_vector() {
        let instance = inst(&[3.0, 5.5, 9.25], 1, 2, 4.0);
        let g = Network::empty(3).unwrap();
        let y = equilibrium_efforts(&instance, &g).unwrap();
        assert_eq!(y.as_slice(), instance.theta());
    }

    #[test]
    fn equilibrium_matches_the_fifth_agent_panels() {
        let instance = inst(&[20.0, 10.0, 11.0, 13.0, 19.0], 2, 3, 75.0);
        // fifth agent linked to agent 2 (0-based index 2)
        let g_high = Network::from_edges(5, &[(0, 1), (2, 3), (4, 2)]).unwrap();
        let y = equilibrium_efforts(&instance, &g_high).unwrap();
        for (i, e) in [16.0, 14.0, 13.0, 13.0, 15.0].iter().enumerate() {
            assert!(fabs(y[i] - e) < 1e-12);
        }
        // fifth agent linked to agent 1 (0-based index 1)
        let g_low = Network::from_edges(5, &[(0, 1), (2, 3), (4, 1)]).unwrap();
        let y = equilibrium_efforts(&instance, &g_low).unwrap();
        let expected = [238.0 / 15.0, 13.8, 11.8, 12.2, 233.0 / 15.0];
        for (i, e) in expected.iter().enumerate() {
            assert!(fabs(y[i] - e) < 1e-12);
        }
        assert!(fabs(y[0] - 15.9) < 0.05);
        assert!(fabs(y[4] - 15.5) < 0.05);
    }

    #[test]
    fn utility_matches_hand_computed_values() {
        let (instance, network) = two_pairs();
        let y = equilibrium_efforts(&instance, &network).unwrap();
        let u1 = utility(&instance, &network, &y, 1).unwrap();
        assert!(fabs(u1 - 173.0) < 1e-9);
        let u0 = utility(&instance, &network, &y, 0).unwrap();
        assert!(fabs(u0 - 203.0) < 1e-9);
    }

    #[test]
    fn isolated_agent_at_its_type_earns_half_theta_squared() {
        let instance = inst(&[6.0, 20.0], 1, 3, 9.0);
        let g = Network::empty(2).unwrap();
        let y = equilibrium_efforts(&instance, &g).unwrap();
        let u = utility(&instance, &g, &y, 0).unwrap();
        assert!(fabs(u - 18.0) < 1e-12);
    }

    #[test]
    fn payoffs_cover_all_agents() {
        let (instance, network) = two_pairs();
        let u = payoffs(&instance, &network).unwrap();
        let expected = [203.0, 173.0, 7231.0 / 50.0, 7471.0 / 50.0];
        for (i, e) in expected.iter().enumerate() {
            assert!(fabs(u[i] - e) < 1e-9);
        }

        let single = inst(&[5.0], 1, 2, 3.0);
        let u = payoffs(&single, &Network::empty(1).unwrap()).unwrap();
        assert!(fabs(u[0] - 12.5) < 1e-12);

        let g = Network::empty(4).unwrap();
        let u = payoffs(&instance, &g).unwrap();
        for (i, t) in instance.theta().iter().enumerate() {
            assert!(fabs(u[i] - t * t / 2.0) < 1e-12);
        }
    }

    #[test]
    fn equilibrium_pay_equals_half_square_plus_link_benefits() {
        // At equilibrium the first-order condition collapses the payoff to
        // y_i^2 / 2 + d_i * delta; a useful cross-check of both formulas.
        let (instance, network) = two_pairs();
        let y = equilibrium_efforts(&instance, &network).unwrap();
        for i in 0..4 {
            let u = utility(&instance, &network, &y, i).unwrap();
            let shortcut = y[i] * y[i] / 2.0 + network.degree(i) as f64 * instance.delta();
            assert!(fabs(u - shortcut) < 1e-9);
        }
    }

    #[test]
    fn efforts_do_not_depend_on_delta() {
        let (instance, network) = two_pairs();
        let other = instance
            .with_delta(Rational::from_float(3.25).unwrap())
            .unwrap();
        let y1 = equilibrium_efforts(&instance, &network).unwrap();
        let y2 = equilibrium_efforts(&other, &network).unwrap();
        // identical solve path, so bitwise equality is expected
        assert_eq!(y1.as_slice(), y2.as_slice());
    }

    #[test]
    fn efforts_stay_within_the_type_range() {
        let instance = inst(&[20.0, 10.0, 11.0, 13.0, 19.0], 99, 100, 0.0);
        let g = Network::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let y = equilibrium_efforts(&instance, &g).unwrap();
        for i in 0..5 {
            assert!(y[i] >= 10.0 - 1e-9 && y[i] <= 20.0 + 1e-9);
        }
    }
}
