//! Shared helpers for the integration tests.

use pairnash_core::Network;

/// Deterministic network on `n` agents from a 32-bit mask: bit `k` toggles
/// the `k`-th pair in lexicographic order.
pub fn random_network_from_mask(n: usize, mask: u32) -> Network {
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if mask >> (bit % 32) & 1 == 1 {
                edges.push((i, j));
            }
            bit += 1;
        }
    }
    Network::from_edges(n, &edges).unwrap()
}
