use crate::error::{Error, Result};
use crate::kernel::sub;

use super::multiindex::{monomials, MultiIndexSet};
use super::tree::ClusterTree;

/// Moments `m_c^k = Σ_{j∈c} q_j (y_j − y_c)^k` for every node and weight
/// channel, plus the channel weights in tree order for leaf sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMoments {
    set: MultiIndexSet,
    channels: usize,
    /// `[node][channel][k]`.
    data: Vec<f64>,
    /// `[pos][channel]`, tree order.
    weights: Vec<f64>,
}

impl ClusterMoments {
    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn order(&self) -> usize {
        self.set.order()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Moment tensor of `node` for `channel`, in set order.
    #[inline]
    pub fn get(&self, node: usize, channel: usize) -> &[f64] {
        let len = self.set.len();
        let at = (node * self.channels + channel) * len;
        &self.data[at..at + len]
    }

    /// Channel weights of the sources at tree positions `start..end`,
    /// source-major.
    #[inline]
    pub fn leaf_weights(&self, start: usize, end: usize) -> &[f64] {
        &self.weights[start * self.channels..end * self.channels]
    }

    /// All channel weights of the source at tree position `pos`.
    #[inline]
    pub fn source_weights(&self, pos: usize) -> &[f64] {
        &self.weights[pos * self.channels..(pos + 1) * self.channels]
    }
}

/// `(k, j, k − j, Π binom(k_s, j_s))` for every `j ≤ k` in the set.
fn shift_table(set: &MultiIndexSet) -> Vec<(usize, usize, usize, f64)> {
    let binom = |n: usize, r: usize| -> f64 {
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut table = Vec::new();
    for (ki, k) in set.items().iter().enumerate() {
        for (ji, j) in set.items().iter().enumerate() {
            if j[0] <= k[0] && j[1] <= k[1] && j[2] <= k[2] {
                let diff = [k[0] - j[0], k[1] - j[1], k[2] - j[2]];
                let di = set.index(diff).expect("difference of indices stays in the set");
                let c = binom(k[0], j[0]) * binom(k[1], j[1]) * binom(k[2], j[2]);
                table.push((ki, ji, di, c));
            }
        }
    }
    table
}

/// Moments of order `p` for each weight channel (each slice indexed by the
/// original source order). Leaves are summed directly and parents are
/// assembled from their children by the binomial shift.
pub fn compute_moments(tree: &ClusterTree, channels: &[&[f64]], p: usize) -> Result<ClusterMoments> {
    let n = tree.num_sources();
    if channels.is_empty() {
        return Err(Error::InvalidInput("at least one weight channel is required".into()));
    }
    if let Some(bad) = channels.iter().position(|c| c.len() != n) {
        return Err(Error::InvalidInput(format!(
            "weight channel {bad} has {} entries for {n} sources",
            channels[bad].len()
        )));
    }
    let nch = channels.len();
    let set = MultiIndexSet::new(tree.dim(), p);
    let len = set.len();
    let mut weights = vec![0.0; n * nch];
    for (pos, &j) in tree.order().iter().enumerate() {
        for (q, c) in channels.iter().enumerate() {
            weights[pos * nch + q] = c[j];
        }
    }
    let nodes = tree.nodes();
    let mut data = vec![0.0; nodes.len() * nch * len];
    let shifts = shift_table(&set);
    let mut mono = vec![0.0; len];
    for id in (0..nodes.len()).rev() {
        let node = &nodes[id];
        let (before, rest) = data.split_at_mut((id + 1) * nch * len);
        let own = &mut before[id * nch * len..];
        if node.is_leaf() {
            for pos in node.start..node.end {
                monomials(&set, &sub(&tree.points()[pos], &node.center), &mut mono);
                for q in 0..nch {
                    let w = weights[pos * nch + q];
                    for (m, x) in own[q * len..(q + 1) * len].iter_mut().zip(&mono) {
                        *m += w * x;
                    }
                }
            }
        } else {
            for &c in &node.children {
                let child = &nodes[c];
                monomials(&set, &sub(&child.center, &node.center), &mut mono);
                let off = (c - id - 1) * nch * len;
                for q in 0..nch {
                    let src = &rest[off + q * len..off + (q + 1) * len];
                    let dst = &mut own[q * len..(q + 1) * len];
                    for &(k, j, d, b) in &shifts {
                        dst[k] += b * src[j] * mono[d];
                    }
                }
            }
        }
    }
    Ok(ClusterMoments {
        set,
        channels: nch,
        data,
        weights,
    })
}
