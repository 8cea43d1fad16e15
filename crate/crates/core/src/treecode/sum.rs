use rayon::prelude::*;

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::fields::{velocity_field_direct, ScoreField};
use crate::kernel::{kernel_matrix, norm2, sub, CollisionKernelSpec, Mollifier, Vec3, Z_FLOOR};

use super::coeffs::{
    gaussian_coefficients_into, gaussian_grad_coefficients_into, kernel_coefficients_into, kernel_components,
};
use super::moments::{compute_moments, ClusterMoments};
use super::multiindex::MultiIndexSet;
use super::tree::{build_tree, ClusterNode, ClusterTree};

/// Gaussian interactions beyond `exp(−GAUSSIAN_PRUNE_EXPONENT)` of the peak
/// are dropped.
pub const GAUSSIAN_PRUNE_EXPONENT: f64 = 40.0;

/// Target size of the first neglected Gaussian Taylor term, relative to the
/// peak value.
const GAUSSIAN_EXPANSION_TOL: f64 = 1e-8;

/// Velocity clusters with at most this many sources per Taylor coefficient
/// are summed directly; below it the six-component expansion costs more than
/// the pairs it replaces.
const VELOCITY_DIRECT_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreecodeParams {
    /// MAC parameter; `0` disables expansions entirely.
    pub theta: f64,
    /// Taylor order `p`.
    pub order: usize,
    pub leaf_capacity: usize,
    /// Subtract the weighted-mean drift from treecode velocities.
    pub restore_momentum: bool,
}

impl Default for TreecodeParams {
    fn default() -> Self {
        Self {
            theta: 0.5,
            order: 6,
            leaf_capacity: 32,
            restore_momentum: false,
        }
    }
}

impl TreecodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        if self.leaf_capacity == 0 {
            return Err(Error::InvalidParameter("leaf capacity must be at least 1".into()));
        }
        if self.order > 20 {
            return Err(Error::InvalidParameter(format!("order {} is above 20", self.order)));
        }
        Ok(())
    }
}

/// A kernel `φ(x, y)` with one or more outputs and Taylor coefficients in `y`.
pub trait TaylorKernel: Sync {
    fn dim(&self) -> usize;

    fn outputs(&self) -> usize;

    /// `φ_o(x, y)` for every output `o`.
    fn eval(&self, x: &Vec3, y: &Vec3, out: &mut [f64]);

    /// Coefficient blocks (one per output, each `set.len()` long) of the
    /// expansion about `y_c`. Returns `false` if no expansion exists there.
    fn coefficients(&self, x: &Vec3, yc: &Vec3, set: &MultiIndexSet, scratch: &mut Vec<f64>, out: &mut [f64])
        -> bool;

    /// Highest order with nonzero coefficients, if finite.
    fn max_order(&self) -> Option<usize> {
        None
    }

    /// Extra admissibility condition on the cluster radius.
    fn expandable(&self, _radius: f64, _order: usize) -> bool {
        true
    }

    /// Whether every source at distance at least `min_dist` is negligible.
    fn negligible(&self, _min_dist: f64) -> bool {
        false
    }

    /// Adds `Σ_j φ_o(x, y_j) q_j` over a run of sources whose channel weights
    /// are stored source-major in `weights`.
    fn leaf_sum(&self, x: &Vec3, points: &[Vec3], weights: &[f64], acc: &mut [f64], phi: &mut [f64]) {
        let nout = self.outputs();
        let nch = weights.len() / points.len().max(1);
        for (y, w) in points.iter().zip(weights.chunks(nch)) {
            self.eval(x, y, phi);
            for o in 0..nout {
                for q in 0..nch {
                    acc[o * nch + q] += phi[o] * w[q];
                }
            }
        }
    }
}

/// Largest cluster radius (in units of `√ε`) for which the first dropped
/// Gaussian term stays below [`GAUSSIAN_EXPANSION_TOL`]. The 1D coefficients
/// obey `|c_n| ≲ √(2^n/n!) ε^{−n/2}` relative to the peak.
pub fn gaussian_expansion_radius(order: usize, eps: f64) -> f64 {
    let n = (order + 1) as f64;
    let log_fact: f64 = (1..=order + 1).map(|i| (i as f64).ln()).sum();
    let bound = 0.5 * (n * 2f64.ln() - log_fact);
    ((GAUSSIAN_EXPANSION_TOL.ln() - bound) / n).exp() * eps.sqrt()
}

fn gaussian_prune(eps: f64, min_dist: f64) -> bool {
    min_dist > 0.0 && min_dist * min_dist > 2.0 * eps * GAUSSIAN_PRUNE_EXPONENT
}

/// `φ(x, y) = ψ_ε(x − y)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianKernel {
    pub mollifier: Mollifier,
}

impl TaylorKernel for GaussianKernel {
    fn dim(&self) -> usize {
        self.mollifier.dim()
    }

    fn outputs(&self) -> usize {
        1
    }

    fn eval(&self, x: &Vec3, y: &Vec3, out: &mut [f64]) {
        out[0] = self.mollifier.eval(&sub(x, y));
    }

    fn coefficients(&self, x: &Vec3, yc: &Vec3, set: &MultiIndexSet, _: &mut Vec<f64>, out: &mut [f64]) -> bool {
        gaussian_coefficients_into(x, yc, &self.mollifier, set, out);
        true
    }

    fn expandable(&self, radius: f64, order: usize) -> bool {
        radius <= gaussian_expansion_radius(order, self.mollifier.eps())
    }

    fn negligible(&self, min_dist: f64) -> bool {
        gaussian_prune(self.mollifier.eps(), min_dist)
    }

    fn leaf_sum(&self, x: &Vec3, points: &[Vec3], weights: &[f64], acc: &mut [f64], _: &mut [f64]) {
        let nch = weights.len() / points.len().max(1);
        let inv = 0.5 / self.mollifier.eps();
        let norm = self.mollifier.normalization();
        for (y, w) in points.iter().zip(weights.chunks(nch)) {
            let arg = inv * norm2(&sub(x, y));
            if arg > GAUSSIAN_PRUNE_EXPONENT {
                continue;
            }
            let e = norm * (-arg).exp();
            for q in 0..nch {
                acc[q] += e * w[q];
            }
        }
    }
}

/// `φ_s(x, y) = ∂_s ψ_ε(x − y)`, one output per dimension.
#[derive(Debug, Clone, Copy)]
pub struct GaussianGradKernel {
    pub mollifier: Mollifier,
}

impl TaylorKernel for GaussianGradKernel {
    fn dim(&self) -> usize {
        self.mollifier.dim()
    }

    fn outputs(&self) -> usize {
        self.mollifier.dim()
    }

    fn eval(&self, x: &Vec3, y: &Vec3, out: &mut [f64]) {
        let g = self.mollifier.grad(&sub(x, y));
        out.copy_from_slice(&g[..out.len()]);
    }

    fn coefficients(&self, x: &Vec3, yc: &Vec3, set: &MultiIndexSet, _: &mut Vec<f64>, out: &mut [f64]) -> bool {
        gaussian_grad_coefficients_into(x, yc, &self.mollifier, set, out);
        true
    }

    fn expandable(&self, radius: f64, order: usize) -> bool {
        radius <= gaussian_expansion_radius(order + 1, self.mollifier.eps())
    }

    fn negligible(&self, min_dist: f64) -> bool {
        gaussian_prune(self.mollifier.eps(), min_dist)
    }

    fn leaf_sum(&self, x: &Vec3, points: &[Vec3], weights: &[f64], acc: &mut [f64], _: &mut [f64]) {
        let dim = self.mollifier.dim();
        let nch = weights.len() / points.len().max(1);
        let eps = self.mollifier.eps();
        let inv = 0.5 / eps;
        let norm = -self.mollifier.normalization() / eps;
        for (y, w) in points.iter().zip(weights.chunks(nch)) {
            let z = sub(x, y);
            let arg = inv * norm2(&z);
            if arg > GAUSSIAN_PRUNE_EXPONENT {
                continue;
            }
            let e = norm * (-arg).exp();
            for o in 0..dim {
                let g = e * z[o];
                for q in 0..nch {
                    acc[o * nch + q] += g * w[q];
                }
            }
        }
    }
}

/// The independent components of `A(x − y)`, ordered as [`kernel_components`].
#[derive(Debug, Clone, Copy)]
pub struct CollisionKernel {
    pub spec: CollisionKernelSpec,
}

impl TaylorKernel for CollisionKernel {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn outputs(&self) -> usize {
        kernel_components(self.spec.dim).len()
    }

    fn eval(&self, x: &Vec3, y: &Vec3, out: &mut [f64]) {
        match kernel_matrix(&sub(x, y), &self.spec) {
            Ok(a) => {
                for (slot, &(r, s)) in out.iter_mut().zip(kernel_components(self.spec.dim)) {
                    *slot = a.get(r, s);
                }
            }
            Err(_) => out.fill(0.0),
        }
    }

    fn coefficients(
        &self,
        x: &Vec3,
        yc: &Vec3,
        set: &MultiIndexSet,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> bool {
        scratch.resize(set.len(), 0.0);
        kernel_coefficients_into(&self.spec, set, x, yc, scratch, out).is_ok()
    }

    fn max_order(&self) -> Option<usize> {
        (self.spec.gamma == 0.0).then_some(2)
    }
}

/// `Σ_j q_j φ(x_i, y_j)` for every target, output and channel by the plain
/// double loop in source order. Layout: `[(target · outputs + o) · channels + q]`.
pub fn direct_sum<K: TaylorKernel>(kernel: &K, sources: &[Vec3], channels: &[&[f64]], targets: &[Vec3]) -> Vec<f64> {
    let nout = kernel.outputs();
    let nch = channels.len();
    targets
        .par_iter()
        .flat_map_iter(|x| {
            let mut acc = vec![0.0; nout * nch];
            let mut phi = vec![0.0; nout];
            for (j, y) in sources.iter().enumerate() {
                kernel.eval(x, y, &mut phi);
                for o in 0..nout {
                    for q in 0..nch {
                        acc[o * nch + q] += phi[o] * channels[q][j];
                    }
                }
            }
            acc
        })
        .collect()
}

/// Distance from `x` to the node's bounding box.
pub(super) fn box_distance(x: &Vec3, node: &ClusterNode) -> f64 {
    let mut d2 = 0.0;
    for s in 0..3 {
        let gap = (node.lo[s] - x[s]).max(x[s] - node.hi[s]).max(0.0);
        d2 += gap * gap;
    }
    d2.sqrt()
}

fn effective_order<K: TaylorKernel>(kernel: &K, p: usize) -> usize {
    kernel.max_order().map_or(p, |m| m.min(p))
}

/// Particle–cluster treecode: expand when `r_c ≤ θR` and the kernel admits
/// it, sum leaves directly, recurse otherwise. Clusters with no more sources
/// than Taylor coefficients are always summed directly, which is both exact
/// and cheaper. `θ = 0` runs [`direct_sum`].
pub fn treecode_sum<K: TaylorKernel>(
    tree: &ClusterTree,
    moments: &ClusterMoments,
    kernel: &K,
    targets: &[Vec3],
    params: &TreecodeParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    let p = effective_order(kernel, params.order);
    if moments.order() < p {
        return Err(Error::InvalidParameter(format!(
            "moments of order {} cannot serve order {p}",
            moments.order()
        )));
    }
    let nout = kernel.outputs();
    let nch = moments.channels();
    if params.theta == 0.0 {
        let mut sources = vec![[0.0; 3]; tree.num_sources()];
        let mut weights = vec![vec![0.0; tree.num_sources()]; nch];
        for (pos, &j) in tree.order().iter().enumerate() {
            sources[j] = tree.points()[pos];
            for (q, w) in moments.source_weights(pos).iter().enumerate() {
                weights[q][j] = *w;
            }
        }
        let refs: Vec<&[f64]> = weights.iter().map(|w| w.as_slice()).collect();
        return Ok(direct_sum(kernel, &sources, &refs, targets));
    }
    let set = MultiIndexSet::new(tree.dim(), p);
    let len = set.len();
    let nodes = tree.nodes();
    let out = targets
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), vec![0.0; nout * len], vec![0.0; nout]),
            |(stack, scratch, coef, phi), x| {
                let mut acc = vec![0.0; nout * nch];
                stack.clear();
                stack.push(0usize);
                while let Some(id) = stack.pop() {
                    let node = &nodes[id];
                    let dist = norm2(&sub(x, &node.center)).sqrt();
                    if kernel.negligible((dist - node.radius).max(box_distance(x, node))) {
                        continue;
                    }
                    let direct = node.is_leaf() || node.len() <= len;
                    if node.len() > len
                        && node.radius <= params.theta * dist
                        && dist > Z_FLOOR
                        && kernel.expandable(node.radius, p)
                        && kernel.coefficients(x, &node.center, &set, scratch, coef)
                    {
                        for o in 0..nout {
                            let a = &coef[o * len..(o + 1) * len];
                            for q in 0..nch {
                                let m = &moments.get(id, q)[..len];
                                acc[o * nch + q] += a.iter().zip(m).map(|(a, m)| a * m).sum::<f64>();
                            }
                        }
                    } else if direct {
                        kernel.leaf_sum(
                            x,
                            &tree.points()[node.start..node.end],
                            moments.leaf_weights(node.start, node.end),
                            &mut acc,
                            phi,
                        );
                    } else {
                        stack.extend(node.children.iter().rev());
                    }
                }
                acc
            },
        )
        .flatten_iter()
        .collect();
    Ok(out)
}

/// Velocities `U_i = −Σ_j w_j A(v_i − v_j)(F_i − F_j)` with far clusters
/// taken from expansions of the `A` components against the weight channels
/// `w_j` and `w_j F_s(v_j)`.
pub fn treecode_velocity_field(
    ens: &ParticleEnsemble,
    scores: &ScoreField,
    spec: &CollisionKernelSpec,
    params: &TreecodeParams,
) -> Result<Vec<Vec3>> {
    params.validate()?;
    let n = ens.len();
    if scores.len() != n {
        return Err(Error::InvalidInput(format!("{} scores for {n} particles", scores.len())));
    }
    if params.theta == 0.0 {
        return Ok(velocity_field_direct(ens, scores, spec));
    }
    let dim = ens.dim();
    let tree = build_tree(ens.velocities(), dim, params.leaf_capacity)?;
    let kernel = CollisionKernel { spec: *spec };
    let p = effective_order(&kernel, params.order);
    let w = ens.weights();
    let f = scores.values();
    let mut channels: Vec<Vec<f64>> = vec![w.to_vec()];
    for s in 0..dim {
        channels.push(w.iter().zip(f).map(|(w, f)| w * f[s]).collect());
    }
    let refs: Vec<&[f64]> = channels.iter().map(|c| c.as_slice()).collect();
    let moments = compute_moments(&tree, &refs, p)?;
    let f_tree = tree.permute(f);
    let w_tree = tree.permute(w);
    let set = MultiIndexSet::new(dim, p);
    let len = set.len();
    let comps = kernel_components(dim);
    let nodes = tree.nodes();
    let small = VELOCITY_DIRECT_FACTOR * len;

    let mut u: Vec<Vec3> = ens
        .velocities()
        .par_iter()
        .zip(f.par_iter())
        .map_init(
            || (Vec::new(), vec![0.0; len], vec![0.0; len * comps.len()]),
            |(stack, radial, coef), (x, fi)| {
                let mut acc = [0.0; 3];
                stack.clear();
                stack.push(0usize);
                while let Some(id) = stack.pop() {
                    let node = &nodes[id];
                    let dist = norm2(&sub(x, &node.center)).sqrt();
                    if node.len() > small
                        && node.radius <= params.theta * dist
                        && dist > Z_FLOOR
                        && kernel_coefficients_into(spec, &set, x, &node.center, radial, coef).is_ok()
                    {
                        // s0[r][s] = Σ_k a_rs^k m_w^k, t[r][s] = Σ_k a_rs^k m_{wF_s}^k
                        let mut s0 = [[0.0; 3]; 3];
                        let mut t = [[0.0; 3]; 3];
                        for (c, &(r, s)) in comps.iter().enumerate() {
                            let a = &coef[c * len..(c + 1) * len];
                            let dot = |q: usize| a.iter().zip(moments.get(id, q)).map(|(a, m)| a * m).sum::<f64>();
                            let v = dot(0);
                            s0[r][s] = v;
                            s0[s][r] = v;
                            t[r][s] = dot(1 + s);
                            if r != s {
                                t[s][r] = dot(1 + r);
                            }
                        }
                        for r in 0..dim {
                            for s in 0..dim {
                                acc[r] += t[r][s] - s0[r][s] * fi[s];
                            }
                        }
                    } else if node.is_leaf() || node.len() <= small {
                        for pos in node.start..node.end {
                            let z = sub(x, &tree.points()[pos]);
                            let df = sub(fi, &f_tree[pos]);
                            let a = spec.apply(&z, &df);
                            for r in 0..3 {
                                acc[r] -= w_tree[pos] * a[r];
                            }
                        }
                    } else {
                        stack.extend(node.children.iter().rev());
                    }
                }
                acc
            },
        )
        .collect();

    if params.restore_momentum {
        let mass = ens.total_mass();
        let mut drift = [0.0; 3];
        for (ui, wi) in u.iter().zip(w) {
            for s in 0..dim {
                drift[s] += wi * ui[s];
            }
        }
        for ui in &mut u {
            for s in 0..dim {
                ui[s] -= drift[s] / mass;
            }
        }
    }
    Ok(u)
}
