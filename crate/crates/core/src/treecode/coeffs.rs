//! Taylor coefficients `a^k(x, y_c) = (1/k!) D_w^k φ(x, w)|_{w=y_c}` for the
//! Gaussian, its gradient and the collision-kernel components.
//!
//! All kernels depend on `u = w − x` only; with `w = y_c + δ` the
//! coefficients are those of the power series in `δ` about `u₀ = y_c − x`.
//!
//! Any `f = |u|^γ h(u)` with `h` independent of `u_s` satisfies
//! `|u|² ∂_s f = γ u_s f`. Matching Taylor coefficients gives, for `k_s ≥ 1`,
//!
//! ```text
//! |u₀|² a^k = −Σ_r (2u₀_r a^{k−e_r} + a^{k−2e_r})
//!             + ((2 + γ)/k_s)(u₀_s a^{k−e_s} + a^{k−2e_s}).
//! ```
//!
//! `h = 1` gives the coefficients `b^k` of `|u|^γ` itself.
//!
//! The collision components `A_rr ∝ |u|^γ Σ_{q≠r} u_q²` and
//! `A_rs ∝ −|u|^γ u_r u_s` are free of `u_r` and of the third index
//! respectively, which fixes the recurrence direction. Coefficients in the
//! base plane `k_s = 0` come from the product of the quadratic factor with
//! the coefficients of `|u|^γ`.

use crate::error::{Error, Result};
use crate::kernel::{norm2, sub, CollisionKernelSpec, Mollifier, Vec3, Z_FLOOR};

use super::multiindex::{MultiIndexSet, NONE};

/// One-dimensional Taylor coefficients of `exp(−(t + δ)²/2ε)` in `δ`.
fn gaussian_1d(t: f64, eps: f64, order: usize, out: &mut [f64]) {
    out[0] = (-0.5 * t * t / eps).exp();
    if order == 0 {
        return;
    }
    out[1] = -t / eps * out[0];
    for n in 2..=order {
        out[n] = -(t * out[n - 1] + out[n - 2]) / (n as f64 * eps);
    }
}

/// Per-axis tables `c[s][n]` for the Gaussian centred at `x`, expanded at `y_c`.
fn gaussian_tables(x: &Vec3, yc: &Vec3, m: &Mollifier, order: usize) -> [Vec<f64>; 3] {
    let mut tables = [vec![0.0; order + 1], vec![0.0; order + 1], vec![0.0; order + 1]];
    for s in 0..m.dim() {
        gaussian_1d(yc[s] - x[s], m.eps(), order, &mut tables[s]);
    }
    // unused third axis in 2D: a unit constant
    if m.dim() == 2 {
        tables[2][0] = 1.0;
    }
    tables
}

/// Coefficients of `w ↦ ψ_ε(x − w)` about `y_c`, written to `out` in set order.
pub fn gaussian_coefficients_into(x: &Vec3, yc: &Vec3, m: &Mollifier, set: &MultiIndexSet, out: &mut [f64]) {
    let c = gaussian_tables(x, yc, m, set.order());
    let norm = m.normalization();
    for (slot, k) in out.iter_mut().zip(set.items()) {
        *slot = norm * c[0][k[0]] * c[1][k[1]] * c[2][k[2]];
    }
}

/// Coefficients of each component of `w ↦ ∇ψ_ε(x − w)` about `y_c`; `out`
/// holds `dim` consecutive blocks of `set.len()` values.
pub fn gaussian_grad_coefficients_into(
    x: &Vec3,
    yc: &Vec3,
    m: &Mollifier,
    set: &MultiIndexSet,
    out: &mut [f64],
) {
    let dim = m.dim();
    let c = gaussian_tables(x, yc, m, set.order());
    let norm = m.normalization() / m.eps();
    let len = set.len();
    for s in 0..dim {
        let t = yc[s] - x[s];
        let block = &mut out[s * len..(s + 1) * len];
        for (slot, k) in block.iter_mut().zip(set.items()) {
            let mut v = norm;
            for r in 0..3 {
                if r == s {
                    let n = k[s];
                    let lower = if n > 0 { c[s][n - 1] } else { 0.0 };
                    v *= t * c[s][n] + lower;
                } else {
                    v *= c[r][k[r]];
                }
            }
            *slot = v;
        }
    }
}

/// `a^k` of `ψ_ε(x − w)` about `w = y_c` for `‖k‖ ≤ p`, in the order of
/// `MultiIndexSet::new(d, p)`.
pub fn taylor_coeffs_gaussian(x: &Vec3, yc: &Vec3, m: &Mollifier, p: usize) -> Vec<f64> {
    let set = MultiIndexSet::new(m.dim(), p);
    let mut out = vec![0.0; set.len()];
    gaussian_coefficients_into(x, yc, m, &set, &mut out);
    out
}

/// Coefficient tensors of the `d` components of `∇ψ_ε(x − w)`.
pub fn taylor_coeffs_gaussian_grad(x: &Vec3, yc: &Vec3, m: &Mollifier, p: usize) -> Vec<Vec<f64>> {
    let set = MultiIndexSet::new(m.dim(), p);
    let mut out = vec![0.0; set.len() * m.dim()];
    gaussian_grad_coefficients_into(x, yc, m, &set, &mut out);
    out.chunks(set.len()).map(|c| c.to_vec()).collect()
}

/// Independent components `(r, s)` of the symmetric collision matrix:
/// `(11, 22, 33, 12, 13, 23)` in 3D and `(11, 22, 12)` in 2D.
pub fn kernel_components(dim: usize) -> &'static [(usize, usize)] {
    if dim == 3 {
        &[(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    } else {
        &[(0, 0), (1, 1), (0, 1)]
    }
}

/// Scratch space for collision-kernel coefficients at a fixed order.
#[derive(Debug, Clone)]
pub struct KernelCoefficients {
    set: MultiIndexSet,
    spec: CollisionKernelSpec,
    radial: Vec<f64>,
    /// `components × set.len()` values, component-major.
    values: Vec<f64>,
}

impl KernelCoefficients {
    pub fn new(spec: CollisionKernelSpec, order: usize) -> Self {
        let set = MultiIndexSet::new(spec.dim, order);
        let ncomp = kernel_components(spec.dim).len();
        Self {
            radial: vec![0.0; set.len()],
            values: vec![0.0; set.len() * ncomp],
            set,
            spec,
        }
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    /// Block of component `c` (index into [`kernel_components`]).
    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.set.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fills every component for the pair `(x, y_c)`.
    pub fn compute(&mut self, x: &Vec3, yc: &Vec3) -> Result<()> {
        kernel_coefficients_into(&self.spec, &self.set, x, yc, &mut self.radial, &mut self.values)
    }
}

/// Coefficients of every component of `A(x − w)` about `y_c`, written
/// component-major into `out`; `radial` is scratch of length `set.len()`.
pub fn kernel_coefficients_into(
    spec: &CollisionKernelSpec,
    set: &MultiIndexSet,
    x: &Vec3,
    yc: &Vec3,
    radial: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let u0 = sub(yc, x);
    let r2 = norm2(&u0);
    if r2.sqrt() <= Z_FLOOR {
        return Err(Error::NearField(r2.sqrt()));
    }
    let dim = spec.dim;
    let gamma = spec.gamma;
    let len = set.len();

    if gamma == 0.0 {
        // A is the quadratic factor itself
        out.fill(0.0);
        for (c, &(r, s)) in kernel_components(dim).iter().enumerate() {
            let (terms, nterms) = quadratic_terms(dim, r, s, &u0, spec.prefactor);
            for &(off, v) in &terms[..nterms] {
                let mut k = [0; 3];
                match off {
                    Offset::Zero => {}
                    Offset::One(a) => k[a] = 1,
                    Offset::Two(a) => k[a] = 2,
                    Offset::Pair(a, b) => {
                        k[a] = 1;
                        k[b] = 1;
                    }
                }
                if let Some(i) = set.index(k) {
                    out[c * len + i] = v;
                }
            }
        }
        return Ok(());
    }

    // coefficients of |u|^γ
    radial[0] = radial_power(r2, gamma);
    for i in 1..len {
        let k = set.items()[i];
        let s = (0..dim).find(|&s| k[s] > 0).unwrap_or(0);
        radial[i] = recurrence_step(set, radial, i, s, &u0, r2, gamma, dim);
    }

    for (c, &(r, s)) in kernel_components(dim).iter().enumerate() {
        let block = &mut out[c * len..(c + 1) * len];
        let (terms, nterms) = quadratic_terms(dim, r, s, &u0, spec.prefactor);
        let terms = &terms[..nterms];
        // 3D components have a free direction; 2D uses the product throughout
        let free = if dim == 3 {
            Some(if r == s { r } else { 3 - r - s })
        } else {
            None
        };
        for i in 0..len {
            let k = set.items()[i];
            block[i] = match free {
                Some(q) if k[q] > 0 => recurrence_step(set, block, i, q, &u0, r2, gamma, dim),
                _ => product_coefficient(set, radial, i, terms),
            };
        }
    }
    Ok(())
}

/// One application of the recurrence for `|u|^γ h` with `h` independent of `u_s`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn recurrence_step(
    set: &MultiIndexSet,
    a: &[f64],
    i: usize,
    s: usize,
    u0: &Vec3,
    r2: f64,
    gamma: f64,
    dim: usize,
) -> f64 {
    let at = |j: usize| if j == NONE { 0.0 } else { a[j] };
    let ks = set.items()[i][s] as f64;
    let mut rhs = 0.0;
    for q in 0..dim {
        rhs -= 2.0 * u0[q] * at(set.minus1(i, q)) + at(set.minus2(i, q));
    }
    rhs += (2.0 + gamma) / ks * (u0[s] * at(set.minus1(i, s)) + at(set.minus2(i, s)));
    rhs / r2
}

/// Offset `j` of one Taylor term of a quadratic polynomial.
#[derive(Debug, Clone, Copy)]
enum Offset {
    Zero,
    One(usize),
    Two(usize),
    Pair(usize, usize),
}

/// Taylor terms of the quadratic factor of `A_rs` (times the prefactor)
/// about `u₀`; at most five of them.
fn quadratic_terms(dim: usize, r: usize, s: usize, u0: &Vec3, prefactor: f64) -> ([(Offset, f64); 5], usize) {
    let mut terms = [(Offset::Zero, 0.0); 5];
    if r == s {
        let mut n = 1;
        let mut c0 = 0.0;
        for q in (0..dim).filter(|&q| q != r) {
            c0 += u0[q] * u0[q];
            terms[n] = (Offset::One(q), 2.0 * prefactor * u0[q]);
            terms[n + 1] = (Offset::Two(q), prefactor);
            n += 2;
        }
        terms[0] = (Offset::Zero, prefactor * c0);
        (terms, n)
    } else {
        terms[0] = (Offset::Zero, -prefactor * u0[r] * u0[s]);
        terms[1] = (Offset::One(r), -prefactor * u0[s]);
        terms[2] = (Offset::One(s), -prefactor * u0[r]);
        terms[3] = (Offset::Pair(r, s), -prefactor);
        (terms, 4)
    }
}

/// `(P·G)^k = Σ_j P_j b^{k−j}` over the quadratic terms of `P`.
#[inline]
fn product_coefficient(set: &MultiIndexSet, b: &[f64], i: usize, terms: &[(Offset, f64)]) -> f64 {
    let mut acc = 0.0;
    for &(off, c) in terms {
        let j = match off {
            Offset::Zero => i,
            Offset::One(a) => set.minus1(i, a),
            Offset::Two(a) => set.minus2(i, a),
            Offset::Pair(r, s) => match set.minus1(i, r) {
                NONE => NONE,
                j => set.minus1(j, s),
            },
        };
        if j != NONE {
            acc += c * b[j];
        }
    }
    acc
}

/// `r^γ` from `r²`, exact for the two physical exponents.
fn radial_power(r2: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else if gamma == -3.0 {
        1.0 / (r2 * r2.sqrt())
    } else {
        r2.powf(0.5 * gamma)
    }
}

/// Coefficient tensors of the independent components of `A(x − w)` about
/// `w = y_c`, ordered as [`kernel_components`].
pub fn taylor_coeffs_a(x: &Vec3, yc: &Vec3, spec: &CollisionKernelSpec, p: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut k = KernelCoefficients::new(*spec, p);
    k.compute(x, yc)?;
    let len = k.set().len();
    Ok(k.values().chunks(len).map(|c| c.to_vec()).collect())
}

/// Coefficients of `|u|^γ` alone, exposed for the product-route cross-check.
pub fn radial_power_coefficients(u0: &Vec3, gamma: f64, set: &MultiIndexSet) -> Vec<f64> {
    let r2 = norm2(u0);
    let mut b = vec![0.0; set.len()];
    b[0] = radial_power(r2, gamma);
    for i in 1..set.len() {
        let k = set.items()[i];
        let s = (0..set.dim()).find(|&s| k[s] > 0).unwrap_or(0);
        b[i] = recurrence_step(set, &b, i, s, u0, r2, gamma, set.dim());
    }
    b
}

/// All components by the product route only (no directional recurrence).
pub fn taylor_coeffs_a_product(x: &Vec3, yc: &Vec3, spec: &CollisionKernelSpec, p: usize) -> Vec<Vec<f64>> {
    let set = MultiIndexSet::new(spec.dim, p);
    let u0 = sub(yc, x);
    let b = radial_power_coefficients(&u0, spec.gamma, &set);
    kernel_components(spec.dim)
        .iter()
        .map(|&(r, s)| {
            let (terms, nterms) = quadratic_terms(spec.dim, r, s, &u0, spec.prefactor);
            (0..set.len()).map(|i| product_coefficient(&set, &b, i, &terms[..nterms])).collect()
        })
        .collect()
}
