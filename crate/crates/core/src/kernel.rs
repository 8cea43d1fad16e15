//! Collision kernel `A(z) = B |z|^γ (|z|² I − z ⊗ z)` and the Gaussian
//! mollifier `ψ_ε`.
//!
//! Velocities are stored as `[f64; 3]` in both dimensions. Two-dimensional
//! problems keep the third component at zero, which leaves every formula in
//! this module valid: the padded component contributes nothing to `|z|`,
//! to `A(z) y` for in-plane `y`, or to the Gaussian exponent.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A velocity-space vector. Two-dimensional problems keep `v[2] == 0`.
pub type Vec3 = [f64; 3];

/// Pairs closer than this are treated as coincident: `A(z) = 0`.
pub const Z_FLOOR: f64 = 1e-12;

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm2(a: &Vec3) -> f64 {
    dot(a, a)
}

/// Exponent, prefactor and dimension of the collision kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionKernelSpec {
    pub gamma: f64,
    pub prefactor: f64,
    pub dim: usize,
}

impl CollisionKernelSpec {
    pub fn new(gamma: f64, prefactor: f64, dim: usize) -> Result<Self> {
        let spec = Self {
            gamma,
            prefactor,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Maxwell molecules, `γ = 0`.
    pub fn maxwell(prefactor: f64, dim: usize) -> Result<Self> {
        Self::new(0.0, prefactor, dim)
    }

    /// Coulomb interaction, `γ = −3`.
    pub fn coulomb(prefactor: f64, dim: usize) -> Result<Self> {
        Self::new(-3.0, prefactor, dim)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prefactor > 0.0 && self.prefactor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel prefactor must be positive and finite, got {}",
                self.prefactor
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("kernel exponent must be finite".into()));
        }
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `B |z|^γ` given `|z|²`. Exact fast paths for the two exponents used in
    /// practice.
    #[inline]
    pub fn radial_factor(&self, r2: f64) -> f64 {
        if self.gamma == 0.0 {
            self.prefactor
        } else if self.gamma == -3.0 {
            self.prefactor / (r2 * r2.sqrt())
        } else {
            self.prefactor * r2.powf(0.5 * self.gamma)
        }
    }

    /// `A(z) y` without forming the matrix. Zero inside the floor.
    #[inline]
    pub fn apply(&self, z: &Vec3, y: &Vec3) -> Vec3 {
        let r2 = norm2(z);
        if r2 <= Z_FLOOR * Z_FLOOR {
            return [0.0; 3];
        }
        let s = self.radial_factor(r2);
        let zy = dot(z, y);
        [
            s * (r2 * y[0] - z[0] * zy),
            s * (r2 * y[1] - z[1] * zy),
            s * (r2 * y[2] - z[2] * zy),
        ]
    }
}

/// Symmetric `d × d` collision matrix, zero-padded to 3 × 3 in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMatrix {
    pub dim: usize,
    pub entries: [[f64; 3]; 3],
}

impl KernelMatrix {
    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.entries[r][s]
    }

    pub fn mul_vec(&self, y: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (r, row) in self.entries.iter().enumerate() {
            out[r] = dot(row, y);
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|row| row.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

fn check_finite(z: &Vec3) -> Result<()> {
    if z.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite vector {z:?}")))
    }
}

/// `A(z) = B|z|^γ(|z|² I − z ⊗ z)`; the zero matrix for `|z| ≤ Z_FLOOR`.
pub fn kernel_matrix(z: &Vec3, spec: &CollisionKernelSpec) -> Result<KernelMatrix> {
    check_finite(z)?;
    let d = spec.dim;
    let mut entries = [[0.0; 3]; 3];
    let r2 = norm2(z);
    if r2 > Z_FLOOR * Z_FLOOR {
        let s = spec.radial_factor(r2);
        for r in 0..d {
            for c in 0..d {
                let delta = if r == c { r2 } else { 0.0 };
                entries[r][c] = s * (delta - z[r] * z[c]);
            }
        }
    }
    Ok(KernelMatrix { dim: d, entries })
}

/// Isotropic Gaussian of variance `ε` in `d` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    eps: f64,
    dim: usize,
    norm: f64,
}

impl Mollifier {
    pub fn new(eps: f64, dim: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mollifier variance must be positive, got {eps}"
            )));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        let norm = (2.0 * PI * eps).powf(-0.5 * dim as f64);
        Ok(Self { eps, dim, norm })
    }

    /// `ε = c h^q`.
    pub fn from_rule(h: f64, coeff: f64, power: f64, dim: usize) -> Result<Self> {
        Self::new(coeff * h.powf(power), dim)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(2πε)^{−d/2}`, the peak value.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `ψ_ε` as a function of `|z|²`.
    #[inline]
    pub fn eval_r2(&self, r2: f64) -> f64 {
        self.norm * (-0.5 * r2 / self.eps).exp()
    }

    #[inline]
    pub fn eval(&self, z: &Vec3) -> f64 {
        self.eval_r2(norm2(z))
    }

    /// `∇ψ_ε(z) = −(z/ε) ψ_ε(z)`.
    #[inline]
    pub fn grad(&self, z: &Vec3) -> Vec3 {
        let f = -self.eval(z) / self.eps;
        [f * z[0], f * z[1], f * z[2]]
    }
}

pub fn mollifier_eval(z: &Vec3, m: &Mollifier) -> Result<f64> {
    check_finite(z)?;
    Ok(m.eval(z))
}

pub fn mollifier_grad(z: &Vec3, m: &Mollifier) -> Result<Vec3> {
    check_finite(z)?;
    Ok(m.grad(z))
}
