//! Closed-form BKW solutions for Maxwell molecules and the non-analytic
//! initial data of the Coulomb test problems.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::{norm2, Vec3};

/// Parameters of the BKW family `K(t) = 1 − C exp(−2B(d−1)t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkwParams {
    pub dim: usize,
    /// Kernel prefactor `B`; must match the collision kernel.
    pub prefactor: f64,
    /// Integration constant `C`.
    pub c: f64,
}

impl BkwParams {
    pub fn new(dim: usize, prefactor: f64, c: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "BKW dimension must be 2 or 3, got {dim}"
            )));
        }
        if !(prefactor > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "BKW needs B > 0 and finite C, got B = {prefactor}, C = {c}"
            )));
        }
        Ok(Self { dim, prefactor, c })
    }

    /// `d = 2`, `B = 1/16`, `C = 1/2`, so `K = 1 − exp(−t/8)/2`.
    pub fn default_2d() -> Self {
        Self {
            dim: 2,
            prefactor: 1.0 / 16.0,
            c: 0.5,
        }
    }

    /// `d = 3`, `B = 1/24`, `C = 1`, so `K = 1 − exp(−t/6)`.
    pub fn default_3d() -> Self {
        Self {
            dim: 3,
            prefactor: 1.0 / 24.0,
            c: 1.0,
        }
    }

    /// Smallest `K` for which the solution stays nonnegative: `d/(d+2)`.
    pub fn k_min(&self) -> f64 {
        let d = self.dim as f64;
        d / (d + 2.0)
    }

    pub fn k(&self, t: f64) -> f64 {
        1.0 - self.c * (-2.0 * self.prefactor * (self.dim as f64 - 1.0) * t).exp()
    }

    /// `K'(t) = 2B(d−1)(1 − K)`.
    pub fn k_rate(&self, t: f64) -> f64 {
        2.0 * self.prefactor * (self.dim as f64 - 1.0) * (1.0 - self.k(t))
    }

    /// The solution frozen at time `t`.
    pub fn at(&self, t: f64) -> Result<BkwProfile> {
        let k = self.k(t);
        let k_min = self.k_min();
        if !(k >= k_min - 1e-14 && k <= 1.0) {
            return Err(Error::BkwDomain { t, k, k_min });
        }
        let d = self.dim as f64;
        Ok(BkwProfile {
            dim: self.dim,
            k,
            p: ((d + 2.0) * k - d) / (2.0 * k),
            q: (1.0 - k) / (2.0 * k * k),
            norm: (2.0 * PI * k).powf(-0.5 * d),
        })
    }
}

/// `f(t, ·) = (2πK)^{−d/2} exp(−|v|²/2K)(P + Q|v|²)` at a fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkwProfile {
    pub dim: usize,
    pub k: f64,
    pub p: f64,
    pub q: f64,
    norm: f64,
}

impl BkwProfile {
    pub fn eval(&self, v: &Vec3) -> f64 {
        let r2 = norm2(v);
        (self.norm * (-0.5 * r2 / self.k).exp() * (self.p + self.q * r2)).max(0.0)
    }
}

pub fn bkw_eval(params: &BkwParams, t: f64, v: &Vec3) -> Result<f64> {
    Ok(params.at(t)?.eval(v))
}

/// Analytic `∂f/∂t`:
/// `(2πK)^{−d/2} e^{−v²/2K} [d(d+2)K² − 2(d+2)Kv² + v⁴] (1−K)/(4K⁴) K'`.
pub fn bkw_time_derivative(params: &BkwParams, t: f64, v: &Vec3) -> Result<f64> {
    let prof = params.at(t)?;
    let d = params.dim as f64;
    let k = prof.k;
    let r2 = norm2(v);
    let poly = d * (d + 2.0) * k * k - 2.0 * (d + 2.0) * k * r2 + r2 * r2;
    Ok(prof.norm * (-0.5 * r2 / k).exp() * poly * (1.0 - k) / (4.0 * k.powi(4)) * params.k_rate(t))
}

/// Maxwellian `M_{ρ,u,T}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maxwellian {
    pub dim: usize,
    pub density: f64,
    pub mean: Vec3,
    pub temperature: f64,
}

impl Maxwellian {
    pub fn standard(dim: usize) -> Self {
        Self {
            dim,
            density: 1.0,
            mean: [0.0; 3],
            temperature: 1.0,
        }
    }

    pub fn log_eval(&self, v: &Vec3) -> f64 {
        let d = self.dim as f64;
        let mut r2 = 0.0;
        for s in 0..self.dim {
            let x = v[s] - self.mean[s];
            r2 += x * x;
        }
        self.density.ln() - 0.5 * d * (2.0 * PI * self.temperature).ln() - 0.5 * r2 / self.temperature
    }

    pub fn eval(&self, v: &Vec3) -> f64 {
        self.log_eval(v).exp()
    }
}

/// Two unit-temperature bumps of mass 1/2 centred at `u₁` and `u₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiMaxwellian {
    pub u1: [f64; 2],
    pub u2: [f64; 2],
}

impl Default for BiMaxwellian {
    fn default() -> Self {
        Self {
            u1: [-2.0, 1.0],
            u2: [0.0, -1.0],
        }
    }
}

impl BiMaxwellian {
    pub fn eval(&self, v: &Vec3) -> f64 {
        let bump = |u: &[f64; 2]| {
            let dx = v[0] - u[0];
            let dy = v[1] - u[1];
            (-0.5 * (dx * dx + dy * dy)).exp()
        };
        (bump(&self.u1) + bump(&self.u2)) / (4.0 * PI)
    }
}

pub fn bimaxwellian_init(v: &Vec3) -> f64 {
    BiMaxwellian::default().eval(v)
}

/// Radial shell `S^{−2} exp(−S(|v| − σ)²/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosenbluthShell {
    pub sigma: f64,
    pub s: f64,
}

impl Default for RosenbluthShell {
    fn default() -> Self {
        Self { sigma: 0.3, s: 10.0 }
    }
}

impl RosenbluthShell {
    pub fn eval(&self, v: &Vec3) -> f64 {
        let r = norm2(v).sqrt();
        let x = (r - self.sigma) / self.sigma;
        (-self.s * x * x).exp() / (self.s * self.s)
    }
}

pub fn rosenbluth_init(v: &Vec3) -> f64 {
    RosenbluthShell::default().eval(v)
}
