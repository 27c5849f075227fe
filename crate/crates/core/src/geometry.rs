//! Uniform planar array geometry.
//!
//! Elements are indexed horizontal-major: element `(mx, my)` lives at flat
//! index `mx * ny + my`. Every dictionary, channel matrix and pilot vector in
//! the crate uses this ordering.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::C64;

/// Horizontal (`theta`) and vertical (`phi`) angle components in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    theta: f64,
    phi: f64,
}

impl AnglePair {
    /// Both components must lie in `[-pi/2, pi/2)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        check_angle("theta", theta)?;
        check_angle("phi", phi)?;
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Horizontal spatial frequency `sin(theta)`.
    pub fn horizontal_freq(&self) -> f64 {
        self.theta.sin()
    }

    /// Vertical spatial frequency `cos(theta) sin(phi)`.
    pub fn vertical_freq(&self) -> f64 {
        self.theta.cos() * self.phi.sin()
    }

    /// Inverse of the spatial-frequency map, when the pair `(u, v)` is
    /// reachable by a physical direction (`|v| <= cos(theta)`).
    pub fn from_spatial_freqs(u: f64, v: f64) -> Option<Self> {
        if !(-1.0..1.0).contains(&u) {
            return None;
        }
        let theta = u.asin();
        let c = theta.cos();
        if c <= 0.0 {
            return None;
        }
        let s = v / c;
        if !(-1.0..1.0).contains(&s) {
            return None;
        }
        Self::new(theta, s.asin()).ok()
    }
}

fn check_angle(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (-FRAC_PI_2..FRAC_PI_2).contains(&value) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange { name, value })
    }
}

/// Element counts of a UPA along the horizontal and vertical axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrayDims {
    nx: usize,
    ny: usize,
}

impl ArrayDims {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::EmptyArray { nx, ny });
        }
        Ok(Self { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat element index of `(mx, my)`.
    pub fn index(&self, mx: usize, my: usize) -> usize {
        mx * self.ny + my
    }
}

/// Unit-norm array response of a half-wavelength UPA.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(DVector<C64>);

impl SteeringVector {
    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Steering vector `(1/sqrt(n)) * ramp_x(pi sin theta) ⊗ ramp_y(pi cos theta sin phi)`.
pub fn steering_vector(dims: ArrayDims, angles: AnglePair) -> SteeringVector {
    SteeringVector(steering_from_freqs(
        dims,
        angles.horizontal_freq(),
        angles.vertical_freq(),
    ))
}

/// Same response evaluated directly from spatial frequencies `(u, v)`.
pub(crate) fn steering_from_freqs(dims: ArrayDims, u: f64, v: f64) -> DVector<C64> {
    let scale = 1.0 / (dims.len() as f64).sqrt();
    let hx: Vec<C64> = (0..dims.nx)
        .map(|m| C64::from_polar(1.0, PI * m as f64 * u))
        .collect();
    let hy: Vec<C64> = (0..dims.ny)
        .map(|m| C64::from_polar(1.0, PI * m as f64 * v))
        .collect();
    DVector::from_fn(dims.len(), |i, _| {
        let (mx, my) = (i / dims.ny, i % dims.ny);
        hx[mx] * hy[my] * scale
    })
}
