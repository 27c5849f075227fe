//! Virtual angular-domain dictionaries.
//!
//! `A = sqrt(n/G) * (F_Gx)[..nx, :] ⊗ (F_Gy)[..ny, :]` where `F_G` is the
//! unitary `G`-point DFT matrix, `[F_G]_{m,g} = exp(-j 2 pi m g / G) / sqrt(G)`.
//! Column `(a, b)` (flat index `a * G_y + b`) is the steering vector with
//! spatial frequencies `u = -2a/G_x`, `v = -2b/G_y`, wrapped into `[-1, 1)`,
//! scaled by `n / G`.
//!
//! A spatial row channel `h^T` is represented as `h^T = c^T A^H`, i.e.
//! `h = conj(A) c`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{steering_from_freqs, AnglePair, ArrayDims};
use crate::C64;

/// Spatial frequencies `(sin theta, cos theta sin phi)` of one dictionary atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub u: f64,
    pub v: f64,
}

impl GridPoint {
    /// Physical direction of the atom, when one exists.
    pub fn angles(&self) -> Option<AnglePair> {
        AnglePair::from_spatial_freqs(self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DMatrix<C64>,
    dims: ArrayDims,
    grid_dims: (usize, usize),
    grid: Vec<GridPoint>,
}

impl Dictionary {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dims(&self) -> ArrayDims {
        self.dims
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        self.grid_dims
    }

    /// Grid samples in column order.
    pub fn grid(&self) -> &[GridPoint] {
        &self.grid
    }

    /// Number of atoms `G`.
    pub fn atoms(&self) -> usize {
        self.matrix.ncols()
    }

    /// Directions of every atom that maps to a physical angle pair inside
    /// `[-sector, sector)` on both components.
    pub fn grid_angles_within(&self, sector: f64) -> Vec<AnglePair> {
        self.grid
            .iter()
            .filter_map(GridPoint::angles)
            .filter(|a| {
                (-sector..sector).contains(&a.theta()) && (-sector..sector).contains(&a.phi())
            })
            .collect()
    }
}

/// Wrap a spatial frequency into `[-1, 1)`.
fn wrap_unit(x: f64) -> f64 {
    let y = (x + 1.0).rem_euclid(2.0) - 1.0;
    if y >= 1.0 {
        -1.0
    } else {
        y
    }
}

/// Oversampled angular dictionary for `dims` on a `G_x x G_y` grid.
pub fn redundant_dictionary(dims: ArrayDims, grid: (usize, usize)) -> Result<Dictionary> {
    let (gx, gy) = grid;
    if gx < dims.nx() || gy < dims.ny() {
        return Err(Error::GridTooSmall {
            gx,
            gy,
            nx: dims.nx(),
            ny: dims.ny(),
        });
    }
    let n = dims.len();
    let g = gx * gy;
    let scale = (n as f64 / g as f64).sqrt();
    let dft = |m: usize, col: usize, size: usize| {
        C64::from_polar(
            1.0 / (size as f64).sqrt(),
            -2.0 * PI * ((m * col) % size) as f64 / size as f64,
        )
    };
    let fx = DMatrix::from_fn(dims.nx(), gx, |m, a| dft(m, a, gx));
    let fy = DMatrix::from_fn(dims.ny(), gy, |m, b| dft(m, b, gy));
    let matrix = fx.kronecker(&fy) * C64::new(scale, 0.0);
    let points = (0..gx)
        .flat_map(|a| {
            (0..gy).map(move |b| GridPoint {
                u: wrap_unit(-2.0 * a as f64 / gx as f64),
                v: wrap_unit(-2.0 * b as f64 / gy as f64),
            })
        })
        .collect();
    Ok(Dictionary {
        matrix,
        dims,
        grid_dims: grid,
        grid: points,
    })
}

/// `h = conj(A) c`, the spatial channel whose row form is `c^T A^H`.
pub fn reconstruct_spatial(coeffs: &DVector<C64>, dict: &Dictionary) -> Result<DVector<C64>> {
    if coeffs.len() != dict.atoms() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a dictionary with {} atoms",
            coeffs.len(),
            dict.atoms()
        )));
    }
    Ok(dict.matrix.conjugate() * coeffs)
}

/// Block-diagonal dictionary `Psi = diag(conj(A_d), conj(A_r))` so that
/// `h_eff = Psi h_effa`.
#[derive(Debug, Clone)]
pub struct EffectiveDictionary {
    bs: Dictionary,
    irs: Dictionary,
}

impl EffectiveDictionary {
    pub fn bs(&self) -> &Dictionary {
        &self.bs
    }

    pub fn irs(&self) -> &Dictionary {
        &self.irs
    }

    /// `(M + N, G_M + G_N)`.
    pub fn shape(&self) -> (usize, usize) {
        (
            self.bs.dims.len() + self.irs.dims.len(),
            self.bs.atoms() + self.irs.atoms(),
        )
    }

    /// Dense `Psi`.
    pub fn psi(&self) -> DMatrix<C64> {
        let (rows, cols) = self.shape();
        let (m, gm) = (self.bs.dims.len(), self.bs.atoms());
        let mut psi = DMatrix::zeros(rows, cols);
        psi.view_mut((0, 0), (m, gm))
            .copy_from(&self.bs.matrix.conjugate());
        psi.view_mut((m, gm), (rows - m, cols - gm))
            .copy_from(&self.irs.matrix.conjugate());
        psi
    }

    /// `Phi Psi` for an `N_P x (M + N)` matrix `Phi`, computed blockwise.
    pub fn sense(&self, phi: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let (rows, cols) = self.shape();
        if phi.ncols() != rows {
            return Err(Error::DimensionMismatch(format!(
                "sensing matrix has {} columns, dictionary expects {rows}",
                phi.ncols()
            )));
        }
        let (m, gm) = (self.bs.dims.len(), self.bs.atoms());
        let np = phi.nrows();
        let mut out = DMatrix::zeros(np, cols);
        let left = phi.columns(0, m) * self.bs.matrix.conjugate();
        let right = phi.columns(m, rows - m) * self.irs.matrix.conjugate();
        out.columns_mut(0, gm).copy_from(&left);
        out.columns_mut(gm, cols - gm).copy_from(&right);
        Ok(out)
    }

    /// Split an effective angular vector and map both halves to space.
    pub fn reconstruct(&self, coeffs: &DVector<C64>) -> Result<(DVector<C64>, DVector<C64>)> {
        let gm = self.bs.atoms();
        if coeffs.len() != gm + self.irs.atoms() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} atoms",
                coeffs.len(),
                gm + self.irs.atoms()
            )));
        }
        let hd = reconstruct_spatial(&coeffs.rows(0, gm).into_owned(), &self.bs)?;
        let hr = reconstruct_spatial(&coeffs.rows(gm, self.irs.atoms()).into_owned(), &self.irs)?;
        Ok((hd, hr))
    }
}

/// Combine the BS dictionary `A_d` and IRS dictionary `A_r`.
pub fn effective_dictionary(bs: Dictionary, irs: Dictionary) -> EffectiveDictionary {
    EffectiveDictionary { bs, irs }
}

/// Steering vector at a grid point (unit norm), for building on-grid channels.
pub fn atom_steering(dims: ArrayDims, p: GridPoint) -> DVector<C64> {
    steering_from_freqs(dims, p.u, p.v)
}
