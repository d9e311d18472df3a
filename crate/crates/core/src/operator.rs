//! Covariant operators: finite-volume matrices on `ℂ^Q ⊗ ℓ²(sites)`.
//!
//! Row/column index is `site * Q + internal`. Block `(x, y)` is the `Q x Q`
//! matrix `a_{x,y}`; for a crossed-product element it equals the shifted
//! Fourier coefficient `Φ_{x-y}` at `x`.

use std::ops::{Add, Mul, Sub};

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{adjoint, C64, ONE, ZERO};

/// How far an operator reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Locality {
    /// Exactly zero beyond this Chebyshev hopping length (minimal image on a torus).
    Banded(usize),
    /// Dense but rapidly decaying (spectral projectors of gapped models).
    Localized,
}

/// Where an operator came from, kept for result records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CovariantOperator {
    matrix: Array2<C64>,
    geometry: Geometry,
    q: usize,
    locality: Locality,
    provenance: Option<Provenance>,
}

impl CovariantOperator {
    /// Wraps a matrix; the band width is measured from its exact zero pattern.
    pub fn new(matrix: Array2<C64>, geometry: Geometry, q: usize) -> Result<Self> {
        let expected = q * geometry.n_sites();
        if q == 0 || matrix.dim() != (expected, expected) {
            return invalid(format!(
                "matrix is {:?}, geometry with {} sites and Q = {q} needs {expected}x{expected}",
                matrix.dim(),
                geometry.n_sites()
            ));
        }
        let band = measure_band(&matrix, &geometry, q);
        Ok(CovariantOperator {
            matrix,
            geometry,
            q,
            locality: Locality::Banded(band),
            provenance: None,
        })
    }

    pub(crate) fn from_parts(
        matrix: Array2<C64>,
        geometry: Geometry,
        q: usize,
        locality: Locality,
    ) -> Self {
        debug_assert_eq!(matrix.nrows(), q * geometry.n_sites());
        CovariantOperator {
            matrix,
            geometry,
            q,
            locality,
            provenance: None,
        }
    }

    pub fn identity(geometry: &Geometry, q: usize) -> Self {
        let n = q * geometry.n_sites();
        Self::from_parts(Array2::from_diag_elem(n, ONE), geometry.clone(), q, Locality::Banded(0))
    }

    pub fn zeros(geometry: &Geometry, q: usize) -> Self {
        let n = q * geometry.n_sites();
        Self::from_parts(Array2::zeros((n, n)), geometry.clone(), q, Locality::Banded(0))
    }

    /// `π(u_v)`: `(u_v ψ)_x = ψ_{x-v}`, i.e. identity blocks at `(x, x - v)`.
    pub fn shift(geometry: &Geometry, q: usize, v: &[i64]) -> Result<Self> {
        if v.len() != geometry.d() {
            return invalid(format!("shift vector {v:?} does not match d = {}", geometry.d()));
        }
        let n = q * geometry.n_sites();
        let mut m = Array2::zeros((n, n));
        let back: Vec<i64> = v.iter().map(|c| -c).collect();
        for x in 0..geometry.n_sites() {
            if let Some(y) = geometry.translate(x, &back) {
                for k in 0..q {
                    m[[x * q + k, y * q + k]] = ONE;
                }
            }
        }
        Self::new(m, geometry.clone(), q)
    }

    /// Site-diagonal operator from per-site `Q x Q` blocks.
    pub fn site_diagonal(geometry: &Geometry, blocks: &[Array2<C64>]) -> Result<Self> {
        if blocks.len() != geometry.n_sites() {
            return invalid("one block per site required");
        }
        let q = blocks.first().map(|b| b.nrows()).unwrap_or(1);
        let n = q * geometry.n_sites();
        let mut m = Array2::zeros((n, n));
        for (x, b) in blocks.iter().enumerate() {
            if b.dim() != (q, q) {
                return invalid("site blocks must share one square shape");
            }
            m.slice_mut(s![x * q..(x + 1) * q, x * q..(x + 1) * q]).assign(b);
        }
        Self::new(m, geometry.clone(), q)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// Declares the operator dense-but-decaying, lifting the band checks.
    pub fn into_localized(mut self) -> Self {
        self.locality = Locality::Localized;
        self
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Internal dimension `Q`.
    pub fn internal_dim(&self) -> usize {
        self.q
    }

    pub fn n_sites(&self) -> usize {
        self.geometry.n_sites()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn locality(&self) -> Locality {
        self.locality
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Recorded band width, `None` for localized operators.
    pub fn band_width(&self) -> Option<usize> {
        match self.locality {
            Locality::Banded(b) => Some(b),
            Locality::Localized => None,
        }
    }

    /// `Q x Q` block `a_{x,y}`.
    pub fn block(&self, x: usize, y: usize) -> ArrayView2<'_, C64> {
        let q = self.q;
        self.matrix.slice(s![x * q..(x + 1) * q, y * q..(y + 1) * q])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(
            adjoint(self.matrix.view()),
            self.geometry.clone(),
            self.q,
            self.locality,
        )
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_parts(self.matrix.mapv(|z| z * c), self.geometry.clone(), self.q, self.locality)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.geometry != other.geometry || self.q != other.q {
            return Err(Error::InvalidArgument(format!(
                "operators live on different spaces: {} Q={} vs {} Q={}",
                self.geometry.label(),
                self.q,
                other.geometry.label(),
                other.q
            )));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.matrix.dot(&other.matrix);
        Ok(self.combine(other, m))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = &self.matrix + &other.matrix;
        Ok(self.combine(other, m))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = &self.matrix - &other.matrix;
        Ok(self.combine(other, m))
    }

    fn combine(&self, other: &Self, m: Array2<C64>) -> Self {
        let locality = match (self.locality, other.locality) {
            (Locality::Banded(_), Locality::Banded(_)) => {
                Locality::Banded(measure_band(&m, &self.geometry, self.q))
            }
            _ => Locality::Localized,
        };
        Self::from_parts(m, self.geometry.clone(), self.q, locality)
    }
}

impl Mul for &CovariantOperator {
    type Output = CovariantOperator;

    /// Panics on incompatible spaces; use [`CovariantOperator::try_mul`] otherwise.
    fn mul(self, rhs: Self) -> CovariantOperator {
        self.try_mul(rhs).expect("incompatible operators")
    }
}

impl Add for &CovariantOperator {
    type Output = CovariantOperator;

    fn add(self, rhs: Self) -> CovariantOperator {
        self.try_add(rhs).expect("incompatible operators")
    }
}

impl Sub for &CovariantOperator {
    type Output = CovariantOperator;

    fn sub(self, rhs: Self) -> CovariantOperator {
        self.try_sub(rhs).expect("incompatible operators")
    }
}

/// Largest Chebyshev hopping length carrying a nonzero entry.
fn measure_band(m: &Array2<C64>, geometry: &Geometry, q: usize) -> usize {
    let n_sites = geometry.n_sites();
    let d = geometry.d();
    let mut band = 0usize;
    for x in 0..n_sites {
        for y in 0..n_sites {
            let reach = (0..d)
                .map(|j| geometry.displacement_axis(x, y, j).unsigned_abs() as usize)
                .max()
                .unwrap_or(0);
            if reach <= band {
                continue;
            }
            let nonzero = m
                .slice(s![x * q..(x + 1) * q, y * q..(y + 1) * q])
                .iter()
                .any(|z| *z != ZERO);
            if nonzero {
                band = reach;
            }
        }
    }
    band
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_has_unit_band_and_wraps_on_torus() {
        let g = Geometry::torus(&[5]).unwrap();
        let u = CovariantOperator::shift(&g, 1, &[1]).unwrap();
        assert_eq!(u.band_width(), Some(1));
        // (u ψ)_0 = ψ_{-1} = ψ_4
        assert_eq!(u.matrix()[[0, 4]], ONE);
        let prod = &u * &u.adjoint();
        assert_eq!(prod.matrix(), CovariantOperator::identity(&g, 1).matrix());
    }

    #[test]
    fn shapes_are_validated() {
        let g = Geometry::torus(&[3]).unwrap();
        assert!(CovariantOperator::new(Array2::zeros((4, 4)), g.clone(), 1).is_err());
        let other = Geometry::torus(&[4]).unwrap();
        let a = CovariantOperator::identity(&g, 1);
        let b = CovariantOperator::identity(&other, 1);
        assert!(a.try_mul(&b).is_err());
    }

    #[test]
    fn product_band_is_measured() {
        let g = Geometry::torus(&[9, 9]).unwrap();
        let ux = CovariantOperator::shift(&g, 2, &[1, 0]).unwrap();
        let uy = CovariantOperator::shift(&g, 2, &[0, 2]).unwrap();
        assert_eq!((&ux * &uy).band_width(), Some(2));
        assert_eq!((&ux * &ux).band_width(), Some(2));
        assert_eq!(ux.into_localized().band_width(), None);
    }
}
