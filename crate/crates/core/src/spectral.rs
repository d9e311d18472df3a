//! Fermi projectors `p = χ(h <= ε_F)` of finite-volume Hamiltonians.

use ndarray::{s, Array1, Array2};

use crate::error::{invalid, Error, Result};
use crate::linalg::{adjoint, eigh, max_abs, C64};
use crate::operator::{CovariantOperator, Locality};

/// Default minimal distance between `ε_F` and the spectrum.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectralProjector {
    projector: CovariantOperator,
    fermi_level: f64,
    gap: f64,
    eigenvalues: Array1<f64>,
    occupied: Array2<C64>,
}

impl SpectralProjector {
    pub fn projector(&self) -> &CovariantOperator {
        &self.projector
    }

    pub fn into_projector(self) -> CovariantOperator {
        self.projector
    }

    pub fn fermi_level(&self) -> f64 {
        self.fermi_level
    }

    /// Distance from `ε_F` to the nearest eigenvalue.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Orthonormal columns spanning `ran p`.
    pub fn occupied(&self) -> &Array2<C64> {
        &self.occupied
    }

    pub fn rank(&self) -> usize {
        self.occupied.ncols()
    }
}

pub fn fermi_projector(h: &CovariantOperator, fermi_level: f64) -> Result<SpectralProjector> {
    fermi_projector_with_threshold(h, fermi_level, DEFAULT_GAP_THRESHOLD)
}

/// Diagonalizes `h` and returns the projector onto eigenvalues below `ε_F`.
///
/// Fails with [`Error::GapClosed`] when an eigenvalue lies within `threshold`
/// of `ε_F`.
pub fn fermi_projector_with_threshold(
    h: &CovariantOperator,
    fermi_level: f64,
    threshold: f64,
) -> Result<SpectralProjector> {
    let scale = max_abs(h.view()).max(1.0);
    let asym = max_abs((h.matrix() - &adjoint(h.view())).view());
    if asym > 1e-12 * scale {
        return invalid(format!("Hamiltonian is not Hermitian (asymmetry {asym:.3e})"));
    }
    let (w, v) = eigh(h.view())?;
    let gap = w
        .iter()
        .map(|e| (e - fermi_level).abs())
        .fold(f64::INFINITY, f64::min);
    if gap < threshold {
        return Err(Error::GapClosed {
            fermi_level,
            gap,
            threshold,
        });
    }
    let k = w.iter().filter(|&&e| e < fermi_level).count();
    let occupied = v.slice(s![.., ..k]).to_owned();
    let p = occupied.dot(&adjoint(occupied.view()));
    // exact self-adjointness
    let p = (&p + &adjoint(p.view())).mapv(|z| z * 0.5);
    let locality = if k == 0 {
        Locality::Banded(0)
    } else {
        Locality::Localized
    };
    let mut projector = CovariantOperator::from_parts(
        p,
        h.geometry().clone(),
        h.internal_dim(),
        locality,
    );
    if let Some(prov) = h.provenance() {
        projector = projector.with_provenance(prov.clone());
    }
    Ok(SpectralProjector {
        projector,
        fermi_level,
        gap,
        eigenvalues: w,
        occupied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::linalg::frobenius_norm;
    use crate::model::{atomic_insulator, build_hamiltonian, chern_model};

    #[test]
    fn projector_is_idempotent_and_selfadjoint() {
        let g = Geometry::torus(&[6, 6]).unwrap();
        let h = build_hamiltonian(&chern_model(1.0), &g, None).unwrap();
        let sp = fermi_projector(&h, 0.0).unwrap();
        let p = sp.projector();
        assert_eq!(p.matrix(), &adjoint(p.view()));
        let p2 = p * p;
        assert!(frobenius_norm((p2.matrix() - p.matrix()).view()) < 1e-12);
        assert_eq!(sp.rank(), 36);
        // spectrum of the clean model is bounded away from zero by 1 at m = 1
        assert!(sp.gap() > 0.99, "gap {}", sp.gap());
    }

    #[test]
    fn atomic_projector_is_lower_band() {
        let g = Geometry::torus(&[3, 3]).unwrap();
        let h = build_hamiltonian(&atomic_insulator(2, 1.0), &g, None).unwrap();
        let p = fermi_projector(&h, 0.0).unwrap().into_projector();
        for x in 0..9 {
            let b = p.block(x, x);
            assert!((b[[1, 1]].re - 1.0).abs() < 1e-14);
            assert!(b[[0, 0]].norm() < 1e-14);
        }
    }

    #[test]
    fn gap_closing_is_reported() {
        let g = Geometry::torus(&[4, 4]).unwrap();
        let h = build_hamiltonian(&chern_model(2.0), &g, None).unwrap();
        // m = 2 closes the gap at k = (π, π), which lies on an even grid
        let err = fermi_projector(&h, 0.0).unwrap_err();
        assert!(matches!(err, Error::GapClosed { .. }), "{err}");
    }

    #[test]
    fn fermi_level_outside_spectrum() {
        let g = Geometry::torus(&[3, 3]).unwrap();
        let h = build_hamiltonian(&chern_model(1.0), &g, None).unwrap();
        let empty = fermi_projector(&h, -100.0).unwrap();
        assert_eq!(empty.rank(), 0);
        assert_eq!(empty.projector().matrix(), CovariantOperator::zeros(&g, 2).matrix());
        let full = fermi_projector(&h, 100.0).unwrap();
        let id = CovariantOperator::identity(&g, 2);
        assert!(frobenius_norm((full.projector().matrix() - id.matrix()).view()) < 1e-12);
    }
}
