//! Momentum-space Chern number of a clean two-dimensional model.
//!
//! Link-variable (lattice field strength) method on an `N x N` grid of the
//! Brillouin zone. The result is an exact integer once the grid resolves the
//! curvature. The sign follows the local formula: since `∂_j` acts on Bloch
//! functions as `-∂/∂k_j`, the local formula equals minus the usual plaquette
//! sum `(1/2π) Σ arg(U_1 U_2 U_1* U_2*)`.

use std::f64::consts::PI;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{eigh, C64};
use crate::model::HoppingModel;
use crate::spectral::DEFAULT_GAP_THRESHOLD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub chern: i64,
    /// Unrounded plaquette sum (already in the local-formula sign).
    pub raw: f64,
    /// Smallest direct gap of the band to its neighbours over the grid.
    pub min_gap: f64,
    pub grid: usize,
    pub band: usize,
}

/// Chern number of band `band` (0-based, ascending energy).
pub fn momentum_oracle_chern(model: &HoppingModel, band: usize, grid: usize) -> Result<OracleResult> {
    if model.d() != 2 {
        return invalid(format!("the oracle handles d = 2 only, got d = {}", model.d()));
    }
    if !model.is_clean() {
        return invalid("the oracle needs a clean (translation-invariant) model");
    }
    let q = model.internal_dim();
    if band >= q {
        return invalid(format!("band {band} out of range for Q = {q}"));
    }
    if grid < 2 {
        return invalid("grid must have at least 2 points per axis");
    }
    let n = grid;
    let mut states: Vec<Array1<C64>> = Vec::with_capacity(n * n);
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let k = [2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64];
            let (w, v) = eigh(model.bloch(&k).view())?;
            if band > 0 {
                min_gap = min_gap.min(w[band] - w[band - 1]);
            }
            if band + 1 < q {
                min_gap = min_gap.min(w[band + 1] - w[band]);
            }
            states.push(v.column(band).to_owned());
        }
    }
    if min_gap < DEFAULT_GAP_THRESHOLD {
        return Err(Error::GapClosed {
            fermi_level: f64::NAN,
            gap: min_gap,
            threshold: DEFAULT_GAP_THRESHOLD,
        });
    }
    let at = |i: usize, j: usize| &states[(i % n) * n + (j % n)];
    let link = |a: &Array1<C64>, b: &Array1<C64>| -> Result<C64> {
        let z: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        if z.norm() < 1e-12 {
            return Err(Error::NumericalInconsistency {
                what: "vanishing link variable; refine the grid".into(),
                residual: z.norm(),
                tolerance: 1e-12,
            });
        }
        Ok(z / z.norm())
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u1 = link(at(i, j), at(i + 1, j))?;
            let u2 = link(at(i + 1, j), at(i + 1, j + 1))?;
            let u3 = link(at(i, j + 1), at(i + 1, j + 1))?;
            let u4 = link(at(i, j), at(i, j + 1))?;
            total += (u1 * u2 * u3.conj() * u4.conj()).arg();
        }
    }
    let raw = -total / (2.0 * PI);
    Ok(OracleResult {
        chern: raw.round() as i64,
        raw,
        min_gap,
        grid,
        band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{atomic_insulator, chern_model};

    #[test]
    fn atomic_model_is_trivial() {
        let r = momentum_oracle_chern(&atomic_insulator(2, 1.0), 0, 24).unwrap();
        assert_eq!(r.chern, 0);
        assert!(r.raw.abs() < 1e-10);
    }

    #[test]
    fn chern_model_phases_and_grid_stability() {
        for n in [24usize, 48] {
            let r = momentum_oracle_chern(&chern_model(1.0), 0, n).unwrap();
            assert_eq!(r.chern, -1);
            assert!((r.raw - r.chern as f64).abs() < 1e-9);
            let r = momentum_oracle_chern(&chern_model(-1.0), 0, n).unwrap();
            assert_eq!(r.chern, 1);
            assert_eq!(momentum_oracle_chern(&chern_model(3.0), 0, n).unwrap().chern, 0);
        }
        // bands carry opposite Chern numbers
        assert_eq!(momentum_oracle_chern(&chern_model(1.0), 1, 24).unwrap().chern, 1);
    }

    #[test]
    fn transition_point_is_gapless() {
        let err = momentum_oracle_chern(&chern_model(2.0), 0, 24).unwrap_err();
        assert!(matches!(err, Error::GapClosed { .. }));
        let err = momentum_oracle_chern(&chern_model(0.0), 0, 24).unwrap_err();
        assert!(matches!(err, Error::GapClosed { .. }));
    }

    #[test]
    fn disordered_or_wrong_dimension_rejected() {
        let dis = chern_model(1.0).with_onsite_disorder(0.5).unwrap();
        assert!(momentum_oracle_chern(&dis, 0, 24).is_err());
        assert!(momentum_oracle_chern(&atomic_insulator(3, 1.0), 0, 24).is_err());
        assert!(momentum_oracle_chern(&chern_model(1.0), 2, 24).is_err());
    }
}
