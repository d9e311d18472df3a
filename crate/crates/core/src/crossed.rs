//! Calculus on the crossed product: Fourier coefficients, Cesàro means,
//! the derivations `∂_j`, the trace per volume `𝒯`, and locality profiles.
//!
//! On a torus an operator with blocks `a_{x,y}` corresponds to the family
//! `Φ_q(ξ_x ω) = a_{x, x-q}` with `q` reduced to the minimal image. The
//! derivation multiplies block `(x, y)` by `i (x - y)_j`, which is the
//! generator of the dual `U(1)^d` action.

use std::collections::BTreeMap;
use std::io::Write;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{eigvalsh, trace, C64, ZERO};
use crate::operator::{CovariantOperator, Locality};

/// Fourier coefficients `q ↦ (Φ_q(ξ_x ω))_x` of a covariant operator.
#[derive(Debug, Clone)]
pub struct FourierFamily {
    geometry: Geometry,
    q: usize,
    coefficients: BTreeMap<Vec<i64>, Vec<Array2<C64>>>,
}

impl FourierFamily {
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn internal_dim(&self) -> usize {
        self.q
    }

    /// Hopping vectors carrying at least one nonzero block.
    pub fn support(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.coefficients.keys()
    }

    /// Per-site blocks of the coefficient at `q`, if present.
    pub fn coefficient(&self, q: &[i64]) -> Option<&[Array2<C64>]> {
        self.coefficients.get(q).map(|v| v.as_slice())
    }
}

fn require_torus(g: &Geometry, what: &str) -> Result<()> {
    if g.is_torus() {
        Ok(())
    } else {
        Err(Error::UnsupportedGeometry(format!("{what} needs a torus, got {}", g.label())))
    }
}

pub fn fourier_decompose(a: &CovariantOperator) -> Result<FourierFamily> {
    let g = a.geometry();
    require_torus(g, "Fourier decomposition")?;
    let n = g.n_sites();
    let q = a.internal_dim();
    let mut coefficients: BTreeMap<Vec<i64>, Vec<Array2<C64>>> = BTreeMap::new();
    for x in 0..n {
        for y in 0..n {
            let blk = a.block(x, y);
            if blk.iter().all(|z| *z == ZERO) {
                continue;
            }
            let v = g.displacement(x, y);
            let entry = coefficients
                .entry(v)
                .or_insert_with(|| vec![Array2::zeros((q, q)); n]);
            entry[x].assign(&blk);
        }
    }
    Ok(FourierFamily {
        geometry: g.clone(),
        q,
        coefficients,
    })
}

pub fn fourier_assemble(family: &FourierFamily) -> Result<CovariantOperator> {
    let g = &family.geometry;
    let q = family.q;
    let n = g.n_sites();
    let mut m = Array2::zeros((q * n, q * n));
    for (v, blocks) in &family.coefficients {
        let back: Vec<i64> = v.iter().map(|c| -c).collect();
        for (x, b) in blocks.iter().enumerate() {
            let y = g.translate(x, &back).expect("torus wraps");
            m.slice_mut(s![x * q..(x + 1) * q, y * q..(y + 1) * q]).assign(b);
        }
    }
    CovariantOperator::new(m, g.clone(), q)
}

/// Fejér weight `Π_j (1 - |q_j| / (N + 1))`, zero outside `|q_j| <= N`.
pub fn cesaro_weight(v: &[i64], order: usize) -> f64 {
    v.iter()
        .map(|c| {
            let a = c.unsigned_abs() as usize;
            if a > order {
                0.0
            } else {
                1.0 - a as f64 / (order as f64 + 1.0)
            }
        })
        .product()
}

/// Cesàro mean of order `N` of the Fourier series of `a`.
pub fn cesaro_sum(a: &CovariantOperator, order: usize) -> Result<CovariantOperator> {
    let g = a.geometry();
    require_torus(g, "Cesàro summation")?;
    let n = g.n_sites();
    let q = a.internal_dim();
    let mut m = a.matrix().clone();
    for x in 0..n {
        for y in 0..n {
            let w = cesaro_weight(&g.displacement(x, y), order);
            if w != 1.0 {
                m.slice_mut(s![x * q..(x + 1) * q, y * q..(y + 1) * q])
                    .mapv_inplace(|z| z * w);
            }
        }
    }
    CovariantOperator::new(m, g.clone(), q)
}

/// `∂_j a` for axis `j` (0-based).
///
/// Banded operators must satisfy `2 · band < L_j` so that no hopping is
/// ambiguous modulo `L_j`. Localized operators are accepted with the minimal
/// image convention, which truncates tails of order `α^{L_j/2}`.
pub fn derivation(a: &CovariantOperator, j: usize) -> Result<CovariantOperator> {
    let g = a.geometry();
    require_torus(g, "the derivation")?;
    if j >= g.d() {
        return invalid(format!("axis {j} out of range for d = {}", g.d()));
    }
    let l = g.lengths().expect("torus")[j];
    if let Locality::Banded(b) = a.locality() {
        if 2 * b >= l {
            return invalid(format!(
                "band width {b} is not below L/2 = {} on axis {j}",
                l as f64 / 2.0
            ));
        }
    }
    let n = g.n_sites();
    let q = a.internal_dim();
    let mut m = a.matrix().clone();
    for x in 0..n {
        for y in 0..n {
            let dj = g.displacement_axis(x, y, j);
            let f = C64::new(0.0, dj as f64);
            m.slice_mut(s![x * q..(x + 1) * q, y * q..(y + 1) * q])
                .mapv_inplace(|z| z * f);
        }
    }
    Ok(CovariantOperator::from_parts(m, g.clone(), q, a.locality()))
}

/// `𝒯(a) = (1/|V|) Σ_x tr a_{x,x}`.
pub fn trace_t(a: &CovariantOperator) -> Result<C64> {
    require_torus(a.geometry(), "the trace per volume")?;
    Ok(trace(a.view()) / a.n_sites() as f64)
}

/// Mean of `𝒯` over an ensemble of realizations.
pub fn trace_t_ensemble(ops: &[CovariantOperator]) -> Result<C64> {
    if ops.is_empty() {
        return invalid("empty ensemble");
    }
    let mut acc = ZERO;
    for a in ops {
        acc += trace_t(a)?;
    }
    Ok(acc / ops.len() as f64)
}

/// Sup of block norms per hopping length and a fitted `C α^ℓ` envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityProfile {
    /// `(ℓ, sup_{x, |x-y|_∞ = ℓ} ‖a_{x,y}‖)`.
    pub rows: Vec<(usize, f64)>,
    pub rate: Option<f64>,
    pub prefactor: Option<f64>,
}

impl LocalityProfile {
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "hopping_length,sup_norm")?;
        for (l, v) in &self.rows {
            writeln!(w, "{l},{v}")?;
        }
        Ok(())
    }
}

fn block_norm(b: &Array2<C64>) -> Result<f64> {
    match b.nrows() {
        1 => Ok(b[[0, 0]].norm()),
        2 => {
            // largest eigenvalue of the 2x2 Gram matrix in closed form
            let g00 = b[[0, 0]].norm_sqr() + b[[1, 0]].norm_sqr();
            let g11 = b[[0, 1]].norm_sqr() + b[[1, 1]].norm_sqr();
            let g01 = b[[0, 0]].conj() * b[[0, 1]] + b[[1, 0]].conj() * b[[1, 1]];
            let mean = 0.5 * (g00 + g11);
            let half = 0.5 * (g00 - g11);
            Ok((mean + (half * half + g01.norm_sqr()).sqrt()).max(0.0).sqrt())
        }
        _ => {
            let gram = b.t().mapv(|z| z.conj()).dot(b);
            let w = eigvalsh(gram.view())?;
            Ok(w[w.len() - 1].max(0.0).sqrt())
        }
    }
}

/// Profile over Chebyshev hopping lengths (minimal image on a torus).
///
/// The fit uses every length with a strictly positive norm, so an operator of
/// finite band is fitted over its band only.
pub fn locality_profile(a: &CovariantOperator) -> Result<LocalityProfile> {
    let g = a.geometry();
    let n = g.n_sites();
    let q = a.internal_dim();
    let mut sup: BTreeMap<usize, f64> = BTreeMap::new();
    for x in 0..n {
        for y in 0..n {
            let l = g
                .displacement(x, y)
                .iter()
                .map(|c| c.unsigned_abs() as usize)
                .max()
                .unwrap_or(0);
            let b = a.block(x, y).to_owned();
            let nrm = if b.iter().all(|z| *z == ZERO) {
                0.0
            } else {
                block_norm(&b)?
            };
            debug_assert_eq!(b.nrows(), q);
            let e = sup.entry(l).or_insert(0.0);
            *e = e.max(nrm);
        }
    }
    let rows: Vec<(usize, f64)> = sup.into_iter().collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(l, v)| (*l as f64, v.ln()))
        .collect();
    let (rate, prefactor) = match linear_fit(&pts) {
        Some((slope, icpt)) => (Some(slope.exp()), Some(icpt.exp())),
        None => (None, None),
    };
    Ok(LocalityProfile {
        rows,
        rate,
        prefactor,
    })
}

/// Least-squares `(slope, intercept)`; `None` with fewer than two distinct abscissae.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_norm, ONE};
    use crate::model::{build_hamiltonian, chern_model, sample_disorder};
    use crate::spectral::fermi_projector;

    fn torus() -> Geometry {
        Geometry::torus(&[5, 6]).unwrap()
    }

    #[test]
    fn fourier_roundtrip_of_hamiltonian() {
        let g = torus();
        let model = chern_model(1.0).with_onsite_disorder(1.0).unwrap();
        let h = build_hamiltonian(&model, &g, Some(&sample_disorder(&g, 1))).unwrap();
        let fam = fourier_decompose(&h).unwrap();
        assert_eq!(fam.support().count(), 5);
        let back = fourier_assemble(&fam).unwrap();
        assert_eq!(back.matrix(), h.matrix());
    }

    #[test]
    fn derivation_of_shift_is_multiplication() {
        let g = torus();
        let u = CovariantOperator::shift(&g, 1, &[1, -2]).unwrap();
        let d0 = derivation(&u, 0).unwrap();
        let d1 = derivation(&u, 1).unwrap();
        assert_eq!(d0.matrix(), u.scale(C64::new(0.0, 1.0)).matrix());
        assert_eq!(d1.matrix(), u.scale(C64::new(0.0, -2.0)).matrix());
    }

    #[test]
    fn derivation_rejects_wide_bands_and_boxes() {
        let g = Geometry::torus(&[4, 9]).unwrap();
        let u = CovariantOperator::shift(&g, 1, &[2, 0]).unwrap();
        assert!(derivation(&u, 0).is_err());
        assert!(derivation(&u, 1).is_ok());
        assert!(derivation(&u, 2).is_err());
        let b = Geometry::open_box(2, 1).unwrap();
        assert!(derivation(&CovariantOperator::identity(&b, 1), 0).is_err());
    }

    #[test]
    fn trace_of_identity_is_q() {
        let g = torus();
        let id = CovariantOperator::identity(&g, 3);
        assert_eq!(trace_t(&id).unwrap(), ONE * 3.0);
        assert!(trace_t(&CovariantOperator::identity(&Geometry::open_box(1, 2).unwrap(), 1)).is_err());
    }

    #[test]
    fn cesaro_is_identity_on_band_and_fejer_outside() {
        let g = Geometry::torus(&[9]).unwrap();
        let u = CovariantOperator::shift(&g, 1, &[2]).unwrap();
        let c = cesaro_sum(&u, 3).unwrap();
        assert_eq!(c.matrix(), u.scale(ONE * 0.5).matrix());
        assert_eq!(cesaro_sum(&u, 1).unwrap().matrix(), CovariantOperator::zeros(&g, 1).matrix());
        let id = CovariantOperator::identity(&g, 1);
        assert_eq!(cesaro_sum(&id, 0).unwrap().matrix(), id.matrix());
    }

    #[test]
    fn cesaro_converges_for_projector() {
        let g = Geometry::torus(&[12, 12]).unwrap();
        let h = build_hamiltonian(&chern_model(1.0), &g, None).unwrap();
        let p = fermi_projector(&h, 0.0).unwrap().into_projector();
        let mut prev = f64::INFINITY;
        for n in [1usize, 2, 3, 4, 6] {
            let c = cesaro_sum(&p, n).unwrap();
            let err = frobenius_norm((c.matrix() - p.matrix()).view());
            assert!(err < prev, "N = {n}: {err} vs {prev}");
            prev = err;
        }
    }

    #[test]
    fn profile_of_banded_operator_is_exactly_zero_beyond_band() {
        let g = Geometry::torus(&[9, 9]).unwrap();
        let h = build_hamiltonian(&chern_model(1.0), &g, None).unwrap();
        let prof = locality_profile(&h).unwrap();
        for (l, v) in &prof.rows {
            if *l > 1 {
                assert_eq!(*v, 0.0);
            } else {
                assert!(*v > 0.0);
            }
        }
        assert!(prof.rate.is_some());
        let mut buf = Vec::new();
        prof.to_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("hopping_length,sup_norm\n0,"));
    }

    #[test]
    fn block_norm_matches_eigen_route() {
        let b = ndarray::array![[C64::new(1.0, 2.0), C64::new(-0.5, 0.0)], [C64::new(0.3, -1.0), C64::new(0.0, 0.7)]];
        let direct = block_norm(&b).unwrap();
        let via = crate::linalg::operator_norm(b.view()).unwrap();
        assert!((direct - via).abs() < 1e-12);
    }

    #[test]
    fn fit_of_exact_exponential() {
        let pts: Vec<(f64, f64)> = (0..6).map(|l| (l as f64, (2.0f64).ln() + l as f64 * (0.3f64).ln())).collect();
        let (s, c) = linear_fit(&pts).unwrap();
        assert!((s.exp() - 0.3).abs() < 1e-12);
        assert!((c.exp() - 2.0).abs() < 1e-12);
        assert!(linear_fit(&pts[..1]).is_none());
    }
}
