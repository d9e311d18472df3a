//! Covariant tight-binding models `(Hψ)_x = Σ_q (1 + λ_q(ξ_x ω)) A_q ψ_{x-q}`.
//!
//! The disorder functions are realized as `λ_0(ξ_x ω) = W_0 ω_x` on site and
//! `λ_q(ξ_x ω) = W_q (ω_x + ω_{x-q}) / 2` on the bond for `q ≠ 0`, which keeps
//! the Hamiltonian self-adjoint for every realization.

use std::collections::BTreeMap;

use ndarray::{array, s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{adjoint, max_abs, C64, I, ONE, ZERO};
use crate::operator::{CovariantOperator, Provenance};

/// Tolerance for accepting user-supplied matrices as Hermitian partners.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingModel {
    name: String,
    d: usize,
    q: usize,
    hoppings: BTreeMap<Vec<i64>, Array2<C64>>,
    couplings: BTreeMap<Vec<i64>, f64>,
}

impl HoppingModel {
    /// Validates and normalizes a model. `A_{-q}` must be supplied for every
    /// `q` and agree with `A_q†` to 1e-12; it is then reset to `A_q†` exactly.
    pub fn new(
        name: impl Into<String>,
        d: usize,
        q: usize,
        hoppings: Vec<(Vec<i64>, Array2<C64>)>,
        couplings: Vec<(Vec<i64>, f64)>,
    ) -> Result<Self> {
        if d == 0 || q == 0 {
            return invalid(format!("model needs d >= 1 and Q >= 1, got d={d}, Q={q}"));
        }
        let mut map = BTreeMap::new();
        for (v, a) in hoppings {
            if v.len() != d {
                return invalid(format!("hopping vector {v:?} is not {d}-dimensional"));
            }
            if a.dim() != (q, q) {
                return invalid(format!("hopping matrix for {v:?} is {:?}, expected {q}x{q}", a.dim()));
            }
            if map.insert(v.clone(), a).is_some() {
                return invalid(format!("hopping {v:?} given twice"));
            }
        }
        let keys: Vec<Vec<i64>> = map.keys().cloned().collect();
        for v in &keys {
            let neg: Vec<i64> = v.iter().map(|c| -c).collect();
            let Some(partner) = map.get(&neg) else {
                return invalid(format!("non-Hermitian model: hopping {v:?} has no partner {neg:?}"));
            };
            let dagger = adjoint(map[v].view());
            if max_abs((&dagger - partner).view()) > HERMITIAN_TOL {
                return invalid(format!("non-Hermitian model: A_{neg:?} != A_{v:?}^dagger"));
            }
            // canonical representative: the lexicographically smaller key is kept
            if neg >= *v {
                let fixed = if neg == *v {
                    (&map[v] + &dagger).mapv(|z| z * 0.5)
                } else {
                    dagger
                };
                map.insert(neg, fixed);
            }
        }
        let mut cmap = BTreeMap::new();
        for (v, w) in couplings {
            if v.len() != d {
                return invalid(format!("coupling vector {v:?} is not {d}-dimensional"));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return invalid(format!("disorder coupling for {v:?} must be finite and >= 0, got {w}"));
            }
            cmap.insert(v, w);
        }
        for (v, w) in &cmap {
            let neg: Vec<i64> = v.iter().map(|c| -c).collect();
            if cmap.get(&neg) != Some(w) {
                return invalid(format!("disorder couplings must satisfy W_q = W_-q (q = {v:?})"));
            }
        }
        Ok(HoppingModel {
            name: name.into(),
            d,
            q,
            hoppings: map,
            couplings: cmap,
        })
    }

    /// Builds a model from one representative per `±q` pair; partners are added.
    pub fn from_half(
        name: impl Into<String>,
        d: usize,
        q: usize,
        half: Vec<(Vec<i64>, Array2<C64>)>,
    ) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * half.len());
        for (v, a) in half {
            let neg: Vec<i64> = v.iter().map(|c| -c).collect();
            if neg != v {
                full.push((neg, adjoint(a.view())));
            }
            full.push((v, a));
        }
        Self::new(name, d, q, full, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn internal_dim(&self) -> usize {
        self.q
    }

    pub fn hoppings(&self) -> &BTreeMap<Vec<i64>, Array2<C64>> {
        &self.hoppings
    }

    pub fn couplings(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.couplings
    }

    pub fn coupling(&self, v: &[i64]) -> f64 {
        self.couplings.get(v).copied().unwrap_or(0.0)
    }

    pub fn is_clean(&self) -> bool {
        self.couplings.values().all(|&w| w == 0.0)
    }

    /// Largest Chebyshev hopping length.
    pub fn range(&self) -> usize {
        self.hoppings
            .keys()
            .map(|v| v.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Same hoppings, on-site disorder of strength `w`.
    pub fn with_onsite_disorder(&self, w: f64) -> Result<Self> {
        let mut couplings: Vec<(Vec<i64>, f64)> = self
            .couplings
            .iter()
            .filter(|(v, _)| v.iter().any(|&c| c != 0))
            .map(|(v, w)| (v.clone(), *w))
            .collect();
        couplings.push((vec![0; self.d], w));
        Self::new(
            self.name.clone(),
            self.d,
            self.q,
            self.hoppings.iter().map(|(v, a)| (v.clone(), a.clone())).collect(),
            couplings,
        )
    }

    /// Bloch Hamiltonian `h(k) = Σ_q A_q e^{-i k·q}` of the clean model.
    pub fn bloch(&self, k: &[f64]) -> Array2<C64> {
        let mut h = Array2::zeros((self.q, self.q));
        for (v, a) in &self.hoppings {
            let phase: f64 = v.iter().zip(k).map(|(&c, &kk)| c as f64 * kk).sum();
            h.scaled_add(C64::from_polar(1.0, -phase), a);
        }
        h
    }
}

fn pauli_x() -> Array2<C64> {
    array![[ZERO, ONE], [ONE, ZERO]]
}

fn pauli_y() -> Array2<C64> {
    array![[ZERO, -I], [I, ZERO]]
}

fn pauli_z() -> Array2<C64> {
    array![[ONE, ZERO], [ZERO, -ONE]]
}

fn half_plus(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    (a + &b.mapv(|z| z * I)).mapv(|z| z * 0.5)
}

/// Two-band Chern insulator on the square lattice,
/// `h(k) = sin k_1 σ_x + sin k_2 σ_y + (m + cos k_1 + cos k_2) σ_z`.
///
/// Topological for `0 < |m| < 2`, trivial for `|m| > 2`, gapless at `m ∈ {0, ±2}`.
pub fn chern_model(mass: f64) -> HoppingModel {
    let sz = pauli_z();
    HoppingModel::from_half(
        format!("chern(m={mass})"),
        2,
        2,
        vec![
            (vec![0, 0], sz.mapv(|z| z * mass)),
            (vec![1, 0], half_plus(&sz, &pauli_x())),
            (vec![0, 1], half_plus(&sz, &pauli_y())),
        ],
    )
    .expect("built-in model is Hermitian")
}

/// Decoupled sites with an on-site `m σ_z` in `d` dimensions.
pub fn atomic_insulator(d: usize, mass: f64) -> HoppingModel {
    HoppingModel::from_half(
        format!("atomic(d={d},m={mass})"),
        d,
        2,
        vec![(vec![0; d], pauli_z().mapv(|z| z * mass))],
    )
    .expect("built-in model is Hermitian")
}

/// Chern layers stacked along axis 3 with interlayer hopping `t3 σ_z`.
pub fn layered_chern_stack(mass: f64, t3: f64) -> HoppingModel {
    let layer = chern_model(mass);
    let mut half: Vec<(Vec<i64>, Array2<C64>)> = layer
        .hoppings()
        .iter()
        .filter(|(v, _)| v.as_slice() >= [0, 0].as_slice())
        .map(|(v, a)| (vec![v[0], v[1], 0], a.clone()))
        .collect();
    if t3 != 0.0 {
        half.push((vec![0, 0, 1], pauli_z().mapv(|z| z * t3)));
    }
    HoppingModel::from_half(format!("stack(m={mass},t3={t3})"), 3, 2, half)
        .expect("built-in model is Hermitian")
}

/// Nearest-neighbour chain with hopping `t`, `Q = 1`.
pub fn chain(t: f64) -> HoppingModel {
    HoppingModel::from_half(
        format!("chain(t={t})"),
        1,
        1,
        vec![(vec![1], Array2::from_elem((1, 1), C64::new(t, 0.0)))],
    )
    .expect("built-in model is Hermitian")
}

/// One disorder realization `ω ∈ [-1/2, 1/2]^{sites}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderConfig {
    values: Vec<f64>,
    seed: Option<u64>,
    geometry: Geometry,
}

impl DisorderConfig {
    pub fn clean(geometry: &Geometry) -> Self {
        DisorderConfig {
            values: vec![0.0; geometry.n_sites()],
            seed: None,
            geometry: geometry.clone(),
        }
    }

    pub fn from_values(geometry: &Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.n_sites() {
            return invalid("one disorder value per site required");
        }
        if values.iter().any(|v| !(v.abs() <= 0.5)) {
            return invalid("disorder values must lie in [-1/2, 1/2]");
        }
        Ok(DisorderConfig {
            values,
            seed: None,
            geometry: geometry.clone(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `(T_v ω)_x = ω_{x-v}` on a torus.
    pub fn translated(&self, v: &[i64]) -> Result<Self> {
        if !self.geometry.is_torus() {
            return Err(Error::UnsupportedGeometry(
                "disorder translations need a torus".into(),
            ));
        }
        let back: Vec<i64> = v.iter().map(|c| -c).collect();
        let values = (0..self.geometry.n_sites())
            .map(|x| {
                let src = self.geometry.translate(x, &back).expect("torus wraps");
                self.values[src]
            })
            .collect();
        Ok(DisorderConfig {
            values,
            seed: None,
            geometry: self.geometry.clone(),
        })
    }
}

/// I.i.d. uniform `[-1/2, 1/2]` values, one per site, from a ChaCha8 stream.
pub fn sample_disorder(geometry: &Geometry, seed: u64) -> DisorderConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..geometry.n_sites())
        .map(|_| rng.gen::<f64>() - 0.5)
        .collect();
    DisorderConfig {
        values,
        seed: Some(seed),
        geometry: geometry.clone(),
    }
}

/// Assembles `π_ω(h)` on the geometry; open boxes drop hoppings that leave the box.
pub fn build_hamiltonian(
    model: &HoppingModel,
    geometry: &Geometry,
    disorder: Option<&DisorderConfig>,
) -> Result<CovariantOperator> {
    if model.d() != geometry.d() {
        return invalid(format!(
            "model is {}-dimensional, geometry is {}-dimensional",
            model.d(),
            geometry.d()
        ));
    }
    for v in model.hoppings().keys() {
        if !geometry.admits_hopping(v) {
            return invalid(format!(
                "hopping {v:?} exceeds the minimal-image bound of {}",
                geometry.label()
            ));
        }
    }
    if let Some(dis) = disorder {
        if dis.geometry() != geometry {
            return invalid("disorder realization lives on a different geometry");
        }
    }
    let omega = |x: usize| disorder.map(|d| d.values[x]).unwrap_or(0.0);
    let q = model.internal_dim();
    let n = q * geometry.n_sites();
    let mut h = Array2::<C64>::zeros((n, n));
    for x in 0..geometry.n_sites() {
        for (v, a) in model.hoppings() {
            let back: Vec<i64> = v.iter().map(|c| -c).collect();
            let Some(y) = geometry.translate(x, &back) else {
                continue;
            };
            let w = model.coupling(v);
            let lambda = if w == 0.0 {
                0.0
            } else if v.iter().all(|&c| c == 0) {
                w * omega(x)
            } else {
                w * ((omega(x) + omega(y)) * 0.5)
            };
            let factor = 1.0 + lambda;
            h.slice_mut(s![x * q..(x + 1) * q, y * q..(y + 1) * q])
                .assign(&a.mapv(|z| z * factor));
        }
    }
    let provenance = Provenance {
        model: Some(model.name().to_string()),
        seed: disorder.and_then(|d| d.seed()),
    };
    Ok(CovariantOperator::new(h, geometry.clone(), q)?.with_provenance(provenance))
}
