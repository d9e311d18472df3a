//! Even Clifford algebra `Cl_d` as explicit `2^{d/2}`-dimensional matrices.
//!
//! Construction by recursive doubling. Starting from `d = 2` with
//! `γ_1 = σ_x`, `γ_2 = σ_y` (so `γ_0 = σ_z`), the `d + 2` representation is
//!
//! ```text
//! γ'_i     = γ_i ⊗ 1      (i = 1..d)
//! γ'_{d+1} = γ_0 ⊗ σ_x
//! γ'_{d+2} = γ_0 ⊗ σ_y
//! ```
//!
//! Every generator then has entries in `{0, ±1, ±i}` with exactly one nonzero
//! per row, and the grading `γ_0 = -i^{d/2} γ_1 ⋯ γ_d` is diagonal. The index
//! code relies on both facts to keep Clifford blocks sparse.

use ndarray::{array, Array2, ArrayView2};

use crate::error::{invalid, Result};
use crate::linalg::{kron, trace, C64, I, ONE, ZERO};

/// Concrete matrix representation of `Cl_d` together with its grading.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordRep {
    d: usize,
    dim: usize,
    generators: Vec<Array2<C64>>,
    grading: Array2<C64>,
}

fn pauli() -> [Array2<C64>; 3] {
    [
        array![[ZERO, ONE], [ONE, ZERO]],
        array![[ZERO, -I], [I, ZERO]],
        array![[ONE, ZERO], [ZERO, -ONE]],
    ]
}

/// `(-i)·i^{k}` for the grading prefactor.
fn grading_prefactor(half_d: usize) -> C64 {
    -I.powu(half_d as u32)
}

impl CliffordRep {
    pub fn new(d: usize) -> Result<Self> {
        build_clifford(d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `γ_1 … γ_d`, in coordinate-axis order.
    pub fn generators(&self) -> &[Array2<C64>] {
        &self.generators
    }

    /// `γ_i` with 1-based index as in the usual notation.
    pub fn gamma(&self, i: usize) -> &Array2<C64> {
        &self.generators[i - 1]
    }

    pub fn grading(&self) -> &Array2<C64> {
        &self.grading
    }

    /// Diagonal of the grading; entries are exactly `±1`.
    pub fn grading_signs(&self) -> Vec<f64> {
        self.grading.diag().iter().map(|z| z.re).collect()
    }

    /// `Σ_i v_i γ_i`.
    pub fn dot(&self, v: &[f64]) -> Array2<C64> {
        assert_eq!(v.len(), self.d, "vector length must equal d");
        let mut out = Array2::zeros((self.dim, self.dim));
        for (g, &c) in self.generators.iter().zip(v) {
            out.scaled_add(C64::new(c, 0.0), g);
        }
        out
    }

    /// Normalized trace `Tr_γ{m} = tr(m) / dim`.
    pub fn trace(&self, m: ArrayView2<C64>) -> Result<C64> {
        clifford_trace(self, m)
    }
}

/// Builds the representation for even `d ≥ 2`.
pub fn build_clifford(d: usize) -> Result<CliffordRep> {
    if d < 2 || !d.is_multiple_of(2) {
        return invalid(format!("Clifford dimension must be even and >= 2, got {d}"));
    }
    let [sx, sy, _] = pauli();
    let mut generators = vec![sx.clone(), sy.clone()];
    let mut cur_d = 2;
    let id2 = Array2::from_diag_elem(2, ONE);
    while cur_d < d {
        let grading = grading_of(&generators);
        let mut next: Vec<Array2<C64>> = generators
            .iter()
            .map(|g| kron(g.view(), id2.view()))
            .collect();
        next.push(kron(grading.view(), sx.view()));
        next.push(kron(grading.view(), sy.view()));
        generators = next;
        cur_d += 2;
    }
    let grading = grading_of(&generators);
    let dim = 1usize << (d / 2);
    Ok(CliffordRep {
        d,
        dim,
        generators,
        grading,
    })
}

fn grading_of(generators: &[Array2<C64>]) -> Array2<C64> {
    let dim = generators[0].nrows();
    let mut prod = Array2::from_diag_elem(dim, ONE);
    for g in generators {
        prod = prod.dot(g);
    }
    prod.mapv(|z| z * grading_prefactor(generators.len() / 2))
}

/// Normalized trace on the Clifford factor.
pub fn clifford_trace(rep: &CliffordRep, m: ArrayView2<C64>) -> Result<C64> {
    if m.dim() != (rep.dim, rep.dim) {
        return invalid(format!(
            "matrix is {:?}, Clifford representation has dimension {}",
            m.dim(),
            rep.dim
        ));
    }
    Ok(trace(m) / rep.dim as f64)
}
