//! Chern cocycle `τ_d`: the local formula on a torus, the operator definition on
//! a box, the weak invariant `σ₁₂`, and the geometric identity behind their
//! equality.
//!
//! Local route: `τ_d(a_0..a_d) = Λ_d Σ_ρ (-1)^ρ 𝒯{a_0 Π_i ∂_{ρ_i} a_i}` with
//! `Λ_d = (2πi)^{d/2} / (d/2)!`.
//!
//! Direct route: `τ_d = ½ ∫ dx₀ 𝒯̂{γ F_{x₀} Π_i [F_{x₀}, π_γ(a_i)]}`, the
//! integral replaced by a quadrature. With the orientation fixed by
//! `γ_0 = -i^{d/2} γ_1 ⋯ γ_d` and the constants above, the two routes differ by
//! an overall sign: `direct = -local`, while `local` coincides with the Fedosov
//! index of `π⁻_γ(p) F π⁺_γ(p)`.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::clifford::{build_clifford, CliffordRep};
use crate::crossed::derivation;
use crate::dirac::{dirac_phase, graded_trace_product, ExtendedOperator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{trace_of_product, C64, I, ONE, ZERO};
use crate::operator::CovariantOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Local,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleParams {
    pub d: usize,
    pub geometry: String,
    pub window: Option<usize>,
    pub x0_samples: usize,
    pub ensemble: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleResult {
    pub value: C64,
    pub route: Route,
    pub params: CocycleParams,
    /// `|Im value|`.
    pub imag_residual: f64,
    /// `max - min` of the real part over x₀ samples (direct route).
    pub x0_spread: Option<f64>,
    pub warning: Option<String>,
}

/// `Λ_d = (2πi)^{d/2} / (d/2)!`.
pub fn lambda_d(d: usize) -> C64 {
    let h = d / 2;
    (C64::new(0.0, 2.0 * PI)).powu(h as u32) / factorial(h)
}

/// `Λ̃_d = -(2π)^{d/2} / (i^{d/2} (d/2)!)`.
pub fn lambda_tilde_d(d: usize) -> C64 {
    let h = d / 2;
    -(2.0 * PI).powi(h as i32) / (I.powu(h as u32) * factorial(h))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Permutations of `0..n` with their signs, in lexicographic order.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            let mut inv = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if prefix[i] > prefix[j] {
                        inv += 1;
                    }
                }
            }
            out.push((prefix.clone(), if inv % 2 == 0 { 1.0 } else { -1.0 }));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn check_same_space(args: &[&CovariantOperator]) -> Result<()> {
    let first = args[0];
    for a in &args[1..] {
        if a.geometry() != first.geometry() || a.internal_dim() != first.internal_dim() {
            return invalid("cocycle arguments live on different spaces");
        }
    }
    Ok(())
}

/// `Σ_ρ (-1)^ρ 𝒯{a_0 Π_i ∂_{axes[ρ_i]} a_i}` for `args = [a_0, …, a_k]`, `k = axes.len()`.
///
/// Prefix products are shared between permutations; the last factor enters
/// through a trace of a product.
pub fn antisymmetrized_pairing(args: &[&CovariantOperator], axes: &[usize]) -> Result<C64> {
    let k = axes.len();
    if args.len() != k + 1 {
        return invalid(format!("{} arguments for a degree-{k} pairing", args.len()));
    }
    check_same_space(args)?;
    if !args[0].geometry().is_torus() {
        return Err(Error::UnsupportedGeometry("the local formula needs a torus".into()));
    }
    if k == 0 {
        return crate::crossed::trace_t(args[0]);
    }
    // derivatives, shared between identical arguments
    let mut derivs: Vec<Vec<std::rc::Rc<Array2<C64>>>> = Vec::with_capacity(k);
    for i in 1..=k {
        let reuse = (1..i).find(|&j| std::ptr::eq(args[j], args[i]));
        if let Some(j) = reuse {
            let prev = derivs[j - 1].clone();
            derivs.push(prev);
            continue;
        }
        let mut row = Vec::with_capacity(k);
        for &ax in axes {
            row.push(std::rc::Rc::new(derivation(args[i], ax)?.into_matrix()));
        }
        derivs.push(row);
    }
    let n_sites = args[0].n_sites() as f64;

    fn dfs(
        prefix: &Array2<C64>,
        depth: usize,
        used: &mut Vec<bool>,
        sign: f64,
        derivs: &[Vec<std::rc::Rc<Array2<C64>>>],
        acc: &mut C64,
    ) {
        let k = used.len();
        for slot in 0..k {
            if used[slot] {
                continue;
            }
            // sign of placing `slot` after the earlier choices
            let crossings = used[slot + 1..].iter().filter(|&&u| u).count();
            let s = if crossings % 2 == 0 { sign } else { -sign };
            let factor = &derivs[depth][slot];
            if depth + 1 == k {
                *acc += trace_of_product(prefix.view(), factor.view()) * s;
            } else {
                let next = prefix.dot(factor.as_ref());
                used[slot] = true;
                dfs(&next, depth + 1, used, s, derivs, acc);
                used[slot] = false;
            }
        }
    }

    let mut acc = ZERO;
    let mut used = vec![false; k];
    dfs(args[0].matrix(), 0, &mut used, 1.0, &derivs, &mut acc);
    Ok(acc / n_sites)
}

/// Local formula for `τ_d(a_0, …, a_d)` on a `d`-dimensional torus.
pub fn local_cocycle(args: &[&CovariantOperator]) -> Result<CocycleResult> {
    if args.is_empty() {
        return invalid("no arguments");
    }
    let g = args[0].geometry();
    let d = g.d();
    if !d.is_multiple_of(2) {
        return invalid(format!("the top cocycle needs even d, got {d}"));
    }
    if args.len() != d + 1 {
        return invalid(format!("τ_{d} takes {} arguments, got {}", d + 1, args.len()));
    }
    let axes: Vec<usize> = (0..d).collect();
    let value = lambda_d(d) * antisymmetrized_pairing(args, &axes)?;
    Ok(CocycleResult {
        value,
        route: Route::Local,
        params: CocycleParams {
            d,
            geometry: g.label(),
            window: None,
            x0_samples: 0,
            ensemble: 1,
        },
        imag_residual: value.im.abs(),
        x0_spread: None,
        warning: None,
    })
}

/// `σ₁₂ = 2πi Σ_ρ (-1)^ρ 𝒯{p ∂_{ρ_1} p ∂_{ρ_2} p}` on a three-dimensional torus.
pub fn weak_invariant_sigma12(p: &CovariantOperator) -> Result<CocycleResult> {
    let g = p.geometry();
    if g.d() != 3 || !g.is_torus() {
        return Err(Error::UnsupportedGeometry(format!(
            "σ₁₂ is defined on a 3D torus, got {}",
            g.label()
        )));
    }
    let value = C64::new(0.0, 2.0 * PI) * antisymmetrized_pairing(&[p, p, p], &[0, 1])?;
    Ok(CocycleResult {
        value,
        route: Route::Local,
        params: CocycleParams {
            d: 3,
            geometry: g.label(),
            window: None,
            x0_samples: 0,
            ensemble: 1,
        },
        imag_residual: value.im.abs(),
        x0_spread: None,
        warning: None,
    })
}

/// Operator definition of `τ_d` averaged over the given shifts `x₀`.
///
/// A spread of the real parts above `spread_tolerance` is reported as a
/// warning on the result.
pub fn direct_cocycle(
    args: &[&CovariantOperator],
    clifford: &CliffordRep,
    x0_samples: &[Vec<f64>],
    window: usize,
    spread_tolerance: f64,
) -> Result<CocycleResult> {
    if args.is_empty() || x0_samples.is_empty() {
        return invalid("need arguments and at least one x0 sample");
    }
    check_same_space(args)?;
    let g = args[0].geometry();
    let d = clifford.d();
    if g.d() != d {
        return invalid("Clifford algebra and geometry disagree on d");
    }
    if args.len() != d + 1 {
        return invalid(format!("τ_{d} takes {} arguments, got {}", d + 1, args.len()));
    }
    let q = args[0].internal_dim();
    let signs = clifford.grading_signs();
    let mut values = Vec::with_capacity(x0_samples.len());
    for x0 in x0_samples {
        let f = dirac_phase(g, clifford, x0, q)?;
        let mut comms: Vec<std::rc::Rc<ExtendedOperator>> = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let reuse = (0..i).find(|&j| std::ptr::eq(args[j], *a));
            match reuse {
                Some(j) => {
                    let c = comms[j].clone();
                    comms.push(c);
                }
                None => comms.push(std::rc::Rc::new(f.commutator(a)?)),
            }
        }
        let mut left = f.apply_left(&comms[0])?;
        for c in &comms[1..d] {
            left = left.try_mul(c)?;
        }
        let raw = graded_trace_product(&left, &comms[d], &signs, window)?;
        values.push(raw * 0.5);
    }
    let mean = values.iter().sum::<C64>() / values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.re), hi.max(v.re)));
    let spread = hi - lo;
    let warning = (spread > spread_tolerance).then(|| {
        format!("x0 spread {spread:.3e} exceeds tolerance {spread_tolerance:.3e}")
    });
    Ok(CocycleResult {
        value: mean,
        route: Route::Direct,
        params: CocycleParams {
            d,
            geometry: g.label(),
            window: Some(window),
            x0_samples: x0_samples.len(),
            ensemble: 1,
        },
        imag_residual: mean.im.abs(),
        x0_spread: Some(spread),
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub abs_error: f64,
    /// `|lhs - rhs| / |rhs|`, absent when `rhs = 0`.
    pub relative_error: Option<f64>,
    pub cutoff: f64,
    pub x0_samples: usize,
}

fn small_mul(a: &[C64], b: &[C64], c: usize, out: &mut [C64]) {
    for i in 0..c {
        for j in 0..c {
            let mut acc = ZERO;
            for k in 0..c {
                acc += a[i * c + k] * b[k * c + j];
            }
            out[i * c + j] = acc;
        }
    }
}

/// Left side as a lattice sum over `|x| <= R_c` averaged over the shifts, and
/// right side `Λ̃_d det[x_1 … x_d]`. The Clifford factor is traced with the
/// plain matrix trace.
pub fn central_identity_check(
    d: usize,
    points: &[Vec<i64>],
    cutoff: f64,
    x0_samples: &[Vec<f64>],
) -> Result<IdentityCheck> {
    let cl = build_clifford(d)?;
    if points.len() != d || points.iter().any(|p| p.len() != d) {
        return invalid(format!("need {d} points in Z^{d}"));
    }
    if x0_samples.is_empty() || x0_samples.iter().any(|s| s.len() != d) {
        return invalid("need at least one d-dimensional x0 sample");
    }
    if !(cutoff > 0.0) {
        return invalid("cutoff must be positive");
    }
    let c = cl.dim();
    let gens: Vec<Vec<C64>> = cl.generators().iter().map(|g| g.iter().copied().collect()).collect();
    let signs = cl.grading_signs();
    let mut pts: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|&v| v as f64).collect()).collect();
    pts.push(vec![0.0; d]);

    let rc = cutoff.floor() as i64;
    let mut lattice: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..d {
        lattice = lattice
            .into_iter()
            .flat_map(|p| {
                (-rc..=rc).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    lattice.retain(|x| (x.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt() <= cutoff);

    let mut units = vec![vec![0.0; d]; d + 1];
    let mut prod = vec![ZERO; c * c];
    let mut tmp = vec![ZERO; c * c];
    let mut gw = vec![ZERO; c * c];
    let mut total = ZERO;
    for x0 in x0_samples {
        let mut sub = ZERO;
        for x in &lattice {
            for (i, p) in pts.iter().enumerate() {
                let mut r2 = 0.0;
                for j in 0..d {
                    let v = x[j] as f64 + x0[j] + p[j];
                    units[i][j] = v;
                    r2 += v * v;
                }
                let r = r2.sqrt();
                if r == 0.0 {
                    return Err(Error::DegenerateShift { site: x.clone() });
                }
                for v in units[i].iter_mut() {
                    *v /= r;
                }
            }
            // prod = Π_i γ·(u_i - u_{i+1})
            for (k, z) in prod.iter_mut().enumerate() {
                *z = if k % (c + 1) == 0 { ONE } else { ZERO };
            }
            for i in 0..d {
                gw.iter_mut().for_each(|z| *z = ZERO);
                for (j, g) in gens.iter().enumerate() {
                    let w = units[i][j] - units[i + 1][j];
                    for (dst, src) in gw.iter_mut().zip(g) {
                        *dst += src * w;
                    }
                }
                small_mul(&prod, &gw, c, &mut tmp);
                std::mem::swap(&mut prod, &mut tmp);
            }
            for a in 0..c {
                sub += prod[a * c + a] * signs[a];
            }
        }
        total += sub;
    }
    let lhs = total / x0_samples.len() as f64;

    let mut det = 0.0;
    for (perm, sign) in signed_permutations(d) {
        let term: f64 = (0..d).map(|i| points[i][perm[i]] as f64).product();
        det += sign * term;
    }
    let rhs = lambda_tilde_d(d) * det;
    let abs_error = (lhs - rhs).norm();
    Ok(IdentityCheck {
        lhs,
        rhs,
        abs_error,
        relative_error: (rhs.norm() > 0.0).then(|| abs_error / rhs.norm()),
        cutoff,
        x0_samples: x0_samples.len(),
    })
}
