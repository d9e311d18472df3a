//! Dirac phase `F = γ·(X + x₀)/|X + x₀|` on an open box and the index machinery.
//!
//! Operators on `ℂ^{2^{d/2}} ⊗ ℂ^Q ⊗ ℓ²(box)` are stored as a grid of Clifford
//! blocks, each an `N x N` matrix over `N = Q · #sites` (or `None` when it
//! vanishes identically). Because every generator has one nonzero per row, `F`
//! is a diagonal function in each Clifford block and `[F, π_γ(a)]` can be
//! formed entrywise: block `(α, β)` has entries `(φ_{αβ}(r) - φ_{αβ}(s)) a_{rs}`.
//!
//! `𝒯̂` is the full lattice-summed trace restricted to an interior window; the
//! Clifford factor is traced with the plain matrix trace, so that `𝒯̂` is the
//! trace of the Hilbert space on which `F` acts and the Fedosov formula returns
//! an index.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordRep;
use crate::crossed::linear_fit;
use crate::error::{invalid, Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{adjoint, operator_norm, svd, C64, ONE, ZERO};
use crate::operator::CovariantOperator;
use crate::spectral::SpectralProjector;

/// Relative imaginary residual above which a trace is rejected.
pub const DEFAULT_IMAG_TOLERANCE: f64 = 1e-6;

/// Operator on the Clifford-extended space, stored blockwise.
#[derive(Debug, Clone)]
pub struct ExtendedOperator {
    cdim: usize,
    n: usize,
    blocks: Vec<Option<Array2<C64>>>,
    geometry: Geometry,
    q: usize,
    tag: String,
}

impl ExtendedOperator {
    pub fn zeros(cdim: usize, geometry: &Geometry, q: usize) -> Self {
        ExtendedOperator {
            cdim,
            n: q * geometry.n_sites(),
            blocks: vec![None; cdim * cdim],
            geometry: geometry.clone(),
            q,
            tag: "zero".into(),
        }
    }

    /// Splits a dense `(cdim·N) x (cdim·N)` matrix into Clifford blocks.
    pub fn from_dense(
        m: &Array2<C64>,
        cdim: usize,
        geometry: &Geometry,
        q: usize,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let n = q * geometry.n_sites();
        if m.dim() != (cdim * n, cdim * n) {
            return invalid(format!("dense matrix is {:?}, expected {}x{}", m.dim(), cdim * n, cdim * n));
        }
        let mut out = Self::zeros(cdim, geometry, q);
        for a in 0..cdim {
            for b in 0..cdim {
                let blk = m.slice(s![a * n..(a + 1) * n, b * n..(b + 1) * n]);
                if blk.iter().any(|z| *z != ZERO) {
                    out.blocks[a * cdim + b] = Some(blk.to_owned());
                }
            }
        }
        out.tag = tag.into();
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let n = self.n;
        let mut m = Array2::zeros((self.cdim * n, self.cdim * n));
        for a in 0..self.cdim {
            for b in 0..self.cdim {
                if let Some(blk) = self.block(a, b) {
                    m.slice_mut(s![a * n..(a + 1) * n, b * n..(b + 1) * n]).assign(blk);
                }
            }
        }
        m
    }

    pub fn clifford_dim(&self) -> usize {
        self.cdim
    }

    /// Side of each Clifford block, `Q · #sites`.
    pub fn block_dim(&self) -> usize {
        self.n
    }

    /// Total dimension `clifford.dim × Q × #sites`.
    pub fn dim(&self) -> usize {
        self.cdim * self.n
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn internal_dim(&self) -> usize {
        self.q
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn block(&self, a: usize, b: usize) -> Option<&Array2<C64>> {
        self.blocks[a * self.cdim + b].as_ref()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.cdim != other.cdim || self.q != other.q || self.geometry != other.geometry {
            return invalid("extended operators live on different spaces");
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let c = self.cdim;
        let mut out = Self::zeros(c, &self.geometry, self.q);
        for a in 0..c {
            for b in 0..c {
                let mut acc: Option<Array2<C64>> = None;
                for e in 0..c {
                    let (Some(x), Some(y)) = (self.block(a, e), other.block(e, b)) else {
                        continue;
                    };
                    match acc.as_mut() {
                        None => acc = Some(x.dot(y)),
                        Some(m) => general_mat_mul(ONE, x, y, ONE, m),
                    }
                }
                out.blocks[a * c + b] = acc;
            }
        }
        out.tag = format!("({})*({})", self.tag, other.tag);
        Ok(out)
    }

    fn zip_with(&self, other: &Self, sign: f64, tag: String) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (dst, src) in out.blocks.iter_mut().zip(&other.blocks) {
            match (dst.as_mut(), src) {
                (_, None) => {}
                (Some(d), Some(s)) => d.scaled_add(C64::new(sign, 0.0), s),
                (None, Some(s)) => *dst = Some(s.mapv(|z| z * sign)),
            }
        }
        out.tag = tag;
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, 1.0, format!("{}+{}", self.tag, other.tag))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, -1.0, format!("{}-{}", self.tag, other.tag))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.iter_mut().flatten() {
            b.mapv_inplace(|z| z * c);
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let c = self.cdim;
        let mut out = Self::zeros(c, &self.geometry, self.q);
        for a in 0..c {
            for b in 0..c {
                out.blocks[b * c + a] = self.block(a, b).map(|m| adjoint(m.view()));
            }
        }
        out.tag = format!("({})^*", self.tag);
        out
    }

    /// `γ X` for a diagonal grading with the given signs.
    pub fn graded_left(&self, signs: &[f64]) -> Self {
        let mut out = self.clone();
        for a in 0..self.cdim {
            if signs[a] < 0.0 {
                for b in 0..self.cdim {
                    if let Some(m) = out.blocks[a * self.cdim + b].as_mut() {
                        m.mapv_inplace(|z| -z);
                    }
                }
            }
        }
        out.tag = format!("gamma*({})", self.tag);
        out
    }

    /// `X γ`.
    pub fn graded_right(&self, signs: &[f64]) -> Self {
        let mut out = self.clone();
        for b in 0..self.cdim {
            if signs[b] < 0.0 {
                for a in 0..self.cdim {
                    if let Some(m) = out.blocks[a * self.cdim + b].as_mut() {
                        m.mapv_inplace(|z| -z);
                    }
                }
            }
        }
        out.tag = format!("({})*gamma", self.tag);
        out
    }

    /// Largest entry modulus over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flatten()
            .flat_map(|m| m.iter())
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }
}

/// `π_γ(a) = 1_γ ⊗ a`.
pub fn lift(op: &CovariantOperator, clifford: &CliffordRep) -> Result<ExtendedOperator> {
    if !op.geometry().is_box() {
        return Err(Error::UnsupportedGeometry("the Clifford extension lives on a box".into()));
    }
    let c = clifford.dim();
    let mut out = ExtendedOperator::zeros(c, op.geometry(), op.internal_dim());
    for a in 0..c {
        out.blocks[a * c + a] = Some(op.matrix().clone());
    }
    out.tag = "pi_gamma(a)".into();
    Ok(out)
}

/// Rows `site·Q + k` for the sites of the window `|x|_∞ <= r`.
fn window_rows(geometry: &Geometry, q: usize, r: usize) -> Result<Vec<usize>> {
    Ok(geometry
        .window(r)?
        .into_iter()
        .flat_map(|s| (0..q).map(move |k| s * q + k))
        .collect())
}

/// `𝒯̂{X}` summed over the interior window `[-R′, R′]^d`.
pub fn trace_that(eop: &ExtendedOperator, window: usize) -> Result<C64> {
    let rows = window_rows(&eop.geometry, eop.q, window)?;
    let mut acc = ZERO;
    for a in 0..eop.cdim {
        if let Some(m) = eop.block(a, a) {
            for &r in &rows {
                acc += m[[r, r]];
            }
        }
    }
    Ok(acc)
}

/// `𝒯̂{γ A B}` over the window without forming `A B`.
pub fn graded_trace_product(
    a: &ExtendedOperator,
    b: &ExtendedOperator,
    signs: &[f64],
    window: usize,
) -> Result<C64> {
    a.check(b)?;
    let rows = window_rows(&a.geometry, a.q, window)?;
    let c = a.cdim;
    let mut acc = ZERO;
    for al in 0..c {
        let mut part = ZERO;
        for e in 0..c {
            let (Some(x), Some(y)) = (a.block(al, e), b.block(e, al)) else {
                continue;
            };
            let xr = x.select(Axis(0), &rows);
            let yc = y.select(Axis(1), &rows);
            for (row, col) in xr.axis_iter(Axis(0)).zip(yc.axis_iter(Axis(1))) {
                part += row.iter().zip(col.iter()).map(|(u, v)| u * v).sum::<C64>();
            }
        }
        acc += part * signs[al];
    }
    Ok(acc)
}

/// The sign of the shifted Dirac operator on a box.
#[derive(Debug, Clone)]
pub struct DiracPhase {
    clifford: CliffordRep,
    geometry: Geometry,
    q: usize,
    x0: Vec<f64>,
    units: Vec<f64>,
    phi: Vec<Option<Array1<C64>>>,
}

pub fn dirac_phase(
    geometry: &Geometry,
    clifford: &CliffordRep,
    x0: &[f64],
    q: usize,
) -> Result<DiracPhase> {
    if !geometry.is_box() {
        return Err(Error::UnsupportedGeometry("the Dirac phase is built on a box".into()));
    }
    let d = geometry.d();
    if clifford.d() != d {
        return invalid(format!("Clifford algebra of d = {} on a {d}-dimensional box", clifford.d()));
    }
    if x0.len() != d || x0.iter().any(|v| !(0.0..1.0).contains(v)) {
        return invalid(format!("x0 must lie in [0,1)^{d}, got {x0:?}"));
    }
    if q == 0 {
        return invalid("internal dimension must be positive");
    }
    let n_sites = geometry.n_sites();
    let mut units = Vec::with_capacity(n_sites * d);
    for site in 0..n_sites {
        let v: Vec<f64> = geometry
            .coords(site)
            .iter()
            .zip(x0)
            .map(|(&c, &s)| c as f64 + s)
            .collect();
        let r = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r == 0.0 {
            return Err(Error::DegenerateShift {
                site: geometry.coords(site).to_vec(),
            });
        }
        units.extend(v.iter().map(|t| t / r));
    }
    let c = clifford.dim();
    let mut phi = Vec::with_capacity(c * c);
    for a in 0..c {
        for b in 0..c {
            let coeffs: Vec<C64> = clifford.generators().iter().map(|g| g[[a, b]]).collect();
            if coeffs.iter().all(|z| *z == ZERO) {
                phi.push(None);
                continue;
            }
            let mut diag = Array1::zeros(q * n_sites);
            for site in 0..n_sites {
                let u = &units[site * d..(site + 1) * d];
                let val: C64 = coeffs.iter().zip(u).map(|(g, &t)| g * t).sum();
                for k in 0..q {
                    diag[site * q + k] = val;
                }
            }
            phi.push(Some(diag));
        }
    }
    Ok(DiracPhase {
        clifford: clifford.clone(),
        geometry: geometry.clone(),
        q,
        x0: x0.to_vec(),
        units,
        phi,
    })
}

impl DiracPhase {
    pub fn clifford(&self) -> &CliffordRep {
        &self.clifford
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn internal_dim(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.clifford.dim() * self.q * self.geometry.n_sites()
    }

    /// `(x + x₀)/|x + x₀|` at a site.
    pub fn unit(&self, site: usize) -> &[f64] {
        let d = self.geometry.d();
        &self.units[site * d..(site + 1) * d]
    }

    /// Clifford matrix `γ·(x + x₀)/|x + x₀|` at a site.
    pub fn site_block(&self, site: usize) -> Array2<C64> {
        self.clifford.dot(self.unit(site))
    }

    fn phi(&self, a: usize, b: usize) -> Option<&Array1<C64>> {
        self.phi[a * self.clifford.dim() + b].as_ref()
    }

    pub fn to_extended(&self) -> ExtendedOperator {
        let c = self.clifford.dim();
        let mut out = ExtendedOperator::zeros(c, &self.geometry, self.q);
        for a in 0..c {
            for b in 0..c {
                out.blocks[a * c + b] = self.phi(a, b).map(Array2::from_diag);
            }
        }
        out.tag = "F".into();
        out
    }

    pub fn matrix(&self) -> Array2<C64> {
        self.to_extended().to_dense()
    }

    fn check_op(&self, geometry: &Geometry, q: usize) -> Result<()> {
        if geometry != &self.geometry || q != self.q {
            return invalid("operator and Dirac phase live on different spaces");
        }
        Ok(())
    }

    /// `[F, π_γ(a)]`, formed entrywise.
    pub fn commutator(&self, a: &CovariantOperator) -> Result<ExtendedOperator> {
        self.check_op(a.geometry(), a.internal_dim())?;
        let c = self.clifford.dim();
        let m = a.matrix();
        let mut out = ExtendedOperator::zeros(c, &self.geometry, self.q);
        for al in 0..c {
            for be in 0..c {
                let Some(phi) = self.phi(al, be) else {
                    continue;
                };
                let mut blk = m.clone();
                for ((r, s), z) in blk.indexed_iter_mut() {
                    *z *= phi[r] - phi[s];
                }
                out.blocks[al * c + be] = Some(blk);
            }
        }
        out.tag = "[F,pi_gamma(a)]".into();
        Ok(out)
    }

    /// `F X`.
    pub fn apply_left(&self, x: &ExtendedOperator) -> Result<ExtendedOperator> {
        self.check_op(&x.geometry, x.q)?;
        let c = self.clifford.dim();
        let mut out = ExtendedOperator::zeros(c, &self.geometry, self.q);
        for a in 0..c {
            for b in 0..c {
                let mut acc: Option<Array2<C64>> = None;
                for e in 0..c {
                    let (Some(phi), Some(blk)) = (self.phi(a, e), x.block(e, b)) else {
                        continue;
                    };
                    let mut scaled = blk.clone();
                    for (mut row, f) in scaled.axis_iter_mut(Axis(0)).zip(phi.iter()) {
                        row.mapv_inplace(|z| z * f);
                    }
                    match acc.as_mut() {
                        None => acc = Some(scaled),
                        Some(m) => *m += &scaled,
                    }
                }
                out.blocks[a * c + b] = acc;
            }
        }
        out.tag = format!("F*({})", x.tag);
        Ok(out)
    }

    /// `X F`.
    pub fn apply_right(&self, x: &ExtendedOperator) -> Result<ExtendedOperator> {
        self.check_op(&x.geometry, x.q)?;
        let c = self.clifford.dim();
        let mut out = ExtendedOperator::zeros(c, &self.geometry, self.q);
        for a in 0..c {
            for b in 0..c {
                let mut acc: Option<Array2<C64>> = None;
                for e in 0..c {
                    let (Some(blk), Some(phi)) = (x.block(a, e), self.phi(e, b)) else {
                        continue;
                    };
                    let mut scaled = blk.clone();
                    for (mut col, f) in scaled.axis_iter_mut(Axis(1)).zip(phi.iter()) {
                        col.mapv_inplace(|z| z * f);
                    }
                    match acc.as_mut() {
                        None => acc = Some(scaled),
                        Some(m) => *m += &scaled,
                    }
                }
                out.blocks[a * c + b] = acc;
            }
        }
        out.tag = format!("({})*F", x.tag);
        Ok(out)
    }
}

/// `m^d` midpoint nodes of `[0,1)^d`; `m = 3` gives coordinates `{1/6, 1/2, 5/6}`.
pub fn midpoint_grid(d: usize, m: usize) -> Vec<Vec<f64>> {
    let nodes: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&t| {
                    let mut v = p.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}

/// Seeded uniform shifts in `(0,1)^d`, none with an integer coordinate.
pub fn random_shifts(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| loop {
                    let t: f64 = rng.gen();
                    if t > 0.0 {
                        break t;
                    }
                })
                .collect()
        })
        .collect()
}

/// One site of a summability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub site: Vec<i64>,
    pub radius: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub power: usize,
    pub x0: Vec<f64>,
    pub window: usize,
    pub points: Vec<DecayPoint>,
    /// Log-log slope over sites with `|x + x₀| >= 1` and nonzero norm.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl DecayRecord {
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let d = self.x0.len();
        let coords: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
        writeln!(w, "{},radius,norm", coords.join(","))?;
        for p in &self.points {
            let c: Vec<String> = p.site.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{},{},{}", c.join(","), p.radius, p.norm)?;
        }
        Ok(())
    }
}

/// Per-site norms of the diagonal blocks of `[F, π_γ(p)]^k` inside the window.
pub fn summability_diagnostic(
    p: &CovariantOperator,
    phase: &DiracPhase,
    k: usize,
    window: usize,
) -> Result<DecayRecord> {
    if k == 0 {
        return invalid("power k must be positive");
    }
    let comm = phase.commutator(p)?;
    let mut left = comm.clone();
    for _ in 2..k {
        left = left.try_mul(&comm)?;
    }
    let right = if k == 1 { None } else { Some(&comm) };
    let g = phase.geometry();
    let q = phase.internal_dim();
    let c = phase.clifford().dim();
    let mut points = Vec::new();
    for site in g.window(window)? {
        let rows: Vec<usize> = (site * q..(site + 1) * q).collect();
        let mut blk = Array2::<C64>::zeros((c * q, c * q));
        for a in 0..c {
            for b in 0..c {
                let mut acc = Array2::<C64>::zeros((q, q));
                match right {
                    None => {
                        if let Some(m) = left.block(a, b) {
                            acc.assign(&m.slice(s![rows[0]..rows[0] + q, rows[0]..rows[0] + q]));
                        }
                    }
                    Some(r) => {
                        for e in 0..c {
                            let (Some(x), Some(y)) = (left.block(a, e), r.block(e, b)) else {
                                continue;
                            };
                            let xr = x.slice(s![rows[0]..rows[0] + q, ..]);
                            let yc = y.slice(s![.., rows[0]..rows[0] + q]);
                            acc += &xr.dot(&yc);
                        }
                    }
                }
                blk.slice_mut(s![a * q..(a + 1) * q, b * q..(b + 1) * q]).assign(&acc);
            }
        }
        let norm = operator_norm(blk.view())?;
        let shifted: Vec<f64> = g
            .coords(site)
            .iter()
            .zip(phase.x0())
            .map(|(&x, &s)| x as f64 + s)
            .collect();
        let radius = shifted.iter().map(|t| t * t).sum::<f64>().sqrt();
        points.push(DecayPoint {
            site: g.coords(site).to_vec(),
            radius,
            norm,
        });
    }
    let fit_pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.radius >= 1.0 && p.norm > 0.0)
        .map(|p| (p.radius.ln(), p.norm.ln()))
        .collect();
    let fit = linear_fit(&fit_pts);
    Ok(DecayRecord {
        power: k,
        x0: phase.x0().to_vec(),
        window,
        points,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexValue {
    pub value: f64,
    /// `|Im 𝒯̂| / max(1, |Re 𝒯̂|)`.
    pub imag_residual: f64,
    pub n: usize,
    pub radius: usize,
    pub window: usize,
    pub x0: Vec<f64>,
}

pub fn fedosov_tindex(
    p: &CovariantOperator,
    phase: &DiracPhase,
    n: usize,
    window: usize,
) -> Result<IndexValue> {
    fedosov_tindex_with_tolerance(p, phase, n, window, DEFAULT_IMAG_TOLERANCE)
}

/// Fedosov index of `f̂ = π⁻_γ(p) F π⁺_γ(p)`, restricted to the window.
///
/// With `C = [F, π_γ(p)]` and `P = π_γ(p)` one has `π⁺ - f̂*f̂ = (-1)^n P C^{2n}`
/// on the even part and the analogue on the odd part, so
/// `𝒯̂{(π⁺ - f̂*f̂)^n} - 𝒯̂{(π⁻ - f̂f̂*)^n} = (-1)^n 𝒯̂{γ P C^{2n}}`.
pub fn fedosov_tindex_with_tolerance(
    p: &CovariantOperator,
    phase: &DiracPhase,
    n: usize,
    window: usize,
    imag_tolerance: f64,
) -> Result<IndexValue> {
    let d = phase.geometry().d();
    if 2 * n <= d + 1 {
        return invalid(format!("Fedosov exponent needs 2n > d + 1, got n = {n}, d = {d}"));
    }
    let radius = phase.geometry().radius().expect("box");
    if window >= radius {
        return invalid(format!("window {window} must be smaller than the box radius {radius}"));
    }
    let comm = phase.commutator(p)?;
    let m = comm.try_mul(&comm)?;
    let mut w = m.clone();
    for _ in 2..n {
        w = w.try_mul(&m)?;
    }
    let pw = lift(p, phase.clifford())?.try_mul(&w)?;
    let signs = phase.clifford().grading_signs();
    let raw = graded_trace_product(&pw, &m, &signs, window)?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let imag_residual = raw.im.abs() / raw.re.abs().max(1.0);
    if imag_residual > imag_tolerance {
        return Err(Error::NumericalInconsistency {
            what: "imaginary part of the Fedosov trace".into(),
            residual: imag_residual,
            tolerance: imag_tolerance,
        });
    }
    Ok(IndexValue {
        value: sign * raw.re,
        imag_residual,
        n,
        radius,
        window,
        x0: phase.x0().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDims {
    /// Near-null right singular vectors of `f̂` localized in the window.
    pub ker_f: usize,
    /// Near-null left singular vectors (kernel of `f̂*`) localized in the window.
    pub ker_f_adj: usize,
    /// All singular values below `tol`, wherever the vectors live.
    pub below_tol: usize,
    /// Smallest singular values, ascending (at most eight).
    pub smallest: Vec<f64>,
    pub tol: f64,
    pub window: usize,
}

impl KernelDims {
    pub fn index(&self) -> i64 {
        self.ker_f as i64 - self.ker_f_adj as i64
    }
}

/// Counts the kernels of `f̂ = π⁻_γ(p) F π⁺_γ(p)` as a map `ran π⁺ → ran π⁻`.
///
/// On a finite box `f̂` is square, so every near-null right vector comes with a
/// near-null left vector; one of the two sits at the boundary, where the
/// truncated Dirac phase stops being a Fredholm symbol. Only vectors with at
/// least half their weight inside the window are counted.
pub fn kernel_dims(
    p: &SpectralProjector,
    phase: &DiracPhase,
    tol: f64,
    window: usize,
) -> Result<KernelDims> {
    if !(tol > 0.0) {
        return invalid("kernel tolerance must be positive");
    }
    let proj = p.projector();
    phase.check_op(proj.geometry(), proj.internal_dim())?;
    let signs = phase.clifford().grading_signs();
    let plus: Vec<usize> = (0..signs.len()).filter(|&a| signs[a] > 0.0).collect();
    let minus: Vec<usize> = (0..signs.len()).filter(|&a| signs[a] < 0.0).collect();
    let v = p.occupied();
    let k = v.ncols();
    let vh = adjoint(v.view());
    let mut f = Array2::<C64>::zeros((minus.len() * k, plus.len() * k));
    for (i, &a) in minus.iter().enumerate() {
        for (j, &b) in plus.iter().enumerate() {
            let Some(phi) = phase.phi(a, b) else {
                continue;
            };
            let mut scaled = v.clone();
            for (mut row, f) in scaled.axis_iter_mut(Axis(0)).zip(phi.iter()) {
                row.mapv_inplace(|z| z * f);
            }
            f.slice_mut(s![i * k..(i + 1) * k, j * k..(j + 1) * k])
                .assign(&vh.dot(&scaled));
        }
    }
    let rows = window_rows(phase.geometry(), phase.internal_dim(), window)?;
    if f.is_empty() {
        return Ok(KernelDims {
            ker_f: 0,
            ker_f_adj: 0,
            below_tol: 0,
            smallest: Vec::new(),
            tol,
            window,
        });
    }
    let (u, sv, vt) = svd(f.view())?;
    for &x in sv.iter() {
        if x >= tol / 10.0 && x <= tol * 10.0 {
            return Err(Error::AmbiguousKernel {
                tol,
                singular_value: x,
            });
        }
    }
    let interior = |coeffs: ndarray::ArrayView1<C64>, blocks: usize| -> f64 {
        let mut inside = 0.0;
        let mut total = 0.0;
        for blk in 0..blocks {
            let c = coeffs.slice(s![blk * k..(blk + 1) * k]);
            let psi = v.dot(&c);
            total += psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
            inside += rows.iter().map(|&r| psi[r].norm_sqr()).sum::<f64>();
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    };
    let mut ker_f = 0;
    let mut ker_f_adj = 0;
    let mut below_tol = 0;
    for (idx, &x) in sv.iter().enumerate() {
        if x >= tol {
            continue;
        }
        below_tol += 1;
        let right = vt.row(idx).mapv(|z| z.conj());
        if interior(right.view(), plus.len()) >= 0.5 {
            ker_f += 1;
        }
        if interior(u.column(idx), minus.len()) >= 0.5 {
            ker_f_adj += 1;
        }
    }
    let mut smallest: Vec<f64> = sv.iter().rev().take(8).copied().collect();
    smallest.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(KernelDims {
        ker_f,
        ker_f_adj,
        below_tol,
        smallest,
        tol,
        window,
    })
}
