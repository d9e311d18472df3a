//! Finite-volume stand-ins for `ℓ²(ℤ^d)`: periodic tori and open boxes.
//!
//! Sites are enumerated lexicographically with the last axis running fastest.
//! On a torus with side `L` coordinates live in `0..L`; on a box of radius `R`
//! they live in `-R..=R`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeometryKind {
    Torus { lengths: Vec<usize> },
    Box { radius: usize },
}

#[derive(Clone)]
pub struct Geometry {
    d: usize,
    kind: GeometryKind,
    extents: Vec<usize>,
    coords: Vec<i64>,
}

impl PartialEq for Geometry {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.kind == other.kind
    }
}

impl fmt::Debug for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Geometry")
            .field("d", &self.d)
            .field("kind", &self.kind)
            .finish()
    }
}

impl Geometry {
    pub fn torus(lengths: &[usize]) -> Result<Self> {
        if lengths.is_empty() {
            return invalid("torus needs at least one axis");
        }
        if lengths.contains(&0) {
            return invalid(format!("torus lengths must be positive, got {lengths:?}"));
        }
        Ok(Self::build(
            lengths.len(),
            GeometryKind::Torus {
                lengths: lengths.to_vec(),
            },
        ))
    }

    /// Cubic torus with side `l` in `d` dimensions.
    pub fn cubic_torus(d: usize, l: usize) -> Result<Self> {
        Self::torus(&vec![l; d])
    }

    /// Open box `[-R, R]^d ∩ ℤ^d`.
    pub fn open_box(d: usize, radius: usize) -> Result<Self> {
        if d == 0 {
            return invalid("box needs at least one axis");
        }
        Ok(Self::build(d, GeometryKind::Box { radius }))
    }

    fn build(d: usize, kind: GeometryKind) -> Self {
        let extents: Vec<usize> = match &kind {
            GeometryKind::Torus { lengths } => lengths.clone(),
            GeometryKind::Box { radius } => vec![2 * radius + 1; d],
        };
        let offset: i64 = match &kind {
            GeometryKind::Torus { .. } => 0,
            GeometryKind::Box { radius } => -(*radius as i64),
        };
        let n: usize = extents.iter().product();
        let mut coords = Vec::with_capacity(n * d);
        let mut cur = vec![0usize; d];
        for _ in 0..n {
            coords.extend(cur.iter().map(|&c| c as i64 + offset));
            for ax in (0..d).rev() {
                cur[ax] += 1;
                if cur[ax] < extents[ax] {
                    break;
                }
                cur[ax] = 0;
            }
        }
        Geometry {
            d,
            kind,
            extents,
            coords,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> &GeometryKind {
        &self.kind
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.kind, GeometryKind::Torus { .. })
    }

    pub fn is_box(&self) -> bool {
        matches!(self.kind, GeometryKind::Box { .. })
    }

    /// Torus side lengths; `None` on a box.
    pub fn lengths(&self) -> Option<&[usize]> {
        match &self.kind {
            GeometryKind::Torus { lengths } => Some(lengths),
            GeometryKind::Box { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<usize> {
        match self.kind {
            GeometryKind::Box { radius } => Some(radius),
            GeometryKind::Torus { .. } => None,
        }
    }

    /// Short label for records, e.g. `torus(24x24)` or `box(R=12,d=2)`.
    pub fn label(&self) -> String {
        match &self.kind {
            GeometryKind::Torus { lengths } => {
                let parts: Vec<String> = lengths.iter().map(|l| l.to_string()).collect();
                format!("torus({})", parts.join("x"))
            }
            GeometryKind::Box { radius } => format!("box(R={radius},d={})", self.d),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.coords[site * self.d..(site + 1) * self.d]
    }

    /// Site at the given coordinates; torus coordinates are reduced mod `L`.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.d {
            return None;
        }
        let mut idx = 0usize;
        for ax in 0..self.d {
            let ext = self.extents[ax] as i64;
            let local = match &self.kind {
                GeometryKind::Torus { .. } => x[ax].rem_euclid(ext),
                GeometryKind::Box { radius } => {
                    let v = x[ax] + *radius as i64;
                    if v < 0 || v >= ext {
                        return None;
                    }
                    v
                }
            };
            idx = idx * self.extents[ax] + local as usize;
        }
        Some(idx)
    }

    /// Site reached from `site` by adding `q`; `None` when it leaves a box.
    pub fn translate(&self, site: usize, q: &[i64]) -> Option<usize> {
        let x: Vec<i64> = self.coords(site).iter().zip(q).map(|(a, b)| a + b).collect();
        self.index_of(&x)
    }

    /// Hopping vector `x - y`, reduced to the minimal image `(-L/2, L/2]` on a torus.
    pub fn displacement(&self, x: usize, y: usize) -> Vec<i64> {
        let cx = self.coords(x);
        let cy = self.coords(y);
        match &self.kind {
            GeometryKind::Torus { lengths } => cx
                .iter()
                .zip(cy)
                .zip(lengths)
                .map(|((a, b), &l)| minimal_image(a - b, l))
                .collect(),
            GeometryKind::Box { .. } => cx.iter().zip(cy).map(|(a, b)| a - b).collect(),
        }
    }

    /// Component `j` of [`Self::displacement`], without allocating.
    pub fn displacement_axis(&self, x: usize, y: usize, j: usize) -> i64 {
        let diff = self.coords[x * self.d + j] - self.coords[y * self.d + j];
        match &self.kind {
            GeometryKind::Torus { lengths } => minimal_image(diff, lengths[j]),
            GeometryKind::Box { .. } => diff,
        }
    }

    /// Sites of a box with `max_j |x_j| <= r`.
    pub fn window(&self, r: usize) -> Result<Vec<usize>> {
        let Some(radius) = self.radius() else {
            return invalid("interior windows are defined on box geometries only");
        };
        if r > radius {
            return invalid(format!("window radius {r} exceeds box radius {radius}"));
        }
        Ok((0..self.n_sites())
            .filter(|&s| self.coords(s).iter().all(|c| c.unsigned_abs() as usize <= r))
            .collect())
    }

    /// Largest `|q_j|` that is representable without minimal-image ambiguity.
    pub fn admits_hopping(&self, q: &[i64]) -> bool {
        match &self.kind {
            GeometryKind::Torus { lengths } => q
                .iter()
                .zip(lengths)
                .all(|(qj, &l)| 2 * qj.unsigned_abs() < l as u64),
            GeometryKind::Box { .. } => true,
        }
    }
}

/// Representative of `v mod L` in `(-L/2, L/2]`.
pub fn minimal_image(v: i64, l: usize) -> i64 {
    let l = l as i64;
    let r = v.rem_euclid(l);
    if 2 * r > l {
        r - l
    } else {
        r
    }
}
