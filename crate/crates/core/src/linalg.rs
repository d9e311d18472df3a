//! Dense complex kernels shared by the lattice, crossed-product and index code.
//!
//! Matrix products go through ndarray's BLAS path. Hermitian eigenproblems call
//! LAPACK `zheevd` directly (divide and conquer), which is several times faster
//! than the `zheev` path exposed by ndarray-linalg at the sizes used here.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is read.
///
/// Eigenvalues are ascending; eigenvectors are the columns of the returned
/// (column-major) matrix.
pub fn eigh(h: ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (w, v) = zheevd(h, true)?;
    Ok((w, v))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: ArrayView2<C64>) -> Result<Array1<f64>> {
    Ok(zheevd(h, false)?.0)
}

fn zheevd(h: ArrayView2<C64>, vectors: bool) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "eigh needs a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let mut a = Array2::<C64>::zeros((n, n).f());
    a.assign(&h);
    let jobz: u8 = if vectors { b'V' } else { b'N' };
    // column-major storage of h: reading the lower triangle of the F-ordered copy
    let uplo: u8 = b'L';
    let n_i = n as i32;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;

    let mut work_q = [ZERO];
    let mut rwork_q = [0.0f64];
    let mut iwork_q = [0i32];
    let query = -1i32;
    unsafe {
        lapack_sys::zheevd_(
            &jobz as *const u8 as *const _,
            &uplo as *const u8 as *const _,
            &n_i,
            a.as_mut_ptr() as *mut _,
            &n_i,
            w.as_mut_ptr(),
            work_q.as_mut_ptr() as *mut _,
            &query,
            rwork_q.as_mut_ptr(),
            &query,
            iwork_q.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    let lwork = work_q[0].re.max(1.0) as i32;
    let lrwork = rwork_q[0].max(1.0) as i32;
    let liwork = iwork_q[0].max(1);
    let mut work = vec![ZERO; lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz as *const u8 as *const _,
            &uplo as *const u8 as *const _,
            &n_i,
            a.as_mut_ptr() as *mut _,
            &n_i,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    Ok((Array1::from(w), a))
}

/// Thin SVD `a = u diag(s) vt`, singular values descending.
pub fn svd(a: ArrayView2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    let (u, s, vt) = a.to_owned().svddc(JobSvd::Some)?;
    match (u, vt) {
        (Some(u), Some(vt)) => Ok((u, s, vt)),
        _ => Err(Error::Lapack {
            routine: "zgesdd",
            info: -1,
        }),
    }
}

pub fn adjoint(a: ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn trace(a: ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: ArrayView2<C64>, b: ArrayView2<C64>) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for (i, row) in a.axis_iter(Axis(0)).enumerate() {
        let col = b.column(i);
        for (x, y) in row.iter().zip(col.iter()) {
            acc += x * y;
        }
    }
    acc
}

/// Diagonal entries `(a b)_{rr}` for the listed rows only.
pub fn product_diagonal(a: ArrayView2<C64>, b: ArrayView2<C64>, rows: &[usize]) -> Vec<C64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let picked = a.select(Axis(0), rows);
    let cols = b.select(Axis(1), rows);
    picked
        .axis_iter(Axis(0))
        .zip(cols.axis_iter(Axis(1)))
        .map(|(r, c)| r.iter().zip(c.iter()).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn frobenius_norm(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Largest singular value.
pub fn operator_norm(a: ArrayView2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    // a^dagger a is Hermitian PSD; its top eigenvalue is the squared norm
    let gram = if a.nrows() >= a.ncols() {
        adjoint(a).dot(&a)
    } else {
        a.dot(&adjoint(a))
    };
    let w = eigvalsh(gram.view())?;
    Ok(w[w.len() - 1].max(0.0).sqrt())
}

/// Spectral norm of a Hermitian matrix, `max |eigenvalue|`.
pub fn hermitian_norm(a: ArrayView2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let w = eigvalsh(a)?;
    Ok(w[0].abs().max(w[w.len() - 1].abs()))
}

/// Copy of the `(i, j)` block of size `bs x bs`.
pub fn block(a: ArrayView2<C64>, i: usize, j: usize, bs: usize) -> Array2<C64> {
    a.slice(s![i * bs..(i + 1) * bs, j * bs..(j + 1) * bs]).to_owned()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let f = a[[i, j]];
            if f == ZERO {
                continue;
            }
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&b.mapv(|z| z * f));
        }
    }
    out
}
