//! Grid fields of small matrices over the fundamental domain, seam transport
//! through factors of automorphy, and the 4th-order derivative operators.
//!
//! Fields are stored flat in row-major (k_y, j_x, row, col) order. Derivative
//! stencils read from a ghost-padded copy whose ghost cells are filled by the
//! transport rule of the field's transformation type, so differences across
//! the seam see a globally smooth object.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Error;
use crate::smallmat;
use crate::torus::{dz_coeffs, dzbar_coeffs, dzbar_dz_coeffs, TorusDomain, D1_W, D2_W};

const ZERO: C64 = C64::new(0.0, 0.0);

/// How a field transforms when carried across a lattice seam by the
/// multiplier A of that seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Base function: plain periodic wrap.
    Scalar,
    /// s(z + l) = A(z) s(z).
    Section,
    /// phi(z + l) = A(z) phi(z) A(z)^-1.
    Endomorphism,
    /// h(z + l) = A(z)^-* h(z) A(z)^-1.
    Metric,
}

/// Dense field of rows x cols complex matrices on an N x N grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    n: usize,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl MatrixField {
    pub fn zeros(n: usize, rows: usize, cols: usize) -> Self {
        MatrixField {
            n,
            rows,
            cols,
            data: vec![ZERO; n * n * rows * cols],
        }
    }

    pub fn constant(n: usize, rows: usize, cols: usize, value: C64) -> Self {
        MatrixField {
            n,
            rows,
            cols,
            data: vec![value; n * n * rows * cols],
        }
    }

    /// Identity endomorphism field.
    pub fn identity(n: usize, rank: usize) -> Self {
        let mut f = Self::zeros(n, rank, rank);
        for cell in 0..n * n {
            for r in 0..rank {
                f.data[(cell * rank + r) * rank + r] = C64::new(1.0, 0.0);
            }
        }
        f
    }

    pub fn from_fn<F>(n: usize, rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(usize, usize, usize, usize) -> C64,
    {
        let mut out = Self::zeros(n, rows, cols);
        let m = rows * cols;
        for k in 0..n {
            for j in 0..n {
                let base = (k * n + j) * m;
                for r in 0..rows {
                    for c in 0..cols {
                        out.data[base + r * cols + c] = f(j, k, r, c);
                    }
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries_per_cell(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell(&self, j: usize, k: usize) -> &[C64] {
        let m = self.rows * self.cols;
        let base = (k * self.n + j) * m;
        &self.data[base..base + m]
    }

    pub fn cell_mut(&mut self, j: usize, k: usize) -> &mut [C64] {
        let m = self.rows * self.cols;
        let base = (k * self.n + j) * m;
        &mut self.data[base..base + m]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Largest entrywise difference against another field of equal shape.
    pub fn max_diff(&self, other: &MatrixField) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest Frobenius norm over cells.
    pub fn max_cell_frob(&self) -> f64 {
        let m = self.rows * self.cols;
        self.data
            .chunks_exact(m)
            .map(smallmat::frob_norm)
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// One seam multiplier with its precomputed inverse.
#[derive(Debug, Clone)]
struct Mult {
    m: Vec<C64>,
    minv: Vec<C64>,
}

/// Precomputed seam multipliers for a (bundle, domain) pair: two ghost layers
/// on each side per axis. The y-direction tables extend over ghost columns so
/// corner cells can be filled by composing x- then y-transport (consistent by
/// the cocycle identity).
#[derive(Debug, Clone)]
pub struct SeamTable {
    n: usize,
    rank: usize,
    trivial: bool,
    x_fwd: Vec<Mult>,
    x_bwd: Vec<Mult>,
    y_fwd: Vec<Mult>,
    y_bwd: Vec<Mult>,
}

impl SeamTable {
    /// Periodic wrap for base scalars and fields on the trivial bundle.
    pub fn trivial(n: usize) -> Self {
        SeamTable {
            n,
            rank: 1,
            trivial: true,
            x_fwd: Vec::new(),
            x_bwd: Vec::new(),
            y_fwd: Vec::new(),
            y_bwd: Vec::new(),
        }
    }

    /// Build the transport tables from multiplier evaluators.
    pub fn build<F, G>(domain: &TorusDomain, rank: usize, eval_a1: F, eval_atau: G) -> Result<Self, Error>
    where
        F: Fn(C64) -> Vec<C64>,
        G: Fn(C64) -> Vec<C64>,
    {
        let n = domain.n();
        let rr = rank * rank;
        let mk = |vals: Vec<C64>| -> Result<Mult, Error> {
            if vals.len() != rr {
                return Err(Error::ShapeMismatch(format!(
                    "multiplier evaluation returned {} entries for rank {rank}",
                    vals.len()
                )));
            }
            let mut inv = vec![ZERO; rr];
            if !smallmat::inverse(rank, &vals, &mut inv) {
                return Err(Error::InvalidBundle(
                    "multiplier is singular at a seam sample point".into(),
                ));
            }
            Ok(Mult { m: vals, minv: inv })
        };

        let mut x_fwd = Vec::with_capacity(2 * n);
        let mut x_bwd = Vec::with_capacity(2 * n);
        for g in 0..2isize {
            for k in 0..n as isize {
                x_fwd.push(mk(eval_a1(domain.point(g, k)))?);
                x_bwd.push(mk(eval_a1(domain.point(-1 - g, k)))?);
            }
        }
        let w = n + 4;
        let mut y_fwd = Vec::with_capacity(2 * w);
        let mut y_bwd = Vec::with_capacity(2 * w);
        for g in 0..2isize {
            for jp in 0..w as isize {
                let j = jp - 2;
                y_fwd.push(mk(eval_atau(domain.point(j, g)))?);
                y_bwd.push(mk(eval_atau(domain.point(j, -1 - g)))?);
            }
        }
        Ok(SeamTable {
            n,
            rank,
            trivial: false,
            x_fwd,
            x_bwd,
            y_fwd,
            y_bwd,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

/// Ghost-padded copy of a field: (N+4) x (N+4) cells.
#[derive(Debug, Clone)]
pub struct Padded {
    n: usize,
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Padded {
    pub fn empty() -> Self {
        Padded {
            n: 0,
            rows: 0,
            cols: 0,
            data: Vec::new(),
        }
    }

    #[inline]
    pub(crate) fn cell(&self, j: isize, k: isize) -> &[C64] {
        let w = self.n + 4;
        let m = self.rows * self.cols;
        let base = (((k + 2) as usize) * w + (j + 2) as usize) * m;
        &self.data[base..base + m]
    }

    fn cell_mut(&mut self, j: isize, k: isize) -> &mut [C64] {
        let w = self.n + 4;
        let m = self.rows * self.cols;
        let base = (((k + 2) as usize) * w + (j + 2) as usize) * m;
        &mut self.data[base..base + m]
    }
}

fn apply_fwd(kind: FieldKind, mult: &Mult, rank: usize, v: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    match kind {
        FieldKind::Scalar => out.copy_from_slice(v),
        FieldKind::Section => {
            for i in 0..rank {
                let mut acc = ZERO;
                for k in 0..rank {
                    acc += mult.m[i * rank + k] * v[k];
                }
                out[i] = acc;
            }
        }
        FieldKind::Endomorphism => {
            smallmat::mul(rank, &mult.m, v, scratch);
            smallmat::mul(rank, scratch, &mult.minv, out);
        }
        FieldKind::Metric => {
            // A^-* v A^-1
            smallmat::conjt_mul(rank, &mult.minv, v, scratch);
            smallmat::mul(rank, scratch, &mult.minv, out);
        }
    }
}

fn apply_bwd(kind: FieldKind, mult: &Mult, rank: usize, v: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    match kind {
        FieldKind::Scalar => out.copy_from_slice(v),
        FieldKind::Section => {
            for i in 0..rank {
                let mut acc = ZERO;
                for k in 0..rank {
                    acc += mult.minv[i * rank + k] * v[k];
                }
                out[i] = acc;
            }
        }
        FieldKind::Endomorphism => {
            smallmat::mul(rank, &mult.minv, v, scratch);
            smallmat::mul(rank, scratch, &mult.m, out);
        }
        FieldKind::Metric => {
            // A^* v A with A evaluated at the ghost point
            smallmat::conjt_mul(rank, &mult.m, v, scratch);
            smallmat::mul(rank, scratch, &mult.m, out);
        }
    }
}

/// Fill `out` with the ghost-padded copy of `field` under the transport rule
/// of `kind`. Corner ghosts are produced by x-transport followed by
/// y-transport.
pub fn pad_into(field: &MatrixField, kind: FieldKind, seams: &SeamTable, out: &mut Padded) -> Result<(), Error> {
    let n = field.n;
    if seams.n != n {
        return Err(Error::ShapeMismatch(format!(
            "seam table resolution {} vs field {}",
            seams.n, n
        )));
    }
    let rank = field.rows;
    match kind {
        FieldKind::Scalar => {
            if field.rows != 1 || field.cols != 1 {
                return Err(Error::ShapeMismatch("scalar transport on a matrix field".into()));
            }
        }
        FieldKind::Section => {
            if field.cols != 1 || (!seams.trivial && field.rows != seams.rank) {
                return Err(Error::ShapeMismatch("section shape does not match bundle rank".into()));
            }
        }
        FieldKind::Endomorphism | FieldKind::Metric => {
            if field.rows != field.cols || (!seams.trivial && field.rows != seams.rank) {
                return Err(Error::ShapeMismatch(
                    "endomorphism/metric shape does not match bundle rank".into(),
                ));
            }
        }
    }

    let m = field.rows * field.cols;
    let w = n + 4;
    out.n = n;
    out.rows = field.rows;
    out.cols = field.cols;
    out.data.clear();
    out.data.resize(w * w * m, ZERO);

    // Interior rows.
    for k in 0..n {
        let src = &field.data[k * n * m..(k + 1) * n * m];
        let base = ((k + 2) * w + 2) * m;
        out.data[base..base + n * m].copy_from_slice(src);
    }

    let kind_is_trivial = seams.trivial || kind == FieldKind::Scalar;
    let mut scratch = vec![ZERO; m];
    let mut tmp = vec![ZERO; m];

    // x-direction ghosts for interior rows.
    for g in 0..2usize {
        for k in 0..n {
            if kind_is_trivial {
                tmp.copy_from_slice(field.cell(g, k));
                out.cell_mut(n as isize + g as isize, k as isize).copy_from_slice(&tmp);
                tmp.copy_from_slice(field.cell(n - 1 - g, k));
                out.cell_mut(-1 - g as isize, k as isize).copy_from_slice(&tmp);
            } else {
                apply_fwd(kind, &seams.x_fwd[g * n + k], rank, field.cell(g, k), &mut tmp, &mut scratch);
                out.cell_mut(n as isize + g as isize, k as isize).copy_from_slice(&tmp);
                apply_bwd(kind, &seams.x_bwd[g * n + k], rank, field.cell(n - 1 - g, k), &mut tmp, &mut scratch);
                out.cell_mut(-1 - g as isize, k as isize).copy_from_slice(&tmp);
            }
        }
    }

    // y-direction ghosts across the full padded width (corners included).
    for g in 0..2usize {
        for jp in 0..w {
            let j = jp as isize - 2;
            if kind_is_trivial {
                tmp.copy_from_slice(out.cell(j, g as isize));
                out.cell_mut(j, n as isize + g as isize).copy_from_slice(&tmp);
                tmp.copy_from_slice(out.cell(j, (n - 1 - g) as isize));
                out.cell_mut(j, -1 - g as isize).copy_from_slice(&tmp);
            } else {
                let src = out.cell(j, g as isize).to_vec();
                apply_fwd(kind, &seams.y_fwd[g * w + jp], rank, &src, &mut tmp, &mut scratch);
                out.cell_mut(j, n as isize + g as isize).copy_from_slice(&tmp);
                let src = out.cell(j, (n - 1 - g) as isize).to_vec();
                apply_bwd(kind, &seams.y_bwd[g * w + jp], rank, &src, &mut tmp, &mut scratch);
                out.cell_mut(j, -1 - g as isize).copy_from_slice(&tmp);
            }
        }
    }
    Ok(())
}

pub fn pad(field: &MatrixField, kind: FieldKind, seams: &SeamTable) -> Result<Padded, Error> {
    let mut p = Padded::empty();
    pad_into(field, kind, seams, &mut p)?;
    Ok(p)
}

/// Derive a padded scalar field cell-by-cell from a padded matrix field
/// (e.g. log det h, which is globally smooth when h is a metric).
pub(crate) fn map_padded_scalar(p: &Padded, mut f: impl FnMut(&[C64]) -> C64) -> Padded {
    let w = p.n + 4;
    let m = p.rows * p.cols;
    let mut out = Padded {
        n: p.n,
        rows: 1,
        cols: 1,
        data: Vec::with_capacity(w * w),
    };
    for cell in p.data.chunks_exact(m) {
        out.data.push(f(cell));
    }
    out
}

/// Wirtinger derivative d_z from a padded field.
pub fn d_z_padded(domain: &TorusDomain, p: &Padded) -> MatrixField {
    first_derivative(domain, p, dz_coeffs(domain.tau()))
}

/// Conjugate Wirtinger derivative d_zbar from a padded field.
pub fn d_zbar_padded(domain: &TorusDomain, p: &Padded) -> MatrixField {
    first_derivative(domain, p, dzbar_coeffs(domain.tau()))
}

pub fn d_z(domain: &TorusDomain, field: &MatrixField, kind: FieldKind, seams: &SeamTable) -> Result<MatrixField, Error> {
    Ok(d_z_padded(domain, &pad(field, kind, seams)?))
}

pub fn d_zbar(domain: &TorusDomain, field: &MatrixField, kind: FieldKind, seams: &SeamTable) -> Result<MatrixField, Error> {
    Ok(d_zbar_padded(domain, &pad(field, kind, seams)?))
}

fn first_derivative(_domain: &TorusDomain, p: &Padded, (cx, cy): (C64, C64)) -> MatrixField {
    let n = p.n;
    let m = p.rows * p.cols;
    let scale = n as f64; // 1/dx
    let wx: Vec<C64> = D1_W.iter().map(|&w| cx * (w * scale)).collect();
    let wy: Vec<C64> = D1_W.iter().map(|&w| cy * (w * scale)).collect();
    let mut out = MatrixField::zeros(n, p.rows, p.cols);
    out.data
        .par_chunks_mut(n * m)
        .enumerate()
        .for_each(|(k, row)| {
            let k = k as isize;
            for j in 0..n as isize {
                let dst = &mut row[(j as usize) * m..(j as usize + 1) * m];
                for g in 0..5usize {
                    let off = g as isize - 2;
                    let sx = p.cell(j + off, k);
                    let sy = p.cell(j, k + off);
                    let (a, b) = (wx[g], wy[g]);
                    if g == 2 {
                        continue; // center weight is zero
                    }
                    for idx in 0..m {
                        dst[idx] += a * sx[idx] + b * sy[idx];
                    }
                }
            }
        });
    out
}

/// Fused stencil pass returning (d_z f, d_zbar f, d_zbar d_z f) from one
/// padded buffer. The second-order part uses dedicated 4th-order second
/// derivative stencils, which also damp the Nyquist mode of the heat flow.
pub fn curvature_stencils(domain: &TorusDomain, p: &Padded) -> (MatrixField, MatrixField, MatrixField) {
    let n = p.n;
    let m = p.rows * p.cols;
    let tau = domain.tau();
    let nf = n as f64;
    let (zx, zy) = dz_coeffs(tau);
    let (bx, by) = dzbar_coeffs(tau);
    let (cxx, cyy, cxy) = dzbar_dz_coeffs(tau);
    let need_mixed = cxy.abs() > 1e-300;

    let wzx: Vec<C64> = D1_W.iter().map(|&w| zx * (w * nf)).collect();
    let wzy: Vec<C64> = D1_W.iter().map(|&w| zy * (w * nf)).collect();
    let wbx: Vec<C64> = D1_W.iter().map(|&w| bx * (w * nf)).collect();
    let wby: Vec<C64> = D1_W.iter().map(|&w| by * (w * nf)).collect();
    let wxx: Vec<f64> = D2_W.iter().map(|&w| cxx * w * nf * nf).collect();
    let wyy: Vec<f64> = D2_W.iter().map(|&w| cyy * w * nf * nf).collect();
    let wmix: Vec<f64> = D1_W.iter().map(|&w| w * nf).collect();

    let mut dz = MatrixField::zeros(n, p.rows, p.cols);
    let mut dzb = MatrixField::zeros(n, p.rows, p.cols);
    let mut dzz = MatrixField::zeros(n, p.rows, p.cols);
    let row_len = n * m;

    dz.data
        .par_chunks_mut(row_len)
        .zip(dzb.data.par_chunks_mut(row_len))
        .zip(dzz.data.par_chunks_mut(row_len))
        .enumerate()
        .for_each(|(k, ((r1, r2), r3))| {
            let k = k as isize;
            for j in 0..n as isize {
                let ju = j as usize;
                let d1 = &mut r1[ju * m..(ju + 1) * m];
                let d2 = &mut r2[ju * m..(ju + 1) * m];
                let d3 = &mut r3[ju * m..(ju + 1) * m];
                for g in 0..5usize {
                    let off = g as isize - 2;
                    let sx = p.cell(j + off, k);
                    let sy = p.cell(j, k + off);
                    let (az, ab, axx) = (wzx[g], wbx[g], wxx[g]);
                    let (cz, cb, cyy2) = (wzy[g], wby[g], wyy[g]);
                    for idx in 0..m {
                        let vx = sx[idx];
                        let vy = sy[idx];
                        if g != 2 {
                            d1[idx] += az * vx + cz * vy;
                            d2[idx] += ab * vx + cb * vy;
                        }
                        d3[idx] += axx * vx + cyy2 * vy;
                    }
                }
                if need_mixed {
                    for gx in 0..5usize {
                        if gx == 2 {
                            continue;
                        }
                        for gy in 0..5usize {
                            if gy == 2 {
                                continue;
                            }
                            let w = cxy * wmix[gx] * wmix[gy];
                            let src = p.cell(j + gx as isize - 2, k + gy as isize - 2);
                            for idx in 0..m {
                                d3[idx] += w * src[idx];
                            }
                        }
                    }
                }
            }
        });
    (dz, dzb, dzz)
}
