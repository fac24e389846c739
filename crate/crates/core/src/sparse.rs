//! Thin helpers around `sprs` CSR matrices.

use sprs::{CsMat, TriMat};

pub type SpMat = CsMat<f64>;

/// Triplet accumulator; duplicate entries are summed on conversion.
pub struct Triplets {
    inner: TriMat<f64>,
}

impl Triplets {
    pub fn new(rows: usize, cols: usize) -> Self {
        Triplets { inner: TriMat::new((rows, cols)) }
    }

    pub fn with_capacity(rows: usize, cols: usize, nnz: usize) -> Self {
        Triplets { inner: TriMat::with_capacity((rows, cols), nnz) }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        if val != 0.0 {
            self.inner.add_triplet(row, col, val);
        }
    }

    /// Add every entry of `block` shifted by the given offsets.
    pub fn push_block(&mut self, row0: usize, col0: usize, block: &SpMat) {
        for (v, (r, c)) in block.iter() {
            self.push(row0 + r, col0 + c, *v);
        }
    }

    pub fn into_csr(self) -> SpMat {
        self.inner.to_csr()
    }
}

pub fn zeros(rows: usize, cols: usize) -> SpMat {
    CsMat::zero((rows, cols))
}

pub fn identity(n: usize) -> SpMat {
    CsMat::eye(n)
}

pub fn diag(values: &[f64]) -> SpMat {
    let n = values.len();
    let mut t = Triplets::with_capacity(n, n, n);
    for (i, v) in values.iter().enumerate() {
        t.push(i, i, *v);
    }
    t.into_csr()
}

pub fn matvec(a: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.cols(), x.len(), "matvec dimension mismatch");
    let a = ensure_csr(a);
    a.outer_iterator().map(|row| row.iter().map(|(j, v)| v * x[j]).sum()).collect()
}

/// `D * A` for a diagonal `D` given by `scale`.
pub fn scale_rows(a: &SpMat, scale: &[f64]) -> SpMat {
    assert_eq!(a.rows(), scale.len());
    let mut out = ensure_csr(a);
    for (i, mut row) in out.outer_iterator_mut().enumerate() {
        for (_, v) in row.iter_mut() {
            *v *= scale[i];
        }
    }
    out
}

/// `A * D` for a diagonal `D` given by `scale`.
pub fn scale_cols(a: &SpMat, scale: &[f64]) -> SpMat {
    assert_eq!(a.cols(), scale.len());
    let mut out = ensure_csr(a);
    for mut row in out.outer_iterator_mut() {
        for (j, v) in row.iter_mut() {
            *v *= scale[j];
        }
    }
    out
}

pub fn mul(a: &SpMat, b: &SpMat) -> SpMat {
    assert_eq!(a.cols(), b.rows(), "matrix product dimension mismatch");
    let p = &ensure_csr(a) * &ensure_csr(b);
    ensure_csr(&p)
}

pub fn add(a: &SpMat, b: &SpMat) -> SpMat {
    assert_eq!(a.shape(), b.shape(), "matrix sum dimension mismatch");
    let s = &ensure_csr(a) + &ensure_csr(b);
    ensure_csr(&s)
}

pub fn sub(a: &SpMat, b: &SpMat) -> SpMat {
    add(a, &scale(b, -1.0))
}

pub fn scale(a: &SpMat, s: f64) -> SpMat {
    a.map(|v| v * s)
}

pub fn transpose(a: &SpMat) -> SpMat {
    a.transpose_view().to_csr()
}

pub fn ensure_csr(a: &SpMat) -> SpMat {
    if a.is_csr() {
        a.clone()
    } else {
        a.to_csr()
    }
}

/// Expand a scalar operator to act on interleaved 2-vectors: every entry
/// `a_ij` becomes the block `a_ij * I_2`.
pub fn kron_i2(a: &SpMat) -> SpMat {
    let mut t = Triplets::with_capacity(2 * a.rows(), 2 * a.cols(), 2 * a.nnz());
    for (v, (i, j)) in a.iter() {
        t.push(2 * i, 2 * j, *v);
        t.push(2 * i + 1, 2 * j + 1, *v);
    }
    t.into_csr()
}

/// Stack matrices with equal column count on top of each other.
pub fn vstack(blocks: &[&SpMat]) -> SpMat {
    let cols = blocks.first().map_or(0, |b| b.cols());
    let rows: usize = blocks.iter().map(|b| b.rows()).sum();
    let nnz: usize = blocks.iter().map(|b| b.nnz()).sum();
    let mut t = Triplets::with_capacity(rows, cols, nnz);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.cols(), cols, "vstack column mismatch");
        t.push_block(r0, 0, b);
        r0 += b.rows();
    }
    t.into_csr()
}

/// Assemble a block matrix from rows of blocks. Block rows share their row
/// count and block columns their column count.
pub fn block_matrix(blocks: &[&[&SpMat]]) -> SpMat {
    let rows: usize = blocks.iter().map(|r| r[0].rows()).sum();
    let cols: usize = blocks[0].iter().map(|b| b.cols()).sum();
    let nnz: usize = blocks.iter().flat_map(|r| r.iter()).map(|b| b.nnz()).sum();
    let mut t = Triplets::with_capacity(rows, cols, nnz);
    let mut r0 = 0;
    for row in blocks {
        let mut c0 = 0;
        for b in row.iter() {
            assert_eq!(b.rows(), row[0].rows(), "block row height mismatch");
            t.push_block(r0, c0, b);
            c0 += b.cols();
        }
        assert_eq!(c0, cols, "block column width mismatch");
        r0 += row[0].rows();
    }
    t.into_csr()
}

/// Extract the sub-block `rows x cols` (half-open ranges).
pub fn sub_block(a: &SpMat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> SpMat {
    let a = ensure_csr(a);
    let mut t = Triplets::new(rows.len(), cols.len());
    for r in rows.clone() {
        if let Some(row) = a.outer_view(r) {
            for (c, v) in row.iter() {
                if cols.contains(&c) {
                    t.push(r - rows.start, c - cols.start, *v);
                }
            }
        }
    }
    t.into_csr()
}

pub fn max_abs(a: &SpMat) -> f64 {
    a.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Dense copy, for small oracle comparisons.
pub fn to_dense(a: &SpMat) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; a.cols()]; a.rows()];
    for (v, (i, j)) in a.iter() {
        d[i][j] += *v;
    }
    d
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Write a matrix in coordinate text format: one `row col value` line per
/// stored entry, preceded by a `rows cols nnz` header.
pub fn write_coo<W: std::io::Write>(a: &SpMat, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (v, (i, j)) in a.iter() {
        writeln!(w, "{i} {j} {v:.17e}")?;
    }
    Ok(())
}
