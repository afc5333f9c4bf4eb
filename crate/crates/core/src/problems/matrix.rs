use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};

/// Spectrum shape requested from [`conditioned_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    /// `U·diag(σ)·Vᵀ` from the SVD of a Gaussian matrix.
    General,
    /// `Q·diag(λ)·Qᵀ` with `λ > 0`.
    SymPosDef,
    /// `Q·diag(−λ)·Qᵀ` with `λ > 0`.
    SymNegDef,
}

/// Deterministic RNG used for every generated quantity.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Splits one user seed into independent per-purpose seeds (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal_vector<R: Rng>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Log-uniform spectrum on `[1, kappa]`, sorted descending, extremes pinned.
fn log_uniform_spectrum<R: Rng>(rng: &mut R, len: usize, kappa: f64) -> Vec<f64> {
    let log_k = kappa.ln();
    let mut values: Vec<f64> = (0..len)
        .map(|i| match i {
            0 => kappa,
            i if i + 1 == len => 1.0,
            _ => (rng.random::<f64>() * log_k).exp(),
        })
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Random matrix whose singular values (or eigenvalue magnitudes) are
/// log-uniform in `[1, kappa]`, with the extremes pinned so the realized
/// condition number is exactly `kappa`.
pub fn conditioned_matrix(rows: usize, cols: usize, kappa: f64, seed: u64, mode: MatrixMode) -> Result<DMatrix<f64>> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(SaddleError::InvalidParameter(format!(
            "condition number must be a finite value >= 1, got {kappa}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(SaddleError::InvalidParameter(
            "matrix dimensions must be positive".into(),
        ));
    }
    let rank = rows.min(cols);
    if rank == 1 && kappa > 1.0 {
        return Err(SaddleError::InvalidParameter(
            "a rank-one spectrum cannot realize a condition number above 1".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    match mode {
        MatrixMode::General => {
            let g = gaussian_matrix(&mut rng, rows, cols);
            let spectrum = log_uniform_spectrum(&mut rng, rank, kappa);
            let svd = g.svd(true, true);
            let u = svd.u.expect("requested U");
            let v_t = svd.v_t.expect("requested Vᵀ");
            let mut scaled = u;
            for (j, s) in spectrum.iter().enumerate() {
                scaled.column_mut(j).scale_mut(*s);
            }
            Ok(scaled * v_t)
        }
        MatrixMode::SymPosDef | MatrixMode::SymNegDef => {
            if rows != cols {
                return Err(SaddleError::InvalidParameter(format!(
                    "symmetric modes need a square shape, got {rows}x{cols}"
                )));
            }
            let g = gaussian_matrix(&mut rng, rows, cols);
            let spectrum = log_uniform_spectrum(&mut rng, rank, kappa);
            let q = g.qr().q();
            let sign = if mode == MatrixMode::SymNegDef { -1.0 } else { 1.0 };
            let mut scaled = q.clone();
            for (j, s) in spectrum.iter().enumerate() {
                scaled.column_mut(j).scale_mut(sign * s);
            }
            let a = scaled * q.transpose();
            Ok((&a + a.transpose()) * 0.5)
        }
    }
}

/// 8-byte magic that opens every matrix dump.
pub const MATRIX_MAGIC: [u8; 8] = *b"SDLMTX01";

/// Writes `m` as a 16-byte header (magic, rows as u32 LE, cols as u32 LE)
/// followed by row-major little-endian f64 entries.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let io = |e| SaddleError::io(path, e);
    let rows = u32::try_from(m.nrows()).map_err(|_| SaddleError::InvalidInput("too many rows for dump".into()))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| SaddleError::InvalidInput("too many columns for dump".into()))?;
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    out.write_all(&MATRIX_MAGIC).map_err(io)?;
    out.write_all(&rows.to_le_bytes()).map_err(io)?;
    out.write_all(&cols.to_le_bytes()).map_err(io)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_all(&m[(i, j)].to_le_bytes()).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let io = |e| SaddleError::io(path, e);
    let mut input = BufReader::new(File::open(path).map_err(io)?);
    let mut header = [0u8; 16];
    input.read_exact(&mut header).map_err(io)?;
    if header[..8] != MATRIX_MAGIC {
        return Err(SaddleError::InvalidInput(format!(
            "{} is not a matrix dump",
            path.display()
        )));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut buf = [0u8; 8];
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        input.read_exact(&mut buf).map_err(io)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
