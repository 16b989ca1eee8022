use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> DenseMatrix<R> {
    pub fn new(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be at least 1x1"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![R::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = R::one();
        }
        Ok(m)
    }

    /// Fills a matrix with i.i.d. standard normal entries.
    pub fn standard_normal<G: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut G) -> Result<Self> {
        let data = (0..rows * cols)
            .map(|_| R::of(StandardNormal.sample(rng)))
            .collect();
        Self::new(rows, cols, data)
    }

    /// Fills a matrix with i.i.d. uniform entries on [-1, 1).
    pub fn uniform<G: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut G) -> Result<Self> {
        let data = (0..rows * cols)
            .map(|_| R::of(rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    /// `self * x` for a column vector `x`.
    pub fn matvec(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matrix has {} columns, vector has {} entries",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(R::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix<R>) -> Result<DenseMatrix<R>> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![R::zero(); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == R::zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = *d + a * *s;
                }
            }
        }
        DenseMatrix::new(self.rows, other.cols, out)
    }

    /// Vertical stack of row slices taken from `self`.
    pub fn take_rows(&self, indices: &[usize]) -> Result<DenseMatrix<R>> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::Dimension(format!("row {i} out of {}", self.rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix::new(indices.len(), self.cols, data)
    }
}

const BIN_MAGIC: &[u8; 4] = b"HCMM";
const BIN_VERSION: u32 = 1;

impl DenseMatrix<f64> {
    /// Writes the CSV format: a literal `rows,cols` header line, a line with
    /// the two counts, then one comma-separated line per matrix row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        writeln!(w, "rows,cols")?;
        writeln!(w, "{},{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<F: Read>(reader: F) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MatrixFile("empty file".into()))??;
        if header.trim() != "rows,cols" {
            return Err(Error::MatrixFile(format!(
                "expected header `rows,cols`, got `{header}`"
            )));
        }
        let dims = lines
            .next()
            .ok_or_else(|| Error::MatrixFile("missing dimension line".into()))??;
        let mut parts = dims.trim().split(',');
        let rows: usize = parse_field(parts.next(), "rows")?;
        let cols: usize = parse_field(parts.next(), "cols")?;
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for field in line.trim().split(',') {
                let value: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::MatrixFile(format!("bad float `{field}`")))?;
                data.push(value);
            }
        }
        DenseMatrix::new(rows, cols, data)
    }

    /// Writes the binary format: a 16-byte header (magic `HCMM`, u32 version,
    /// u32 rows, u32 cols, all little-endian) followed by row-major f64
    /// entries, little-endian.
    pub fn write_bin<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        w.write_all(BIN_MAGIC)?;
        w.write_all(&BIN_VERSION.to_le_bytes())?;
        w.write_all(&(self.rows as u32).to_le_bytes())?;
        w.write_all(&(self.cols as u32).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_bin<F: Read>(mut reader: F) -> Result<Self> {
        let mut header = [0u8; 16];
        reader.read_exact(&mut header)?;
        if &header[0..4] != BIN_MAGIC {
            return Err(Error::MatrixFile("bad magic; not an HCMM matrix file".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != BIN_VERSION {
            return Err(Error::MatrixFile(format!("unsupported version {version}")));
        }
        let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let mut data = vec![0f64; rows * cols];
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            reader.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        DenseMatrix::new(rows, cols, data)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_bin_file(&self, path: &Path) -> Result<()> {
        self.write_bin(std::fs::File::create(path)?)
    }

    pub fn read_bin_file(path: &Path) -> Result<Self> {
        Self::read_bin(std::fs::File::open(path)?)
    }
}

fn parse_field(field: Option<&str>, name: &str) -> Result<usize> {
    field
        .and_then(|f| f.trim().parse().ok())
        .ok_or_else(|| Error::MatrixFile(format!("bad {name} field")))
}
