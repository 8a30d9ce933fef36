//! File formats for grids and spectra.
//!
//! * Binary grid: little-endian `u64` dimension `m`, `m` little-endian `u64`
//!   sizes, then `∏ n_j` pairs of little-endian `f64` (re, im), axis 0
//!   fastest.
//! * Grid CSV: columns `i1..im, re, im`.
//! * Spectrum CSV: columns `k1..km, re, im`, rows in lexicographic order.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{GridFunction, Spectrum};

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_grid_binary<W: Write>(grid: &GridFunction, mut w: W) -> Result<()> {
    w.write_all(&(grid.dims() as u64).to_le_bytes())?;
    for &n in grid.sizes() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for z in grid.samples() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::Parse(format!("truncated grid header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_grid_binary<R: Read>(mut r: R) -> Result<GridFunction> {
    let dims = read_u64(&mut r)? as usize;
    if dims == 0 || dims > 16 {
        return Err(Error::Parse(format!("implausible dimension {dims} in grid header")));
    }
    let sizes = (0..dims).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 16 != 0 {
        return Err(Error::Parse("sample payload is not a whole number of complex values".into()));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    GridFunction::new(sizes, samples)
}

fn header(prefix: &str, dims: usize) -> Vec<String> {
    (1..=dims).map(|j| format!("{prefix}{j}")).chain(["re".into(), "im".into()]).collect()
}

pub fn write_grid_csv<W: Write>(grid: &GridFunction, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header("i", grid.dims())).map_err(csv_err)?;
    for (flat, z) in grid.samples().iter().enumerate() {
        let mut row: Vec<String> = grid.index_of(flat).iter().map(|i| i.to_string()).collect();
        row.push(z.re.to_string());
        row.push(z.im.to_string());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_rows<R: Read>(r: R, prefix: char) -> Result<(usize, Vec<(Vec<i64>, Complex64)>)> {
    let mut reader = csv::Reader::from_reader(r);
    let head = reader.headers().map_err(csv_err)?.clone();
    let dims = head.len().saturating_sub(2);
    let expected = (1..=dims).map(|j| format!("{prefix}{j}")).chain(["re".into(), "im".into()]);
    if dims == 0 || !head.iter().map(str::trim).eq(expected) {
        return Err(Error::Parse(format!("expected columns {prefix}1..{prefix}m, re, im")));
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let idx = (0..dims)
            .map(|j| rec[j].trim().parse::<i64>().map_err(|e| Error::Parse(format!("index `{}`: {e}", &rec[j]))))
            .collect::<Result<Vec<_>>>()?;
        let num = |j: usize| rec[j].trim().parse::<f64>().map_err(|e| Error::Parse(format!("value `{}`: {e}", &rec[j])));
        rows.push((idx, Complex64::new(num(dims)?, num(dims + 1)?)));
    }
    Ok((dims, rows))
}

pub fn read_grid_csv<R: Read>(r: R) -> Result<GridFunction> {
    let (dims, rows) = parse_rows(r, 'i')?;
    let mut sizes = vec![0usize; dims];
    for (idx, _) in &rows {
        for (s, &i) in sizes.iter_mut().zip(idx) {
            if i < 0 {
                return Err(Error::Parse(format!("negative grid index {i}")));
            }
            *s = (*s).max(i as usize + 1);
        }
    }
    let total: usize = sizes.iter().product();
    if rows.len() != total {
        return Err(Error::SampleCount { expected: total, actual: rows.len() });
    }
    let mut samples = vec![None; total];
    for (idx, z) in rows {
        let mut flat = 0;
        for (j, &i) in idx.iter().enumerate().rev() {
            flat = flat * sizes[j] + i as usize;
        }
        if samples[flat].replace(z).is_some() {
            return Err(Error::Parse(format!("duplicate grid index {idx:?}")));
        }
    }
    GridFunction::new(sizes, samples.into_iter().map(|z| z.expect("every index filled")).collect())
}

pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header("k", spectrum.dims())).map_err(csv_err)?;
    for (k, a) in spectrum.iter() {
        let mut row: Vec<String> = k.iter().map(|v| v.to_string()).collect();
        row.push(a.re.to_string());
        row.push(a.im.to_string());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Spectrum> {
    let (dims, rows) = parse_rows(r, 'k')?;
    Spectrum::from_entries(dims, rows)
}
