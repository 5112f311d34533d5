//! CSV and JSON file formats.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`), enough for
//! bit-exact round-trips; lines end with `\n`. Dataset CSV carries a
//! mandatory header `y,z1_1,...` whose column names encode the block
//! layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{ensure_dim, ensure_domain, Error, Result};
use crate::estimator::Dataset;

/// 17-significant-digit scientific form; round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("bad float '{s}'")))
}

/// Column names `z1_1, ..., z1_d1, z2_1, ...` for the block layout.
pub fn z_column_names(block_dims: &[usize]) -> Vec<String> {
    let mut names = Vec::new();
    for (j, &dj) in block_dims.iter().enumerate() {
        for k in 1..=dj {
            names.push(format!("z{}_{}", j + 1, k));
        }
    }
    names
}

/// Write a dataset with the `y, z1_1, ...` header.
pub fn write_dataset_csv(path: &Path, data: &Dataset, block_dims: &[usize]) -> Result<()> {
    ensure_dim(
        block_dims.iter().sum::<usize>() == data.width(),
        "block dims do not match dataset width",
    )?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["y".to_string()];
    header.extend(z_column_names(block_dims));
    w.write_record(&header)?;
    for t in 0..data.len() {
        let mut rec = Vec::with_capacity(1 + data.width());
        rec.push(fmt_float(data.y()[t]));
        rec.extend(data.z_row(t).iter().map(|&v| fmt_float(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset; the block layout is recovered from the header names.
pub fn read_dataset_csv(path: &Path) -> Result<(Dataset, Vec<usize>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    ensure_domain(
        header.len() >= 2 && header.get(0) == Some("y"),
        "dataset CSV must start with a 'y' column",
    )?;
    let mut block_dims: Vec<usize> = Vec::new();
    for name in header.iter().skip(1) {
        let rest = name
            .strip_prefix('z')
            .ok_or_else(|| Error::InvalidConfig(format!("unexpected column '{name}'")))?;
        let (block, within) = rest
            .split_once('_')
            .ok_or_else(|| Error::InvalidConfig(format!("unexpected column '{name}'")))?;
        let block: usize = block
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unexpected column '{name}'")))?;
        let within: usize = within
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unexpected column '{name}'")))?;
        if block == block_dims.len() + 1 && within == 1 {
            block_dims.push(1);
        } else if block == block_dims.len() && within == block_dims[block - 1] + 1 {
            block_dims[block - 1] += 1;
        } else {
            return Err(Error::InvalidConfig(format!(
                "column '{name}' out of block order"
            )));
        }
    }
    let mut y = Vec::new();
    let mut z = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        ensure_dim(rec.len() == header.len(), "ragged dataset row")?;
        y.push(parse_float(&rec[0])?);
        z.push(
            rec.iter()
                .skip(1)
                .map(parse_float)
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok((Dataset::new(y, z)?, block_dims))
}

/// Read evaluation points with header `x1, ..., xr`.
pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    ensure_domain(width >= 1, "points CSV needs at least one column")?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        ensure_dim(rec.len() == width, "ragged points row")?;
        out.push(rec.iter().map(parse_float).collect::<Result<Vec<f64>>>()?);
    }
    Ok(out)
}

/// Write evaluation points and values: `x1..xr, value`.
pub fn write_values_csv(path: &Path, points: &[Vec<f64>], values: &[f64]) -> Result<()> {
    ensure_dim(points.len() == values.len(), "points/values length mismatch")?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let r = points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=r).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (p, v) in points.iter().zip(values) {
        let mut rec: Vec<String> = p.iter().map(|&x| fmt_float(x)).collect();
        rec.push(fmt_float(*v));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write an approximation-demo grid: `x, y, net_value, error`.
pub fn write_grid_csv(path: &Path, rows: &[(f64, f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["x", "y", "net_value", "error"])?;
    for &(x, y, v, e) in rows {
        w.write_record([fmt_float(x), fmt_float(y), fmt_float(v), fmt_float(e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_roundtrips_exactly() {
        for &x in &[
            0.1,
            -3.0e-17,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            123456.789012345678,
            2f64.powi(-53),
        ] {
            let s = fmt_float(x);
            assert_eq!(parse_float(&s).unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn dataset_roundtrip_preserves_bits_and_layout() {
        let dir = std::env::temp_dir().join("ghm_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let data = Dataset::new(
            vec![0.1, -0.2, 0.3, 0.4, 0.5],
            vec![
                vec![1.0 / 3.0, 0.5, -0.25, 1e-17],
                vec![0.0, 1.0, 2.0, 3.0],
                vec![-1.0, -2.0, -3.0, -4.0],
                vec![0.7, 0.8, 0.9, 1.1],
                vec![1.3, -1.7, 1.9, -2.3],
            ],
        )
        .unwrap();
        write_dataset_csv(&path, &data, &[2, 2]).unwrap();
        let (back, dims) = read_dataset_csv(&path).unwrap();
        assert_eq!(dims, vec![2, 2]);
        assert_eq!(back.y(), data.y());
        for t in 0..data.len() {
            assert_eq!(back.z_row(t), data.z_row(t));
        }
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = std::env::temp_dir().join("ghm_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_dataset_csv(&path).is_err());
        std::fs::write(&path, "y,z1_1,z1_3\n1,2,3\n").unwrap();
        assert!(read_dataset_csv(&path).is_err());
    }
}
