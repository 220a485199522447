//! File formats for joint distributions on axis-aligned grids.
//!
//! CSV: the first line holds an empty corner cell followed by the idler axis
//! values; every following line starts with its signal axis value.
//!
//! Binary, all little-endian: the 8 magic bytes `SPDCJID1`; signal axis
//! min, max, N and idler axis min, max, N as `f64`; then the N_s × N_i matrix
//! as row-major `f64`. min and max are the first and last sample coordinates.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::scalar::Real;
use crate::spectral::JointDistribution;

pub const BINARY_MAGIC: &[u8; 8] = b"SPDCJID1";

/// Axis-aligned matrix with its axes, as read back from a file.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    pub signal_axis: Vec<f64>,
    pub idler_axis: Vec<f64>,
    pub data: Array2<f64>,
}

impl GridData {
    /// Axis-aligned lattice reconstructed from the first/last coordinates.
    pub fn lattice(&self) -> Result<Lattice<f64>> {
        let step = |a: &[f64]| {
            if a.len() > 1 {
                (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64
            } else {
                1.0
            }
        };
        Lattice::new(
            [self.signal_axis[0], self.idler_axis[0]],
            [step(&self.signal_axis), 0.0],
            [0.0, step(&self.idler_axis)],
            self.signal_axis.len(),
            self.idler_axis.len(),
        )
    }
}

fn axes<T: Real>(jid: &JointDistribution<T>) -> Result<(Vec<T>, Vec<T>)> {
    match (jid.lattice.signal_axis(), jid.lattice.idler_axis()) {
        (Some(s), Some(i)) => Ok((s, i)),
        _ => Err(Error::Invalid(
            "only axis-aligned distributions can be written; resample first".into(),
        )),
    }
}

pub fn write_csv<T: Real, W: Write>(jid: &JointDistribution<T>, mut w: W) -> Result<()> {
    let (s_axis, i_axis) = axes(jid)?;
    let mut line = String::new();
    for v in &i_axis {
        line.push(',');
        line.push_str(&v.as_f64().to_string());
    }
    writeln!(w, "{line}")?;
    for (r, s) in s_axis.iter().enumerate() {
        line.clear();
        line.push_str(&s.as_f64().to_string());
        for v in jid.data.row(r) {
            line.push(',');
            line.push_str(&v.as_f64().to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<GridData> {
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number '{t}': {e}")))
    };
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty CSV".into()))??;
    let mut cells = header.split(',');
    if !cells.next().is_some_and(|c| c.trim().is_empty()) {
        return Err(Error::Format("CSV corner cell must be empty".into()));
    }
    let idler_axis = cells.map(parse).collect::<Result<Vec<_>>>()?;
    let mut signal_axis = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        signal_axis.push(parse(cells.next().unwrap_or(""))?);
        let before = values.len();
        for c in cells {
            values.push(parse(c)?);
        }
        if values.len() - before != idler_axis.len() {
            return Err(Error::Format(format!(
                "row {} has the wrong number of cells",
                signal_axis.len()
            )));
        }
    }
    if signal_axis.is_empty() || idler_axis.is_empty() {
        return Err(Error::Format("CSV has no data".into()));
    }
    let data = Array2::from_shape_vec((signal_axis.len(), idler_axis.len()), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(GridData {
        signal_axis,
        idler_axis,
        data,
    })
}

pub fn write_binary<T: Real, W: Write>(jid: &JointDistribution<T>, mut w: W) -> Result<()> {
    let (s_axis, i_axis) = axes(jid)?;
    w.write_all(BINARY_MAGIC)?;
    for a in [&s_axis, &i_axis] {
        for v in [a[0].as_f64(), a[a.len() - 1].as_f64(), a.len() as f64] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    let mut buf = Vec::with_capacity(jid.data.len() * 8);
    for v in jid.data.iter() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridData> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("missing SPDCJID1 magic".into()));
    }
    let mut f = || -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let mut desc = [0.0; 6];
    for d in &mut desc {
        *d = f()?;
    }
    let count = |n: f64| -> Result<usize> {
        if n >= 1.0 && n.fract() == 0.0 && n < 1e9 {
            Ok(n as usize)
        } else {
            Err(Error::Format(format!("bad axis length {n}")))
        }
    };
    let (ns, ni) = (count(desc[2])?, count(desc[5])?);
    let axis = |min: f64, max: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    };
    let mut bytes = vec![0u8; ns * ni * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(GridData {
        signal_axis: axis(desc[0], desc[1], ns),
        idler_axis: axis(desc[3], desc[4], ni),
        data: Array2::from_shape_vec((ns, ni), values).map_err(|e| Error::Format(e.to_string()))?,
    })
}
