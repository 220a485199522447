//! Files written by the commands.

use std::path::Path;

use serde::Serialize;
use spdc_core::stats::{ridge_slope, summarize, ProbabilityTable};
use spdc_core::{JointDistribution64, Plane, RidgeFit, StatsSummary64, TransverseAxis};

use crate::config::Format;
use crate::{Failure, Outcome};

/// Statistics emitted next to every distribution.
#[derive(Serialize)]
pub struct JidReport {
    pub plane: Plane,
    pub axis: TransverseAxis,
    /// Σ I·cell area before normalisation.
    pub total: f64,
    pub stats: StatsSummary64,
    pub ridge: RidgeFit<f64>,
}

impl JidReport {
    pub fn new(j: &JointDistribution64) -> Outcome<Self> {
        let stats = summarize(j)?;
        let ridge = ridge_slope(&ProbabilityTable::from_intensity(j.lattice, &j.data)?)?;
        Ok(Self {
            plane: j.plane,
            axis: j.axis,
            total: j.total(),
            stats,
            ridge,
        })
    }
}

#[derive(Serialize)]
struct MatrixJson<'a> {
    plane: Plane,
    axis: TransverseAxis,
    signal_axis: &'a [f64],
    idler_axis: &'a [f64],
    data: Vec<Vec<f64>>,
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.to_owned(), e))
}

pub fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> Outcome {
    create_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Failure::Io(path, e))
}

pub fn write_json<T: Serialize>(dir: &Path, stem: &str, v: &T) -> Outcome {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Core(spdc_core::Error::Format(e.to_string())))?;
    s.push('\n');
    write_bytes(dir, &format!("{stem}.json"), s.as_bytes())
}

/// Writes `j` once per format; skewed lattices are first resampled onto an
/// `n × n` axis-aligned grid.
pub fn write_matrix(dir: &Path, stem: &str, j: &JointDistribution64, formats: &[Format], n: usize) -> Outcome {
    let rect;
    let j = if j.lattice.is_axis_aligned() {
        j
    } else {
        rect = j.to_rectangular(n)?;
        &rect
    };
    for &f in formats {
        let mut buf = Vec::new();
        match f {
            Format::Csv => spdc_core::export::write_csv(j, &mut buf)?,
            Format::Bin => spdc_core::export::write_binary(j, &mut buf)?,
            Format::Json => {
                let (s, i) = match (j.lattice.signal_axis(), j.lattice.idler_axis()) {
                    (Some(s), Some(i)) => (s, i),
                    _ => unreachable!("resampled above"),
                };
                let m = MatrixJson {
                    plane: j.plane,
                    axis: j.axis,
                    signal_axis: &s,
                    idler_axis: &i,
                    data: j.data.rows().into_iter().map(|r| r.to_vec()).collect(),
                };
                serde_json::to_writer(&mut buf, &m)
                    .map_err(|e| Failure::Core(spdc_core::Error::Format(e.to_string())))?;
                buf.push(b'\n');
            }
        }
        write_bytes(dir, &format!("{stem}.{}", f.extension()), &buf)?;
    }
    Ok(())
}
