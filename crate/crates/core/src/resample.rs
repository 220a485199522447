//! Mass-preserving transfer of lattice samples onto axis-aligned grids.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::scalar::{CompensatedSum, Real};

/// Deposits `weight · src` from `from` onto the axis-aligned `onto` grid by
/// bilinear (cloud-in-cell) weights, accumulating a density into `out`.
///
/// Each source sample carries mass `weight · I · area(from)`; the mass is
/// split over the four surrounding target nodes and divided by
/// `area(onto)`, so Σ out·area(onto) gains exactly the deposited mass.
/// Returns the mass that fell outside the target grid.
pub fn deposit<T: Real>(
    from: &Lattice<T>,
    src: &Array2<T>,
    weight: T,
    onto: &Lattice<T>,
    out: &mut Array2<T>,
) -> Result<T> {
    let (ds, di) = onto
        .spacings()
        .ok_or_else(|| Error::Invalid("deposit target must be axis aligned".into()))?;
    if src.dim() != (from.rows, from.cols) || out.dim() != (onto.rows, onto.cols) {
        return Err(Error::Invalid("array shape does not match its lattice".into()));
    }
    let scale = weight * from.cell_area() / onto.cell_area();
    let (nr, nc) = (onto.rows as isize, onto.cols as isize);
    let mut clipped = CompensatedSum::new();
    for ((r, c), &v) in src.indexed_iter() {
        if v == T::zero() {
            continue;
        }
        let p = from.point(r, c);
        let fs = (p[0] - onto.origin[0]) / ds;
        let fi = (p[1] - onto.origin[1]) / di;
        let (j0, l0) = (fs.floor(), fi.floor());
        let (ts, ti) = (fs - j0, fi - l0);
        let (j0, l0) = (j0.to_isize().unwrap_or(isize::MIN), l0.to_isize().unwrap_or(isize::MIN));
        let m = v * scale;
        for (dj, wj) in [(0, T::one() - ts), (1, ts)] {
            for (dl, wl) in [(0, T::one() - ti), (1, ti)] {
                let (j, l) = (j0.saturating_add(dj), l0.saturating_add(dl));
                let part = m * wj * wl;
                if j >= 0 && j < nr && l >= 0 && l < nc {
                    out[[j as usize, l as usize]] = out[[j as usize, l as usize]] + part;
                } else {
                    clipped.add(part * onto.cell_area());
                }
            }
        }
    }
    Ok(clipped.total())
}
