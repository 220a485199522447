//! Bracketed scalar root finding (Brent's method).

use crate::scalar::Real;

/// Outcome of a bracketed solve.
#[derive(Clone, Copy, Debug)]
pub enum Bracket<T> {
    Root(T),
    /// `f(a)` and `f(b)` have the same sign.
    NotBracketed {
        f_lower: T,
        f_upper: T,
    },
}

/// Finds a root of `f` in `[a, b]` to absolute tolerance `xtol`.
pub fn brent<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, xtol: T) -> Bracket<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == T::zero() {
        return Bracket::Root(a);
    }
    if fb == T::zero() {
        return Bracket::Root(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Bracket::NotBracketed {
            f_lower: fa,
            f_upper: fb,
        };
    }

    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs() + half * xtol;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Bracket::Root(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when a == c
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = T::lit(3.0) * m * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol {
            b = b + d;
        } else {
            b = b + if m > T::zero() { tol } else { -tol };
        }
        fb = f(b);
    }
    Bracket::Root(b)
}
