//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13, chosen from the 1-norm of the input.

use num_complex::Complex64;

use super::{check_finite, check_square, norm1, CMatrix};
use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)] // tabulated values, kept as published
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest number of squarings accepted before reporting overflow.
const MAX_SQUARINGS: i32 = 1100;

fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

/// Odd/even split of the Padé numerator for the low degrees.
fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let mut u = scale(&ident, b[1]);
    let mut v = scale(&ident, b[0]);
    let mut pow = ident;
    let deg = b.len() - 1;
    let mut k = 2;
    while k <= deg {
        pow = &pow * &a2;
        u += scale(&pow, b[k + 1]);
        v += scale(&pow, b[k]);
        k += 2;
    }
    (a * u, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let b = &B13;
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]);
    let u = a
        * (&a6 * inner_u
            + scale(&a6, b[7])
            + scale(&a4, b[5])
            + scale(&a2, b[3])
            + scale(&ident, b[1]));
    let inner_v = scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]);
    let v = &a6 * inner_v + scale(&a6, b[6]) + scale(&a4, b[4]) + scale(&a2, b[2]) + scale(&ident, b[0]);
    (u, v)
}

/// `e^M`. Returns [`Error::Overflow`] when the result is not representable.
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    check_square(m, "exponential input")?;
    check_finite(m)?;
    let nrm = norm1(m);
    let (u, v, squarings) = if nrm <= THETA[0] {
        let (u, v) = pade_low(m, &B3);
        (u, v, 0)
    } else if nrm <= THETA[1] {
        let (u, v) = pade_low(m, &B5);
        (u, v, 0)
    } else if nrm <= THETA[2] {
        let (u, v) = pade_low(m, &B7);
        (u, v, 0)
    } else if nrm <= THETA[3] {
        let (u, v) = pade_low(m, &B9);
        (u, v, 0)
    } else {
        let s = (nrm / THETA[4]).log2().ceil().max(0.0) as i32;
        if s > MAX_SQUARINGS {
            return Err(Error::Overflow { norm: nrm });
        }
        let a = scale(m, 2f64.powi(-s));
        let (u, v) = pade13(&a);
        (u, v, s)
    };
    let num = &v + &u;
    let den = &v - &u;
    let lu = den.lu();
    let mut r = lu.solve(&num).ok_or(Error::Overflow { norm: nrm })?;
    for _ in 0..squarings {
        r = &r * &r;
        if !all_finite(&r) {
            return Err(Error::Overflow { norm: nrm });
        }
    }
    if !all_finite(&r) {
        return Err(Error::Overflow { norm: nrm });
    }
    Ok(r)
}

fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z: &Complex64| z.re.is_finite() && z.im.is_finite())
}
