//! Small reference pencils and seeded generators used by tests, benches and
//! the CLI.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c64, from_real_rows, CMatrix};
use crate::pencil::Pencil;

/// Singular mass matrix shared by the two 3x3 examples.
fn e_3x3() -> CMatrix {
    from_real_rows(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
}

/// Index-1 pencil with a defective finite eigenvalue -1 (Jordan block of size
/// two) and the algebraic constraint `x1 + x2 + x3 = 0`.
pub fn jordan_example() -> Pencil {
    let a = from_real_rows(3, 3, &[-1.0, -10.0, 0.0, 0.0, -1.0, 0.0, 1.0, 1.0, 1.0]);
    Pencil::new(a, e_3x3()).expect("fixture is well formed")
}

/// Index-1 pencil with finite eigenvalues `-1 +/- 5i`.
pub fn oscillatory_example() -> Pencil {
    let a = from_real_rows(3, 3, &[-1.0, -25.0, 0.0, 1.0, -1.0, 0.0, 1.0, 1.0, 1.0]);
    Pencil::new(a, e_3x3()).expect("fixture is well formed")
}

/// Consistent initial state for [`jordan_example`].
pub fn jordan_example_x0() -> Vec<Complex64> {
    vec![c64(-1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]
}

/// Row operations that leave the DAE dynamics unchanged but reshape the
/// `sigma_min(zE - A)` landscape.
pub fn row_transform_1() -> CMatrix {
    from_real_rows(3, 3, &[1.0, -4.0, 16.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0])
}

pub fn row_transform_2() -> CMatrix {
    from_real_rows(3, 3, &[1.0, -10.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
}

/// A regular pencil with known finite spectrum and nilpotent structure.
#[derive(Debug, Clone)]
pub struct PlantedPencil {
    pub pencil: Pencil,
    pub finite: Vec<Complex64>,
    /// Sizes of the Jordan blocks at infinity.
    pub blocks: Vec<usize>,
}

impl PlantedPencil {
    pub fn d(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn index(&self) -> usize {
        self.blocks.iter().copied().max().unwrap_or(0)
    }
}

fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Well-conditioned random matrix `I*shift + noise`.
fn conditioned(n: usize, rng: &mut ChaCha8Rng, shift: f64) -> CMatrix {
    let mut m = CMatrix::from_fn(n, n, |_, _| random_complex(rng));
    for i in 0..n {
        m[(i, i)] += c64(shift, 0.0);
    }
    m
}

/// Weierstrass-form construction `A = P diag(J, I) Z`, `E = P diag(I, N) Z`
/// with `J` upper triangular holding the planted finite eigenvalues and `N`
/// nilpotent with Jordan blocks of the given sizes.
pub fn planted_pencil(finite: &[Complex64], blocks: &[usize], seed: u64) -> PlantedPencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = finite.len();
    let d: usize = blocks.iter().sum();
    let n = m + d;
    let mut ja = CMatrix::zeros(n, n);
    let mut je = CMatrix::zeros(n, n);
    for i in 0..m {
        ja[(i, i)] = finite[i];
        je[(i, i)] = c64(1.0, 0.0);
        for j in i + 1..m {
            ja[(i, j)] = random_complex(&mut rng) * 0.5;
        }
    }
    let mut start = m;
    for &b in blocks {
        for i in 0..b {
            ja[(start + i, start + i)] = c64(1.0, 0.0);
            if i + 1 < b {
                je[(start + i, start + i + 1)] = c64(1.0, 0.0);
            }
        }
        start += b;
    }
    let nn = n as f64;
    let p = conditioned(n, &mut rng, 1.5 * nn.sqrt() + 1.0);
    let z = conditioned(n, &mut rng, 1.5 * nn.sqrt() + 1.0);
    let a = &p * ja * &z;
    let e = &p * je * &z;
    PlantedPencil {
        pencil: Pencil::new(a, e).expect("generated pencil is square"),
        finite: finite.to_vec(),
        blocks: blocks.to_vec(),
    }
}

/// Random planted pencil: `m` finite eigenvalues in `[-3, 1] x [-2, 2]` and a
/// random partition of `d` into Jordan blocks of size at most 3.
pub fn random_planted_pencil(m: usize, d: usize, seed: u64) -> PlantedPencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let finite: Vec<Complex64> = (0..m)
        .map(|_| c64(rng.gen_range(-3.0..1.0), rng.gen_range(-2.0..2.0)))
        .collect();
    let mut blocks = Vec::new();
    let mut left = d;
    while left > 0 {
        let b = rng.gen_range(1..=left.min(3));
        blocks.push(b);
        left -= b;
    }
    planted_pencil(&finite, &blocks, seed)
}

/// Random pencil with invertible `E` (no infinite eigenvalues).
pub fn random_invertible_e(n: usize, seed: u64) -> Pencil {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMatrix::from_fn(n, n, |_, _| random_complex(&mut rng));
    let e = conditioned(n, &mut rng, 2.0 + n as f64 / 2.0);
    Pencil::new(a, e).expect("generated pencil is square")
}

/// Seeded random Hermitian positive definite matrix `B* B + I`.
pub fn random_spd(n: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = CMatrix::from_fn(n, n, |_, _| random_complex(&mut rng));
    b.adjoint() * &b + CMatrix::identity(n, n)
}

/// `diag(1, 2, ..., n)`.
pub fn diagonal_ramp(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i == j { c64((i + 1) as f64, 0.0) } else { c64(0.0, 0.0) })
}
