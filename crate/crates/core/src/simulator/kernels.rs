//! In-place gate application by index arithmetic.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub(crate) fn apply_1q(amps: &mut [Complex64], q: usize, m: &Matrix2<Complex64>) {
    let stride = 1usize << q;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let (a0, a1) = (amps[i0], amps[i1]);
            amps[i0] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
            amps[i1] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
        }
        base += 2 * stride;
    }
}

/// Applies `m` with local bit 0 on qubit `a` and local bit 1 on qubit `b`.
pub(crate) fn apply_2q(amps: &mut [Complex64], a: usize, b: usize, m: &Matrix4<Complex64>) {
    let (ma, mb) = (1usize << a, 1usize << b);
    for i in 0..amps.len() {
        if i & (ma | mb) != 0 {
            continue;
        }
        let idx = [i, i | ma, i | mb, i | ma | mb];
        let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &out) in idx.iter().enumerate() {
            amps[out] = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
        }
    }
}
