//! Single-qubit Euler decompositions.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::circuit::{Gate, GateKind};

const ANGLE_TOL: f64 = 1e-10;

/// Which single-qubit gate family a basis offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneQubitFamily {
    /// `rz`, `sx` and optionally `x`.
    ZSx { has_x: bool },
    /// `rz`, `rx`.
    ZX,
    /// `rz`, `ry`.
    ZY,
}

impl OneQubitFamily {
    pub fn contains(self, kind: GateKind) -> bool {
        match self {
            OneQubitFamily::ZSx { has_x } => {
                matches!(kind, GateKind::Rz | GateKind::Sx) || (has_x && kind == GateKind::X)
            }
            OneQubitFamily::ZX => matches!(kind, GateKind::Rz | GateKind::Rx),
            OneQubitFamily::ZY => matches!(kind, GateKind::Rz | GateKind::Ry),
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

pub(crate) fn is_zero_angle(theta: f64) -> bool {
    wrap_angle(theta).abs() < ANGLE_TOL
}

/// `(φ, θ, λ)` with `U ∝ RZ(φ)·RY(θ)·RZ(λ)`.
pub fn zyz_angles(u: &Matrix2<Complex64>) -> (f64, f64, f64) {
    let v = u / u.determinant().sqrt();
    let (a, c) = (v[(0, 0)], v[(1, 0)]);
    let theta = 2.0 * c.norm().atan2(a.norm());
    let sum = if a.norm() < ANGLE_TOL {
        0.0
    } else {
        -2.0 * a.arg()
    };
    let diff = if c.norm() < ANGLE_TOL {
        0.0
    } else {
        2.0 * c.arg()
    };
    ((sum + diff) / 2.0, theta, (sum - diff) / 2.0)
}

fn h_conj(u: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let h = Matrix2::new(s, s, s, -s);
    h * u * h
}

fn push_rot(out: &mut Vec<Gate>, kind: GateKind, q: usize, theta: f64) {
    if is_zero_angle(theta) {
        return;
    }
    let theta = wrap_angle(theta);
    out.push(match kind {
        GateKind::Rx => Gate::rx(q, theta),
        GateKind::Ry => Gate::ry(q, theta),
        _ => Gate::rz(q, theta),
    });
}

/// Circuit-order gates `RZ(λ−π/2), RX(θ), RZ(φ+π/2)`.
fn zxz(u: &Matrix2<Complex64>, q: usize) -> Vec<Gate> {
    let (phi, theta, lambda) = zyz_angles(u);
    let mut out = Vec::new();
    if is_zero_angle(theta) {
        push_rot(&mut out, GateKind::Rz, q, phi + lambda);
        return out;
    }
    push_rot(&mut out, GateKind::Rz, q, lambda - FRAC_PI_2);
    push_rot(&mut out, GateKind::Rx, q, theta);
    push_rot(&mut out, GateKind::Rz, q, phi + FRAC_PI_2);
    out
}

/// Circuit-order gates `RX, RZ, RX`: the ZXZ form of `H·U·H` with axes swapped.
fn xzx(u: &Matrix2<Complex64>, q: usize) -> Vec<Gate> {
    zxz(&h_conj(u), q)
        .into_iter()
        .map(|mut g| {
            g.kind = if g.kind == GateKind::Rz {
                GateKind::Rx
            } else {
                GateKind::Rz
            };
            g
        })
        .collect()
}

fn zyz(u: &Matrix2<Complex64>, q: usize) -> Vec<Gate> {
    let (phi, theta, lambda) = zyz_angles(u);
    let mut out = Vec::new();
    if is_zero_angle(theta) {
        push_rot(&mut out, GateKind::Rz, q, phi + lambda);
        return out;
    }
    push_rot(&mut out, GateKind::Rz, q, lambda);
    push_rot(&mut out, GateKind::Ry, q, theta);
    push_rot(&mut out, GateKind::Rz, q, phi);
    out
}

fn zsx(u: &Matrix2<Complex64>, q: usize, has_x: bool) -> Vec<Gate> {
    let (phi, theta, lambda) = zyz_angles(u);
    let mut out = Vec::new();
    if theta.abs() < ANGLE_TOL {
        push_rot(&mut out, GateKind::Rz, q, phi + lambda);
    } else if (theta - FRAC_PI_2).abs() < ANGLE_TOL {
        push_rot(&mut out, GateKind::Rz, q, lambda - FRAC_PI_2);
        out.push(Gate::sx(q));
        push_rot(&mut out, GateKind::Rz, q, phi + FRAC_PI_2);
    } else if has_x && (theta - PI).abs() < ANGLE_TOL {
        out.push(Gate::x(q));
        push_rot(&mut out, GateKind::Rz, q, phi - lambda + PI);
    } else {
        push_rot(&mut out, GateKind::Rz, q, lambda);
        out.push(Gate::sx(q));
        push_rot(&mut out, GateKind::Rz, q, theta + PI);
        out.push(Gate::sx(q));
        push_rot(&mut out, GateKind::Rz, q, phi + PI);
    }
    out
}

/// Shortest gate sequence in `family` implementing `u` up to global phase.
pub fn synthesize(u: &Matrix2<Complex64>, q: usize, family: OneQubitFamily) -> Vec<Gate> {
    match family {
        OneQubitFamily::ZSx { has_x } => zsx(u, q, has_x),
        OneQubitFamily::ZY => zyz(u, q),
        OneQubitFamily::ZX => {
            let (a, b) = (zxz(u, q), xzx(u, q));
            if b.len() < a.len() {
                b
            } else {
                a
            }
        }
    }
}

/// `RX(γ), RZ(β), RX(α)` in circuit order, zeros kept, with `U ∝ RX(α)RZ(β)RX(γ)`.
pub(crate) fn xzx_angles(u: &Matrix2<Complex64>) -> (f64, f64, f64) {
    let (phi, theta, lambda) = zyz_angles(&h_conj(u));
    if is_zero_angle(theta) {
        return (0.0, 0.0, phi + lambda);
    }
    (lambda - FRAC_PI_2, theta, phi + FRAC_PI_2)
}
