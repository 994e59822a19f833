//! Noise-free quantum mechanics of the double-dot exchange-only qubit.
//!
//! Energies are in units of the exchange scale `j0` and times in `hbar / j0`
//! (so `hbar = 1`). The three spins are ordered (left dot, left dot, right dot)
//! and the eight-dimensional product basis uses index `4*b1 + 2*b2 + b3` with
//! `b = 0` for spin up and `b = 1` for spin down.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, Error, Result};
use crate::scalar::Real;

/// Eigenvalue splittings below this (in `j0`) use the degenerate limit of the propagator.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;

/// Deterministic Hamiltonian inputs, in units of `j0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeParams<T> {
    /// Intra-dot exchange `j'`.
    pub j_prime: T,
    /// Inter-dot exchange between spins 1 and 3.
    pub j1: T,
    /// Inter-dot exchange between spins 2 and 3.
    pub j2: T,
    /// Zeeman energy.
    pub ez: T,
}

impl<T: Real> ExchangeParams<T> {
    pub fn new(j_prime: T, j1: T, j2: T, ez: T) -> Result<Self> {
        let p = Self {
            j_prime,
            j1,
            j2,
            ez,
        };
        p.validate()?;
        Ok(p)
    }

    /// `j' = 0.5`, `j1 = 0.5`, `j2 = 1.5`, `E^z = 10`.
    pub fn reference() -> Self {
        Self {
            j_prime: T::lit(0.5),
            j1: T::lit(0.5),
            j2: T::lit(1.5),
            ez: T::lit(10.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("j_prime", self.j_prime)?;
        ensure_finite("ez", self.ez)?;
        ensure_non_negative("j1", self.j1)?;
        ensure_non_negative("j2", self.j2)?;
        Ok(())
    }

    /// Same parameters with the two inter-dot couplings replaced.
    pub fn with_couplings(&self, j1: T, j2: T) -> Self {
        Self { j1, j2, ..*self }
    }
}

impl<T: Real> Default for ExchangeParams<T> {
    fn default() -> Self {
        Self::reference()
    }
}

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> ComplexMatrix2<T> {
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn from_real(m: [[T; 2]; 2]) -> Self {
        let c = |x: T| Complex::new(x, T::zero());
        Self::new([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn zero() -> Self {
        Self::new([[Complex::new(T::zero(), T::zero()); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z = *z * s);
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Mul for ComplexMatrix2<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

impl<T: Real> Add for ComplexMatrix2<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.m.iter_mut().flatten().zip(rhs.m.iter().flatten()).for_each(|(a, b)| *a = *a + *b);
        out
    }
}

impl<T: Real> Sub for ComplexMatrix2<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        out.m.iter_mut().flatten().zip(rhs.m.iter().flatten()).for_each(|(a, b)| *a = *a - *b);
        out
    }
}

/// Normalized state `c0|0> + c1|1>` in the logical basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState<T> {
    pub c0: Complex<T>,
    pub c1: Complex<T>,
}

impl<T: Real> QubitState<T> {
    pub fn new(c0: Complex<T>, c1: Complex<T>) -> Result<Self> {
        let s = Self { c0, c1 };
        let norm = s.norm_sqr();
        if !norm.is_finite() || (norm - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::invalid("state", format!("norm^2 = {norm}, expected 1")));
        }
        Ok(s)
    }

    /// Logical `|0>`.
    pub fn zero() -> Self {
        Self {
            c0: Complex::new(T::one(), T::zero()),
            c1: Complex::new(T::zero(), T::zero()),
        }
    }

    /// Logical `|1>`.
    pub fn one() -> Self {
        Self {
            c0: Complex::new(T::zero(), T::zero()),
            c1: Complex::new(T::one(), T::zero()),
        }
    }

    /// `(|0> + |1>) / sqrt(2)`.
    pub fn plus() -> Self {
        let a = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        Self { c0: a, c1: a }
    }

    pub fn norm_sqr(&self) -> T {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    /// Probability of finding the qubit in `|0>`.
    pub fn population_zero(&self) -> T {
        self.c0.norm_sqr()
    }
}

/// Initial condition of the free evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|0>`.
    Zero,
    /// `(|0> + |1>) / sqrt(2)`.
    Superposition,
}

impl InitialState {
    pub fn state<T: Real>(self) -> QubitState<T> {
        match self {
            InitialState::Zero => QubitState::zero(),
            InitialState::Superposition => QubitState::plus(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InitialState::Zero => "zero",
            InitialState::Superposition => "superposition",
        }
    }

    /// Return probability at `t = 0`.
    pub fn start_value(self) -> f64 {
        match self {
            InitialState::Zero => 1.0,
            InitialState::Superposition => 0.5,
        }
    }
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitialState::Zero),
            "superposition" => Ok(InitialState::Superposition),
            other => Err(Error::invalid(
                "initial",
                format!("unknown initial condition `{other}` (expected zero|superposition)"),
            )),
        }
    }
}

/// Coefficients of the closed-form return probabilities for one noise realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    /// `a - b + delta_e`.
    pub detuning: T,
    /// Half the level splitting, `sqrt(d^2 + 4c^2) / 2`.
    pub beta: T,
}

pub fn coefficients<T: Real>(p: &ExchangeParams<T>, delta_e: T) -> Coefficients<T> {
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let a = p.ez * half + T::lit(3.0) * quarter * p.j_prime;
    let b = p.ez * half - quarter * p.j_prime + half * (p.j1 + p.j2);
    let c = T::lit(3.0).sqrt() * quarter * (p.j1 - p.j2);
    // ez cancels exactly; form the detuning without it so large Zeeman shifts lose no digits.
    let detuning = p.j_prime - half * (p.j1 + p.j2) + delta_e;
    let beta = detuning.hypot(T::lit(2.0) * c) * half;
    Coefficients {
        a,
        b,
        c,
        detuning,
        beta,
    }
}

impl<T: Real> Coefficients<T> {
    /// `d^2 + 4c^2`.
    pub fn gap_sqr(&self) -> T {
        self.detuning * self.detuning + T::lit(4.0) * self.c * self.c
    }

    /// Oscillation amplitude of the `|0>` return probability, `4c^2 / (d^2 + 4c^2)`.
    pub fn amplitude_zero(&self) -> T {
        let g = self.gap_sqr();
        if g == T::zero() {
            T::zero()
        } else {
            T::lit(4.0) * self.c * self.c / g
        }
    }

    /// Oscillation amplitude of the superposition return probability, `4cd / (d^2 + 4c^2)`.
    pub fn amplitude_superposition(&self) -> T {
        let g = self.gap_sqr();
        if g == T::zero() {
            T::zero()
        } else {
            T::lit(4.0) * self.c * self.detuning / g
        }
    }
}

/// Logical-subspace Hamiltonian with an antisymmetric dot-to-dot field offset `delta_e`.
pub fn build_logical_hamiltonian<T: Real>(
    p: &ExchangeParams<T>,
    delta_e: T,
) -> Result<ComplexMatrix2<T>> {
    p.validate()?;
    ensure_finite("delta_e", delta_e)?;
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let h00 = -half * p.ez - T::lit(3.0) * quarter * p.j_prime - half * delta_e;
    let h11 = -half * p.ez + quarter * p.j_prime - half * (p.j1 + p.j2) + half * delta_e;
    let off = -T::lit(3.0).sqrt() * quarter * (p.j1 - p.j2);
    Ok(ComplexMatrix2::from_real([[h00, off], [off, h11]]))
}

/// Operator on the three-spin product space.
pub type Operator8<T> = [[Complex<T>; 8]; 8];
/// Vector on the three-spin product space.
pub type Vector8<T> = [Complex<T>; 8];

fn pauli<T: Real>(k: usize) -> [[Complex<T>; 2]; 2] {
    let z = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    match k {
        0 => [[z, one], [one, z]],
        1 => [[z, -i], [i, z]],
        _ => [[one, z], [z, -one]],
    }
}

/// `sigma^k` acting on `site` (0, 1 or 2) of the three-spin space.
fn pauli_on_site<T: Real>(site: usize, k: usize) -> Operator8<T> {
    let s = pauli::<T>(k);
    let mut out = [[Complex::new(T::zero(), T::zero()); 8]; 8];
    let shift = 2 - site;
    for row in 0..8 {
        for col in 0..8 {
            // identity on the other two sites
            let others = !(1usize << shift) & 0b111;
            if row & others != col & others {
                continue;
            }
            out[row][col] = s[(row >> shift) & 1][(col >> shift) & 1];
        }
    }
    out
}

fn mat8_mul<T: Real>(a: &Operator8<T>, b: &Operator8<T>) -> Operator8<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 8]; 8];
    for i in 0..8 {
        for k in 0..8 {
            let aik = a[i][k];
            if aik.re == T::zero() && aik.im == T::zero() {
                continue;
            }
            for j in 0..8 {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

fn mat8_axpy<T: Real>(acc: &mut Operator8<T>, s: T, x: &Operator8<T>) {
    for (ra, rx) in acc.iter_mut().zip(x.iter()) {
        for (a, v) in ra.iter_mut().zip(rx.iter()) {
            *a = *a + *v * s;
        }
    }
}

/// `sigma_a . sigma_b` between two sites.
fn spin_dot<T: Real>(a: usize, b: usize) -> Operator8<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 8]; 8];
    for k in 0..3 {
        let prod = mat8_mul(&pauli_on_site::<T>(a, k), &pauli_on_site::<T>(b, k));
        mat8_axpy(&mut out, T::one(), &prod);
    }
    out
}

/// Full three-spin effective Hamiltonian: Zeeman term plus pairwise Heisenberg exchange.
pub fn build_full_hamiltonian<T: Real>(p: &ExchangeParams<T>) -> Result<Operator8<T>> {
    p.validate()?;
    let quarter = T::lit(0.25);
    let mut h = [[Complex::new(T::zero(), T::zero()); 8]; 8];
    for site in 0..3 {
        mat8_axpy(&mut h, T::lit(0.5) * p.ez, &pauli_on_site::<T>(site, 2));
    }
    mat8_axpy(&mut h, quarter * p.j_prime, &spin_dot::<T>(0, 1));
    mat8_axpy(&mut h, quarter * p.j1, &spin_dot::<T>(0, 2));
    mat8_axpy(&mut h, quarter * p.j2, &spin_dot::<T>(1, 2));
    Ok(h)
}

/// Product-basis index of a three-spin configuration; `true` is spin up.
pub fn product_index(s1_up: bool, s2_up: bool, s3_up: bool) -> usize {
    let bit = |up: bool| usize::from(!up);
    (bit(s1_up) << 2) | (bit(s2_up) << 1) | bit(s3_up)
}

/// Logical states `|0> = |S>|down>` and `|1> = sqrt(1/3)|T0>|down> - sqrt(2/3)|T->|up>`.
pub fn logical_basis_vectors<T: Real>() -> (Vector8<T>, Vector8<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    let re = |x: T| Complex::new(x, T::zero());
    let mut v0 = [zero; 8];
    let mut v1 = [zero; 8];
    let udd = product_index(true, false, false);
    let dud = product_index(false, true, false);
    let ddu = product_index(false, false, true);
    v0[udd] = re(T::FRAC_1_SQRT_2());
    v0[dud] = re(-T::FRAC_1_SQRT_2());
    let inv_sqrt6 = T::one() / T::lit(6.0).sqrt();
    v1[udd] = re(inv_sqrt6);
    v1[dud] = re(inv_sqrt6);
    v1[ddu] = re(-(T::lit(2.0) / T::lit(3.0)).sqrt());
    (v0, v1)
}

/// Matrix elements `<L_i|H|L_j>` on the logical basis.
pub fn project_to_logical<T: Real>(h: &Operator8<T>) -> ComplexMatrix2<T> {
    let (v0, v1) = logical_basis_vectors::<T>();
    let basis = [v0, v1];
    let mut out = ComplexMatrix2::zero();
    for (i, bra) in basis.iter().enumerate() {
        for (j, ket) in basis.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for r in 0..8 {
                for c in 0..8 {
                    acc = acc + bra[r].conj() * h[r][c] * ket[c];
                }
            }
            out.m[i][j] = acc;
        }
    }
    out
}

/// Closed-form `exp(-iHt)` of a 2x2 Hermitian matrix via the Cayley-Hamilton theorem.
///
/// With `l1, l2 = -i * eig(H)`:
/// `U = e^{l1 t} I + (e^{l1 t} - e^{l2 t}) / (l1 - l2) * (-iH - l1 I)`,
/// falling back to `U = e^{l1 t} (I + t (-iH - l1 I))` when `|l1 - l2|` is below
/// [`DEGENERACY_THRESHOLD`].
pub fn propagator<T: Real>(h: &ComplexMatrix2<T>, t: T) -> Result<ComplexMatrix2<T>> {
    if !h.is_finite() {
        return Err(Error::invalid("hamiltonian", "entries must be finite"));
    }
    ensure_finite("t", t)?;
    let tol = T::lit(HERMITIAN_TOL) * T::one().max(h.max_abs());
    if !h.is_hermitian(tol) {
        return Err(Error::invalid("hamiltonian", "matrix is not Hermitian"));
    }
    let half = T::lit(0.5);
    let mean = (h.m[0][0].re + h.m[1][1].re) * half;
    let half_diff = (h.m[0][0].re - h.m[1][1].re) * half;
    let half_gap = half_diff.hypot(h.m[0][1].norm());
    let e1 = mean + half_gap;

    let neg_i = Complex::new(T::zero(), -T::one());
    let lambda1 = neg_i * e1;
    let lambda_diff = neg_i * (half_gap + half_gap);

    // -iH - l1 I = -i (H - e1 I); subtract the trace part first so only the
    // traceless piece carries rounding error.
    let mut shifted = *h;
    shifted.m[0][0] = Complex::new(half_diff - half_gap, T::zero());
    shifted.m[1][1] = Complex::new(-half_diff - half_gap, T::zero());
    let generator = shifted.scale(neg_i);

    let phase1 = (lambda1 * t).exp();
    let id = ComplexMatrix2::identity();
    if (half_gap + half_gap) < T::lit(DEGENERACY_THRESHOLD) {
        let first_order = id + generator.scale(Complex::new(t, T::zero()));
        return Ok(first_order.scale(phase1));
    }
    let lambda2 = lambda1 - lambda_diff;
    let phase2 = (lambda2 * t).exp();
    let s1 = (phase1 - phase2) / lambda_diff;
    Ok(id.scale(phase1) + generator.scale(s1))
}

/// `U(t) psi0`.
pub fn evolve<T: Real>(psi0: &QubitState<T>, h: &ComplexMatrix2<T>, t: T) -> Result<QubitState<T>> {
    let u = propagator(h, t)?;
    let [c0, c1] = u.apply([psi0.c0, psi0.c1]);
    Ok(QubitState { c0, c1 })
}

#[inline]
fn clamp_unit<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// `P_0(t) = 1 - 4c^2/(d^2+4c^2) sin^2(beta t)` for the qubit prepared in `|0>`.
pub fn return_probability_zero<T: Real>(p: &ExchangeParams<T>, delta_e: T, t: T) -> T {
    let k = coefficients(p, delta_e);
    if k.gap_sqr() == T::zero() {
        return T::one();
    }
    let s = (k.beta * t).sin();
    clamp_unit(T::one() - k.amplitude_zero() * s * s)
}

/// `P_0(t) = [1 + 4cd/(d^2+4c^2) sin^2(beta t)] / 2` for the qubit prepared in `(|0>+|1>)/sqrt(2)`.
pub fn return_probability_superposition<T: Real>(p: &ExchangeParams<T>, delta_e: T, t: T) -> T {
    let half = T::lit(0.5);
    let k = coefficients(p, delta_e);
    if k.gap_sqr() == T::zero() {
        return half;
    }
    let s = (k.beta * t).sin();
    clamp_unit(half * (T::one() + k.amplitude_superposition() * s * s))
}

pub fn return_probability<T: Real>(
    initial: InitialState,
    p: &ExchangeParams<T>,
    delta_e: T,
    t: T,
) -> T {
    match initial {
        InitialState::Zero => return_probability_zero(p, delta_e, t),
        InitialState::Superposition => return_probability_superposition(p, delta_e, t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn logical_hamiltonian_reference_values() {
        let h = build_logical_hamiltonian(&ExchangeParams::<f64>::reference(), 0.0).unwrap();
        assert!(close(h.m[0][0].re, -5.375, 1e-15));
        assert!(close(h.m[1][1].re, -5.875, 1e-15));
        assert!(close(h.m[0][1].re, 0.75f64.sqrt() / 2.0, 1e-15));
        assert!(close(h.m[0][1].re, 0.433013, 1e-6));
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn logical_hamiltonian_zero_and_symmetric_couplings() {
        let z = ExchangeParams::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(build_logical_hamiltonian(&z, 0.0).unwrap(), ComplexMatrix2::zero());
        let sym = ExchangeParams::new(0.3, 1.0, 1.0, 7.0).unwrap();
        let h = build_logical_hamiltonian(&sym, 0.4).unwrap();
        assert_eq!(h.m[0][1].re, 0.0);
        assert_eq!(h.m[1][0].re, 0.0);
    }

    #[test]
    fn non_finite_parameters_rejected() {
        let mut p = ExchangeParams::<f64>::reference();
        p.ez = f64::NAN;
        assert!(matches!(
            build_logical_hamiltonian(&p, 0.0),
            Err(Error::InvalidParameter { field: "ez", .. })
        ));
        let p = ExchangeParams::<f64>::reference();
        assert!(build_logical_hamiltonian(&p, f64::INFINITY).is_err());
        assert!(ExchangeParams::new(0.5, -0.1, 1.0, 10.0).is_err());
    }

    #[test]
    fn pure_zeeman_full_hamiltonian() {
        let p = ExchangeParams::new(0.0, 0.0, 0.0, 2.0).unwrap();
        let h = build_full_hamiltonian(&p).unwrap();
        for (i, row) in h.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(z.norm(), 0.0);
                }
            }
        }
        assert_eq!(h[product_index(true, true, true)][product_index(true, true, true)].re, 3.0);
        assert_eq!(h[product_index(false, false, false)][product_index(false, false, false)].re, -3.0);
    }

    #[test]
    fn projection_matches_logical_hamiltonian_at_reference() {
        let p = ExchangeParams::<f64>::reference();
        let projected = project_to_logical(&build_full_hamiltonian(&p).unwrap());
        let direct = build_logical_hamiltonian(&p, 0.0).unwrap();
        assert!(projected.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn basis_vectors_orthonormal_with_sz_minus_half() {
        let (v0, v1) = logical_basis_vectors::<f64>();
        let dot = |a: &Vector8<f64>, b: &Vector8<f64>| {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex<f64>>()
        };
        assert!(close(dot(&v0, &v0).re, 1.0, 1e-15));
        assert!(close(dot(&v1, &v1).re, 1.0, 1e-15));
        assert!(dot(&v0, &v1).norm() < 1e-15);
        assert!(close(v0[product_index(true, false, false)].re, 0.707107, 1e-6));
        for v in [v0, v1] {
            for (idx, amp) in v.iter().enumerate() {
                if amp.norm() > 0.0 {
                    // two spins down, one up
                    assert_eq!(idx.count_ones(), 2);
                }
            }
        }
    }

    #[test]
    fn reference_coefficients() {
        let k = coefficients(&ExchangeParams::<f64>::reference(), 0.0);
        assert!(close(k.a, 5.375, 1e-15));
        assert!(close(k.b, 5.875, 1e-15));
        assert!(close(k.c, -0.433013, 1e-6));
        assert!(close(k.detuning, -0.5, 1e-15));
        assert!(close(k.beta, 0.5, 1e-15));

        let shifted = coefficients(&ExchangeParams::<f64>::reference(), 0.5);
        assert!(close(shifted.detuning, 0.0, 1e-15));
        assert!(close(shifted.beta, shifted.c.abs(), 1e-15));

        let sym = coefficients(&ExchangeParams::new(0.5, 1.0, 1.0, 10.0).unwrap(), 0.2);
        assert_eq!(sym.c, 0.0);
        assert!(close(sym.beta, sym.detuning.abs() / 2.0, 1e-15));
    }

    #[test]
    fn propagator_identity_at_zero_time() {
        let h = build_logical_hamiltonian(&ExchangeParams::<f64>::reference(), 0.0).unwrap();
        let u = propagator(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix2::identity()) < 1e-15);
    }

    #[test]
    fn propagator_half_period_population() {
        let h = build_logical_hamiltonian(&ExchangeParams::<f64>::reference(), 0.0).unwrap();
        let u = propagator(&h, std::f64::consts::PI).unwrap();
        assert!(close(u.m[0][0].norm_sqr(), 0.25, 1e-12));
    }

    #[test]
    fn propagator_degenerate_branch() {
        let h = ComplexMatrix2::from_real([[0.7, 0.0], [0.0, 0.7 + 1e-12]]);
        let u = propagator(&h, 3.0).unwrap();
        let expected = ComplexMatrix2::identity().scale(Complex::new(0.0, -0.7 * 3.0).exp());
        assert!(u.max_abs_diff(&expected) < 1e-11);
        let uu = u.adjoint() * u;
        assert!(uu.max_abs_diff(&ComplexMatrix2::identity()) < 1e-12);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let h = ComplexMatrix2::from_real([[1.0, 0.5], [0.2, 1.0]]);
        assert!(propagator(&h, 1.0).is_err());
        let mut h = ComplexMatrix2::<f64>::identity();
        h.m[0][0].im = 0.1;
        assert!(propagator(&h, 1.0).is_err());
    }

    #[test]
    fn evolve_matches_closed_forms_at_half_period() {
        let p = ExchangeParams::<f64>::reference();
        let h = build_logical_hamiltonian(&p, 0.0).unwrap();
        let t = std::f64::consts::PI;
        let s0 = evolve(&QubitState::zero(), &h, t).unwrap();
        assert!(close(s0.population_zero(), 0.25, 1e-12));
        let sp = evolve(&QubitState::plus(), &h, t).unwrap();
        assert!(close(sp.population_zero(), 0.933013, 1e-6));
        assert!(close(sp.population_zero(), 0.5 * (1.0 + 0.75f64.sqrt()), 1e-12));
        let s = evolve(&QubitState::zero(), &h, 0.0).unwrap();
        assert!(close(s.population_zero(), 1.0, 1e-15));
    }

    #[test]
    fn closed_form_edge_cases() {
        let p = ExchangeParams::<f64>::reference();
        assert_eq!(return_probability_zero(&p, 0.3, 0.0), 1.0);
        assert_eq!(return_probability_superposition(&p, 0.3, 0.0), 0.5);
        assert!(close(return_probability_zero(&p, 0.0, std::f64::consts::PI), 0.25, 1e-12));
        assert!(close(
            return_probability_superposition(&p, 0.0, std::f64::consts::PI),
            0.933013,
            1e-6
        ));
        let sym = ExchangeParams::new(0.5, 1.0, 1.0, 10.0).unwrap();
        for t in [0.3, 7.0, 123.4] {
            assert_eq!(return_probability_zero(&sym, 0.1, t), 1.0);
            assert_eq!(return_probability_superposition(&sym, 0.1, t), 0.5);
        }
        // d = 0 and c = 0 at once
        let flat = ExchangeParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(coefficients(&flat, 0.0).gap_sqr(), 0.0);
        assert_eq!(return_probability_zero(&flat, 0.0, 5.0), 1.0);
        assert_eq!(return_probability_superposition(&flat, 0.0, 5.0), 0.5);
    }

    #[test]
    fn single_precision_instantiation() {
        let p = ExchangeParams::<f32>::reference();
        let h = build_logical_hamiltonian(&p, 0.0).unwrap();
        let u = propagator(&h, std::f32::consts::PI).unwrap();
        assert!((u.m[0][0].norm_sqr() - 0.25).abs() < 1e-5);
        assert!((return_probability_zero(&p, 0.0, std::f32::consts::PI) - 0.25).abs() < 1e-5);
    }

    #[test]
    fn initial_state_parsing() {
        assert_eq!("zero".parse::<InitialState>().unwrap(), InitialState::Zero);
        assert_eq!(
            "superposition".parse::<InitialState>().unwrap(),
            InitialState::Superposition
        );
        assert!("one".parse::<InitialState>().is_err());
    }

    mod properties {
        use super::super::*;
        use nalgebra::{Matrix2, SymmetricEigen};
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = ExchangeParams<f64>> {
            (0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64, -20.0..20.0f64)
                .prop_map(|(jp, j1, j2, ez)| ExchangeParams::new(jp, j1, j2, ez).unwrap())
        }

        fn hermitian() -> impl Strategy<Value = ComplexMatrix2<f64>> {
            (-5.0..5.0f64, -5.0..5.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, d, re, im)| {
                ComplexMatrix2::new([
                    [Complex::new(a, 0.0), Complex::new(re, im)],
                    [Complex::new(re, -im), Complex::new(d, 0.0)],
                ])
            })
        }

        fn eigen_propagator(h: &ComplexMatrix2<f64>, t: f64) -> ComplexMatrix2<f64> {
            let m = Matrix2::new(h.m[0][0], h.m[0][1], h.m[1][0], h.m[1][1]);
            let eig = SymmetricEigen::new(m);
            let phases = eig.eigenvalues.map(|e| Complex::new(0.0, -e * t).exp());
            let u = eig.eigenvectors * Matrix2::from_diagonal(&phases) * eig.eigenvectors.adjoint();
            ComplexMatrix2::new([[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]])
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn projection_equivalence(p in params()) {
                let projected = project_to_logical(&build_full_hamiltonian(&p).unwrap());
                let direct = build_logical_hamiltonian(&p, 0.0).unwrap();
                prop_assert!(projected.max_abs_diff(&direct) < 1e-12);
            }

            #[test]
            fn propagator_matches_eigendecomposition(h in hermitian(), t in 0.0..100.0f64) {
                let u = propagator(&h, t).unwrap();
                prop_assert!(u.max_abs_diff(&eigen_propagator(&h, t)) < 1e-10);
                let uu = u.adjoint() * u;
                prop_assert!(uu.max_abs_diff(&ComplexMatrix2::identity()) < 1e-12);
            }

            #[test]
            fn evolve_matches_closed_forms(p in params(), delta_e in -1.0..1.0f64) {
                let h = build_logical_hamiltonian(&p, delta_e).unwrap();
                for k in 0..1000 {
                    let t = 0.2 * k as f64;
                    let z = evolve(&QubitState::zero(), &h, t).unwrap().population_zero();
                    prop_assert!((z - return_probability_zero(&p, delta_e, t)).abs() < 1e-10);
                    let s = evolve(&QubitState::plus(), &h, t).unwrap().population_zero();
                    prop_assert!((s - return_probability_superposition(&p, delta_e, t)).abs() < 1e-10);
                }
            }

            #[test]
            fn zeeman_shift_invariance(p in params(), shift in -50.0..50.0f64, delta_e in -1.0..1.0f64, t in 0.0..200.0f64) {
                let q = ExchangeParams::new(p.j_prime, p.j1, p.j2, p.ez + shift).unwrap();
                for init in [InitialState::Zero, InitialState::Superposition] {
                    let a = return_probability(init, &p, delta_e, t);
                    let b = return_probability(init, &q, delta_e, t);
                    prop_assert!((a - b).abs() < 1e-15);
                }
            }

            #[test]
            fn periodic_in_pi_over_beta(p in params(), delta_e in -1.0..1.0f64, t in 0.0..50.0f64) {
                let beta = coefficients(&p, delta_e).beta;
                prop_assume!(beta > 1e-3);
                let period = std::f64::consts::PI / beta;
                for init in [InitialState::Zero, InitialState::Superposition] {
                    let a = return_probability(init, &p, delta_e, t);
                    let b = return_probability(init, &p, delta_e, t + period);
                    prop_assert!((a - b).abs() < 1e-10);
                }
            }

            #[test]
            fn probabilities_bounded(p in params(), delta_e in -5.0..5.0f64, t in 0.0..1e4f64) {
                for init in [InitialState::Zero, InitialState::Superposition] {
                    let v = return_probability(init, &p, delta_e, t);
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
