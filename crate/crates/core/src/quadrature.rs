//! Gauss-Legendre rules and adaptive Gauss-Kronrod integration.

use crate::scalar::Real;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let nf = T::from_usize(n).unwrap();
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let k = T::from_usize(i + 1).unwrap();
            let mut x = (T::PI() * (k - T::lit(0.25)) / (nf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize(k).unwrap();
        let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize(n).unwrap();
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

// Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveTolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

/// One 15-point Kronrod evaluation of a vector-valued integrand on `[a, b]`.
fn kronrod15<T: Real, const N: usize, F: FnMut(T) -> [T; N]>(
    f: &mut F,
    a: T,
    b: T,
) -> ([T; N], T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut kron = [T::zero(); N];
    let mut gauss = [T::zero(); N];
    let fc = f(mid);
    for c in 0..N {
        kron[c] = fc[c] * T::lit(WGK[7]);
        gauss[c] = fc[c] * T::lit(WG[3]);
    }
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        for c in 0..N {
            let s = f1[c] + f2[c];
            kron[c] = kron[c] + T::lit(WGK[j]) * s;
            if j % 2 == 1 {
                gauss[c] = gauss[c] + T::lit(WG[j / 2]) * s;
            }
        }
    }
    let mut err = T::zero();
    for c in 0..N {
        kron[c] = kron[c] * half;
        gauss[c] = gauss[c] * half;
        err = err.max((kron[c] - gauss[c]).abs());
    }
    (kron, err)
}

/// Globally adaptive G7-K15 integration of `f` over each interval in `intervals`.
///
/// The error estimate is the largest component difference between the Kronrod and
/// Gauss values; intervals are bisected, worst first, until the summed estimate
/// falls below `max(tol.abs, tol.rel * |I_0|)`. Returns the integral and the final
/// error estimate.
pub fn integrate_adaptive<T: Real, const N: usize, F: FnMut(T) -> [T; N]>(
    mut f: F,
    intervals: &[(T, T)],
    tol: AdaptiveTolerance<T>,
) -> ([T; N], T) {
    struct Piece<T, const N: usize> {
        a: T,
        b: T,
        value: [T; N],
        err: T,
    }
    let mut pieces: Vec<Piece<T, N>> = intervals
        .iter()
        .filter(|(a, b)| b > a)
        .map(|&(a, b)| {
            let (value, err) = kronrod15(&mut f, a, b);
            Piece { a, b, value, err }
        })
        .collect();
    loop {
        let mut total = [T::zero(); N];
        let mut err = T::zero();
        let mut worst = None;
        let mut worst_err = -T::one();
        for (i, p) in pieces.iter().enumerate() {
            for c in 0..N {
                total[c] = total[c] + p.value[c];
            }
            err = err + p.err;
            if p.err > worst_err {
                worst_err = p.err;
                worst = Some(i);
            }
        }
        let target = tol.abs.max(tol.rel * total[0].abs());
        let Some(w) = worst else {
            return (total, err);
        };
        if err <= target || pieces.len() >= tol.max_intervals {
            return (total, err);
        }
        let p = pieces.swap_remove(w);
        let mid = (p.a + p.b) * T::lit(0.5);
        if !(mid > p.a && mid < p.b) {
            // interval at machine resolution
            pieces.push(Piece { err: T::zero(), ..p });
            continue;
        }
        let (lv, le) = kronrod15(&mut f, p.a, mid);
        let (rv, re) = kronrod15(&mut f, mid, p.b);
        pieces.push(Piece {
            a: p.a,
            b: mid,
            value: lv,
            err: le,
        });
        pieces.push(Piece {
            a: mid,
            b: p.b,
            value: rv,
            err: re,
        });
    }
}
