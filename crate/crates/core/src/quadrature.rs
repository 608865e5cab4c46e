//! One-dimensional quadrature rules.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFailure {
    pub lo: f64,
    pub hi: f64,
    pub estimated_error: f64,
}

/// Adaptive Simpson with Richardson correction. `tol` is absolute.
pub fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, max_depth: u32) -> T {
    if a == b {
        return T::zero();
    }
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let (flm, frm) = (f(lm), f(rm));
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}

const GK_XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut kron = fc * T::lit(GK_WK[7]);
    let mut gauss = fc * T::lit(GK_WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(GK_XK[j]);
        let s = f(c - dx) + f(c + dx);
        kron += T::lit(GK_WK[j]) * s;
        if j % 2 == 1 {
            gauss += T::lit(GK_WG[j / 2]) * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration on `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
/// `initial_pieces` uniform panels seed the subdivision so narrow features
/// are not missed by the first estimate.
pub fn gauss_kronrod<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
    initial_pieces: usize,
    max_intervals: usize,
) -> Result<T, QuadratureFailure> {
    let pieces = initial_pieces.max(1);
    let width = (b - a) / T::from_usize_lossy(pieces);
    // (lo, hi, value, err)
    let mut panels: Vec<(T, T, T, T)> = (0..pieces)
        .map(|i| {
            let lo = a + width * T::from_usize_lossy(i);
            let hi = if i + 1 == pieces { b } else { lo + width };
            let (v, e) = gk15(f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let total: T = panels.iter().map(|p| p.2).sum();
        let err: T = panels.iter().map(|p| p.3).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target {
            return Ok(total);
        }
        if panels.len() >= max_intervals {
            return Err(QuadratureFailure {
                lo: a.to_f64_lossy(),
                hi: b.to_f64_lossy(),
                estimated_error: err.to_f64_lossy(),
            });
        }
        // bisect the worst panel
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels[idx];
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            // cannot split further; accept as is
            panels[idx].3 = T::zero();
            continue;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        panels[idx] = (lo, mid, v1, e1);
        panels.push((mid, hi, v2, e2));
    }
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Fixed 8-point Gauss–Legendre rule on `[a, b]` (signed: `a > b` allowed).
pub fn gauss_legendre8<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut s = T::zero();
    for j in 0..4 {
        let dx = h * T::lit(GL8_X[j]);
        s += T::lit(GL8_W[j]) * (f(c - dx) + f(c + dx));
    }
    s * h
}

/// Nodes and scaled weights of [`gauss_legendre8`] on `[a, b]`.
pub fn gauss_legendre8_rule<T: Scalar>(a: T, b: T) -> [(T, T); 8] {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut out = [(T::zero(), T::zero()); 8];
    for j in 0..4 {
        let dx = h * T::lit(GL8_X[j]);
        let w = h * T::lit(GL8_W[j]);
        out[2 * j] = (c - dx, w);
        out[2 * j + 1] = (c + dx, w);
    }
    out
}
