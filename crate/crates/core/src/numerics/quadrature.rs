//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and semi-infinite
//! intervals, for real- and complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::NumericsError;

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (non-negative half).
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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Weights of the embedded 7-point Gauss rule, at `XGK[1]`, `XGK[3]`, `XGK[5]`, `XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_MAX_SUBDIVISIONS: usize = 4000;

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
    fn to_complex(self) -> Complex64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Integration domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[a, b]`; `a > b` integrates with flipped sign.
    Finite(f64, f64),
    /// `[a, ∞)`, mapped onto `[0, 1)` through `x = a + t/(1 − t)`.
    SemiInfinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<V> {
    pub value: V,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Integrator {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_max_subdivisions(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions.max(1);
        self
    }

    pub fn integrate<V, F>(&self, f: F, domain: Domain) -> Result<QuadratureResult<V>, NumericsError>
    where
        V: QuadValue,
        F: Fn(f64) -> V,
    {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(NumericsError::InvalidTolerance {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
            });
        }
        match domain {
            Domain::Finite(a, b) => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(NumericsError::InvalidDomain(format!("[{a}, {b}]")));
                }
                if a == b {
                    return Ok(QuadratureResult {
                        value: V::zero(),
                        abs_error_estimate: 0.0,
                        evaluations: 1,
                    });
                }
                let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                let mut r = self.adaptive(&|x| f(x), &|x| x, lo, hi)?;
                r.value = r.value * sign;
                Ok(r)
            }
            Domain::SemiInfinite(a) => {
                if !a.is_finite() {
                    return Err(NumericsError::InvalidDomain(format!("[{a}, inf)")));
                }
                let map = move |t: f64| a + t / (1.0 - t);
                let g = |t: f64| {
                    let s = 1.0 - t;
                    f(a + t / s) * (1.0 / (s * s))
                };
                self.adaptive(&g, &map, 0.0, 1.0)
            }
        }
    }

    /// Bisect the subinterval with the largest error estimate until the
    /// summed error meets `max(abs_tol, rel_tol·|I|)`.
    fn adaptive<V, G, M>(&self, g: &G, to_x: &M, a: f64, b: f64) -> Result<QuadratureResult<V>, NumericsError>
    where
        V: QuadValue,
        G: Fn(f64) -> V,
        M: Fn(f64) -> f64,
    {
        let mut evaluations = 0usize;
        let first = gauss_kronrod(g, to_x, a, b, &mut evaluations)?;
        let mut total = first.value;
        let mut total_err = first.error;
        let mut total_floor = first.floor;
        let mut heap = BinaryHeap::new();
        heap.push(first);

        loop {
            // Accuracy below the summed rounding floor is unreachable.
            let target = self.abs_tol.max(self.rel_tol * total.magnitude()).max(2.0 * total_floor);
            if total_err <= target {
                break;
            }
            if heap.len() >= self.max_subdivisions {
                return Err(NumericsError::NotConverged {
                    estimate: total.to_complex(),
                    abs_error_estimate: total_err,
                    evaluations,
                });
            }
            let worst = heap.pop().expect("heap holds at least one segment");
            let mid = 0.5 * (worst.a + worst.b);
            // Machine-precision width: nothing left to refine here.
            if mid <= worst.a || mid >= worst.b {
                return Err(NumericsError::NotConverged {
                    estimate: total.to_complex(),
                    abs_error_estimate: total_err,
                    evaluations,
                });
            }
            let left = gauss_kronrod(g, to_x, worst.a, mid, &mut evaluations)?;
            let right = gauss_kronrod(g, to_x, mid, worst.b, &mut evaluations)?;
            total = total - worst.value + left.value + right.value;
            total_err += left.error + right.error - worst.error;
            total_floor += left.floor + right.floor - worst.floor;
            heap.push(left);
            heap.push(right);
        }

        // Re-sum from the segments to shed drift from the running updates.
        let mut value = V::zero();
        let mut err = 0.0;
        for seg in heap.iter() {
            value = value + seg.value;
            err += seg.error;
        }
        Ok(QuadratureResult {
            value,
            abs_error_estimate: err,
            evaluations,
        })
    }
}

/// Integrate `f` over `domain` to `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<V, F>(f: F, domain: Domain, rel_tol: f64, abs_tol: f64) -> Result<QuadratureResult<V>, NumericsError>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    Integrator::new(rel_tol, abs_tol).integrate(f, domain)
}

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    /// Rounding-error level 50·ε·∫|f|.
    floor: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<V, G, M>(g: &G, to_x: &M, a: f64, b: f64, evaluations: &mut usize) -> Result<Segment<V>, NumericsError>
where
    V: QuadValue,
    G: Fn(f64) -> V,
    M: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |t: f64| -> Result<V, NumericsError> {
        let v = g(t);
        if v.is_finite_value() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteIntegrand { abscissa: to_x(t) })
        }
    };

    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fvals = [(V::zero(), V::zero()); 7];
    for (j, slot) in fvals.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        kronrod = kronrod + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
        *slot = (f1, f2);
    }
    *evaluations += 15;

    // QUADPACK-style error rescaling.
    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    let mut res_abs = WGK[7] * fc.magnitude();
    for (j, (f1, f2)) in fvals.iter().enumerate() {
        res_asc += WGK[j] * ((*f1 - mean).magnitude() + (*f2 - mean).magnitude());
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
    }
    let scale = half.abs();
    res_asc *= scale;
    res_abs *= scale;
    let mut err = ((kronrod - gauss) * half).magnitude();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }

    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: err,
        floor,
    })
}
