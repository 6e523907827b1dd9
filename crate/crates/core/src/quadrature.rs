//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{PevError, Result};
use crate::hilbert::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    /// Absolute floor relative to the integral of |f|.
    pub l1_floor: f64,
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            l1_floor: 1e-14,
            max_evaluations: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    /// ∫|f| estimate.
    pub l1: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
    l1: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15(f: &impl Fn(f64) -> C64, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut l1 = fc.norm() * WGK[7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += (f1 + f2) * WGK[i];
        l1 += (f1.norm() + f2.norm()) * WGK[i];
        if i % 2 == 1 {
            g += (f1 + f2) * WG[i / 2];
        }
    }
    Segment {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).norm(),
        l1: l1 * h.abs(),
    }
}

/// ∫_a^b f. Stops when the summed error estimate is below
/// max(rel_tol·|I|, l1_floor·∫|f|); otherwise returns QuadratureFailure.
pub fn integrate(f: impl Fn(f64) -> C64, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    heap.push(gk15(&f, a, b));
    let mut evaluations = 15;
    loop {
        let (value, error, l1) = heap.iter().fold((C64::new(0.0, 0.0), 0.0, 0.0), |acc, s| {
            (acc.0 + s.value, acc.1 + s.error, acc.2 + s.l1)
        });
        let target = (opts.rel_tol * value.norm()).max(opts.l1_floor * l1);
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                l1,
                evaluations,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if evaluations + 30 > opts.max_evaluations || m <= worst.a || m >= worst.b {
            heap.push(worst);
            let (value, error) = heap.iter().fold((C64::new(0.0, 0.0), 0.0), |acc, s| {
                (acc.0 + s.value, acc.1 + s.error)
            });
            return Err(PevError::QuadratureFailure {
                estimate: value.norm(),
                error,
                evaluations,
            });
        }
        heap.push(gk15(&f, worst.a, m));
        heap.push(gk15(&f, m, worst.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(
            |x| C64::new(x.powi(5), 0.0),
            0.0,
            2.0,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value.re - 64.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn oscillatory() {
        let w = 200.0;
        let r = integrate(
            |x| C64::from_polar(1.0, -w * x),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let exact = (C64::new(0.0, -w).exp() - 1.0) / C64::new(0.0, -w);
        assert!((r.value - exact).norm() < 1e-9 * exact.norm());
    }

    #[test]
    fn failure_is_reported() {
        let opts = QuadOptions {
            max_evaluations: 45,
            ..Default::default()
        };
        let r = integrate(|x| C64::new((1e4 * x).sin(), 0.0), 0.0, 1.0, &opts);
        assert!(matches!(r, Err(PevError::QuadratureFailure { .. })));
    }
}
