//! Scalar math shim: `std` float intrinsics when available, `libm` otherwise.

#![allow(dead_code)]

macro_rules! shim {
    ($(fn $name:ident($($arg:ident),+) -> f64 => $libm:ident;)*) => {
        $(
            #[cfg(feature = "std")]
            #[inline(always)]
            pub fn $name($($arg: f64),+) -> f64 {
                shim!(@std $name, $($arg),+)
            }
            #[cfg(not(feature = "std"))]
            #[inline(always)]
            pub fn $name($($arg: f64),+) -> f64 {
                libm::$libm($($arg),+)
            }
        )*
    };
    (@std $name:ident, $a:ident) => { $a.$name() };
    (@std $name:ident, $a:ident, $b:ident) => { $a.$name($b) };
}

shim! {
    fn sin(x) -> f64 => sin;
    fn cos(x) -> f64 => cos;
    fn tan(x) -> f64 => tan;
    fn sqrt(x) -> f64 => sqrt;
    fn exp(x) -> f64 => exp;
    fn ln(x) -> f64 => log;
    fn abs(x) -> f64 => fabs;
    fn floor(x) -> f64 => floor;
    fn round(x) -> f64 => round;
    fn acos(x) -> f64 => acos;
    fn powf(x, y) -> f64 => pow;
    fn atan2(y, x) -> f64 => atan2;
}

/// Least non-negative remainder of `x` modulo `m` (`m > 0`).
#[inline]
pub fn rem_euclid(x: f64, m: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.rem_euclid(m)
    }
    #[cfg(not(feature = "std"))]
    {
        let r = libm::fmod(x, m);
        if r < 0.0 {
            r + m
        } else {
            r
        }
    }
}

#[inline]
pub fn hypot_n(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|c| c * c).sum())
}
