//! Float intrinsics that work both with and without `std`.

#[cfg(feature = "std")]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}
#[cfg(not(feature = "std"))]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
pub fn sin(x: f64) -> f64 {
    x.sin()
}
#[cfg(not(feature = "std"))]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[cfg(feature = "std")]
pub fn cos(x: f64) -> f64 {
    x.cos()
}
#[cfg(not(feature = "std"))]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[cfg(feature = "std")]
pub fn ln(x: f64) -> f64 {
    x.ln()
}
#[cfg(not(feature = "std"))]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

pub fn powi(x: f64, mut n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    if n < 0 {
        n = -n;
    }
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
