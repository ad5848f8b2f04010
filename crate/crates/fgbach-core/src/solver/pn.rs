//! Exact-integer audit of the trace-recursion polynomial
//! `P_n(t) = (n-2)(n-4) t^2 + (n-3) t - (n^3 - 7n^2 + 14n - 9)`,
//! whose nonvanishing at positive integers underpins the unique trace
//! determination for n >= 5.

use alloc::vec::Vec;

/// `P_n(t)` over exact integers.
pub fn pn_polynomial(n: i64, t: i64) -> i64 {
    let nn = n;
    (nn - 2) * (nn - 4) * t * t + (nn - 3) * t - (nn * nn * nn - 7 * nn * nn + 14 * nn - 9)
}

#[derive(Clone, Debug)]
pub struct PnRow {
    pub n: i64,
    /// Smallest `|P_n(l)|` over the audited range (must be positive).
    pub min_abs: i64,
    /// The integer `l` attaining it.
    pub argmin: i64,
    /// Bracketing check of the proof: `P_n(sqrt(n-2)) < 0 < P_n(sqrt(n-1))`
    /// (only meaningful for n >= 6).
    pub root_bracketed: bool,
}

#[derive(Clone, Debug)]
pub struct PnAudit {
    pub rows: Vec<PnRow>,
    pub l_range: (i64, i64),
    /// Discriminant of `P_5` (the proof pins it to 136, not a square).
    pub disc5: i64,
    pub disc5_is_square: bool,
    /// True when no audited value vanished.
    pub pass: bool,
}

fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return -1;
    }
    let mut r = (v as f64).sqrt() as i64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Evaluate `P_n(l)` for every `n` in `n_range` and `l = 1..=l_max`,
/// asserting none vanishes, and verify the root brackets used in the
/// nonvanishing proof.
pub fn pn_audit(n_lo: i64, n_hi: i64, l_max: i64) -> PnAudit {
    let mut rows = Vec::new();
    let mut pass = true;
    for n in n_lo..=n_hi.max(n_lo) {
        let mut min_abs = i64::MAX;
        let mut argmin = 0;
        for l in 1..=l_max {
            let v = pn_polynomial(n, l).abs();
            if v == 0 {
                pass = false;
            }
            if v < min_abs {
                min_abs = v;
                argmin = l;
            }
        }
        // bracket: evaluate at t^2 = n-2 and t^2 = n-1 without roots:
        // P_n(t) = a t^2 + b t + c; sign at sqrt(m) equals sign of
        // (a m + c) + b sqrt(m); compare (a m + c)^2 vs b^2 m.
        let a = (n - 2) * (n - 4);
        let b = n - 3;
        let c = -(n * n * n - 7 * n * n + 14 * n - 9);
        let sign_at_sqrt = |m: i64| -> i64 {
            let p = a * m + c;
            let q = b; // q*sqrt(m) with q >= 0 for n >= 3
            if p >= 0 {
                1
            } else if q * q * m < p * p {
                -1
            } else {
                1
            }
        };
        let root_bracketed = if n >= 6 {
            sign_at_sqrt(n - 2) < 0 && sign_at_sqrt(n - 1) > 0
        } else {
            true
        };
        if n >= 6 && !root_bracketed {
            pass = false;
        }
        rows.push(PnRow {
            n,
            min_abs,
            argmin,
            root_bracketed,
        });
    }
    // discriminant of P_5(t) = 3t^2 + 2t - 11: b^2 - 4ac
    let disc5 = 2 * 2 - 4 * 3 * (-11);
    let s = isqrt(disc5);
    PnAudit {
        rows,
        l_range: (1, l_max),
        disc5,
        disc5_is_square: s * s == disc5,
        pass,
    }
}
