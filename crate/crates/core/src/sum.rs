//! Summation with a fixed, ascending order.
//!
//! Short sums are accumulated naively; above [`COMPENSATION_THRESHOLD`] terms
//! Neumaier's variant of Kahan summation is used. Either way the result only
//! depends on the input order, so diagnostics are reproducible bit-for-bit.

/// Sums longer than this use compensated accumulation.
pub const COMPENSATION_THRESHOLD: usize = 64;

/// Neumaier-compensated sum, always.
pub fn compensated<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Ascending-order sum of a slice; compensated when longer than the threshold.
pub fn ordered(terms: &[f64]) -> f64 {
    if terms.len() > COMPENSATION_THRESHOLD {
        compensated(terms.iter().copied())
    } else {
        terms.iter().fold(0.0, |acc, x| acc + x)
    }
}

/// Ascending-order sum of a mapped slice.
pub fn ordered_map<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    if items.len() > COMPENSATION_THRESHOLD {
        compensated(items.iter().map(f))
    } else {
        items.iter().fold(0.0, |acc, x| acc + f(x))
    }
}
