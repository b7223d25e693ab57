use std::f64::consts::PI;
use std::sync::OnceLock;

/// Largest `n` whose factorial is finite in `f64`.
const TABLE_MAX: usize = 170;

fn table() -> &'static [f64; TABLE_MAX + 1] {
    static TABLE: OnceLock<[f64; TABLE_MAX + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; TABLE_MAX + 1];
        let mut fact = 1.0f64;
        for (n, slot) in out.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            *slot = fact.ln();
        }
        out
    })
}

/// `ln n!`: tabulated up to 170, Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n as usize <= TABLE_MAX {
        return table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln Γ(x + 1) = x ln x − x + ½ ln(2πx) + 1/(12x) − 1/(360x³) + 1/(1260x⁵) − …
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + series
}
