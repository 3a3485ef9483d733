//! Hurwitz zeta and trigamma, used for tails of power-law series.

/// `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0` (Euler–Maclaurin).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    const N: usize = 9;
    // B_{2j} / (2j)!
    const B: [f64; 8] = [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40320.0,
        5.0 / 66.0 / 3628800.0,
        -691.0 / 2730.0 / 479001600.0,
        7.0 / 6.0 / 87178291200.0,
        -3617.0 / 510.0 / 20922789888000.0,
    ];
    let head: f64 = (0..N).map(|k| (k as f64 + a).powf(-s)).sum();
    let x = N as f64 + a;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Rising factorial s(s+1)…(s+2j−2) times x^{−s−2j+1}.
    let mut rising = s;
    let mut power = x.powf(-s - 1.0);
    for (j, b) in B.iter().enumerate() {
        if j > 0 {
            let m = 2.0 * j as f64;
            rising *= (s + m - 1.0) * (s + m);
            power /= x * x;
        }
        tail += b * rising * power;
    }
    head + tail
}

/// `ψ′(x) = Σ_{k≥0} (k + x)^{-2}`.
pub fn trigamma(x: f64) -> f64 {
    hurwitz_zeta(2.0, x)
}
