//! Finite-difference weights (Fornberg's recursion) and grid derivatives.

/// Weights for the `m`-th derivative at `z` from samples at `x`.
///
/// Returns a vector `w` with `f^{(m)}(z) ≈ Σ w[i] f(x[i])`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "stencil of {n} points cannot resolve derivative order {m}");
    // c[i][k]: weight of x[i] for the k-th derivative.
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Half-width (in grid steps) of the fourth-order central stencil for the
/// `m`-th derivative.
pub fn central_half_width(m: usize) -> usize {
    m.div_ceil(2) + 1
}

/// Fourth-order central-difference weights for the `m`-th derivative on a
/// uniform grid with unit spacing, offsets `-r..=r`.
pub fn central_weights(m: usize) -> Vec<f64> {
    let r = central_half_width(m) as isize;
    let offsets: Vec<f64> = (-r..=r).map(|o| o as f64).collect();
    fornberg_weights(0.0, &offsets, m)
}

/// Fourth-order one-sided weights for the `m`-th derivative at offset 0
/// using points `0, 1, ..., m + 3` (unit spacing).
pub fn forward_weights(m: usize) -> Vec<f64> {
    let offsets: Vec<f64> = (0..m + 4).map(|o| o as f64).collect();
    fornberg_weights(0.0, &offsets, m)
}

/// Uniformly sampled function on `[0, 1]` (endpoints included).
#[derive(Debug, Clone)]
pub struct UniformGrid {
    values: Vec<f64>,
}

impl UniformGrid {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = 1.0 / (n - 1) as f64;
        Self::new((0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.values.len() - 1) as f64
    }

    pub fn abs_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Central-difference derivative of order `m` at interior index `i`,
    /// using every `stride`-th sample.
    pub fn central_derivative(&self, i: usize, m: usize, stride: usize) -> f64 {
        let w = central_weights(m);
        let r = central_half_width(m);
        let h = self.step() * stride as f64;
        let acc: f64 = w
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * self.values[i + k * stride - r * stride])
            .sum();
        acc / h.powi(m as i32)
    }

    /// One-sided derivative of order `m` at the left (`at_right = false`) or
    /// right endpoint.
    pub fn endpoint_derivative(&self, m: usize, at_right: bool) -> f64 {
        self.endpoint_derivative_strided(m, at_right, 1)
    }

    /// [`endpoint_derivative`](Self::endpoint_derivative) on every
    /// `stride`-th grid point.
    pub fn endpoint_derivative_strided(&self, m: usize, at_right: bool, stride: usize) -> f64 {
        let w = forward_weights(m);
        let h = self.step() * stride as f64;
        let n = self.values.len();
        let acc: f64 = w
            .iter()
            .enumerate()
            .map(|(k, wk)| {
                if at_right {
                    wk * self.values[n - 1 - k * stride]
                } else {
                    wk * self.values[k * stride]
                }
            })
            .sum();
        // Mirrored stencil flips the sign of odd derivatives.
        let sign = if at_right && m % 2 == 1 { -1.0 } else { 1.0 };
        sign * acc / h.powi(m as i32)
    }
}
