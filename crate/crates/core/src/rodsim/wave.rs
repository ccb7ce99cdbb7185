/// Displacement (in units of `s`) of the periodic signal `later` relative to
/// `earlier`, from the peak of their circular cross-correlation refined by a
/// parabola through the three largest samples. Positive means moved towards
/// larger `s`; the result lies in `(-L/2, L/2]` with `L = h * len`.
pub fn pulse_shift(earlier: &[f64], later: &[f64], h: f64) -> f64 {
    let n = earlier.len();
    assert_eq!(n, later.len(), "signals must have the same length");
    let mean_a = earlier.iter().sum::<f64>() / n as f64;
    let mean_b = later.iter().sum::<f64>() / n as f64;
    let corr: Vec<f64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (earlier[i] - mean_a) * (later[(i + k) % n] - mean_b))
                .sum()
        })
        .collect();
    let best = (0..n).max_by(|&a, &b| corr[a].total_cmp(&corr[b])).unwrap_or(0);
    let left = corr[(best + n - 1) % n];
    let centre = corr[best];
    let right = corr[(best + 1) % n];
    let curvature = left - 2.0 * centre + right;
    let offset = if curvature < 0.0 {
        0.5 * (left - right) / curvature
    } else {
        0.0
    };
    let mut shift = best as f64 + offset;
    if shift > n as f64 / 2.0 {
        shift -= n as f64;
    }
    shift * h
}
