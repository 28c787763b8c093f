use crate::error::{arg, Result};

/// Shannon binary entropy in bits, with H(0) = H(1) = 0.
pub fn binary_entropy(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return arg(format!("binary entropy needs a probability, got {u}"));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(u) + term(1.0 - u))
}

/// I(A:B) − I(C:E) = (1 − H(f/4)) − f/2 for an attacked fraction `f`.
pub fn threshold_balance(f: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(f / 4.0)? - f / 2.0)
}

/// Root of the intercept-resend balance equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Attacked fraction at which Alice–Bob and Charlie–Eve information are equal.
    pub f_star: f64,
    /// Decoy error rate that fraction produces, `f_star / 4`.
    pub e_star: f64,
    /// Balance equation evaluated at `f_star`.
    pub residual: f64,
}

/// Solves 1 − H(f/4) = f/2 by bisection on (0.01, 0.99) with 200 halvings.
/// The difference is strictly decreasing there, positive at 0.01 and negative
/// at 0.99.
pub fn solve_threshold() -> ThresholdResult {
    let g = |f: f64| threshold_balance(f).expect("f/4 stays inside [0, 1]");
    let (mut lo, mut hi) = (0.01, 0.99);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f_star = 0.5 * (lo + hi);
    ThresholdResult {
        f_star,
        e_star: f_star / 4.0,
        residual: g(f_star),
    }
}

/// Probability that Eve guesses all of `m` attacked qubits, (3/4)^m.
pub fn eve_success_curve(m: u32) -> f64 {
    0.75f64.powi(m as i32)
}

/// Plug-in estimate (bits) of the mutual information between two paired
/// binary samples.
pub fn mutual_information(x: &[bool], y: &[bool]) -> Result<f64> {
    if x.len() != y.len() {
        return arg(format!(
            "mutual information needs paired samples, got {} and {}",
            x.len(),
            y.len()
        ));
    }
    if x.is_empty() {
        return arg("mutual information needs at least one sample");
    }
    let mut joint = [[0usize; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize][b as usize] += 1;
    }
    let n = x.len() as f64;
    let px = [
        (joint[0][0] + joint[0][1]) as f64 / n,
        (joint[1][0] + joint[1][1]) as f64 / n,
    ];
    let py = [
        (joint[0][0] + joint[1][0]) as f64 / n,
        (joint[0][1] + joint[1][1]) as f64 / n,
    ];
    let mut mi = 0.0;
    for (a, row) in joint.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            if count > 0 {
                let p = count as f64 / n;
                mi += p * (p / (px[a] * py[b])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}
