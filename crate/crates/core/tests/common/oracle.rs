//! Brute-force reference implementations, written from the definitions and
//! kept independent of the library code.

/// Rank of each value: one plus the number of smaller values, plus half the
/// number of other values equal to it.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Product-moment correlation from raw sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx.abs() < 1e-12 || vy.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// (concordant, discordant, tied only in x, tied only in y) over all pairs.
pub fn pair_counts(x: &[f64], y: &[f64]) -> (i64, i64, i64, i64) {
    let (mut c, mut d, mut tx, mut ty) = (0, 0, 0, 0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                c += 1;
            } else {
                d += 1;
            }
        }
    }
    (c, d, tx, ty)
}

pub fn tau_a(x: &[f64], y: &[f64]) -> f64 {
    let (c, d, _, _) = pair_counts(x, y);
    let n = x.len() as f64;
    (c - d) as f64 / (n * (n - 1.0) / 2.0)
}

pub fn tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (c, d, tx, ty) = pair_counts(x, y);
    let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
    (denom > 0.0).then(|| (c - d) as f64 / denom)
}

pub fn tie_fraction(v: &[f64]) -> f64 {
    let n = v.len();
    let mut ties = 0;
    for i in 0..n {
        for j in i + 1..n {
            if v[i] == v[j] {
                ties += 1;
            }
        }
    }
    ties as f64 / (n * (n - 1) / 2) as f64
}
