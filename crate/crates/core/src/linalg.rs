//! Dense vector helpers on plain slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Componentwise mean of a set of equal-length rows.
pub fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let mut m = vec![0.0; d];
    for r in rows {
        axpy(1.0, r, &mut m);
    }
    let n = rows.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Sample covariance (divisor `n - 1`) of a set of rows, row-major `d x d`.
pub fn covariance_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    let m = mean_rows(rows);
    let mut c = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            let ri = r[i] - m[i];
            for j in 0..d {
                c[i * d + j] += ri * (r[j] - m[j]);
            }
        }
    }
    let denom = (rows.len().max(2) - 1) as f64;
    c.iter_mut().for_each(|v| *v /= denom);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = [1.0, 2.0, 2.0];
        assert_eq!(norm(&a), 3.0);
        assert_eq!(dot(&a, &[1.0, 0.0, -1.0]), -1.0);
        let mut y = vec![1.0, 1.0, 1.0];
        axpy(2.0, &a, &mut y);
        assert_eq!(y, vec![3.0, 5.0, 5.0]);
        assert_eq!(dist_sq(&a, &[1.0, 2.0, 0.0]), 4.0);
    }

    #[test]
    fn covariance_of_two_points() {
        let rows = vec![vec![0.0, 0.0], vec![2.0, 4.0]];
        assert_eq!(mean_rows(&rows), vec![1.0, 2.0]);
        assert_eq!(covariance_rows(&rows), vec![2.0, 4.0, 4.0, 8.0]);
    }
}
