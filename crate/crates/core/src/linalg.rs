//! Small dense symmetric eigenproblems (n ≤ 32) by cyclic Jacobi rotations.

/// Eigenvalues of the symmetric row-major `n×n` matrix `a`, ascending.
/// Iterates until the off-diagonal Frobenius norm drops below `1e-10`.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix size");
    let mut m = a.to_vec();
    const TOL: f64 = 1e-10;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_and_two_by_two() {
        assert_eq!(symmetric_eigenvalues(&[3.0, 0.0, 0.0, -1.0], 2), vec![-1.0, 3.0]);
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn three_by_three_known_spectrum() {
        // tridiagonal 2,-1 matrix: eigenvalues 2 - 2cos(kπ/4)
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let e = symmetric_eigenvalues(&a, 3);
        for (k, ev) in e.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k as f64 + 1.0) * std::f64::consts::PI / 4.0).cos();
            assert!((ev - want).abs() < 1e-10, "{e:?}");
        }
    }

    proptest! {
        #[test]
        fn trace_and_frobenius_are_preserved(vals in proptest::collection::vec(-5.0f64..5.0, 16)) {
            let n = 4;
            let mut a = vec![0.0; 16];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = vals[i.min(j) * n + i.max(j)];
                }
            }
            let e = symmetric_eigenvalues(&a, n);
            let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let fro: f64 = a.iter().map(|v| v * v).sum();
            prop_assert!((e.iter().sum::<f64>() - tr).abs() < 1e-9);
            prop_assert!((e.iter().map(|v| v * v).sum::<f64>() - fro).abs() < 1e-8 * (1.0 + fro));
        }
    }
}
