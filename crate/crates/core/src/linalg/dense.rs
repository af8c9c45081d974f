use nalgebra::{DMatrix, DVector};

use crate::error::{CarnotError, Result};

/// Dense LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    /// Factors the `n×n` row-major matrix `a`. A pivot below `tol · max|a|`
    /// is reported as singular.
    pub fn new(n: usize, a: Vec<f64>, tol: f64) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let m = DMatrix::from_row_slice(n, n, &a);
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let lu = m.lu();
        if let Some(k) = (0..n).find(|&k| lu.u()[(k, k)].abs() <= tol * scale) {
            return Err(CarnotError::SingularSystem { pivot: k });
        }
        Ok(Self { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(b);
        self.lu
            .solve(&b)
            .expect("factorization was checked for singular pivots")
            .as_slice()
            .to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system_with_pivoting() {
        // Zero leading entry forces a row swap.
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::new(3, a.clone(), 1e-14).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum()).collect();
        let x = lu.solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(
            DenseLu::new(2, a, 1e-12),
            Err(CarnotError::SingularSystem { pivot: 1 })
        ));
    }
}
