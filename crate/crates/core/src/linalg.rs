//! Small dense linear algebra over any [`Scalar`].

use crate::error::{Error, Result};
use crate::exterior::Scalar;

pub type Matrix<S> = Vec<Vec<S>>;

/// Gauss-Jordan inverse with partial pivoting on the leading value.
pub fn inverse<S: Scalar>(m: &Matrix<S>) -> Result<Matrix<S>> {
    let n = m.len();
    let mut a = m.clone();
    let proto = &m[0][0];
    let mut inv: Matrix<S> = (0..n)
        .map(|i| (0..n).map(|j| proto.from_f64(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    let scale = m.iter().flatten().map(|x| x.value().abs()).fold(0.0, f64::max);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        if a[p][col].value().abs() <= 1e-14 * scale.max(1e-300) {
            return Err(Error::Singular("matrix".into()));
        }
        a.swap(col, p);
        inv.swap(col, p);
        let r = a[col][col].recip()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&r);
            inv[col][j] = inv[col][j].mul(&r);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col].clone();
            for j in 0..n {
                let (ac, ic) = (a[col][j].clone(), inv[col][j].clone());
                a[i][j].add_product(&f, &ac, -1.0);
                inv[i][j].add_product(&f, &ic, -1.0);
            }
        }
    }
    Ok(inv)
}

/// Determinant by elimination with partial pivoting.
pub fn det<S: Scalar>(m: &Matrix<S>) -> Result<S> {
    let n = m.len();
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut a = m.clone();
    let mut acc = m[0][0].from_f64(1.0);
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        if a[p][col].value() == 0.0 {
            return Ok(m[0][0].from_f64(0.0));
        }
        if p != col {
            a.swap(col, p);
            acc = acc.scaled(-1.0);
        }
        acc = acc.mul(&a[col][col]);
        let r = a[col][col].recip()?;
        for i in col + 1..n {
            let f = a[i][col].mul(&r);
            for j in col..n {
                let ac = a[col][j].clone();
                a[i][j].add_product(&f, &ac, -1.0);
            }
        }
    }
    Ok(acc)
}

pub fn mat_vec<S: Scalar>(m: &Matrix<S>, v: &[S]) -> Vec<S> {
    m.iter()
        .map(|row| {
            let mut s = v[0].zero_like();
            for (a, b) in row.iter().zip(v) {
                s.add_product(a, b, 1.0);
            }
            s
        })
        .collect()
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Singular("metric is not positive definite".into()));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Jet;

    #[test]
    fn inverse_and_det_f64() {
        let m = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let inv = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((det(&m).unwrap() - 18.0).abs() < 1e-13);
        assert!(inverse(&vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
    }

    #[test]
    fn jet_determinant_derivative() {
        // det [[x, y], [1, x]] = x^2 - y
        let v = Jet::seed(&[0.5, 2.0], 2);
        let one = v[0].constant_like(1.0);
        let m = vec![vec![v[0].clone(), v[1].clone()], vec![one, v[0].clone()]];
        let d = det(&m).unwrap();
        assert!((d.value() + 1.75).abs() < 1e-15);
        assert!((d.d(0) - 1.0).abs() < 1e-15);
        assert!((d.d(1) + 1.0).abs() < 1e-15);
        assert!((d.partial(&[2, 0]).unwrap() - 2.0).abs() < 1e-14);
    }
}
