use crate::{Error, Result};

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_primitive(k: &[i64]) -> Result<()> {
    if k.iter().fold(0, |g, &x| gcd(g, x)) != 1 {
        return Err(Error::NonPrimitive(k.to_vec()));
    }
    Ok(())
}

/// Integer matrix `V` (row-major, `d x d`) with `det V = +-1` and `k V = e_1`,
/// so the first row of `V^{-1}` is `k`. The map `z -> V z` sends
/// `{z_1 = c}` onto the layer `{<k, y> = c}` of the torus.
pub fn unimodular_completion(k: &[i64]) -> Result<Vec<Vec<i64>>> {
    check_primitive(k)?;
    let d = k.len();
    let mut row = k.to_vec();
    let mut v: Vec<Vec<i64>> = (0..d)
        .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
        .collect();
    let col_op = |v: &mut Vec<Vec<i64>>, target: usize, source: usize, q: i64| {
        for r in v.iter_mut() {
            r[target] -= q * r[source];
        }
    };
    loop {
        let nonzero: Vec<usize> = (0..d).filter(|&i| row[i] != 0).collect();
        if nonzero.len() == 1 {
            break;
        }
        let p = *nonzero.iter().min_by_key(|&&i| row[i].abs()).unwrap();
        for &j in &nonzero {
            if j != p {
                let q = row[j].div_euclid(row[p]);
                row[j] -= q * row[p];
                col_op(&mut v, j, p, q);
            }
        }
    }
    let p = (0..d).find(|&i| row[i] != 0).unwrap();
    if p != 0 {
        row.swap(0, p);
        for r in v.iter_mut() {
            r.swap(0, p);
        }
    }
    if row[0] < 0 {
        for r in v.iter_mut() {
            r[0] = -r[0];
        }
    }
    Ok(v)
}

/// Spacing `1/|k|` between consecutive parallel sub-tori orthogonal to the
/// primitive vector `k`.
pub fn sub_torus_period(k: &[i64]) -> Result<f64> {
    check_primitive(k)?;
    Ok(1.0 / k.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(m: &[Vec<i64>]) -> i64 {
        match m.len() {
            1 => m[0][0],
            _ => (0..m.len())
                .map(|j| {
                    let minor: Vec<Vec<i64>> = m[1..]
                        .iter()
                        .map(|r| {
                            r.iter()
                                .enumerate()
                                .filter(|&(c, _)| c != j)
                                .map(|(_, &x)| x)
                                .collect()
                        })
                        .collect();
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    sign * m[0][j] * det(&minor)
                })
                .sum(),
        }
    }

    #[test]
    fn periods() {
        assert_eq!(sub_torus_period(&[1, 0]).unwrap(), 1.0);
        assert!((sub_torus_period(&[1, 1]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((sub_torus_period(&[2, 1]).unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            sub_torus_period(&[2, 2]),
            Err(Error::NonPrimitive(_))
        ));
    }

    #[test]
    fn period_is_smallest_positive_projection() {
        // brute force over a box of integer vectors
        for k in [[1i64, 0], [1, 1], [2, 1], [3, -2], [5, 3]] {
            let e: Vec<f64> = {
                let n = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                vec![k[0] as f64 / n, k[1] as f64 / n]
            };
            let mut best = f64::INFINITY;
            for a in -10i64..=10 {
                for b in -10i64..=10 {
                    let p = a as f64 * e[0] + b as f64 * e[1];
                    if p > 1e-12 {
                        best = best.min(p);
                    }
                }
            }
            assert!((best - sub_torus_period(&k).unwrap()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn completion_is_unimodular(a in -40i64..40, b in -40i64..40, c in -40i64..40) {
            let k = vec![a, b, c];
            prop_assume!(k.iter().fold(0, |g, &x| gcd(g, x)) == 1);
            let v = unimodular_completion(&k).unwrap();
            prop_assert_eq!(det(&v).abs(), 1);
            for j in 0..3 {
                let kv: i64 = (0..3).map(|i| k[i] * v[i][j]).sum();
                prop_assert_eq!(kv, i64::from(j == 0));
            }
        }
    }
}
