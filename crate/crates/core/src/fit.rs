//! Log-log regressions for decay and convergence tables.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Least-squares line through `(ln p, ln v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn check_positive(values: impl IntoIterator<Item = f64>, count: usize) -> Result<()> {
    if count < 3 {
        return Err(LabError::InsufficientSamples(format!("got {count}")));
    }
    for v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(LabError::InsufficientSamples(format!("non-positive or non-finite value {v}")));
        }
    }
    Ok(())
}

fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn fit_decay(samples: &[(f64, f64)]) -> Result<DecayFit> {
    check_positive(samples.iter().flat_map(|&(p, v)| [p, v]), samples.len())?;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::InsufficientSamples("all parameters are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let pred: Vec<f64> = xs.iter().map(|x| intercept + slope * x).collect();
    Ok(DecayFit {
        samples: samples.to_vec(),
        slope,
        intercept,
        r_squared: r_squared(&ys, &pred),
    })
}

/// `v ≈ C p^a q^b` fitted in log space over `(p, q, v)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub samples: Vec<(f64, f64, f64)>,
    pub constant: f64,
    pub exponents: (f64, f64),
    pub r_squared: f64,
    /// True when the exponents were prescribed and only `C` was fitted.
    pub fixed_exponents: bool,
}

/// With `exponents = Some((a, b))` only `C` is fitted and `R^2` measures how
/// well the prescribed law explains the table; otherwise all three are free.
pub fn fit_power_law(samples: &[(f64, f64, f64)], exponents: Option<(f64, f64)>) -> Result<PowerLawFit> {
    check_positive(samples.iter().flat_map(|&(p, q, v)| [p, q, v]), samples.len())?;
    let rows: Vec<[f64; 3]> = samples.iter().map(|&(p, q, v)| [p.ln(), q.ln(), v.ln()]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let (c, a, b) = match exponents {
        Some((a, b)) => {
            let c = rows.iter().map(|r| r[2] - a * r[0] - b * r[1]).sum::<f64>() / rows.len() as f64;
            (c, a, b)
        }
        None => {
            // normal equations for [1, ln p, ln q]
            let mut m = [[0.0; 3]; 3];
            let mut rhs = [0.0; 3];
            for r in &rows {
                let x = [1.0, r[0], r[1]];
                for i in 0..3 {
                    rhs[i] += x[i] * r[2];
                    for j in 0..3 {
                        m[i][j] += x[i] * x[j];
                    }
                }
            }
            let sol = solve3(m, rhs)
                .ok_or_else(|| LabError::InsufficientSamples("the two parameters do not vary independently".into()))?;
            (sol[0], sol[1], sol[2])
        }
    };
    let pred: Vec<f64> = rows.iter().map(|r| c + a * r[0] + b * r[1]).collect();
    Ok(PowerLawFit {
        samples: samples.to_vec(),
        constant: c.exp(),
        exponents: (a, b),
        r_squared: r_squared(&ys, &pred),
        fixed_exponents: exponents.is_some(),
    })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&m);
    let scale: f64 = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if d.abs() <= 1e-12 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *o = det3(&mk) / d;
    }
    Some(out)
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for successive ladder entries.
pub fn refinement_orders(h: &[f64], errors: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(errors.windows(2))
        .map(|(hw, ew)| (ew[0] / ew[1]).ln() / (hw[0] / hw[1]).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_decay(&[(8.0, 1.0 / 8.0), (16.0, 1.0 / 16.0), (32.0, 1.0 / 32.0)]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_decay(&[(8.0, 1.0 / 64.0), (16.0, 1.0 / 256.0), (32.0, 1.0 / 1024.0)]).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(fit_decay(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_decay(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (4.0, 4.0, 4.0)], None).is_err());
    }

    #[test]
    fn recovers_two_exponents() {
        let mut s = Vec::new();
        for p in [4.0, 8.0, 16.0] {
            for q in [0.1, 0.05, 0.025] {
                s.push((p, q, 3.0 * p * q * q));
            }
        }
        let free = fit_power_law(&s, None).unwrap();
        assert!((free.exponents.0 - 1.0).abs() < 1e-10 && (free.exponents.1 - 2.0).abs() < 1e-10);
        assert!((free.constant - 3.0).abs() < 1e-9);
        let fixed = fit_power_law(&s, Some((1.0, 2.0))).unwrap();
        assert!((fixed.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_inverse_law() {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let s: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0]
            .iter()
            .map(|&p| (p, (1.0 + 0.01 * r.gen_range(-1.0..1.0)) / p))
            .collect();
        let f = fit_decay(&s).unwrap();
        assert!((-1.05..=-0.95).contains(&f.slope), "{}", f.slope);
    }

    #[test]
    fn orders_of_a_second_order_sequence() {
        let o = refinement_orders(&[0.1, 0.05, 0.025], &[1e-2, 2.5e-3, 6.25e-4]);
        assert!(o.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
