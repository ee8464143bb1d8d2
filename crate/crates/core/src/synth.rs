//! Seeded synthetic datasets for tests, demos and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::network::sigmoid;
use crate::tabular::{Column, DataTable};

fn table(names: Vec<String>, columns: Vec<Vec<f64>>) -> DataTable {
    DataTable::new(names, columns.into_iter().map(Column::Numeric).collect()).expect("generated table is valid")
}

/// `y = 2·x1 − x2 + N(0, 0.1²)` with standard normal `x1`, `x2`, plus
/// `noise_features` irrelevant standard normal columns `noise1, noise2, ...`.
pub fn linear(n: usize, noise_features: usize, seed: u64) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut x: Vec<Vec<f64>> = (0..2 + noise_features).map(|_| Vec::with_capacity(n)).collect();
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        for col in x.iter_mut() {
            col.push(normal.sample(&mut rng));
        }
        let i = x[0].len() - 1;
        y.push(2.0 * x[0][i] - x[1][i] + 0.1 * normal.sample(&mut rng));
    }
    let mut names = vec!["y".to_string(), "x1".into(), "x2".into()];
    names.extend((1..=noise_features).map(|j| format!("noise{j}")));
    let mut columns = vec![y];
    columns.extend(x);
    table(names, columns)
}

/// Uniform points on `[-1, 1]²` labelled 1 when `x1·x2 > 0`.
pub fn xor(n: usize, seed: u64) -> DataTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new(-1.0, 1.0).expect("valid range");
    let (mut x1, mut x2, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (a, b): (f64, f64) = (u.sample(&mut rng), u.sample(&mut rng));
        x1.push(a);
        x2.push(b);
        y.push(if a * b > 0.0 { 1.0 } else { 0.0 });
    }
    table(vec!["label".into(), "x1".into(), "x2".into()], vec![y, x1, x2])
}

/// Presence/absence data with `features` AR(1)-correlated predictors
/// `bio1..` (lag-one correlation 0.6) and a 0/1 `label` column. Presences
/// are a minority (roughly a quarter), driven by a few predictors including
/// one unimodal response.
pub fn presence_absence(n: usize, features: usize, seed: u64) -> DataTable {
    assert!(features >= 4, "need at least 4 features");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let rho: f64 = 0.6;
    let innov = (1.0 - rho * rho).sqrt();
    let mut cols: Vec<Vec<f64>> = (0..features).map(|_| Vec::with_capacity(n)).collect();
    let mut label = Vec::with_capacity(n);
    for _ in 0..n {
        let mut prev = normal.sample(&mut rng);
        let mut row = Vec::with_capacity(features);
        for j in 0..features {
            if j > 0 {
                prev = rho * prev + innov * normal.sample(&mut rng);
            }
            row.push(prev);
        }
        let eta = -1.6 + 1.2 * row[0] - 0.9 * row[3] - 0.8 * row[features - 3] * row[features - 3]
            + 0.6 * row[features - 2];
        label.push(if rng.random::<f64>() < sigmoid(eta) { 1.0 } else { 0.0 });
        for (j, v) in row.into_iter().enumerate() {
            // Put predictors on climate-variable-like scales so standardization matters.
            cols[j].push(10.0 * (j as f64 + 1.0) + (1.0 + j as f64 * 0.5) * v);
        }
    }
    let mut names = vec!["label".to_string()];
    names.extend((1..=features).map(|j| format!("bio{j}")));
    let mut columns = vec![label];
    columns.extend(cols);
    table(names, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let t = linear(50, 3, 1);
        assert_eq!(t.n_rows(), 50);
        assert_eq!(t.column_names(), ["y", "x1", "x2", "noise1", "noise2", "noise3"]);
        assert_eq!(t, linear(50, 3, 1));
        assert_ne!(t, linear(50, 3, 2));

        let x = xor(200, 3);
        let Some(Column::Numeric(y)) = x.column("label") else { panic!() };
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        assert!((60..140).contains(&ones));
    }

    #[test]
    fn presence_is_minority() {
        let t = presence_absence(2000, 19, 5);
        assert_eq!(t.n_cols(), 20);
        let Some(Column::Numeric(y)) = t.column("label") else { panic!() };
        let p = y.iter().sum::<f64>() / y.len() as f64;
        assert!(p > 0.1 && p < 0.4, "prevalence {p}");
    }
}
