//! Bootstrap ensembles and the estimate / std. error / z / p aggregation.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::network::Network;
use crate::tabular::{DataTable, Formula};
use crate::training::{prepare, run_epochs, split_validation, complement, EpochData, Prepared,
    StopReason, TrainConfig, TrainError, TrainingHistory};

/// Below this standard error, z and p are reported as undefined.
pub const MIN_STD_ERR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UncertaintyError {
    #[error("need at least 2 finite replicate values, got {0}")]
    TooFewReplicates(usize),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index`: `splitmix64(master ^ splitmix64(index + 1))`.
/// Injective in `index` for a fixed master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub index: usize,
    pub seed: u64,
    /// Rows of the training table, drawn with replacement.
    pub resample: Vec<usize>,
    /// Positions within `resample` held out for validation.
    pub validation: Vec<usize>,
    pub network: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub master_seed: u64,
    /// Successful replicates, ordered by index.
    pub replicates: Vec<Replicate>,
    /// Indices of replicates that diverged.
    pub failures: Vec<usize>,
}

impl BootstrapEnsemble {
    pub fn b(&self) -> usize {
        self.replicates.len() + self.failures.len()
    }

    pub fn networks(&self) -> impl Iterator<Item = &Network> {
        self.replicates.iter().map(|r| &r.network)
    }
}

/// Resample indices and validation positions of replicate `index`, plus the
/// rng that continues into network initialization and training.
fn draw_resample(master: u64, index: usize, n: usize, validation: f64) -> (u64, Vec<usize>, Vec<usize>, ChaCha8Rng) {
    let seed = derive_seed(master, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let val = split_validation(n, validation, &mut rng);
    (seed, resample, val, rng)
}

fn train_replicate(
    config: &TrainConfig,
    x: ArrayView2<f64>,
    y: &[f64],
    output_dim: usize,
    master: u64,
    index: usize,
) -> Result<Option<Replicate>, TrainError> {
    let n = x.nrows();
    let (seed, resample, validation, mut rng) = draw_resample(master, index, n, config.validation);
    let xb = x.select(ndarray::Axis(0), &resample);
    let yb: Vec<f64> = resample.iter().map(|&r| y[r]).collect();
    let train = complement(n, &validation);
    let mut net = Network::init(config.network_config(x.ncols(), output_dim), &mut rng)?;
    let mut history = TrainingHistory { epochs: Vec::new(), baseline: f64::NAN };
    let data = EpochData { x: xb.view(), y: &yb, train_rows: &train, val_rows: &validation };
    let reason = run_epochs(&mut net, config, &data, &mut rng, &mut history, &mut |_, _| {})?;
    Ok((reason != StopReason::Diverged).then_some(Replicate { index, seed, resample, validation, network: net }))
}

/// Runs `job(i)` for every `i < count` on up to `threads` scoped threads and
/// returns the results in index order.
pub(crate) fn parallel_map<T: Send>(
    count: usize,
    threads: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let threads = threads.clamp(1, count.max(1));
    if threads == 1 {
        return (0..count).map(job).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let job = &job;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..count).step_by(threads).map(|i| (i, job(i))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, v) in h.join().expect("worker panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every slot filled")).collect()
}

fn collect_ensemble(
    master: u64,
    results: Vec<Result<Option<Replicate>, TrainError>>,
) -> Result<BootstrapEnsemble, TrainError> {
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(rep) => replicates.push(rep),
            None => failures.push(i),
        }
    }
    if replicates.len() < 2 {
        return Err(TrainError::Bootstrap(format!(
            "only {} of {} replicates converged",
            replicates.len(),
            replicates.len() + failures.len()
        )));
    }
    Ok(BootstrapEnsemble { master_seed: master, replicates, failures })
}

/// Bootstrap on an already encoded design, so replicates share the
/// full-data encoder.
pub(crate) fn bootstrap_design(
    config: &TrainConfig,
    x: ArrayView2<f64>,
    y: &[f64],
    output_dim: usize,
    b: usize,
    master_seed: u64,
) -> Result<BootstrapEnsemble, TrainError> {
    if b < 2 {
        return Err(TrainError::ConfigInvalid(format!("bootstrap needs at least 2 replicates, got {b}")));
    }
    let results = parallel_map(b, config.threads, |i| train_replicate(config, x, y, output_dim, master_seed, i));
    collect_ensemble(master_seed, results)
}

/// Trains `b` replicates on resamples of the table. The design is encoded
/// exactly as [`crate::training::fit`] would with the same config.
pub fn bootstrap_fit(
    config: &TrainConfig,
    table: &DataTable,
    formula: &Formula,
    b: usize,
    master_seed: u64,
) -> Result<BootstrapEnsemble, TrainError> {
    let Prepared { x, y, output_dim, .. } = prepare(config, table, formula)?;
    bootstrap_design(config, x.view(), &y, output_dim, b, master_seed)
}

/// Continues every replicate on its own resample.
pub(crate) fn continue_ensemble(
    ens: &BootstrapEnsemble,
    config: &TrainConfig,
    x: ArrayView2<f64>,
    y: &[f64],
    round: u32,
) -> Result<BootstrapEnsemble, TrainError> {
    let n = x.nrows();
    let results = parallel_map(ens.replicates.len(), config.threads, |i| -> Result<Option<Replicate>, TrainError> {
        let rep = &ens.replicates[i];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep.seed, u64::MAX - round as u64));
        let xb = x.select(ndarray::Axis(0), &rep.resample);
        let yb: Vec<f64> = rep.resample.iter().map(|&r| y[r]).collect();
        let train = complement(n, &rep.validation);
        let mut net = rep.network.clone();
        let mut history = TrainingHistory { epochs: Vec::new(), baseline: f64::NAN };
        let data = EpochData { x: xb.view(), y: &yb, train_rows: &train, val_rows: &rep.validation };
        let reason = run_epochs(&mut net, config, &data, &mut rng, &mut history, &mut |_, _| {})?;
        Ok((reason != StopReason::Diverged).then(|| Replicate { network: net, ..rep.clone() }))
    });
    let mut replicates = Vec::new();
    let mut failures = ens.failures.clone();
    for (i, r) in results.into_iter().enumerate() {
        match r? {
            Some(rep) => replicates.push(rep),
            None => failures.push(ens.replicates[i].index),
        }
    }
    failures.sort_unstable();
    if replicates.len() < 2 {
        return Err(TrainError::Bootstrap("fewer than 2 replicates survived continued training".into()));
    }
    Ok(BootstrapEnsemble { master_seed: ens.master_seed, replicates, failures })
}

/// Elementwise sample sd (n − 1) across equally shaped arrays. Deviations
/// are taken from the first array so identical inputs give exactly 0.
pub fn elementwise_sd(arrays: &[Array2<f64>]) -> Array2<f64> {
    let k = arrays.len() as f64;
    let first = &arrays[0];
    let shifted: Vec<Array2<f64>> = arrays.iter().map(|a| a - first).collect();
    let mut mean = Array2::<f64>::zeros(first.raw_dim());
    for d in &shifted {
        mean += d;
    }
    mean /= k;
    let mut ss = Array2::<f64>::zeros(mean.raw_dim());
    for d in &shifted {
        let e = d - &mean;
        ss += &(&e * &e);
    }
    ss.mapv(|v| (v / (k - 1.0)).sqrt())
}

/// Sample standard deviation (n − 1), shifted by the first value so that
/// constant input gives exactly 0.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let shift = values[0];
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
    (values.iter().map(|v| (v - shift - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard normal CDF, `erfc(−x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided normal p-value of `z`.
pub fn two_sided_p(z: f64) -> f64 {
    // Φ(−|z|) avoids cancellation in 1 − Φ(|z|) for large |z|.
    (2.0 * normal_cdf(-z.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub name: String,
    pub estimate: f64,
    pub std_err: f64,
    /// `None` when the standard error is (numerically) zero.
    pub z: Option<f64>,
    pub p: Option<f64>,
}

/// Point estimate from the full-data fit; spread from the replicates.
pub fn aggregate(name: &str, full_data_value: f64, replicate_values: &[f64]) -> Result<StatRow, UncertaintyError> {
    let finite: Vec<f64> = replicate_values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return Err(UncertaintyError::TooFewReplicates(finite.len()));
    }
    Ok(from_estimate(name, full_data_value, sample_sd(&finite)))
}

/// A row from a printed estimate and standard error.
pub fn from_estimate(name: &str, estimate: f64, std_err: f64) -> StatRow {
    let (z, p) = if std_err < MIN_STD_ERR {
        (None, None)
    } else {
        let z = estimate / std_err;
        (Some(z), Some(two_sided_p(z)))
    };
    StatRow { name: name.to_string(), estimate, std_err, z, p }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Φ from the Taylor series of erf; accurate for |x| ≤ 4.
    fn cdf_series(x: f64) -> f64 {
        let t = x / std::f64::consts::SQRT_2;
        let mut term = t;
        let mut sum = t;
        for n in 1..200 {
            term *= -t * t / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        for &x in &[-3.0, -1.2, -0.3, 0.7, 2.5, 3.9] {
            assert!((normal_cdf(x) - cdf_series(x)).abs() < 1e-10, "{x}");
        }
        assert_eq!(normal_cdf(40.0), 1.0);
        assert_eq!(normal_cdf(-40.0), 0.0);
    }

    #[test]
    fn aggregate_examples() {
        let r = from_estimate("bio18", 0.031117, 0.007020);
        assert!((r.z.unwrap() - 4.43).abs() < 0.01);
        assert!((r.p.unwrap() - 9.3e-6).abs() < 1e-6);
        let r = from_estimate("bio16", -1.310, 0.271);
        assert!((r.z.unwrap() + 4.83).abs() < 0.01);
        assert!((r.p.unwrap() - 1.4e-6).abs() < 1e-6);

        let flat = aggregate("x", 2.0, &[2.0; 5]).unwrap();
        assert_eq!(flat.std_err, 0.0);
        assert_eq!((flat.z, flat.p), (None, None));
        assert_eq!(aggregate("x", 1.0, &[1.0]), Err(UncertaintyError::TooFewReplicates(1)));
    }

    #[test]
    fn seeds_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn parallel_map_preserves_order() {
        let a = parallel_map(17, 1, |i| i * i);
        let b = parallel_map(17, 4, |i| i * i);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn cdf_symmetry(x in -8.0f64..8.0) {
            prop_assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-15);
        }

        #[test]
        fn p_matches_formula(est in -5.0f64..5.0, se in 0.01f64..3.0) {
            let r = from_estimate("f", est, se);
            let z = est / se;
            prop_assert!((r.p.unwrap() - 2.0 * (1.0 - normal_cdf(z.abs()))).abs() < 1e-14);
            prop_assert!((0.0..=1.0).contains(&r.p.unwrap()));
        }

        #[test]
        fn sd_translation_invariant(v in prop::collection::vec(-100.0f64..100.0, 2..20), c in -50.0f64..50.0) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = aggregate("f", 0.0, &v).unwrap().std_err;
            let b = aggregate("f", c, &shifted).unwrap().std_err;
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        }
    }
}
