use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MlError;

/// Seeded shuffle, then the first `floor(n(1-f))` rows train and the rest
/// test. Rows are cloned untouched.
pub fn train_test_split<T: Clone>(
    rows: &[T],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), MlError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(MlError::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = rows.len();
    // The small bias keeps products like 1100 * 0.7 from rounding down.
    let n_train = ((n as f64) * (1.0 - test_fraction) + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(MlError::DegenerateSplit {
            train: n_train.min(n),
            test: n - n_train.min(n),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train].iter().map(|&i| rows[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| rows[i].clone()).collect();
    Ok((train, test))
}
