#![allow(dead_code)]

use infodist::Measurement;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random measurement with every gap (and the minimum) above `min_gap`.
pub fn smooth(rng: &mut ChaCha8Rng, d: usize, min_gap: f64) -> Measurement {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let ok = v.windows(2).all(|w| w[0] - w[1] > min_gap) && v[d - 1] > min_gap;
        if ok {
            return Measurement::new(&v).unwrap();
        }
    }
}

/// Random measurement that hits the ordering boundaries often: values are
/// copied from their neighbours or set to zero at random, and the maximum is
/// sometimes set to 1.
pub fn with_ties(rng: &mut ChaCha8Rng, d: usize) -> Measurement {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        for i in 1..d {
            match rng.random_range(0..6) {
                0 => v[i] = v[i - 1],
                1 => v[i] = 0.0,
                _ => {}
            }
        }
        v.sort_by(|a, b| b.total_cmp(a));
        if rng.random_bool(0.3) {
            let max = v[0];
            v.iter_mut().for_each(|x| *x /= max);
        }
        if let Ok(m) = Measurement::new(&v) {
            return m;
        }
    }
}

pub fn dims(rng: &mut ChaCha8Rng) -> usize {
    [2, 3, 4, 6][rng.random_range(0..4)]
}
