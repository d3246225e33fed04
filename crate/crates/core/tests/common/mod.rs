#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use topoforge::instance::{generate_instance, BoundingBox, Instance};

/// A random cyclic sequence of length `m` with one valley and one peak:
/// strictly monotone flanks, a bottom plateau of any length and a top
/// plateau no longer than `max(1, m / 3)`, rotated by a random offset.
pub fn random_bimodal<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    assert!(m >= 1);
    if m == 1 {
        return vec![rng.random_range(-5.0..5.0)];
    }
    let top_len = rng.random_range(1..=(m / 3).max(1));
    let bottom_len = rng.random_range(1..=m - top_len);
    let rest = m - top_len - bottom_len;
    let up = rng.random_range(0..=rest);
    let down = rest - up;
    let base: f64 = rng.random_range(-100.0..100.0);
    let top = base + rng.random_range(1.0..100.0);
    // Distinct values strictly between base and top; redraw on the rare
    // collision.
    let flank = |rng: &mut R, len: usize, ascending: bool| loop {
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(base..top)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[0] < w[1]) && v.first().is_none_or(|&x| x > base) {
            if !ascending {
                v.reverse();
            }
            break v;
        }
    };
    let mut seq = vec![base; bottom_len];
    seq.extend(flank(rng, up, true));
    seq.extend(std::iter::repeat_n(top, top_len));
    seq.extend(flank(rng, down, false));
    let shift = rng.random_range(0..m);
    seq.rotate_left(shift);
    seq
}

pub fn uniform(n: usize, seed: u64) -> Instance {
    generate_instance(n, seed, BoundingBox::square(100.0), (1.0, 10.0)).unwrap()
}

/// Shuffled copy, to check order independence.
pub fn shuffled<T: Clone, R: Rng>(rng: &mut R, v: &[T]) -> Vec<T> {
    let mut out = v.to_vec();
    out.shuffle(rng);
    out
}
