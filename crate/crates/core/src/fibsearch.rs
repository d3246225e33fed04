//! Worst-case-optimal search for the minimum of a periodic bimodal function
//! sampled at `M` equally indexed points.
//!
//! The domain is treated as a cycle of length `M`. When `M` is not itself a
//! Fibonacci number the search runs over the `M`-periodic extension with a
//! bracket of the next Fibonacci width, and every probe index is reduced
//! modulo `M` before the evaluator sees it.
//!
//! A sequence is bimodal on the cycle when, after merging runs of equal
//! values, it has exactly one local minimum and one local maximum. On such
//! input with strictly monotone flanks the search returns the exact global
//! minimum; on other input it returns some local minimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fibonacci numbers `F_1 = 1, F_2 = 1, ...` stored ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibTable {
    values: Vec<u64>,
}

impl FibTable {
    /// Table holding `F_1..=F_k`.
    pub fn with_len(k: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(k.max(2));
        values.push(1u64);
        values.push(1u64);
        while values.len() < k {
            let n = values.len();
            let next = values[n - 1]
                .checked_add(values[n - 2])
                .ok_or(Error::FibonacciOverflow(n + 1))?;
            values.push(next);
        }
        values.truncate(k);
        Ok(FibTable { values })
    }

    /// `F_k`, one-based. `F_0 = 0` is accepted for convenience.
    pub fn get(&self, k: usize) -> u64 {
        if k == 0 {
            0
        } else {
            self.values[k - 1]
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// The `k`-th Fibonacci number with `F_1 = F_2 = 1`.
pub fn fibonacci(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "Fibonacci index starts at 1".into(),
        ));
    }
    Ok(FibTable::with_len(k)?.get(k))
}

/// Smallest `n` with `F_n >= m`, together with `F_n`.
pub fn pad_to_fibonacci(m: usize) -> Result<(usize, u64)> {
    if m == 0 {
        return Err(Error::Empty("search domain"));
    }
    let target = m as u64;
    let (mut prev, mut cur, mut n) = (0u64, 1u64, 1usize);
    while cur < target {
        let next = prev.checked_add(cur).ok_or(Error::FibonacciOverflow(n + 1))?;
        prev = cur;
        cur = next;
        n += 1;
    }
    Ok((n, cur))
}

/// Bracket `[a, b]` with interior probes `left <= right`, in unreduced
/// (lifted) indices. `width` is the interval of uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchState {
    pub a: i64,
    pub b: i64,
    pub left: i64,
    pub right: i64,
    pub width: i64,
    /// Cached value at the probe that survived the last comparison.
    pub temp: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub argmin_index: usize,
    pub min_value: f64,
    pub evaluations: usize,
}

struct Probe<'g, G> {
    g: &'g mut G,
    m: i64,
    evals: usize,
}

impl<G: FnMut(usize) -> f64> Probe<'_, G> {
    fn eval(&mut self, lifted: i64) -> Result<f64> {
        let idx = lifted.rem_euclid(self.m) as usize;
        self.evals += 1;
        let v = (self.g)(idx);
        if v.is_nan() {
            return Err(Error::NanValue(idx));
        }
        Ok(v)
    }
}

/// Minimize `g` over the cycle `0..m`. The starting probe is drawn
/// uniformly from `0..m` by a generator seeded with `seed`.
pub fn minimize_periodic_bimodal<G>(g: G, m: usize, seed: u64) -> Result<SearchResult>
where
    G: FnMut(usize) -> f64,
{
    run(g, m, seed, None)
}

/// Same as [`minimize_periodic_bimodal`] but also returns the state after
/// the initial bracket selection and after every shrink step.
pub fn minimize_periodic_bimodal_traced<G>(
    g: G,
    m: usize,
    seed: u64,
) -> Result<(SearchResult, Vec<SearchState>)>
where
    G: FnMut(usize) -> f64,
{
    let mut trace = Vec::new();
    let result = run(g, m, seed, Some(&mut trace))?;
    Ok((result, trace))
}

fn run<G>(
    mut g: G,
    m: usize,
    seed: u64,
    mut trace: Option<&mut Vec<SearchState>>,
) -> Result<SearchResult>
where
    G: FnMut(usize) -> f64,
{
    let (n, f_n) = pad_to_fibonacci(m)?;
    let mut probe = Probe {
        g: &mut g,
        m: m as i64,
        evals: 0,
    };

    if f_n == 1 {
        let v = probe.eval(0)?;
        return Ok(SearchResult {
            argmin_index: 0,
            min_value: v,
            evaluations: probe.evals,
        });
    }

    let fib = FibTable::with_len(n)?;
    let f = |k: usize| fib.get(k) as i64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = rng.random_range(0..m) as i64;
    let r0 = l0 + f(n - 1);
    let g_r0 = probe.eval(r0)?;
    let g_l0 = probe.eval(l0)?;

    // Initial detecting state.
    let (mut a, mut b, mut left, mut right, mut g_left, mut g_right);
    if g_l0 >= g_r0 {
        a = l0;
        b = l0 + f(n);
        right = r0;
        g_right = g_r0;
        left = a + f(n - 2);
        g_left = if left == right { g_right } else { probe.eval(left)? };
    } else {
        b = r0;
        a = r0 - f(n);
        left = l0;
        g_left = g_l0;
        right = b - f(n - 2);
        g_right = if left == right { g_left } else { probe.eval(right)? };
    }
    let mut temp = if g_left >= g_right { g_right } else { g_left };
    let mut record = |a, b, left, right, temp, evals| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(SearchState {
                a,
                b,
                left,
                right,
                width: b - a,
                temp,
                evals,
            });
        }
    };
    record(a, b, left, right, temp, probe.evals);

    // Once the bracket has width 2 both probes sit on its midpoint and the
    // survivor is the minimizer.
    while left != right {
        if g_left >= g_right {
            temp = g_right;
            let next_right = 2 * left - a;
            a = left;
            left = right;
            g_left = temp;
            right = next_right;
            g_right = if left == right { temp } else { probe.eval(right)? };
        } else {
            temp = g_left;
            let next_left = 2 * right - b;
            b = right;
            right = left;
            g_right = temp;
            left = next_left;
            g_left = if left == right { temp } else { probe.eval(left)? };
        }
        record(a, b, left, right, temp, probe.evals);
    }

    Ok(SearchResult {
        argmin_index: left.rem_euclid(m as i64) as usize,
        min_value: temp,
        evaluations: probe.evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_scan(values: &[f64]) -> (usize, f64) {
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v < values[best] {
                best = i;
            }
        }
        (best, values[best])
    }

    #[test]
    fn fibonacci_values() {
        assert_eq!(fibonacci(1).unwrap(), 1);
        assert_eq!(fibonacci(2).unwrap(), 1);
        assert_eq!(fibonacci(10).unwrap(), 55);
        assert_eq!(fibonacci(20).unwrap(), 6765);
        assert!(fibonacci(0).is_err());
        assert!(matches!(fibonacci(200), Err(Error::FibonacciOverflow(_))));
    }

    #[test]
    fn table_recurrence() {
        let t = FibTable::with_len(40).unwrap();
        assert_eq!(t.values().len(), 40);
        for k in 3..=40 {
            assert_eq!(t.get(k), t.get(k - 1) + t.get(k - 2));
        }
    }

    #[test]
    fn padding() {
        assert_eq!(pad_to_fibonacci(13).unwrap(), (7, 13));
        assert_eq!(pad_to_fibonacci(1).unwrap(), (1, 1));
        assert_eq!(pad_to_fibonacci(20).unwrap(), (8, 21));
        assert_eq!(pad_to_fibonacci(2).unwrap(), (3, 2));
        assert!(pad_to_fibonacci(0).is_err());
    }

    #[test]
    fn single_point_domain() {
        let r = minimize_periodic_bimodal(|_| 4.5, 1, 99).unwrap();
        assert_eq!(r.argmin_index, 0);
        assert_eq!(r.min_value, 4.5);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn cyclic_v_shape_m13() {
        let g = |i: usize| {
            let d = (i as i64 - 9).rem_euclid(13);
            d.min(13 - d) as f64
        };
        let values: Vec<f64> = (0..13).map(g).collect();
        assert_eq!(full_scan(&values), (9, 0.0));
        for seed in 0..50 {
            let r = minimize_periodic_bimodal(g, 13, seed).unwrap();
            assert_eq!((r.argmin_index, r.min_value), (9, 0.0), "seed {seed}");
        }
    }

    #[test]
    fn cosine_m55() {
        let g = |i: usize| -(2.0 * std::f64::consts::PI * (i as f64 - 17.0) / 55.0).cos();
        let values: Vec<f64> = (0..55).map(g).collect();
        assert_eq!(full_scan(&values).0, 17);
        for seed in 0..100 {
            let r = minimize_periodic_bimodal(g, 55, seed).unwrap();
            assert_eq!(r.argmin_index, 17, "seed {seed}");
            assert!(r.evaluations <= 11);
        }
    }

    #[test]
    fn nan_is_rejected() {
        let r = minimize_periodic_bimodal(|_| f64::NAN, 8, 1);
        assert!(matches!(r, Err(Error::NanValue(_))));
    }

    #[test]
    fn evaluation_count_by_domain_size() {
        for m in 1..=300usize {
            let (n, _) = pad_to_fibonacci(m).unwrap();
            let g = |i: usize| {
                let d = (i as i64 - 3).rem_euclid(m as i64);
                d.min(m as i64 - d) as f64
            };
            let (r, trace) = minimize_periodic_bimodal_traced(g, m, 7).unwrap();
            assert!(r.evaluations <= n + 1, "m={m}");
            if n >= 4 {
                assert_eq!(r.evaluations, n - 1, "m={m}");
            }
            // One new evaluation per shrink step, none on the final
            // degenerate step.
            for w in trace.windows(2) {
                let new = w[1].evals - w[0].evals;
                if w[1].left == w[1].right {
                    assert_eq!(new, 0);
                } else {
                    assert_eq!(new, 1);
                }
                assert!(w[1].width < w[0].width);
            }
        }
    }
}
