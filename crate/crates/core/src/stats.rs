//! Mergeable running sums with batch-means error bars.
//!
//! Each Markov chain feeds its own stream. Within a stream, samples are
//! summed into blocks whose size doubles whenever the block count reaches a
//! cap. Merging accumulators is a union of streams keyed by stream id, and all
//! reductions visit streams in key order, so merged results do not depend on
//! the order in which accumulators were merged.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Result};

/// Block count at which a stream halves its resolution.
const BLOCK_CAP: usize = 256;
/// Batches are coarsened until fewer than this many remain.
const MAX_BATCHES: usize = 40;
/// Minimum batch count for a trustworthy error bar.
pub const MIN_BATCHES: usize = 20;

/// A mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n_batches: usize,
}

impl Estimate {
    pub fn exact(v: f64) -> Self {
        Estimate {
            mean: v,
            se: 0.0,
            n_batches: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Stream {
    block_size: u64,
    /// Full blocks, `dim` sums each, flattened.
    blocks: Vec<f64>,
    partial: Vec<f64>,
    partial_count: u64,
    count: u64,
    total: Vec<f64>,
}

impl Stream {
    fn new(dim: usize) -> Self {
        Stream {
            block_size: 1,
            blocks: Vec::new(),
            partial: vec![0.0; dim],
            partial_count: 0,
            count: 0,
            total: vec![0.0; dim],
        }
    }

    fn n_blocks(&self, dim: usize) -> usize {
        if dim == 0 {
            0
        } else {
            self.blocks.len() / dim
        }
    }

    fn push(&mut self, v: &[f64]) {
        let dim = v.len();
        for i in 0..dim {
            self.partial[i] += v[i];
            self.total[i] += v[i];
        }
        self.partial_count += 1;
        self.count += 1;
        if self.partial_count == self.block_size {
            self.blocks.extend_from_slice(&self.partial);
            self.partial.iter_mut().for_each(|p| *p = 0.0);
            self.partial_count = 0;
            if self.n_blocks(dim) == BLOCK_CAP {
                self.blocks = coarsen(&self.blocks, dim, 2);
                self.block_size *= 2;
            }
        }
    }
}

/// Sum consecutive groups of `factor` blocks; a trailing incomplete group is dropped.
fn coarsen(blocks: &[f64], dim: usize, factor: usize) -> Vec<f64> {
    let n = blocks.len() / dim / factor;
    let mut out = vec![0.0; n * dim];
    for b in 0..n {
        for f in 0..factor {
            let src = &blocks[(b * factor + f) * dim..(b * factor + f + 1) * dim];
            for i in 0..dim {
                out[b * dim + i] += src[i];
            }
        }
    }
    out
}

/// Running sums of a `dim`-component observable over one or more streams.
#[derive(Clone, Debug, PartialEq)]
pub struct Accumulator {
    dim: usize,
    streams: BTreeMap<u64, Stream>,
}

impl Accumulator {
    pub fn new(dim: usize) -> Self {
        Accumulator {
            dim,
            streams: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, stream: u64, v: &[f64]) {
        assert_eq!(v.len(), self.dim, "observable dimension mismatch");
        let dim = self.dim;
        self.streams
            .entry(stream)
            .or_insert_with(|| Stream::new(dim))
            .push(v);
    }

    pub fn count(&self) -> u64 {
        self.streams.values().map(|s| s.count).sum()
    }

    pub fn stream_ids(&self) -> Vec<u64> {
        self.streams.keys().copied().collect()
    }

    /// Union of streams; stream ids must be disjoint.
    pub fn merge(&mut self, other: &Accumulator) -> Result<()> {
        if other.dim != self.dim {
            return Err(domain("cannot merge accumulators of different dimension"));
        }
        for (id, s) in &other.streams {
            if self.streams.contains_key(id) {
                return Err(domain(format!("stream {id} present in both accumulators")));
            }
            self.streams.insert(*id, s.clone());
        }
        Ok(())
    }

    /// Restriction to a subset of streams.
    pub fn select(&self, ids: &[u64]) -> Accumulator {
        Accumulator {
            dim: self.dim,
            streams: self
                .streams
                .iter()
                .filter(|(id, _)| ids.contains(id))
                .map(|(id, s)| (*id, s.clone()))
                .collect(),
        }
    }

    pub fn means(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        let mut n = 0u64;
        for s in self.streams.values() {
            for i in 0..self.dim {
                sum[i] += s.total[i];
            }
            n += s.count;
        }
        sum.iter().map(|v| v / n as f64).collect()
    }

    /// Batch means pooled over streams, one row per batch.
    pub fn batch_means(&self) -> Vec<Vec<f64>> {
        let dim = self.dim;
        let Some(mut size) = self.streams.values().map(|s| s.block_size).max() else {
            return Vec::new();
        };
        let mut per: Vec<Vec<f64>> = self
            .streams
            .values()
            .map(|s| coarsen(&s.blocks, dim, (size / s.block_size) as usize))
            .collect();
        let total = |per: &Vec<Vec<f64>>| per.iter().map(|b| b.len() / dim.max(1)).sum::<usize>();
        while total(&per) >= MAX_BATCHES {
            per = per.iter().map(|b| coarsen(b, dim, 2)).collect();
            size *= 2;
        }
        let mut rows = Vec::new();
        for b in &per {
            for chunk in b.chunks(dim) {
                rows.push(chunk.iter().map(|v| v / size as f64).collect());
            }
        }
        rows
    }

    /// Mean and standard error of component `i`.
    pub fn estimate(&self, i: usize) -> Estimate {
        let mut w = vec![0.0; self.dim];
        w[i] = 1.0;
        self.projected(&w)
    }

    pub fn estimates(&self) -> Vec<Estimate> {
        let means = self.means();
        let rows = self.batch_means();
        let nb = rows.len();
        (0..self.dim)
            .map(|i| Estimate {
                mean: means[i],
                se: se_of(rows.iter().map(|r| r[i]), nb),
                n_batches: nb,
            })
            .collect()
    }

    /// Estimate of the linear combination `Σ_i w_i · mean_i`.
    pub fn projected(&self, w: &[f64]) -> Estimate {
        let means = self.means();
        let rows = self.batch_means();
        let nb = rows.len();
        let dot = |r: &[f64]| r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        Estimate {
            mean: dot(&means),
            se: se_of(rows.iter().map(|r| dot(r)), nb),
            n_batches: nb,
        }
    }
}

fn se_of(vals: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    if n < 2 {
        return f64::NAN;
    }
    let m = vals.clone().sum::<f64>() / n as f64;
    let var = vals.map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Integrated autocorrelation time of a scalar series by batch means,
/// in units of the sampling interval, with `Var(mean) ≈ 2τ Var(x)/N`.
pub fn integrated_autocorr_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 64 {
        return 0.5;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return 0.5;
    }
    let nb = 32;
    let b = n / nb;
    let bm: Vec<f64> = (0..nb)
        .map(|i| series[i * b..(i + 1) * b].iter().sum::<f64>() / b as f64)
        .collect();
    let m = bm.iter().sum::<f64>() / nb as f64;
    let vb = bm.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
    (b as f64 * vb / (2.0 * var)).max(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filled(stream: u64, n: usize, seed: u64) -> Accumulator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Accumulator::new(3);
        for _ in 0..n {
            let u: f64 = rng.gen();
            a.push(stream, &[u, u * u, 1.0 - u]);
        }
        a
    }

    #[test]
    fn merge_is_order_independent() {
        let (a, b, c) = (filled(0, 5000, 1), filled(1, 7000, 2), filled(2, 3000, 3));
        let mut ab_c = a.clone();
        ab_c.merge(&b).unwrap();
        ab_c.merge(&c).unwrap();
        let mut c_ba = c.clone();
        c_ba.merge(&b).unwrap();
        c_ba.merge(&a).unwrap();
        let mut bc = b.clone();
        bc.merge(&c).unwrap();
        let mut a_bc = a.clone();
        a_bc.merge(&bc).unwrap();
        assert_eq!(ab_c, c_ba);
        assert_eq!(ab_c, a_bc);
        let (e1, e2) = (ab_c.estimates(), c_ba.estimates());
        for (x, y) in e1.iter().zip(&e2) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.se.to_bits(), y.se.to_bits());
        }
        assert!(a.clone().merge(&a).is_err());
    }

    #[test]
    fn iid_error_bar_is_calibrated() {
        // uniform samples: SE ≈ sqrt(1/12 / n)
        let a = filled(0, 400_000, 5);
        let e = a.estimate(0);
        assert!(e.n_batches >= MIN_BATCHES && e.n_batches < MAX_BATCHES);
        let want = (1.0 / 12.0 / 400_000.0f64).sqrt();
        assert!(e.se > 0.4 * want && e.se < 1.8 * want, "se {} want {}", e.se, want);
        assert!((e.mean - 0.5).abs() < 5.0 * want);
    }

    #[test]
    fn projection_matches_component_sum() {
        let a = filled(0, 10_000, 9);
        let p = a.projected(&[1.0, 0.0, 1.0]);
        assert!((p.mean - 1.0).abs() < 1e-12);
        assert!(p.se < 1e-12);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho: f64 = 0.9;
        let mut x = 0.0;
        let s: Vec<f64> = (0..200_000)
            .map(|_| {
                x = rho * x + rng.gen::<f64>() - 0.5;
                x
            })
            .collect();
        let tau = integrated_autocorr_time(&s);
        let want = 0.5 * (1.0 + rho) / (1.0 - rho);
        assert!(tau > 0.6 * want && tau < 1.5 * want, "tau {tau} want {want}");
    }
}
