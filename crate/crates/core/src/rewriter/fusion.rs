//! Input embedding fusion: `z = LN(token + position + segment + knowledge)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LN_EPS: f64 = 1e-6;

/// Layer normalization with learned gain and offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
    pub eps: f64,
}

/// Forward intermediates needed by [`LayerNorm::backward`].
#[derive(Debug, Clone)]
pub struct LnCache {
    pub normalized: Vec<f64>,
    pub inv_std: f64,
}

impl LayerNorm {
    /// Gain 1, offset 0.
    pub fn identity(dim: usize) -> Self {
        Self {
            gain: vec![1.0; dim],
            offset: vec![0.0; dim],
            eps: LN_EPS,
        }
    }

    pub fn dim(&self) -> usize {
        self.gain.len()
    }

    pub fn forward(&self, x: &[f64]) -> (Vec<f64>, LnCache) {
        layer_norm_forward(x, &self.gain, &self.offset, self.eps)
    }

    /// Returns `(dx, dgain, doffset)` for upstream gradient `dy`.
    pub fn backward(&self, cache: &LnCache, dy: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        layer_norm_backward(cache, &self.gain, dy)
    }
}

pub(crate) fn layer_norm_forward(
    x: &[f64],
    gain: &[f64],
    offset: &[f64],
    eps: f64,
) -> (Vec<f64>, LnCache) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + eps).sqrt();
    let normalized: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
    let y = normalized
        .iter()
        .zip(gain.iter().zip(offset))
        .map(|(h, (g, b))| g * h + b)
        .collect();
    (y, LnCache { normalized, inv_std })
}

pub(crate) fn layer_norm_backward(
    cache: &LnCache,
    gain: &[f64],
    dy: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = dy.len() as f64;
    let dgain: Vec<f64> = dy.iter().zip(&cache.normalized).map(|(d, h)| d * h).collect();
    let doffset = dy.to_vec();
    let dh: Vec<f64> = dy.iter().zip(gain).map(|(d, g)| d * g).collect();
    let mean_dh = dh.iter().sum::<f64>() / n;
    let mean_dh_h = dh.iter().zip(&cache.normalized).map(|(d, h)| d * h).sum::<f64>() / n;
    let dx = dh
        .iter()
        .zip(&cache.normalized)
        .map(|(d, h)| cache.inv_std * (d - mean_dh - h * mean_dh_h))
        .collect();
    (dx, dgain, doffset)
}

/// Fused embedding of one input token.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedEmbedding {
    pub z: Vec<f64>,
    /// The pre-normalization sum.
    pub sum: Vec<f64>,
}

/// Sums the four component embeddings and normalizes. `None` drops a term
/// entirely (ablation), which is not the same as adding a zero vector for
/// signed zeros.
pub fn fuse_embeddings(
    token: &[f64],
    position: &[f64],
    segment: Option<&[f64]>,
    knowledge: Option<&[f64]>,
    ln: &LayerNorm,
) -> Result<FusedEmbedding> {
    let dim = ln.dim();
    for v in [Some(token), Some(position), segment, knowledge].into_iter().flatten() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let sum = sum_components(token, position, segment, knowledge);
    let (z, _) = ln.forward(&sum);
    Ok(FusedEmbedding { z, sum })
}

pub(crate) fn sum_components(
    token: &[f64],
    position: &[f64],
    segment: Option<&[f64]>,
    knowledge: Option<&[f64]>,
) -> Vec<f64> {
    let mut sum: Vec<f64> = token.iter().zip(position).map(|(a, b)| a + b).collect();
    for extra in [segment, knowledge].into_iter().flatten() {
        for (s, e) in sum.iter_mut().zip(extra) {
            *s += e;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zeros_stay_zero() {
        let z = vec![0.0; 8];
        let out = fuse_embeddings(&z, &z, Some(&z), Some(&z), &LayerNorm::identity(8)).unwrap();
        assert!(out.z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn normalized_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ln = LayerNorm::identity(64);
        for _ in 0..20 {
            let v: Vec<Vec<f64>> = (0..4).map(|_| random(&mut rng, 64)).collect();
            let out = fuse_embeddings(&v[0], &v[1], Some(&v[2]), Some(&v[3]), &ln).unwrap();
            let mean = out.z.iter().sum::<f64>() / 64.0;
            let var = out.z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 64.0;
            assert!(mean.abs() < 1e-5 && (var - 1.0).abs() < 1e-5, "{mean} {var}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let ln = LayerNorm::identity(4);
        let err = fuse_embeddings(&[0.0; 4], &[0.0; 3], None, None, &ln);
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 4, got: 3 })));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 10;
        let mut ln = LayerNorm::identity(dim);
        ln.gain = random(&mut rng, dim);
        ln.offset = random(&mut rng, dim);
        let x = random(&mut rng, dim);
        let w = random(&mut rng, dim);
        let loss = |x: &[f64], ln: &LayerNorm| -> f64 {
            ln.forward(x).0.iter().zip(&w).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = ln.forward(&x);
        let (dx, dgain, _) = ln.backward(&cache, &w);
        let h = 1e-6;
        for i in 0..dim {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&xp, &ln) - loss(&xm, &ln)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-6, "dx[{i}]: {fd} vs {}", dx[i]);
            let mut lp = ln.clone();
            lp.gain[i] += h;
            let mut lm = ln.clone();
            lm.gain[i] -= h;
            let fd = (loss(&x, &lp) - loss(&x, &lm)) / (2.0 * h);
            assert!((fd - dgain[i]).abs() < 1e-6);
        }
    }
}
