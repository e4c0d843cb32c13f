use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.2;
pub const GP_WEIGHT: f64 = 10.0;

fn lrelu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn lrelu_slope(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Wasserstein critic `in -> h1 -> h2 -> 1` with leaky-rectifier hidden
/// layers and an unsquashed scalar output. Matrices are row-major
/// `[out][in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpDiscriminator {
    pub sizes: [usize; 3],
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
    /// Bumped on every parameter change so stale caches are caught.
    #[serde(skip)]
    version: u64,
}

/// Gradients with the same shapes as the critic's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    version: u64,
    x: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros(sizes: [usize; 3]) -> Self {
        let [n, h1, h2] = sizes;
        MlpGrads {
            w1: vec![0.0; h1 * n],
            b1: vec![0.0; h1],
            w2: vec![0.0; h2 * h1],
            b2: vec![0.0; h2],
            w3: vec![0.0; h2],
            b3: 0.0,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(&self.b2);
        v.extend(&self.w3);
        v.push(self.b3);
        v
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &MlpGrads, scale: f64) {
        let pairs = [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
            (&mut self.w3, &other.w3),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        self.b3 += scale * other.b3;
    }
}

impl MlpDiscriminator {
    /// Zero weights and biases.
    pub fn zeros(sizes: [usize; 3]) -> Self {
        let g = MlpGrads::zeros(sizes);
        MlpDiscriminator {
            sizes,
            w1: g.w1,
            b1: g.b1,
            w2: g.w2,
            b2: g.b2,
            w3: g.w3,
            b3: 0.0,
            version: 0,
        }
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn random(sizes: [usize; 3], rng: &mut impl Rng) -> Self {
        let mut d = Self::zeros(sizes);
        let [n, h1, h2] = sizes;
        let mut fill = |w: &mut Vec<f64>, fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            for x in w.iter_mut() {
                *x = rng.random_range(-a..a);
            }
        };
        fill(&mut d.w1, n);
        fill(&mut d.w2, h1);
        fill(&mut d.w3, h2);
        d
    }

    /// The 64 -> 64 -> 32 -> 1 critic used for 8x8 images.
    pub fn image_critic(rng: &mut impl Rng) -> Self {
        Self::random([64, 64, 32], rng)
    }

    pub fn n_params(&self) -> usize {
        let [n, h1, h2] = self.sizes;
        h1 * n + h1 + h2 * h1 + h2 + h2 + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.extend(&self.b2);
        v.extend(&self.w3);
        v.push(self.b3);
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("critic weights"));
        }
        let mut rest = v;
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3] {
            let (head, tail) = rest.split_at(part.len());
            part.copy_from_slice(head);
            rest = tail;
        }
        self.b3 = rest[0];
        self.version += 1;
        Ok(())
    }
}

/// Score of one input, keeping what the backward pass needs.
pub fn mlp_forward(d: &MlpDiscriminator, x: &[f64]) -> Result<(f64, MlpCache)> {
    let [n, h1, h2] = d.sizes;
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let z1: Vec<f64> = (0..h1)
        .map(|j| d.b1[j] + (0..n).map(|i| d.w1[j * n + i] * x[i]).sum::<f64>())
        .collect();
    let a1: Vec<f64> = z1.iter().map(|&z| lrelu(z)).collect();
    let z2: Vec<f64> = (0..h2)
        .map(|j| d.b2[j] + (0..h1).map(|i| d.w2[j * h1 + i] * a1[i]).sum::<f64>())
        .collect();
    let a2: Vec<f64> = z2.iter().map(|&z| lrelu(z)).collect();
    let score = d.b3 + d.w3.iter().zip(&a2).map(|(w, a)| w * a).sum::<f64>();
    Ok((
        score,
        MlpCache {
            version: d.version,
            x: x.to_vec(),
            z1,
            a1,
            z2,
            a2,
        },
    ))
}

pub fn mlp_score(d: &MlpDiscriminator, x: &[f64]) -> Result<f64> {
    mlp_forward(d, x).map(|(s, _)| s)
}

/// Reverse-mode gradients of `upstream * score` with respect to the
/// weights and the input.
pub fn mlp_backward(d: &MlpDiscriminator, cache: &MlpCache, upstream: f64) -> Result<(MlpGrads, Vec<f64>)> {
    if cache.version != d.version || cache.x.len() != d.sizes[0] {
        return Err(Error::invalid("cache does not belong to this critic state"));
    }
    let [n, h1, h2] = d.sizes;
    let mut g = MlpGrads::zeros(d.sizes);
    g.b3 = upstream;
    let mut e2 = vec![0.0; h2];
    for j in 0..h2 {
        g.w3[j] = upstream * cache.a2[j];
        e2[j] = upstream * d.w3[j] * lrelu_slope(cache.z2[j]);
    }
    let mut e1 = vec![0.0; h1];
    for j in 0..h2 {
        g.b2[j] = e2[j];
        for i in 0..h1 {
            g.w2[j * h1 + i] = e2[j] * cache.a1[i];
            e1[i] += d.w2[j * h1 + i] * e2[j];
        }
    }
    for i in 0..h1 {
        e1[i] *= lrelu_slope(cache.z1[i]);
    }
    let mut gx = vec![0.0; n];
    for j in 0..h1 {
        g.b1[j] = e1[j];
        for i in 0..n {
            g.w1[j * n + i] = e1[j] * cache.x[i];
            gx[i] += d.w1[j * n + i] * e1[j];
        }
    }
    Ok((g, gx))
}

/// `(||grad_x D(x)|| - 1)^2` at `x` and its gradient with respect to the
/// critic weights. The activation slopes are piecewise constant, so the
/// penalty does not depend on the biases.
pub fn penalty_at(d: &MlpDiscriminator, x: &[f64]) -> Result<(f64, MlpGrads)> {
    let [n, h1, h2] = d.sizes;
    let (_, cache) = mlp_forward(d, x)?;
    let s1: Vec<f64> = cache.z1.iter().map(|&z| lrelu_slope(z)).collect();
    let s2: Vec<f64> = cache.z2.iter().map(|&z| lrelu_slope(z)).collect();

    // input gradient g = W1^T (s1 . W2^T (s2 . w3))
    let u2: Vec<f64> = (0..h2).map(|j| s2[j] * d.w3[j]).collect();
    let u1: Vec<f64> = (0..h1)
        .map(|i| s1[i] * (0..h2).map(|j| d.w2[j * h1 + i] * u2[j]).sum::<f64>())
        .collect();
    let gx: Vec<f64> = (0..n)
        .map(|i| (0..h1).map(|j| d.w1[j * n + i] * u1[j]).sum::<f64>())
        .collect();
    let norm = gx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let penalty = (norm - 1.0).powi(2);

    let mut grads = MlpGrads::zeros(d.sizes);
    if norm == 0.0 {
        return Ok((penalty, grads));
    }
    let r: Vec<f64> = gx.iter().map(|v| 2.0 * (norm - 1.0) * v / norm).collect();
    let mut t1 = vec![0.0; h1];
    for j in 0..h1 {
        let mut w1r = 0.0;
        for i in 0..n {
            grads.w1[j * n + i] = u1[j] * r[i];
            w1r += d.w1[j * n + i] * r[i];
        }
        t1[j] = s1[j] * w1r;
    }
    for j in 0..h2 {
        let mut w2t = 0.0;
        for i in 0..h1 {
            grads.w2[j * h1 + i] = u2[j] * t1[i];
            w2t += d.w2[j * h1 + i] * t1[i];
        }
        grads.w3[j] = s2[j] * w2t;
    }
    Ok((penalty, grads))
}

/// Penalty at `u real + (1 - u) fake` with `u ~ U[0, 1]`.
pub fn gradient_penalty(
    d: &MlpDiscriminator,
    real: &[f64],
    fake: &[f64],
    rng: &mut impl Rng,
) -> Result<(f64, MlpGrads)> {
    if real.len() != fake.len() {
        return Err(Error::DimensionMismatch {
            expected: real.len(),
            got: fake.len(),
        });
    }
    let u: f64 = rng.random();
    let x: Vec<f64> = real.iter().zip(fake).map(|(r, f)| u * r + (1.0 - u) * f).collect();
    penalty_at(d, &x)
}

/// One critic objective evaluation over a batch.
#[derive(Clone, Debug)]
pub struct CriticStep {
    /// `mean D(fake) - mean D(real) + 10 mean GP`.
    pub loss: f64,
    /// `mean D(real) - mean D(fake)`.
    pub wasserstein: f64,
    pub penalty: f64,
    pub grads: MlpGrads,
}

pub fn critic_loss_and_grads(
    d: &MlpDiscriminator,
    real: &[Vec<f64>],
    fake: &[Vec<f64>],
    rng: &mut impl Rng,
) -> Result<CriticStep> {
    if real.is_empty() || real.len() != fake.len() {
        return Err(Error::invalid("critic batches must be nonempty and equal in size"));
    }
    let b = real.len() as f64;
    let mut grads = MlpGrads::zeros(d.sizes);
    let (mut mean_real, mut mean_fake, mut mean_gp) = (0.0, 0.0, 0.0);
    for (r, f) in real.iter().zip(fake) {
        let (sr, cr) = mlp_forward(d, r)?;
        let (sf, cf) = mlp_forward(d, f)?;
        grads.add_scaled(&mlp_backward(d, &cr, -1.0 / b)?.0, 1.0);
        grads.add_scaled(&mlp_backward(d, &cf, 1.0 / b)?.0, 1.0);
        let (gp, gg) = gradient_penalty(d, r, f, rng)?;
        grads.add_scaled(&gg, GP_WEIGHT / b);
        mean_real += sr / b;
        mean_fake += sf / b;
        mean_gp += gp / b;
    }
    Ok(CriticStep {
        loss: mean_fake - mean_real + GP_WEIGHT * mean_gp,
        wasserstein: mean_real - mean_fake,
        penalty: mean_gp,
        grads,
    })
}
