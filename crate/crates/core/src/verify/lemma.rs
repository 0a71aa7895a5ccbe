use super::VerifyError;
use crate::model::{calibrate_h_constants, lower_bound_g_variant, lower_bound_h, GBound, HBoundConstants, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Lowest slack found in one regime and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSlack {
    /// `min (bregman − bound)`
    pub min_slack: f64,
    /// Minimum of the slack divided by the natural scale of the pair
    /// (`aϱ̃^γ/(γ−1)` or `kLη̃ + 𝔷η̃²`).
    pub min_scaled_slack: f64,
    /// Pair attaining `min_scaled_slack`.
    pub at: (f64, f64),
    pub samples: usize,
}

impl RegimeSlack {
    fn empty() -> Self {
        Self {
            min_slack: f64::INFINITY,
            min_scaled_slack: f64::INFINITY,
            at: (f64::NAN, f64::NAN),
            samples: 0,
        }
    }

    fn push(&mut self, slack: f64, scale: f64, at: (f64, f64)) {
        self.samples += 1;
        self.min_slack = self.min_slack.min(slack);
        let s = slack / scale;
        if s < self.min_scaled_slack {
            self.min_scaled_slack = s;
            self.at = at;
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.samples += o.samples;
        self.min_slack = self.min_slack.min(o.min_slack);
        if o.min_scaled_slack < self.min_scaled_slack {
            self.min_scaled_slack = o.min_scaled_slack;
            self.at = o.at;
        }
        self
    }

    pub fn certified(&self) -> bool {
        self.samples == 0 || self.min_slack >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCertificate {
    pub seed: u64,
    pub samples: usize,
    pub range: (f64, f64),
    pub h_constants: HBoundConstants,
    /// `δϱ̃ ≤ ϱ ≤ ϱ̃/δ`
    pub h_inner: RegimeSlack,
    pub h_outer: RegimeSlack,
    pub g_variant: GBound,
    /// `η ≤ 2η̃`
    pub g_near: RegimeSlack,
    pub g_far: RegimeSlack,
}

impl LemmaCertificate {
    pub fn h_certified(&self) -> bool {
        self.h_inner.certified() && self.h_outer.certified()
    }

    pub fn g_certified(&self) -> bool {
        self.g_near.certified() && self.g_far.certified()
    }

    pub fn certified(&self) -> bool {
        self.h_certified() && self.g_certified()
    }
}

/// Slack of the published G bound at `η = 2η̃`, where its two branches meet.
pub fn g_slack_at_double(prm: &ModelParams, eta_t: f64, which: GBound) -> f64 {
    let eta = 2.0 * eta_t;
    prm.bregman_g_raw(eta, eta_t) - lower_bound_g_variant(eta, eta_t, prm, which)
}

const CHUNK: usize = 1 << 14;

/// Scans quasi-random pairs spanning `[1e−6, 1e6]` log-uniformly and records
/// the minimum slack of both lemma bounds per regime.
///
/// Pairs come from a two-dimensional Halton sequence (bases 2 and 3)
/// with a Cranley–Patterson rotation drawn from `seed`; the η pairs reuse
/// the points with the coordinates rotated again.
pub fn oracle_lemma_scan(
    prm: &ModelParams,
    n_samples: usize,
    seed: u64,
    g_variant: GBound,
) -> Result<LemmaCertificate, VerifyError> {
    if n_samples == 0 {
        return Err(VerifyError::Config("lemma scan needs at least one sample".into()));
    }
    let h_constants = calibrate_h_constants(prm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let (lo, hi) = (1e-6f64, 1e6f64);
    let (llo, span) = (lo.log10(), hi.log10() - lo.log10());
    let map = |u: f64| 10f64.powf(llo + span * u);
    let h_scale = prm.a / (prm.gamma - 1.0);
    let n_chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<[RegimeSlack; 4]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [RegimeSlack::empty(); 4];
            let end = ((c + 1) * CHUNK).min(n_samples);
            for i in c * CHUNK..end {
                let (a, b) = (radical_inverse(i as u64 + 1, 2), radical_inverse(i as u64 + 1, 3));
                let rot = |v: f64, s: f64| (v + s).fract();
                let (r, rt) = (map(rot(a, shift[0])), map(rot(b, shift[1])));
                let (e, et) = (map(rot(b, shift[2])), map(rot(a, shift[3])));

                let slack = prm.bregman_h_raw(r, rt) - lower_bound_h(r, rt, prm, h_constants);
                let scale = h_scale * rt.powf(prm.gamma);
                let inner = r >= h_constants.delta * rt && r <= rt / h_constants.delta;
                acc[if inner { 0 } else { 1 }].push(slack, scale, (r, rt));

                let slack = prm.bregman_g_raw(e, et) - lower_bound_g_variant(e, et, prm, g_variant);
                let scale = prm.kl() * et + prm.zfrak * et * et;
                acc[if e <= 2.0 * et { 2 } else { 3 }].push(slack, scale, (e, et));
            }
            acc
        })
        .collect();
    let [h_inner, h_outer, g_near, g_far] = parts.into_iter().fold([RegimeSlack::empty(); 4], |a, b| {
        [a[0].merge(b[0]), a[1].merge(b[1]), a[2].merge(b[2]), a[3].merge(b[3])]
    });
    Ok(LemmaCertificate {
        seed,
        samples: n_samples,
        range: (lo, hi),
        h_constants,
        h_inner,
        h_outer,
        g_variant,
        g_near,
        g_far,
    })
}
