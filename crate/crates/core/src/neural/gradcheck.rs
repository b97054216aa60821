use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelSpec};
use crate::error::Result;
use crate::game::Action;
use crate::seed;

pub const FD_STEP: f64 = 1e-5;
/// Entries checked per parameter buffer; smaller buffers are checked fully.
pub const ENTRIES_PER_BUFFER: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Entries whose perturbation moved some ReLU across its kink; the
    /// central difference is meaningless there.
    pub skipped: usize,
    pub max_rel_error: f64,
    /// (buffer, entry) of the worst mismatch.
    pub worst: Option<(usize, usize)>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative error with a floor on the denominator so that two tiny values do
/// not blow up the ratio.
pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compares analytic gradients of a freshly initialized `spec` on a random
/// batch against central finite differences. Dropout masks are frozen by
/// reseeding before each evaluation. Entries whose two evaluations see
/// different ReLU patterns are skipped and counted.
pub fn grad_check(spec: &ModelSpec, batch: usize, tolerance: f64, seed: u64) -> Result<GradCheckReport> {
    let mut model = Model::new(spec.clone(), seed::derive(seed, "init"))?;
    let mut rng = seed::rng(seed::derive(seed, "batch"));
    // nonzero biases keep units away from the ReLU kink when dropout zeroes
    // a unit's whole input
    for layer in &mut model.layers {
        if let Some(bias) = layer.params_mut().into_iter().nth(1) {
            bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
        }
    }
    let enc = spec.encoding;
    let (ch, k, app) = (enc.channels(), enc.k, enc.appendix());
    let mut x = Vec::with_capacity(batch * enc.dim());
    for _ in 0..batch {
        for c in 0..ch {
            for _ in 0..k {
                x.push(if c < 2 { f64::from(rng.gen_range(0u8..2)) } else { rng.gen_range(-1.0..1.0) });
            }
        }
        x.extend((0..app).map(|_| rng.gen_range(-1.0..1.0)));
    }
    let y: Vec<Action> = (0..batch).map(|_| if rng.gen::<bool>() { Action::Zero } else { Action::One }).collect();
    let mask_seed = seed::derive(seed, "mask");
    let loss_at = |m: &Model| m.loss_and_pattern(&x, &y, Some(&mut seed::rng(mask_seed)));

    let (_, analytic) = model.loss_and_grad(&x, &y, Some(&mut seed::rng(mask_seed)))?;
    let mut pick = seed::rng(seed::derive(seed, "entries"));
    let mut report = GradCheckReport { checked: 0, skipped: 0, max_rel_error: 0.0, worst: None, tolerance, passed: false };
    for (bi, g) in analytic.iter().enumerate() {
        let entries: Vec<usize> = if g.len() <= ENTRIES_PER_BUFFER {
            (0..g.len()).collect()
        } else {
            let mut e = sample(&mut pick, g.len(), ENTRIES_PER_BUFFER).into_vec();
            e.sort_unstable();
            e
        };
        for j in entries {
            let orig = model.params()[bi][j];
            model.params_mut()[bi][j] = orig + FD_STEP;
            let (up, up_pattern) = loss_at(&model)?;
            model.params_mut()[bi][j] = orig - FD_STEP;
            let (down, down_pattern) = loss_at(&model)?;
            model.params_mut()[bi][j] = orig;
            if up_pattern != down_pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * FD_STEP);
            let err = rel_error(g[j], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((bi, j));
            }
        }
    }
    report.passed = report.checked > 0 && report.max_rel_error < tolerance;
    Ok(report)
}
