// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::board::{Board, ClassicalState};
use super::step::evolve_step;
use super::EngineError;
use crate::tensor::SparseVector;

/// One sampled trajectory.
#[derive(Clone, Debug)]
pub struct SampleRun {
    pub run: u64,
    pub seed: u64,
    /// Probability of the sampled path.
    pub probability: f64,
    pub step: usize,
    pub state: SparseVector,
    pub classical: ClassicalState,
}

impl SampleRun {
    /// Step of the first detection, if any.
    pub fn first_detection_step(&self) -> Option<usize> {
        self.classical
            .record
            .iter()
            .find(|e| e.kind == super::EventKind::Detected)
            .map(|e| e.step)
    }
}

/// RNG for run `run` of a sampling session seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Sample one trajectory: random switches are drawn once at `t = 0`, then
/// each step picks one branch with its probability.
pub fn sample_run(
    board: &Board,
    seed: u64,
    run: u64,
    max_steps: usize,
) -> Result<SampleRun, EngineError> {
    if board.photon_count() == 0 {
        return Err(EngineError::NoSource);
    }
    let mut rng = run_rng(seed, run);
    let mut assign = BTreeMap::new();
    for (id, p) in board.random_inputs() {
        assign.insert(id.to_string(), rng.random::<f64>() < p);
    }
    let mut state = board.initial_state()?;
    let mut classical = board.initial_classical(&assign);
    let mut probability = 1.0;
    let mut step = 0;
    while !state.particles().is_empty() && step < max_steps {
        step += 1;
        let branches = evolve_step(board, &state, &classical, step)?;
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        let r = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = branches.len() - 1;
        for (i, b) in branches.iter().enumerate() {
            acc += b.probability;
            if r < acc {
                chosen = i;
                break;
            }
        }
        let b = branches
            .into_iter()
            .nth(chosen)
            .expect("at least one branch");
        probability *= b.probability;
        state = b.state;
        classical = b.classical;
    }
    Ok(SampleRun {
        run,
        seed,
        probability,
        step,
        state,
        classical,
    })
}

/// `n` independent runs, run `i` drawing from RNG stream `i`.
pub fn sample_runs(
    board: &Board,
    seed: u64,
    n: u64,
    max_steps: usize,
) -> Result<Vec<SampleRun>, EngineError> {
    (0..n)
        .map(|i| sample_run(board, seed, i, max_steps))
        .collect()
}
