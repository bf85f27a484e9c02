use crate::rng;

const LONG_TAG: u64 = 0x4c4f_4e47;
const SHORT_TAG: u64 = 0x5348_5254;

/// Position `step` of an endless sequence of seeded epoch permutations of
/// `0..n`.
fn permuted(n: usize, seed: u64, tag: u64, step: u64) -> usize {
    let epoch = step / n as u64;
    let pos = (step % n as u64) as usize;
    rng::permutation(&mut rng::substream(rng::mix(seed, tag), epoch), n)[pos]
}

/// Indices of the real and simulated items used at `step`.
///
/// Epochs run over the longer split in a seeded shuffled order; the shorter
/// split is cycled with its own independently seeded shuffle. An empty split
/// yields `None`.
pub fn batch_indices(n_real: usize, n_sim: usize, seed: u64, step: u64) -> (Option<usize>, Option<usize>) {
    let real_is_long = n_real >= n_sim;
    let pick = |n: usize, long: bool| {
        (n > 0).then(|| permuted(n, seed, if long { LONG_TAG } else { SHORT_TAG }, step))
    };
    (pick(n_real, real_is_long), pick(n_sim, !real_is_long))
}
