//! Seeded random integral lattices: Gram = BᵀB with B uniform in [−b, b]ⁿˣⁿ, singular B rejected.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::matrix::IntMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub rank: usize,
    pub count: usize,
    pub entry_bound: i64,
}

/// One RNG stream per `CorpusSpec`; item k depends only on the seed and the items before it.
pub fn generate(spec: CorpusSpec) -> Result<Vec<Lattice>> {
    if spec.rank == 0 {
        return Err(Error::ZeroRank);
    }
    if spec.entry_bound < 1 {
        return Err(Error::InvalidInput("entry bound must be at least 1".into()));
    }
    let n = spec.rank;
    let b = spec.entry_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    while out.len() < spec.count {
        let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-b..=b)).collect()).collect();
        let m = IntMatrix::from_rows(&rows)?;
        if m.det().is_zero() {
            continue;
        }
        let gram = m.transpose().mul(&m)?;
        out.push(Lattice::from_i64(&gram.to_rows())?);
    }
    Ok(out)
}

/// Corpus over several ranks, `count` lattices each, seeded by seed + rank.
pub fn generate_ranks(seed: u64, ranks: impl IntoIterator<Item = usize>, count: usize, entry_bound: i64) -> Result<Vec<Lattice>> {
    let mut out = Vec::new();
    for rank in ranks {
        out.extend(generate(CorpusSpec { seed: seed.wrapping_add(rank as u64), rank, count, entry_bound })?);
    }
    Ok(out)
}
