//! Seeded instance generators.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Distinct integers in `[0, 2^20)`.
    Uniform,
    /// Sites scattered around a few far-apart centres at geometric scales.
    Cluster,
    /// Tight pairs `(a, a + 1)`, `a` a multiple of `2^12`.
    NearPair,
    /// Integers in `[0, 16]` including both ends; exact nodes of the oracle grids.
    Grid,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Family::Uniform),
            "cluster" | "geometric-cluster" => Ok(Family::Cluster),
            "near-pair" => Ok(Family::NearPair),
            "grid" => Ok(Family::Grid),
            _ => Err(Error::input(format!("unknown instance family {s:?}"))),
        }
    }
}

/// Integer sites with data, in generation order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    pub sites: Vec<i64>,
    pub values: Vec<f64>,
}

impl Instance {
    /// JSON input document: `{"sites": [strings], "values": [floats]}`.
    pub fn to_input(&self) -> crate::io::Input {
        crate::io::Input { sites: self.sites.iter().map(|s| s.to_string()).collect(), values: Some(self.values.clone()) }
    }
}

fn fill(rng: &mut ChaCha8Rng, n: usize, mut draw: impl FnMut(&mut ChaCha8Rng) -> i64) -> Vec<i64> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = draw(rng);
        if seen.insert(x) {
            out.push(x);
        }
    }
    out
}

/// `n` sites of `family` with data uniform in `[-1, 1]`.
pub fn generate(family: Family, n: usize, seed: u64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::input(format!("need at least 2 sites, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = match family {
        Family::Uniform => fill(&mut rng, n, |r| r.random_range(0..1i64 << 20)),
        Family::Cluster => {
            let centres: Vec<i64> = (0..n.div_ceil(8)).map(|_| rng.random_range(0..1i64 << 26)).collect();
            fill(&mut rng, n, |r| {
                let c = centres[r.random_range(0..centres.len())];
                let j = r.random_range(0..=16u32);
                c + r.random_range(-(1i64 << j)..=(1i64 << j))
            })
        }
        Family::NearPair => {
            let bases = fill(&mut rng, n.div_ceil(2), |r| r.random_range(0..1i64 << 14) << 12);
            let mut s: Vec<i64> = bases.iter().flat_map(|&a| [a, a + 1]).collect();
            s.truncate(n);
            s
        }
        Family::Grid => {
            if n > 17 {
                return Err(Error::input(format!("grid family holds at most 17 sites, got {n}")));
            }
            let mut s = vec![0, 16];
            s.extend(fill(&mut rng, n - 2, |r| r.random_range(1..16)));
            s
        }
    };
    let values = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok(Instance { sites, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        for fam in [Family::Uniform, Family::Cluster, Family::NearPair, Family::Grid] {
            let a = generate(fam, 17, 7).unwrap();
            assert_eq!(a, generate(fam, 17, 7).unwrap());
            let set: BTreeSet<i64> = a.sites.iter().copied().collect();
            assert_eq!(set.len(), 17);
            assert!(a.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn near_pairs_are_tight_and_far_apart() {
        let a = generate(Family::NearPair, 64, 7).unwrap();
        for w in a.sites.chunks(2) {
            assert_eq!(w[1] - w[0], 1);
            assert_eq!(w[0] % 4096, 0);
        }
    }

    #[test]
    fn grid_family_spans_zero_to_sixteen() {
        let a = generate(Family::Grid, 5, 3).unwrap();
        assert_eq!(a.sites.iter().min(), Some(&0));
        assert_eq!(a.sites.iter().max(), Some(&16));
        assert!(generate(Family::Grid, 18, 3).is_err());
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("near-pair".parse::<Family>().unwrap(), Family::NearPair);
        assert_eq!("geometric-cluster".parse::<Family>().unwrap(), Family::Cluster);
        assert!("nope".parse::<Family>().is_err());
    }
}
