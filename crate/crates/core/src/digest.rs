//! The double-digest problem as an annealing landscape.
//!
//! Enzyme A cuts a sequence of length `L` into fragments `a`, enzyme B into
//! `b`, and both together into `c`. An ordering `(σ, μ)` of `a` and `b`
//! places cut sites at the prefix sums; the gaps between the union of
//! those sites are the implied double-digest fragments `ĉ(σ, μ)`.
//!
//! The energy compares `c` and `ĉ` as sorted multisets. The shorter list is
//! padded at the front with zero-length entries, and
//! `H = Σ_j (c_j − ĉ_j)² / c_j` runs over the observed (unpadded) `c_j`.

use alloc::format;
use alloc::vec::Vec;

use crate::anneal::EnergyLandscape;
use crate::{Error, Result, RngStream};

/// Observed fragment multisets of one double-digest experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleDigestInstance {
    a: Vec<u64>,
    b: Vec<u64>,
    c: Vec<u64>,
    total_length: u64,
}

/// Orderings of the `a` and `b` fragments, as permutations of their indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigestOrdering {
    pub sigma: Vec<usize>,
    pub mu: Vec<usize>,
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = alloc::vec![false; n];
    for &i in p {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

fn check_fragments(name: &str, v: &[u64]) -> Result<u64> {
    if v.is_empty() {
        return Err(Error::validation(format!("{name} has no fragments")));
    }
    if v.contains(&0) {
        return Err(Error::validation(format!("{name} contains a zero-length fragment")));
    }
    Ok(v.iter().sum())
}

impl DoubleDigestInstance {
    pub fn new(a: Vec<u64>, b: Vec<u64>, c: Vec<u64>) -> Result<Self> {
        let la = check_fragments("a", &a)?;
        let lb = check_fragments("b", &b)?;
        let lc = check_fragments("c", &c)?;
        if la != lb || lb != lc {
            return Err(Error::validation(format!(
                "fragment sums differ: a = {la}, b = {lb}, c = {lc}"
            )));
        }
        Ok(DoubleDigestInstance {
            a,
            b,
            c,
            total_length: la,
        })
    }

    pub fn a(&self) -> &[u64] {
        &self.a
    }

    pub fn b(&self) -> &[u64] {
        &self.b
    }

    pub fn c(&self) -> &[u64] {
        &self.c
    }

    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    /// Generates an instance by placing random cuts, so that a zero-energy
    /// ordering is known. Returns the instance (with `a` and `b` shuffled)
    /// and that ordering.
    pub fn random(total_length: u64, n_a: usize, n_b: usize, rng: &mut RngStream) -> Result<(Self, DigestOrdering)> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::validation("each enzyme needs at least one fragment"));
        }
        if (n_a.max(n_b) as u64) > total_length {
            return Err(Error::validation("more fragments than sequence positions"));
        }
        let cuts = |n: usize, rng: &mut RngStream| -> Vec<u64> {
            // n − 1 distinct interior cut sites in 1..L
            let mut sites: Vec<u64> = (1..total_length).collect();
            rng.shuffle(&mut sites);
            let mut chosen: Vec<u64> = sites.into_iter().take(n - 1).collect();
            chosen.sort_unstable();
            chosen
        };
        let cuts_a = cuts(n_a, rng);
        let cuts_b = cuts(n_b, rng);
        let gaps = |c: &[u64]| -> Vec<u64> {
            let mut prev = 0;
            let mut out: Vec<u64> = c
                .iter()
                .map(|&x| {
                    let g = x - prev;
                    prev = x;
                    g
                })
                .collect();
            out.push(total_length - prev);
            out
        };
        let ordered_a = gaps(&cuts_a);
        let ordered_b = gaps(&cuts_b);
        let mut union: Vec<u64> = cuts_a.iter().chain(&cuts_b).copied().collect();
        union.sort_unstable();
        union.dedup();
        let c = gaps(&union);

        // shuffle the stored fragments and remember where each one came from
        let mut perm_a: Vec<usize> = (0..n_a).collect();
        let mut perm_b: Vec<usize> = (0..n_b).collect();
        rng.shuffle(&mut perm_a);
        rng.shuffle(&mut perm_b);
        let a: Vec<u64> = perm_a.iter().map(|&i| ordered_a[i]).collect();
        let b: Vec<u64> = perm_b.iter().map(|&i| ordered_b[i]).collect();
        let mut sigma = alloc::vec![0; n_a];
        for (stored, &orig) in perm_a.iter().enumerate() {
            sigma[orig] = stored;
        }
        let mut mu = alloc::vec![0; n_b];
        for (stored, &orig) in perm_b.iter().enumerate() {
            mu[orig] = stored;
        }
        Ok((Self::new(a, b, c)?, DigestOrdering { sigma, mu }))
    }

    fn check(&self, ordering: &DigestOrdering) -> Result<()> {
        if !is_permutation(&ordering.sigma, self.a.len()) {
            return Err(Error::validation("sigma is not a permutation of a's indices"));
        }
        if !is_permutation(&ordering.mu, self.b.len()) {
            return Err(Error::validation("mu is not a permutation of b's indices"));
        }
        Ok(())
    }

    fn implied_unchecked(&self, ordering: &DigestOrdering) -> Vec<u64> {
        let mut cuts: Vec<u64> = Vec::with_capacity(self.a.len() + self.b.len());
        let mut acc = 0;
        for &i in &ordering.sigma[..self.a.len() - 1] {
            acc += self.a[i];
            cuts.push(acc);
        }
        acc = 0;
        for &i in &ordering.mu[..self.b.len() - 1] {
            acc += self.b[i];
            cuts.push(acc);
        }
        cuts.sort_unstable();
        cuts.dedup();
        let mut prev = 0;
        let mut out = Vec::with_capacity(cuts.len() + 1);
        for x in cuts {
            out.push(x - prev);
            prev = x;
        }
        out.push(self.total_length - prev);
        out
    }

    fn energy_unchecked(&self, ordering: &DigestOrdering) -> f64 {
        let mut implied = self.implied_unchecked(ordering);
        implied.sort_unstable();
        let mut observed = self.c.clone();
        observed.sort_unstable();
        let m = implied.len().max(observed.len());
        let pad_c = m - observed.len();
        let pad_hat = m - implied.len();
        (pad_c..m)
            .map(|j| {
                let cj = observed[j - pad_c] as f64;
                let hat = if j < pad_hat { 0.0 } else { implied[j - pad_hat] as f64 };
                (cj - hat) * (cj - hat) / cj
            })
            .sum()
    }
}

/// Gaps between the union of both enzymes' cut sites under `ordering`,
/// listed left to right.
pub fn double_digest_implied_fragments(ordering: &DigestOrdering, instance: &DoubleDigestInstance) -> Result<Vec<u64>> {
    instance.check(ordering)?;
    Ok(instance.implied_unchecked(ordering))
}

pub fn double_digest_energy(ordering: &DigestOrdering, instance: &DoubleDigestInstance) -> Result<f64> {
    instance.check(ordering)?;
    Ok(instance.energy_unchecked(ordering))
}

/// Advances `p` to the next permutation in lexicographic order; false once
/// the last one has been passed (and `p` is reset to ascending order).
fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.reverse();
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Minimum energy over every `(σ, μ)` pair, with a minimising ordering.
/// Stops at the first zero-energy ordering when `stop_at_zero` is set.
pub fn brute_force_min_energy(instance: &DoubleDigestInstance, stop_at_zero: bool) -> (f64, DigestOrdering) {
    let mut sigma: Vec<usize> = (0..instance.a.len()).collect();
    let mut best = f64::INFINITY;
    let mut best_ordering = DigestOrdering {
        sigma: sigma.clone(),
        mu: (0..instance.b.len()).collect(),
    };
    loop {
        let mut mu: Vec<usize> = (0..instance.b.len()).collect();
        loop {
            let ordering = DigestOrdering {
                sigma: sigma.clone(),
                mu: mu.clone(),
            };
            let e = instance.energy_unchecked(&ordering);
            if e < best {
                best = e;
                best_ordering = ordering;
                if stop_at_zero && e == 0.0 {
                    return (best, best_ordering);
                }
            }
            if !next_permutation(&mut mu) {
                break;
            }
        }
        if !next_permutation(&mut sigma) {
            break;
        }
    }
    (best, best_ordering)
}

/// Annealing landscape over orderings. The move swaps two random positions
/// within `σ` or within `μ`, the two chosen with equal probability among
/// those with at least two fragments.
#[derive(Debug, Clone)]
pub struct DigestLandscape<'a> {
    pub instance: &'a DoubleDigestInstance,
}

fn swap_two(p: &mut [usize], rng: &mut RngStream) {
    let i = rng.below(p.len());
    let mut j = rng.below(p.len() - 1);
    if j >= i {
        j += 1;
    }
    p.swap(i, j);
}

impl EnergyLandscape for DigestLandscape<'_> {
    type State = DigestOrdering;

    fn energy(&self, state: &DigestOrdering) -> f64 {
        self.instance.energy_unchecked(state)
    }

    fn propose(&self, state: &DigestOrdering, rng: &mut RngStream) -> DigestOrdering {
        let mut next = state.clone();
        match (next.sigma.len() >= 2, next.mu.len() >= 2) {
            (true, true) => {
                if rng.bernoulli(0.5) {
                    swap_two(&mut next.sigma, rng)
                } else {
                    swap_two(&mut next.mu, rng)
                }
            }
            (true, false) => swap_two(&mut next.sigma, rng),
            (false, true) => swap_two(&mut next.mu, rng),
            (false, false) => {}
        }
        next
    }

    fn random_state(&self, rng: &mut RngStream) -> DigestOrdering {
        let mut sigma: Vec<usize> = (0..self.instance.a.len()).collect();
        let mut mu: Vec<usize> = (0..self.instance.b.len()).collect();
        rng.shuffle(&mut sigma);
        rng.shuffle(&mut mu);
        DigestOrdering { sigma, mu }
    }
}
