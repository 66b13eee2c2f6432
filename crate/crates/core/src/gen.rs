//! Seeded random instances for the property and acceptance suites.
//!
//! Everything is driven by one ChaCha stream, so a fixed seed reproduces the
//! exact instance sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fpab::{
    quotient_by, subgroup_generated, Element, FpGroup, GroupRef, Morphism, Ses,
};
use crate::homext::HomGroup;
use crate::tower::{direct_sum_as_tower, Tower};
use crate::zlinalg::{int, Int, IntMatrix};

pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn i64_in(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn usize_in(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, max_abs: i64) -> IntMatrix {
        let mut m = IntMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = int(self.i64_in(-max_abs, max_abs));
            }
        }
        m
    }

    /// A group on up to `max_gens` generators, mixing raw presentations with
    /// cyclic decompositions so both shapes stay exercised.
    pub fn group(&mut self, max_gens: usize) -> GroupRef {
        if self.rng.gen_bool(0.4) {
            return self.finite_group(max_gens.max(1));
        }
        let n = self.usize_in(0, max_gens);
        let r = self.usize_in(0, n + 1);
        FpGroup::new(n, self.matrix(n, r, 6)).expect("presentation shapes match")
    }

    /// A finite group given as a sum of cyclic factors.
    pub fn finite_group(&mut self, max_factors: usize) -> GroupRef {
        let k = self.usize_in(1, max_factors);
        let orders: Vec<i64> = (0..k).map(|_| self.i64_in(2, 9)).collect();
        FpGroup::of_cyclics(&orders)
    }

    pub fn element(&mut self, g: &GroupRef, max_abs: i64) -> Element {
        let coords: Vec<Int> = (0..g.ngens()).map(|_| int(self.i64_in(-max_abs, max_abs))).collect();
        Element::new(g, coords).expect("coordinate count matches")
    }

    /// A uniformly sampled small morphism: a random element of the hom group
    /// carrier, decoded.  Sampling in coordinates guarantees validity for
    /// any pair of groups.
    pub fn morphism(&mut self, src: &GroupRef, dst: &GroupRef) -> Morphism {
        let hom = HomGroup::new(src, dst).expect("hom group of f.p. groups");
        let e = self.element(hom.carrier(), 4);
        hom.decode(&e).expect("carrier elements decode")
    }

    /// A monomorphism between free groups `free(k) -> free(n)`, `k <= n`.
    pub fn mono_into_free(&mut self, max_rank: usize) -> Morphism {
        let n = self.usize_in(1, max_rank);
        let k = self.usize_in(1, n);
        loop {
            let m = self.matrix(n, k, 4);
            if m.kernel_basis().cols() == 0 {
                return Morphism::new(&FpGroup::free(k), &FpGroup::free(n), m)
                    .expect("free endpoints accept any matrix");
            }
        }
    }

    /// An epimorphism: the projection of a random group onto the quotient by
    /// a random finitely generated subgroup.
    pub fn epi(&mut self, max_gens: usize) -> Morphism {
        let g = self.group(max_gens);
        let k = self.usize_in(0, 2);
        let elems: Vec<Element> = (0..k).map(|_| self.element(&g, 3)).collect();
        let (_, incl) = subgroup_generated(&g, &elems).expect("subgroup of f.p. group");
        let (_, proj) = quotient_by(&incl).expect("subgroup inclusions are mono");
        proj
    }

    /// A short exact sequence `A -> M -> M/A` around a random subgroup.
    pub fn ses(&mut self, max_gens: usize) -> Ses {
        let m = self.group(max_gens);
        let k = self.usize_in(0, 2);
        let elems: Vec<Element> = (0..k).map(|_| self.element(&m, 3)).collect();
        let (_, incl) = subgroup_generated(&m, &elems).expect("subgroup of f.p. group");
        let (_, proj) = quotient_by(&incl).expect("subgroup inclusions are mono");
        Ses::new(incl, proj).expect("subgroup and quotient are exact by construction")
    }

    /// A chain of monomorphisms over the given window, drawn from the shapes
    /// the comparison-map theory cares about: partial direct sums, scaled
    /// copies of Z, p-power cyclic chains, and constant chains.
    pub fn mono_tower(&mut self, window: usize) -> Tower {
        match self.usize_in(0, 3) {
            0 => {
                let groups: Vec<GroupRef> =
                    (0..=window).map(|_| self.finite_group(2)).collect();
                direct_sum_as_tower(&groups, 1)
            }
            1 => {
                let c = [2, 3, 5, -2][self.usize_in(0, 3)];
                Tower::mult(&int(c), window).expect("nonzero multiplier")
            }
            2 => {
                let p: i64 = [2, 3, 5][self.usize_in(0, 2)];
                let stages: Vec<GroupRef> =
                    (0..=window).map(|k| FpGroup::cyclic(p.pow(k as u32 + 1))).collect();
                let transitions: Vec<Morphism> = (0..window)
                    .map(|k| {
                        Morphism::new(
                            &stages[k],
                            &stages[k + 1],
                            IntMatrix::from_rows_i64(&[vec![p]]),
                        )
                        .expect("multiplication respects p-power relations")
                    })
                    .collect();
                Tower::from_stages(stages, transitions).expect("stage count matches")
            }
            _ => Tower::constant(&self.group(2), window),
        }
    }

    /// A family of summands for the direct-sum criteria.
    pub fn family(&mut self, max_summands: usize) -> Vec<GroupRef> {
        let k = self.usize_in(1, max_summands);
        (0..k).map(|_| self.finite_group(1)).collect()
    }
}

/// Invariant-factor chains of every abelian group of order `n`, one per
/// isomorphism type: all ways of distributing each prime's exponent as a
/// partition, aligned into a divisibility chain.
pub fn invariant_factor_chains_of_order(n: i64) -> Vec<Vec<i64>> {
    assert!(n >= 1, "order must be positive");
    let mut rest = n;
    let mut primes: Vec<(i64, u32)> = Vec::new();
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            primes.push((p, e));
        }
        p += 1;
    }
    if rest > 1 {
        primes.push((rest, 1));
    }
    let mut combos: Vec<Vec<(i64, Vec<u32>)>> = vec![Vec::new()];
    for &(p, e) in &primes {
        let parts = partitions(e);
        combos = combos
            .into_iter()
            .flat_map(|c| {
                parts.iter().map(move |lambda| {
                    let mut c = c.clone();
                    c.push((p, lambda.clone()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            let m = combo.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
            let mut chain = vec![1i64; m];
            for (p, lambda) in combo {
                // Ascending parts, right-aligned, keep d_1 | d_2 | ... intact.
                for (i, &e) in lambda.iter().enumerate() {
                    chain[m - lambda.len() + i] *= p.pow(e);
                }
            }
            chain
        })
        .collect()
}

/// All isomorphism types of abelian groups of order 1..=`max_order`.
pub fn isomorphism_types_up_to(max_order: i64) -> Vec<GroupRef> {
    (1..=max_order)
        .flat_map(|n| {
            invariant_factor_chains_of_order(n)
                .into_iter()
                .map(|chain| FpGroup::of_cyclics(&chain))
        })
        .collect()
}

/// Partitions of `e` as ascending part lists.
fn partitions(e: u32) -> Vec<Vec<u32>> {
    fn go(remaining: u32, min_part: u32, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            out.push(acc.clone());
            return;
        }
        for part in min_part..=remaining {
            acc.push(part);
            go(remaining - part, part, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(e, 1, &mut Vec::new(), &mut out);
    out
}

/// The direct sum of a family with its coordinate maps, reusing the binary
/// construction where possible.
pub fn sum_with_incls(groups: &[GroupRef]) -> (GroupRef, Vec<Morphism>) {
    let fs = crate::criteria::finite_sum(groups);
    (fs.group, fs.incls)
}
