//! Finitely presented abelian groups and their morphisms.
//!
//! A group is `Z^n` modulo the lattice spanned by the columns of a relation
//! matrix; a morphism is an integer matrix on generator coordinates that
//! carries the source relation lattice into the target one.  Everything is
//! decided exactly: membership, equality, kernels, cokernels, splittings.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::zlinalg::{int, reduce_mod_row_basis, Int, IntMatrix, MatrixSystem, Term};

/// Shared handle; groups are immutable once built, so everything downstream
/// clones handles instead of presentations.
pub type GroupRef = Arc<FpGroup>;

/// `Z^ngens / columnspan(rels)` together with the caches every operation
/// leans on: a row-HNF basis of the relation lattice for canonical residues,
/// and the Smith data of the relation matrix for invariants and coordinates.
#[derive(Clone, Debug)]
pub struct FpGroup {
    ngens: usize,
    rels: IntMatrix,
    rel_rows: IntMatrix,
    rank: usize,
    factors: Vec<Int>,
    diag: Vec<Int>,
    smith_u: IntMatrix,
    smith_u_inv: IntMatrix,
}

impl PartialEq for FpGroup {
    fn eq(&self, other: &Self) -> bool {
        // The row HNF is a canonical form of the lattice, so this compares
        // presentations up to different relator generating sets.
        self.ngens == other.ngens && self.rel_rows == other.rel_rows
    }
}

impl Eq for FpGroup {}

impl FpGroup {
    pub fn new(ngens: usize, rels: IntMatrix) -> Result<GroupRef> {
        if rels.rows() != ngens {
            return Err(Error::Shape(format!(
                "relation matrix has {} rows for {} generators",
                rels.rows(),
                ngens
            )));
        }
        let rel_rows = rels.transpose().row_basis();
        let smith = rels.snf();
        let diag = smith.diag_padded(ngens);
        let rank = diag.iter().filter(|d| d.is_zero()).count();
        let factors: Vec<Int> = diag.iter().filter(|d| **d >= int(2)).cloned().collect();
        let smith_u_inv = smith
            .u
            .solve_matrix(&IntMatrix::identity(ngens))
            .expect("unimodular transform is invertible");
        Ok(Arc::new(FpGroup {
            ngens,
            rels,
            rel_rows,
            rank,
            factors,
            diag,
            smith_u: smith.u,
            smith_u_inv,
        }))
    }

    pub fn free(n: usize) -> GroupRef {
        FpGroup::new(n, IntMatrix::zeros(n, 0)).expect("free presentation is well formed")
    }

    pub fn trivial() -> GroupRef {
        FpGroup::free(0)
    }

    /// `Z/m`, with `m = 0` giving `Z`.
    pub fn cyclic(m: i64) -> GroupRef {
        FpGroup::new(1, IntMatrix::from_rows_i64(&[vec![m]]))
            .expect("cyclic presentation is well formed")
    }

    /// Direct sum of cyclic groups, one generator per listed order.
    pub fn of_cyclics(orders: &[i64]) -> GroupRef {
        let n = orders.len();
        let mut rels = IntMatrix::zeros(n, n);
        for (i, &m) in orders.iter().enumerate() {
            rels[(i, i)] = int(m);
        }
        FpGroup::new(n, rels).expect("diagonal presentation is well formed")
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn rels(&self) -> &IntMatrix {
        &self.rels
    }

    /// Row-HNF basis of the relation lattice.
    pub fn rel_row_basis(&self) -> &IntMatrix {
        &self.rel_rows
    }

    /// Free rank of the group.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Invariant factors `>= 2` in divisibility order.
    pub fn torsion_factors(&self) -> &[Int] {
        &self.factors
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.factors.is_empty()
    }

    /// Number of elements, `None` when infinite.
    pub fn order(&self) -> Option<Int> {
        if self.rank > 0 {
            return None;
        }
        let mut n = Int::one();
        for f in &self.factors {
            n *= f;
        }
        Some(n)
    }

    fn canon(&self, mut v: Vec<Int>) -> Vec<Int> {
        reduce_mod_row_basis(&mut v, &self.rel_rows);
        v
    }
}

impl fmt::Display for FpGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.factors.iter().map(|d| format!("Z/{d}")).collect();
        if self.rank == 1 {
            parts.push("Z".into());
        } else if self.rank > 1 {
            parts.push(format!("Z^{}", self.rank));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Group element as a canonical residue of its generator coordinates.
#[derive(Clone, Debug)]
pub struct Element {
    group: GroupRef,
    coords: Vec<Int>,
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.coords == other.coords
    }
}

impl Eq for Element {}

impl Element {
    pub fn new(group: &GroupRef, coords: Vec<Int>) -> Result<Element> {
        if coords.len() != group.ngens {
            return Err(Error::Shape(format!(
                "{} coordinates for {} generators",
                coords.len(),
                group.ngens
            )));
        }
        Ok(Element { group: group.clone(), coords: group.canon(coords) })
    }

    pub fn from_i64(group: &GroupRef, coords: &[i64]) -> Result<Element> {
        Element::new(group, coords.iter().map(|&c| int(c)).collect())
    }

    pub fn zero(group: &GroupRef) -> Element {
        Element { group: group.clone(), coords: vec![Int::zero(); group.ngens] }
    }

    pub fn generator(group: &GroupRef, i: usize) -> Element {
        assert!(i < group.ngens, "generator index out of range");
        let mut coords = vec![Int::zero(); group.ngens];
        coords[i] = Int::one();
        Element { group: group.clone(), coords: group.canon(coords) }
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn coords(&self) -> &[Int] {
        &self.coords
    }

    pub fn coords_col(&self) -> IntMatrix {
        IntMatrix::from_col(&self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Int::is_zero)
    }

    pub fn add(&self, other: &Element) -> Element {
        assert_eq!(self.group, other.group, "elements of different groups");
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Element { group: self.group.clone(), coords: self.group.canon(coords) }
    }

    pub fn neg(&self) -> Element {
        let coords = self.coords.iter().map(|a| -a).collect();
        Element { group: self.group.clone(), coords: self.group.canon(coords) }
    }

    pub fn sub(&self, other: &Element) -> Element {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &Int) -> Element {
        let coords = self.coords.iter().map(|a| a * k).collect();
        Element { group: self.group.clone(), coords: self.group.canon(coords) }
    }

    /// Additive order, `None` when infinite.
    pub fn order(&self) -> Option<Int> {
        let w = self.group.smith_u.mul(&self.coords_col());
        let mut ord = Int::one();
        for i in 0..self.group.ngens {
            let d = &self.group.diag[i];
            if d.is_zero() {
                if !w[(i, 0)].is_zero() {
                    return None;
                }
            } else {
                let g = w[(i, 0)].gcd(d);
                ord = ord.lcm(&(d / &g));
            }
        }
        Some(ord)
    }
}

/// Morphism between presented groups: a `dst.ngens x src.ngens` integer
/// matrix with columns canonicalised modulo the target relation lattice.
#[derive(Clone, Debug)]
pub struct Morphism {
    src: GroupRef,
    dst: GroupRef,
    mat: IntMatrix,
}

impl PartialEq for Morphism {
    fn eq(&self, other: &Self) -> bool {
        // Columns are canonical residues, so matrix equality is equality of
        // morphisms, not just of chosen representatives.
        self.src == other.src && self.dst == other.dst && self.mat == other.mat
    }
}

impl Eq for Morphism {}

impl Morphism {
    pub fn new(src: &GroupRef, dst: &GroupRef, mat: IntMatrix) -> Result<Morphism> {
        if mat.rows() != dst.ngens || mat.cols() != src.ngens {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, expected {}x{}",
                mat.rows(),
                mat.cols(),
                dst.ngens,
                src.ngens
            )));
        }
        // Well defined iff every relator of the source maps into the target
        // relation lattice.
        let image_of_rels = mat.mul(&src.rels);
        for c in 0..image_of_rels.cols() {
            let reduced = dst.canon(image_of_rels.col_vec(c));
            if reduced.iter().any(|x| !x.is_zero()) {
                return Err(Error::IncompatibleWithRelations(format!(
                    "relator {c} does not map into the target relation lattice"
                )));
            }
        }
        let mut canon_mat = mat;
        for c in 0..canon_mat.cols() {
            let col = dst.canon(canon_mat.col_vec(c));
            canon_mat.set_col(c, &col);
        }
        Ok(Morphism { src: src.clone(), dst: dst.clone(), mat: canon_mat })
    }

    pub fn from_rows_i64(src: &GroupRef, dst: &GroupRef, rows: &[Vec<i64>]) -> Result<Morphism> {
        Morphism::new(src, dst, IntMatrix::from_rows_i64(rows))
    }

    pub fn identity(g: &GroupRef) -> Morphism {
        Morphism::new(g, g, IntMatrix::identity(g.ngens)).expect("identity is well defined")
    }

    pub fn zero(src: &GroupRef, dst: &GroupRef) -> Morphism {
        Morphism::new(src, dst, IntMatrix::zeros(dst.ngens, src.ngens))
            .expect("zero map is well defined")
    }

    /// Multiplication by the integer `c` as an endomorphism.
    pub fn mult_by(g: &GroupRef, c: &Int) -> Morphism {
        Morphism::new(g, g, IntMatrix::identity(g.ngens).scale(c))
            .expect("scalar multiple of the identity is well defined")
    }

    pub fn src(&self) -> &GroupRef {
        &self.src
    }

    pub fn dst(&self) -> &GroupRef {
        &self.dst
    }

    pub fn mat(&self) -> &IntMatrix {
        &self.mat
    }

    pub fn is_zero_mor(&self) -> bool {
        self.mat.is_zero_matrix()
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.group != self.src {
            return Err(Error::Shape("element is not in the source group".into()));
        }
        Element::new(&self.dst, self.mat.mul(&x.coords_col()).col_vec(0))
    }

    /// `self` then `g`, i.e. the composite `g . self`.
    pub fn then(&self, g: &Morphism) -> Result<Morphism> {
        if self.dst != g.src {
            return Err(Error::Shape("composition through mismatched groups".into()));
        }
        Morphism::new(&self.src, &g.dst, g.mat.mul(&self.mat))
    }

    pub fn add(&self, other: &Morphism) -> Result<Morphism> {
        if self.src != other.src || self.dst != other.dst {
            return Err(Error::Shape("sum of morphisms with different endpoints".into()));
        }
        Morphism::new(&self.src, &self.dst, self.mat.add(&other.mat))
    }

    pub fn sub(&self, other: &Morphism) -> Result<Morphism> {
        if self.src != other.src || self.dst != other.dst {
            return Err(Error::Shape("difference of morphisms with different endpoints".into()));
        }
        Morphism::new(&self.src, &self.dst, self.mat.sub(&other.mat))
    }

    pub fn neg(&self) -> Morphism {
        Morphism::new(&self.src, &self.dst, self.mat.neg()).expect("negation stays well defined")
    }

    /// Kernel subgroup with its inclusion.
    pub fn kernel(&self) -> (GroupRef, Morphism) {
        let pre = preimage_lattice(&self.mat, &self.dst.rels);
        subgroup_from_cols(&self.src, &pre).expect("kernel columns live in the source")
    }

    /// Image subgroup of the target with its inclusion.
    pub fn image(&self) -> (GroupRef, Morphism) {
        subgroup_from_cols(&self.dst, &self.mat).expect("image columns live in the target")
    }

    /// Cokernel with its projection.
    pub fn cokernel(&self) -> (GroupRef, Morphism) {
        let rels = IntMatrix::hstack(&[&self.mat, &self.dst.rels]);
        let q = FpGroup::new(self.dst.ngens, rels).expect("cokernel presentation is well formed");
        let proj = Morphism::new(&self.dst, &q, IntMatrix::identity(self.dst.ngens))
            .expect("projection onto a coarser quotient is well defined");
        (q, proj)
    }

    pub fn is_mono(&self) -> bool {
        self.kernel().0.is_trivial()
    }

    pub fn is_epi(&self) -> bool {
        self.cokernel().0.is_trivial()
    }

    pub fn is_iso(&self) -> bool {
        self.is_mono() && self.is_epi()
    }

    /// `g` with `g . self = id` on the source, if the morphism splits off.
    pub fn left_inverse(&self) -> Option<Morphism> {
        let (na, nb) = (self.src.ngens, self.dst.ngens);
        let (ra, rb) = (&self.src.rels, &self.dst.rels);
        let ia = IntMatrix::identity(na);
        let mut sys = MatrixSystem::new();
        let g = sys.unknown(na, nb);
        let w1 = sys.unknown(ra.cols(), na);
        let w2 = sys.unknown(ra.cols(), rb.cols());
        sys.equation(
            &[Term { block: g, left: &ia, right: &self.mat }, Term { block: w1, left: ra, right: &ia }],
            &ia,
        );
        sys.equation(
            &[
                Term { block: g, left: &ia, right: rb },
                Term { block: w2, left: ra, right: &IntMatrix::identity(rb.cols()) },
            ],
            &IntMatrix::zeros(na, rb.cols()),
        );
        let sol = sys.solve()?;
        Some(Morphism::new(&self.dst, &self.src, sol[0].clone()).expect("solution satisfies the relation constraint"))
    }

    /// Integer lift of the target generators through an epimorphism:
    /// a matrix `λ` with `self.mat · λ ≡ I` modulo target relations.  The
    /// result is a choice of preimages, not a morphism.  `None` iff not epi.
    pub fn generator_section(&self) -> Option<IntMatrix> {
        let nd = self.dst.ngens;
        let id = IntMatrix::identity(nd);
        let rd = &self.dst.rels;
        let mut sys = MatrixSystem::new();
        let lam = sys.unknown(self.src.ngens, nd);
        let t = sys.unknown(rd.cols(), nd);
        sys.equation(
            &[Term { block: lam, left: &self.mat, right: &id }, Term { block: t, left: rd, right: &id }],
            &id,
        );
        let sol = sys.solve()?;
        Some(sol[0].clone())
    }

    /// `s` with `self . s = id` on the target, if one exists.
    pub fn right_inverse(&self) -> Option<Morphism> {
        let (na, nb) = (self.src.ngens, self.dst.ngens);
        let (ra, rb) = (&self.src.rels, &self.dst.rels);
        let ia = IntMatrix::identity(na);
        let ib = IntMatrix::identity(nb);
        let mut sys = MatrixSystem::new();
        let s = sys.unknown(na, nb);
        let w1 = sys.unknown(rb.cols(), nb);
        let w2 = sys.unknown(ra.cols(), rb.cols());
        sys.equation(
            &[Term { block: s, left: &self.mat, right: &ib }, Term { block: w1, left: rb, right: &ib }],
            &ib,
        );
        sys.equation(
            &[
                Term { block: s, left: &ia, right: rb },
                Term { block: w2, left: ra, right: &IntMatrix::identity(rb.cols()) },
            ],
            &IntMatrix::zeros(na, rb.cols()),
        );
        let sol = sys.solve()?;
        Some(Morphism::new(&self.dst, &self.src, sol[0].clone()).expect("solution satisfies the relation constraint"))
    }
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {} -> {}", self.mat, self.src, self.dst)
    }
}

/// Column basis of the lattice `{x : m·x ∈ columnspan(rels)}`.
pub(crate) fn preimage_lattice(m: &IntMatrix, rels: &IntMatrix) -> IntMatrix {
    let joint = IntMatrix::hstack(&[m, rels]);
    joint.kernel_basis().row_range(0, m.cols()).column_basis()
}

/// Subgroup of `g` generated by the columns of `x` (given in generator
/// coordinates), presented on those columns, with its inclusion.
pub fn subgroup_from_cols(g: &GroupRef, x: &IntMatrix) -> Result<(GroupRef, Morphism)> {
    if x.rows() != g.ngens {
        return Err(Error::Shape(format!(
            "column height {} does not match {} generators",
            x.rows(),
            g.ngens
        )));
    }
    // A relation among the new generators is exactly a combination landing in
    // the relation lattice of the ambient group.
    let rels = preimage_lattice(x, &g.rels);
    let h = FpGroup::new(x.cols(), rels)?;
    let incl = Morphism::new(&h, g, x.clone())?;
    Ok((h, incl))
}

pub fn subgroup_generated(g: &GroupRef, elems: &[Element]) -> Result<(GroupRef, Morphism)> {
    let mut x = IntMatrix::zeros(g.ngens(), elems.len());
    for (c, e) in elems.iter().enumerate() {
        if e.group() != g {
            return Err(Error::Shape("generator from a different group".into()));
        }
        x.set_col(c, e.coords());
    }
    subgroup_from_cols(g, &x)
}

/// Quotient by an embedded subgroup.  Rejects non-injective inclusions so the
/// caller cannot silently quotient by an image they did not intend.
pub fn quotient_by(incl: &Morphism) -> Result<(GroupRef, Morphism)> {
    if !incl.is_mono() {
        return Err(Error::NotMono);
    }
    Ok(incl.cokernel())
}

pub struct DirectSum {
    pub group: GroupRef,
    pub incl_a: Morphism,
    pub incl_b: Morphism,
    pub proj_a: Morphism,
    pub proj_b: Morphism,
}

pub fn direct_sum(a: &GroupRef, b: &GroupRef) -> DirectSum {
    let (na, nb) = (a.ngens(), b.ngens());
    let group = FpGroup::new(na + nb, IntMatrix::block_diag(&[a.rels(), b.rels()]))
        .expect("block presentation is well formed");
    let ia = IntMatrix::identity(na);
    let ib = IntMatrix::identity(nb);
    let za = IntMatrix::zeros(na, nb);
    let zb = IntMatrix::zeros(nb, na);
    let incl_a = Morphism::new(a, &group, IntMatrix::vstack(&[&ia, &zb])).expect("summand inclusion");
    let incl_b = Morphism::new(b, &group, IntMatrix::vstack(&[&za, &ib])).expect("summand inclusion");
    let proj_a = Morphism::new(&group, a, IntMatrix::hstack(&[&ia, &za])).expect("summand projection");
    let proj_b = Morphism::new(&group, b, IntMatrix::hstack(&[&zb, &ib])).expect("summand projection");
    DirectSum { group, incl_a, incl_b, proj_a, proj_b }
}

pub struct Pushout {
    pub group: GroupRef,
    /// Structure map from the target of the first leg.
    pub from_f: Morphism,
    /// Structure map from the target of the second leg.
    pub from_g: Morphism,
}

/// Pushout of `f : A -> B` and `g : A -> C`, i.e. `(B ⊕ C) / {(f a, -g a)}`.
pub fn pushout(f: &Morphism, g: &Morphism) -> Result<Pushout> {
    if f.src() != g.src() {
        return Err(Error::Shape("pushout legs must share a source".into()));
    }
    let (nb, nc) = (f.dst().ngens(), g.dst().ngens());
    let glue = IntMatrix::vstack(&[f.mat(), &g.mat().neg()]);
    let rels = IntMatrix::hstack(&[&glue, &IntMatrix::block_diag(&[f.dst().rels(), g.dst().rels()])]);
    let group = FpGroup::new(nb + nc, rels)?;
    let ib = IntMatrix::identity(nb);
    let ic = IntMatrix::identity(nc);
    let from_f = Morphism::new(f.dst(), &group, IntMatrix::vstack(&[&ib, &IntMatrix::zeros(nc, nb)]))?;
    let from_g = Morphism::new(g.dst(), &group, IntMatrix::vstack(&[&IntMatrix::zeros(nb, nc), &ic]))?;
    Ok(Pushout { group, from_f, from_g })
}

/// Exactness of `A -f-> B -g-> C` at the middle: the composite vanishes and
/// every kernel generator of `g` is hit by `f`.
pub fn is_exact(f: &Morphism, g: &Morphism) -> Result<bool> {
    if f.dst() != g.src() {
        return Err(Error::Shape("maps do not compose".into()));
    }
    if !f.then(g)?.is_zero_mor() {
        return Ok(false);
    }
    let (_, incl) = g.kernel();
    let span = IntMatrix::hstack(&[f.mat(), f.dst().rels()]);
    Ok(span.solve_matrix(incl.mat()).is_some())
}

/// Largest divisor of `d` coprime to `c`.
fn coprime_part(d: &Int, c: &Int) -> Int {
    let mut x = d.abs();
    loop {
        let g = x.gcd(c);
        if g.is_one() {
            return x;
        }
        x /= &g;
    }
}

/// Deterministic Miller-Rabin, valid for every 64-bit input.
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    fn pow_mod(mut b: u128, mut e: u64, n: u128) -> u64 {
        let mut acc: u128 = 1;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % n;
            }
            b = b * b % n;
            e >>= 1;
        }
        acc as u64
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a as u128, d, n as u128);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Subgroup of elements divisible by every power of `c`, with its inclusion.
///
/// For a finitely presented group this is the part of the torsion supported
/// away from the primes of `c`; the free part contributes nothing.
pub fn divisible_part(g: &GroupRef, c: &Int) -> Result<(GroupRef, Morphism)> {
    let c = c.abs();
    if c.is_zero() {
        return subgroup_from_cols(g, &IntMatrix::zeros(g.ngens(), 0));
    }
    if c.is_one() {
        return Ok((g.clone(), Morphism::identity(g)));
    }
    let mut cols: Vec<IntMatrix> = Vec::new();
    for i in 0..g.ngens() {
        let d = &g.diag[i];
        if *d < int(2) {
            continue;
        }
        let m = coprime_part(d, &c);
        if m.is_one() {
            continue;
        }
        // In Smith coordinates the c-divisible part of Z/d is generated by
        // d/m, the cofactor of the part of d coprime to c.
        let mut e = IntMatrix::zeros(g.ngens(), 1);
        e[(i, 0)] = d / &m;
        cols.push(g.smith_u_inv.mul(&e));
    }
    let refs: Vec<&IntMatrix> = cols.iter().collect();
    let x = if refs.is_empty() { IntMatrix::zeros(g.ngens(), 0) } else { IntMatrix::hstack(&refs) };
    subgroup_from_cols(g, &x)
}

/// [`divisible_part`] specialised to a prime, rejecting composite input.
pub fn p_divisible_part(g: &GroupRef, p: &Int) -> Result<(GroupRef, Morphism)> {
    let small = p
        .to_u64()
        .ok_or_else(|| Error::TooLarge(format!("primality check for {p}")))?;
    if !is_prime_u64(small) {
        return Err(Error::NotPrime(p.to_string()));
    }
    divisible_part(g, p)
}

pub struct CanonicalForm {
    /// `Z/f_1 ⊕ ... ⊕ Z/f_s ⊕ Z^r` on its own generators.
    pub group: GroupRef,
    pub to: Morphism,
    pub from: Morphism,
}

/// Mutually inverse isomorphisms between `g` and its invariant-factor form.
pub fn canonical_form(g: &GroupRef) -> CanonicalForm {
    let kept: Vec<usize> = (0..g.ngens()).filter(|&i| !g.diag[i].is_one()).collect();
    let t = kept.len();
    // Torsion coordinates come first in `kept`, so the relation matrix is a
    // diagonal block in the upper-left corner.
    let torsion: Vec<(usize, Int)> = kept
        .iter()
        .enumerate()
        .filter(|(_, &i)| !g.diag[i].is_zero())
        .map(|(pos, &i)| (pos, g.diag[i].clone()))
        .collect();
    let mut rels = IntMatrix::zeros(t, torsion.len());
    for (c, (pos, d)) in torsion.iter().enumerate() {
        rels[(*pos, c)] = d.clone();
    }
    let canon = FpGroup::new(t, rels).expect("canonical presentation is well formed");
    let mut to_mat = IntMatrix::zeros(t, g.ngens());
    let mut from_mat = IntMatrix::zeros(g.ngens(), t);
    for (r, &i) in kept.iter().enumerate() {
        for c in 0..g.ngens() {
            to_mat[(r, c)] = g.smith_u[(i, c)].clone();
            from_mat[(c, r)] = g.smith_u_inv[(c, i)].clone();
        }
    }
    let to = Morphism::new(g, &canon, to_mat).expect("Smith rows define the coordinate map");
    let from = Morphism::new(&canon, g, from_mat).expect("inverse Smith columns define the section");
    CanonicalForm { group: canon, to, from }
}

/// A short exact sequence `0 -> left -> mid -> right -> 0`, validated on
/// construction.
#[derive(Clone, Debug)]
pub struct Ses {
    pub incl: Morphism,
    pub proj: Morphism,
}

impl Ses {
    pub fn new(incl: Morphism, proj: Morphism) -> Result<Ses> {
        if incl.dst() != proj.src() {
            return Err(Error::Shape("sequence maps do not compose".into()));
        }
        if !incl.is_mono() {
            return Err(Error::NonExact("first map is not injective".into()));
        }
        if !proj.is_epi() {
            return Err(Error::NonExact("second map is not surjective".into()));
        }
        if !is_exact(&incl, &proj)? {
            return Err(Error::NonExact("sequence is not exact at the middle".into()));
        }
        Ok(Ses { incl, proj })
    }

    pub fn left(&self) -> &GroupRef {
        self.incl.src()
    }

    pub fn mid(&self) -> &GroupRef {
        self.incl.dst()
    }

    pub fn right(&self) -> &GroupRef {
        self.proj.dst()
    }
}

/// A pair of mutually inverse isomorphisms, when the groups are isomorphic.
pub fn iso_witness(a: &GroupRef, b: &GroupRef) -> Option<(Morphism, Morphism)> {
    if a.rank() != b.rank() || a.torsion_factors() != b.torsion_factors() {
        return None;
    }
    let ca = canonical_form(a);
    let cb = canonical_form(b);
    // Identical invariants give literally identical canonical presentations.
    let f = ca.to.then(&cb.from).expect("canonical forms agree");
    let g = cb.to.then(&ca.from).expect("canonical forms agree");
    Some((f, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invariants(g: &GroupRef) -> (usize, Vec<i64>) {
        let fs = g
            .torsion_factors()
            .iter()
            .map(|f| f.to_string().parse::<i64>().unwrap())
            .collect();
        (g.rank(), fs)
    }

    #[test]
    fn invariants_of_mixed_presentation() {
        // Z^2 / <(2,4),(6,8)> has Smith form diag(2, 4).
        let g = FpGroup::new(2, IntMatrix::from_rows_i64(&[vec![2, 6], vec![4, 8]])).unwrap();
        assert_eq!(invariants(&g), (0, vec![2, 4]));
        let h = FpGroup::new(2, IntMatrix::from_rows_i64(&[vec![12], vec![0]])).unwrap();
        assert_eq!(invariants(&h), (1, vec![12]));
        assert_eq!(h.order(), None);
        assert_eq!(g.order(), Some(int(8)));
    }

    #[test]
    fn elements_canonicalise_and_have_orders() {
        let g = FpGroup::cyclic(12);
        let x = Element::from_i64(&g, &[25]).unwrap();
        assert_eq!(x.coords(), &[int(1)]);
        assert_eq!(x.order(), Some(int(12)));
        assert_eq!(x.scale(&int(4)).order(), Some(int(3)));
        assert_eq!(Element::zero(&g).order(), Some(int(1)));
        let z = FpGroup::free(1);
        assert_eq!(Element::from_i64(&z, &[3]).unwrap().order(), None);
    }

    #[test]
    fn morphism_validity_is_checked() {
        let z4 = FpGroup::cyclic(4);
        let z2 = FpGroup::cyclic(2);
        assert!(Morphism::from_rows_i64(&z4, &z2, &[vec![1]]).is_ok());
        // Z/2 -> Z/4 sending the generator to a generator is not well defined.
        assert!(matches!(
            Morphism::from_rows_i64(&z2, &z4, &[vec![1]]),
            Err(Error::IncompatibleWithRelations(_))
        ));
        // But twice the generator works.
        assert!(Morphism::from_rows_i64(&z2, &z4, &[vec![2]]).is_ok());
    }

    #[test]
    fn kernel_of_doubling_into_z4() {
        let z = FpGroup::free(1);
        let z4 = FpGroup::cyclic(4);
        let f = Morphism::from_rows_i64(&z, &z4, &[vec![2]]).unwrap();
        let (k, incl) = f.kernel();
        assert_eq!(invariants(&k), (1, vec![]));
        assert_eq!(incl.mat()[(0, 0)], int(2));
        // And the image is the order-2 subgroup.
        let (im, _) = f.image();
        assert_eq!(invariants(&im), (0, vec![2]));
    }

    #[test]
    fn cokernel_and_quotient() {
        let z = FpGroup::free(1);
        let double = Morphism::mult_by(&z, &int(2));
        let (q, proj) = double.cokernel();
        assert_eq!(invariants(&q), (0, vec![2]));
        assert!(proj.is_epi());

        let (h, incl) = subgroup_from_cols(&z, &IntMatrix::from_rows_i64(&[vec![2]])).unwrap();
        assert_eq!(invariants(&h), (1, vec![]));
        let (q2, _) = quotient_by(&incl).unwrap();
        assert_eq!(invariants(&q2), (0, vec![2]));

        // Quotient by a non-injective map is refused.
        let z4 = FpGroup::cyclic(4);
        let f = Morphism::from_rows_i64(&z, &z4, &[vec![2]]).unwrap();
        assert!(matches!(quotient_by(&f), Err(Error::NotMono)));
    }

    #[test]
    fn exactness_of_multiplication_sequence() {
        let z = FpGroup::free(1);
        let z2 = FpGroup::cyclic(2);
        let double = Morphism::mult_by(&z, &int(2));
        let proj = Morphism::from_rows_i64(&z, &z2, &[vec![1]]).unwrap();
        assert!(is_exact(&double, &proj).unwrap());
        let quadruple = Morphism::mult_by(&z, &int(4));
        assert!(!is_exact(&quadruple, &proj).unwrap());
        assert!(double.is_mono());
        assert!(!double.is_epi());
        assert!(proj.is_epi());
    }

    #[test]
    fn split_inclusions_have_left_inverses() {
        let z = FpGroup::free(1);
        let z3 = FpGroup::cyclic(3);
        let s = direct_sum(&z, &z3);
        let g = s.incl_a.left_inverse().expect("summand inclusion splits");
        assert_eq!(s.incl_a.then(&g).unwrap(), Morphism::identity(&z));
        assert!(Morphism::mult_by(&z, &int(2)).left_inverse().is_none());

        let r = s.proj_a.right_inverse().expect("summand projection splits");
        assert_eq!(r.then(&s.proj_a).unwrap(), Morphism::identity(&z));
        let z2 = FpGroup::cyclic(2);
        let proj = Morphism::from_rows_i64(&z, &z2, &[vec![1]]).unwrap();
        assert!(proj.right_inverse().is_none());
    }

    #[test]
    fn direct_sum_identities() {
        let a = FpGroup::cyclic(4);
        let b = FpGroup::free(1);
        let s = direct_sum(&a, &b);
        assert_eq!(invariants(&s.group), (1, vec![4]));
        assert_eq!(s.incl_a.then(&s.proj_a).unwrap(), Morphism::identity(&a));
        assert_eq!(s.incl_b.then(&s.proj_b).unwrap(), Morphism::identity(&b));
        assert!(s.incl_a.then(&s.proj_b).unwrap().is_zero_mor());
    }

    #[test]
    fn pushout_square_commutes() {
        let z = FpGroup::free(1);
        let double = Morphism::mult_by(&z, &int(2));
        let id = Morphism::identity(&z);
        let p = pushout(&double, &id).unwrap();
        assert_eq!(double.then(&p.from_f).unwrap(), id.then(&p.from_g).unwrap());
        // (Z ⊕ Z) / <(2, -1)> is free of rank 1.
        assert_eq!(invariants(&p.group), (1, vec![]));

        // Pushout of Z/4 <- Z -> Z/6 along the generators glues to Z/2.
        let z4 = FpGroup::cyclic(4);
        let z6 = FpGroup::cyclic(6);
        let f = Morphism::from_rows_i64(&z, &z4, &[vec![1]]).unwrap();
        let g = Morphism::from_rows_i64(&z, &z6, &[vec![1]]).unwrap();
        let p = pushout(&f, &g).unwrap();
        assert_eq!(invariants(&p.group), (0, vec![2]));
    }

    #[test]
    fn divisible_parts_of_cyclic_groups() {
        let g = FpGroup::cyclic(12);
        let (d, incl) = p_divisible_part(&g, &int(2)).unwrap();
        assert_eq!(invariants(&d), (0, vec![3]));
        // The embedded copy is the order-3 subgroup generated by 4.
        let gen = incl.apply(&Element::generator(&d, 0)).unwrap();
        assert_eq!(gen.order(), Some(int(3)));

        let (d5, _) = p_divisible_part(&g, &int(5)).unwrap();
        assert_eq!(invariants(&d5), (0, vec![12]));

        assert!(matches!(p_divisible_part(&g, &int(4)), Err(Error::NotPrime(_))));

        let mixed = direct_sum(&FpGroup::cyclic(12), &FpGroup::free(1));
        let (d6, _) = divisible_part(&mixed.group, &int(6)).unwrap();
        assert!(d6.is_trivial());
    }

    #[test]
    fn canonical_form_round_trips() {
        let g = FpGroup::new(2, IntMatrix::from_rows_i64(&[vec![2, 6], vec![4, 8]])).unwrap();
        let c = canonical_form(&g);
        assert_eq!(invariants(&c.group), invariants(&g));
        assert_eq!(c.to.then(&c.from).unwrap(), Morphism::identity(&g));
        assert_eq!(c.from.then(&c.to).unwrap(), Morphism::identity(&c.group));
    }

    #[test]
    fn iso_witness_between_presentations() {
        let a = FpGroup::of_cyclics(&[2, 3]);
        let b = FpGroup::cyclic(6);
        let (f, g) = iso_witness(&a, &b).expect("Z/2 + Z/3 is Z/6");
        assert_eq!(f.then(&g).unwrap(), Morphism::identity(&a));
        assert_eq!(g.then(&f).unwrap(), Morphism::identity(&b));
        assert!(iso_witness(&FpGroup::cyclic(4), &FpGroup::of_cyclics(&[2, 2])).is_none());
    }

    #[test]
    fn subgroup_generated_matches_columns() {
        let g = FpGroup::of_cyclics(&[4, 6]);
        let e = Element::from_i64(&g, &[2, 3]).unwrap();
        let (h, incl) = subgroup_generated(&g, std::slice::from_ref(&e)).unwrap();
        assert_eq!(h.order(), Some(int(2)));
        assert_eq!(incl.apply(&Element::generator(&h, 0)).unwrap(), e);
    }
}
