//! Brute-force oracles used to cross-check the structural algorithms.
//!
//! Everything here works by enumeration over canonical coordinates, with no
//! shared code paths with the lattice-based implementations it checks, so an
//! agreement between the two is meaningful evidence.

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fpab::{canonical_form, Element, GroupRef, Morphism};
use crate::zlinalg::{Int, IntMatrix};

/// Enumeration refuses to materialise more than this many objects.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// Number of elements of a finite group.
pub fn element_count(g: &GroupRef) -> Result<Int> {
    g.order().ok_or_else(|| Error::PreconditionFailed("group is infinite".into()))
}

/// Cyclic orders of the canonical generators: invariant factors first, then
/// one zero per free rank.
fn canonical_orders(g: &GroupRef) -> Vec<Int> {
    let mut orders: Vec<Int> = g.torsion_factors().to_vec();
    orders.extend(std::iter::repeat_with(Int::zero).take(g.rank()));
    orders
}

/// All elements of a finite group, each exactly once.
pub fn enumerate_elements(g: &GroupRef) -> Result<Vec<Element>> {
    let n = element_count(g)?;
    let n = n
        .to_u64()
        .filter(|&n| n <= ENUMERATION_LIMIT)
        .ok_or_else(|| Error::TooLarge(format!("{n} elements")))?;
    let c = canonical_form(g);
    let orders = canonical_orders(&c.group);
    let mut out = Vec::with_capacity(n as usize);
    let mut digits = vec![Int::zero(); orders.len()];
    loop {
        let e = Element::new(&c.group, digits.clone())?;
        out.push(c.from.apply(&e)?);
        // Odometer over the canonical coordinates.
        let mut pos = 0;
        loop {
            if pos == orders.len() {
                debug_assert_eq!(out.len() as u64, n);
                return Ok(out);
            }
            digits[pos] += 1;
            if digits[pos] < orders[pos] {
                break;
            }
            digits[pos] = Int::zero();
            pos += 1;
        }
    }
}

/// Size of the hom set, `None` when it is infinite.
pub fn hom_count(a: &GroupRef, b: &GroupRef) -> Option<Int> {
    let mut count = Int::from(1);
    for x in canonical_orders(a) {
        for y in canonical_orders(b) {
            match (x.is_zero(), y.is_zero()) {
                // A free generator can hit every element of a finite cyclic
                // factor; a torsion generator must land in its own order.
                (true, true) => return None,
                (true, false) => count *= &y,
                (false, true) => {}
                (false, false) => count *= x.gcd(&y),
            }
        }
    }
    Some(count)
}

/// Every morphism `a -> b`, each exactly once, by enumerating the admissible
/// images of each canonical generator.
pub fn enumerate_homs(a: &GroupRef, b: &GroupRef) -> Result<Vec<Morphism>> {
    let total = hom_count(a, b)
        .ok_or_else(|| Error::PreconditionFailed("hom set is infinite".into()))?;
    let total = total
        .to_u64()
        .filter(|&t| t <= ENUMERATION_LIMIT)
        .ok_or_else(|| Error::TooLarge(format!("{total} morphisms")))?;
    let ca = canonical_form(a);
    let cb = canonical_form(b);
    let src_orders = canonical_orders(&ca.group);
    let dst_orders = canonical_orders(&cb.group);
    // Admissible coefficients for the (j, i) matrix slot.
    let mut choices: Vec<Vec<Int>> = Vec::new();
    for x in &src_orders {
        for y in &dst_orders {
            choices.push(match (x.is_zero(), y.is_zero()) {
                (true, true) => unreachable!("infinite hom set was ruled out"),
                (true, false) => int_range(y),
                (false, true) => vec![Int::zero()],
                (false, false) => {
                    let g = x.gcd(y);
                    let step = y / &g;
                    let mut v = Vec::new();
                    let mut acc = Int::zero();
                    while &acc < y {
                        v.push(acc.clone());
                        acc += &step;
                    }
                    v
                }
            });
        }
    }
    let (na, nb) = (src_orders.len(), dst_orders.len());
    let mut idx = vec![0usize; choices.len()];
    let mut out = Vec::with_capacity(total as usize);
    loop {
        let mut mat = IntMatrix::zeros(nb, na);
        for (slot, &k) in idx.iter().enumerate() {
            let (i, j) = (slot / nb, slot % nb);
            mat[(j, i)] = choices[slot][k].clone();
        }
        let core = Morphism::new(&ca.group, &cb.group, mat)?;
        out.push(ca.to.then(&core)?.then(&cb.from)?);
        let mut pos = 0;
        loop {
            if pos == choices.len() {
                debug_assert_eq!(out.len() as u64, total);
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn int_range(n: &Int) -> Vec<Int> {
    let mut v = Vec::new();
    let mut acc = Int::zero();
    while &acc < n {
        v.push(acc.clone());
        acc += 1;
    }
    v
}

/// Exactness of `f, g` at the middle group, decided by listing elements:
/// the image of `f` and the kernel of `g` are materialised as coordinate
/// sets and compared.  Coordinates are canonical residues, so set equality
/// is group-element equality.
pub fn exact_by_counting(f: &Morphism, g: &Morphism) -> Result<bool> {
    if f.dst() != g.src() {
        return Err(Error::Shape("maps do not compose".into()));
    }
    let mid = enumerate_elements(f.dst())?;
    let image: std::collections::HashSet<Vec<Int>> = enumerate_elements(f.src())?
        .iter()
        .map(|x| f.apply(x).map(|y| y.coords().to_vec()))
        .collect::<Result<_>>()?;
    let mut kernel_size = 0usize;
    for b in &mid {
        if g.apply(b)?.is_zero() {
            kernel_size += 1;
            if !image.contains(b.coords()) {
                return Ok(false);
            }
        }
    }
    Ok(kernel_size == image.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpab::FpGroup;
    use crate::zlinalg::int;

    #[test]
    fn counts_of_small_hom_sets() {
        let z = FpGroup::free(1);
        assert_eq!(hom_count(&FpGroup::cyclic(4), &FpGroup::cyclic(6)), Some(int(2)));
        assert_eq!(hom_count(&z, &FpGroup::cyclic(5)), Some(int(5)));
        assert_eq!(hom_count(&FpGroup::cyclic(3), &z), Some(int(1)));
        assert_eq!(hom_count(&z, &z), None);
        assert_eq!(
            hom_count(&FpGroup::of_cyclics(&[2, 2]), &FpGroup::of_cyclics(&[2, 2])),
            Some(int(16))
        );
    }

    #[test]
    fn enumerated_homs_are_distinct_and_well_defined() {
        let a = FpGroup::cyclic(4);
        let b = FpGroup::cyclic(6);
        let homs = enumerate_homs(&a, &b).unwrap();
        assert_eq!(homs.len(), 2);
        for (i, f) in homs.iter().enumerate() {
            for g in &homs[i + 1..] {
                assert_ne!(f, g);
            }
            // 4 times anything in the image is zero.
            let y = f.apply(&Element::generator(&a, 0)).unwrap();
            assert!(y.scale(&int(4)).is_zero());
        }
        assert!(homs.iter().any(Morphism::is_zero_mor));

        let e = FpGroup::of_cyclics(&[2, 2]);
        let endos = enumerate_homs(&e, &e).unwrap();
        assert_eq!(endos.len(), 16);
        for (i, f) in endos.iter().enumerate() {
            for g in &endos[i + 1..] {
                assert_ne!(f, g);
            }
        }
    }

    #[test]
    fn element_enumeration_matches_order() {
        let g = FpGroup::of_cyclics(&[2, 3]);
        let elems = enumerate_elements(&g).unwrap();
        assert_eq!(elems.len(), 6);
        for (i, x) in elems.iter().enumerate() {
            for y in &elems[i + 1..] {
                assert_ne!(x, y);
            }
        }
        assert!(enumerate_elements(&FpGroup::free(1)).is_err());
        assert_eq!(element_count(&g).unwrap(), int(6));
    }

    #[test]
    fn counting_exactness_matches_the_lattice_answer() {
        // 0 -> Z/2 -> Z/4 -> Z/2 -> 0.
        let z2 = FpGroup::cyclic(2);
        let z4 = FpGroup::cyclic(4);
        let incl = Morphism::new(&z2, &z4, IntMatrix::from_rows_i64(&[vec![2]])).unwrap();
        let proj = Morphism::new(&z4, &z2, IntMatrix::identity(1)).unwrap();
        assert!(exact_by_counting(&incl, &proj).unwrap());
        assert!(crate::fpab::is_exact(&incl, &proj).unwrap());

        // Relaxing the projection to zero enlarges the kernel past the image.
        let zero = Morphism::zero(&z4, &z2);
        assert!(!exact_by_counting(&incl, &zero).unwrap());
        assert!(!crate::fpab::is_exact(&incl, &zero).unwrap());

        // Composite not zero is simply "not exact", not an error.
        assert!(!exact_by_counting(&Morphism::identity(&z4), &proj).unwrap());
    }

    #[test]
    fn homs_from_free_sources_enumerate_targets() {
        let z = FpGroup::free(1);
        let b = FpGroup::cyclic(5);
        let homs = enumerate_homs(&z, &b).unwrap();
        assert_eq!(homs.len(), 5);
        let imgs: Vec<Element> =
            homs.iter().map(|f| f.apply(&Element::generator(&z, 0)).unwrap()).collect();
        for (i, x) in imgs.iter().enumerate() {
            for y in &imgs[i + 1..] {
                assert_ne!(x, y);
            }
        }
    }
}
