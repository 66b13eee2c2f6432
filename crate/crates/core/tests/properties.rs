//! Randomized structural laws.  Each property drives the deterministic
//! generators from a proptest-chosen seed, so failures shrink to a seed
//! that reproduces the exact instance.

use proptest::prelude::*;

use defect_core::criteria::{
    def_omega_check, factor_check_fp, finite_sum, split_pair_check, split_pair_map,
    splitting_small_check,
};
use defect_core::defect::{dev, dev_map};
use defect_core::fpab::{
    direct_sum, is_exact, pushout, quotient_by, subgroup_from_cols, subgroup_generated, FpGroup,
    GroupRef, Morphism,
};
use defect_core::gen::Gen;
use defect_core::homext::{induced_post, induced_pre, Ext1Group, HomGroup};
use defect_core::tower::{hom_from_fp, phi_verdict, Tower, TowerBeta, Witness};
use defect_core::{int, IntMatrix};

fn same_type(a: &GroupRef, b: &GroupRef) -> bool {
    a.rank() == b.rank() && a.torsion_factors() == b.torsion_factors()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_is_associative_and_unital(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (a, b) = (g.group(3), g.group(3));
        let (c, d) = (g.group(3), g.group(3));
        let f1 = g.morphism(&a, &b);
        let f2 = g.morphism(&b, &c);
        let f3 = g.morphism(&c, &d);
        let left = f1.then(&f2).unwrap().then(&f3).unwrap();
        let right = f1.then(&f2.then(&f3).unwrap()).unwrap();
        prop_assert!(left == right);
        prop_assert!(Morphism::identity(&a).then(&f1).unwrap() == f1);
        prop_assert!(f1.then(&Morphism::identity(&b)).unwrap() == f1);
    }

    #[test]
    fn first_isomorphism_theorem(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (a, b) = (g.group(3), g.group(3));
        let f = g.morphism(&a, &b);
        let (_, incl_k) = f.kernel();
        let (coimage, _) = incl_k.cokernel();
        let (image, _) = subgroup_from_cols(f.dst(), f.mat()).unwrap();
        prop_assert!(same_type(&coimage, &image));
        // Exactness of ker -> src -> dst is the same statement relationally.
        prop_assert!(is_exact(&incl_k, &f).unwrap());
    }

    #[test]
    fn pushout_satisfies_universal_property(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let a = g.group(2);
        let (b, c) = (g.group(2), g.group(2));
        let f = g.morphism(&a, &b);
        let h = g.morphism(&a, &c);
        let po = pushout(&f, &h).unwrap();
        prop_assert!(f.then(&po.from_f).unwrap() == h.then(&po.from_g).unwrap());
        // A commuting cone through a random mediating map is recovered
        // exactly: existence from the glued matrix, uniqueness because the
        // leg images generate the pushout.
        let t = g.group(2);
        let m = g.morphism(&po.group, &t);
        let u = po.from_f.then(&m).unwrap();
        let v = po.from_g.then(&m).unwrap();
        let w = Morphism::new(&po.group, &t, IntMatrix::hstack(&[u.mat(), v.mat()])).unwrap();
        prop_assert!(po.from_f.then(&w).unwrap() == u);
        prop_assert!(po.from_g.then(&w).unwrap() == v);
        prop_assert!(w == m);
    }

    #[test]
    fn split_mono_complements(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (a, b) = (g.group(2), g.finite_group(2));
        let ds = direct_sum(&a, &b);
        let f = &ds.incl_a;
        prop_assert!(f.left_inverse().is_some());
        let (coker, _) = f.cokernel();
        prop_assert!(same_type(&direct_sum(&a, &coker).group, &ds.group));
        // The same complement law on an arbitrary map, whenever a left
        // inverse happens to exist.
        let r = g.morphism(&a, &ds.group);
        if r.left_inverse().is_some() {
            let (q, _) = r.cokernel();
            prop_assert!(same_type(&direct_sum(&a, &q).group, &ds.group));
        }
    }

    #[test]
    fn precomposition_is_contravariantly_functorial(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (a, b, c) = (g.group(2), g.group(2), g.group(2));
        let t = g.group(2);
        let f = g.morphism(&a, &b);
        let h = g.morphism(&b, &c);
        let hom_a = HomGroup::new(&a, &t).unwrap();
        let hom_b = HomGroup::new(&b, &t).unwrap();
        let hom_c = HomGroup::new(&c, &t).unwrap();
        let pre_f = induced_pre(&f, &hom_b, &hom_a).unwrap();
        let pre_h = induced_pre(&h, &hom_c, &hom_b).unwrap();
        let pre_fh = induced_pre(&f.then(&h).unwrap(), &hom_c, &hom_a).unwrap();
        prop_assert!(pre_fh == pre_h.then(&pre_f).unwrap());
    }

    #[test]
    fn hom_encoding_is_a_bijective_homomorphism(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (a, b) = (g.group(3), g.group(3));
        let hom = HomGroup::new(&a, &b).unwrap();
        let f1 = g.morphism(&a, &b);
        let f2 = g.morphism(&a, &b);
        let e1 = hom.encode(&f1).unwrap();
        prop_assert!(hom.decode(&e1).unwrap() == f1);
        let sum = hom.encode(&f1.add(&f2).unwrap()).unwrap();
        prop_assert!(sum == e1.add(&hom.encode(&f2).unwrap()));
    }

    #[test]
    fn hom_and_ext_ignore_the_presentation(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let a = g.group(3);
        let b = g.group(3);
        // Same group, redundant presentation: one extra generator declared
        // equal to a random word in the old ones.
        let n = a.ngens();
        let rels = a.rels();
        let mut padded = IntMatrix::zeros(n + 1, rels.cols() + 1);
        for i in 0..n {
            for j in 0..rels.cols() {
                padded[(i, j)] = rels[(i, j)].clone();
            }
            padded[(i, rels.cols())] = int(-g.i64_in(-3, 3));
        }
        padded[(n, rels.cols())] = int(1);
        let a2 = FpGroup::new(n + 1, padded).unwrap();
        prop_assert!(same_type(&a, &a2));
        prop_assert!(same_type(
            HomGroup::new(&a, &b).unwrap().carrier(),
            HomGroup::new(&a2, &b).unwrap().carrier(),
        ));
        prop_assert!(same_type(
            Ext1Group::new(&a, &b).unwrap().carrier(),
            Ext1Group::new(&a2, &b).unwrap().carrier(),
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn defect_values_are_additive(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (l, p) = (g.group(2), g.group(2));
        let beta = g.morphism(&l, &p);
        let (x, y) = (g.group(2), g.group(2));
        let ds = direct_sum(&x, &y);
        let joint = dev(&beta, &ds.group).unwrap();
        let at_x = dev(&beta, &x).unwrap();
        let at_y = dev(&beta, &y).unwrap();
        let split = direct_sum(at_x.group(), at_y.group());
        prop_assert!(same_type(joint.group(), &split.group));
    }

    #[test]
    fn defect_maps_commute_with_projections(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (l, p) = (g.group(2), g.group(2));
        let beta = g.morphism(&l, &p);
        let (x, y) = (g.group(3), g.group(3));
        let f = g.morphism(&x, &y);
        let vx = dev(&beta, &x).unwrap();
        let vy = dev(&beta, &y).unwrap();
        let post = induced_post(&f, vx.hom_l(), vy.hom_l()).unwrap();
        let dmap = dev_map(&vx, &vy, &f).unwrap();
        prop_assert!(vx.proj().then(&dmap).unwrap() == post.then(vy.proj()).unwrap());
    }

    #[test]
    fn split_pair_and_finite_factorization_agree(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let (l, p) = (g.group(2), g.group(2));
        let beta = g.morphism(&l, &p);
        let fgrp = g.group(2);
        let h = g.morphism(&l, &fgrp);
        // Certified pair splitting yields a finite factorization of
        // 1 - g.beta through the auxiliary group.
        let v = split_pair_check(&beta, &h).unwrap();
        if let Some(Witness::LeftInverse(w)) = v.witness().filter(|_| v.is_yes()) {
            let sum = direct_sum(&p, &fgrp);
            let restrict_p = sum.incl_a.then(w).unwrap();
            let restrict_f = sum.incl_b.then(w).unwrap();
            prop_assert!(factor_check_fp(&beta, &restrict_p, &fgrp, &h, &restrict_f).unwrap());
            prop_assert!(split_pair_map(&beta, &h).unwrap().left_inverse().is_some());
        }
        // Conversely a factorization witness makes the paired map split:
        // 1 - g.beta always factors through the source itself.
        let gg = g.morphism(&p, &l);
        let d = Morphism::identity(&l).sub(&beta.then(&gg).unwrap()).unwrap();
        prop_assert!(factor_check_fp(&beta, &gg, &l, &d, &Morphism::identity(&l)).unwrap());
        let paired = split_pair_check(&beta, &d).unwrap();
        prop_assert!(paired.is_yes());
    }

    #[test]
    fn verdicts_never_lose_certification_as_the_window_grows(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let l = g.group(2);
        let p = g.group(2);
        let beta = TowerBeta::Plain(g.morphism(&l, &p));
        let t = match g.usize_in(0, 2) {
            0 => Tower::mult(&int([2, 3, 5][g.usize_in(0, 2)]), 2).unwrap(),
            1 => Tower::factorial(2),
            _ => Tower::constant(&g.finite_group(2), 2),
        };
        let narrow = phi_verdict(&beta, &t, 2).unwrap();
        let wide_tower = t.at_window(4).unwrap();
        let wide = phi_verdict(&beta, &wide_tower, 4).unwrap();
        for (n, w) in [(&narrow.epi, &wide.epi), (&narrow.mono, &wide.mono), (&narrow.iso, &wide.iso)] {
            if n.is_yes() {
                prop_assert!(w.is_yes());
            }
            if n.is_no() {
                prop_assert!(w.is_no());
            }
        }
    }

    #[test]
    fn certified_hom_limits_match_the_truncated_computation(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let a = g.group(2);
        let t = if g.usize_in(0, 1) == 0 {
            Tower::constant(&g.finite_group(2), 3)
        } else {
            g.mono_tower(3)
        };
        let (value, verdict) = hom_from_fp(&a, &t, 3).unwrap();
        if verdict.is_yes() {
            let (last, _) = t.colim_truncated();
            let direct = HomGroup::new(&a, &last).unwrap();
            prop_assert!(same_type(&value, direct.carrier()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn splitting_quotient_index_transfers_to_sum_deletion(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let l = g.group(2);
        let p = g.group(2);
        let beta = g.morphism(&l, &p);
        // A nested chain from growing generating sets.
        let elems: Vec<_> = (0..3).map(|_| g.element(&l, 2)).collect();
        let mut chain = Vec::new();
        for k in 0..=elems.len() {
            let (_, incl) = subgroup_generated(&l, &elems[..k]).unwrap();
            chain.push(incl);
        }
        let rep = def_omega_check(&beta, &chain).unwrap();
        if let Some(n) = rep.first_index.filter(|_| rep.verdict.is_yes()) {
            let mut quots = Vec::new();
            let mut projs = Vec::new();
            for incl in &chain {
                let (q, pi) = quotient_by(incl).unwrap();
                quots.push(q);
                projs.push(pi);
            }
            let sum = finite_sum(&quots);
            let mut sigma = Morphism::zero(&l, &sum.group);
            for (pi, incl) in projs.iter().zip(&sum.incls) {
                sigma = sigma.add(&pi.then(incl).unwrap()).unwrap();
            }
            let f: Vec<usize> = (0..=n).collect();
            let v = splitting_small_check(&beta, &quots, &sigma, &f).unwrap();
            prop_assert!(v.is_yes());
        }
    }
}
