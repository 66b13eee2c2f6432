//! Built-in cross-check suite: normal forms, oracle agreement, exactness
//! counting, and a seeded sweep of the defect machinery.
//!
//! The result is an ordered list of key-value lines.  Every line is a pure
//! function of the seed, so a fixed seed reproduces the report byte for
//! byte; the front end prints it verbatim.

use num_traits::{Signed, Zero};

use crate::criteria::{split_pair_check, verify_split_pair};
use crate::defect::{dev, dev_vs_ext, restriction_sequence};
use crate::fpab::{is_exact, FpGroup, Morphism};
use crate::gen::{isomorphism_types_up_to, Gen};
use crate::homext::{Ext1Group, HomGroup};
use crate::oracle::{enumerate_homs, exact_by_counting, hom_count};
use crate::tower::{phi_verdict, verify_phi, TowerBeta};
use crate::zlinalg::int;

pub type Report = Vec<(String, String)>;

fn push(report: &mut Report, key: &str, value: impl ToString) {
    report.push((key.to_string(), value.to_string()));
}

/// Renders a report in the fixed line format shared with the front end.
pub fn render(report: &Report) -> String {
    let mut out = String::new();
    for (k, v) in report {
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

/// Runs every suite and collects one flat report.  Returns the report and
/// whether all suites passed.
pub fn selftest(seed: u64) -> (Report, bool) {
    let mut report = Report::new();
    push(&mut report, "command", "selftest");
    push(&mut report, "seed", seed);
    let mut all_ok = true;
    for (name, outcome) in [
        ("normal-forms", snf_suite(seed)),
        ("hom-agreement", hom_agreement_suite()),
        ("ext-agreement", ext_agreement_suite()),
        ("exactness-counting", exactness_suite(seed)),
        ("defect-machinery", defect_suite(seed)),
    ] {
        push(&mut report, "suite", name);
        match outcome {
            Ok((checks, ok)) => {
                push(&mut report, "checks", checks);
                push(&mut report, "status", if ok { "ok" } else { "FAILED" });
                all_ok &= ok;
            }
            Err(e) => {
                push(&mut report, "status", format!("ERROR {e}"));
                all_ok = false;
            }
        }
    }
    push(&mut report, "verdict", if all_ok { "pass" } else { "fail" });
    (report, all_ok)
}

type SuiteResult = crate::error::Result<(usize, bool)>;

/// 200 seeded matrices: the Smith factorization must multiply back exactly,
/// with unimodular transforms and a divisibility chain.
fn snf_suite(seed: u64) -> SuiteResult {
    let mut g = Gen::new(seed ^ 0x5e1f);
    let mut checks = 0;
    for _ in 0..200 {
        let rows = g.usize_in(1, 5);
        let cols = g.usize_in(1, 5);
        let a = g.matrix(rows, cols, 20);
        let s = a.snf();
        if s.u.mul(&a).mul(&s.v) != s.d {
            return Ok((checks, false));
        }
        if s.u.det().abs() != int(1) || s.v.det().abs() != int(1) {
            return Ok((checks, false));
        }
        let k = rows.min(cols);
        for i in 1..k {
            let (prev, next) = (&s.d[(i - 1, i - 1)], &s.d[(i, i)]);
            let divides = if prev.is_zero() { next.is_zero() } else { (next % prev).is_zero() };
            if !divides {
                return Ok((checks, false));
            }
        }
        checks += 1;
    }
    Ok((checks, true))
}

/// Every pair of abelian groups of order <= 24: the lattice-computed hom
/// carrier must match the closed-form count, and, where the set is small
/// enough to list, the explicit enumeration.
fn hom_agreement_suite() -> SuiteResult {
    let types = isomorphism_types_up_to(24);
    let mut checks = 0;
    for a in &types {
        for b in &types {
            let carrier = HomGroup::new(a, b)?.carrier().clone();
            let engine = carrier.order().expect("hom set of finite groups is finite");
            let Some(formula) = hom_count(a, b) else {
                return Ok((checks, false));
            };
            if engine != formula {
                return Ok((checks, false));
            }
            if formula <= int(4096) {
                let listed = enumerate_homs(a, b)?;
                if int(listed.len() as i64) != engine {
                    return Ok((checks, false));
                }
            }
            checks += 1;
        }
    }
    Ok((checks, true))
}

/// Ext over cyclic groups against the cokernel-of-multiplication oracle.
fn ext_agreement_suite() -> SuiteResult {
    let mut checks = 0;
    for n in 2..=12i64 {
        for m in 2..=12i64 {
            let zn = FpGroup::cyclic(n);
            let zm = FpGroup::cyclic(m);
            let ext = Ext1Group::new(&zn, &zm)?;
            let (oracle, _) = Morphism::mult_by(&zm, &int(n)).cokernel();
            if ext.carrier().torsion_factors() != oracle.torsion_factors()
                || ext.carrier().rank() != oracle.rank()
            {
                return Ok((checks, false));
            }
            checks += 1;
        }
    }
    Ok((checks, true))
}

/// Subgroup-quotient sequences around every group of order <= 16: the
/// lattice exactness verdict must agree with the element-counting oracle,
/// both on the genuine sequence and on a broken variant.
fn exactness_suite(seed: u64) -> SuiteResult {
    let mut g = Gen::new(seed ^ 0xe84c);
    let mut checks = 0;
    for m in isomorphism_types_up_to(16) {
        for _ in 0..2 {
            let k = g.usize_in(0, 2);
            let elems: Vec<_> = (0..k).map(|_| g.element(&m, 8)).collect();
            let (_, incl) = crate::fpab::subgroup_generated(&m, &elems)?;
            let (q, proj) = crate::fpab::quotient_by(&incl)?;
            if !is_exact(&incl, &proj)? || !exact_by_counting(&incl, &proj)? {
                return Ok((checks, false));
            }
            // Zeroing the projection keeps the composite zero but enlarges
            // the kernel; the two sides must still agree on the verdict.
            let zeroed = Morphism::zero(incl.dst(), &q);
            if is_exact(&incl, &zeroed)? != exact_by_counting(&incl, &zeroed)? {
                return Ok((checks, false));
            }
            checks += 2;
        }
    }
    Ok((checks, true))
}

/// Seeded sweep over the defect machinery: dev/ext agreement on monos into
/// free groups, restriction sequences, window-1 comparison-map surjectivity
/// with witness replay, and a split-pair round trip.
fn defect_suite(seed: u64) -> SuiteResult {
    let mut g = Gen::new(seed ^ 0xdef);
    let mut checks = 0;
    for _ in 0..10 {
        let beta = g.mono_into_free(3);
        let x = g.finite_group(2);
        let value = dev(&beta, &x)?;
        let (ext, iso) = dev_vs_ext(&value)?;
        if value.group().torsion_factors() != ext.carrier().torsion_factors()
            || value.group().rank() != ext.carrier().rank()
            || !iso.is_mono()
            || !iso.is_epi()
        {
            return Ok((checks, false));
        }
        checks += 1;
    }
    for _ in 0..10 {
        let l = g.group(3);
        let p = g.group(3);
        let beta = g.morphism(&l, &p);
        let x = g.group(3);
        let rs = restriction_sequence(&beta, &x)?;
        if !is_exact(&rs.ses.incl, &rs.ses.proj)? {
            return Ok((checks, false));
        }
        checks += 1;
    }
    for _ in 0..5 {
        let l = g.group(2);
        let p = g.group(2);
        let beta = TowerBeta::Plain(g.morphism(&l, &p));
        let t = g.mono_tower(1);
        let report = phi_verdict(&beta, &t, t.window())?;
        if !report.epi.is_yes() || !verify_phi(&beta, &t, &report)? {
            return Ok((checks, false));
        }
        checks += 1;
    }
    {
        let z = FpGroup::free(1);
        let beta = Morphism::mult_by(&z, &int(2));
        let yes = split_pair_check(&beta, &Morphism::identity(&z))?;
        let no = split_pair_check(&beta, &Morphism::zero(&z, &FpGroup::trivial()))?;
        if !yes.is_yes()
            || !no.is_no()
            || !verify_split_pair(&beta, &Morphism::identity(&z), &yes)
            || !verify_split_pair(&beta, &Morphism::zero(&z, &FpGroup::trivial()), &no)
        {
            return Ok((checks, false));
        }
        checks += 2;
    }
    Ok((checks, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_deterministic() {
        let (r0, ok0) = selftest(0);
        assert!(ok0, "selftest failed:\n{}", render(&r0));
        let (r1, _) = selftest(0);
        assert_eq!(render(&r0), render(&r1));
        let (r2, ok2) = selftest(1);
        assert!(ok2);
        // Different seeds still pass; the report may differ only in seed.
        assert_ne!(render(&r0).lines().nth(1), render(&r2).lines().nth(1));
    }

    #[test]
    fn report_rendering_is_line_oriented() {
        let mut r = Report::new();
        push(&mut r, "alpha", 1);
        push(&mut r, "beta", "two");
        assert_eq!(render(&r), "alpha: 1\nbeta: two\n");
    }
}
