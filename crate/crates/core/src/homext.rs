//! Hom and Ext groups of finitely presented abelian groups, presented as
//! finitely presented groups themselves, with encode/decode between abstract
//! carrier elements and concrete morphisms or extension data.
//!
//! Conventions: a morphism `A -> B` is an `nB x nA` matrix `M` with
//! `M·R_A = R_B·Q` for some integer `Q`; matrices are vectorised column-major
//! so that `vec(A X B) = kron(Bᵀ, A)·vec(X)`.

use crate::error::{Error, Result};
use crate::fpab::{preimage_lattice, Element, FpGroup, GroupRef, Morphism, Ses};
use crate::zlinalg::{kron, Int, IntMatrix, MatrixSystem, Term};

/// `Hom(src, dst)` as a finitely presented group.
///
/// The carrier generators are a lattice basis of all well-defined matrices;
/// its relations identify matrices that differ by one sending every
/// generator into the target relation lattice.
#[derive(Clone)]
pub struct HomGroup {
    src: GroupRef,
    dst: GroupRef,
    carrier: GroupRef,
    basis: IntMatrix,
}

impl HomGroup {
    pub fn new(src: &GroupRef, dst: &GroupRef) -> Result<HomGroup> {
        let (na, nb) = (src.ngens(), dst.ngens());
        let (ra, rb) = (src.rels(), dst.rels());
        // M·R_A = R_B·Q, vectorised: kron(R_Aᵀ, I)·vec(M) - kron(I, R_B)·vec(Q) = 0.
        let lhs = kron(&ra.transpose(), &IntMatrix::identity(nb));
        let rhs = kron(&IntMatrix::identity(ra.cols()), rb).neg();
        let joint = IntMatrix::hstack(&[&lhs, &rhs]);
        let basis = joint.kernel_basis().row_range(0, na * nb).column_basis();
        // A combination is the zero morphism iff its matrix has every column
        // in the target relation lattice.
        let zero_lattice = kron(&IntMatrix::identity(na), rb);
        let rels = preimage_lattice(&basis, &zero_lattice);
        let carrier = FpGroup::new(basis.cols(), rels)?;
        Ok(HomGroup { src: src.clone(), dst: dst.clone(), carrier, basis })
    }

    pub fn src(&self) -> &GroupRef {
        &self.src
    }

    pub fn dst(&self) -> &GroupRef {
        &self.dst
    }

    pub fn carrier(&self) -> &GroupRef {
        &self.carrier
    }

    /// Carrier element representing a concrete morphism.
    pub fn encode(&self, f: &Morphism) -> Result<Element> {
        if f.src() != &self.src || f.dst() != &self.dst {
            return Err(Error::Shape("morphism endpoints do not match the hom group".into()));
        }
        let target = IntMatrix::from_col(&f.mat().vec_col());
        let coords = self
            .basis
            .solve_matrix(&target)
            .ok_or_else(|| Error::PreconditionFailed("matrix escapes the hom lattice".into()))?;
        Element::new(&self.carrier, coords.col_vec(0))
    }

    /// Concrete morphism represented by a carrier element.
    pub fn decode(&self, e: &Element) -> Result<Morphism> {
        if e.group() != &self.carrier {
            return Err(Error::Shape("element is not in the hom carrier".into()));
        }
        let v = self.basis.mul(&e.coords_col());
        let mat = IntMatrix::from_vec_col(self.dst.ngens(), self.src.ngens(), &v.vec_col());
        Morphism::new(&self.src, &self.dst, mat)
    }

    /// Carrier map induced by a recipe applied to each generator.
    fn induced_by(
        &self,
        to: &HomGroup,
        mut recipe: impl FnMut(&Morphism) -> Result<Morphism>,
    ) -> Result<Morphism> {
        let n = self.carrier.ngens();
        let mut mat = IntMatrix::zeros(to.carrier.ngens(), n);
        for i in 0..n {
            let f = self.decode(&Element::generator(&self.carrier, i))?;
            let img = to.encode(&recipe(&f)?)?;
            mat.set_col(i, img.coords());
        }
        Morphism::new(&self.carrier, &to.carrier, mat)
    }
}

/// `Hom(h, B)`: precomposition by `h : A' -> A` as a map of carriers
/// `Hom(A, B) -> Hom(A', B)`.
pub fn induced_pre(h: &Morphism, from: &HomGroup, to: &HomGroup) -> Result<Morphism> {
    if h.dst() != from.src() || h.src() != to.src() || from.dst() != to.dst() {
        return Err(Error::Shape("precomposition endpoints do not line up".into()));
    }
    from.induced_by(to, |f| h.then(f))
}

/// `Hom(A, h)`: postcomposition by `h : B -> B'` as a map of carriers
/// `Hom(A, B) -> Hom(A, B')`.
pub fn induced_post(h: &Morphism, from: &HomGroup, to: &HomGroup) -> Result<Morphism> {
    if h.src() != from.dst() || h.dst() != to.dst() || from.src() != to.src() {
        return Err(Error::Shape("postcomposition endpoints do not line up".into()));
    }
    from.induced_by(to, |f| f.then(h))
}

/// `Ext¹(src, dst)` as a finitely presented group, computed from the free
/// presentation `0 -> Z^s -> Z^nA -> src -> 0` carved out by a column basis
/// of the relation matrix.
#[derive(Clone)]
pub struct Ext1Group {
    src: GroupRef,
    dst: GroupRef,
    carrier: GroupRef,
    /// Independent columns spanning the relation lattice of `src`.
    bk: IntMatrix,
}

impl Ext1Group {
    pub fn new(src: &GroupRef, dst: &GroupRef) -> Result<Ext1Group> {
        let bk = src.rels().column_basis();
        let s = bk.cols();
        let nb = dst.ngens();
        // Classes are homs K -> dst, i.e. nB x s matrices with columns read
        // modulo the target relations, modulo restrictions of homs from the
        // covering free group.
        let restrictions = kron(&bk.transpose(), &IntMatrix::identity(nb));
        let col_rels = kron(&IntMatrix::identity(s), dst.rels());
        let carrier = FpGroup::new(nb * s, IntMatrix::hstack(&[&restrictions, &col_rels]))?;
        Ok(Ext1Group { src: src.clone(), dst: dst.clone(), carrier, bk })
    }

    pub fn src(&self) -> &GroupRef {
        &self.src
    }

    pub fn dst(&self) -> &GroupRef {
        &self.dst
    }

    pub fn carrier(&self) -> &GroupRef {
        &self.carrier
    }

    /// Kernel inclusion of the free presentation of `src`.
    pub fn kernel_basis_matrix(&self) -> &IntMatrix {
        &self.bk
    }

    /// Class of an `nB x s` cocycle matrix.
    pub fn class_of_matrix(&self, y: &IntMatrix) -> Result<Element> {
        if y.rows() != self.dst.ngens() || y.cols() != self.bk.cols() {
            return Err(Error::Shape(format!(
                "cocycle is {}x{}, expected {}x{}",
                y.rows(),
                y.cols(),
                self.dst.ngens(),
                self.bk.cols()
            )));
        }
        Element::new(&self.carrier, y.vec_col())
    }

    /// Canonical cocycle matrix of a class.
    pub fn matrix_of_class(&self, e: &Element) -> Result<IntMatrix> {
        if e.group() != &self.carrier {
            return Err(Error::Shape("element is not in the ext carrier".into()));
        }
        Ok(IntMatrix::from_vec_col(self.dst.ngens(), self.bk.cols(), e.coords()))
    }

    /// Middle term of the extension classified by `e`, with its two maps.
    ///
    /// The middle group glues the free cover of `src` to `dst` along the
    /// cocycle: generators of both, relators `(bk_j, -y_j)` plus the target
    /// relators.
    pub fn extension_of_class(&self, e: &Element) -> Result<Ses> {
        let y = self.matrix_of_class(e)?;
        let (na, nb) = (self.src.ngens(), self.dst.ngens());
        let glue = IntMatrix::vstack(&[&self.bk, &y.neg()]);
        let lifted = IntMatrix::vstack(&[&IntMatrix::zeros(na, self.dst.rels().cols()), self.dst.rels()]);
        let mid = FpGroup::new(na + nb, IntMatrix::hstack(&[&glue, &lifted]))?;
        let incl = Morphism::new(
            &self.dst,
            &mid,
            IntMatrix::vstack(&[&IntMatrix::zeros(na, nb), &IntMatrix::identity(nb)]),
        )?;
        let proj = Morphism::new(
            &mid,
            &self.src,
            IntMatrix::hstack(&[&IntMatrix::identity(na), &IntMatrix::zeros(na, nb)]),
        )?;
        Ses::new(incl, proj)
    }

    /// Class of a short exact sequence `0 -> dst -> E -> src -> 0`.
    pub fn class_of_extension(&self, ses: &Ses) -> Result<Element> {
        if ses.left() != &self.dst || ses.right() != &self.src {
            return Err(Error::Shape("sequence endpoints do not match the ext group".into()));
        }
        let lam = ses
            .proj
            .generator_section()
            .ok_or_else(|| Error::NonExact("projection admits no generator lift".into()))?;
        // λ·bk lands in the kernel of the projection, hence in the image of
        // the inclusion; pull it back.
        let target = lam.mul(&self.bk);
        let s = self.bk.cols();
        let re = ses.mid().rels();
        let mut sys = MatrixSystem::new();
        let yb = sys.unknown(self.dst.ngens(), s);
        let w = sys.unknown(re.cols(), s);
        let is = IntMatrix::identity(s);
        sys.equation(
            &[
                Term { block: yb, left: ses.incl.mat(), right: &is },
                Term { block: w, left: re, right: &is },
            ],
            &target,
        );
        let sol = sys
            .solve()
            .ok_or_else(|| Error::NonExact("kernel of the projection escapes the inclusion".into()))?;
        self.class_of_matrix(&sol[0])
    }
}

/// `Ext¹(h, B)`: the map `Ext¹(A, B) -> Ext¹(A', B)` induced by `h : A' -> A`.
pub fn ext_induced_pre(h: &Morphism, from: &Ext1Group, to: &Ext1Group) -> Result<Morphism> {
    if h.dst() != from.src() || h.src() != to.src() || from.dst() != to.dst() {
        return Err(Error::Shape("precomposition endpoints do not line up".into()));
    }
    // Lift h to the free covers; the matrix itself is such a lift, and it
    // restricts to the presentation kernels.
    let h1 = from
        .bk
        .solve_matrix(&h.mat().mul(&to.bk))
        .expect("a well-defined morphism restricts to the relation lattices");
    let mat = kron(&h1.transpose(), &IntMatrix::identity(from.dst().ngens()));
    Morphism::new(from.carrier(), to.carrier(), mat)
}

/// `Ext¹(A, h)`: the map `Ext¹(A, B) -> Ext¹(A, B')` induced by `h : B -> B'`.
pub fn ext_induced_post(h: &Morphism, from: &Ext1Group, to: &Ext1Group) -> Result<Morphism> {
    if h.src() != from.dst() || h.dst() != to.dst() || from.src() != to.src() {
        return Err(Error::Shape("postcomposition endpoints do not line up".into()));
    }
    let s = from.bk.cols();
    let mat = kron(&IntMatrix::identity(s), h.mat());
    Morphism::new(from.carrier(), to.carrier(), mat)
}

/// The connecting map `Hom(A', B) -> Ext¹(A'', B)` of a short exact sequence
/// `0 -> A' -> A -> A'' -> 0`.
pub fn connecting_map(ses: &Ses, hom_left: &HomGroup, ext_right: &Ext1Group) -> Result<Morphism> {
    if hom_left.src() != ses.left() || ext_right.src() != ses.right() || hom_left.dst() != ext_right.dst() {
        return Err(Error::Shape("connecting map endpoints do not line up".into()));
    }
    let lam = ses
        .proj
        .generator_section()
        .ok_or_else(|| Error::NonExact("projection admits no generator lift".into()))?;
    // λ·bk lies over zero, so it pulls back through the inclusion to give,
    // for each presentation-kernel generator, an element of the left group.
    let target = lam.mul(&ext_right.bk);
    let s = ext_right.bk.cols();
    let rmid = ses.mid().rels();
    let mut sys = MatrixSystem::new();
    let g = sys.unknown(ses.left().ngens(), s);
    let w = sys.unknown(rmid.cols(), s);
    let is = IntMatrix::identity(s);
    sys.equation(
        &[Term { block: g, left: ses.incl.mat(), right: &is }, Term { block: w, left: rmid, right: &is }],
        &target,
    );
    let pullback = sys
        .solve()
        .ok_or_else(|| Error::NonExact("kernel of the projection escapes the inclusion".into()))?[0]
        .clone();
    let n = hom_left.carrier().ngens();
    let mut mat = IntMatrix::zeros(ext_right.carrier().ngens(), n);
    for i in 0..n {
        let f = hom_left.decode(&Element::generator(hom_left.carrier(), i))?;
        let cls = ext_right.class_of_matrix(&f.mat().mul(&pullback))?;
        mat.set_col(i, cls.coords());
    }
    Morphism::new(hom_left.carrier(), ext_right.carrier(), mat)
}

/// The six-term sequence of carriers attached to `0 -> A' -> A -> A'' -> 0`
/// and a target `B`:
///
/// `0 -> Hom(A'',B) -> Hom(A,B) -> Hom(A',B) -> Ext(A'',B) -> Ext(A,B) -> Ext(A',B) -> 0`.
pub struct SixTerm {
    pub hom_right: HomGroup,
    pub hom_mid: HomGroup,
    pub hom_left: HomGroup,
    pub ext_right: Ext1Group,
    pub ext_mid: Ext1Group,
    pub ext_left: Ext1Group,
    /// The five maps, in sequence order.
    pub maps: [Morphism; 5],
}

pub fn six_term(ses: &Ses, b: &GroupRef) -> Result<SixTerm> {
    let hom_right = HomGroup::new(ses.right(), b)?;
    let hom_mid = HomGroup::new(ses.mid(), b)?;
    let hom_left = HomGroup::new(ses.left(), b)?;
    let ext_right = Ext1Group::new(ses.right(), b)?;
    let ext_mid = Ext1Group::new(ses.mid(), b)?;
    let ext_left = Ext1Group::new(ses.left(), b)?;
    let maps = [
        induced_pre(&ses.proj, &hom_right, &hom_mid)?,
        induced_pre(&ses.incl, &hom_mid, &hom_left)?,
        connecting_map(ses, &hom_left, &ext_right)?,
        ext_induced_pre(&ses.proj, &ext_right, &ext_mid)?,
        ext_induced_pre(&ses.incl, &ext_mid, &ext_left)?,
    ];
    Ok(SixTerm { hom_right, hom_mid, hom_left, ext_right, ext_mid, ext_left, maps })
}

impl SixTerm {
    /// Exactness everywhere: injective head, surjective tail, exact at the
    /// four interior nodes.
    pub fn is_exact_everywhere(&self) -> Result<bool> {
        if !self.maps[0].is_mono() || !self.maps[4].is_epi() {
            return Ok(false);
        }
        for i in 0..4 {
            if !crate::fpab::is_exact(&self.maps[i], &self.maps[i + 1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Order of a carrier, `None` when infinite; convenience for reports.
pub fn carrier_order(g: &GroupRef) -> Option<Int> {
    g.order()
}
