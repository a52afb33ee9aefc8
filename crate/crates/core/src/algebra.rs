//! Split semisimple algebras `M_{n_1}(Q) x ... x M_{n_k}(Q)`: right-ideal
//! generators and lifting of idempotents through a subalgebra, optionally
//! modulo a central idempotent.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Subspace};

type Q = BigRational;

/// Product of full matrix algebras over `Q`, with the standard basis of
/// matrix units `E_ij` taken block by block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitSemisimpleAlgebra {
    pub blocks: Vec<usize>,
}

impl SplitSemisimpleAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::invalid("an algebra needs at least one block, each of positive size"));
        }
        Ok(SplitSemisimpleAlgebra { blocks })
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, n| {
                let start = *acc;
                *acc += n * n;
                Some(start)
            })
            .collect()
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            algebra: self.clone(),
            coords: vec![Q::zero(); self.total_dim()],
        }
    }

    pub fn one(&self) -> AlgebraElement {
        let mut x = self.zero();
        for (&n, off) in self.blocks.iter().zip(self.offsets()) {
            for i in 0..n {
                x.coords[off + i * n + i] = Q::one();
            }
        }
        x
    }

    /// The `k`-th matrix unit.
    pub fn basis(&self, k: usize) -> AlgebraElement {
        let mut x = self.zero();
        x.coords[k] = Q::one();
        x
    }

    pub fn basis_elements(&self) -> Vec<AlgebraElement> {
        (0..self.total_dim()).map(|k| self.basis(k)).collect()
    }

    pub fn element(&self, coords: Vec<Q>) -> Result<AlgebraElement> {
        if coords.len() != self.total_dim() {
            return Err(Error::invalid("coordinate vector has the wrong length"));
        }
        Ok(AlgebraElement {
            algebra: self.clone(),
            coords,
        })
    }

    /// Element from one square matrix per block.
    pub fn from_blocks(&self, blocks: &[Matrix<Q>]) -> Result<AlgebraElement> {
        if blocks.len() != self.blocks.len() {
            return Err(Error::invalid("wrong number of blocks"));
        }
        let mut coords = Vec::with_capacity(self.total_dim());
        for (m, &n) in blocks.iter().zip(&self.blocks) {
            if m.rows() != n || m.cols() != n {
                return Err(Error::invalid(format!("block must be {n}x{n}")));
            }
            coords.extend(m.entries().iter().cloned());
        }
        self.element(coords)
    }

    fn mul_coords(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.total_dim()];
        for (&n, off) in self.blocks.iter().zip(self.offsets()) {
            for i in 0..n {
                for k in 0..n {
                    let a = &x[off + i * n + k];
                    if a.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        let b = &y[off + k * n + j];
                        if !b.is_zero() {
                            out[off + i * n + j] += a * b;
                        }
                    }
                }
            }
        }
        out
    }

    /// Span of `x * e_k` over the basis: the right ideal `xA`.
    fn right_ideal_of(&self, x: &[Q]) -> Subspace<Q> {
        let n = self.total_dim();
        Subspace::span(n, (0..n).map(|k| self.mul_coords(x, &self.basis(k).coords)))
    }
}

/// An element of a split semisimple algebra in matrix-unit coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraElement {
    pub algebra: SplitSemisimpleAlgebra,
    pub coords: Vec<Q>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.algebra.blocks.len()))?;
        for block in self.blocks() {
            let rows: Vec<Vec<[String; 2]>> = block
                .to_rows()
                .iter()
                .map(|r| r.iter().map(|q| [q.numer().to_string(), q.denom().to_string()]).collect())
                .collect();
            seq.serialize_element(&rows)?;
        }
        seq.end()
    }
}

impl AlgebraElement {
    pub fn blocks(&self) -> Vec<Matrix<Q>> {
        self.algebra
            .blocks
            .iter()
            .zip(self.algebra.offsets())
            .map(|(&n, off)| Matrix::from_fn(n, n, |i, j| self.coords[off + i * n + j].clone()))
            .collect()
    }

    fn same_parent(&self, other: &AlgebraElement) {
        assert_eq!(self.algebra, other.algebra, "elements of different algebras");
    }

    pub fn mul(&self, other: &AlgebraElement) -> AlgebraElement {
        self.same_parent(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self.algebra.mul_coords(&self.coords, &other.coords),
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        self.same_parent(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        self.same_parent(other);
        AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Q) -> AlgebraElement {
        AlgebraElement {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().map(|a| a * s).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Q::is_zero)
    }

    pub fn is_idempotent(&self) -> bool {
        self.mul(self) == *self
    }

    /// Commutes with every matrix unit.
    pub fn is_central(&self) -> bool {
        self.algebra
            .basis_elements()
            .iter()
            .all(|e| self.mul(e) == e.mul(self))
    }
}

/// An injective unital algebra map given by the images of the source's
/// matrix units.
#[derive(Debug, Clone)]
pub struct AlgebraEmbedding {
    pub source: SplitSemisimpleAlgebra,
    pub target: SplitSemisimpleAlgebra,
    images: Vec<AlgebraElement>,
    /// `target_dim x source_dim` matrix of the map.
    matrix: Matrix<Q>,
}

impl AlgebraEmbedding {
    pub fn new(source: SplitSemisimpleAlgebra, target: SplitSemisimpleAlgebra, images: Vec<AlgebraElement>) -> Result<Self> {
        if images.len() != source.total_dim() {
            return Err(Error::invalid("one image per source basis element is required"));
        }
        if images.iter().any(|x| x.algebra != target) {
            return Err(Error::invalid("images must lie in the target algebra"));
        }
        let matrix = Matrix::from_fn(target.total_dim(), source.total_dim(), |i, j| images[j].coords[i].clone());
        let emb = AlgebraEmbedding {
            source,
            target,
            images,
            matrix,
        };
        if emb.apply(&emb.source.one()) != emb.target.one() {
            return Err(Error::invalid("embedding does not preserve the unit"));
        }
        let basis = emb.source.basis_elements();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                if emb.apply(&a.mul(b)) != emb.images[i].mul(&emb.images[j]) {
                    return Err(Error::invalid(format!("embedding is not multiplicative on basis pair ({i}, {j})")));
                }
            }
        }
        if emb.matrix.rank() != emb.source.total_dim() {
            return Err(Error::invalid("embedding is not injective"));
        }
        Ok(emb)
    }

    /// Block-diagonal embedding: target block `j` receives the source blocks
    /// listed in `layout[j]` (repetition allowed), conjugated by
    /// `conjugators[j]` when given.
    pub fn block_diagonal(
        source: SplitSemisimpleAlgebra,
        layout: &[Vec<usize>],
        conjugators: Option<&[Matrix<Q>]>,
    ) -> Result<Self> {
        let target_blocks: Vec<usize> = layout
            .iter()
            .map(|l| l.iter().map(|&i| source.blocks.get(i).copied().unwrap_or(0)).sum())
            .collect();
        if layout.iter().flatten().any(|&i| i >= source.blocks.len()) {
            return Err(Error::invalid("layout refers to a missing source block"));
        }
        let target = SplitSemisimpleAlgebra::new(target_blocks)?;
        let conj: Vec<(Matrix<Q>, Matrix<Q>)> = match conjugators {
            Some(ps) => {
                if ps.len() != layout.len() {
                    return Err(Error::invalid("one conjugator per target block is required"));
                }
                ps.iter()
                    .map(|p| {
                        let inv = p.inverse().ok_or_else(|| Error::invalid("conjugator is singular"))?;
                        Ok((p.clone(), inv))
                    })
                    .collect::<Result<_>>()?
            }
            None => target.blocks.iter().map(|&n| (Matrix::identity(n), Matrix::identity(n))).collect(),
        };
        let src_offsets = source.offsets();
        let mut images = Vec::with_capacity(source.total_dim());
        for (b, &n) in source.blocks.iter().enumerate() {
            for k in 0..n * n {
                let unit = source.basis(src_offsets[b] + k).blocks()[b].clone();
                let blocks: Vec<Matrix<Q>> = layout
                    .iter()
                    .zip(&target.blocks)
                    .zip(&conj)
                    .map(|((l, &size), (p, pinv))| {
                        let mut m = Matrix::zeros(size, size);
                        let mut at = 0;
                        for &i in l {
                            let s = source.blocks[i];
                            if i == b {
                                for r in 0..s {
                                    for c in 0..s {
                                        m.set(at + r, at + c, unit.get(r, c).clone());
                                    }
                                }
                            }
                            at += s;
                        }
                        &(p * &m) * pinv
                    })
                    .collect();
                images.push(target.from_blocks(&blocks)?);
            }
        }
        AlgebraEmbedding::new(source, target, images)
    }

    pub fn apply(&self, x: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            algebra: self.target.clone(),
            coords: self.matrix.mul_vec(&x.coords),
        }
    }

    /// The image `emb(M)` inside the target.
    pub fn image(&self) -> Subspace<Q> {
        self.matrix.column_space()
    }

    /// The unique preimage of a target vector lying in the image.
    fn preimage(&self, y: &[Q]) -> Option<AlgebraElement> {
        self.matrix.solve(y).map(|coords| AlgebraElement {
            algebra: self.source.clone(),
            coords,
        })
    }
}

/// A faithful unital representation on `Q^space_dim`.
#[derive(Debug, Clone)]
pub struct Representation {
    pub algebra: SplitSemisimpleAlgebra,
    pub space_dim: usize,
    action: Vec<Matrix<Q>>,
}

impl Representation {
    pub fn new(algebra: SplitSemisimpleAlgebra, action: Vec<Matrix<Q>>) -> Result<Self> {
        Representation::build(algebra, action, true)
    }

    /// With `check_products` off, multiplicativity is trusted; used for
    /// representations that are homomorphisms by construction.
    fn build(algebra: SplitSemisimpleAlgebra, action: Vec<Matrix<Q>>, check_products: bool) -> Result<Self> {
        if action.len() != algebra.total_dim() {
            return Err(Error::invalid("one matrix per basis element is required"));
        }
        let space_dim = action.first().map_or(0, Matrix::rows);
        if space_dim == 0 || action.iter().any(|m| m.rows() != space_dim || m.cols() != space_dim) {
            return Err(Error::invalid("action matrices must be square of one common positive size"));
        }
        let rep = Representation {
            algebra,
            space_dim,
            action,
        };
        if rep.act(&rep.algebra.one()) != Matrix::identity(space_dim) {
            return Err(Error::invalid("representation is not unital"));
        }
        let basis = if check_products { rep.algebra.basis_elements() } else { Vec::new() };
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                if rep.act(&a.mul(b)) != &rep.action[i] * &rep.action[j] {
                    return Err(Error::invalid(format!("representation is not multiplicative on ({i}, {j})")));
                }
            }
        }
        let flat = Matrix::from_fn(space_dim * space_dim, rep.algebra.total_dim(), |r, k| {
            rep.action[k].entries()[r].clone()
        });
        if !flat.kernel().is_empty() {
            return Err(Error::invalid("representation is not faithful"));
        }
        Ok(rep)
    }

    /// Each block acting on `multiplicities[b]` copies of its natural
    /// module, conjugated by `conjugator` when given.
    pub fn natural(algebra: SplitSemisimpleAlgebra, multiplicities: &[usize], conjugator: Option<&Matrix<Q>>) -> Result<Self> {
        if multiplicities.len() != algebra.blocks.len() {
            return Err(Error::invalid("one multiplicity per block is required"));
        }
        let dim: usize = algebra.blocks.iter().zip(multiplicities).map(|(n, m)| n * m).sum();
        let (p, pinv) = match conjugator {
            Some(p) => (p.clone(), p.inverse().ok_or_else(|| Error::invalid("conjugator is singular"))?),
            None => (Matrix::identity(dim), Matrix::identity(dim)),
        };
        if p.rows() != dim {
            return Err(Error::invalid("conjugator has the wrong size"));
        }
        let offsets = algebra.offsets();
        let mut action = Vec::with_capacity(algebra.total_dim());
        for (b, &n) in algebra.blocks.iter().enumerate() {
            for k in 0..n * n {
                let unit = algebra.basis(offsets[b] + k).blocks()[b].clone();
                let mut m = Matrix::zeros(dim, dim);
                let mut at = 0;
                for (c, (&s, &mult)) in algebra.blocks.iter().zip(multiplicities).enumerate() {
                    for _ in 0..mult {
                        if c == b {
                            for r in 0..s {
                                for col in 0..s {
                                    m.set(at + r, at + col, unit.get(r, col).clone());
                                }
                            }
                        }
                        at += s;
                    }
                }
                action.push(&(&p * &m) * &pinv);
            }
        }
        Representation::build(algebra, action, false)
    }

    pub fn act(&self, x: &AlgebraElement) -> Matrix<Q> {
        let mut out = Matrix::zeros(self.space_dim, self.space_dim);
        for (c, m) in x.coords.iter().zip(&self.action) {
            if !c.is_zero() {
                out = &out + &m.scale(c);
            }
        }
        out
    }

    /// `x V`.
    pub fn image(&self, x: &AlgebraElement) -> Subspace<Q> {
        self.act(x).column_space()
    }
}

/// Idempotent generator of a right ideal `X` of the subalgebra spanned by
/// `ring`, all inside the coordinates of `algebra`: the canonical solution
/// of `e in X`, `e x_j = x_j`.
fn ideal_generator(algebra: &SplitSemisimpleAlgebra, ring: &Subspace<Q>, x: &Subspace<Q>) -> Result<Vec<Q>> {
    let n = algebra.total_dim();
    for xi in x.basis() {
        for r in ring.basis() {
            if !x.contains(&algebra.mul_coords(xi, r)) {
                return Err(Error::invalid("span is not a right ideal"));
            }
        }
    }
    let basis = x.basis();
    let k = basis.len();
    if k == 0 {
        return Ok(vec![Q::zero(); n]);
    }
    // Unknowns c_i with e = sum c_i x_i; equations sum_i c_i (x_i x_j) = x_j.
    let products: Vec<Vec<Vec<Q>>> = basis
        .iter()
        .map(|xi| basis.iter().map(|xj| algebra.mul_coords(xi, xj)).collect())
        .collect();
    let system = Matrix::from_fn(k * n, k, |row, i| products[i][row / n][row % n].clone());
    let rhs: Vec<Q> = (0..k * n).map(|row| basis[row / n][row % n].clone()).collect();
    let c = system
        .solve(&rhs)
        .ok_or_else(|| Error::invariant("right ideal has no idempotent generator"))?;
    let mut e = vec![Q::zero(); n];
    for (ci, xi) in c.iter().zip(basis) {
        for (ej, xij) in e.iter_mut().zip(xi) {
            *ej += ci * xij;
        }
    }
    if algebra.mul_coords(&e, &e) != e {
        return Err(Error::invariant("ideal generator is not idempotent"));
    }
    let generated = Subspace::span(n, ring.basis().iter().map(|r| algebra.mul_coords(&e, r)));
    if generated != *x {
        return Err(Error::invariant("generator does not generate the ideal"));
    }
    Ok(e)
}

/// Idempotent `e` with `eA` equal to the span of `ideal_basis`.
pub fn right_ideal_generator(algebra: &SplitSemisimpleAlgebra, ideal_basis: &[AlgebraElement]) -> Result<AlgebraElement> {
    if ideal_basis.iter().any(|x| x.algebra != *algebra) {
        return Err(Error::invalid("ideal elements belong to another algebra"));
    }
    let n = algebra.total_dim();
    let x = Subspace::span(n, ideal_basis.iter().map(|e| e.coords.clone()));
    let e = ideal_generator(algebra, &Subspace::full(n), &x)?;
    algebra.element(e)
}

fn check_rep(emb: &AlgebraEmbedding, rep: &Representation) -> Result<()> {
    if rep.algebra != emb.target {
        return Err(Error::invalid("representation must be of the embedding's target"));
    }
    Ok(())
}

/// `uN + piN`, or just `uN` when `pi` is absent.
fn ideal_sum(n_alg: &SplitSemisimpleAlgebra, u: &AlgebraElement, pi: Option<&AlgebraElement>) -> Subspace<Q> {
    let un = n_alg.right_ideal_of(&u.coords);
    match pi {
        Some(p) => un.sum(&n_alg.right_ideal_of(&p.coords)),
        None => un,
    }
}

/// Idempotent `v` of `M` with `wV <= vV <= uV`.
pub fn lift_idempotent(
    emb: &AlgebraEmbedding,
    rep: &Representation,
    u: &AlgebraElement,
    w: &AlgebraElement,
) -> Result<AlgebraElement> {
    check_rep(emb, rep)?;
    if u.algebra != emb.target || w.algebra != emb.source {
        return Err(Error::invalid("u must lie in N and w in M"));
    }
    if !u.is_idempotent() {
        return Err(Error::invalid("u is not idempotent"));
    }
    let w_img = rep.image(&emb.apply(w));
    let u_img = rep.image(u);
    if !w_img.is_subspace_of(&u_img) {
        return Err(Error::invalid("image of w is not contained in the image of u"));
    }
    let ring = emb.image();
    let x = ideal_sum(&emb.target, u, None).intersection(&ring);
    let m = ideal_generator(&emb.target, &ring, &x)?;
    let v = emb
        .preimage(&m)
        .ok_or_else(|| Error::invariant("ideal generator left the subalgebra"))?;
    let v_img = rep.image(&emb.apply(&v));
    if !v.is_idempotent() || !w_img.is_subspace_of(&v_img) || !v_img.is_subspace_of(&u_img) {
        return Err(Error::invariant("lifted idempotent breaks wV <= vV <= uV"));
    }
    Ok(v)
}

fn check_central_idempotent(pi: &AlgebraElement) -> Result<()> {
    if !pi.is_idempotent() {
        return Err(Error::invalid("pi is not idempotent"));
    }
    if !pi.is_central() {
        return Err(Error::invalid("pi is not central"));
    }
    Ok(())
}

/// Whether `bV + piV <= uV + piV`; cross-checked against direct membership
/// of `b` in `uB + piB`.
pub fn ideal_membership_mod_pi(
    pi: &AlgebraElement,
    u: &AlgebraElement,
    b: &AlgebraElement,
    rep: &Representation,
) -> Result<bool> {
    let algebra = &rep.algebra;
    if [pi, u, b].iter().any(|x| x.algebra != *algebra) {
        return Err(Error::invalid("elements must lie in the represented algebra"));
    }
    check_central_idempotent(pi)?;
    if !u.is_idempotent() {
        return Err(Error::invalid("u is not idempotent"));
    }
    let pi_img = rep.image(pi);
    let by_rep = rep.image(b).sum(&pi_img).is_subspace_of(&rep.image(u).sum(&pi_img));
    let direct = ideal_sum(algebra, u, Some(pi)).contains(&b.coords);
    if by_rep != direct {
        return Err(Error::invariant(
            "representation test and direct membership in uB + piB disagree",
        ));
    }
    Ok(by_rep)
}

/// Idempotent `v` of `M` with `wV + piV <= vV + piV <= uV + piV`.
///
/// The generator `m` of `(uN + piN) cap M[pi]` is pulled back to `v0` in
/// `M` modulo `pi`; the part of `M` killed modulo `pi` is a two-sided ideal
/// with unit `f`, and `v = (1 - f) v0 + f`.
pub fn lift_idempotent_central(
    emb: &AlgebraEmbedding,
    rep: &Representation,
    pi: &AlgebraElement,
    u: &AlgebraElement,
    w: &AlgebraElement,
) -> Result<AlgebraElement> {
    check_rep(emb, rep)?;
    let (m_alg, n_alg) = (&emb.source, &emb.target);
    if pi.algebra != *n_alg || u.algebra != *n_alg || w.algebra != *m_alg {
        return Err(Error::invalid("pi and u must lie in N and w in M"));
    }
    check_central_idempotent(pi)?;
    if !u.is_idempotent() {
        return Err(Error::invalid("u is not idempotent"));
    }
    if !w.is_idempotent() {
        return Err(Error::invalid("w is not idempotent"));
    }
    let pi_img = rep.image(pi);
    let w_chain = rep.image(&emb.apply(w)).sum(&pi_img);
    let u_chain = rep.image(u).sum(&pi_img);
    if !w_chain.is_subspace_of(&u_chain) {
        return Err(Error::invalid("wV + piV is not contained in uV + piV"));
    }
    let n = n_alg.total_dim();
    let m_image = emb.image();
    let ring = Subspace::span(
        n,
        m_image
            .basis()
            .iter()
            .flat_map(|x| [x.clone(), n_alg.mul_coords(&pi.coords, x)]),
    );
    let x_pi = ideal_sum(n_alg, u, Some(pi)).intersection(&ring);
    let m = ideal_generator(n_alg, &ring, &x_pi)?;

    // Reduction modulo pi: x -> (1 - pi) emb(x).
    let co_pi = n_alg.one().sub(pi);
    let reduce = Matrix::from_fn(n, m_alg.total_dim(), |i, j| {
        n_alg.mul_coords(&co_pi.coords, &emb.images[j].coords)[i].clone()
    });
    let target = n_alg.mul_coords(&co_pi.coords, &m);
    let v0 = m_alg.element(
        reduce
            .solve(&target)
            .ok_or_else(|| Error::invariant("generator has no preimage modulo pi"))?,
    )?;
    let kernel: Vec<Vec<Q>> = reduce.kernel();
    let f = two_sided_unit(m_alg, &kernel)?;
    let one_minus_f = m_alg.one().sub(&f);
    let v = one_minus_f.mul(&v0).add(&f);

    let v_chain = rep.image(&emb.apply(&v)).sum(&pi_img);
    if !v.is_idempotent() || !w_chain.is_subspace_of(&v_chain) || !v_chain.is_subspace_of(&u_chain) {
        return Err(Error::invariant("lifted idempotent breaks wV + piV <= vV + piV <= uV + piV"));
    }
    let uv = u.mul(&emb.apply(&v)).sub(&emb.apply(&v));
    if !co_pi.mul(&uv).is_zero() {
        return Err(Error::invariant("u v differs from v modulo pi"));
    }
    let split = n_alg.right_ideal_of(&pi.coords).dim() + n_alg.right_ideal_of(&co_pi.coords).dim();
    if split != n {
        return Err(Error::invariant("N is not the direct sum of piN and (1 - pi)N"));
    }
    Ok(v)
}

/// Unit `f` of a two-sided ideal `K` spanned by `kernel`: `f k = k = k f`.
fn two_sided_unit(algebra: &SplitSemisimpleAlgebra, kernel: &[Vec<Q>]) -> Result<AlgebraElement> {
    let n = algebra.total_dim();
    let k = kernel.len();
    if k == 0 {
        return Ok(algebra.zero());
    }
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut rhs: Vec<Q> = Vec::new();
    for kj in kernel {
        let left: Vec<Vec<Q>> = kernel.iter().map(|ki| algebra.mul_coords(ki, kj)).collect();
        let right: Vec<Vec<Q>> = kernel.iter().map(|ki| algebra.mul_coords(kj, ki)).collect();
        for side in [left, right] {
            for r in 0..n {
                rows.push(side.iter().map(|p| p[r].clone()).collect());
                rhs.push(kj[r].clone());
            }
        }
    }
    let c = Matrix::from_rows(rows)
        .solve(&rhs)
        .ok_or_else(|| Error::invariant("ideal killed modulo pi has no unit"))?;
    let mut f = vec![Q::zero(); n];
    for (ci, ki) in c.iter().zip(kernel) {
        for (fj, kij) in f.iter_mut().zip(ki) {
            *fj += ci * kij;
        }
    }
    let f = algebra.element(f)?;
    if !f.is_idempotent() || !f.is_central() {
        return Err(Error::invariant("unit of the ideal is not a central idempotent"));
    }
    Ok(f)
}

/// Random instances used by the acceptance checks and property tests.
pub mod random {
    use super::*;

    fn q(v: i64) -> Q {
        Q::from_integer(v.into())
    }

    /// Random invertible integer matrix with entries in `[-3, 3]`.
    pub fn invertible<R: Rng>(rng: &mut R, n: usize) -> Matrix<Q> {
        loop {
            let m = Matrix::from_fn(n, n, |_, _| q(rng.gen_range(-3..=3)));
            if m.rank() == n {
                return m;
            }
        }
    }

    /// Product of a few elementary integer matrices; determinant `1`, so
    /// the inverse stays integral.
    pub fn unimodular<R: Rng>(rng: &mut R, n: usize) -> Matrix<Q> {
        let mut m = Matrix::identity(n);
        if n < 2 {
            return m;
        }
        for _ in 0..n + 1 {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let mut e: Matrix<Q> = Matrix::identity(n);
            e.set(i, j, q(rng.gen_range(-2..=2)));
            m = &m * &e;
        }
        m
    }

    pub fn element<R: Rng>(rng: &mut R, algebra: &SplitSemisimpleAlgebra) -> AlgebraElement {
        let coords = (0..algebra.total_dim()).map(|_| q(rng.gen_range(-3..=3))).collect();
        AlgebraElement {
            algebra: algebra.clone(),
            coords,
        }
    }

    /// `P diag(1, .., 1, 0, .., 0) P^-1` in each block, random ranks.
    pub fn idempotent<R: Rng>(rng: &mut R, algebra: &SplitSemisimpleAlgebra) -> AlgebraElement {
        let blocks: Vec<Matrix<Q>> = algebra
            .blocks
            .iter()
            .map(|&n| {
                let rank = rng.gen_range(0..=n);
                let p = invertible(rng, n);
                let pinv = p.inverse().expect("invertible");
                let d = Matrix::from_fn(n, n, |i, j| if i == j && i < rank { q(1) } else { q(0) });
                &(&p * &d) * &pinv
            })
            .collect();
        algebra.from_blocks(&blocks).expect("block shapes match")
    }

    /// Random element of the subspace spanned by `basis`.
    pub fn combination<R: Rng>(rng: &mut R, algebra: &SplitSemisimpleAlgebra, basis: &[Vec<Q>]) -> AlgebraElement {
        let mut x = algebra.zero();
        for b in basis {
            let c = q(rng.gen_range(-3..=3));
            for (xi, bi) in x.coords.iter_mut().zip(b) {
                *xi += &c * bi;
            }
        }
        x
    }

    /// `M`, `N`, a conjugated block-diagonal embedding `M -> N` and a
    /// conjugated natural representation of `N`; all blocks of size at
    /// most 3.
    pub fn setup<R: Rng>(rng: &mut R) -> (AlgebraEmbedding, Representation) {
        loop {
            let m_blocks: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=2)).collect();
            let mut layout: Vec<Vec<usize>> = Vec::new();
            // Every source block appears at least once.
            for i in 0..m_blocks.len() {
                layout.push(vec![i]);
            }
            if rng.gen_bool(0.5) && layout.len() > 1 {
                let tail = layout.pop().expect("non-empty");
                layout[0].extend(tail);
            }
            for l in layout.iter_mut() {
                while rng.gen_bool(0.5) {
                    let i = rng.gen_range(0..m_blocks.len());
                    if l.iter().map(|&j| m_blocks[j]).sum::<usize>() + m_blocks[i] <= 3 {
                        l.push(i);
                    } else {
                        break;
                    }
                }
            }
            if layout.iter().any(|l| l.iter().map(|&j| m_blocks[j]).sum::<usize>() > 3) {
                continue;
            }
            let source = SplitSemisimpleAlgebra::new(m_blocks).expect("positive blocks");
            let sizes: Vec<usize> = layout.iter().map(|l| l.iter().map(|&j| source.blocks[j]).sum()).collect();
            let conj: Vec<Matrix<Q>> = sizes.iter().map(|&s| invertible(rng, s)).collect();
            let emb = AlgebraEmbedding::block_diagonal(source, &layout, Some(&conj)).expect("valid layout");
            let mults: Vec<usize> = emb.target.blocks.iter().map(|_| rng.gen_range(1..=2)).collect();
            let dim: usize = emb.target.blocks.iter().zip(&mults).map(|(n, m)| n * m).sum();
            let p = unimodular(rng, dim);
            let rep = Representation::natural(emb.target.clone(), &mults, Some(&p)).expect("faithful");
            return (emb, rep);
        }
    }

    /// `(u, w)` for the plain lift: `u` idempotent in `N`, `w` a random
    /// element of `uN cap M`.
    pub fn plain_instance<R: Rng>(rng: &mut R, emb: &AlgebraEmbedding) -> (AlgebraElement, AlgebraElement) {
        let u = match rng.gen_range(0..4) {
            0 => emb.target.one(),
            1 => emb.apply(&idempotent(rng, &emb.source)),
            _ => idempotent(rng, &emb.target),
        };
        let x = ideal_sum(&emb.target, &u, None).intersection(&emb.image());
        let pulled: Vec<Vec<Q>> = x
            .basis()
            .iter()
            .map(|b| emb.preimage(b).expect("inside the image").coords)
            .collect();
        let w = combination(rng, &emb.source, &pulled);
        (u, w)
    }

    /// Sum of identity blocks over a random subset of the blocks.
    pub fn central_idempotent<R: Rng>(rng: &mut R, algebra: &SplitSemisimpleAlgebra) -> AlgebraElement {
        let blocks: Vec<Matrix<Q>> = algebra
            .blocks
            .iter()
            .map(|&n| if rng.gen_bool(0.5) { Matrix::identity(n) } else { Matrix::zeros(n, n) })
            .collect();
        algebra.from_blocks(&blocks).expect("block shapes match")
    }

    /// `(pi, u, w)` for the central lift: `w` generates `e y M`, where `e`
    /// generates `(uN + piN) cap M` and `y` is random.
    pub fn central_instance<R: Rng>(rng: &mut R, emb: &AlgebraEmbedding) -> (AlgebraElement, AlgebraElement, AlgebraElement) {
        let pi = central_idempotent(rng, &emb.target);
        let u = idempotent(rng, &emb.target);
        let x = ideal_sum(&emb.target, &u, Some(&pi)).intersection(&emb.image());
        let pulled: Vec<Vec<Q>> = x
            .basis()
            .iter()
            .map(|b| emb.preimage(b).expect("inside the image").coords)
            .collect();
        let m = &emb.source;
        let ideal: Vec<AlgebraElement> = pulled.iter().map(|c| m.element(c.clone()).expect("length")).collect();
        let e = right_ideal_generator(m, &ideal).expect("genuine right ideal");
        let ey = e.mul(&element(rng, m));
        let eym: Vec<AlgebraElement> = m.basis_elements().iter().map(|b| ey.mul(b)).collect();
        let w = right_ideal_generator(m, &eym).expect("genuine right ideal");
        (pi, u, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(v: i64) -> Q {
        Q::from_integer(v.into())
    }

    fn mat(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect())
    }

    fn m2() -> SplitSemisimpleAlgebra {
        SplitSemisimpleAlgebra::new(vec![2]).unwrap()
    }

    fn unit(alg: &SplitSemisimpleAlgebra, rows: &[&[&[i64]]]) -> AlgebraElement {
        alg.from_blocks(&rows.iter().map(|b| mat(b)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn generator_examples() {
        let a = m2();
        assert!(right_ideal_generator(&a, &[]).unwrap().is_zero());
        assert_eq!(right_ideal_generator(&a, &a.basis_elements()).unwrap(), a.one());
        let row = [a.basis(0), a.basis(1)];
        assert_eq!(right_ideal_generator(&a, &row).unwrap(), a.basis(0));
        // The first column is a left ideal, not a right one.
        assert!(right_ideal_generator(&a, &[a.basis(0), a.basis(2)]).is_err());
    }

    #[test]
    fn lift_examples() {
        let n = m2();
        let rep = Representation::natural(n.clone(), &[1], None).unwrap();
        let scalars = SplitSemisimpleAlgebra::new(vec![1]).unwrap();
        let emb = AlgebraEmbedding::block_diagonal(scalars.clone(), &[vec![0, 0]], None).unwrap();
        let e11 = unit(&n, &[&[&[1, 0], &[0, 0]]]);
        assert!(lift_idempotent(&emb, &rep, &e11, &scalars.zero()).unwrap().is_zero());
        let w = scalars.one().scale(&q(5));
        assert_eq!(lift_idempotent(&emb, &rep, &n.one(), &w).unwrap(), scalars.one());

        let diag = SplitSemisimpleAlgebra::new(vec![1, 1]).unwrap();
        let emb = AlgebraEmbedding::block_diagonal(diag.clone(), &[vec![0, 1]], None).unwrap();
        let w = diag.basis(0);
        assert_eq!(lift_idempotent(&emb, &rep, &e11, &w).unwrap(), diag.basis(0));
        let e22 = unit(&n, &[&[&[0, 0], &[0, 1]]]);
        assert!(lift_idempotent(&emb, &rep, &e22, &w).is_err());
    }

    #[test]
    fn membership_examples() {
        let b = SplitSemisimpleAlgebra::new(vec![2, 2]).unwrap();
        let rep = Representation::natural(b.clone(), &[1, 1], None).unwrap();
        let pi = unit(&b, &[&[&[1, 0], &[0, 1]], &[&[0, 0], &[0, 0]]]);
        let u = unit(&b, &[&[&[0, 0], &[0, 0]], &[&[1, 0], &[0, 0]]]);
        let x = unit(&b, &[&[&[0, 0], &[0, 0]], &[&[0, 0], &[0, 1]]]);
        assert!(ideal_membership_mod_pi(&pi, &u, &pi, &rep).unwrap());
        assert!(ideal_membership_mod_pi(&pi, &u, &u, &rep).unwrap());
        assert!(!ideal_membership_mod_pi(&pi, &u, &x, &rep).unwrap());
        let not_central = unit(&b, &[&[&[1, 0], &[0, 0]], &[&[0, 0], &[0, 0]]]);
        assert!(ideal_membership_mod_pi(&not_central, &u, &x, &rep).is_err());
    }

    #[test]
    fn central_examples() {
        let n = SplitSemisimpleAlgebra::new(vec![2, 2]).unwrap();
        let rep = Representation::natural(n.clone(), &[1, 1], None).unwrap();
        let scalars = SplitSemisimpleAlgebra::new(vec![1]).unwrap();
        let emb = AlgebraEmbedding::block_diagonal(scalars.clone(), &[vec![0, 0], vec![0, 0]], None).unwrap();
        let pi = unit(&n, &[&[&[1, 0], &[0, 1]], &[&[0, 0], &[0, 0]]]);
        let u = unit(&n, &[&[&[0, 0], &[0, 0]], &[&[1, 0], &[0, 0]]]);
        assert!(lift_idempotent_central(&emb, &rep, &pi, &u, &scalars.zero()).unwrap().is_zero());
        assert_eq!(
            lift_idempotent_central(&emb, &rep, &n.one(), &u, &scalars.one()).unwrap(),
            scalars.one()
        );
    }

    #[test]
    fn central_with_zero_pi_matches_plain_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (emb, rep) = random::setup(&mut rng);
            let u = random::idempotent(&mut rng, &emb.target);
            let x = ideal_sum(&emb.target, &u, None).intersection(&emb.image());
            let ideal: Vec<AlgebraElement> = x
                .basis()
                .iter()
                .map(|b| emb.preimage(b).unwrap())
                .collect();
            let e = right_ideal_generator(&emb.source, &ideal).unwrap();
            let plain = lift_idempotent(&emb, &rep, &u, &e).unwrap();
            let central = lift_idempotent_central(&emb, &rep, &emb.target.zero(), &u, &e).unwrap();
            assert_eq!(plain, central);
        }
    }

    #[test]
    fn embedding_validation() {
        let n = m2();
        let scalars = SplitSemisimpleAlgebra::new(vec![1]).unwrap();
        assert!(AlgebraEmbedding::new(scalars.clone(), n.clone(), vec![n.basis(0)]).is_err());
        assert!(AlgebraEmbedding::new(scalars, n.clone(), vec![n.one()]).is_ok());
        let bad = vec![mat(&[&[1, 0], &[0, 1]]); 4];
        assert!(Representation::new(n, bad).is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lifts_satisfy_chains(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (emb, rep) = random::setup(&mut rng);
            let (u, w) = random::plain_instance(&mut rng, &emb);
            let v = lift_idempotent(&emb, &rep, &u, &w).unwrap();
            prop_assert!(v.is_idempotent());
            prop_assert!(emb.image().contains(&emb.apply(&v).coords));
            let (pi, u, w) = random::central_instance(&mut rng, &emb);
            let v = lift_idempotent_central(&emb, &rep, &pi, &u, &w).unwrap();
            prop_assert!(v.is_idempotent());
            let co_pi = emb.target.one().sub(&pi);
            let ev = emb.apply(&v);
            prop_assert!(co_pi.mul(&u.mul(&ev).sub(&ev)).is_zero());
        }

        #[test]
        fn membership_tests_agree(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (emb, rep) = random::setup(&mut rng);
            let b_alg = &emb.target;
            let pi = random::central_idempotent(&mut rng, b_alg);
            let u = random::idempotent(&mut rng, b_alg);
            let inside = u.mul(&random::element(&mut rng, b_alg)).add(&pi.mul(&random::element(&mut rng, b_alg)));
            prop_assert!(ideal_membership_mod_pi(&pi, &u, &inside, &rep).unwrap());
            let any = random::element(&mut rng, b_alg);
            ideal_membership_mod_pi(&pi, &u, &any, &rep).unwrap();
        }
    }
}
