//! Constrained subspaces of gl(n) = H_1 and H_k, and splittings of them.

use crate::error::{Error, Result};
use crate::linalg::{
    image_basis, intersect_subspaces, kernel_basis, max_abs, pseudo_inverse, Matrix,
};

/// Subspace tolerance relative to the operator size.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// A linear condition cutting out a subspace of the ambient coefficient space.
#[derive(Debug, Clone)]
pub enum Constraint {
    Kernel(Matrix),
    Image(Matrix),
    /// Span of the given columns.
    Span(Matrix),
}

impl Constraint {
    pub fn basis(&self) -> Matrix {
        match self {
            Constraint::Kernel(op) => kernel_basis(op, Some(SUBSPACE_TOL * max_abs(op).max(1.0))),
            Constraint::Image(op) => image_basis(op, Some(SUBSPACE_TOL * max_abs(op).max(1.0))),
            Constraint::Span(cols) => image_basis(cols, None),
        }
    }
}

/// Orthonormal basis of the intersection of all constraint subspaces.
pub fn constrained_subspace(dim: usize, constraints: &[Constraint]) -> Matrix {
    let mut basis = Matrix::identity(dim, dim);
    for c in constraints {
        if basis.ncols() == 0 {
            break;
        }
        basis = intersect_subspaces(&basis, &c.basis(), None);
    }
    basis
}

/// Columns of `a` followed by the columns of `b`.
pub fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    let r = a.nrows().max(b.nrows());
    let mut out = Matrix::zeros(r, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    }
    if b.ncols() > 0 {
        out.view_mut((0, a.ncols()), (b.nrows(), b.ncols()))
            .copy_from(b);
    }
    out
}

/// A constrained subspace written as a direct sum part_a ⊕ part_b.
#[derive(Debug, Clone)]
pub struct SplitSubspaces {
    pub ambient_dim: usize,
    pub whole: Matrix,
    pub part_a: Matrix,
    pub part_b: Matrix,
    pub projector_a: Matrix,
    pub projector_b: Matrix,
}

impl SplitSubspaces {
    /// max(‖P_a + P_b − I‖ on the subspace, ‖P_a² − P_a‖, ‖P_b² − P_b‖).
    pub fn check(&self) -> f64 {
        let sum = (&self.projector_a + &self.projector_b) * &self.whole - &self.whole;
        let ia = &self.projector_a * &self.projector_a - &self.projector_a;
        let ib = &self.projector_b * &self.projector_b - &self.projector_b;
        max_abs(&sum).max(max_abs(&ia)).max(max_abs(&ib))
    }
}

/// Splits V = ∩ common into (V ∩ ∩ a) ⊕ (V ∩ ∩ b).
pub fn build_splitting(
    ambient_dim: usize,
    common: &[Constraint],
    a: &[Constraint],
    b: &[Constraint],
) -> Result<SplitSubspaces> {
    let whole = constrained_subspace(ambient_dim, common);
    let part_a = intersect_all(&whole, a);
    let part_b = intersect_all(&whole, b);
    if part_a.ncols() + part_b.ncols() != whole.ncols() {
        return Err(Error::SplitFailure(format!(
            "dimensions {} + {} do not add up to {}",
            part_a.ncols(),
            part_b.ncols(),
            whole.ncols()
        )));
    }
    let both = hcat(&part_a, &part_b);
    let coords = pseudo_inverse(&both);
    let na = part_a.ncols();
    let mut projector_a = Matrix::zeros(ambient_dim, ambient_dim);
    let mut projector_b = Matrix::zeros(ambient_dim, ambient_dim);
    if na > 0 {
        projector_a = &part_a * coords.rows(0, na);
    }
    if part_b.ncols() > 0 {
        projector_b = &part_b * coords.rows(na, part_b.ncols());
    }
    // Restrict to V so that the projectors vanish on its complement.
    let onto_whole = &whole * whole.transpose();
    let out = SplitSubspaces {
        ambient_dim,
        projector_a: projector_a * &onto_whole,
        projector_b: projector_b * &onto_whole,
        whole,
        part_a,
        part_b,
    };
    let err = out.check();
    if err > 1e-8 {
        return Err(Error::SplitFailure(format!("projector defect {err:e}")));
    }
    Ok(out)
}

fn intersect_all(start: &Matrix, constraints: &[Constraint]) -> Matrix {
    let mut basis = start.clone();
    for c in constraints {
        if basis.ncols() == 0 {
            break;
        }
        basis = intersect_subspaces(&basis, &c.basis(), None);
    }
    basis
}
