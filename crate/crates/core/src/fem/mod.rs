//! Finite element kernel: quadrature, spaces, sparse matrices and assembly.

pub mod assemble;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use assemble::{
    assemble_boundary_load, assemble_cells, assemble_div, assemble_epsilon_form,
    assemble_hdiv_operator, assemble_load, assemble_mass, assemble_stiffness,
    component_boundary_dofs,
};
pub use space::{interpolate, CellGeometry, Family, FunctionSpace, LocalBasis, ValueRank};
pub use sparse::{apply_dirichlet, dot, norm2, SparseMatrix, TripletBuilder};
