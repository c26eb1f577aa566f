//! Discretized operators: the representations of symbols and boundary
//! kernels, boundary projections and dilations, and norm estimation.

pub mod assemble;
pub mod discrete;
pub mod dump;
pub mod norm;

pub use assemble::{
    assemble_kappa, assemble_kappa_within, assemble_pi0, assemble_pi0_boundary, assemble_rho, assemble_rho_within, boundary_projection,
    check_resolution, dilation, pi0_fibre, projection_mask, slab_thickness, FamilyMember,
    OperatorFamily, Pi0Operator, RhoOperator,
};
pub use discrete::{DenseL2, DiscreteOperator, LinearOperator};
pub use dump::{load_matrix, read_matrix, save_matrix, write_matrix};
pub use norm::{
    dense_norm, matrix_norm_with, operator_norm, operator_norm_with, power_iteration,
    singular_values, MethodUsed, NormEstimate, NormMethod, NormOptions,
};

impl DiscreteOperator {
    /// Write the kernel matrix in the binary dump layout.
    pub fn save_dump(&self, path: &std::path::Path) -> crate::Result<()> {
        save_matrix(self.kernel(), path)
    }
}
