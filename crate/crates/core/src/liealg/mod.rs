//! Lie-algebraic machinery behind both self-dualities: special-linear
//! representations for the exclusion process, raising/lowering operator
//! words for the walker process.

pub mod heisenberg;
pub mod sl;

pub use heisenberg::{
    apply_generator, apply_word, check_eq7, check_prop41, irw_coupling_y, Eq7Report, HeisenGen,
    HeisenWord, Prop41Report, TensorWord, Window,
};
pub use sl::{
    ad_r, casimir_omega, casimir_omega_matrix, casimir_y, check_eq5, dense_identity_offset,
    intertwiner_sep, rho_p_matrix, sigma_p_direct, sigma_p_matrix, sigma_p_via_intertwiner,
    site_weights, spanning_set, weighted_adjoint, Eq5Report, Intertwiner, SlElement,
    TensorElement,
};
