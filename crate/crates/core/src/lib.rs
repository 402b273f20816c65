pub mod bench;
pub mod cli;
pub mod conjoining;
pub mod model;
pub mod oracles;
pub mod otr;
pub mod packing;
pub mod smallness;
pub mod solver_bp_det;
pub mod solver_vc;
pub mod solver_vmkp;
pub mod solver_vp;
