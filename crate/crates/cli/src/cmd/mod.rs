pub mod eval;
pub mod labelgen;
pub mod maskroi;
pub mod propose;
pub mod rotate;
pub mod visualize;
