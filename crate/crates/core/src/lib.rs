//! Motion planning for a point robot in a 2-D workspace: grid roadmap
//! initialization followed by convex feasible set path reshaping.

pub mod beamlet;
pub mod cfs;
pub mod curvature;
pub mod env;
pub mod geom;
pub mod harness;
pub mod qp;
pub mod roadmap;
pub mod rpr;
