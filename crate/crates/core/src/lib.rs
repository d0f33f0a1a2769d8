pub mod audit;
pub mod catalog;
pub mod contact;
pub mod evalkit;
pub mod geom2d;
pub mod geom3d;
pub mod io;
pub mod pag;
pub mod solver;
pub mod synth;
