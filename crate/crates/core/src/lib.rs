pub mod cli;
pub mod config;
pub mod io;
pub mod linalg;
pub mod nilpotent;
pub mod privcoord;
pub mod sim;
pub mod symexpr;
pub mod trident;
pub mod vfield;
