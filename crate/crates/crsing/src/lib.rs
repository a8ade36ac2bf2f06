pub mod cli;
pub mod locus;
pub mod matcore;
pub mod normalform;
pub mod series;
pub mod verify;
