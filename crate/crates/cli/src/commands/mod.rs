pub mod analyze;
pub mod csbm;
pub mod dropedge;
pub mod pseudo;
pub mod rewire;
pub mod verify;
