pub mod world;
pub mod fire;
pub mod ants;
pub mod engine;
