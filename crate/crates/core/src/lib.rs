pub mod data;
pub mod geometry;
pub mod expansion;
pub mod features;
pub mod classify;
pub mod feedback;
pub mod evaluation;
pub mod pipeline;
