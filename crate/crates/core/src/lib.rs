pub mod classify;
pub mod datagen;
pub mod forrelation;
pub mod qstate;
