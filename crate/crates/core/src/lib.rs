pub mod align;
pub mod classify;
pub mod clients;
pub mod fixtures;
pub mod gateway;
pub mod reupred;
pub mod service;
pub mod structmodel;
