pub mod analyze;
pub mod compare;
pub mod ode;
pub mod paradox;
pub mod simulate;
pub mod yule;
