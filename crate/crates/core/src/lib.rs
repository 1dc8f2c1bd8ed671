pub mod density;
pub mod embed;
pub mod interp;
pub mod levy;
pub mod numeric;
pub mod pathsim;
pub mod poisson;
pub mod verify;
pub mod quad;
