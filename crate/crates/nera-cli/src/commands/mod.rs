pub mod bifurcate;
pub mod calibrate;
pub mod equilibria;
pub mod lyapunov;
pub mod reproduce;
pub mod simulate;
pub mod stability;
