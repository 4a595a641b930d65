//! Linear tetrahedral finite elements: steady heat conduction, the
//! compression pre-load and field sampling.

mod deform;
mod elastic;
mod heat;
mod sample;
mod sparse;

pub use deform::deform_mesh;
pub use elastic::{divergence_integral, solve_elastic, solve_elastic_with, ElasticParams, VectorField};
pub(crate) use heat::MM;
pub use heat::{heat_balance, solve_heat, solve_heat_with, HeatBalance, ScalarField, ThermalParams};
pub use sample::{surface_slice, Axis, PointLocator, SliceGrid, SlicePlane};
pub use sparse::{pcg, CsrMatrix, SolveStats, SolverOptions};
