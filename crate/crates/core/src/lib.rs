//! Analytic global placement for 3D integrated circuits.
//!
//! The engine models placement density as a 3D electrostatic system: every
//! object is a positive charge, the density cost is the system's potential
//! energy, and the spreading force is the electric field obtained from a
//! spectral solution of Poisson's equation on the placement cuboid. A
//! preconditioned Nesterov optimizer minimizes smoothed wirelength plus the
//! density penalty, and an interleaved 3D/2D flow takes a netlist from an
//! initial quadratic placement all the way to a legal, row-aligned,
//! tier-assigned solution.
//!
//! Modules:
//! - [`model`]: core domain types (cells, nets, region, placement, grids).
//! - [`bookshelf`]: Bookshelf parsing, the 2D-to-3D benchmark transformation,
//!   and extended 4-column placement files.
//! - [`wirelength`]: exact HPWL / vertical-interconnect metrics and the
//!   smooth weighted-average wirelength with analytic gradients.
//! - [`density`]: density splatting, the spectral Poisson solve, field
//!   sampling, potential energy, and density overflow.
//! - [`optim`]: the preconditioned Nesterov solver with penalty and
//!   smoothing schedules.
//! - [`flow`]: the staged placement pipeline (initial placement, 3D/2D
//!   global placement, annealing-based macro legalization, row legalization
//!   and detailed placement).
//! - [`eval`]: the independent solution checker and metric reporter.
//! - [`synth`]: seeded synthetic instance generation for tests and benches.

pub mod bookshelf;
pub mod density;
pub mod eval;
pub mod flow;
pub mod model;
pub mod optim;
pub mod synth;
pub mod wirelength;

mod error;

pub use error::{Error, Result};
pub use model::{
    BinGrid2, BinGrid3, Cell, CellId, CellKind, DomainScale, Instance, Net, NetId, Netlist, Pin,
    Placement, Region3D, RowGrid,
};
