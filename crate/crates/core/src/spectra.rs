//! Band and bound-state analysis: two-excitation Bloch spectra on a
//! cylinder, bound-state classification, lattice Chern numbers, and
//! topological edge-mode preparation.

mod chern;
mod edge;
mod two_body;

pub use chern::{chern_numbers, fukui_hatsugai, harper_bloch, HarperModel};
pub use edge::{
    hofstadter_lattice, prepare_edge_mode, boundary_cycle, edge_transport_scenario,
    EdgeTransport, LatticeSpec,
};
pub use two_body::{
    build_two_body_bloch, classify_k, single_particle_bands, sweep_spectrum, BlochSpectrum,
    BoundKind, BoundStateLabel, CylinderModel, EdgeSide, Interaction, YExtent,
};
