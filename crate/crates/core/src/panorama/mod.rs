//! Panoramic hyperlapse: build a panorama around the central frame of each
//! window, pick a smooth subset of them, align the picks rigidly and choose a
//! stable crop.

pub mod align;
pub mod candidate;
pub mod central;
pub mod crop;
pub mod geometry;
pub mod plan;
pub mod raster;
pub mod sampling;

pub use align::{align_rigid, fit_rigid, Alignment, RigidTransform};
pub use candidate::{build_candidate, candidate_window, Member, PanoramaCandidate};
pub use central::{displacement_tracks, select_central_frames, DisplacementTrack};
pub use crop::{crop_energy, fixed_point_residual, largest_inscribed_scale, path_length, smooth_crop_centers, solve_crop_path, CropPath};
pub use geometry::{chain_homography, Quad};
pub use plan::{plan_panoramas, PanoramaConfig, PanoramaPlan, PlanFile};
pub use raster::CoverageMask;
pub use sampling::{solve_panorama_sampling, FovSign, PanoramaSamplingOptions, PanoramaSelection};
