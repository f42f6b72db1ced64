//! Single-lens superresolution: scenes, PSF expansions, moment Fisher
//! information and the corresponding no-go bounds.

pub mod bounds;
pub mod expansion;
pub mod fim;
pub mod fit;
pub mod psf;
pub mod scene;

pub use bounds::{interferometric_two_point_bound, theorem2_bound, two_point_bound, two_point_gaussian_bound};
pub use expansion::{derivative_vectors, gamma_expansion, gamma_moment_derivative, DerivativeVectors, MomentVector, Truncation};
pub use fim::{
    direct_imaging_distribution, direct_imaging_fim_moments, direct_imaging_fim_size, gaussian_measurement_fim_scene,
    reduced_moment_expansion, reduced_scene, scene_derivative_vectors, spade_fim_moments, spade_fim_size, ReducedScene,
    SceneParams,
};
pub use fit::{scaling_exponent_fit, ScalingFit};
pub use psf::{Grid, GridSpec, Psf, PsfSpec};
pub use scene::{scene_coherence, scene_coherence_dsize, SceneSpec, SourceScene};
