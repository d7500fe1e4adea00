//! Sampling primitives: sphere and beta draws, radial and scale laws,
//! elliptical vectors and spherical process paths.

mod elliptical;
mod kernel;
mod radial;
mod scale;
mod sphere;

pub use elliptical::{sample_elliptical, EllipticalSampler, EllipticalSpec};
pub use kernel::{
    sample_spherical_process, variogram_to_covariance, GaussianKernel, GridSampler, ScaleMode,
    ScalePathSampler, VarianceFn, VariogramKernel,
};
pub use radial::{kh_law, marginal_radial, MdaClass, RadialLaw, TabulatedLaw};
pub use scale::{CustomScale, ScaleLaw};
pub use sphere::{fill_standard_normal, sample_beta, sample_unit_sphere, sample_unit_sphere_into};
