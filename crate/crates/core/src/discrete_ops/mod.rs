//! Discretized tensor calculus on two-dimensional chart atlases.

pub mod assembly;
pub mod atlas;
pub mod container;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod ops;
pub mod quadrature;
pub mod random;

pub use assembly::{AssembledOperator, Space, Symmetry};
pub use atlas::{AtlasDescriptor, AtlasKind, ChartAtlas, FieldKind};
pub use field::{Field, MetricField};
pub use geometry::{CurvaturePack, Geometry};
pub use linalg::{eigensolve, near_kernel, GapCertificate, KernelOptions, MassFactor, NearKernel};
pub use ops::Twist;
pub use quadrature::{inner, integrate, norm};
pub use random::random_field;
