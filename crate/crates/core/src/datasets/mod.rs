//! Dataset generation and loading.

mod diffusion;
mod digits;
mod glass;
mod synthetic;

pub use diffusion::{
    default_hamiltonian, forward_diffuse, gibbs_state, linear_schedule, DiffusionSchedule,
};
pub use digits::{class_prototype, load_digits, Image};
pub use glass::{load_glass, GlassSplit, GLASS_CLASSES, GLASS_TEST_SIZE};
pub use synthetic::{
    circle_label, gen_circle, gen_spiral, gen_spiral_with, spiral_point, write_csv, LabeledPoint,
    SpiralConfig, CIRCLE_RADIUS_SQ,
};
