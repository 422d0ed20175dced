//! Benchmark functions, quasi-random designs, noise injection, error
//! metrics and variance-based sensitivity indices.

mod design;
mod functions;
mod sensitivity;
mod sobol;

pub use design::{
    add_noise, function_range, mse, noise_presets, sample_mixed_design, sample_mixed_design_with, unit_to_sample,
    NoiseSpec,
};
pub use functions::{
    apply_variable_length_pattern, eval_function, l_over_kw, level_value, BenchmarkFunction, FunctionId, LevelTable,
};
pub use sensitivity::{total_effect_indices, total_effects_of, TotalEffect};
pub use sobol::{sobol_points, SobolSampler, MAX_DIMENSION};
