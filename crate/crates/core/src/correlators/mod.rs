//! Integrated, two-bin, two-time and spectral correlators of the emitter and sensor modes.

mod integrated;
mod normalized;
mod spectrum;
mod stack;
mod two_bin;
mod two_time;

pub use integrated::{
    integrated_g2, integrated_g2_in, integrated_gn, integrated_gn_in, integrated_population, max_chain_order,
    validate_t_grid, HigherCorrelators, IntegratedCorrelators,
};
pub use normalized::{
    normalized_g2_zero, normalized_integrated_g2, normalized_integrated_g2_grid, normalized_integrated_g2_in,
    DEGENERATE_POPULATION,
};
pub use spectrum::{sensor_population_spectrum, spectrum, spectrum_with, Normalization, Spectrum, SpectrumOptions};
pub use two_bin::{two_bin_extension, two_bin_on_grid, u_trajectory, TwoBinCorrelators};
pub use two_time::{two_time_g2_grid, two_time_g2_grid_in, two_time_square, SquareGrid, TwoTimeGrid};
