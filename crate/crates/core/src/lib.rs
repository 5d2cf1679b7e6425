//! Exact and asymptotic counting of smooth numbers in arithmetic
//! progressions: sieves and smooth-number enumeration, Dirichlet character
//! groups, saddle-point estimates, truncated contour integrals against a
//! smoothed cutoff, and pretentious-distance detection of the characters
//! that obstruct equidistribution.

pub mod dirichlet;
pub mod distance;
pub mod error;
pub mod mellin;
pub mod primes;
pub mod quad;
pub mod saddle;
pub mod smooth;
pub mod weight;

pub use dirichlet::{build_group, build_group_with_limit, Character, CharacterGroup};
pub use distance::{
    build_problem_set, default_distance_threshold, dist_char_twist, distance,
    flag_problem_characters, flag_problem_characters_with_threshold, min_dist_over_t, subgroup_index,
    Coset, FlaggedCharacter, PrimeFunction, ProblemSet,
};
pub use error::{Error, Result};
pub use mellin::{
    central_half_width, central_segment, contour_psi, contour_psi_auto, contour_segment,
    ContourValue, MellinEvaluator, QuadratureSettings,
};
pub use primes::{build_prime_table, build_prime_table_with_budget, PrimeTable};
pub use saddle::{
    ht_estimate, l_truncated, log_l_principal, log_l_truncated, phi2, solve_alpha, solve_xi,
    SaddleData,
};
pub use smooth::{
    enumerate_smooth, for_each_smooth, is_smooth, psi_character_exact, psi_exact,
    psi_progression_exact, psi_weighted_exact, SmoothCounts,
};
pub use weight::{bump, bump_derivative, bump_norm, ramp, SmoothWeight, WeightSide};

pub use num_complex::Complex64;
