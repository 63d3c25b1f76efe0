//! Built-in experiment defaults, one row per problem.

use uqc::Problem;

pub struct ProblemDefaults {
    pub problem: Problem,
    pub layers: usize,
    /// Points in the freshly drawn inference set.
    pub infer_n: usize,
}

// Six layers for the binary problems and ten for the three-class one.
// Inference sets: 200 points for each binary problem, 150 for two-circles.
pub const TABLE: [ProblemDefaults; 3] = [
    ProblemDefaults {
        problem: Problem::Circle,
        layers: 6,
        infer_n: 200,
    },
    ProblemDefaults {
        problem: Problem::Sine,
        layers: 6,
        infer_n: 200,
    },
    ProblemDefaults {
        problem: Problem::TwoCircles,
        layers: 10,
        infer_n: 150,
    },
];

pub const TRAIN_N: usize = 1000;
pub const TEST_N: usize = 2000;
pub const SHOTS: u32 = 100;
pub const EPOCHS: usize = 20;
pub const BATCH_SIZE: usize = 100;
pub const RESTARTS: usize = 3;
/// Sampler seeds averaged when reporting noisy accuracy.
pub const NOISE_SEEDS: usize = 10;

pub const DATA_SEED: u64 = 7;
pub const INIT_SEED: u64 = 0;
pub const SHUFFLE_SEED: u64 = 0;
pub const SAMPLER_SEED: u64 = 0;

pub fn for_problem(problem: Problem) -> &'static ProblemDefaults {
    TABLE
        .iter()
        .find(|d| d.problem == problem)
        .expect("every problem has a row")
}
