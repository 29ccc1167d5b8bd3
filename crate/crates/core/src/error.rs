use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("torus side length must be at least 3, got {0}")]
    DegenerateTorus(u32),
    #[error("coordinate ({x}, {y}) outside a torus of side {side}")]
    PointOutOfRange { x: u32, y: u32, side: u32 },
    #[error("coupling constant must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error("decay exponent must lie in [0, 2), got {0}")]
    InvalidAlpha(f64),
    #[error("graph side {side} exceeds the eager materialization cap {cap}")]
    SizeCapExceeded { side: u32, cap: u32 },
    #[error("vertex {0} has already been processed by this oracle")]
    AlreadyProcessed(u32),
    #[error("exploration requires a fresh neighbor source")]
    SourceNotFresh,
    #[error("step budget {budget} exceeds vertex count {vertices}")]
    BudgetTooLarge { budget: usize, vertices: usize },
    #[error("walk increment {increment} at index {index} is below -1")]
    MalformedWalk { index: usize, increment: i64 },
    #[error("walk must start at z(1) = 0")]
    WalkNotAnchored,
    #[error("grid point s = {s} needs walk index {index}, only {recorded} recorded")]
    OutOfBudget { s: f64, index: usize, recorded: usize },
    #[error("step index {index} outside 1..={steps}")]
    StepOutOfRange { index: usize, steps: usize },
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vector does not sum to one (sum = {0})")]
    NotAProbabilityVector(f64),
    #[error("state {0} lies in the forbidden set")]
    ForbiddenState(u32),
    #[error("every transition from state {0} is forbidden")]
    DeadEnd(u32),
    #[error("empty sample")]
    EmptySample,
    #[error("threshold constant must exceed e, got {0}")]
    ThresholdTooSmall(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
