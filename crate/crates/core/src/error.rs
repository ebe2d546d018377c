use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vectors must have dimension at least 1")]
    EmptyVector,

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("plane index {index} out of range for dimension {dim}")]
    PlaneIndexOutOfRange { index: usize, dim: usize },

    #[error("level {level} exceeds the cap of {cap}")]
    LevelTooLarge { level: u32, cap: u32 },

    #[error("vertex {0} does not exist in this graph")]
    InvalidVertex(u32),

    #[error("level-0 graph has no fork points")]
    NoForks,

    #[error("copy level {k} is larger than the graph level {n}")]
    CopyLevelOutOfRange { k: u32, n: u32 },

    #[error("schedule offset M = {0} is too small (need M >= 2)")]
    OffsetTooSmall(f64),

    #[error("angle {0} outside the admissible range [0, pi/2)")]
    AngleOutOfRange(f64),

    #[error("angle schedule must be nonincreasing")]
    ScheduleNotDecreasing,

    #[error("invalid index range {ell}..={m} for a schedule of length {len}")]
    IndexOrder { ell: usize, m: usize, len: usize },

    #[error("schedule has {got} angles but level {needed} needs that many")]
    ScheduleTooShort { needed: u32, got: usize },

    #[error("planar images of the two vertices coincide")]
    CoincidentPlanarImages,

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("source points {0} and {1} coincide")]
    CoincidentSources(usize, usize),

    #[error("image list has {images} entries but the source has {source_len}")]
    MisalignedImages { images: usize, source_len: usize },

    #[error("exact mode would examine {pairs} pairs, above the cap of {cap}")]
    ExactCapExceeded { pairs: u64, cap: u64 },

    #[error("time {time} outside the chain horizon [{start}, {end}]")]
    TimeOutOfHorizon { time: i64, start: i64, end: i64 },

    #[error("empty time horizon")]
    EmptyHorizon,

    #[error("exponent p must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("transition probabilities at state {state} sum to {sum}")]
    BadTransition { state: usize, sum: f64 },

    #[error("operation needs a Laakso walk chain")]
    NotLaaksoChain,

    #[error("zero vector: angle undefined")]
    ZeroVector,

    #[error("degenerate configuration: z0 and z1 coincide")]
    DegenerateFork,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
