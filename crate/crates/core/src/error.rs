use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("unknown element {0:?}")]
    UnknownElement(String),

    #[error("degenerate lattice: |det| = {0:e} A^3")]
    DegenerateLattice(f64),

    #[error("left-handed lattice: det = {0:e} A^3")]
    LeftHandedLattice(f64),

    #[error("invalid crystal: {0}")]
    InvalidCrystal(String),

    #[error("cif: {0}")]
    Cif(String),

    #[error("symmetry-expanded CIF unsupported")]
    SymmetryExpandedCif,

    #[error("supercell would have {requested} sites (cap {cap})")]
    SiteCap { requested: usize, cap: usize },

    #[error("niggli reduction did not converge within {0} steps")]
    NiggliNotConverged(usize),

    #[error("rotation matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("element {element} has no value for property {property}")]
    MissingProperty { element: String, property: String },

    #[error("property table: {0}")]
    PropertyTable(String),

    #[error("neighbour search radius exceeds {max} A (k = {k})")]
    SparseCell { k: usize, max: f64 },

    #[error("AMD vectors have different lengths ({0} vs {1})")]
    KMismatch(usize, usize),

    #[error("symmetry metadata required for d_wyckoff")]
    MissingSymmetry,

    #[error("invalid symmetry record: {0}")]
    InvalidSymmetry(String),

    #[error("matcher input too large ({0} sites in primitive cell)")]
    MatcherInputTooLarge(usize),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("{0}")]
    ChainNotFound(String),

    #[error("distance {0} is not {1}")]
    WrongDistanceKind(String, &'static str),

    #[error("need at least 2 samples for continuous uniqueness (n = {0})")]
    TooFewSamples(usize),

    #[error("empty train")]
    EmptyTrain,

    #[error("no sample carries an e_hull value; cannot screen")]
    NoEhull,

    #[error("invalid screen policy: {0}")]
    InvalidPolicy(String),

    #[error("shuffle audit needs at least 2 seeds (got {0})")]
    TooFewSeeds(usize),

    #[error("pareto: {0}")]
    Pareto(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error("cache hash mismatch: cache built for {expected}, samples hash to {actual}")]
    CacheHashMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
