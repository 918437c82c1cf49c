use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "ill-conditioned channel Gram matrix: K_D = {users} users on M*N_D = {antennas} antennas \
         (condition number {cond:.3e})"
    )]
    IllConditioned {
        users: usize,
        antennas: usize,
        cond: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Residual after every iteration, for diagnosing oscillation.
        trace: Vec<f64>,
    },

    #[error("linear system `{what}` is singular or inaccurate (relative residual {residual:.3e})")]
    Singular { what: &'static str, residual: f64 },

    #[error(
        "zero-forcing equivalent is outside its regime (min eps = {min_eps:.3e}); \
         use RZF with alpha > 0 or fewer users than transmit antennas"
    )]
    Regime { min_eps: f64 },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("search space of {size} partitions exceeds the limit of {limit}")]
    SearchSpace { size: u128, limit: u128 },

    #[error("{skipped} of {trials} trials were ill-conditioned (more than 1%)")]
    TooManySkipped { skipped: usize, trials: usize },

    #[error("user placement failed after {0} attempts")]
    Placement(usize),

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
