use thiserror::Error;

/// Errors raised by the simulator and its analysis passes.
#[derive(Debug, Error)]
pub enum FsiError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("incompatible Neumann data: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    Compatibility { defect: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("time step failed: relative residual {residual:.3e}")]
    Step { residual: f64 },

    #[error("assembly defect: null-vector residual {residual:.3e}")]
    Assembly { residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("capacity exceeded: matrix order {order} above dense eigensolver cap {cap}; use a coarser grid")]
    Capacity { order: usize, cap: usize },

    #[error("multiplier ledger: {0}")]
    Ledger(String),

    #[error("config line {line}: key `{key}`: {msg}")]
    Parse { line: usize, key: String, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl FsiError {
    /// Validation failures map to exit code 1, numerical failures to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            FsiError::Config(_) | FsiError::Parse { .. } | FsiError::Dimension(_) | FsiError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FsiError>;
