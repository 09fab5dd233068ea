use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("instrument is not complete: max deviation of sum_k M_k^dag M_k from identity is {deviation:e}")]
    Completeness { deviation: f64 },

    #[error("estimation rule kind mismatch: operation requires {expected}")]
    RuleKind { expected: &'static str },

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid seal protocol: {0}")]
    Protocol(String),

    #[error("encoding {index} of symbol {symbol} is entangled across the two systems (second Schmidt coefficient {schmidt:e})")]
    NotProduct {
        symbol: usize,
        index: usize,
        schmidt: f64,
    },

    #[error("bound out of scope: {0}")]
    Scope(String),

    #[error("family {family} failed at theta = {theta:?}: {source}")]
    Family {
        family: String,
        theta: Vec<f64>,
        source: Box<Error>,
    },

    #[error("no feasible parameter found for F >= {f_min} (best F reached {best_f})")]
    Infeasible { f_min: f64, best_f: f64 },
}
