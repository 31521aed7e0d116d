use thiserror::Error;

use crate::srm::ViewingSituation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle is not finite: {0}")]
    NonFiniteAngle(f64),
    #[error("position is not finite")]
    NonFinitePosition,
    #[error("observer and target coincide")]
    CoincidentPoints,
    #[error("ray origin lies inside the ellipse")]
    OriginInsideEllipse,
    #[error("invalid ellipse: need a >= b > 0, got a={a}, b={b}")]
    InvalidEllipse { a: f64, b: f64 },
    #[error("invalid filter config: {0}")]
    InvalidFilterConfig(&'static str),
    #[error("body estimate has not converged")]
    NotConverged,
    #[error("probability out of [0, 1]: {0}")]
    ProbabilityOutOfRange(f64),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario maps no painting to {0}")]
    UnmappedSituation(ViewingSituation),
    #[error("situation {intended} not confirmed within {budget_s} s of startup")]
    SituationNotConfirmed { intended: ViewingSituation, budget_s: f64 },
    #[error("no records for cell {0}")]
    EmptyCell(String),
    #[error("records are missing situation {0} for the method")]
    MissingSituation(ViewingSituation),
    #[error("no successful trials with gaze time")]
    NoSuccessfulTrials,
    #[error("unbalanced design: {0}")]
    UnbalancedDesign(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("trial did not finish within {0} s")]
    TrialTimeout(f64),
    #[error("n_per_cell must be at least 1")]
    EmptyExperiment,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
}
