use std::path::PathBuf;

use thiserror::Error;

use crate::event_log::{ActivityId, UserId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("expected header `participant_id,activity_id,team_id,incentive`, found `{found}`")]
    BadHeader { found: String },
    #[error("participant {participant} appears twice in activity {activity}")]
    DuplicateRecord {
        participant: UserId,
        activity: ActivityId,
    },
    #[error("activity ids are not contiguous from 0: activity {missing} has no records")]
    NonContiguousActivities { missing: ActivityId },
    #[error("activity {activity} has inconsistent incentive flags")]
    InconsistentIncentive { activity: ActivityId },
    #[error("log contains no records")]
    EmptyLog,
    #[error("activity {activity} is outside the log (activity_count = {activity_count})")]
    ActivityOutOfRange {
        activity: ActivityId,
        activity_count: usize,
    },
    #[error("unknown participant {0}")]
    UnknownUser(UserId),
    #[error("participant {user} has {count} attendances, need at least {required}")]
    TooFewAttendances {
        user: UserId,
        count: usize,
        required: usize,
    },
    #[error("requested population {requested} exceeds the {available} distinct users in the log")]
    PopulationTooLarge { requested: usize, available: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("need at least {required} observations >= x_min = {x_min}, found {found}")]
    TooFewTail {
        x_min: u64,
        found: usize,
        required: usize,
    },
    #[error("all {n} tail observations equal {value}; the likelihood has no interior maximum")]
    DegenerateTail { n: usize, value: u64 },
    #[error("no x_min yields a goodness-of-fit p-value above {threshold}")]
    NoPowerLawFit { threshold: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("need at least {required} activities, log has {found}")]
    TooFewActivities { required: usize, found: usize },
}

impl Error {
    /// True for failures of the statistical fit itself rather than of its input.
    pub fn is_fit_failure(&self) -> bool {
        matches!(
            self,
            Error::TooFewTail { .. } | Error::DegenerateTail { .. } | Error::NoPowerLawFit { .. }
        )
    }

    pub fn is_ingestion_failure(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MalformedRow { .. }
                | Error::BadHeader { .. }
                | Error::DuplicateRecord { .. }
                | Error::NonContiguousActivities { .. }
                | Error::InconsistentIncentive { .. }
                | Error::EmptyLog
        )
    }
}
