//! Participation records, CSV ingestion, and the per-user views derived from them.
//!
//! An [`ActivityLog`] is validated on construction and immutable afterwards.
//! Activity ids are consecutive integers starting at 0 in order of occurrence,
//! so "time" throughout the crate is measured in activity-id units.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UserId = u32;
pub type ActivityId = u32;

pub const CSV_HEADER: [&str; 4] = ["participant_id", "activity_id", "team_id", "incentive"];

/// One attendance: a participant took part in an activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticipationRecord {
    pub participant_id: UserId,
    pub activity_id: ActivityId,
    /// Carried through ingestion and export; no analysis reads it.
    pub team_id: Option<u32>,
    pub incentive: bool,
}

impl ParticipationRecord {
    pub fn new(participant_id: UserId, activity_id: ActivityId, incentive: bool) -> Self {
        Self {
            participant_id,
            activity_id,
            team_id: None,
            incentive,
        }
    }
}

/// Validated, immutable participation log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityLog {
    records: Vec<ParticipationRecord>,
    activity_count: usize,
    incentive: Vec<bool>,
    /// `activity_offsets[a]..activity_offsets[a + 1]` indexes the records of activity `a`.
    activity_offsets: Vec<usize>,
    attendances: BTreeMap<UserId, Vec<ActivityId>>,
}

impl ActivityLog {
    /// Validates and indexes `records`. Input order is irrelevant; records are
    /// stored sorted by activity id, then participant id.
    pub fn from_records(mut records: Vec<ParticipationRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyLog);
        }
        records.sort_unstable_by_key(|r| (r.activity_id, r.participant_id, r.team_id));

        let activity_count = records.last().map(|r| r.activity_id as usize + 1).unwrap_or(0);
        let mut incentive = vec![false; activity_count];
        let mut activity_offsets = Vec::with_capacity(activity_count + 1);
        let mut attendances: BTreeMap<UserId, Vec<ActivityId>> = BTreeMap::new();

        let mut expected: ActivityId = 0;
        for (idx, rec) in records.iter().enumerate() {
            if idx > 0 {
                let prev = &records[idx - 1];
                if prev.activity_id == rec.activity_id && prev.participant_id == rec.participant_id {
                    return Err(Error::DuplicateRecord {
                        participant: rec.participant_id,
                        activity: rec.activity_id,
                    });
                }
            }
            if idx == 0 || records[idx - 1].activity_id != rec.activity_id {
                if rec.activity_id != expected {
                    return Err(Error::NonContiguousActivities { missing: expected });
                }
                activity_offsets.push(idx);
                incentive[rec.activity_id as usize] = rec.incentive;
                expected += 1;
            } else if incentive[rec.activity_id as usize] != rec.incentive {
                return Err(Error::InconsistentIncentive {
                    activity: rec.activity_id,
                });
            }
            attendances
                .entry(rec.participant_id)
                .or_default()
                .push(rec.activity_id);
        }
        activity_offsets.push(records.len());

        Ok(Self {
            records,
            activity_count,
            incentive,
            activity_offsets,
            attendances,
        })
    }

    pub fn records(&self) -> &[ParticipationRecord] {
        &self.records
    }

    pub fn activity_count(&self) -> usize {
        self.activity_count
    }

    pub fn last_activity(&self) -> ActivityId {
        (self.activity_count - 1) as ActivityId
    }

    pub fn user_count(&self) -> usize {
        self.attendances.len()
    }

    pub fn is_incentive(&self, activity: ActivityId) -> bool {
        self.incentive.get(activity as usize).copied().unwrap_or(false)
    }

    pub fn incentive_set(&self) -> BTreeSet<ActivityId> {
        self.incentive
            .iter()
            .enumerate()
            .filter(|(_, &flag)| flag)
            .map(|(a, _)| a as ActivityId)
            .collect()
    }

    /// Records of a single activity.
    pub fn activity_records(&self, activity: ActivityId) -> &[ParticipationRecord] {
        let a = activity as usize;
        &self.records[self.activity_offsets[a]..self.activity_offsets[a + 1]]
    }

    /// Sorted attended activity ids of `user`, if the user appears in the log.
    pub fn attendances(&self, user: UserId) -> Option<&[ActivityId]> {
        self.attendances.get(&user).map(Vec::as_slice)
    }

    /// Users with their attendances, ordered by user id.
    pub fn users(&self) -> impl Iterator<Item = (UserId, &[ActivityId])> + '_ {
        self.attendances.iter().map(|(&u, a)| (u, a.as_slice()))
    }

    fn check_activity(&self, activity: ActivityId) -> Result<()> {
        if (activity as usize) < self.activity_count {
            Ok(())
        } else {
            Err(Error::ActivityOutOfRange {
                activity,
                activity_count: self.activity_count,
            })
        }
    }
}

/// Participation counts, one per user with at least one attendance, ordered by user id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrequencySequence(pub Vec<u64>);

impl FrequencySequence {
    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSequence {
    pub user_id: UserId,
    /// First differences of consecutive attended activity ids; each is >= 1.
    pub intervals: Vec<u64>,
}

/// Reads and validates a participation CSV file.
pub fn parse_csv(path: impl AsRef<Path>) -> Result<ActivityLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<ActivityLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| csv_error(e, 1))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        records.push(parse_row(&row, line)?);
    }
    ActivityLog::from_records(records)
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
    Error::MalformedRow {
        line,
        message: err.to_string(),
    }
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<ParticipationRecord> {
    let malformed = |message: String| Error::MalformedRow { line, message };
    if row.len() != 4 {
        return Err(malformed(format!("expected 4 fields, found {}", row.len())));
    }
    let int = |idx: usize, name: &str| -> Result<u32> {
        row[idx]
            .parse::<u32>()
            .map_err(|e| malformed(format!("{name} `{}`: {e}", &row[idx])))
    };
    let participant_id = int(0, "participant_id")?;
    let activity_id = int(1, "activity_id")?;
    let team_id = if row[2].is_empty() {
        None
    } else {
        Some(int(2, "team_id")?)
    };
    let incentive = match row[3].to_ascii_lowercase().as_str() {
        "1" | "true" => true,
        "0" | "false" => false,
        other => return Err(malformed(format!("incentive `{other}` is not one of 0,1,true,false"))),
    };
    Ok(ParticipationRecord {
        participant_id,
        activity_id,
        team_id,
        incentive,
    })
}

/// Writes the log in the canonical CSV layout, rows sorted by activity then participant.
pub fn write_csv<W: Write>(log: &ActivityLog, writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in log.records() {
        let team = r.team_id.map(|t| t.to_string()).unwrap_or_default();
        wtr.write_record([
            r.participant_id.to_string().as_str(),
            r.activity_id.to_string().as_str(),
            team.as_str(),
            if r.incentive { "1" } else { "0" },
        ])?;
    }
    wtr.flush()
}

pub fn write_csv_file(log: &ActivityLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(log, std::io::BufWriter::new(file)).map_err(io_err)
}

/// Attendance counts within activities `0..=upto` (default: the whole log).
pub fn frequency_sequence(log: &ActivityLog, upto: Option<ActivityId>) -> Result<FrequencySequence> {
    let upto = match upto {
        Some(a) => {
            log.check_activity(a)?;
            a
        }
        None => log.last_activity(),
    };
    let counts = log
        .users()
        .filter_map(|(_, acts)| {
            let n = acts.partition_point(|&a| a <= upto);
            (n > 0).then_some(n as u64)
        })
        .collect();
    Ok(FrequencySequence(counts))
}

pub fn interval_sequence(log: &ActivityLog, user: UserId) -> Result<IntervalSequence> {
    let acts = log.attendances(user).ok_or(Error::UnknownUser(user))?;
    if acts.len() < 2 {
        return Err(Error::TooFewAttendances {
            user,
            count: acts.len(),
            required: 2,
        });
    }
    Ok(IntervalSequence {
        user_id: user,
        intervals: intervals_of(acts),
    })
}

pub(crate) fn intervals_of(acts: &[ActivityId]) -> Vec<u64> {
    acts.windows(2).map(|w| u64::from(w[1] - w[0])).collect()
}

/// The log restricted to activities `0..=upto`.
pub fn prefix(log: &ActivityLog, upto: ActivityId) -> Result<ActivityLog> {
    log.check_activity(upto)?;
    let end = log.activity_offsets[upto as usize + 1];
    ActivityLog::from_records(log.records[..end].to_vec())
}

/// Smallest activity id whose prefix contains at least `population` distinct users.
pub fn users_reaching(log: &ActivityLog, population: usize) -> Result<ActivityId> {
    if population > log.user_count() {
        return Err(Error::PopulationTooLarge {
            requested: population,
            available: log.user_count(),
        });
    }
    if population == 0 {
        return Ok(0);
    }
    let mut seen = HashSet::with_capacity(population);
    for r in log.records() {
        seen.insert(r.participant_id);
        if seen.len() >= population {
            return Ok(r.activity_id);
        }
    }
    unreachable!("population <= user_count is reached by the last record")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: UserId, a: ActivityId) -> ParticipationRecord {
        ParticipationRecord::new(p, a, false)
    }

    fn log_of(users: &[(UserId, &[ActivityId])]) -> ActivityLog {
        let records = users
            .iter()
            .flat_map(|&(u, acts)| acts.iter().map(move |&a| rec(u, a)))
            .collect();
        ActivityLog::from_records(records).unwrap()
    }

    #[test]
    fn parses_three_row_file() {
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,false\n1,0,,false\n0,1,,true\n";
        let log = read_csv(csv.as_bytes()).unwrap();
        assert_eq!(log.user_count(), 2);
        assert_eq!(log.activity_count(), 2);
        assert_eq!(log.incentive_set(), BTreeSet::from([1]));
    }

    #[test]
    fn rejects_duplicate_pair() {
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,0\n0,0,3,0\n";
        assert!(matches!(
            read_csv(csv.as_bytes()),
            Err(Error::DuplicateRecord { participant: 0, activity: 0 })
        ));
    }

    #[test]
    fn rejects_gap_in_activity_ids() {
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,0\n0,2,,0\n";
        assert!(matches!(
            read_csv(csv.as_bytes()),
            Err(Error::NonContiguousActivities { missing: 1 })
        ));
    }

    #[test]
    fn rejects_inconsistent_incentive() {
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,1\n1,0,,0\n";
        assert!(matches!(
            read_csv(csv.as_bytes()),
            Err(Error::InconsistentIncentive { activity: 0 })
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,0\n1,x,,0\n";
        match read_csv(csv.as_bytes()) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let csv = "participant_id,activity_id,team_id,incentive\n0,0,,maybe\n";
        assert!(matches!(read_csv(csv.as_bytes()), Err(Error::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn header_only_is_empty_log() {
        let csv = "participant_id,activity_id,team_id,incentive\n";
        assert!(matches!(read_csv(csv.as_bytes()), Err(Error::EmptyLog)));
        assert!(matches!(read_csv("".as_bytes()), Err(Error::BadHeader { .. }) | Err(Error::MalformedRow { .. })));
    }

    #[test]
    fn wrong_header_rejected() {
        let csv = "user,activity,team,incentive\n0,0,,0\n";
        assert!(matches!(read_csv(csv.as_bytes()), Err(Error::BadHeader { .. })));
    }

    #[test]
    fn team_id_survives_round_trip() {
        let mut r = rec(3, 0);
        r.team_id = Some(17);
        let log = ActivityLog::from_records(vec![r, rec(1, 0)]).unwrap();
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "participant_id,activity_id,team_id,incentive\n1,0,,0\n3,0,17,0\n");
        assert_eq!(read_csv(buf.as_slice()).unwrap(), log);
    }

    #[test]
    fn frequency_counts_prefix() {
        let log = log_of(&[(0, &[0, 1, 2]), (1, &[2])]);
        assert_eq!(frequency_sequence(&log, Some(2)).unwrap().0, vec![3, 1]);
        assert_eq!(frequency_sequence(&log, Some(1)).unwrap().0, vec![2]);
        assert_eq!(frequency_sequence(&log, None).unwrap().0, vec![3, 1]);
        assert!(matches!(
            frequency_sequence(&log, Some(3)),
            Err(Error::ActivityOutOfRange { .. })
        ));
    }

    #[test]
    fn intervals_are_first_differences() {
        let filler: Vec<ActivityId> = (0..=769).collect();
        let log = log_of(&[(7, &[1, 2, 3, 50, 51]), (8, &[0, 769]), (9, &[5]), (1, &filler)]);
        assert_eq!(interval_sequence(&log, 7).unwrap().intervals, vec![1, 1, 47, 1]);
        assert_eq!(interval_sequence(&log, 8).unwrap().intervals, vec![769]);
        assert!(matches!(
            interval_sequence(&log, 9),
            Err(Error::TooFewAttendances { count: 1, .. })
        ));
        assert!(matches!(interval_sequence(&log, 10), Err(Error::UnknownUser(10))));
    }

    #[test]
    fn prefix_bounds() {
        let log = log_of(&[(0, &[0, 1, 2]), (1, &[0, 2])]);
        assert_eq!(prefix(&log, 2).unwrap(), log);
        let p0 = prefix(&log, 0).unwrap();
        assert_eq!(p0.records().len(), 2);
        assert!(p0.records().iter().all(|r| r.activity_id == 0));
        assert!(prefix(&log, 3).is_err());
    }

    #[test]
    fn users_reaching_population() {
        let log = log_of(&[(0, &[0, 1]), (1, &[0, 2]), (2, &[3])]);
        assert_eq!(users_reaching(&log, 3).unwrap(), 3);
        assert_eq!(users_reaching(&log, 1).unwrap(), 0);
        assert_eq!(users_reaching(&log, 2).unwrap(), 0);
        assert!(matches!(
            users_reaching(&log, 4),
            Err(Error::PopulationTooLarge { requested: 4, available: 3 })
        ));
    }
}
