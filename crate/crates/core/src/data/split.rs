use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl core::fmt::Display for Split {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive calendar range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, DataError> {
        let r = Self { start, end };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.end < self.start {
            return Err(DataError::InvertedRange {
                start: self.start,
                end: self.end,
            });
        }
        Ok(())
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn days(&self) -> i64 {
        self.end.signed_duration_since(self.start).num_days() + 1
    }
}

/// Train, validation and test periods. A sample belongs to the period
/// containing its target date.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: DateRange,
    pub validation: DateRange,
    pub test: DateRange,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid literal date")
}

impl Default for SplitSpec {
    /// Training 1999-10-01..2008-09-30, test 1994-10-01..1999-09-30 and
    /// validation 1990-10-01..1994-09-30.
    fn default() -> Self {
        Self {
            train: DateRange {
                start: ymd(1999, 10, 1),
                end: ymd(2008, 9, 30),
            },
            validation: DateRange {
                start: ymd(1990, 10, 1),
                end: ymd(1994, 9, 30),
            },
            test: DateRange {
                start: ymd(1994, 10, 1),
                end: ymd(1999, 9, 30),
            },
        }
    }
}

impl SplitSpec {
    pub fn new(
        train: DateRange,
        validation: DateRange,
        test: DateRange,
    ) -> Result<Self, DataError> {
        let s = Self {
            train,
            validation,
            test,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        for split in Split::ALL {
            self.range(split).validate()?;
        }
        for (i, &a) in Split::ALL.iter().enumerate() {
            for &b in &Split::ALL[i + 1..] {
                if self.range(a).overlaps(&self.range(b)) {
                    return Err(DataError::OverlappingSplits {
                        first: a,
                        second: b,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn range(&self, split: Split) -> DateRange {
        match split {
            Split::Train => self.train,
            Split::Validation => self.validation,
            Split::Test => self.test,
        }
    }

    pub fn split_of(&self, date: NaiveDate) -> Option<Split> {
        Split::ALL
            .into_iter()
            .find(|&s| self.range(s).contains(date))
    }
}
