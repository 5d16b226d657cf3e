use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar month, the coarse period of the panel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    year: i32,
    month: u32,
}

impl Period {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Period { year, month })
    }

    /// The month containing `date`.
    pub fn of(date: NaiveDate) -> Self {
        Period {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid period")
    }

    pub fn last_day(self) -> NaiveDate {
        self.next().first_day().pred_opt().expect("date in range")
    }

    pub fn days(self) -> u32 {
        self.last_day().day()
    }

    pub fn next(self) -> Self {
        self.add_months(1)
    }

    pub fn prev(self) -> Self {
        self.add_months(-1)
    }

    pub fn add_months(self, delta: i32) -> Self {
        let index = self.year * 12 + self.month as i32 - 1 + delta;
        Period {
            year: index.div_euclid(12),
            month: index.rem_euclid(12) as u32 + 1,
        }
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: Period) -> i32 {
        (other.year - self.year) * 12 + other.month as i32 - self.month as i32
    }

    /// Every day of the month, in order.
    pub fn dates(self) -> impl Iterator<Item = NaiveDate> {
        self.first_day().iter_days().take(self.days() as usize)
    }

    /// Shift by whole months, clamping the day to the target month's length.
    pub(crate) fn shift_date(date: NaiveDate, months: i32) -> Option<NaiveDate> {
        if months >= 0 {
            date.checked_add_months(Months::new(months as u32))
        } else {
            date.checked_sub_months(Months::new(months.unsigned_abs()))
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("period `{s}` is not YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Period::new(year, month).map_err(|_| bad())
    }
}

/// Ordered fine ticks (days) and the coarse periods (months) they fall in.
///
/// The tick-to-period map is calendar containment, so it is monotone by
/// construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyCalendar {
    ticks: Vec<NaiveDate>,
    periods: Vec<Period>,
    /// `starts[i]..starts[i + 1]` indexes the ticks of `periods[i]`.
    starts: Vec<usize>,
}

impl FrequencyCalendar {
    /// Build from arbitrary ticks; duplicates are dropped and order fixed.
    pub fn from_ticks(ticks: impl IntoIterator<Item = NaiveDate>) -> Result<Self> {
        let mut ticks: Vec<NaiveDate> = ticks.into_iter().collect();
        ticks.sort_unstable();
        ticks.dedup();
        if ticks.is_empty() {
            return Err(Error::InvalidCalendar("calendar has no ticks".into()));
        }
        let mut periods = Vec::new();
        let mut starts = Vec::new();
        for (i, &tick) in ticks.iter().enumerate() {
            let period = Period::of(tick);
            if periods.last() != Some(&period) {
                periods.push(period);
                starts.push(i);
            }
        }
        starts.push(ticks.len());
        Ok(FrequencyCalendar {
            ticks,
            periods,
            starts,
        })
    }

    /// Daily ticks covering every day of `first..=last` months.
    pub fn monthly(first: Period, last: Period) -> Result<Self> {
        if last < first {
            return Err(Error::InvalidCalendar(format!(
                "last period {last} precedes first period {first}"
            )));
        }
        let n = first.months_until(last) + 1;
        Self::from_ticks((0..n).flat_map(|k| first.add_months(k).dates()))
    }

    pub fn ticks(&self) -> &[NaiveDate] {
        &self.ticks
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn first_tick(&self) -> NaiveDate {
        self.ticks[0]
    }

    pub fn last_tick(&self) -> NaiveDate {
        *self.ticks.last().expect("non-empty calendar")
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.ticks.binary_search(&date).is_ok()
    }

    pub fn contains_period(&self, period: Period) -> bool {
        self.periods.binary_search(&period).is_ok()
    }

    /// The coarse period a known tick belongs to.
    pub fn period_of(&self, date: NaiveDate) -> Result<Period> {
        if self.contains(date) {
            Ok(Period::of(date))
        } else {
            Err(Error::UnknownDate(date))
        }
    }

    /// Ticks that map to `period`, in order; empty if the period is unknown.
    pub fn ticks_in(&self, period: Period) -> &[NaiveDate] {
        match self.periods.binary_search(&period) {
            Ok(i) => &self.ticks[self.starts[i]..self.starts[i + 1]],
            Err(_) => &[],
        }
    }
}
