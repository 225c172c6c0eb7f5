//! Time-series data model: uniformly sampled daily ridership counts with
//! calendar tags, tap-event aggregation, calendar and train/test splitting,
//! and the CSV formats used by the CLI.

use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use crate::error::{Error, Result};

/// Calendar class of the days a series contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayType {
    Weekday,
    Weekend,
    Mixed,
}

impl DayType {
    pub fn as_str(&self) -> &'static str {
        match self {
            DayType::Weekday => "weekday",
            DayType::Weekend => "weekend",
            DayType::Mixed => "mixed",
        }
    }
}

pub fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun)
}

/// A uniformly sampled series of finite real values (counts or component
/// amplitudes) covering whole service days.
///
/// `points_per_day` is stored once at construction and never recomputed
/// downstream; `window_start_minutes` is the clock time of each day's first
/// bin. `dates` carries one calendar date per day so weekday/weekend
/// structure survives slicing and concatenation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub interval_minutes: u32,
    pub points_per_day: usize,
    pub window_start_minutes: u32,
    pub day_type: DayType,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        interval_minutes: u32,
        points_per_day: usize,
        window_start_minutes: u32,
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if interval_minutes == 0 {
            return Err(Error::invalid("interval_minutes must be positive"));
        }
        if points_per_day == 0 {
            return Err(Error::invalid("points_per_day must be positive"));
        }
        if values.is_empty() {
            return Err(Error::data("series must contain at least one value"));
        }
        if values.len() != dates.len() * points_per_day {
            return Err(Error::data(format!(
                "length {} does not cover whole days ({} days x {} points)",
                values.len(),
                dates.len(),
                points_per_day
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite value in series: {bad}")));
        }
        let day_type = derive_day_type(&dates);
        Ok(TimeSeries {
            interval_minutes,
            points_per_day,
            window_start_minutes,
            day_type,
            dates,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn days(&self) -> usize {
        self.dates.len()
    }

    /// First bin start of the first day.
    pub fn start_timestamp(&self) -> NaiveDateTime {
        self.timestamp_of(0)
    }

    /// Bin-start timestamp of point `index`. Days advance along `dates`
    /// (which may skip excluded calendar days).
    pub fn timestamp_of(&self, index: usize) -> NaiveDateTime {
        let day = index / self.points_per_day;
        let slot = index % self.points_per_day;
        let minutes = self.window_start_minutes as i64 + slot as i64 * self.interval_minutes as i64;
        self.dates[day]
            .and_time(NaiveTime::from_hms_opt(0, 0, 0).unwrap())
            + chrono::Duration::minutes(minutes)
    }

    /// A series with the same grid metadata but different values.
    /// Lengths must match.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "replacement length {} != series length {}",
                values.len(),
                self.values.len()
            )));
        }
        TimeSeries::new(
            self.interval_minutes,
            self.points_per_day,
            self.window_start_minutes,
            self.dates.clone(),
            values,
        )
    }

    /// First `n_days` whole days.
    pub fn head_days(&self, n_days: usize) -> Result<Self> {
        if n_days == 0 || n_days > self.days() {
            return Err(Error::invalid(format!(
                "cannot take {n_days} days from a {}-day series",
                self.days()
            )));
        }
        TimeSeries::new(
            self.interval_minutes,
            self.points_per_day,
            self.window_start_minutes,
            self.dates[..n_days].to_vec(),
            self.values[..n_days * self.points_per_day].to_vec(),
        )
    }

    /// Whole days from `from_day` to the end.
    pub fn tail_days(&self, from_day: usize) -> Result<Self> {
        if from_day >= self.days() {
            return Err(Error::invalid(format!(
                "cannot skip {from_day} days of a {}-day series",
                self.days()
            )));
        }
        TimeSeries::new(
            self.interval_minutes,
            self.points_per_day,
            self.window_start_minutes,
            self.dates[from_day..].to_vec(),
            self.values[from_day * self.points_per_day..].to_vec(),
        )
    }
}

fn derive_day_type(dates: &[NaiveDate]) -> DayType {
    let weekend_days = dates.iter().filter(|d| is_weekend(**d)).count();
    if weekend_days == 0 {
        DayType::Weekday
    } else if weekend_days == dates.len() {
        DayType::Weekend
    } else {
        DayType::Mixed
    }
}

/// One raw smart-card record.
#[derive(Debug, Clone, PartialEq)]
pub struct TapEvent {
    pub timestamp: NaiveDateTime,
    pub station_id: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Entry,
    Exit,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "entry" => Ok(Direction::Entry),
            "exit" => Ok(Direction::Exit),
            other => Err(Error::data(format!("unknown direction {other:?}"))),
        }
    }
}

/// Daily service window given as minutes after midnight, `end` exclusive.
/// `(390, 1440)` is a 6:30-to-midnight window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceWindow {
    pub start_minutes: u32,
    pub end_minutes: u32,
}

impl ServiceWindow {
    pub fn new(start_minutes: u32, end_minutes: u32) -> Result<Self> {
        if end_minutes <= start_minutes || end_minutes > 1440 {
            return Err(Error::invalid(format!(
                "invalid service window {start_minutes}..{end_minutes}"
            )));
        }
        Ok(ServiceWindow { start_minutes, end_minutes })
    }

    /// Parse "6:30" / "06:30" / "24:00" into minutes after midnight.
    pub fn parse_clock(s: &str) -> Result<u32> {
        let (h, m) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("bad clock time {s:?}, expected H:MM")))?;
        let h: u32 = h.trim().parse().map_err(|_| Error::invalid(format!("bad hour in {s:?}")))?;
        let m: u32 =
            m.trim().parse().map_err(|_| Error::invalid(format!("bad minute in {s:?}")))?;
        if h > 24 || m > 59 || (h == 24 && m != 0) {
            return Err(Error::invalid(format!("clock time {s:?} out of range")));
        }
        Ok(h * 60 + m)
    }

    pub fn minutes(&self) -> u32 {
        self.end_minutes - self.start_minutes
    }
}

/// Bin tap events for one station into per-interval counts over whole
/// service days. Bins outside the window are dropped; days with no events
/// contribute all-zero bins; days run in calendar order over the station's
/// full date span, so aggregation conserves in-window event counts per day.
pub fn aggregate_events(
    events: &[TapEvent],
    station: &str,
    interval_minutes: u32,
    window: ServiceWindow,
) -> Result<TimeSeries> {
    if events.is_empty() {
        return Err(Error::data("no events"));
    }
    if interval_minutes == 0 {
        return Err(Error::invalid("interval_minutes must be positive"));
    }
    let mut station_events: Vec<&TapEvent> =
        events.iter().filter(|e| e.station_id == station).collect();
    if station_events.is_empty() {
        return Err(Error::data(format!("unknown station {station:?}: no events recorded")));
    }
    station_events.sort_by_key(|e| e.timestamp);

    let first_date = station_events.first().unwrap().timestamp.date();
    let last_date = station_events.last().unwrap().timestamp.date();
    let n_days = (last_date - first_date).num_days() as usize + 1;

    // Last bin may be truncated when the interval does not divide the window.
    let points_per_day = (window.minutes() as usize).div_ceil(interval_minutes as usize);

    let mut values = vec![0.0; n_days * points_per_day];
    for event in &station_events {
        let day = (event.timestamp.date() - first_date).num_days() as usize;
        let minute_of_day =
            event.timestamp.time().hour() * 60 + event.timestamp.time().minute();
        if minute_of_day < window.start_minutes || minute_of_day >= window.end_minutes {
            continue;
        }
        let bin = ((minute_of_day - window.start_minutes) / interval_minutes) as usize;
        values[day * points_per_day + bin] += 1.0;
    }

    let dates: Vec<NaiveDate> =
        (0..n_days).map(|d| first_date + chrono::Duration::days(d as i64)).collect();
    TimeSeries::new(interval_minutes, points_per_day, window.start_minutes, dates, values)
}

/// Result of splitting a mixed series by calendar class. An absent side
/// means the input had no days of that class.
#[derive(Debug, Clone)]
pub struct CalendarSplit {
    pub weekday: Option<TimeSeries>,
    pub weekend: Option<TimeSeries>,
}

/// Separate Mon-Fri days from Sat-Sun days. Each output holds its days
/// concatenated contiguously (the excluded days are deleted, not zeroed),
/// and the two lengths always sum to the input length.
pub fn split_calendar(series: &TimeSeries) -> Result<CalendarSplit> {
    if series.dates.is_empty() {
        return Err(Error::data("series has no calendar metadata"));
    }
    let ppd = series.points_per_day;
    let mut weekday_dates = Vec::new();
    let mut weekday_values = Vec::new();
    let mut weekend_dates = Vec::new();
    let mut weekend_values = Vec::new();
    for (day, date) in series.dates.iter().enumerate() {
        let chunk = &series.values[day * ppd..(day + 1) * ppd];
        if is_weekend(*date) {
            weekend_dates.push(*date);
            weekend_values.extend_from_slice(chunk);
        } else {
            weekday_dates.push(*date);
            weekday_values.extend_from_slice(chunk);
        }
    }
    let build = |dates: Vec<NaiveDate>, values: Vec<f64>| -> Result<Option<TimeSeries>> {
        if dates.is_empty() {
            Ok(None)
        } else {
            Ok(Some(TimeSeries::new(
                series.interval_minutes,
                ppd,
                series.window_start_minutes,
                dates,
                values,
            )?))
        }
    };
    Ok(CalendarSplit {
        weekday: build(weekday_dates, weekday_values)?,
        weekend: build(weekend_dates, weekend_values)?,
    })
}

/// Chronological split on a whole-day boundary: the first
/// `floor(train_fraction * days)` days are the training set.
pub fn split_train_test(
    series: &TimeSeries,
    train_fraction: f64,
) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train_fraction must lie in (0, 1)"));
    }
    let days = series.days();
    if days < 3 {
        return Err(Error::data("insufficient data: need at least 3 whole days"));
    }
    let train_days = (train_fraction * days as f64).floor() as usize;
    if train_days == 0 || train_days == days {
        return Err(Error::data(format!(
            "train_fraction {train_fraction} leaves an empty split for {days} days"
        )));
    }
    Ok((series.head_days(train_days)?, series.tail_days(train_days)?))
}

// ---------------------------------------------------------------------------
// CSV input/output
// ---------------------------------------------------------------------------

fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M"))
        .map_err(|_| Error::data(format!("bad timestamp {s:?}, expected ISO-8601 local time")))
}

/// Read raw tap events from a CSV with header `timestamp,station_id,direction`.
pub fn read_events_csv(path: &Path) -> Result<Vec<TapEvent>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::data("empty events file"))?;
    if header.trim() != "timestamp,station_id,direction" {
        return Err(Error::data(format!(
            "bad events header {header:?}, expected timestamp,station_id,direction"
        )));
    }
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut parts = line.splitn(3, ',');
        let (ts, station, dir) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::data(format!("malformed events row {}: {line:?}", i + 2))),
        };
        events.push(TapEvent {
            timestamp: parse_timestamp(ts)?,
            station_id: station.trim().to_string(),
            direction: Direction::parse(dir)?,
        });
    }
    if events.is_empty() {
        return Err(Error::data("no events"));
    }
    Ok(events)
}

/// Read a pre-aggregated series from a CSV with header `timestamp,value` or
/// `timestamp,count`. Rows must form whole days on a uniform grid.
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(NaiveDateTime, f64)> = Vec::new();
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::data("empty series file"))?;
    let header = header.trim();
    if header != "timestamp,value" && header != "timestamp,count" {
        return Err(Error::data(format!(
            "bad series header {header:?}, expected timestamp,value or timestamp,count"
        )));
    }
    for (i, line) in lines.enumerate() {
        let (ts, val) = line
            .split_once(',')
            .ok_or_else(|| Error::data(format!("malformed series row {}: {line:?}", i + 2)))?;
        let value: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::data(format!("bad value {val:?} on row {}", i + 2)))?;
        rows.push((parse_timestamp(ts)?, value));
    }
    if rows.is_empty() {
        return Err(Error::data("series file has no rows"));
    }

    // Infer the daily grid: group rows by date and demand a uniform layout.
    let first_day: Vec<&(NaiveDateTime, f64)> =
        rows.iter().take_while(|(ts, _)| ts.date() == rows[0].0.date()).collect();
    let points_per_day = first_day.len();
    let window_start =
        rows[0].0.time().hour() * 60 + rows[0].0.time().minute();
    let interval = if points_per_day > 1 {
        let delta = first_day[1].0 - first_day[0].0;
        let mins = delta.num_minutes();
        if mins <= 0 {
            return Err(Error::data("timestamps are not strictly increasing"));
        }
        mins as u32
    } else {
        15
    };
    if rows.len() % points_per_day != 0 {
        return Err(Error::data(format!(
            "series does not cover whole days: {} rows, {} points per day",
            rows.len(),
            points_per_day
        )));
    }
    let mut dates = Vec::new();
    let mut values = Vec::with_capacity(rows.len());
    for day_rows in rows.chunks(points_per_day) {
        let date = day_rows[0].0.date();
        for (k, (ts, v)) in day_rows.iter().enumerate() {
            if ts.date() != date {
                return Err(Error::data(format!("day starting {date} has mixed dates")));
            }
            let expected = window_start as i64 + (k as i64) * interval as i64;
            let actual = (ts.time().hour() * 60 + ts.time().minute()) as i64;
            if actual != expected {
                return Err(Error::data(format!(
                    "non-uniform grid at {ts}: expected minute {expected} of day"
                )));
            }
            values.push(*v);
        }
        dates.push(date);
    }
    TimeSeries::new(interval, points_per_day, window_start, dates, values)
}

/// Write `timestamp,value` rows (6 decimal places). `header_comment`, when
/// given, is emitted first as a `#`-prefixed provenance line.
pub fn write_series_csv(
    series: &TimeSeries,
    path: &Path,
    header_comment: Option<&str>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(comment) = header_comment {
        out.push_str("# ");
        out.push_str(comment);
        out.push('\n');
    }
    out.push_str("timestamp,value\n");
    for (i, v) in series.values.iter().enumerate() {
        let ts = series.timestamp_of(i);
        out.push_str(&format!("{},{:.6}\n", ts.format("%Y-%m-%dT%H:%M:%S"), v));
    }
    std::fs::write(path, out)?;
    Ok(())
}
