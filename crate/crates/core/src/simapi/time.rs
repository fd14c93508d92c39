//! Time-period tokens accepted by the `time` slot and timestamp rendering.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub fn of_month(month: u32) -> Season {
        match month {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Fall,
            _ => Season::Winter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
            Season::Winter => "winter",
        }
    }
}

/// A calendar period: `YYYY`, `YYYY-MM`, `YYYY-MM-DD`, or a season name optionally
/// followed by a year (`summer`, `summer 2020`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimePeriod {
    Year(i32),
    Month(i32, u32),
    Day(NaiveDate),
    Season(Season, Option<i32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadTimeToken(pub String);

impl fmt::Display for BadTimeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognised time period {:?}", self.0)
    }
}

fn parse_season(s: &str) -> Option<Season> {
    match s.to_ascii_lowercase().as_str() {
        "spring" => Some(Season::Spring),
        "summer" => Some(Season::Summer),
        "fall" | "autumn" => Some(Season::Fall),
        "winter" => Some(Season::Winter),
        _ => None,
    }
}

impl FromStr for TimePeriod {
    type Err = BadTimeToken;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        let bad = || BadTimeToken(raw.to_string());
        let mut words = s.split_whitespace();
        if let Some(season) = words.next().and_then(parse_season) {
            let year = match words.next() {
                Some(y) => Some(y.parse::<i32>().map_err(|_| bad())?),
                None => None,
            };
            if words.next().is_some() {
                return Err(bad());
            }
            return Ok(TimePeriod::Season(season, year));
        }
        let parts: Vec<&str> = s.split('-').collect();
        let all_digits = parts.iter().all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()));
        if !all_digits || parts[0].len() != 4 {
            return Err(bad());
        }
        let year: i32 = parts[0].parse().map_err(|_| bad())?;
        match parts.len() {
            1 => Ok(TimePeriod::Year(year)),
            2 => {
                let month: u32 = parts[1].parse().map_err(|_| bad())?;
                if !(1..=12).contains(&month) {
                    return Err(bad());
                }
                Ok(TimePeriod::Month(year, month))
            }
            3 => NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map(TimePeriod::Day)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for TimePeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePeriod::Year(y) => write!(f, "{y}"),
            TimePeriod::Month(y, m) => write!(f, "{y}-{m:02}"),
            TimePeriod::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            TimePeriod::Season(s, Some(y)) => write!(f, "{} {y}", s.as_str()),
            TimePeriod::Season(s, None) => f.write_str(s.as_str()),
        }
    }
}

impl TimePeriod {
    pub fn contains(&self, t: &NaiveDateTime) -> bool {
        match *self {
            TimePeriod::Year(y) => t.year() == y,
            TimePeriod::Month(y, m) => t.year() == y && t.month() == m,
            TimePeriod::Day(d) => t.date() == d,
            TimePeriod::Season(s, year) => {
                Season::of_month(t.month()) == s && year.is_none_or(|y| t.year() == y)
            }
        }
    }

    /// Natural-language rendering used by utterance templates ("in August 2020").
    pub fn phrase(&self) -> String {
        match self {
            TimePeriod::Year(y) => format!("in {y}"),
            TimePeriod::Month(y, m) => format!("in {} {y}", month_name(*m)),
            TimePeriod::Day(d) => format!("on {} {}, {}", month_name(d.month()), d.day(), d.year()),
            TimePeriod::Season(s, Some(y)) => format!("in the {} of {y}", s.as_str()),
            TimePeriod::Season(s, None) => format!("in the {}", s.as_str()),
        }
    }
}

pub fn month_name(month: u32) -> &'static str {
    const NAMES: [&str; 12] = [
        "January", "February", "March", "April", "May", "June", "July", "August", "September",
        "October", "November", "December",
    ];
    NAMES[(month as usize).clamp(1, 12) - 1]
}

/// `Month D, YYYY, HH:MM`.
pub fn render_timestamp(t: &NaiveDateTime) -> String {
    format!(
        "{} {}, {}, {:02}:{:02}",
        month_name(t.month()),
        t.day(),
        t.year(),
        t.hour(),
        t.minute()
    )
}

/// `Month D, YYYY`.
pub fn render_date(d: &NaiveDate) -> String {
    format!("{} {}, {}", month_name(d.month()), d.day(), d.year())
}

pub fn daypart(t: &NaiveDateTime) -> &'static str {
    match t.hour() {
        0..=11 => "morning",
        12..=16 => "afternoon",
        _ => "evening",
    }
}
