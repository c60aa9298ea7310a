//! Timestamped pairwise-comparison data: records, datasets, count matrices
//! and the CSV ingestion format.
//!
//! The on-disk format is UTF-8 CSV with header `time,team_a,team_b,wins_a,wins_b`.
//! Times are finite decimals in any unit; they are min-max normalized onto
//! `[0, 1]` at load time and the raw range is kept so outputs can be reported
//! in the original units. Teams are indexed in order of first appearance.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 5] = ["time", "team_a", "team_b", "wins_a", "wins_b"];

/// One timestamped outcome block: `team_a` beat `team_b` `wins_a` times and
/// lost `wins_b` times at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchRecord {
    pub time: f64,
    pub team_a: usize,
    pub team_b: usize,
    pub wins_a: u64,
    pub wins_b: u64,
}

impl MatchRecord {
    pub fn games(&self) -> u64 {
        self.wins_a + self.wins_b
    }

    fn validate(&self, n_teams: usize) -> Result<()> {
        if self.team_a >= n_teams || self.team_b >= n_teams {
            return Err(Error::Validation(format!(
                "team index out of range ({}, {}) for {} teams",
                self.team_a, self.team_b, n_teams
            )));
        }
        if self.team_a == self.team_b {
            return Err(Error::Validation(format!("team {} plays itself", self.team_a)));
        }
        if self.games() == 0 {
            return Err(Error::Validation("record carries zero games".into()));
        }
        Ok(())
    }
}

/// Square matrix of nonnegative (possibly smoothed) win counts with a zero
/// diagonal. Entry `(i, j)` is the weight of wins of `i` over `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CountMatrix {
    pub fn zeros(n: usize) -> Self {
        CountMatrix { n, entries: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = CountMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("row {} has length {}, expected {}", i, row.len(), n)));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    if v != 0.0 {
                        return Err(Error::Validation(format!("diagonal entry ({i},{i}) is {v}, expected 0")));
                    }
                    continue;
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!("entry ({i},{j}) = {v} is not a finite nonnegative count")));
                }
                m.entries[i * n + j] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i != j || value == 0.0);
        self.entries[i * self.n + j] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i != j);
        self.entries[i * self.n + j] += value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Total weight over all off-diagonal entries.
    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &CountMatrix, scale: f64) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += scale * b;
        }
    }

    pub fn scaled(&self, scale: f64) -> CountMatrix {
        CountMatrix { n: self.n, entries: self.entries.iter().map(|v| v * scale).collect() }
    }

    /// Relabel teams: entry `(perm[i], perm[j])` of the result is entry `(i, j)` here.
    pub fn permuted(&self, perm: &[usize]) -> CountMatrix {
        let mut out = CountMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.entries[perm[i] * self.n + perm[j]] = self.get(i, j);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// An immutable, validated set of match records over a fixed roster.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    teams: Vec<String>,
    index: HashMap<String, usize>,
    records: Vec<MatchRecord>,
    distinct_times: Vec<f64>,
    slices: Vec<Range<usize>>,
    raw_time_range: (f64, f64),
    /// Input units of each distinct time, kept exactly for round trips.
    raw_times: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from records whose times are already in `[0, 1]`.
    pub fn new(teams: Vec<String>, records: Vec<MatchRecord>, raw_time_range: (f64, f64)) -> Result<Self> {
        if teams.len() < 2 {
            return Err(Error::Validation(format!("need at least 2 teams, got {}", teams.len())));
        }
        if records.is_empty() {
            return Err(Error::Validation("dataset has no records".into()));
        }
        let mut index = HashMap::with_capacity(teams.len());
        for (i, t) in teams.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Validation(format!("team {i} has an empty name")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate team name {t:?}")));
            }
        }
        for r in &records {
            r.validate(teams.len())?;
            if !(0.0..=1.0).contains(&r.time) {
                return Err(Error::Validation(format!("normalized time {} outside [0, 1]", r.time)));
            }
        }
        let mut records = records;
        records.sort_by(|a, b| a.time.total_cmp(&b.time));

        let mut distinct_times = Vec::new();
        let mut slices = Vec::new();
        let mut start = 0;
        for k in 1..=records.len() {
            if k == records.len() || records[k].time != records[start].time {
                distinct_times.push(records[start].time);
                slices.push(start..k);
                start = k;
            }
        }
        let (lo, hi) = raw_time_range;
        let raw_times = distinct_times.iter().map(|&t| lo + t * (hi - lo)).collect();
        Ok(Dataset { teams, index, records, distinct_times, slices, raw_time_range, raw_times })
    }

    /// Builds a dataset from records carrying raw (unnormalized) times.
    pub fn from_raw(teams: Vec<String>, mut records: Vec<MatchRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("dataset has no records".into()));
        }
        let raw: Vec<f64> = records.iter().map(|r| r.time).collect();
        if let Some(bad) = raw.iter().find(|t| !t.is_finite()) {
            return Err(Error::Validation(format!("non-finite time {bad}")));
        }
        let (lo, hi) = min_max(&raw);
        let normalized = normalize_times(&raw);
        for (r, &t) in records.iter_mut().zip(&normalized) {
            r.time = t;
        }
        let mut ds = Dataset::new(teams, records, (lo, hi))?;
        for (&t, &r) in normalized.iter().zip(&raw) {
            if let Some(k) = ds.time_index(t) {
                ds.raw_times[k] = r;
            }
        }
        Ok(ds)
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn teams(&self) -> &[String] {
        &self.teams
    }

    pub fn team_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    pub fn distinct_times(&self) -> &[f64] {
        &self.distinct_times
    }

    /// Records at the `k`-th distinct time.
    pub fn records_at(&self, k: usize) -> &[MatchRecord] {
        &self.records[self.slices[k].clone()]
    }

    pub fn raw_time_range(&self) -> (f64, f64) {
        self.raw_time_range
    }

    /// Maps a normalized time back to the input's units.
    pub fn raw_time(&self, t: f64) -> f64 {
        if let Some(k) = self.time_index(t) {
            return self.raw_times[k];
        }
        let (lo, hi) = self.raw_time_range;
        lo + t * (hi - lo)
    }

    /// Inverse of [`Dataset::raw_time`]; a single-time dataset maps everything to 0.
    pub fn normalized_time(&self, raw: f64) -> f64 {
        let (lo, hi) = self.raw_time_range;
        if hi > lo {
            (raw - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    pub fn total_games(&self) -> u64 {
        self.records.iter().map(MatchRecord::games).sum()
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.distinct_times.binary_search_by(|x| x.total_cmp(&t)).ok()
    }

    /// Games played by each unordered pair over the whole horizon.
    pub fn pair_counts(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.n_teams());
        for r in &self.records {
            let g = r.games() as f64;
            m.add(r.team_a, r.team_b, g);
            m.add(r.team_b, r.team_a, g);
        }
        m
    }

    /// Total win counts pooled over every time point.
    pub fn aggregate_counts(&self) -> CountMatrix {
        let mut m = CountMatrix::zeros(self.n_teams());
        for r in &self.records {
            add_record(&mut m, r, 1.0);
        }
        m
    }

    /// Same data with team `i` renamed to position `perm[i]`.
    pub fn permute_teams(&self, perm: &[usize]) -> Result<Dataset> {
        let n = self.n_teams();
        if perm.len() != n {
            return Err(Error::ShapeMismatch(format!("permutation of length {} for {} teams", perm.len(), n)));
        }
        let mut teams = vec![String::new(); n];
        for (i, &p) in perm.iter().enumerate() {
            teams[p] = self.teams[i].clone();
        }
        let records = self
            .records
            .iter()
            .map(|r| MatchRecord { team_a: perm[r.team_a], team_b: perm[r.team_b], ..*r })
            .collect();
        Ok(Dataset::new(teams, records, self.raw_time_range)?.inherit_raw_times(self))
    }

    /// Copies exact raw times from `from` for every shared normalized time.
    pub(crate) fn inherit_raw_times(mut self, from: &Dataset) -> Dataset {
        for k in 0..self.distinct_times.len() {
            if let Some(j) = from.time_index(self.distinct_times[k]) {
                self.raw_times[k] = from.raw_times[j];
            }
        }
        self
    }
}

#[inline]
pub(crate) fn add_record(m: &mut CountMatrix, r: &MatchRecord, weight: f64) {
    if r.wins_a > 0 {
        m.add(r.team_a, r.team_b, weight * r.wins_a as f64);
    }
    if r.wins_b > 0 {
        m.add(r.team_b, r.team_a, weight * r.wins_b as f64);
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Affine map of `raw_times` onto `[0, 1]`; if every time is equal all map to 0.
pub fn normalize_times(raw_times: &[f64]) -> Vec<f64> {
    if raw_times.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = min_max(raw_times);
    let span = hi - lo;
    if span <= 0.0 {
        return vec![0.0; raw_times.len()];
    }
    raw_times.iter().map(|&t| ((t - lo) / span).clamp(0.0, 1.0)).collect()
}

/// Win counts among records at exactly time `t`.
pub fn raw_count_matrix(dataset: &Dataset, t: f64) -> Result<CountMatrix> {
    let k = dataset.time_index(t).ok_or(Error::UnknownTime(t))?;
    Ok(raw_count_matrix_at(dataset, k))
}

pub(crate) fn raw_count_matrix_at(dataset: &Dataset, k: usize) -> CountMatrix {
    let mut m = CountMatrix::zeros(dataset.n_teams());
    for r in dataset.records_at(k) {
        add_record(&mut m, r, 1.0);
    }
    m
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file)
}

pub fn read_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Validation("empty file: missing header row".into()));
    }
    let mut columns = [usize::MAX; 5];
    for (pos, name) in header.iter().enumerate() {
        match CSV_COLUMNS.iter().position(|c| *c == name) {
            Some(k) if columns[k] == usize::MAX => columns[k] = pos,
            Some(_) => return Err(Error::Validation(format!("duplicate column {name:?}"))),
            None => return Err(Error::Validation(format!("unknown column {name:?}"))),
        }
    }
    if let Some(k) = columns.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Validation(format!("missing column {:?}", CSV_COLUMNS[k])));
    }

    let mut teams: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize| row.get(columns[k]).unwrap_or("");

        let time: f64 = field(0)
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| Error::Parse { line, message: format!("invalid time {:?}", field(0)) })?;
        let mut team = |name: &str| -> Result<usize> {
            if name.is_empty() {
                return Err(Error::Validation(format!("line {line}: empty team name")));
            }
            Ok(*index.entry(name.to_string()).or_insert_with(|| {
                teams.push(name.to_string());
                teams.len() - 1
            }))
        };
        let (a, b) = (field(1).to_string(), field(2).to_string());
        if a == b {
            return Err(Error::Validation(format!("line {line}: team {a:?} plays itself")));
        }
        let team_a = team(&a)?;
        let team_b = team(&b)?;
        let wins = |k: usize| -> Result<u64> {
            let s = field(k);
            match s.parse::<i64>() {
                Ok(v) if v < 0 => Err(Error::Validation(format!("line {line}: negative win count {v}"))),
                Ok(v) => Ok(v as u64),
                Err(_) => Err(Error::Parse { line, message: format!("invalid win count {s:?}") }),
            }
        };
        let (wins_a, wins_b) = (wins(3)?, wins(4)?);
        if wins_a + wins_b == 0 {
            return Err(Error::Validation(format!("line {line}: record with zero games")));
        }
        records.push(MatchRecord { time, team_a, team_b, wins_a, wins_b });
    }
    if records.is_empty() {
        return Err(Error::Validation("file contains no match rows".into()));
    }
    Dataset::from_raw(teams, records)
}

/// Writes the dataset in the ingestion format, with times in raw units.
pub fn write_csv(dataset: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for r in dataset.records() {
        w.write_record([
            dataset.raw_time(r.time).to_string(),
            dataset.teams()[r.team_a].clone(),
            dataset.teams()[r.team_b].clone(),
            r.wins_a.to_string(),
            r.wins_b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
