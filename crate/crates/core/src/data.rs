//! Sparse triplet-event datasets: a generic delimited-text format and a
//! MovieLens 1M adapter.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cardinalities `(I, J, K)` of the three factor classes.
pub type Dims = [usize; 3];

/// Hour-of-week bins used as the third MovieLens factor.
pub const HOURS_PER_WEEK: usize = 168;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripletEvent {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub y: bool,
}

impl TripletEvent {
    pub fn new(i: u32, j: u32, k: u32, y: bool) -> Self {
        Self { i, j, k, y }
    }

    #[inline]
    pub fn label(&self) -> f64 {
        if self.y {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn index(&self) -> (usize, usize, usize) {
        (self.i as usize, self.j as usize, self.k as usize)
    }
}

/// Bijection between external ids and zero-based indices, in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityDict {
    ids: IndexSet<String>,
}

impl EntityDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dictionary whose ids are the decimal strings `0..n`.
    pub fn numbered(n: usize) -> Self {
        Self {
            ids: (0..n).map(|x| x.to_string()).collect(),
        }
    }

    pub fn intern(&mut self, id: &str) -> u32 {
        match self.ids.get_index_of(id) {
            Some(ix) => ix as u32,
            None => {
                self.ids.insert(id.to_owned());
                (self.ids.len() - 1) as u32
            }
        }
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.ids.get_index_of(id).map(|x| x as u32)
    }

    pub fn id_of(&self, index: u32) -> Option<&str> {
        self.ids.get_index(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub events: Vec<TripletEvent>,
    pub dicts: [EntityDict; 3],
}

impl Dataset {
    /// Dataset over anonymous entities numbered `0..dims[f]`.
    pub fn from_events(dims: Dims, events: Vec<TripletEvent>) -> Result<Self> {
        for (n, e) in events.iter().enumerate() {
            let (i, j, k) = e.index();
            if i >= dims[0] || j >= dims[1] || k >= dims[2] {
                return Err(Error::Usage(format!(
                    "event {n} index ({i}, {j}, {k}) outside dims {dims:?}"
                )));
            }
        }
        Ok(Self {
            events,
            dicts: dims.map(EntityDict::numbered),
        })
    }

    pub fn dims(&self) -> Dims {
        [self.dicts[0].len(), self.dicts[1].len(), self.dicts[2].len()]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(positives, negatives)`.
    pub fn label_counts(&self) -> (usize, usize) {
        let p = self.events.iter().filter(|e| e.y).count();
        (p, self.events.len() - p)
    }

    /// Same dictionaries, selected events.
    pub fn with_events(&self, events: Vec<TripletEvent>) -> Self {
        Self {
            events,
            dicts: self.dicts.clone(),
        }
    }
}

/// Column mapping for [`load_generic`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericSchema {
    pub factors: [String; 3],
    pub label: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl Default for GenericSchema {
    fn default() -> Self {
        Self {
            factors: ["i".into(), "j".into(), "k".into()],
            label: "y".into(),
            delimiter: default_delimiter(),
        }
    }
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim() {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Loads a headered delimited file, addressing columns by name.
pub fn load_generic(path: impl AsRef<Path>, schema: &GenericSchema) -> Result<Dataset> {
    let path = path.as_ref();
    if !schema.delimiter.is_ascii() {
        return Err(Error::Usage(format!(
            "delimiter {:?} must be a single ASCII character",
            schema.delimiter
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!("header has no column named {name:?}"),
            })
    };
    let cols = [
        column(&schema.factors[0])?,
        column(&schema.factors[1])?,
        column(&schema.factors[2])?,
    ];
    let label_col = column(&schema.label)?;

    let mut dicts: [EntityDict; 3] = Default::default();
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_label = &record[label_col];
        let y = parse_label(raw_label).ok_or_else(|| Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("label {raw_label:?} is not 0 or 1"),
        })?;
        let mut ix = [0u32; 3];
        for f in 0..3 {
            let id = record[cols[f]].trim();
            if id.is_empty() {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("empty value in column {:?}", schema.factors[f]),
                });
            }
            ix[f] = dicts[f].intern(id);
        }
        events.push(TripletEvent::new(ix[0], ix[1], ix[2], y));
    }
    Ok(Dataset { events, dicts })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes the dataset in the generic format, using external ids.
pub fn write_generic<W: Write>(data: &Dataset, schema: &GenericSchema, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter as u8)
        .from_writer(out);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        schema.factors[0].as_str(),
        schema.factors[1].as_str(),
        schema.factors[2].as_str(),
        schema.label.as_str(),
    ])
    .map_err(to_io)?;
    for e in &data.events {
        let id = |f: usize, ix: u32| data.dicts[f].id_of(ix).unwrap_or_default();
        w.write_record([
            id(0, e.i),
            id(1, e.j),
            id(2, e.k),
            if e.y { "1" } else { "0" },
        ])
        .map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Hour-of-week bin of a Unix timestamp, UTC, Monday 00:00 = bin 0.
pub fn hour_of_week(timestamp: i64) -> usize {
    const DAY: i64 = 86_400;
    let days = timestamp.div_euclid(DAY);
    // 1970-01-01 was a Thursday (weekday 3 with Monday = 0)
    let weekday = (days + 3).rem_euclid(7);
    let hour = timestamp.rem_euclid(DAY) / 3600;
    (weekday * 24 + hour) as usize
}

/// Loads `UserID::MovieID::Rating::Timestamp` rows. Ratings of 4 and 5 are
/// positive. Factors are user, movie and hour-of-week.
pub fn load_movielens(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut users = EntityDict::new();
    let mut movies = EntityDict::new();
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.trim_end().split("::").collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 '::'-separated fields, got {}", fields.len())));
        }
        let rating: u8 = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rating {:?}", fields[2])))?;
        if !(1..=5).contains(&rating) {
            return Err(bad(format!("rating {rating} outside 1..=5")));
        }
        let ts: i64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad timestamp {:?}", fields[3])))?;
        let (user, movie) = (fields[0].trim(), fields[1].trim());
        if user.is_empty() || movie.is_empty() {
            return Err(bad("empty user or movie id".into()));
        }
        events.push(TripletEvent::new(
            users.intern(user),
            movies.intern(movie),
            hour_of_week(ts) as u32,
            rating >= 4,
        ));
    }
    Ok(Dataset {
        events,
        dicts: [users, movies, EntityDict::numbered(HOURS_PER_WEEK)],
    })
}

/// Keeps each event of class `class` with probability `rate`; the other class is untouched.
pub fn downsample(data: &Dataset, class: bool, rate: f64, seed: u64) -> Result<Dataset> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Usage(format!("downsample rate {rate} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = data
        .events
        .iter()
        .filter(|e| e.y != class || rate >= 1.0 || rng.random::<f64>() < rate)
        .copied()
        .collect();
    Ok(data.with_events(events))
}

/// Keeps each event (either class) with probability `rate`.
pub fn subsample(data: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    let pos = downsample(data, true, rate, seed)?;
    downsample(&pos, false, rate, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))
}
