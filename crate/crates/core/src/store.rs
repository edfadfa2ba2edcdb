//! Persistence for the CDR attempt log, the `acd_vendors` interval table and
//! the live per-interval admission counters.
//!
//! Two backends share the [`Store`] trait: [`MemoryStore`] and
//! [`FileStore`], which keeps newline-delimited CSV files on disk plus the
//! same in-memory index. Both allow many concurrent readers and serialize
//! writers behind one lock, so an `acd_vendors` pair is never visible half
//! written.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::domain::{CallRecord, DisconnectCause, Timestamp, VendorId};
use crate::error::{Error, Result};
use crate::rejection::round2;

pub const CDR_HEADER: [&str; 7] = [
    "call_id",
    "vendor",
    "connect_time",
    "disconnect_time",
    "duration_s",
    "cause",
    "rejected",
];

pub const ACD_HEADER: [&str; 6] = ["id", "vendor", "date", "acd_min", "reject_pct", "prefix"];

/// Half-open `[start, end)` range over CDR disconnect times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeRange {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self> {
        if end < start {
            return Err(Error::validation(format!(
                "inverted time range {start} .. {end}"
            )));
        }
        Ok(TimeRange { start, end })
    }

    pub fn all() -> Self {
        TimeRange {
            start: Timestamp(i64::MIN),
            end: Timestamp(i64::MAX),
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }
}

/// One row of the `acd_vendors` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcdRow {
    pub id: u64,
    pub vendor: VendorId,
    pub date: Timestamp,
    pub acd_min: Option<f64>,
    pub reject_pct: f64,
    pub prefix: String,
}

/// An `acd_vendors` row before the store assigns its id.
#[derive(Debug, Clone, PartialEq)]
pub struct NewAcdRow {
    pub vendor: VendorId,
    pub date: Timestamp,
    pub acd_min: Option<f64>,
    pub reject_pct: f64,
    pub prefix: String,
}

impl NewAcdRow {
    fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.reject_pct) {
            return Err(Error::validation(format!(
                "reject_pct {} outside [0, 100]",
                self.reject_pct
            )));
        }
        if self.prefix.contains([',', '"', '\n', '\r']) {
            return Err(Error::validation(format!("bad prefix {:?}", self.prefix)));
        }
        Ok(())
    }

    fn into_row(self, id: u64) -> AcdRow {
        AcdRow {
            id,
            vendor: self.vendor,
            date: self.date,
            acd_min: self.acd_min.map(round2),
            reject_pct: round2(self.reject_pct),
            prefix: self.prefix,
        }
    }
}

pub trait Store: Send + Sync {
    /// Appends one attempt to the CDR log and returns its id (1-based,
    /// strictly increasing).
    fn append_cdr(&self, record: CallRecord) -> Result<u64>;

    /// Records whose `disconnect_time` lies in `range`, ordered by
    /// disconnect time and then by insertion.
    fn query_cdrs(&self, vendor: Option<VendorId>, range: TimeRange) -> Result<Vec<CallRecord>>;

    /// Persists the two rows of one closed interval atomically.
    fn insert_acd_rows(&self, rows: [NewAcdRow; 2]) -> Result<[u64; 2]>;

    /// The pair with the highest ids.
    fn latest_targets(&self) -> Result<Option<[AcdRow; 2]>>;

    fn acd_rows(&self) -> Result<Vec<AcdRow>>;

    /// The full CDR log in insertion order.
    fn cdr_log(&self) -> Result<Vec<CallRecord>>;
}

#[derive(Debug, Default)]
struct Index {
    cdrs: Vec<CallRecord>,
    by_disconnect: BTreeMap<(Timestamp, u64), usize>,
    acd: Vec<AcdRow>,
}

impl Index {
    fn push_cdr(&mut self, record: CallRecord) -> u64 {
        let id = self.cdrs.len() as u64 + 1;
        self.by_disconnect
            .insert((record.disconnect_time, id), self.cdrs.len());
        self.cdrs.push(record);
        id
    }

    fn query(&self, vendor: Option<VendorId>, range: TimeRange) -> Vec<CallRecord> {
        if range.start >= range.end {
            return Vec::new();
        }
        self.by_disconnect
            .range((range.start, 0)..(range.end, 0))
            .map(|(_, &i)| &self.cdrs[i])
            .filter(|r| vendor.is_none_or(|v| r.vendor == v))
            .cloned()
            .collect()
    }

    fn next_acd_ids(&self) -> [u64; 2] {
        let next = self.acd.last().map_or(1, |r| r.id + 1);
        [next, next + 1]
    }

    fn latest(&self) -> Option<[AcdRow; 2]> {
        match self.acd.as_slice() {
            [.., a, b] => Some([a.clone(), b.clone()]),
            _ => None,
        }
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    inner: RwLock<Index>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cdrs(records: impl IntoIterator<Item = CallRecord>) -> Result<Self> {
        let store = Self::new();
        for r in records {
            store.append_cdr(r)?;
        }
        Ok(store)
    }
}

fn poisoned<T>(_: T) -> Error {
    Error::Storage("store lock poisoned".into())
}

impl Store for MemoryStore {
    fn append_cdr(&self, record: CallRecord) -> Result<u64> {
        record.validate()?;
        Ok(self.inner.write().map_err(poisoned)?.push_cdr(record))
    }

    fn query_cdrs(&self, vendor: Option<VendorId>, range: TimeRange) -> Result<Vec<CallRecord>> {
        Ok(self.inner.read().map_err(poisoned)?.query(vendor, range))
    }

    fn insert_acd_rows(&self, rows: [NewAcdRow; 2]) -> Result<[u64; 2]> {
        rows.iter().try_for_each(NewAcdRow::validate)?;
        let mut inner = self.inner.write().map_err(poisoned)?;
        let ids = inner.next_acd_ids();
        let [a, b] = rows;
        inner.acd.push(a.into_row(ids[0]));
        inner.acd.push(b.into_row(ids[1]));
        Ok(ids)
    }

    fn latest_targets(&self) -> Result<Option<[AcdRow; 2]>> {
        Ok(self.inner.read().map_err(poisoned)?.latest())
    }

    fn acd_rows(&self) -> Result<Vec<AcdRow>> {
        Ok(self.inner.read().map_err(poisoned)?.acd.clone())
    }

    fn cdr_log(&self) -> Result<Vec<CallRecord>> {
        Ok(self.inner.read().map_err(poisoned)?.cdrs.clone())
    }
}

/// File-backed store: `cdrs.csv` and `acd_vendors.csv` inside one directory.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    inner: RwLock<(Index, FileHandles)>,
}

#[derive(Debug)]
struct FileHandles {
    cdrs: File,
    acd: File,
}

impl FileStore {
    pub const CDR_FILE: &'static str = "cdrs.csv";
    pub const ACD_FILE: &'static str = "acd_vendors.csv";

    /// Opens (or creates) a store directory and loads any existing rows.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut index = Index::default();

        let cdr_path = dir.join(Self::CDR_FILE);
        if cdr_path.exists() {
            let (records, errors) = read_cdrs(File::open(&cdr_path)?);
            if let Some(e) = errors.into_iter().next() {
                return Err(e);
            }
            for r in records {
                index.push_cdr(r);
            }
        }
        let acd_path = dir.join(Self::ACD_FILE);
        if acd_path.exists() {
            index.acd = read_acd_rows(File::open(&acd_path)?)?;
        }

        let cdrs = open_with_header(&cdr_path, &CDR_HEADER)?;
        let acd = open_with_header(&acd_path, &ACD_HEADER)?;
        Ok(FileStore {
            dir,
            inner: RwLock::new((index, FileHandles { cdrs, acd })),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn open_with_header(path: &Path, header: &[&str]) -> Result<File> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "{}", header.join(","))?;
    }
    Ok(file)
}

impl Store for FileStore {
    fn append_cdr(&self, record: CallRecord) -> Result<u64> {
        record.validate()?;
        let line = cdr_line(&record);
        let mut guard = self.inner.write().map_err(poisoned)?;
        let (index, files) = &mut *guard;
        files.cdrs.write_all(line.as_bytes())?;
        files.cdrs.flush()?;
        Ok(index.push_cdr(record))
    }

    fn query_cdrs(&self, vendor: Option<VendorId>, range: TimeRange) -> Result<Vec<CallRecord>> {
        Ok(self.inner.read().map_err(poisoned)?.0.query(vendor, range))
    }

    fn insert_acd_rows(&self, rows: [NewAcdRow; 2]) -> Result<[u64; 2]> {
        rows.iter().try_for_each(NewAcdRow::validate)?;
        let mut guard = self.inner.write().map_err(poisoned)?;
        let (index, files) = &mut *guard;
        let ids = index.next_acd_ids();
        let [a, b] = rows;
        let rows = [a.into_row(ids[0]), b.into_row(ids[1])];
        let text: String = rows.iter().map(acd_line).collect();
        // Both lines go out in a single write so a crash cannot leave half a pair.
        files.acd.write_all(text.as_bytes())?;
        files.acd.flush()?;
        index.acd.extend(rows);
        Ok(ids)
    }

    fn latest_targets(&self) -> Result<Option<[AcdRow; 2]>> {
        Ok(self.inner.read().map_err(poisoned)?.0.latest())
    }

    fn acd_rows(&self) -> Result<Vec<AcdRow>> {
        Ok(self.inner.read().map_err(poisoned)?.0.acd.clone())
    }

    fn cdr_log(&self) -> Result<Vec<CallRecord>> {
        Ok(self.inner.read().map_err(poisoned)?.0.cdrs.clone())
    }
}

/// Live received/rejected counters of the open interval, per vendor index.
#[derive(Debug, Default)]
pub struct IntervalCounters {
    inner: Mutex<CounterSnapshot>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub received: [u64; 2],
    pub rejected: [u64; 2],
}

impl IntervalCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, idx: usize, received: u64, rejected: u64) {
        let mut c = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        c.received[idx] += received;
        c.rejected[idx] += rejected;
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        *self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Returns the current values and resets them to zero in one step.
    pub fn take(&self) -> CounterSnapshot {
        std::mem::take(&mut *self.inner.lock().unwrap_or_else(|e| e.into_inner()))
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn cdr_line(r: &CallRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        r.call_id,
        r.vendor,
        r.connect_time,
        r.disconnect_time,
        r.duration_s,
        r.disconnect_cause.as_str(),
        u8::from(r.rejected_by_router)
    )
}

fn acd_line(r: &AcdRow) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        r.id,
        r.vendor,
        r.date,
        r.acd_min.map(fmt_num).unwrap_or_default(),
        fmt_num(r.reject_pct),
        r.prefix
    )
}

pub fn write_cdrs<W: Write>(mut out: W, records: &[CallRecord]) -> io::Result<()> {
    let mut out = BufWriter::new(&mut out);
    writeln!(out, "{}", CDR_HEADER.join(","))?;
    for r in records {
        out.write_all(cdr_line(r).as_bytes())?;
    }
    out.flush()
}

pub fn write_acd_rows<W: Write>(mut out: W, rows: &[AcdRow]) -> io::Result<()> {
    let mut out = BufWriter::new(&mut out);
    writeln!(out, "{}", ACD_HEADER.join(","))?;
    for r in rows {
        out.write_all(acd_line(r).as_bytes())?;
    }
    out.flush()
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input)
}

fn check_header(record: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if record.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Row {
            line: 1,
            message: format!("expected header {:?}", expected.join(",")),
        })
    }
}

/// Parses a CDR CSV. Good rows are returned even when others fail; every
/// failure carries its line number.
pub fn read_cdrs<R: Read>(input: R) -> (Vec<CallRecord>, Vec<Error>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut reader = csv_reader(input);
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                errors.push(Error::Row {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if i == 0 {
            if let Err(e) = check_header(&row, &CDR_HEADER) {
                errors.push(e);
                return (records, errors);
            }
            continue;
        }
        match parse_cdr(&row) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(Error::Row {
                line,
                message: e.to_string(),
            }),
        }
    }
    (records, errors)
}

fn parse_cdr(row: &csv::StringRecord) -> Result<CallRecord> {
    if row.len() != CDR_HEADER.len() {
        return Err(Error::validation(format!(
            "expected {} fields, found {}",
            CDR_HEADER.len(),
            row.len()
        )));
    }
    let vendor = row[1]
        .parse()
        .map(VendorId)
        .map_err(|e| Error::validation(format!("vendor {:?}: {e}", &row[1])))?;
    let connect_time = Timestamp::parse(&row[2])?;
    let disconnect_time = Timestamp::parse(&row[3])?;
    let duration_s: u32 = row[4]
        .parse()
        .map_err(|e| Error::validation(format!("duration_s {:?}: {e}", &row[4])))?;
    let disconnect_cause = DisconnectCause::parse(&row[5])?;
    let rejected_by_router = match &row[6] {
        "0" => false,
        "1" => true,
        other => {
            return Err(Error::validation(format!(
                "rejected must be 0 or 1, got {other:?}"
            )))
        }
    };
    let record = CallRecord {
        call_id: row[0].to_string(),
        vendor,
        connect_time,
        disconnect_time,
        duration_s,
        disconnect_cause,
        rejected_by_router,
    };
    record.validate()?;
    Ok(record)
}

pub fn read_acd_rows<R: Read>(input: R) -> Result<Vec<AcdRow>> {
    let mut rows = Vec::new();
    let mut reader = csv_reader(input);
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let row = row?;
        if i == 0 {
            check_header(&row, &ACD_HEADER)?;
            continue;
        }
        let parse = || -> Result<AcdRow> {
            if row.len() != ACD_HEADER.len() {
                return Err(Error::validation("wrong field count"));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::validation(format!("{s:?}: {e}")))
            };
            Ok(AcdRow {
                id: row[0]
                    .parse()
                    .map_err(|e| Error::validation(format!("id: {e}")))?,
                vendor: VendorId(
                    row[1]
                        .parse()
                        .map_err(|e| Error::validation(format!("vendor: {e}")))?,
                ),
                date: Timestamp::parse(&row[2])?,
                acd_min: if row[3].is_empty() {
                    None
                } else {
                    Some(num(&row[3])?)
                },
                reject_pct: num(&row[4])?,
                prefix: row[5].to_string(),
            })
        };
        rows.push(parse().map_err(|e| Error::Row {
            line,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    fn rec(id: &str, vendor: u32, start: &str, secs: i64) -> CallRecord {
        let c = ts(start);
        CallRecord::new(
            id,
            VendorId(vendor),
            c,
            c.plus_seconds(secs),
            if secs > 0 {
                DisconnectCause::NormalClearing
            } else {
                DisconnectCause::NoUserResponding
            },
            false,
        )
        .unwrap()
    }

    #[test]
    fn ids_increase() {
        let s = MemoryStore::new();
        let a = s.append_cdr(rec("a", 1, "2009-11-09 10:00:00", 5)).unwrap();
        let b = s.append_cdr(rec("b", 1, "2009-11-09 10:00:00", 5)).unwrap();
        assert!(b > a);
    }

    #[test]
    fn attempt_log_keeps_duplicate_call_ids() {
        let s = MemoryStore::new();
        let mut rejected = rec("c1", 55, "2009-11-09 10:00:00", 0);
        rejected.rejected_by_router = true;
        rejected.disconnect_cause = DisconnectCause::Other;
        s.append_cdr(rejected).unwrap();
        s.append_cdr(rec("c1", 62, "2009-11-09 10:00:00", 120))
            .unwrap();
        let all = s.query_cdrs(None, TimeRange::all()).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|r| r.call_id == "c1"));
    }

    #[test]
    fn query_is_half_open_and_sorted() {
        let s = MemoryStore::new();
        s.append_cdr(rec("late", 1, "2009-11-09 10:20:00", 0))
            .unwrap();
        s.append_cdr(rec("early", 1, "2009-11-09 10:00:00", 0))
            .unwrap();
        s.append_cdr(rec("other", 2, "2009-11-09 10:05:00", 0))
            .unwrap();
        let r = TimeRange::new(ts("2009-11-09 10:00:00"), ts("2009-11-09 10:20:00")).unwrap();
        let ids: Vec<_> = s
            .query_cdrs(None, r)
            .unwrap()
            .into_iter()
            .map(|r| r.call_id)
            .collect();
        assert_eq!(ids, ["early", "other"]);
        let only1 = s.query_cdrs(Some(VendorId(1)), r).unwrap();
        assert_eq!(only1.len(), 1);
        assert!(TimeRange::new(r.end, r.start).is_err());
        assert!(MemoryStore::new().query_cdrs(None, r).unwrap().is_empty());
    }

    #[test]
    fn acd_rows_round_and_latest() {
        let s = MemoryStore::new();
        assert!(s.latest_targets().unwrap().is_none());
        let date = ts("2009-10-21 17:13:06");
        let row = |v: u32, acd: Option<f64>, rej: f64| NewAcdRow {
            vendor: VendorId(v),
            date,
            acd_min: acd,
            reject_pct: rej,
            prefix: "37410".into(),
        };
        s.insert_acd_rows([row(55, Some(1.29), 0.0), row(62, None, 0.0)])
            .unwrap();
        let ids = s
            .insert_acd_rows([row(55, Some(8.67), 12.768_166), row(62, Some(0.6), 0.0)])
            .unwrap();
        assert_eq!(ids, [3, 4]);
        let latest = s.latest_targets().unwrap().unwrap();
        assert_eq!(latest[0].reject_pct, 12.77);
        assert_eq!(latest[1].acd_min, Some(0.6));
        assert!(s
            .insert_acd_rows([row(55, None, 101.0), row(62, None, 0.0)])
            .is_err());

        let mut out = Vec::new();
        write_acd_rows(&mut out, &s.acd_rows().unwrap()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("2,62,2009-10-21 17:13:06,,0,37410\n"));
        assert!(text.contains("3,55,2009-10-21 17:13:06,8.67,12.77,37410\n"));
        assert_eq!(
            read_acd_rows(text.as_bytes()).unwrap(),
            s.acd_rows().unwrap()
        );
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let csv = "call_id,vendor,connect_time,disconnect_time,duration_s,cause,rejected\n\
                   a,55,2009-11-09 10:00:00,2009-11-09 10:00:05,5,normal,0\n\
                   b,55,2009-11-09 25:00:00,2009-11-09 10:00:05,5,normal,0\n\
                   c,55,2009-11-09 10:00:00,2009-11-09 10:00:05,6,normal,0\n\
                   d,55,2009-11-09 10:00:00,2009-11-09 10:00:05,5,weird,2\n";
        let (ok, errs) = read_cdrs(csv.as_bytes());
        assert_eq!(ok.len(), 1);
        let lines: Vec<u64> = errs
            .iter()
            .map(|e| match e {
                Error::Row { line, .. } => *line,
                _ => 0,
            })
            .collect();
        assert_eq!(lines, [3, 4, 5]);
    }

    #[test]
    fn bad_header_is_reported() {
        let (ok, errs) = read_cdrs("id,vendor\n".as_bytes());
        assert!(ok.is_empty());
        assert!(matches!(errs[0], Error::Row { line: 1, .. }));
    }

    #[test]
    fn counters_take_resets() {
        let c = IntervalCounters::new();
        c.add(0, 1, 1);
        c.add(1, 3, 0);
        let snap = c.take();
        assert_eq!(snap.received, [1, 3]);
        assert_eq!(snap.rejected, [1, 0]);
        assert_eq!(c.snapshot(), CounterSnapshot::default());
    }

    #[test]
    fn file_store_reopens() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = FileStore::open(dir.path()).unwrap();
            s.append_cdr(rec("a", 55, "2009-11-09 10:00:00", 30))
                .unwrap();
            s.insert_acd_rows([
                NewAcdRow {
                    vendor: VendorId(55),
                    date: ts("2009-11-09 10:30:00"),
                    acd_min: Some(0.5),
                    reject_pct: 0.0,
                    prefix: "37410".into(),
                },
                NewAcdRow {
                    vendor: VendorId(62),
                    date: ts("2009-11-09 10:30:00"),
                    acd_min: None,
                    reject_pct: 0.0,
                    prefix: "37410".into(),
                },
            ])
            .unwrap();
        }
        let s = FileStore::open(dir.path()).unwrap();
        assert_eq!(s.cdr_log().unwrap().len(), 1);
        assert_eq!(s.acd_rows().unwrap().len(), 2);
        assert_eq!(
            s.append_cdr(rec("b", 62, "2009-11-09 10:00:00", 1))
                .unwrap(),
            2
        );
        let text = std::fs::read_to_string(dir.path().join(FileStore::CDR_FILE)).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
