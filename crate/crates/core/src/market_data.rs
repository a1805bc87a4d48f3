//! Auction data ingestion: CSV parsing, grouping onto the maturity grid and
//! last-observation-carried-forward completion of missing tenors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Header of the auction CSV schema.
pub const AUCTION_HEADER: [&str; 7] = [
    "auction_date",
    "maturity_years",
    "instrument",
    "clean_price",
    "face_value",
    "coupon_rate_pct",
    "reported_yield_pct",
];

const DEFAULT_FACE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketDataError {
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: invariant violated for field `{field}`")]
    InvariantViolation { line: u64, field: &'static str },
    #[error("duplicate tenor {tenor} on {date}")]
    DuplicateTenor { date: NaiveDate, tenor: Tenor },
    #[error("invalid maturity grid: {0}")]
    InvalidGrid(String),
    #[error("no observation date survives completion")]
    EmptyAfterImputation,
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for MarketDataError {
    fn from(e: csv::Error) -> Self {
        MarketDataError::Csv(e.to_string())
    }
}

/// Time to maturity in years, held as an exact rational so that grid
/// membership is decided by equality rather than a float tolerance.
///
/// Accepted spellings: decimals (`0.25`, `5`), weeks (`13w` = 0.25y,
/// 52 weeks per year) and fractions (`1/3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tenor(Ratio<i64>);

impl Tenor {
    pub fn from_ratio(numer: i64, denom: i64) -> Option<Self> {
        if denom == 0 {
            return None;
        }
        let r = Ratio::new(numer, denom);
        (r > Ratio::from_integer(0)).then_some(Tenor(r))
    }

    pub fn whole_years(n: i64) -> Self {
        Tenor(Ratio::from_integer(n))
    }

    pub fn years(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid tenor `{0}`")]
pub struct TenorParseError(String);

fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    let r = Ratio::new(numer, denom);
    Some(if neg { -r } else { r })
}

impl FromStr for Tenor {
    type Err = TenorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TenorParseError(s.to_string());
        let t = s.trim();
        let ratio = if let Some(weeks) = t.strip_suffix(['w', 'W']) {
            parse_decimal(weeks).ok_or_else(err)? / 52
        } else if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| err())?;
            let d: i64 = d.trim().parse().map_err(|_| err())?;
            if d == 0 {
                return Err(err());
            }
            Ratio::new(n, d)
        } else {
            parse_decimal(t).ok_or_else(err)?
        };
        if ratio <= Ratio::from_integer(0) {
            return Err(err());
        }
        Ok(Tenor(ratio))
    }
}

impl fmt::Display for Tenor {
    /// Exact decimal when the denominator divides a power of ten, `n/d` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        if d == 1 {
            return write!(f, "{n}");
        }
        let mut rest = d;
        let (mut twos, mut fives) = (0u32, 0u32);
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        if rest != 1 {
            return write!(f, "{n}/{d}");
        }
        let places = twos.max(fives);
        let scaled = n as i128 * 10i128.pow(places) / d as i128;
        let int = scaled / 10i128.pow(places);
        let frac = scaled % 10i128.pow(places);
        let frac = format!("{:0width$}", frac, width = places as usize);
        write!(f, "{int}.{}", frac.trim_end_matches('0'))
    }
}

impl Serialize for Tenor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tenor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(x) => format!("{x}").parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instrument {
    Bill,
    Bond,
}

impl FromStr for Instrument {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bill" => Ok(Instrument::Bill),
            "bond" => Ok(Instrument::Bond),
            other => Err(format!("unknown instrument `{other}`")),
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Instrument::Bill => "Bill",
            Instrument::Bond => "Bond",
        })
    }
}

/// One treasury security observed at auction. Prices are per 100 face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionRecord {
    pub auction_date: NaiveDate,
    pub maturity: Tenor,
    pub instrument: Instrument,
    pub clean_price: f64,
    pub face_value: f64,
    pub coupon_rate_pct: f64,
    pub reported_yield_pct: f64,
}

impl AuctionRecord {
    /// Annual coupon amount in currency.
    pub fn coupon_amount(&self) -> f64 {
        self.face_value * self.coupon_rate_pct / 100.0
    }

    /// Returns the first field that breaks a record invariant.
    pub fn check(&self) -> Result<(), &'static str> {
        let years = self.maturity.years();
        if !(years > 0.0) {
            return Err("maturity_years");
        }
        if !(self.clean_price > 0.0) || !self.clean_price.is_finite() {
            return Err("clean_price");
        }
        if !(self.face_value > 0.0) || !self.face_value.is_finite() {
            return Err("face_value");
        }
        if !(self.coupon_rate_pct >= 0.0) || !self.coupon_rate_pct.is_finite() {
            return Err("coupon_rate_pct");
        }
        if !self.reported_yield_pct.is_finite() {
            return Err("reported_yield_pct");
        }
        let bill_shape = years <= 1.0 && self.coupon_rate_pct == 0.0;
        if (self.instrument == Instrument::Bill) != bill_shape {
            return Err("instrument");
        }
        Ok(())
    }
}

/// Ordered set of tenors every complete observation must cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Tenor>", into = "Vec<Tenor>")]
pub struct MaturityGrid {
    tenors: Vec<Tenor>,
}

impl MaturityGrid {
    pub fn new(tenors: Vec<Tenor>) -> Result<Self, MarketDataError> {
        if tenors.is_empty() {
            return Err(MarketDataError::InvalidGrid("grid is empty".into()));
        }
        if tenors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MarketDataError::InvalidGrid("tenors must be strictly increasing".into()));
        }
        Ok(MaturityGrid { tenors })
    }

    pub fn tenors(&self) -> &[Tenor] {
        &self.tenors
    }

    pub fn years(&self) -> Vec<f64> {
        self.tenors.iter().map(Tenor::years).collect()
    }

    pub fn len(&self) -> usize {
        self.tenors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tenors.is_empty()
    }

    pub fn contains(&self, t: &Tenor) -> bool {
        self.tenors.binary_search(t).is_ok()
    }
}

impl Default for MaturityGrid {
    /// 13, 26 and 52 week bills followed by 2 to 5 year bonds.
    fn default() -> Self {
        let tenors = vec![
            Tenor::from_ratio(1, 4).unwrap(),
            Tenor::from_ratio(1, 2).unwrap(),
            Tenor::whole_years(1),
            Tenor::whole_years(2),
            Tenor::whole_years(3),
            Tenor::whole_years(4),
            Tenor::whole_years(5),
        ];
        MaturityGrid { tenors }
    }
}

impl TryFrom<Vec<Tenor>> for MaturityGrid {
    type Error = MarketDataError;

    fn try_from(v: Vec<Tenor>) -> Result<Self, Self::Error> {
        MaturityGrid::new(v)
    }
}

impl From<MaturityGrid> for Vec<Tenor> {
    fn from(g: MaturityGrid) -> Self {
        g.tenors
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateObservation {
    pub date: NaiveDate,
    pub records: BTreeMap<Tenor, AuctionRecord>,
    #[serde(default)]
    pub imputed_tenors: BTreeSet<Tenor>,
}

impl DateObservation {
    pub fn is_complete(&self, grid: &MaturityGrid) -> bool {
        grid.tenors().iter().all(|t| self.records.contains_key(t))
    }

    pub fn missing(&self, grid: &MaturityGrid) -> Vec<Tenor> {
        grid.tenors().iter().filter(|t| !self.records.contains_key(t)).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Original,
    Imputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub grid: MaturityGrid,
    pub observations: Vec<DateObservation>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn is_complete(&self) -> bool {
        self.observations.iter().all(|o| o.is_complete(&self.grid))
    }
}

/// Non-fatal findings reported while building a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    OffGridMaturity { date: NaiveDate, maturity: Tenor },
    DroppedDate { date: NaiveDate, missing: Vec<Tenor> },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One JSON object per line on the diagnostic stream.
        let line = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&line)
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    auction_date: String,
    maturity_years: String,
    instrument: String,
    clean_price: String,
    face_value: Option<String>,
    coupon_rate_pct: String,
    reported_yield_pct: String,
}

fn parse_f64(line: u64, field: &str, s: &str) -> Result<f64, MarketDataError> {
    s.trim().parse::<f64>().map_err(|_| MarketDataError::MalformedRow {
        line,
        reason: format!("{field}: cannot parse `{s}` as a number"),
    })
}

/// Parses auction rows in file order.
///
/// The header must be the full schema, or the schema without `face_value`
/// (face value then defaults to 100).
pub fn parse_auctions<R: Read>(source: R) -> Result<Vec<AuctionRecord>, MarketDataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let without_face: Vec<&str> = AUCTION_HEADER.iter().copied().filter(|h| *h != "face_value").collect();
    if header != AUCTION_HEADER && header != without_face {
        return Err(MarketDataError::Schema { expected: AUCTION_HEADER.join(","), found: header.join(",") });
    }

    let mut out = Vec::new();
    for (idx, row) in rdr.deserialize::<RawRow>().enumerate() {
        // line 1 is the header
        let line = idx as u64 + 2;
        let row = row.map_err(|e| MarketDataError::MalformedRow { line, reason: e.to_string() })?;
        let auction_date = NaiveDate::parse_from_str(row.auction_date.trim(), "%Y-%m-%d").map_err(|e| {
            MarketDataError::MalformedRow { line, reason: format!("auction_date `{}`: {e}", row.auction_date) }
        })?;
        let maturity = match row.maturity_years.parse::<Tenor>() {
            Ok(t) => t,
            Err(_) => {
                return Err(match parse_f64(line, "maturity_years", &row.maturity_years) {
                    Ok(_) => MarketDataError::InvariantViolation { line, field: "maturity_years" },
                    Err(e) => e,
                });
            }
        };
        let instrument = row
            .instrument
            .parse::<Instrument>()
            .map_err(|reason| MarketDataError::MalformedRow { line, reason })?;
        let face_value = match row.face_value.as_deref().map(str::trim) {
            None | Some("") => DEFAULT_FACE,
            Some(s) => parse_f64(line, "face_value", s)?,
        };
        let record = AuctionRecord {
            auction_date,
            maturity,
            instrument,
            clean_price: parse_f64(line, "clean_price", &row.clean_price)?,
            face_value,
            coupon_rate_pct: parse_f64(line, "coupon_rate_pct", &row.coupon_rate_pct)?,
            reported_yield_pct: parse_f64(line, "reported_yield_pct", &row.reported_yield_pct)?,
        };
        record.check().map_err(|field| MarketDataError::InvariantViolation { line, field })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes records under the full auction header. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_auctions<W: Write>(records: &[AuctionRecord], sink: W) -> Result<(), MarketDataError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(AUCTION_HEADER)?;
    for r in records {
        w.write_record([
            r.auction_date.format("%Y-%m-%d").to_string(),
            r.maturity.to_string(),
            r.instrument.to_string(),
            r.clean_price.to_string(),
            r.face_value.to_string(),
            r.coupon_rate_pct.to_string(),
            r.reported_yield_pct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| MarketDataError::Csv(e.to_string()))?;
    Ok(())
}

/// Partitions records by auction date onto `grid`.
///
/// Off-grid maturities are excluded and reported; two records for the same
/// date and tenor are an error.
pub fn group_by_date(
    records: &[AuctionRecord],
    grid: &MaturityGrid,
) -> Result<(Dataset, Vec<Diagnostic>), MarketDataError> {
    let mut by_date: BTreeMap<NaiveDate, BTreeMap<Tenor, AuctionRecord>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for r in records {
        if !grid.contains(&r.maturity) {
            warnings.push(Diagnostic::OffGridMaturity { date: r.auction_date, maturity: r.maturity });
            continue;
        }
        let slot = by_date.entry(r.auction_date).or_default();
        if slot.insert(r.maturity, r.clone()).is_some() {
            return Err(MarketDataError::DuplicateTenor { date: r.auction_date, tenor: r.maturity });
        }
    }
    let observations = by_date
        .into_iter()
        .map(|(date, records)| DateObservation { date, records, imputed_tenors: BTreeSet::new() })
        .collect();
    let ds = Dataset { grid: grid.clone(), observations, provenance: Provenance::Original };
    Ok((ds, warnings))
}

/// Keeps only dates that already cover the whole grid.
pub fn drop_incomplete(ds: &Dataset) -> (Dataset, Vec<Diagnostic>) {
    let mut dropped = Vec::new();
    let observations = ds
        .observations
        .iter()
        .filter(|o| {
            let missing = o.missing(&ds.grid);
            if missing.is_empty() {
                true
            } else {
                dropped.push(Diagnostic::DroppedDate { date: o.date, missing });
                false
            }
        })
        .cloned()
        .collect();
    (Dataset { grid: ds.grid.clone(), observations, provenance: ds.provenance }, dropped)
}

/// Fills each missing tenor with the most recent earlier record for that
/// tenor. Dates that cannot be completed from the past are dropped and
/// reported; nothing is ever filled from a later date.
pub fn impute_forward(ds: &Dataset) -> Result<(Dataset, Vec<Diagnostic>), MarketDataError> {
    let mut last_seen: BTreeMap<Tenor, AuctionRecord> = BTreeMap::new();
    let mut observations = Vec::with_capacity(ds.observations.len());
    let mut dropped = Vec::new();

    for obs in &ds.observations {
        let mut filled = obs.clone();
        let mut missing = Vec::new();
        for tenor in ds.grid.tenors() {
            if filled.records.contains_key(tenor) {
                continue;
            }
            match last_seen.get(tenor) {
                Some(prev) => {
                    filled.records.insert(*tenor, prev.clone());
                    filled.imputed_tenors.insert(*tenor);
                }
                None => missing.push(*tenor),
            }
        }
        // Only observed records feed later dates, so carried values keep their
        // original auction date and idempotence holds.
        for (tenor, rec) in &obs.records {
            if !obs.imputed_tenors.contains(tenor) {
                last_seen.insert(*tenor, rec.clone());
            } else {
                last_seen.entry(*tenor).or_insert_with(|| rec.clone());
            }
        }
        if missing.is_empty() {
            observations.push(filled);
        } else {
            dropped.push(Diagnostic::DroppedDate { date: obs.date, missing });
        }
    }

    if observations.is_empty() {
        return Err(MarketDataError::EmptyAfterImputation);
    }
    Ok((Dataset { grid: ds.grid.clone(), observations, provenance: Provenance::Imputed }, dropped))
}
