//! Tweet ingestion, text cleaning, and corpus-level filters.
//!
//! Cleaning rewrites a single text: user mentions become `USER`, hyperlinks
//! become `URL`, and any letter repeated more than twice in a row is cut back
//! to exactly three occurrences. Filtering works on whole records: conflicting
//! annotations for one tweet id, retweets, and duplicate texts are removed.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sentiment {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Sentiment {
    pub const ALL: [Sentiment; 2] = [Sentiment::Positive, Sentiment::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "pos",
            Sentiment::Negative => "neg",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pos" | "positive" | "+" => Ok(Sentiment::Positive),
            "neg" | "negative" | "-" => Ok(Sentiment::Negative),
            other => Err(format!("unknown sentiment {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub text: String,
    pub is_retweet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedTweet {
    pub tweet: Tweet,
    pub target: String,
    pub sentiment: Sentiment,
}

/// Participants of one event (debate, award category, game).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRegistry {
    pub event_id: String,
    pub participants: Vec<String>,
    pub event_time: i64,
    #[serde(default)]
    pub expert_announcement_time: Option<i64>,
}

impl EventRegistry {
    pub fn new(event_id: impl Into<String>, participants: Vec<String>, event_time: i64) -> Result<Self> {
        let registry = EventRegistry {
            event_id: event_id.into(),
            participants,
            event_time,
            expert_announcement_time: None,
        };
        registry.validate()?;
        Ok(registry)
    }

    pub fn with_announcement(mut self, time: i64) -> Self {
        self.expert_announcement_time = Some(time);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.participants.is_empty() {
            return Err(Error::InvalidRegistry("participant list is empty".into()));
        }
        let mut seen = HashSet::new();
        for p in &self.participants {
            if p.is_empty() {
                return Err(Error::InvalidRegistry("empty participant name".into()));
            }
            if !seen.insert(p.as_str()) {
                return Err(Error::InvalidRegistry(format!("duplicate participant {p:?}")));
            }
        }
        Ok(())
    }

    pub fn position(&self, target: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == target)
    }

    pub fn contains(&self, target: &str) -> bool {
        self.position(target).is_some()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let registry: EventRegistry = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::InvalidRegistry(format!("{}: {e}", path.display())))?;
        registry.validate()?;
        Ok(registry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Raw,
    Annotated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Corpus {
    Raw(Vec<Tweet>),
    Annotated(Vec<AnnotatedTweet>),
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Raw(t) => t.len(),
            Corpus::Annotated(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One line of the interchange format, shared by JSONL and CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub ts: i64,
    pub text: String,
    #[serde(default)]
    pub rt: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentiment: Option<Sentiment>,
}

impl From<&Tweet> for Record {
    fn from(t: &Tweet) -> Self {
        Record {
            id: t.id.clone(),
            ts: t.timestamp,
            text: t.text.clone(),
            rt: Some(t.is_retweet),
            target: None,
            sentiment: None,
        }
    }
}

impl From<&AnnotatedTweet> for Record {
    fn from(a: &AnnotatedTweet) -> Self {
        Record {
            target: Some(a.target.clone()),
            sentiment: Some(a.sentiment),
            ..Record::from(&a.tweet)
        }
    }
}

fn tweet_from_record(rec: &Record, line: usize) -> Result<Tweet> {
    if rec.id.is_empty() {
        return Err(Error::Parse {
            line,
            message: "empty id".into(),
        });
    }
    let is_retweet = rec.rt.unwrap_or_else(|| rec.text.starts_with("RT "));
    Ok(Tweet {
        id: rec.id.clone(),
        timestamp: rec.ts,
        text: rec.text.clone(),
        is_retweet,
    })
}

fn annotated_from_record(
    rec: &Record,
    line: usize,
    registry: Option<&EventRegistry>,
) -> Result<AnnotatedTweet> {
    let tweet = tweet_from_record(rec, line)?;
    let target = rec.target.clone().ok_or_else(|| Error::Parse {
        line,
        message: "missing target".into(),
    })?;
    let sentiment = rec.sentiment.ok_or_else(|| Error::Parse {
        line,
        message: "missing sentiment".into(),
    })?;
    if let Some(reg) = registry {
        if !reg.contains(&target) {
            return Err(Error::UnknownTarget {
                target,
                event_id: reg.event_id.clone(),
            });
        }
    }
    Ok(AnnotatedTweet {
        tweet,
        target,
        sentiment,
    })
}

/// Reads JSONL records; blank lines are skipped but still counted.
pub fn read_jsonl_records<R: Read>(reader: R) -> Result<Vec<(usize, Record)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, rec));
    }
    Ok(out)
}

/// Reads CSV records with header `id,ts,text,rt,target,sentiment`.
pub fn read_csv_records<R: Read>(reader: R) -> Result<Vec<(usize, Record)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<CsvRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 2),
            message: e.to_string(),
        })?;
        let line = i + 2;
        let sentiment = match rec.sentiment.as_deref() {
            None | Some("") => None,
            Some(s) => Some(s.parse::<Sentiment>().map_err(|message| Error::Parse { line, message })?),
        };
        out.push((
            line,
            Record {
                id: rec.id,
                ts: rec.ts,
                text: rec.text,
                rt: rec.rt,
                target: rec.target.filter(|t| !t.is_empty()),
                sentiment,
            },
        ));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CsvRecord {
    id: String,
    ts: i64,
    text: String,
    #[serde(default)]
    rt: Option<bool>,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    sentiment: Option<String>,
}

fn read_records(path: &Path) -> Result<Vec<(usize, Record)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        read_csv_records(file)
    } else {
        read_jsonl_records(file)
    }
}

/// Converts parsed records under `schema`, checking annotated targets
/// against `registry` when one is given. File order is preserved.
pub fn records_to_corpus(
    records: &[(usize, Record)],
    schema: Schema,
    registry: Option<&EventRegistry>,
) -> Result<Corpus> {
    match schema {
        Schema::Raw => records
            .iter()
            .map(|(line, rec)| tweet_from_record(rec, *line))
            .collect::<Result<Vec<_>>>()
            .map(Corpus::Raw),
        Schema::Annotated => records
            .iter()
            .map(|(line, rec)| annotated_from_record(rec, *line, registry))
            .collect::<Result<Vec<_>>>()
            .map(Corpus::Annotated),
    }
}

/// Loads a JSONL (or `.csv`) corpus file.
pub fn load_corpus(path: impl AsRef<Path>, schema: Schema, registry: Option<&EventRegistry>) -> Result<Corpus> {
    let records = read_records(path.as_ref())?;
    records_to_corpus(&records, schema, registry)
}

pub fn load_tweets(path: impl AsRef<Path>) -> Result<Vec<Tweet>> {
    match load_corpus(path, Schema::Raw, None)? {
        Corpus::Raw(t) => Ok(t),
        Corpus::Annotated(_) => unreachable!(),
    }
}

pub fn load_annotated(path: impl AsRef<Path>, registry: Option<&EventRegistry>) -> Result<Vec<AnnotatedTweet>> {
    match load_corpus(path, Schema::Annotated, registry)? {
        Corpus::Annotated(t) => Ok(t),
        Corpus::Raw(_) => unreachable!(),
    }
}

pub fn write_jsonl<W, I>(mut writer: W, records: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = Record>,
{
    for rec in records {
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[A-Za-z0-9_]{1,15}").unwrap())
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"https?://\S+").unwrap())
}

/// Which cleaning filters changed a text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanEffects {
    pub mentions: bool,
    pub urls: bool,
    pub repeats: bool,
}

/// Applies the three text filters: hyperlinks to `URL`, mentions to `USER`,
/// letter runs longer than three cut to three.
pub fn clean_tweet(text: &str) -> String {
    clean_tweet_with_effects(text).0
}

pub fn clean_tweet_with_effects(text: &str) -> (String, CleanEffects) {
    let mut effects = CleanEffects::default();

    let mut s = match url_re().replace_all(text, "URL") {
        std::borrow::Cow::Borrowed(_) => text.to_owned(),
        std::borrow::Cow::Owned(o) => {
            effects.urls = true;
            o
        }
    };

    // "@@name" leaves "@USER" after one pass; repeat until nothing matches.
    while mention_re().is_match(&s) {
        s = mention_re().replace_all(&s, "USER").into_owned();
        effects.mentions = true;
    }

    let collapsed = collapse_repeated_letters(&s);
    if collapsed != s {
        effects.repeats = true;
    }
    (collapsed, effects)
}

/// Cuts every run of more than three identical letters down to three.
/// Case-sensitive; digits and punctuation runs are left alone.
pub fn collapse_repeated_letters(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run > 3 && c.is_alphabetic() {
            continue;
        }
        out.push(c);
    }
    out
}

/// Per-filter tallies from [`preprocess`] / [`filter_corpus`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub input: usize,
    pub mentions_replaced: usize,
    pub urls_replaced: usize,
    pub repeats_collapsed: usize,
    /// Extra annotation records for an id already seen (one tweet, many rows).
    pub annotations_merged: usize,
    pub multi_sentiment_dropped: usize,
    pub retweets_dropped: usize,
    pub duplicates_dropped: usize,
    pub empty_dropped: usize,
    pub output: usize,
}

impl CleanReport {
    pub fn total_dropped(&self) -> usize {
        self.annotations_merged
            + self.multi_sentiment_dropped
            + self.retweets_dropped
            + self.duplicates_dropped
            + self.empty_dropped
    }

    fn absorb_effects(&mut self, e: CleanEffects) {
        self.mentions_replaced += e.mentions as usize;
        self.urls_replaced += e.urls as usize;
        self.repeats_collapsed += e.repeats as usize;
    }
}

/// Removes tweets whose id carries conflicting annotations, retweets, exact
/// duplicates of an earlier (cleaned) text, and texts that clean to nothing.
/// Survivors keep their input order; texts are not rewritten.
pub fn filter_corpus(tweets: &[AnnotatedTweet]) -> (Vec<AnnotatedTweet>, CleanReport) {
    let mut report = CleanReport {
        input: tweets.len(),
        ..Default::default()
    };

    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in tweets.iter().enumerate() {
        groups.entry(t.tweet.id.as_str()).or_default().push(i);
    }
    let mut keep = vec![false; tweets.len()];
    for (i, t) in tweets.iter().enumerate() {
        let members = &groups[t.tweet.id.as_str()];
        if members[0] != i {
            continue;
        }
        report.annotations_merged += members.len() - 1;
        let conflicting = members
            .iter()
            .any(|&j| tweets[j].target != t.target || tweets[j].sentiment != t.sentiment);
        if conflicting {
            report.multi_sentiment_dropped += 1;
        } else {
            keep[i] = true;
        }
    }

    let survivors: Vec<&AnnotatedTweet> = tweets
        .iter()
        .zip(&keep)
        .filter_map(|(t, &k)| k.then_some(t))
        .collect();
    let kept = drop_retweets_and_duplicates(survivors, |a| &a.tweet, &mut report);
    let out: Vec<AnnotatedTweet> = kept.into_iter().cloned().collect();
    report.output = out.len();
    (out, report)
}

/// Retweet, duplicate, and empty-text filtering for unlabeled tweets.
/// Conflicting-annotation removal needs labels and is not applied here.
pub fn filter_tweets(tweets: &[Tweet]) -> (Vec<Tweet>, CleanReport) {
    let mut report = CleanReport {
        input: tweets.len(),
        ..Default::default()
    };
    let kept = drop_retweets_and_duplicates(tweets.iter().collect(), |t| t, &mut report);
    let out: Vec<Tweet> = kept.into_iter().cloned().collect();
    report.output = out.len();
    (out, report)
}

fn drop_retweets_and_duplicates<'a, T>(
    items: Vec<&'a T>,
    tweet: impl Fn(&T) -> &Tweet,
    report: &mut CleanReport,
) -> Vec<&'a T> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let t = tweet(item);
        if t.is_retweet || t.text.starts_with("RT ") {
            report.retweets_dropped += 1;
            continue;
        }
        let cleaned = clean_tweet(&t.text);
        if cleaned.trim().is_empty() {
            report.empty_dropped += 1;
            continue;
        }
        if !seen.insert(cleaned) {
            report.duplicates_dropped += 1;
            continue;
        }
        out.push(item);
    }
    out
}

/// Full preprocessing of an annotated corpus: every text is cleaned, then
/// the record-level filters run.
pub fn preprocess(tweets: &[AnnotatedTweet]) -> (Vec<AnnotatedTweet>, CleanReport) {
    let mut effects = Vec::with_capacity(tweets.len());
    let cleaned: Vec<AnnotatedTweet> = tweets
        .iter()
        .map(|a| {
            let (text, e) = clean_tweet_with_effects(&a.tweet.text);
            effects.push(e);
            AnnotatedTweet {
                tweet: Tweet { text, ..a.tweet.clone() },
                ..a.clone()
            }
        })
        .collect();
    let (out, mut report) = filter_corpus(&cleaned);
    for e in effects {
        report.absorb_effects(e);
    }
    (out, report)
}

pub fn preprocess_tweets(tweets: &[Tweet]) -> (Vec<Tweet>, CleanReport) {
    let mut effects = Vec::with_capacity(tweets.len());
    let cleaned: Vec<Tweet> = tweets
        .iter()
        .map(|t| {
            let (text, e) = clean_tweet_with_effects(&t.text);
            effects.push(e);
            Tweet { text, ..t.clone() }
        })
        .collect();
    let (out, mut report) = filter_tweets(&cleaned);
    for e in effects {
        report.absorb_effects(e);
    }
    (out, report)
}
