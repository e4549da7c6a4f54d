//! Aggregation of predicted (target, sentiment) pairs into outcome
//! rankings, trend series and before/after comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::JointCategory;
use crate::corpus::{EventRegistry, Sentiment};
use crate::error::{Error, Result};

/// A predicted pair with its tweet timestamp (unix seconds).
pub type TimedPrediction = (JointCategory, i64);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub pos: u64,
    pub neg: u64,
}

impl Counts {
    pub fn add(&mut self, s: Sentiment) {
        match s {
            Sentiment::Positive => self.pos += 1,
            Sentiment::Negative => self.neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pos + self.neg
    }

    /// Positive fraction; `None` without mentions.
    pub fn score(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.pos as f64 / self.total() as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentimentTally {
    pub counts: BTreeMap<String, Counts>,
}

impl SentimentTally {
    pub fn get(&self, target: &str) -> Counts {
        self.counts.get(target).copied().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(Counts::total).sum()
    }
}

pub fn aggregate<'a, I>(preds: I) -> SentimentTally
where
    I: IntoIterator<Item = &'a TimedPrediction>,
{
    let mut tally = SentimentTally::default();
    for (c, _) in preds {
        tally.counts.entry(c.target.clone()).or_default().add(c.sentiment);
    }
    tally
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMode {
    HalfList,
    TopN(usize),
}

impl RankMode {
    pub fn cutoff(self, participants: usize) -> usize {
        match self {
            RankMode::HalfList => (participants / 2).max(1),
            RankMode::TopN(n) => n,
        }
    }
}

impl FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "half" || s == "half_list" {
            return Ok(RankMode::HalfList);
        }
        s.strip_prefix("top")
            .map(|n| n.trim_start_matches(['_', '-', ':']))
            .and_then(|n| n.parse().ok())
            .map(RankMode::TopN)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown rank mode {s:?} (expected half or topN)")))
    }
}

impl fmt::Display for RankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankMode::HalfList => f.write_str("half"),
            RankMode::TopN(n) => write!(f, "top{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub target: String,
    pub raw: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOutcome {
    pub event_id: String,
    pub ranked: Vec<RankedEntry>,
    pub k: usize,
}

impl RankedOutcome {
    pub fn winners(&self) -> Vec<String> {
        self.ranked.iter().take(self.k).map(|e| e.target.clone()).collect()
    }

    pub fn order(&self) -> Vec<String> {
        self.ranked.iter().map(|e| e.target.clone()).collect()
    }
}

fn check_targets(tally: &SentimentTally, registry: &EventRegistry) -> Result<()> {
    match tally.counts.keys().find(|t| !registry.contains(t)) {
        Some(t) => Err(Error::UnknownTarget {
            target: t.clone(),
            event_id: registry.event_id.clone(),
        }),
        None => Ok(()),
    }
}

/// Ranks every participant by positive fraction, min-max normalized.
/// Unmentioned participants score 0 and sort after mentioned ones with the
/// same score; remaining ties keep registry order.
pub fn rank_outcome(tally: &SentimentTally, registry: &EventRegistry, mode: RankMode) -> Result<RankedOutcome> {
    if tally.total() == 0 {
        return Err(Error::EmptyData);
    }
    check_targets(tally, registry)?;
    let rows: Vec<(usize, &String, f64, bool)> = registry
        .participants
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let c = tally.get(p);
            (i, p, c.score().unwrap_or(0.0), c.total() > 0)
        })
        .collect();
    let lo = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let mut ranked: Vec<_> = rows;
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.3.cmp(&a.3)).then(a.0.cmp(&b.0)));
    let ranked = ranked
        .into_iter()
        .map(|(_, target, raw, _)| RankedEntry {
            target: target.clone(),
            raw,
            norm: if hi > lo { (raw - lo) / (hi - lo) } else { 0.0 },
        })
        .collect();
    Ok(RankedOutcome {
        event_id: registry.event_id.clone(),
        ranked,
        k: mode.cutoff(registry.participants.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucketing {
    Hour,
    Day,
    /// Split at the event time and the expert announcement, if any.
    Event,
}

impl FromStr for Bucketing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hour" => Ok(Bucketing::Hour),
            "day" => Ok(Bucketing::Day),
            "event" => Ok(Bucketing::Event),
            other => Err(Error::InvalidConfig(format!("unknown bucketing {other:?} (expected hour|day|event)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTrend {
    pub target: String,
    pub pos: u64,
    pub neg: u64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendBucket {
    pub start: i64,
    pub volume: u64,
    pub targets: Vec<TargetTrend>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub bucketing: Bucketing,
    pub buckets: Vec<TrendBucket>,
}

fn bucket_starts(preds: &[TimedPrediction], bucketing: Bucketing, registry: &EventRegistry) -> Vec<i64> {
    let min = preds.iter().map(|p| p.1).min().unwrap();
    let max = preds.iter().map(|p| p.1).max().unwrap();
    match bucketing {
        Bucketing::Hour | Bucketing::Day => {
            let width = if bucketing == Bucketing::Hour { 3600 } else { 86_400 };
            let first = min.div_euclid(width) * width;
            let last = max.div_euclid(width) * width;
            (0..=(last - first) / width).map(|i| first + i * width).collect()
        }
        Bucketing::Event => {
            let mut bounds = vec![registry.event_time];
            bounds.extend(registry.expert_announcement_time);
            bounds.sort_unstable();
            bounds.dedup();
            if min < bounds[0] {
                bounds.insert(0, min);
            }
            bounds
        }
    }
}

/// Per-bucket volume and per-participant tallies. Buckets are contiguous
/// from the first to the last prediction, empty ones included.
pub fn trend_series(preds: &[TimedPrediction], bucketing: Bucketing, registry: &EventRegistry) -> TrendSeries {
    if preds.is_empty() {
        return TrendSeries {
            bucketing,
            buckets: Vec::new(),
        };
    }
    let starts = bucket_starts(preds, bucketing, registry);
    let mut volumes = vec![0u64; starts.len()];
    let mut counts = vec![vec![Counts::default(); registry.participants.len()]; starts.len()];
    for (c, ts) in preds {
        let b = starts.partition_point(|&s| s <= *ts).saturating_sub(1);
        volumes[b] += 1;
        if let Some(p) = registry.position(&c.target) {
            counts[b][p].add(c.sentiment);
        }
    }
    let buckets = starts
        .iter()
        .zip(volumes)
        .zip(counts)
        .map(|((&start, volume), row)| TrendBucket {
            start,
            volume,
            targets: registry
                .participants
                .iter()
                .zip(row)
                .map(|(t, c)| TargetTrend {
                    target: t.clone(),
                    pos: c.pos,
                    neg: c.neg,
                    score: c.score(),
                })
                .collect(),
        })
        .collect();
    TrendSeries { bucketing, buckets }
}

impl TrendSeries {
    /// CSV with columns `bucket_start,target,pos,neg,score,volume`; the
    /// score is empty for unmentioned targets.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::io("<csv>", e.into());
        w.write_record(["bucket_start", "target", "pos", "neg", "score", "volume"])
            .map_err(io)?;
        for b in &self.buckets {
            for t in &b.targets {
                w.write_record([
                    b.start.to_string(),
                    t.target.clone(),
                    t.pos.to_string(),
                    t.neg.to_string(),
                    t.score.map(|s| s.to_string()).unwrap_or_default(),
                    b.volume.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Influence {
    pub target: String,
    pub before: Option<f64>,
    pub after: Option<f64>,
    /// `after - before`, when both sides have mentions.
    pub delta: Option<f64>,
}

/// Positive fractions before (`ts < t`) and after (`ts >= t`) the expert
/// announcement `t`, per participant.
pub fn expert_influence(preds: &[TimedPrediction], registry: &EventRegistry) -> Result<Vec<Influence>> {
    let t = registry
        .expert_announcement_time
        .ok_or_else(|| Error::MissingAnnouncement(registry.event_id.clone()))?;
    let before = aggregate(preds.iter().filter(|p| p.1 < t));
    let after = aggregate(preds.iter().filter(|p| p.1 >= t));
    Ok(registry
        .participants
        .iter()
        .map(|p| {
            let (b, a) = (before.get(p).score(), after.get(p).score());
            Influence {
                target: p.clone(),
                before: b,
                after: a,
                delta: b.zip(a).map(|(b, a)| a - b),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Sentiment::{Negative as N, Positive as P};

    fn registry(names: &[&str]) -> EventRegistry {
        EventRegistry::new("debate", names.iter().map(|s| s.to_string()).collect(), 0).unwrap()
    }

    fn pred(t: &str, s: Sentiment, ts: i64) -> TimedPrediction {
        (JointCategory::new(t, s), ts)
    }

    fn repeat(t: &str, s: Sentiment, n: usize) -> Vec<TimedPrediction> {
        (0..n).map(|_| pred(t, s, 0)).collect()
    }

    #[test]
    fn aggregate_counts() {
        assert!(aggregate(&[]).is_empty());
        let t = aggregate(&[pred("A", P, 0), pred("A", N, 1), pred("A", P, 2)]);
        assert_eq!(t.get("A"), Counts { pos: 2, neg: 1 });
        let mixed = [
            pred("A", P, 0),
            pred("B", N, 0),
            pred("C", P, 0),
            pred("B", N, 0),
            pred("A", N, 0),
            pred("C", P, 0),
        ];
        let t = aggregate(&mixed);
        assert_eq!(t.get("A"), Counts { pos: 1, neg: 1 });
        assert_eq!(t.get("B"), Counts { pos: 0, neg: 2 });
        assert_eq!(t.get("C"), Counts { pos: 2, neg: 0 });
    }

    #[test]
    fn ranks_by_positive_fraction() {
        let mut preds = repeat("A", P, 30);
        preds.extend(repeat("A", N, 10));
        preds.extend(repeat("B", P, 10));
        preds.extend(repeat("B", N, 30));
        let out = rank_outcome(&aggregate(&preds), &registry(&["B", "A"]), RankMode::HalfList).unwrap();
        assert_eq!(out.order(), ["A", "B"]);
        assert_eq!((out.ranked[0].raw, out.ranked[0].norm), (0.75, 1.0));
        assert_eq!((out.ranked[1].raw, out.ranked[1].norm), (0.25, 0.0));
        assert_eq!(out.k, 1);
    }

    #[test]
    fn identical_tallies_keep_registry_order() {
        let mut preds = Vec::new();
        for t in ["C", "A", "B"] {
            preds.extend(repeat(t, P, 2));
            preds.push(pred(t, N, 0));
        }
        let out = rank_outcome(&aggregate(&preds), &registry(&["C", "A", "B"]), RankMode::TopN(2)).unwrap();
        assert_eq!(out.order(), ["C", "A", "B"]);
        assert!(out.ranked.iter().all(|e| e.norm == 0.0));
        assert_eq!(out.winners(), ["C", "A"]);
    }

    #[test]
    fn half_list_sizes() {
        assert_eq!(RankMode::HalfList.cutoff(10), 5);
        assert_eq!(RankMode::HalfList.cutoff(1), 1);
        assert_eq!(RankMode::HalfList.cutoff(7), 3);
        assert_eq!("top10".parse::<RankMode>().unwrap(), RankMode::TopN(10));
        assert_eq!("half".parse::<RankMode>().unwrap(), RankMode::HalfList);
    }

    #[test]
    fn unmentioned_ranked_last_and_errors() {
        let reg = registry(&["Z", "A", "B"]);
        let preds = [pred("A", N, 0), pred("B", P, 0)];
        let out = rank_outcome(&aggregate(&preds), &reg, RankMode::HalfList).unwrap();
        assert_eq!(out.order(), ["B", "A", "Z"]);
        assert!(matches!(rank_outcome(&aggregate(&[]), &reg, RankMode::HalfList), Err(Error::EmptyData)));
        let stray = [pred("Q", P, 0)];
        assert!(matches!(
            rank_outcome(&aggregate(&stray), &reg, RankMode::HalfList),
            Err(Error::UnknownTarget { .. })
        ));
    }

    #[test]
    fn trend_buckets() {
        let reg = registry(&["A", "B"]);
        assert!(trend_series(&[], Bucketing::Hour, &reg).buckets.is_empty());

        let hour = [pred("A", P, 7200), pred("B", N, 7300), pred("A", N, 10_799)];
        let s = trend_series(&hour, Bucketing::Hour, &reg);
        assert_eq!(s.buckets.len(), 1);
        assert_eq!((s.buckets[0].start, s.buckets[0].volume), (7200, 3));

        // event day 2016-02-06, then +1 and +2 days
        let day0 = 1_454_716_800;
        let days = [
            pred("A", P, day0 + 100),
            pred("A", P, day0 + 80_000),
            pred("B", N, day0 + 86_400),
            pred("B", P, day0 + 2 * 86_400 + 5),
            pred("A", N, day0 + 2 * 86_400 + 86_399),
        ];
        let s = trend_series(&days, Bucketing::Day, &reg);
        let starts: Vec<i64> = s.buckets.iter().map(|b| b.start).collect();
        assert_eq!(starts, [day0, day0 + 86_400, day0 + 2 * 86_400]);
        let vols: Vec<u64> = s.buckets.iter().map(|b| b.volume).collect();
        assert_eq!(vols, [2, 1, 2]);
        assert_eq!(s.buckets[1].targets[0].score, None);
        assert_eq!(s.buckets[2].targets[0].score, Some(0.0));
    }

    #[test]
    fn gaps_and_event_bucketing() {
        let reg = registry(&["A"]).with_announcement(5000);
        let preds = [pred("A", P, 0), pred("A", P, 3 * 3600 + 1)];
        let s = trend_series(&preds, Bucketing::Hour, &reg);
        assert_eq!(s.buckets.iter().map(|b| b.volume).collect::<Vec<_>>(), [1, 0, 0, 1]);

        let ev = [pred("A", P, -10), pred("A", N, 10), pred("A", P, 6000)];
        let s = trend_series(&ev, Bucketing::Event, &reg);
        let starts: Vec<i64> = s.buckets.iter().map(|b| b.start).collect();
        assert_eq!(starts, [-10, 0, 5000]);
        assert_eq!(s.buckets.iter().map(|b| b.volume).collect::<Vec<_>>(), [1, 1, 1]);
    }

    #[test]
    fn csv_export() {
        let reg = registry(&["A", "B"]);
        let s = trend_series(&[pred("A", P, 0), pred("A", N, 1)], Bucketing::Hour, &reg);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "bucket_start,target,pos,neg,score,volume\n0,A,1,1,0.5,2\n0,B,0,0,,2\n");
    }

    #[test]
    fn influence_split() {
        let reg = registry(&["A", "B"]).with_announcement(100);
        let preds = [
            pred("A", P, 10),
            pred("A", N, 20),
            pred("A", P, 100),
            pred("A", P, 150),
            pred("A", P, 160),
            pred("A", N, 170),
        ];
        let inf = expert_influence(&preds, &reg).unwrap();
        assert_eq!(inf[0].delta, Some(0.25));
        assert_eq!(inf[1].before, None);

        let early = [pred("A", P, 1), pred("B", N, 2)];
        assert!(expert_influence(&early, &reg).unwrap().iter().all(|i| i.after.is_none()));

        let sym = [pred("A", P, 1), pred("A", N, 2), pred("A", P, 101), pred("A", N, 102)];
        assert_eq!(expert_influence(&sym, &reg).unwrap()[0].delta, Some(0.0));

        assert!(matches!(expert_influence(&preds, &registry(&["A"])), Err(Error::MissingAnnouncement(_))));
    }

    fn arb_preds() -> impl Strategy<Value = Vec<TimedPrediction>> {
        prop::collection::vec(
            (0usize..4, any::<bool>(), 0i64..500_000)
                .prop_map(|(t, p, ts)| pred(["A", "B", "C", "D"][t], if p { P } else { N }, ts)),
            1..60,
        )
    }

    proptest! {
        #[test]
        fn ordering_invariant_under_monotone_maps(preds in arb_preds(), pow in 0.2f64..5.0, shift in -3.0f64..3.0) {
            let reg = registry(&["A", "B", "C", "D"]);
            let tally = aggregate(&preds);
            let out = rank_outcome(&tally, &reg, RankMode::HalfList).unwrap();
            // sort with transformed raw scores using the same rule
            let mut rows: Vec<(usize, f64, bool)> = reg.participants.iter().enumerate()
                .map(|(i, p)| {
                    let c = tally.get(p);
                    (i, c.score().unwrap_or(0.0).powf(pow) + shift, c.total() > 0)
                })
                .collect();
            rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
            let order: Vec<String> = rows.iter().map(|r| reg.participants[r.0].clone()).collect();
            prop_assert_eq!(out.order(), order);
            prop_assert!(out.ranked.iter().all(|e| (0.0..=1.0).contains(&e.norm)));
            prop_assert!(out.ranked.windows(2).all(|w| w[0].norm >= w[1].norm));
        }

        #[test]
        fn aggregate_permutation_invariant(preds in arb_preds().prop_shuffle()) {
            let mut sorted = preds.clone();
            sorted.sort_by_key(|p| p.1);
            prop_assert_eq!(aggregate(&preds), aggregate(&sorted));
        }

        #[test]
        fn volumes_sum_to_input(preds in arb_preds(), hourly in any::<bool>()) {
            let reg = registry(&["A", "B", "C", "D"]);
            let b = if hourly { Bucketing::Hour } else { Bucketing::Day };
            let s = trend_series(&preds, b, &reg);
            prop_assert_eq!(s.buckets.iter().map(|b| b.volume).sum::<u64>(), preds.len() as u64);
            prop_assert!(s.buckets.windows(2).all(|w| w[1].start > w[0].start));
        }
    }
}
