//! Seeded synthetic annotated corpora with planted per-participant
//! positive rates, for oracle tests and demos.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedTweet, EventRegistry, Sentiment, Tweet};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParticipant {
    pub name: String,
    pub positive_rate: f64,
    /// Words that mark a tweet as being about this participant. Defaults to
    /// the lowercased name and its hashtag.
    #[serde(default)]
    pub signature: Vec<String>,
}

/// Rate change for one participant from `after` (inclusive) onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shock {
    pub participant: String,
    pub after: i64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub event_id: String,
    pub participants: Vec<SynthParticipant>,
    /// Tweets per bucket.
    pub volumes: Vec<u64>,
    pub start: i64,
    pub bucket_seconds: i64,
    /// Defaults to `start`.
    pub event_time: Option<i64>,
    /// Defaults to the shock time when a shock is given.
    pub announcement: Option<i64>,
    pub shock: Option<Shock>,
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
    pub noise_words: Vec<String>,
    pub signature_per_tweet: usize,
    pub sentiment_per_tweet: usize,
    pub noise_per_tweet: usize,
    pub seed: u64,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            event_id: "synthetic".into(),
            participants: Vec::new(),
            volumes: Vec::new(),
            start: 1_454_716_800,
            bucket_seconds: 3600,
            event_time: None,
            announcement: None,
            shock: None,
            positive_words: words(&[
                "great", "love", "win", "strong", "best", "amazing", "brilliant", "happy", "smart", "honest",
            ]),
            negative_words: words(&[
                "terrible", "hate", "lose", "weak", "worst", "awful", "boring", "sad", "liar", "disaster",
            ]),
            noise_words: words(&[
                "debate", "tonight", "stage", "people", "question", "answer", "just", "watching", "said", "about",
                "really", "think", "moderator", "vote", "time", "country", "policy", "plan", "talk", "now",
                "live", "crowd", "night", "again", "still", "voters", "speech", "economy", "tax", "jobs",
                "border", "health", "news", "poll", "state", "america", "first", "minute", "watch", "point",
            ]),
            signature_per_tweet: 2,
            sentiment_per_tweet: 2,
            noise_per_tweet: 3,
            seed: 0,
        }
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidSynthSpec(format!("rate {rate} for {name:?} outside [0, 1]")));
    }
    Ok(())
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.participants.is_empty() {
            return Err(Error::InvalidSynthSpec("no participants".into()));
        }
        for p in &self.participants {
            check_rate(&p.name, p.positive_rate)?;
        }
        if let Some(s) = &self.shock {
            check_rate(&s.participant, s.rate)?;
            if !self.participants.iter().any(|p| p.name == s.participant) {
                return Err(Error::InvalidSynthSpec(format!("shock names unknown participant {:?}", s.participant)));
            }
        }
        if self.bucket_seconds <= 0 {
            return Err(Error::InvalidSynthSpec("bucket_seconds must be positive".into()));
        }
        if self.positive_words.is_empty() || self.negative_words.is_empty() {
            return Err(Error::InvalidSynthSpec("sentiment word pools must be non-empty".into()));
        }
        if self.noise_per_tweet > 0 && self.noise_words.is_empty() {
            return Err(Error::InvalidSynthSpec("noise words requested but none given".into()));
        }
        Ok(())
    }

    pub fn signature(&self, p: &SynthParticipant) -> Vec<String> {
        if p.signature.is_empty() {
            let n = p.name.to_lowercase();
            vec![n.clone(), format!("#{n}")]
        } else {
            p.signature.clone()
        }
    }

    pub fn registry(&self) -> Result<EventRegistry> {
        let names = self.participants.iter().map(|p| p.name.clone()).collect();
        let reg = EventRegistry::new(self.event_id.clone(), names, self.event_time.unwrap_or(self.start))?;
        Ok(match self.announcement.or(self.shock.as_ref().map(|s| s.after)) {
            Some(t) => reg.with_announcement(t),
            None => reg,
        })
    }

    fn rate_at(&self, p: &SynthParticipant, ts: i64) -> f64 {
        match &self.shock {
            Some(s) if s.participant == p.name && ts >= s.after => s.rate,
            _ => p.positive_rate,
        }
    }
}

/// Tweets in timestamp order; participants drawn uniformly, sentiment
/// from the participant's rate at that time.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Vec<AnnotatedTweet>> {
    spec.validate()?;
    let mut r = rng(derive_seed(spec.seed, "synth"));
    let signatures: Vec<Vec<String>> = spec.participants.iter().map(|p| spec.signature(p)).collect();
    let mut out = Vec::new();
    for (b, &volume) in spec.volumes.iter().enumerate() {
        let bucket_start = spec.start + b as i64 * spec.bucket_seconds;
        let mut stamps: Vec<i64> = (0..volume)
            .map(|_| bucket_start + r.gen_range(0..spec.bucket_seconds))
            .collect();
        stamps.sort_unstable();
        for ts in stamps {
            let pi = r.gen_range(0..spec.participants.len());
            let p = &spec.participants[pi];
            let sentiment = if r.gen_bool(spec.rate_at(p, ts)) {
                Sentiment::Positive
            } else {
                Sentiment::Negative
            };
            let pool = match sentiment {
                Sentiment::Positive => &spec.positive_words,
                Sentiment::Negative => &spec.negative_words,
            };
            let mut toks: Vec<&String> = Vec::new();
            toks.extend((0..spec.signature_per_tweet).map(|_| signatures[pi].choose(&mut r).unwrap()));
            toks.extend((0..spec.sentiment_per_tweet).map(|_| pool.choose(&mut r).unwrap()));
            toks.extend((0..spec.noise_per_tweet).map(|_| spec.noise_words.choose(&mut r).unwrap()));
            toks.shuffle(&mut r);
            let text = toks.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ");
            out.push(AnnotatedTweet {
                tweet: Tweet {
                    id: format!("{}-{}", spec.event_id, out.len()),
                    timestamp: ts,
                    text,
                    is_retweet: false,
                },
                target: p.name.clone(),
                sentiment,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn participant(name: &str, rate: f64) -> SynthParticipant {
        SynthParticipant {
            name: name.into(),
            positive_rate: rate,
            signature: Vec::new(),
        }
    }

    #[test]
    fn degenerate_rate() {
        let spec = SynthSpec {
            participants: vec![participant("A", 1.0)],
            volumes: vec![200],
            ..SynthSpec::default()
        };
        let t = generate_synthetic(&spec).unwrap();
        assert!(t.iter().all(|a| a.sentiment == Sentiment::Positive));
        assert!(t.iter().all(|a| a.tweet.text.split(' ').count() == 7));
    }

    #[test]
    fn empirical_rate_concentrates() {
        let spec = SynthSpec {
            participants: vec![participant("A", 0.5)],
            volumes: vec![10_000],
            seed: 3,
            ..SynthSpec::default()
        };
        let t = generate_synthetic(&spec).unwrap();
        let pos = t.iter().filter(|a| a.sentiment == Sentiment::Positive).count() as f64;
        assert!((pos / t.len() as f64 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn bucket_volumes_exact() {
        let spec = SynthSpec {
            participants: vec![participant("A", 0.3), participant("B", 0.6)],
            volumes: vec![100, 0, 50],
            ..SynthSpec::default()
        };
        let t = generate_synthetic(&spec).unwrap();
        let mut counts = [0; 3];
        for a in &t {
            counts[((a.tweet.timestamp - spec.start) / spec.bucket_seconds) as usize] += 1;
        }
        assert_eq!(counts, [100, 0, 50]);
    }

    #[test]
    fn shock_changes_rate_and_sets_announcement() {
        let spec = SynthSpec {
            participants: vec![participant("A", 0.0), participant("B", 0.0)],
            volumes: vec![100, 100],
            shock: Some(Shock {
                participant: "A".into(),
                after: 1_454_716_800 + 3600,
                rate: 1.0,
            }),
            ..SynthSpec::default()
        };
        let reg = spec.registry().unwrap();
        assert_eq!(reg.expert_announcement_time, Some(1_454_716_800 + 3600));
        for a in generate_synthetic(&spec).unwrap() {
            let expect = a.target == "A" && a.tweet.timestamp >= 1_454_716_800 + 3600;
            assert_eq!(a.sentiment == Sentiment::Positive, expect);
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = SynthSpec {
            participants: vec![participant("A", 1.5)],
            ..SynthSpec::default()
        };
        assert!(matches!(generate_synthetic(&bad), Err(Error::InvalidSynthSpec(_))));
        assert!(generate_synthetic(&SynthSpec::default()).is_err());
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec {
            participants: vec![participant("A", 0.4)],
            volumes: vec![30],
            seed: 9,
            ..SynthSpec::default()
        };
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }
}
