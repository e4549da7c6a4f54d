//! Shared inputs for the benchmarks.

use crowdcast_core::corpus::AnnotatedTweet;
use crowdcast_core::features::TokenSequence;
use crowdcast_core::pipeline::tweet_tokens;
use crowdcast_core::synth::{generate_synthetic, SynthParticipant, SynthSpec};

pub fn debate(tweets: u64, seed: u64) -> (SynthSpec, Vec<AnnotatedTweet>) {
    let participants = [("Alvarez", 0.8), ("Brooks", 0.6), ("Chen", 0.4), ("Dunn", 0.2)]
        .into_iter()
        .map(|(name, rate)| SynthParticipant {
            name: name.into(),
            positive_rate: rate,
            signature: Vec::new(),
        })
        .collect();
    let spec = SynthSpec {
        participants,
        volumes: vec![tweets],
        seed,
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec).expect("valid spec");
    (spec, data)
}

pub fn token_docs(data: &[AnnotatedTweet]) -> Vec<TokenSequence> {
    data.iter().map(|a| tweet_tokens(&a.tweet.text)).collect()
}
