//! Client side of the scoring wire protocol.
//!
//! `POST /v1/score {"premise", "hypothesis"} -> {"score"}` and
//! `POST /v1/score_batch {"items": [...]} -> {"scores": [...]}`.

use serde::{Deserialize, Serialize};

use super::prompt::PromptTriple;
use crate::error::{Error, Result};
use crate::http::{JsonClient, RetryPolicy};

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchRequest {
    pub items: Vec<PromptTriple>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScoringClient {
    http: JsonClient,
}

fn check_range(endpoint: &str, score: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&score) {
        Ok(score)
    } else {
        Err(Error::ScoreOutOfRange {
            source_name: endpoint.to_owned(),
            score,
        })
    }
}

impl ScoringClient {
    pub fn new(endpoint: &str, retry: RetryPolicy) -> Result<Self> {
        Ok(ScoringClient {
            http: JsonClient::new(endpoint, retry)?,
        })
    }

    pub fn endpoint(&self) -> &str {
        self.http.endpoint()
    }

    /// Scores one premise/hypothesis pair, validating the result to [0, 1].
    pub fn score(&self, triple: &PromptTriple) -> Result<f64> {
        let resp: ScoreResponse = self.http.post("/v1/score", triple)?;
        check_range(self.endpoint(), resp.score)
    }

    /// Scores many pairs in one request; the reply must be positionally aligned.
    pub fn score_batch(&self, items: &[PromptTriple]) -> Result<Vec<f64>> {
        let req = BatchRequest {
            items: items.to_vec(),
        };
        let resp: BatchResponse = self.http.post("/v1/score_batch", &req)?;
        if resp.scores.len() != items.len() {
            return Err(Error::MalformedResponse {
                endpoint: self.endpoint().to_owned(),
                message: format!("{} scores for {} items", resp.scores.len(), items.len()),
            });
        }
        resp.scores
            .into_iter()
            .map(|s| check_range(self.endpoint(), s))
            .collect()
    }
}

/// Free-function form of [`ScoringClient::score`].
pub fn remote_score(triple: &PromptTriple, client: &ScoringClient) -> Result<f64> {
    client.score(triple)
}
