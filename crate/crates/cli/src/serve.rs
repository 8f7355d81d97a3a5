//! Built-in providers over the process protocol, for wiring tests and as a
//! template for external backends.

use std::io::{BufRead, Write};

use ars_core::providers::{EmbeddingProvider, HashedEmbedder, LexiconSentiment, SentimentProvider};
use serde::Deserialize;
use serde_json::json;

use crate::failure::Failure;

#[derive(Deserialize)]
struct Request {
    op: String,
    text: String,
}

pub fn serve(dim: usize) -> Result<(), Failure> {
    if dim == 0 {
        return Err(Failure::input("--dim must be positive"));
    }
    let sentiment = LexiconSentiment::builtin();
    let embedder = HashedEmbedder::new(dim);
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let io = |e: std::io::Error| Failure::input(format!("stdout: {e}"));

    writeln!(out, "{}", json!({"proto": 1, "dim": dim})).map_err(io)?;
    out.flush().map_err(io)?;
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| Failure::input(format!("stdin: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Request =
            serde_json::from_str(&line).map_err(|e| Failure::input(format!("request: {e}")))?;
        // A failed lookup is answered with an error line, which the client
        // treats as a provider failure for that sentence only.
        let reply = match req.op.as_str() {
            "sentiment" => sentiment
                .sentiment(&req.text)
                .map(|p| json!({"positive": p.positive, "negative": p.negative})),
            "embed" => embedder
                .embed(&req.text)
                .map(|e| json!({"vector": e.values()})),
            other => return Err(Failure::input(format!("unknown op {other:?}"))),
        };
        let reply = reply.unwrap_or_else(|e| json!({"error": e.to_string()}));
        writeln!(out, "{reply}").map_err(io)?;
        out.flush().map_err(io)?;
    }
    Ok(())
}
