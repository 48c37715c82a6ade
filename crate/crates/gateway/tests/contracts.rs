//! Wire bodies round-trip against the golden fixtures without losing or
//! renaming fields.

use std::fs;
use std::path::PathBuf;

use semiroute_gateway::api::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

fn fixture(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn round_trip<T: Serialize + DeserializeOwned>(name: &str) -> T {
    let golden = fixture(name);
    let parsed: T = serde_json::from_value(golden.clone()).unwrap_or_else(|e| panic!("{name}: {e}"));
    assert_eq!(serde_json::to_value(&parsed).unwrap(), golden, "{name}");
    parsed
}

#[test]
fn inbound_bodies() {
    let req: TranslationRequest = round_trip("translate_request.json");
    assert_eq!(req.force_domain.unwrap().as_str(), "legal");
    let resp: TranslationResponse = round_trip("translate_response.json");
    assert_eq!(resp.routing.unwrap().margin, 0.375);
    let batch: BatchResponse = round_trip("batch_response.json");
    assert!(matches!(batch.responses[1], BatchItem::Error(_)));
    let health: HealthReport = round_trip("health.json");
    assert_eq!(health.index.domains.len(), 2);
}

#[test]
fn request_defaults() {
    let req: TranslationRequest = serde_json::from_value(json!({"text": "hi"})).unwrap();
    assert_eq!(req, TranslationRequest::new("hi"));
    assert_eq!(
        serde_json::to_value(&req).unwrap(),
        json!({"text": "hi", "source_lang": "eng_Latn", "target_lang": "gle_Latn"})
    );
    assert!(serde_json::from_value::<TranslationRequest>(json!({"source_lang": "eng_Latn"})).is_err());
}

#[test]
fn backend_contract() {
    let _: BackendRequest = round_trip("backend_request.json");
    let _: BackendResponse = round_trip("backend_response.json");
    let b: BackendBatchRequest = round_trip("backend_batch_request.json");
    assert_eq!(b.items.len(), 2);
    let r: BackendBatchResponse = round_trip("backend_batch_response.json");
    assert_eq!(r.translations, ["x", "y"]);
}

#[test]
fn sidecar_contract() {
    let _: EmbedRequest = round_trip("embed_request.json");
    let e: EmbedResponse = round_trip("embed_response.json");
    assert_eq!(e.vectors[0].len(), e.dim);
    let _: ClassifyRequest = round_trip("classify_request.json");
    let c: ClassifyResponse = round_trip("classify_response.json");
    assert!(c.scores[0].iter().all(|s| (0.0..=1.0).contains(s)));
}
