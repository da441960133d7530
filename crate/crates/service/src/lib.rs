//! Read-only HTTP JSON API over a completed report bundle.
//!
//! Every response body is canonical JSON (sorted keys, shortest round-trip
//! floats), so identical requests yield identical bytes. Errors share one
//! shape: `{"code": ..., "message": ..., "fields": [{"field", "reason"}]}`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get, post};
use axum::Router;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

use oncoprog::canonical;
use oncoprog::models::{
    predict, AlgorithmKind, EvalReport, FeatureValue, FieldIssue, ScenarioName, SchemaFeature,
    TrainedModel,
};
use oncoprog::pipeline::{PipelineError, ReportBundle};
use oncoprog::Label;

pub const PORT_ENV: &str = "ONCOPROG_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const API_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot load bundle: {0}")]
    Bundle(#[from] PipelineError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

/// Allowed CORS origins; `None` allows any origin.
#[derive(Debug, Clone, Default)]
pub struct CorsConfig {
    pub origins: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub fields: Vec<FieldIssue>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
                fields: Vec::new(),
            },
        }
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "MALFORMED_REQUEST", message)
    }

    fn missing_query(name: &str) -> Self {
        let mut e = Self::new(
            StatusCode::BAD_REQUEST,
            "MALFORMED_REQUEST",
            format!("query parameter `{name}` is required"),
        );
        e.body.fields.push(FieldIssue {
            field: name.to_string(),
            reason: "missing".into(),
        });
        e
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self.body)
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    match canonical::to_string(value) {
        Ok(body) => (
            status,
            [(
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/json"),
            )],
            body,
        )
            .into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn ok<T: Serialize>(value: &T) -> Response {
    json_response(StatusCode::OK, value)
}

type ApiResult = Result<Response, ApiError>;
type Params = Query<BTreeMap<String, String>>;

struct AppState {
    bundle: ReportBundle,
}

impl AppState {
    fn scenario(&self, name: &str) -> Result<ScenarioName, ApiError> {
        let unknown = || {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "UNKNOWN_SCENARIO",
                format!("unknown scenario `{name}`"),
            )
        };
        let s: ScenarioName = name.parse().map_err(|_| unknown())?;
        if self.bundle.models.keys().any(|(sc, _)| *sc == s) {
            Ok(s)
        } else {
            Err(unknown())
        }
    }

    /// Any model of the scenario; all cells of a scenario share one schema.
    fn scenario_schema(&self, scenario: ScenarioName) -> &[SchemaFeature] {
        let (_, model) = self
            .bundle
            .models
            .iter()
            .find(|((s, _), _)| *s == scenario)
            .expect("scenario checked");
        &model.schema.features
    }

    fn cell(
        &self,
        scenario: &str,
        algorithm: &str,
    ) -> Result<(&TrainedModel, &EvalReport), ApiError> {
        let unknown = || {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "UNKNOWN_MODEL",
                format!("no model for scenario `{scenario}` and algorithm `{algorithm}`"),
            )
        };
        let s: ScenarioName = scenario.parse().map_err(|_| unknown())?;
        let a: AlgorithmKind = algorithm.parse().map_err(|_| unknown())?;
        match (self.bundle.model(s, a), self.bundle.report(s, a)) {
            (Some(m), Some(r)) => Ok((m, r)),
            _ => Err(unknown()),
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    #[derive(Serialize)]
    struct Health<'a> {
        status: &'static str,
        api_version: &'static str,
        service_version: &'static str,
        tool_version: &'a str,
        bundle_digest: &'a str,
    }
    ok(&Health {
        status: "ok",
        api_version: API_VERSION,
        service_version: env!("CARGO_PKG_VERSION"),
        tool_version: &state.bundle.manifest.tool_version,
        bundle_digest: &state.bundle.digest,
    })
}

async fn models(State(state): State<Arc<AppState>>) -> Response {
    #[derive(Serialize)]
    struct Entry {
        scenario: ScenarioName,
        scenario_title: &'static str,
        algorithm: AlgorithmKind,
        algorithm_title: &'static str,
        features: usize,
    }
    let entries: Vec<Entry> = state
        .bundle
        .models
        .iter()
        .map(|((s, a), m)| Entry {
            scenario: *s,
            scenario_title: s.title(),
            algorithm: *a,
            algorithm_title: a.title(),
            features: m.schema.features.len(),
        })
        .collect();
    ok(&serde_json::json!({ "models": entries }))
}

async fn features(State(state): State<Arc<AppState>>, Query(q): Params) -> ApiResult {
    let name = q
        .get("scenario")
        .ok_or_else(|| ApiError::missing_query("scenario"))?;
    let scenario = state.scenario(name)?;
    Ok(ok(&serde_json::json!({
        "scenario": scenario,
        "title": scenario.title(),
        "features": state.scenario_schema(scenario),
    })))
}

async fn metrics(State(state): State<Arc<AppState>>, Query(q): Params) -> ApiResult {
    match (q.get("scenario"), q.get("algorithm")) {
        (Some(s), Some(a)) => Ok(ok(state.cell(s, a)?.1)),
        (None, None) => Ok(ok(&serde_json::json!({ "reports": state.bundle.metrics }))),
        (None, Some(_)) => Err(ApiError::missing_query("scenario")),
        (Some(_), None) => Err(ApiError::missing_query("algorithm")),
    }
}

async fn survival(State(state): State<Arc<AppState>>, Query(q): Params) -> ApiResult {
    let Some(name) = q.get("parameter") else {
        let names: Vec<&str> = state
            .bundle
            .survival_curves
            .iter()
            .map(|c| c.parameter.as_str())
            .collect();
        return Ok(ok(&serde_json::json!({ "parameters": names })));
    };
    let curves = state
        .bundle
        .survival_curves
        .iter()
        .find(|c| &c.parameter == name)
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "UNKNOWN_PARAMETER",
                format!("unknown parameter `{name}`"),
            )
        })?;
    Ok(ok(curves))
}

async fn enrichment(State(state): State<Arc<AppState>>, Query(q): Params) -> ApiResult {
    let Some(name) = q.get("library") else {
        return Ok(ok(
            &serde_json::json!({ "libraries": state.bundle.enrichment.keys().collect::<Vec<_>>() }),
        ));
    };
    let results = state.bundle.enrichment.get(name).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UNKNOWN_LIBRARY",
            format!("unknown library `{name}`"),
        )
    })?;
    Ok(ok(
        &serde_json::json!({ "library": name, "results": results }),
    ))
}

#[derive(Debug, Serialize)]
struct AlgorithmDetail<'a> {
    kind: AlgorithmKind,
    title: &'static str,
    hyperparameters: &'a Value,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct PredictResponse<'a> {
    label: Label,
    score: f64,
    scenario: &'a str,
    algorithm: AlgorithmDetail<'a>,
    metrics: &'a EvalReport,
    warnings: Vec<String>,
}

fn str_field<'a>(
    body: &'a serde_json::Map<String, Value>,
    name: &str,
) -> Result<&'a str, ApiError> {
    match body.get(name) {
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(ApiError::malformed(format!("`{name}` must be a string"))),
        None => Err(ApiError::malformed(format!("`{name}` is required"))),
    }
}

async fn predict_handler(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let value: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::malformed(format!("body is not valid JSON: {e}")))?;
    let Value::Object(body) = value else {
        return Err(ApiError::malformed("body must be a JSON object"));
    };
    let scenario = str_field(&body, "scenario")?;
    let algorithm = str_field(&body, "algorithm")?;
    let raw = match body.get("features") {
        Some(Value::Object(f)) => f,
        Some(_) => return Err(ApiError::malformed("`features` must be an object")),
        None => return Err(ApiError::malformed("`features` is required")),
    };
    let (model, report) = state.cell(scenario, algorithm)?;

    let mut issues = Vec::new();
    let mut features = BTreeMap::new();
    for (name, v) in raw {
        match v {
            Value::Number(n) => match n.as_f64() {
                Some(x) => {
                    features.insert(name.clone(), FeatureValue::Numeric(x));
                }
                None => issues.push(FieldIssue {
                    field: name.clone(),
                    reason: "number out of range".into(),
                }),
            },
            Value::String(s) => {
                features.insert(name.clone(), FeatureValue::Categorical(s.clone()));
            }
            _ => issues.push(FieldIssue {
                field: name.clone(),
                reason: "must be a number or a string".into(),
            }),
        }
    }
    let schema_issues: Vec<FieldIssue> = model
        .schema
        .validate(&features)
        .into_iter()
        .filter(|i| !issues.iter().any(|j| j.field == i.field))
        .collect();
    issues.extend(schema_issues);
    if !issues.is_empty() {
        issues.sort_by(|a, b| a.field.cmp(&b.field));
        let mut e = ApiError::new(
            StatusCode::BAD_REQUEST,
            "SCHEMA_VIOLATION",
            format!(
                "{} feature(s) do not match the `{scenario}` schema",
                issues.len()
            ),
        );
        e.body.fields = issues;
        return Err(e);
    }
    let prediction = predict(model, &features)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "SCHEMA_VIOLATION", e.to_string()))?;
    Ok(ok(&PredictResponse {
        label: prediction.label,
        score: prediction.score,
        scenario,
        algorithm: AlgorithmDetail {
            kind: model.kind,
            title: model.kind.title(),
            hyperparameters: &model.hyperparameters,
            seed: model.seed,
        },
        metrics: report,
        warnings: prediction.warnings,
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint")
}

fn cors_layer(cors: &CorsConfig) -> CorsLayer {
    let origin = match &cors.origins {
        None => AllowOrigin::any(),
        Some(list) => AllowOrigin::list(list.iter().filter_map(|o| HeaderValue::from_str(o).ok())),
    };
    CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

pub fn router(bundle: ReportBundle, cors: &CorsConfig) -> Router {
    let state = Arc::new(AppState { bundle });
    Router::new()
        .route("/api/health", get(health))
        .route("/api/models", get(models))
        .route("/api/features", get(features))
        .route("/api/predict", post(predict_handler))
        .route("/api/metrics", get(metrics))
        .route("/api/survival", get(survival))
        .route("/api/enrichment", get(enrichment))
        .fallback(not_found)
        .with_state(state)
        .layer(cors_layer(cors))
}

/// Answers 409 on every route; used when the bundle fails digest verification.
pub fn refusing_router(reason: String) -> Router {
    let reason = Arc::new(reason);
    Router::new()
        .route(
            "/{*path}",
            any(move || {
                let reason = reason.clone();
                async move {
                    ApiError::new(
                        StatusCode::CONFLICT,
                        "BUNDLE_DIGEST_MISMATCH",
                        reason.as_str(),
                    )
                }
            }),
        )
        .fallback(|| async {
            ApiError::new(
                StatusCode::CONFLICT,
                "BUNDLE_DIGEST_MISMATCH",
                "bundle failed verification",
            )
        })
}

/// Router for a bundle directory. A digest mismatch yields the refusing router;
/// any other load failure is an error.
pub fn router_for_dir(dir: &Path, cors: &CorsConfig) -> Result<Router, ServiceError> {
    match ReportBundle::load(dir) {
        Ok(bundle) => Ok(router(bundle, cors)),
        Err(e @ PipelineError::DigestMismatch(_)) => {
            log::error!("refusing to serve {}: {e}", dir.display());
            Ok(refusing_router(e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

pub async fn serve(dir: &Path, addr: SocketAddr, cors: &CorsConfig) -> Result<(), ServiceError> {
    let app = router_for_dir(dir, cors)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    log::info!("serving {} on http://{addr}", dir.display());
    axum::serve(listener, app)
        .await
        .map_err(ServiceError::Serve)
}
