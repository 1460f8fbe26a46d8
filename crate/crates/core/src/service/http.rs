//! axum routes over [`Service`]. Every route except register, login and
//! health needs `Authorization: Bearer <token>`.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::request::Parts;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::json;

use super::{CasePatch, CaseQuery, CreateCase, ScenarioSource, Service, ServiceError, User};
use crate::dsl::SourceRef;

pub type AppState = Arc<Service>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body())).into_response()
    }
}

fn bad_body(e: JsonRejection) -> ServiceError {
    ServiceError::InvalidQuery {
        field: "body",
        value: e.body_text(),
    }
}

fn bad_query(e: QueryRejection) -> ServiceError {
    ServiceError::InvalidQuery {
        field: "query",
        value: e.body_text(),
    }
}

/// The authenticated caller.
pub struct AuthUser(pub User);

impl FromRequestParts<AppState> for AuthUser {
    type Rejection = ServiceError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .map(|v| v.strip_prefix("Bearer ").unwrap_or(v).trim());
        state.authenticate(token).map(AuthUser)
    }
}

type ApiResult = Result<Response, ServiceError>;

fn ok<T: serde::Serialize>(v: T) -> ApiResult {
    Ok(Json(v).into_response())
}

fn created<T: serde::Serialize>(v: T) -> ApiResult {
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

pub fn router(service: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/logout", post(logout))
        .route("/api/cases", post(create_case).get(list_cases))
        .route("/api/cases/{id}", get(get_case).patch(edit_case))
        .route("/api/cases/{id}/actions", get(case_actions))
        .route("/api/cases/{id}/actions/{act}/execute", post(execute))
        .route("/api/open-actions", get(open_actions))
        .route("/api/sources", get(list_sources).post(add_source))
        .route("/api/simulations", post(create_simulation))
        .route("/api/simulations/{id}", get(get_simulation))
        .route(
            "/api/simulations/{id}/rules/{rule}",
            axum::routing::patch(toggle_rule),
        )
        .route(
            "/api/simulations/{id}/rules/{rule}/versions",
            post(add_version),
        )
        .route("/api/simulations/{id}/tree", get(tree))
        .route("/api/simulations/{id}/tree/{node}/explain", get(explain))
        .with_state(service)
}

async fn health(State(svc): State<AppState>) -> ApiResult {
    let (cases, users, simulations) = svc.counts();
    ok(json!({
        "status": "ok",
        "spec": svc.bundle().text.origin,
        "acts": svc.bundle().spec.acts.len(),
        "duties": svc.bundle().spec.duties.len(),
        "cases": cases,
        "users": users,
        "simulations": simulations,
    }))
}

#[derive(Deserialize)]
struct Credentials {
    name: String,
    secret: String,
}

async fn register(
    State(svc): State<AppState>,
    body: Result<Json<Credentials>, JsonRejection>,
) -> ApiResult {
    let Json(c) = body.map_err(bad_body)?;
    let svc2 = svc.clone();
    let user = tokio::task::spawn_blocking(move || svc2.register(&c.name, &c.secret))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))??;
    created(user)
}

async fn login(
    State(svc): State<AppState>,
    body: Result<Json<Credentials>, JsonRejection>,
) -> ApiResult {
    let Json(c) = body.map_err(bad_body)?;
    let svc2 = svc.clone();
    let token = tokio::task::spawn_blocking(move || svc2.login(&c.name, &c.secret))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))??;
    let user = svc.authenticate(Some(&token))?;
    ok(json!({ "token": token, "user": super::UserView::from(&user) }))
}

async fn logout(
    State(svc): State<AppState>,
    parts: axum::http::HeaderMap,
    AuthUser(_): AuthUser,
) -> ApiResult {
    let token = parts
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .map(|v| v.strip_prefix("Bearer ").unwrap_or(v).trim().to_string())
        .unwrap_or_default();
    svc.logout(&token);
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn create_case(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    body: Result<Json<CreateCase>, JsonRejection>,
) -> ApiResult {
    let Json(input) = body.map_err(bad_body)?;
    created(svc.create_case(&user, input)?)
}

async fn list_cases(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult {
    let Query(q) = query.map_err(bad_query)?;
    let date = |key: &'static str| -> Result<Option<NaiveDate>, ServiceError> {
        match q.get(key).map(String::as_str) {
            None | Some("") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| ServiceError::InvalidQuery {
                field: key,
                value: s.into(),
            }),
        }
    };
    let query = CaseQuery {
        status: q.get("status").cloned(),
        from: date("from")?,
        to: date("to")?,
        q: q.get("q").cloned(),
        sort: q.get("sort").cloned().filter(|s| !s.is_empty()),
        order: q.get("order").cloned().filter(|s| !s.is_empty()),
    };
    ok(svc.list_cases(&user, &query)?)
}

async fn get_case(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<String>,
) -> ApiResult {
    ok(svc.get_case(&user, &id)?)
}

async fn edit_case(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<String>,
    body: Result<Json<CasePatch>, JsonRejection>,
) -> ApiResult {
    let Json(patch) = body.map_err(bad_body)?;
    ok(svc.edit_case(&user, &id, patch)?)
}

async fn case_actions(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<String>,
) -> ApiResult {
    ok(svc.case_actions(&user, &id)?)
}

#[derive(Deserialize, Default)]
struct ExecuteBody {
    #[serde(default)]
    motivation: Option<String>,
}

async fn execute(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, act)): Path<(String, String)>,
    body: Option<Json<ExecuteBody>>,
) -> ApiResult {
    let body = body.map(|Json(b)| b).unwrap_or_default();
    ok(svc.execute_action(&user, &id, &act, body.motivation.as_deref())?)
}

async fn open_actions(State(svc): State<AppState>, AuthUser(user): AuthUser) -> ApiResult {
    ok(svc.open_actions(&user)?)
}

async fn list_sources(State(svc): State<AppState>, AuthUser(_): AuthUser) -> ApiResult {
    ok(svc.list_sources())
}

async fn add_source(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    body: Result<Json<SourceRef>, JsonRejection>,
) -> ApiResult {
    let Json(source) = body.map_err(bad_body)?;
    created(svc.add_source(&user, source)?)
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct NewSimulation {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    case_id: Option<String>,
    #[serde(default)]
    fixture: Option<String>,
}

async fn create_simulation(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    body: Option<Json<NewSimulation>>,
) -> ApiResult {
    let b = body.map(|Json(b)| b).unwrap_or_default();
    let source = match (b.case_id, b.fixture) {
        (Some(c), None) => ScenarioSource::Case(c),
        (None, Some(f)) => ScenarioSource::Fixture(f),
        (None, None) => ScenarioSource::Blank,
        (Some(_), Some(_)) => {
            return Err(ServiceError::Validation(vec![
                "caseId".into(),
                "fixture".into(),
            ]))
        }
    };
    created(svc.create_scenario(&user, source, b.label)?)
}

async fn get_simulation(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<String>,
) -> ApiResult {
    ok(svc.get_scenario(&user, &id)?)
}

#[derive(Deserialize)]
struct VersionBody {
    text: String,
}

async fn add_version(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, rule)): Path<(String, String)>,
    body: Result<Json<VersionBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body.map_err(bad_body)?;
    created(svc.add_rule_version(&user, &id, &rule, &b.text)?)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ToggleBody {
    active_version: Option<String>,
}

async fn toggle_rule(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, rule)): Path<(String, String)>,
    body: Result<Json<ToggleBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body.map_err(bad_body)?;
    ok(svc.toggle_rule(&user, &id, &rule, b.active_version.as_deref())?)
}

fn depth_param(q: &HashMap<String, String>) -> Result<Option<usize>, ServiceError> {
    match q.get("depth") {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| ServiceError::InvalidQuery {
            field: "depth",
            value: s.clone(),
        }),
    }
}

async fn tree(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<String>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult {
    let Query(q) = query.map_err(bad_query)?;
    let depth = depth_param(&q)?.unwrap_or(svc.config().max_tree_depth);
    let tree = tokio::task::spawn_blocking(move || svc.scenario_tree(&user, &id, depth))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))??;
    ok(tree)
}

async fn explain(
    State(svc): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, node)): Path<(String, String)>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult {
    let Query(q) = query.map_err(bad_query)?;
    let depth = depth_param(&q)?;
    let node: usize = node
        .parse()
        .map_err(|_| ServiceError::NotFound(format!("node `{node}`")))?;
    let ex = tokio::task::spawn_blocking(move || svc.explain_node(&user, &id, node, depth))
        .await
        .map_err(|e| ServiceError::Storage(e.to_string()))??;
    ok(ex)
}
