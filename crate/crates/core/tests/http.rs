mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use normcase::service::{http, ManualClock, Service};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Api {
    router: axum::Router,
    token: Option<String>,
}

impl Api {
    fn new() -> Api {
        let clock = Arc::new(ManualClock::new(common::start()));
        let svc = Service::in_memory(
            normcase::service::ServiceConfig::default(),
            common::bundle(),
            clock,
        );
        Api {
            router: http::router(Arc::new(svc)),
            token: None,
        }
    }

    async fn call(
        &self,
        method: Method,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value, String) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = &self.token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let res = self.router.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let raw = String::from_utf8(bytes.to_vec()).unwrap();
        let json = serde_json::from_str(&raw).unwrap_or(Value::Null);
        (status, json, raw)
    }

    async fn login(&mut self) {
        let creds = json!({"name": "officer", "secret": "secret-123"});
        let (s, body, raw) = self
            .call(Method::POST, "/api/register", Some(creds.clone()))
            .await;
        assert_eq!(s, StatusCode::CREATED);
        assert!(!raw.contains("argon2"), "{raw}");
        assert_eq!(body["role"], "officer");
        let (s, body, raw) = self.call(Method::POST, "/api/login", Some(creds)).await;
        assert_eq!(s, StatusCode::OK);
        assert!(
            !raw.contains("argon2") && !raw.contains("credential"),
            "{raw}"
        );
        self.token = Some(body["token"].as_str().unwrap().to_string());
    }
}

fn goal1_body() -> Value {
    let b = common::bundle();
    json!({
        "client": {"name": "Jansen", "kind": "civilian"},
        "answers": b.fixture("usertest-goal1").unwrap().answers,
    })
}

#[tokio::test]
async fn protected_routes_need_a_token() {
    let api = Api::new();
    let (s, body, _) = api.call(Method::GET, "/api/cases", None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(body["error"], "unauthorized");
    let (s, body, _) = api.call(Method::GET, "/api/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["cases"], 4);
}

#[tokio::test]
async fn bad_credentials_are_rejected() {
    let mut api = Api::new();
    api.login().await;
    let (s, body, _) = api
        .call(
            Method::POST,
            "/api/login",
            Some(json!({"name": "officer", "secret": "nope-nope"})),
        )
        .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(body["error"], "invalid_credentials");
    let (s, _, _) = api
        .call(
            Method::POST,
            "/api/register",
            Some(json!({"name": "officer", "secret": "other-123"})),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _, _) = api.call(Method::POST, "/api/logout", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _, _) = api.call(Method::GET, "/api/cases", None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn case_lifecycle_over_http() {
    let mut api = Api::new();
    api.login().await;

    let (s, case, _) = api
        .call(Method::POST, "/api/cases", Some(goal1_body()))
        .await;
    assert_eq!(s, StatusCode::CREATED);
    let id = case["id"].as_str().unwrap().to_string();
    assert_eq!(case["status"], "in_behandeling");
    assert_eq!(case["decisionTerm"], "2024-04-26");

    let (s, actions, _) = api
        .call(Method::GET, &format!("/api/cases/{id}/actions"), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    let allowed: Vec<&str> = actions["vervolg"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["status"] == "toegestaan")
        .map(|a| a["naam"].as_str().unwrap())
        .collect();
    assert_eq!(allowed, ["grant-iit-single-parent"]);

    let patch = json!({"answers": {"child-at-home": false}});
    let (s, res, _) = api
        .call(Method::PATCH, &format!("/api/cases/{id}"), Some(patch))
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(res["changedStatuses"].as_array().unwrap().len(), 2);

    let url = format!("/api/cases/{id}/actions/grant-iit-couple/execute");
    let (s, body, _) = api.call(Method::POST, &url, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "motivation_required");

    let url = format!("/api/cases/{id}/actions/grant-iit-single/execute");
    let (s, res, _) = api.call(Method::POST, &url, None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(res["violation"].is_null());
    assert_eq!(res["case"]["status"], "afgerond");
    let (s, body, _) = api.call(Method::POST, &url, None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(body["error"], "already_executed");

    let (s, _, _) = api
        .call(
            Method::POST,
            &format!("/api/cases/{id}/actions/nothing/execute"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _, _) = api.call(Method::GET, "/api/cases/Z-404", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn validation_errors_name_fields() {
    let mut api = Api::new();
    api.login().await;
    let mut body = goal1_body();
    body["answers"]["age"] = json!("old");
    body["client"]["name"] = json!("");
    let (s, res, _) = api.call(Method::POST, "/api/cases", Some(body)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(res["error"], "validation");
    assert_eq!(res["fields"], json!(["naam klant"]));

    let (s, res, _) = api
        .call(Method::POST, "/api/cases", Some(json!({"bogus": 1})))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(res["error"], "invalid_query");

    let (s, res, _) = api.call(Method::GET, "/api/cases?sort=colour", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(res["fields"], json!(["sort"]));
    let (s, _, _) = api
        .call(Method::GET, "/api/cases?from=yesterday", None)
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn list_and_open_actions() {
    let mut api = Api::new();
    api.login().await;
    let (_, page, _) = api
        .call(Method::GET, "/api/cases?sort=naam&order=desc", None)
        .await;
    let names: Vec<&str> = page["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["naam"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["UserTest4", "UserTest3", "UserTest2", "UserTest1"]);
    assert_eq!(page["total"], 4);
    let (_, open, _) = api.call(Method::GET, "/api/open-actions", None).await;
    assert_eq!(open.as_array().unwrap().len(), 2);
    let (_, page, _) = api
        .call(Method::GET, "/api/cases?status=afgerond", None)
        .await;
    assert_eq!(page["items"][0]["naam"], "UserTest1");
}

#[tokio::test]
async fn simulation_endpoints() {
    let mut api = Api::new();
    api.login().await;
    let (s, sim, _) = api
        .call(
            Method::POST,
            "/api/simulations",
            Some(json!({"fixture": "usertest-goal1"})),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED);
    let id = sim["id"].as_str().unwrap().to_string();

    let (s, tree, _) = api
        .call(
            Method::GET,
            &format!("/api/simulations/{id}/tree?depth=2"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(tree["nodes"][0]["depth"], 0);
    let (s, _, _) = api
        .call(
            Method::GET,
            &format!("/api/simulations/{id}/tree?depth=9"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, ex, _) = api
        .call(
            Method::GET,
            &format!("/api/simulations/{id}/tree/1/explain?depth=2"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert!(ex["summary"].is_string());

    let bad = json!({"text": "act grant-iit-single\n  actor officer\n  recipient applicant\n  conditioned by bogus\n"});
    let (s, res, _) = api
        .call(
            Method::POST,
            &format!("/api/simulations/{id}/rules/grant-iit-single/versions"),
            Some(bad),
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(res["error"], "invalid_rule");
    assert!(res["diagnostics"][0]["line"].is_number());

    for g in sim["rules"].as_array().unwrap() {
        let url = format!(
            "/api/simulations/{id}/rules/{}",
            g["ruleId"].as_str().unwrap()
        );
        let (s, _, _) = api
            .call(Method::PATCH, &url, Some(json!({"activeVersion": null})))
            .await;
        assert_eq!(s, StatusCode::OK);
    }
    let (_, tree, _) = api
        .call(
            Method::GET,
            &format!("/api/simulations/{id}/tree?depth=3"),
            None,
        )
        .await;
    assert_eq!(tree["nodes"].as_array().unwrap().len(), 1);
}
