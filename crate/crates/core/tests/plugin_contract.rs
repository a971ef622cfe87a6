mod common;

use std::time::Duration;

use serde_json::{json, Value};

use forecast_env::models::{predict_time_series, ExternalEndpoint, ExternalRegistry, ForecastModelId, ModelError};
use forecast_env::orchestrator::{run_episode, EpisodeConfig, ScriptedConfig, ScriptedPolicy, TurnOutput};
use forecast_env::serve::serve_tools;
use forecast_env::stub::{self, StubResponse, StubServer};
use forecast_env::toolkit::ToolConfig;

fn registry(name: &str, url: String) -> ExternalRegistry {
    let mut r = ExternalRegistry::default();
    r.register(name, ExternalEndpoint::new(url));
    r
}

fn external(name: &str) -> ForecastModelId {
    ForecastModelId::External { endpoint: name.into() }
}

#[test]
fn echo_endpoint_receives_history_and_returns_horizon_rows() {
    let server = stub::echo_forecast(0.5).unwrap();
    let w = common::golden_window();
    let f = predict_time_series(&external("echo"), &w, 4, &registry("echo", server.url())).unwrap();
    let last = *w.target_history().row(w.lookback() - 1).iter().next().unwrap();
    assert_eq!(f.rows(), vec![vec![last + 0.5], vec![last + 1.0], vec![last + 1.5], vec![last + 2.0]]);

    let sent: Value = serde_json::from_str(&server.requests()[0].body).unwrap();
    assert_eq!(sent["horizon"], 4);
    assert_eq!(sent["channel_names"], json!(["OT"]));
    assert_eq!(sent["history"].as_array().unwrap().len(), 48);
    assert_eq!(sent["frequency"], "1h");
}

#[test]
fn status_codes_map_to_typed_errors() {
    let w = common::golden_window();
    for (code, contract) in [(400u16, true), (422, true), (500, false), (503, false)] {
        let server = stub::fixed_status(code).unwrap();
        let err = predict_time_series(&external("m"), &w, 3, &registry("m", server.url())).unwrap_err();
        match err {
            ModelError::Contract { status, .. } if contract => assert_eq!(status, code),
            ModelError::Upstream { status, .. } if !contract => assert_eq!(status, code),
            other => panic!("{code}: {other:?}"),
        }
    }
}

#[test]
fn malformed_bodies_and_wrong_shapes_are_rejected() {
    let w = common::golden_window();
    let cases = [
        (json!({"nope": 1}), "malformed"),
        (json!({"forecast": [[1.0], [2.0, 3.0], [1.0]], "model_name": "ragged"}), "malformed"),
        (json!({"forecast": [[1.0], [2.0]], "model_name": "short"}), "shape"),
        (json!({"forecast": [[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]], "model_name": "wide"}), "shape"),
    ];
    for (body, kind) in cases {
        let server = StubServer::start(move |_| StubResponse::json(200, &body)).unwrap();
        let err = predict_time_series(&external("m"), &w, 3, &registry("m", server.url())).unwrap_err();
        match (kind, &err) {
            ("malformed", ModelError::Malformed { .. }) => {}
            ("shape", ModelError::ShapeMismatch { expected, .. }) => assert_eq!(*expected, (3, 1)),
            _ => panic!("{kind}: {err:?}"),
        }
    }
}

#[test]
fn slow_endpoint_times_out() {
    let server = StubServer::start(|_| {
        std::thread::sleep(Duration::from_millis(800));
        StubResponse::json(200, &json!({"forecast": [], "model_name": "slow"}))
    })
    .unwrap();
    let mut reg = ExternalRegistry::default();
    reg.register("slow", ExternalEndpoint::new(server.url()).with_timeout(Duration::from_millis(100)));
    let err = predict_time_series(&external("slow"), &common::golden_window(), 3, &reg).unwrap_err();
    assert!(matches!(err, ModelError::Timeout { .. } | ModelError::Transport { .. }), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let url = {
        let s = stub::fixed_status(200).unwrap();
        s.url()
    };
    let err = predict_time_series(&external("gone"), &common::golden_window(), 3, &registry("gone", url)).unwrap_err();
    assert!(matches!(err, ModelError::Transport { .. } | ModelError::Timeout { .. }), "{err:?}");
}

#[test]
fn serve_tools_round_trips_through_the_plugin_client() {
    let server = serve_tools("127.0.0.1:0", ToolConfig::default(), ExternalRegistry::default()).unwrap();
    let w = common::golden_window();
    let reg = registry("served", format!("{}/predict_time_series?model=seasonal_naive:24", server.url()));
    let remote = predict_time_series(&external("served"), &w, 12, &reg).unwrap();
    let local = predict_time_series(&ForecastModelId::SeasonalNaive { period: 24 }, &w, 12, &ExternalRegistry::default()).unwrap();
    assert_eq!(remote.values, local.values);

    let registry_body: Value = ureq::get(&format!("{}/registry", server.url())).call().unwrap().into_json().unwrap();
    let names: Vec<&str> = registry_body.as_array().unwrap().iter().map(|t| t["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"predict_time_series"));
    assert!(names.contains(&"extract_basic_statistics"));

    let history: Vec<Vec<f64>> = w.history.rows().into_iter().map(|r| r.to_vec()).collect();
    let body = json!({"history": history, "channel_names": w.channel_names, "seasonal_period": 24});
    let stats: Value = ureq::post(&format!("{}/tools/extract_basic_statistics", server.url()))
        .send_json(body)
        .unwrap()
        .into_json()
        .unwrap();
    assert_eq!(stats["tool_name"], "extract_basic_statistics");
    match ureq::post(&format!("{}/tools/unknown", server.url())).send_json(json!({})) {
        Err(ureq::Error::Status(404, _)) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn episodes_can_route_predictions_to_an_external_model() {
    let server = stub::echo_forecast(0.0).unwrap();
    let config = EpisodeConfig {
        externals: registry("echo", server.url()),
        ..EpisodeConfig::default()
    };
    let policy = ScriptedPolicy::new(ScriptedConfig {
        fixed_model: Some(external("echo")),
        refine: false,
        ..ScriptedConfig::default()
    });
    let w = common::golden_window();
    let trace = run_episode(&w, &policy, &config);
    assert!(trace.completed(), "{:?}", trace.outcome);
    assert!(matches!(&trace.turns[1].outputs[0], TurnOutput::Forecast { .. }));
    let last = w.target_history()[[w.lookback() - 1, 0]];
    assert!(trace.final_forecast.unwrap().iter().all(|r| r[0] == last));
    assert_eq!(server.requests().len(), 1);
}
