//! In-process service tests: wire shapes, error codes, the in-flight
//! cap, and the statelessness and concurrency guarantees.

use std::net::SocketAddr;
use std::time::Duration;

use draftflow_cli::server::{bind, ServiceConfig};
use draftflow_core::{execute, Limits};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct TestServer {
    addr: SocketAddr,
    runtime: Option<tokio::runtime::Runtime>,
}

impl TestServer {
    fn start(config: ServiceConfig) -> TestServer {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("runtime");
        let (addr, future) = runtime.block_on(bind(&config)).expect("bind");
        runtime.spawn(async {
            let _ = future.await;
        });
        TestServer {
            addr,
            runtime: Some(runtime),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}

fn config_on_port_zero() -> ServiceConfig {
    ServiceConfig {
        bind_addr: Some("127.0.0.1:0".to_string()),
        ..ServiceConfig::default()
    }
}

fn client() -> reqwest::blocking::Client {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(30))
        .build()
        .expect("client")
}

#[test]
fn healthz_answers_ok() {
    let server = TestServer::start(config_on_port_zero());
    let body: serde_json::Value = client()
        .get(server.url("/healthz"))
        .send()
        .expect("send")
        .json()
        .expect("json");
    assert_eq!(body, serde_json::json!({ "ok": true }));
}

#[test]
fn check_reports_the_compile_taxonomy() {
    let server = TestServer::start(config_on_port_zero());
    let http = client();

    let ok: serde_json::Value = http
        .post(server.url("/v1/check"))
        .json(&serde_json::json!({ "code": "canvas 64 64" }))
        .send()
        .expect("send")
        .json()
        .expect("json");
    assert_eq!(ok["status"], "compiled");
    assert!(ok.get("error").is_none());

    let bad: serde_json::Value = http
        .post(server.url("/v1/check"))
        .json(&serde_json::json!({ "code": "canvas 64 64\nrect r 0 0 -3 5" }))
        .send()
        .expect("send")
        .json()
        .expect("json");
    assert_eq!(bad["status"], "compile_failed");
    assert_eq!(bad["error_kind"], "validation");
    assert!(bad["error"]
        .as_str()
        .expect("detail")
        .contains("w must be positive"));
}

#[test]
fn malformed_bodies_get_400_with_a_message() {
    let server = TestServer::start(config_on_port_zero());
    let http = client();
    for (path, body) in [
        ("/v1/check", "this is not json"),
        ("/v1/render", "{\"code\": 5}"),
        ("/v1/pipeline", "{}"),
    ] {
        let resp = http
            .post(server.url(path))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .expect("send");
        assert_eq!(resp.status().as_u16(), 400, "{path}");
        let parsed: serde_json::Value = resp.json().expect("json");
        assert!(parsed["error"].as_str().expect("message").len() > 0);
    }
}

#[test]
fn render_matches_local_execution_and_itself() {
    let server = TestServer::start(config_on_port_zero());
    let http = client();
    let code = "canvas 48 48 bg=#123456\ncircle c 24 24 10 fill=#ffffff";

    let (local_report, _) = execute(code.as_bytes(), &Limits::default());
    let want = local_report.digest.expect("local digest");

    let mut digests = Vec::new();
    for _ in 0..2 {
        let body: serde_json::Value = http
            .post(server.url("/v1/render"))
            .json(&serde_json::json!({ "code": code }))
            .send()
            .expect("send")
            .json()
            .expect("json");
        assert_eq!(body["status"], "rendered");
        digests.push(body["digest"].as_str().expect("digest").to_string());

        use base64::Engine;
        let ppm = base64::engine::general_purpose::STANDARD
            .decode(body["image_b64_ppm"].as_str().expect("ppm"))
            .expect("base64");
        let image = draftflow_core::RasterImage::from_ppm(&ppm).expect("decodes");
        assert_eq!(image.digest(), want, "wire bytes rebuild the same image");
    }
    assert!(digests.iter().all(|d| *d == want));
}

#[test]
fn render_failures_are_still_200() {
    let server = TestServer::start(config_on_port_zero());
    let resp = client()
        .post(server.url("/v1/render"))
        .json(&serde_json::json!({ "code": "nope" }))
        .send()
        .expect("send");
    assert_eq!(resp.status().as_u16(), 200);
    let body: serde_json::Value = resp.json().expect("json");
    assert_eq!(body["status"], "compile_failed");
    assert_eq!(body["error_kind"], "parse");
    assert!(body.get("digest").is_none());
}

#[test]
fn unknown_backends_get_400() {
    let server = TestServer::start(config_on_port_zero());
    let http = client();
    for (body, needle) in [
        (
            serde_json::json!({ "prompt": "x", "codegen": "quantum" }),
            "unknown codegen",
        ),
        (
            serde_json::json!({ "prompt": "x", "codegen": "remote" }),
            "not configured",
        ),
        (
            serde_json::json!({ "prompt": "x", "codegen": "template", "refine": "blur" }),
            "unknown refine",
        ),
    ] {
        let resp = http
            .post(server.url("/v1/pipeline"))
            .json(&body)
            .send()
            .expect("send");
        assert_eq!(resp.status().as_u16(), 400);
        let parsed: serde_json::Value = resp.json().expect("json");
        assert!(
            parsed["error"].as_str().expect("msg").contains(needle),
            "{parsed}"
        );
    }
}

fn slow_code() -> String {
    let mut code = String::from("canvas 4096 4096\n");
    for i in 0..4000 {
        code.push_str(&format!("rect r{i} 0 0 4096 4096 fill=#00{:04x}\n", i % 0xffff));
    }
    code
}

#[test]
fn over_capacity_requests_get_429_and_recover() {
    let config = ServiceConfig {
        bind_addr: Some("127.0.0.1:0".to_string()),
        max_in_flight: Some(1),
        limits: Limits {
            wall_timeout_ms: 1500,
            ..Limits::default()
        },
        ..ServiceConfig::default()
    };
    let server = TestServer::start(config);
    let url_render = server.url("/v1/render");
    let url_check = server.url("/v1/check");

    let slow = slow_code();
    let worker = std::thread::spawn(move || {
        let body: serde_json::Value = client()
            .post(url_render)
            .json(&serde_json::json!({ "code": slow }))
            .send()
            .expect("send slow")
            .json()
            .expect("json");
        body["status"].as_str().expect("status").to_string()
    });

    std::thread::sleep(Duration::from_millis(400));
    let resp = client()
        .post(&url_check)
        .json(&serde_json::json!({ "code": "canvas 64 64" }))
        .send()
        .expect("send fast");
    assert_eq!(resp.status().as_u16(), 429, "in-flight cap of 1 is taken");

    let slow_status = worker.join().expect("worker");
    assert!(
        slow_status == "rendered" || slow_status == "render_failed",
        "slow request finished as {slow_status}"
    );

    let resp = client()
        .post(&url_check)
        .json(&serde_json::json!({ "code": "canvas 64 64" }))
        .send()
        .expect("send retry");
    assert_eq!(resp.status().as_u16(), 200, "capacity freed after completion");
}

#[test]
fn identical_in_flight_renders_agree_with_the_serial_result() {
    let server = TestServer::start(config_on_port_zero());
    let code = "canvas 200 200 bg=#0a0a0a\naxes ax 20 20 160 160 -3 3 -2 2\nplot f ax \"sin(x*3)\"\nbar b ax 1 0.5 1.5 fill=#77aaff label=\"b\"";

    let (report, _) = execute(code.as_bytes(), &Limits::default());
    let serial = report.digest.expect("serial digest");

    let threads: Vec<_> = (0..8)
        .map(|_| {
            let url = server.url("/v1/render");
            let code = code.to_string();
            std::thread::spawn(move || {
                let body: serde_json::Value = client()
                    .post(url)
                    .json(&serde_json::json!({ "code": code }))
                    .send()
                    .expect("send")
                    .json()
                    .expect("json");
                body["digest"].as_str().expect("digest").to_string()
            })
        })
        .collect();
    for t in threads {
        assert_eq!(t.join().expect("thread"), serial);
    }
}

fn scrub(mut body: serde_json::Value) -> serde_json::Value {
    if let Some(obj) = body.as_object_mut() {
        for key in ["parse_ms", "render_ms"] {
            if obj.contains_key(key) {
                obj[key] = 0.into();
            }
        }
    }
    body
}

#[test]
fn shuffled_replay_of_a_request_log_gets_identical_bodies() {
    let server = TestServer::start(config_on_port_zero());
    let http = client();

    let log: Vec<(&str, serde_json::Value)> = vec![
        ("/v1/check", serde_json::json!({ "code": "canvas 32 32" })),
        ("/v1/render", serde_json::json!({ "code": "canvas 32 32 bg=#445566" })),
        (
            "/v1/pipeline",
            serde_json::json!({ "prompt": "poster titled 'A' with text 'b'", "codegen": "template", "refine": "identity" }),
        ),
        ("/v1/check", serde_json::json!({ "code": "garbage" })),
        (
            "/v1/render",
            serde_json::json!({ "code": "canvas 40 40\ngrid g 5 5 30 30 3 3 stroke=#ff0000" }),
        ),
        (
            "/v1/pipeline",
            serde_json::json!({ "prompt": "bar chart of a:1, b:2", "codegen": "template" }),
        ),
        ("/v1/check", serde_json::json!({ "code": "canvas 9999999 2" })),
    ];

    let run = |order: &[usize]| -> Vec<(usize, serde_json::Value)> {
        order
            .iter()
            .map(|&i| {
                let (path, payload) = &log[i];
                let body: serde_json::Value = http
                    .post(server.url(path))
                    .json(payload)
                    .send()
                    .expect("send")
                    .json()
                    .expect("json");
                (i, scrub(body))
            })
            .collect()
    };

    let forward: Vec<usize> = (0..log.len()).collect();
    let mut shuffled = forward.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(99));

    let mut first: Vec<_> = run(&forward);
    let mut second: Vec<_> = run(&shuffled);
    first.sort_by_key(|(i, _)| *i);
    second.sort_by_key(|(i, _)| *i);
    assert_eq!(first, second);
}
