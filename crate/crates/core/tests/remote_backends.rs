//! Remote codegen and refine backends against a scripted HTTP stub.
//! The stub answers each connection with the next canned response and
//! records the raw requests, so the tests can check both directions of
//! the wire protocol without a real model endpoint.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread::JoinHandle;

use base64::Engine;
use draftflow_core::{
    execute, BackendError, CodegenBackend, Limits, RefineBackend, RemoteBackend, RemoteRefine,
    RepairPolicy,
};

struct Scripted {
    url: String,
    handle: JoinHandle<Vec<String>>,
}

impl Scripted {
    /// Serves one canned (status, body) per connection, then stops.
    /// Returns the raw request text (headers and body) per connection.
    fn start(responses: Vec<(u16, String)>) -> Scripted {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let url = format!("http://{}/", listener.local_addr().expect("addr"));
        let handle = std::thread::spawn(move || {
            let mut seen = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().expect("accept");
                let request = read_request(&mut stream);
                seen.push(request);
                let reply = format!(
                    "HTTP/1.1 {status} {}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    if status == 200 { "OK" } else { "Error" },
                    body.len(),
                );
                stream.write_all(reply.as_bytes()).expect("write reply");
                let _ = stream.shutdown(std::net::Shutdown::Both);
            }
            seen
        });
        Scripted { url, handle }
    }

    fn finish(self) -> Vec<String> {
        self.handle.join().expect("stub thread")
    }
}

fn read_request(stream: &mut std::net::TcpStream) -> String {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end = loop {
        let n = stream.read(&mut chunk).expect("read request");
        assert!(n > 0, "connection closed mid-request");
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            break pos + 4;
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse().ok())?
        })
        .unwrap_or(0);
    while buf.len() < header_end + content_length {
        let n = stream.read(&mut chunk).expect("read body");
        assert!(n > 0, "connection closed mid-body");
        buf.extend_from_slice(&chunk[..n]);
    }
    String::from_utf8_lossy(&buf).to_string()
}

fn content_reply(code_block: &str) -> (u16, String) {
    let body = serde_json::json!({ "content": code_block }).to_string();
    (200, body)
}

#[test]
fn codegen_takes_the_fenced_program() {
    let stub = Scripted::start(vec![content_reply(
        "Sure, here you go:\n```draftscript\ncanvas 64 64\nrect r 4 4 20 20 fill=#112233\n```\ndone",
    )]);
    let backend = RemoteBackend::new(&stub.url, Some("tok"), "m1", RepairPolicy::default());
    let code = backend.generate("a rectangle").expect("generate");
    assert_eq!(code, "canvas 64 64\nrect r 4 4 20 20 fill=#112233\n");

    let requests = stub.finish();
    assert_eq!(requests.len(), 1);
    assert!(requests[0].contains("authorization: Bearer tok"), "{}", requests[0]);
    assert!(requests[0].contains("\"model\":\"m1\""));
    assert!(requests[0].contains("a rectangle"));
}

#[test]
fn compile_errors_trigger_a_repair_round() {
    let stub = Scripted::start(vec![
        content_reply("```draftscript\ncanvas 64\n```"),
        content_reply("```draftscript\ncanvas 64 64\n```"),
    ]);
    let backend = RemoteBackend::new(&stub.url, None, "m", RepairPolicy::default());
    let code = backend.generate("p").expect("second attempt lands");
    assert_eq!(code, "canvas 64 64\n");

    let requests = stub.finish();
    assert_eq!(requests.len(), 2);
    assert!(
        requests[1].contains("failed to compile"),
        "repair prompt should quote the failure: {}",
        requests[1]
    );
    assert!(requests[1].contains("expected HEIGHT"));
}

#[test]
fn attempts_budget_is_enforced() {
    let bad = || content_reply("```draftscript\nnot a program\n```");
    let stub = Scripted::start(vec![bad(), bad(), bad()]);
    let backend = RemoteBackend::new(&stub.url, None, "m", RepairPolicy { max_attempts: 3 });
    let err = backend.generate("p").expect_err("exhausts");
    match err {
        BackendError::ExhaustedAttempts {
            attempts,
            last_code,
            ..
        } => {
            assert_eq!(attempts, 3);
            assert_eq!(last_code, "not a program\n");
        }
        other => panic!("unexpected error: {other:?}"),
    }
    assert_eq!(stub.finish().len(), 3);
}

#[test]
fn a_reply_without_a_fence_fails_fast() {
    let stub = Scripted::start(vec![content_reply("canvas 64 64, no fences here")]);
    let backend = RemoteBackend::new(&stub.url, None, "m", RepairPolicy::default());
    let err = backend.generate("p").expect_err("no block");
    assert!(matches!(err, BackendError::NoCodeBlock));
    assert_eq!(stub.finish().len(), 1);
}

#[test]
fn http_errors_surface_as_bad_response() {
    let stub = Scripted::start(vec![(500, "{\"oops\":true}".to_string())]);
    let backend = RemoteBackend::new(&stub.url, None, "m", RepairPolicy::default());
    let err = backend.generate("p").expect_err("500");
    match err {
        BackendError::BadResponse(msg) => assert!(msg.contains("500"), "{msg}"),
        other => panic!("unexpected error: {other:?}"),
    }
    stub.finish();
}

#[test]
fn unreachable_endpoints_are_network_errors() {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let url = format!("http://{}/", listener.local_addr().expect("addr"));
    drop(listener);
    let backend = RemoteBackend::new(&url, None, "m", RepairPolicy::default());
    match backend.generate("p").expect_err("refused") {
        BackendError::Network(_) => {}
        other => panic!("unexpected error: {other:?}"),
    }
}

fn draft_image() -> draftflow_core::RasterImage {
    let (report, image) = execute(
        b"canvas 32 24 bg=#204060\nrect r 2 2 10 10 fill=#ffffff",
        &Limits::default(),
    );
    assert!(report.digest.is_some());
    image.expect("renders")
}

#[test]
fn refine_round_trips_the_image() {
    let draft = draft_image();
    let refined_png =
        base64::engine::general_purpose::STANDARD.encode(draft.to_png());
    let stub = Scripted::start(vec![(
        200,
        serde_json::json!({ "image_b64": refined_png }).to_string(),
    )]);
    let refiner = RemoteRefine::new(&stub.url, Some("tok2"));
    let out = refiner.refine("prompt", &draft).expect("refine");
    assert_eq!(out.digest(), draft.digest());

    let requests = stub.finish();
    assert_eq!(requests.len(), 1);
    assert!(requests[0].contains("authorization: Bearer tok2"));
    assert!(requests[0].contains("image_b64"));
    assert!(requests[0].contains("\"prompt\":\"prompt\""));
}

#[test]
fn refine_rejects_dimension_changes() {
    let draft = draft_image();
    let (_, other) = execute(b"canvas 16 16", &Limits::default());
    let wrong_png =
        base64::engine::general_purpose::STANDARD.encode(other.expect("renders").to_png());
    let stub = Scripted::start(vec![(
        200,
        serde_json::json!({ "image_b64": wrong_png }).to_string(),
    )]);
    let refiner = RemoteRefine::new(&stub.url, None);
    match refiner.refine("p", &draft).expect_err("dims differ") {
        BackendError::DimensionMismatch {
            want_w,
            want_h,
            got_w,
            got_h,
        } => {
            assert_eq!((want_w, want_h), (32, 24));
            assert_eq!((got_w, got_h), (16, 16));
        }
        other => panic!("unexpected error: {other:?}"),
    }
    stub.finish();
}

#[test]
fn refine_rejects_undecodable_payloads() {
    let draft = draft_image();
    let stub = Scripted::start(vec![(
        200,
        serde_json::json!({ "image_b64": "AAAA" }).to_string(),
    )]);
    let refiner = RemoteRefine::new(&stub.url, None);
    match refiner.refine("p", &draft).expect_err("junk image") {
        BackendError::BadResponse(_) => {}
        other => panic!("unexpected error: {other:?}"),
    }
    stub.finish();
}
