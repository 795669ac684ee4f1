use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use trates::http::{endpoint, HttpConfig, HttpGateway};
use trates_core::llm::{question_generation_request, Gateway, LlmError};

struct Captured {
    head: String,
    body: String,
}

/// Serves `replies` (status, body) in order, one per connection.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Captured>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    std::thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Captured {
                head,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn ok(content: &str) -> (u16, String) {
    (200, serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string())
}

fn gateway(url: &str, retries: u32) -> HttpGateway {
    HttpGateway::new(HttpConfig {
        url: endpoint(url),
        api_key: Some("secret-key".into()),
        max_retries: retries,
        backoff: Duration::from_millis(5),
        timeout: Duration::from_secs(10),
    })
}

fn req() -> trates_core::llm::CompletionRequest {
    question_generation_request("starling-7b", "organization", "8th", "Score 6: clear structure.")
}

#[test]
fn sends_chat_completion_and_reads_content() {
    let (url, seen) = serve(vec![ok("1- How would you rate the introduction?")]);
    let text = gateway(&url, 0).complete(&req()).unwrap();
    assert_eq!(text, "1- How would you rate the introduction?");
    let seen = seen.lock().unwrap();
    assert!(seen[0].head.starts_with("POST /v1/chat/completions"));
    assert!(seen[0].head.to_ascii_lowercase().contains("authorization: bearer secret-key"));
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["model"], "starling-7b");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
    assert_eq!(body["messages"][0]["role"], "system");
    assert!(body["messages"][1]["content"].as_str().unwrap().contains("Score 6: clear structure."));
}

#[test]
fn retries_transient_failures_with_backoff() {
    let (url, seen) = serve(vec![(503, "busy".into()), (429, "slow down".into()), ok("High")]);
    assert_eq!(gateway(&url, 3).complete(&req()).unwrap(), "High");
    assert_eq!(seen.lock().unwrap().len(), 3);

    let (url, _) = serve(vec![(500, "a".into()), (500, "b".into())]);
    match gateway(&url, 1).complete(&req()) {
        Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_errors_and_empty_bodies_are_not_retried() {
    let (url, seen) = serve(vec![(400, "bad model".into())]);
    match gateway(&url, 3).complete(&req()) {
        Err(LlmError::Status { status, body }) => assert_eq!((status, body.as_str()), (400, "bad model")),
        other => panic!("{other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 1);

    let (url, _) = serve(vec![ok("   ")]);
    assert_eq!(gateway(&url, 3).complete(&req()), Err(LlmError::EmptyResponse));
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let r = gateway(&format!("http://127.0.0.1:{port}"), 1).complete(&req());
    assert!(matches!(r, Err(LlmError::Transport { attempts: 2, .. })), "{r:?}");
}

#[test]
fn endpoint_normalization() {
    assert_eq!(endpoint("http://h/v1/"), "http://h/v1/chat/completions");
    assert_eq!(endpoint("http://h/v1/chat/completions"), "http://h/v1/chat/completions");
}
