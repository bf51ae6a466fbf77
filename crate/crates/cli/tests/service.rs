use std::collections::BTreeSet;
use std::io::{Cursor, Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use nbprobe::batch::{analyze_notebook, BatchOptions};
use nbprobe::protocol::{ErrorCode, WireEvent, WireResponse};
use nbprobe::transport::{serve_lines, HttpServer};
use nbprobe::Service;
use nbprobe_core::analyses::{AnalysisId, KBound, KnowledgeBase};
use nbprobe_core::notebook::{EventKind, Notebook};
use nbprobe_testkit::ipynb::ipynb;
use nbprobe_testkit::LEAKY_PIPELINE;

fn loaded(service: &Service, session: &str) {
    assert!(!service.handle(&WireEvent::new(session, EventKind::Open)).is_error());
    for (i, code) in LEAKY_PIPELINE.iter().enumerate() {
        let e = WireEvent::new(session, EventKind::Create).cell((i + 1).to_string()).code(*code);
        assert!(!service.handle(&e).is_error());
    }
}

fn leak_whatif(session: &str) -> WireEvent {
    WireEvent::new(session, EventKind::Whatif).cell("1").analyses([AnalysisId::DataLeakage]).k(KBound::Infinite)
}

fn error_code(r: &WireResponse) -> ErrorCode {
    match r {
        WireResponse::Error { error, .. } => error.code,
        other => panic!("expected an error, got {other:?}"),
    }
}

#[test]
fn open_then_creates_then_leak_whatif() {
    let service = Service::new(KnowledgeBase::default());
    loaded(&service, "nb");
    let r = service.handle(&leak_whatif("nb"));
    let report = r.report().expect("a report");
    assert_eq!(report.warnings.len(), 1);
    assert_eq!(report.warnings[0].cell, "5");
    assert_eq!(report.warnings[0].path, ["1", "2", "4", "5"]);
    assert!(report.elapsed_ms < 1000.0);
}

#[test]
fn whatif_on_unknown_session_fails() {
    let service = Service::new(KnowledgeBase::default());
    let r = service.handle(&leak_whatif("nope"));
    assert_eq!(error_code(&r), ErrorCode::UnknownSession);
    let WireResponse::Error { error, .. } = r else { unreachable!() };
    assert_eq!(error.message, "unknown session");
}

#[test]
fn execute_acknowledges_with_maintenance() {
    let service = Service::new(KnowledgeBase::default());
    loaded(&service, "nb");
    let exec = WireEvent::new("nb", EventKind::Execute).cell("1");
    let WireResponse::Ack { maintenance: Some(first), .. } = service.handle(&exec) else { panic!() };
    let WireResponse::Ack { maintenance: Some(second), .. } = service.handle(&exec) else { panic!() };
    assert_eq!(first.cell, "1");
    assert!(second.cache_hit);
    assert_eq!(second.parses, first.parses);
    assert_eq!(second.maintains, 2);
}

#[test]
fn malformed_events_leave_sessions_untouched() {
    let service = Service::new(KnowledgeBase::default());
    loaded(&service, "nb");
    let before = service.handle(&leak_whatif("nb")).without_timing();
    for bad in [
        "{",
        "[]",
        r#"{"session":"nb","event":"explode"}"#,
        r#"{"session":"nb","event":"whatif","cell_id":"1","k":"lots"}"#,
        r#"{"session":"nb","event":"whatif","cell_id":"1","extra":1}"#,
    ] {
        let reply: WireResponse = serde_json::from_str(&service.handle_json(bad)).unwrap();
        assert_eq!(error_code(&reply), ErrorCode::Malformed, "{bad}");
    }
    let wrong_place = WireEvent::new("nb", EventKind::Execute).cell("1").analyses([AnalysisId::Stale]);
    assert_eq!(error_code(&service.handle(&wrong_place)), ErrorCode::InvalidEvent);
    let missing = WireEvent::new("nb", EventKind::Edit).cell("9").code("x = 1");
    assert_eq!(error_code(&service.handle(&missing)), ErrorCode::InvalidEvent);
    let mut future = leak_whatif("nb");
    future.v = Some(2);
    assert_eq!(error_code(&service.handle(&future)), ErrorCode::UnsupportedVersion);
    assert_eq!(service.session_count(), 1);
    assert_eq!(service.handle(&leak_whatif("nb")).without_timing(), before);
}

#[test]
fn k_accepts_numbers_and_inf() {
    let service = Service::new(KnowledgeBase::default());
    service.handle(&WireEvent::new("nb", EventKind::Open).cells(LEAKY_PIPELINE));
    for (k, cells) in [("3", vec!["4"]), ("\"inf\"", vec!["4", "5"])] {
        let line = format!(r#"{{"session":"nb","event":"whatif","cell_id":"1","analyses":["stale"],"k":{k}}}"#);
        let reply: WireResponse = serde_json::from_str(&service.handle_json(&line)).unwrap();
        let got: Vec<String> = reply.report().unwrap().warnings.iter().map(|w| w.cell.clone()).collect();
        assert_eq!(got, cells, "k={k}");
    }
}

#[test]
fn open_accepts_an_ipynb_document() {
    let service = Service::new(KnowledgeBase::default());
    let mut open = WireEvent::new("doc", EventKind::Open);
    open.notebook = Some(ipynb(&LEAKY_PIPELINE));
    assert!(!service.handle(&open).is_error());
    let report = service.handle(&leak_whatif("doc"));
    assert_eq!(report.report().unwrap().warnings[0].cell, "5");

    open.notebook = Some(serde_json::json!({"cells": 3}));
    assert_eq!(error_code(&service.handle(&open)), ErrorCode::InvalidEvent);
}

#[test]
fn replaying_a_log_is_deterministic() {
    let mut log = vec![WireEvent::new("a", EventKind::Open), WireEvent::new("b", EventKind::Open).cells(LEAKY_PIPELINE)];
    for (i, code) in LEAKY_PIPELINE.iter().enumerate() {
        log.push(WireEvent::new("a", EventKind::Create).cell((i + 1).to_string()).code(*code));
    }
    log.push(WireEvent::new("a", EventKind::Execute).cell("1"));
    log.push(WireEvent::new("a", EventKind::Whatif).cell("2"));
    log.push(WireEvent::new("b", EventKind::Edit).cell("3").code("d = pd.read_csv('other.csv')"));
    log.push(WireEvent::new("b", EventKind::Whatif).cell("1").k(KBound::Finite(4)));
    log.push(WireEvent::new("a", EventKind::Delete).cell("4"));
    log.push(WireEvent::new("a", EventKind::Whatif).cell("1"));
    let lines: Vec<String> = log.iter().map(|e| serde_json::to_string(e).unwrap()).collect();

    let replay = || -> Vec<String> {
        let service = Service::new(KnowledgeBase::default());
        lines
            .iter()
            .map(|l| {
                let r: WireResponse = serde_json::from_str(&service.handle_json(l)).unwrap();
                serde_json::to_string(&r.without_timing()).unwrap()
            })
            .collect()
    };
    let first = replay();
    assert!(first.iter().all(|r| !r.contains("\"status\":\"error\"")), "{first:#?}");
    assert_eq!(first, replay());
}

#[test]
fn service_agrees_with_batch() {
    let service = Service::new(KnowledgeBase::default());
    service.handle(&WireEvent::new("pipe", EventKind::Open).cells(LEAKY_PIPELINE));
    for analysis in AnalysisId::ALL {
        for k in [KBound::Finite(1), KBound::Finite(3), KBound::Infinite] {
            for source in ["1", "2", "3", "4", "5"] {
                let e = WireEvent::new("pipe", EventKind::Whatif).cell(source).analyses([analysis]).k(k);
                let via_service = service.handle(&e).report().unwrap().warnings.clone();

                let opts = BatchOptions {
                    analyses: BTreeSet::from([analysis]),
                    k: Some(k),
                    sweep: false,
                    source: Some(source.to_string()),
                };
                let nb = Notebook::from_sources("pipe", LEAKY_PIPELINE);
                let batch = analyze_notebook("pipe", nb, Arc::new(KnowledgeBase::default()), &opts).unwrap();
                let via_batch: Vec<_> = batch.runs[0].report.warnings.iter().map(Into::into).collect();
                assert_eq!(via_service, via_batch, "{analysis} K={k} source {source}");
            }
        }
    }
}

#[test]
fn stdio_answers_each_line_in_order() {
    let service = Service::new(KnowledgeBase::default());
    let input = [
        serde_json::to_string(&WireEvent::new("s", EventKind::Open).cells(LEAKY_PIPELINE)).unwrap(),
        String::new(),
        "not json".to_string(),
        serde_json::to_string(&leak_whatif("s")).unwrap(),
    ]
    .join("\n");
    let mut out = Vec::new();
    serve_lines(&service, Cursor::new(input), &mut out).unwrap();
    let replies: Vec<WireResponse> =
        String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), 3);
    assert!(matches!(replies[0], WireResponse::Ack { .. }));
    assert_eq!(error_code(&replies[1]), ErrorCode::Malformed);
    assert_eq!(replies[2].report().unwrap().warnings[0].cell, "5");
}

fn post(port: u16, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(
        stream,
        "POST /event HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let status = raw.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[test]
fn http_carries_the_same_payloads() {
    let service = Arc::new(Service::new(KnowledgeBase::default()));
    let server = HttpServer::start(service.clone(), "127.0.0.1:0", 2).unwrap();
    let port = server.port();

    let open = serde_json::to_string(&WireEvent::new("h", EventKind::Open).cells(LEAKY_PIPELINE)).unwrap();
    let (status, body) = post(port, &open);
    assert_eq!(status, 200);
    assert!(matches!(serde_json::from_str::<WireResponse>(&body).unwrap(), WireResponse::Ack { .. }));

    let whatif = serde_json::to_string(&leak_whatif("h")).unwrap();
    let (_, body) = post(port, &whatif);
    let over_http: WireResponse = serde_json::from_str(&body).unwrap();
    let direct = service.handle(&leak_whatif("h"));
    assert_eq!(over_http.without_timing(), direct.without_timing());

    let (_, body) = post(port, "{");
    assert_eq!(error_code(&serde_json::from_str(&body).unwrap()), ErrorCode::Malformed);
    server.stop();
}
