//! Line-delimited JSON over a byte stream, and JSON over HTTP POST.

use std::io::{self, BufRead, Write};
use std::sync::Arc;
use std::thread;

use tiny_http::{Header, Method, Response, Server};

use crate::service::Service;

/// Answers every non-empty input line with one output line, in order, until
/// end of input.
pub fn serve_lines<R: BufRead, W: Write>(service: &Service, input: R, mut output: W) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", service.handle_json(&line))?;
        output.flush()?;
    }
    Ok(())
}

/// A running HTTP endpoint. `POST /event` takes one event per request;
/// `GET /health` answers `ok`.
pub struct HttpServer {
    server: Arc<Server>,
    workers: Vec<thread::JoinHandle<()>>,
}

impl HttpServer {
    /// Binds `addr` (for example `127.0.0.1:8080`; port 0 picks a free one)
    /// and starts `threads` workers.
    pub fn start(service: Arc<Service>, addr: &str, threads: usize) -> io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(|e| io::Error::new(io::ErrorKind::AddrNotAvailable, e))?);
        let workers = (0..threads.max(1))
            .map(|_| {
                let server = server.clone();
                let service = service.clone();
                thread::spawn(move || {
                    for request in server.incoming_requests() {
                        respond(&service, request);
                    }
                })
            })
            .collect();
        Ok(HttpServer { server, workers })
    }

    pub fn port(&self) -> u16 {
        self.server.server_addr().to_ip().map(|a| a.port()).unwrap_or(0)
    }

    /// Blocks until the server stops.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn stop(self) {
        self.server.unblock();
        for _ in 1..self.workers.len() {
            self.server.unblock();
        }
        self.join();
    }
}

fn respond(service: &Service, mut request: tiny_http::Request) {
    let json = Header::from_bytes("Content-Type", "application/json").expect("static header");
    let reply = match (request.method(), request.url()) {
        (Method::Post, "/event") => {
            let mut body = String::new();
            match request.as_reader().read_to_string(&mut body) {
                Ok(_) => Response::from_string(service.handle_json(&body)).with_header(json),
                Err(e) => Response::from_string(e.to_string()).with_status_code(400),
            }
        }
        (Method::Get, "/health") => Response::from_string("ok"),
        _ => Response::from_string("not found").with_status_code(404),
    };
    let _ = request.respond(reply);
}
