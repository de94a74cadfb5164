//! A provider process: hosts one method service behind the invoke
//! endpoint.
//!
//! ```text
//! POST /invoke      invoke envelope -> 200 result or fault envelope
//! GET  /descriptor  -> 200, the descriptor file byte-identical
//! ```
//!
//! Application faults are data: `/invoke` always answers 200 with an
//! envelope. Transport status codes only cover non-envelope requests
//! (unknown routes, wrong methods).

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Request, Response, Server};

use moa_core::descriptor::parse_descriptor;
use moa_core::services::ServiceHost;

use crate::STAGE_TRACE_HEADER;

const WORKERS: usize = 4;

/// A running provider. The served descriptor bytes are exactly the ones it
/// was started with.
pub struct ProviderServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
    descriptor_xml: String,
}

impl ProviderServer {
    /// Parses the descriptor, binds every operation to its built-in
    /// implementation and starts serving. Fails when an operation has no
    /// implementation or the address cannot be bound.
    pub fn start(descriptor_xml: &str, addr: &str) -> Result<Self, String> {
        let descriptor = parse_descriptor(descriptor_xml).map_err(|e| e.to_string())?;
        let host = Arc::new(ServiceHost::new(descriptor)?);
        let served_bytes = Arc::new(descriptor_xml.to_string());

        let server = Arc::new(Server::http(addr).map_err(|e| e.to_string())?);
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(ip) => ip,
            other => return Err(format!("unsupported listen address {other:?}")),
        };
        let workers = (0..WORKERS)
            .map(|_| {
                let server = Arc::clone(&server);
                let host = Arc::clone(&host);
                let bytes = Arc::clone(&served_bytes);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle(request, &host, &bytes);
                    }
                })
            })
            .collect();
        Ok(Self {
            server,
            workers,
            addr,
            descriptor_xml: descriptor_xml.to_string(),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn invoke_url(&self) -> String {
        format!("http://{}/invoke", self.addr)
    }

    pub fn descriptor_xml(&self) -> &str {
        &self.descriptor_xml
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for ProviderServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn handle(mut request: Request, host: &ServiceHost, descriptor_bytes: &str) {
    match (request.method(), request.url()) {
        (Method::Post, "/invoke") => {
            let mut body = String::new();
            if request.as_reader().read_to_string(&mut body).is_err() {
                // not even text: still an envelope-level schema fault
                body = String::new();
            }
            let outcome = host.handle_invoke_text(&body);
            let response = Response::from_string(outcome.response_xml.clone())
                .with_status_code(200)
                .with_header(xml_content_type())
                .with_header(
                    Header::from_bytes(STAGE_TRACE_HEADER.as_bytes(), outcome.stage_tokens().as_bytes())
                        .expect("stage tokens are header-safe"),
                );
            let _ = request.respond(response);
        }
        (Method::Get, "/descriptor") => {
            let response = Response::from_string(descriptor_bytes)
                .with_status_code(200)
                .with_header(xml_content_type());
            let _ = request.respond(response);
        }
        (_, "/invoke") | (_, "/descriptor") => {
            let _ = request.respond(Response::from_string("method not allowed").with_status_code(405));
        }
        _ => {
            let _ = request.respond(Response::from_string("not found").with_status_code(404));
        }
    }
}

fn xml_content_type() -> Header {
    Header::from_bytes(&b"Content-Type"[..], &b"application/xml; charset=utf-8"[..])
        .expect("static header")
}
