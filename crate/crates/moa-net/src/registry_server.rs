//! The registry's wire API.
//!
//! ```text
//! POST   /services                    descriptor XML -> 201 Published | 409 | 422
//! GET    /services/{id}               -> 200 record XML | 404
//! GET    /services?name=N&version=V   -> 200 record XML | 404
//! DELETE /services/{id}               -> 204 | 404
//! POST   /services/query              query XML -> 200 ranked results | 400
//! ```

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Request, Response, Server};

use moa_core::descriptor::parse_descriptor;
use moa_core::registry::{
    parse_query, serialize_record, serialize_results, RegistryError, RegistryStore,
};
use moa_core::retrieval::SynonymTable;
use moa_core::xml::{to_document_string, XmlElement};

use crate::PROVIDER_LABEL_HEADER;

const WORKERS: usize = 4;

/// A running registry server. Dropping it (or calling [`shutdown`]) stops
/// the listener and joins the workers.
///
/// [`shutdown`]: RegistryServer::shutdown
pub struct RegistryServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
    store: Arc<RegistryStore>,
}

impl RegistryServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn start(
        store: Arc<RegistryStore>,
        synonyms: SynonymTable,
        addr: &str,
    ) -> Result<Self, String> {
        let server = Arc::new(Server::http(addr).map_err(|e| e.to_string())?);
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(ip) => ip,
            other => return Err(format!("unsupported listen address {other:?}")),
        };
        let synonyms = Arc::new(synonyms);
        let workers = (0..WORKERS)
            .map(|_| {
                let server = Arc::clone(&server);
                let store = Arc::clone(&store);
                let synonyms = Arc::clone(&synonyms);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle(request, &store, &synonyms);
                    }
                })
            })
            .collect();
        Ok(Self {
            server,
            workers,
            addr,
            store,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn store(&self) -> &Arc<RegistryStore> {
        &self.store
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

impl Drop for RegistryServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn handle(mut request: Request, store: &RegistryStore, synonyms: &SynonymTable) {
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        respond(request, 400, error_xml("BadRequest", "body is not UTF-8"));
        return;
    }
    let url = request.url().to_string();
    let (path, query_string) = match url.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (url.as_str(), None),
    };

    match (request.method(), path) {
        (Method::Post, "/services") => {
            let label = header_value(&request, PROVIDER_LABEL_HEADER)
                .unwrap_or_else(|| "anonymous".to_string());
            match parse_descriptor(&body) {
                Err(e) => respond(request, 422, error_xml("InvalidDescriptor", &e.to_string())),
                Ok(descriptor) => match store.publish(descriptor, &label) {
                    Ok(id) => {
                        let xml = to_document_string(&XmlElement::new("moa:Published").attr("id", id));
                        respond(request, 201, xml);
                    }
                    Err(e @ RegistryError::DuplicateService { .. }) => {
                        respond(request, 409, error_xml("DuplicateService", &e.to_string()))
                    }
                    Err(e) => respond(request, 500, error_xml("StorageFailure", &e.to_string())),
                },
            }
        }
        (Method::Post, "/services/query") => match parse_query(&body) {
            Err(e) => respond(request, 400, error_xml("InvalidQuery", &e.to_string())),
            Ok(query) => match store.query(&query, synonyms) {
                Ok(results) => respond(request, 200, serialize_results(&results)),
                Err(e @ RegistryError::EmptyQuery) => {
                    respond(request, 400, error_xml("EmptyQuery", &e.to_string()))
                }
                Err(e) => respond(request, 400, error_xml("InvalidQuery", &e.to_string())),
            },
        },
        (Method::Get, "/services") => {
            let lookup = query_string.and_then(|q| {
                let mut name = None;
                let mut version = None;
                for pair in q.split('&') {
                    match pair.split_once('=') {
                        Some(("name", v)) => name = Some(v.to_string()),
                        Some(("version", v)) => version = Some(v.to_string()),
                        _ => return None,
                    }
                }
                Some((name?, version?))
            });
            match lookup {
                None => respond(
                    request,
                    400,
                    error_xml("BadRequest", "expected ?name=NAME&version=VERSION"),
                ),
                Some((name, version)) => match store.find_by_reference(&name, &version) {
                    Some(record) => respond(request, 200, serialize_record(&record)),
                    None => respond(
                        request,
                        404,
                        error_xml("NotFound", &format!("no record for {name}@{version}")),
                    ),
                },
            }
        }
        (method, p) if p.starts_with("/services/") => {
            let id = &p["/services/".len()..];
            match method {
                Method::Get => match store.lookup(id) {
                    Ok(record) => respond(request, 200, serialize_record(&record)),
                    Err(e) => respond(request, 404, error_xml("NotFound", &e.to_string())),
                },
                Method::Delete => match store.remove(id) {
                    Ok(()) => respond(request, 204, String::new()),
                    Err(e) => respond(request, 404, error_xml("NotFound", &e.to_string())),
                },
                _ => respond(request, 405, error_xml("MethodNotAllowed", "use GET or DELETE")),
            }
        }
        _ => respond(request, 404, error_xml("NotFound", "unknown route")),
    }
}

fn header_value(request: &Request, name: &str) -> Option<String> {
    request
        .headers()
        .iter()
        .find(|h| h.field.as_str().as_str().eq_ignore_ascii_case(name))
        .map(|h| h.value.as_str().to_string())
}

fn error_xml(code: &str, message: &str) -> String {
    to_document_string(
        &XmlElement::new("moa:Error")
            .attr("code", code)
            .attr("message", message),
    )
}

fn respond(request: Request, status: u16, body: String) {
    let response = Response::from_string(body).with_status_code(status).with_header(
        Header::from_bytes(&b"Content-Type"[..], &b"application/xml; charset=utf-8"[..])
            .expect("static header"),
    );
    let _ = request.respond(response);
}
