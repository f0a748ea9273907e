//! Loopback HTTP service for the viewer: the bundle, on-demand diffs, and
//! static assets.

use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, warn};
use procviz_core::PvBundle;
use serde_json::json;
use tiny_http::{Header, Method, Server};

use crate::error::CliError;

const PLACEHOLDER_INDEX: &str = include_str!("../assets/index.html");
const WORKERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl Response {
    fn json(status: u16, body: String) -> Self {
        Response {
            status,
            content_type: "application/json",
            body: body.into_bytes(),
        }
    }

    fn error(status: u16, kind: &str, message: impl Into<String>) -> Self {
        let body = json!({ "error": kind, "message": message.into() });
        Self::json(status, format!("{body}\n"))
    }
}

/// Read-only state shared by all request handlers.
pub struct App {
    bundle: PvBundle,
    bundle_json: String,
    viewer_dir: Option<PathBuf>,
}

impl App {
    pub fn new(bundle: PvBundle, viewer_dir: Option<PathBuf>) -> Self {
        let bundle_json = bundle.to_json();
        App {
            bundle,
            bundle_json,
            viewer_dir,
        }
    }

    /// Handle one request. `target` is the raw request target, path plus
    /// optional query.
    pub fn respond(&self, method: &str, target: &str) -> Response {
        if method != "GET" && method != "HEAD" {
            return Response::error(
                405,
                "MethodNotAllowed",
                format!("{method} is not supported"),
            );
        }
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        match path {
            "/bundle" => Response::json(200, self.bundle_json.clone()),
            "/diff" => self.diff(query),
            "/" | "/index.html" => match self.static_file("index.html") {
                Some(r) => r,
                None => Response {
                    status: 200,
                    content_type: "text/html; charset=utf-8",
                    body: PLACEHOLDER_INDEX.as_bytes().to_vec(),
                },
            },
            _ => self
                .static_file(path.trim_start_matches('/'))
                .unwrap_or_else(|| {
                    Response::error(404, "NotFound", format!("no resource at {path}"))
                }),
        }
    }

    fn diff(&self, query: &str) -> Response {
        let mut i = None;
        let mut j = None;
        for (k, v) in url::form_urlencoded::parse(query.as_bytes()) {
            match k.as_ref() {
                "i" => i = Some(v.into_owned()),
                "j" => j = Some(v.into_owned()),
                _ => {}
            }
        }
        let index = |name: &str, v: Option<String>| -> Result<usize, Response> {
            let v =
                v.ok_or_else(|| Response::error(400, "BadRequest", format!("missing `{name}`")))?;
            v.parse().map_err(|_| {
                Response::error(
                    400,
                    "BadRequest",
                    format!("`{name}` must be a snapshot index, got `{v}`"),
                )
            })
        };
        let (i, j) = match (index("i", i), index("j", j)) {
            (Ok(i), Ok(j)) => (i, j),
            (Err(r), _) | (_, Err(r)) => return r,
        };
        match self.bundle.diff(i, j) {
            Ok(d) => {
                let mut body = serde_json::to_string(&d).expect("diff serialization cannot fail");
                body.push('\n');
                Response::json(200, body)
            }
            Err(e) => {
                let body = json!({
                    "error": "IndexOutOfRange",
                    "message": e.to_string(),
                    "index": e.index,
                    "len": e.len,
                });
                Response::json(400, format!("{body}\n"))
            }
        }
    }

    fn static_file(&self, rel: &str) -> Option<Response> {
        let dir = self.viewer_dir.as_ref()?;
        let rel = percent_decode(rel)?;
        let rel = Path::new(&rel);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return None;
        }
        let body = fs::read(dir.join(rel)).ok()?;
        Some(Response {
            status: 200,
            content_type: content_type(rel),
            body,
        })
    }
}

fn percent_decode(s: &str) -> Option<String> {
    url::form_urlencoded::parse(format!("p={}", s.replace('+', "%2B")).as_bytes())
        .next()
        .map(|(_, v)| v.into_owned())
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        Some("map" | "txt") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// A running server. Dropping it without [`ServerHandle::shutdown`] leaves
/// the workers running until the process exits.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for w in self.workers {
            let _ = w.join();
        }
    }

    pub fn wait(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }
}

/// Bind 127.0.0.1:`port` (0 picks a free port) and start serving.
pub fn start(app: App, port: u16, stop: Arc<AtomicBool>) -> Result<ServerHandle, CliError> {
    let server =
        Server::http(("127.0.0.1", port)).map_err(|e| match e.downcast::<io::Error>() {
            Ok(io) if io.kind() == io::ErrorKind::AddrInUse => CliError::PortInUse(port),
            Ok(io) => CliError::io(format!("binding port {port}"), *io),
            Err(e) => CliError::io(
                format!("binding port {port}"),
                io::Error::other(e.to_string()),
            ),
        })?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| CliError::io("binding", io::Error::other("not an IP listener")))?;
    let server = Arc::new(server);
    let app = Arc::new(app);
    let workers = (0..WORKERS)
        .map(|_| {
            let (server, app, stop) = (server.clone(), app.clone(), stop.clone());
            thread::spawn(move || worker(&server, &app, &stop))
        })
        .collect();
    Ok(ServerHandle {
        addr,
        stop,
        workers,
    })
}

fn worker(server: &Server, app: &App, stop: &AtomicBool) {
    while !stop.load(Ordering::SeqCst) {
        let req = match server.recv_timeout(Duration::from_millis(100)) {
            Ok(Some(r)) => r,
            Ok(None) => continue,
            Err(e) => {
                warn!("accept failed: {e}");
                continue;
            }
        };
        let method = match req.method() {
            Method::Get => "GET",
            Method::Head => "HEAD",
            _ => "OTHER",
        };
        let r = app.respond(method, req.url());
        debug!("{} {} -> {}", req.method(), req.url(), r.status);
        let header =
            Header::from_bytes("Content-Type", r.content_type).expect("static header is valid");
        let response = tiny_http::Response::from_data(r.body)
            .with_status_code(r.status)
            .with_header(header);
        if let Err(e) = req.respond(response) {
            debug!("client went away: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use procviz_core::{
        build_bundle, validate_history, AnalysisParams, RawHistory, SessionKind, Snapshot,
    };

    fn app(viewer_dir: Option<PathBuf>) -> App {
        let raw = RawHistory {
            kind: SessionKind::Text,
            capture_interval_ms: 5000,
            snapshots: vec![Snapshot::new(0, "one\n"), Snapshot::new(5000, "one\ntwo\n")],
            executions: vec![],
        };
        let h = validate_history(raw).unwrap().history;
        App::new(
            build_bundle(&h, &AnalysisParams::default()).unwrap(),
            viewer_dir,
        )
    }

    fn body(r: &Response) -> serde_json::Value {
        serde_json::from_slice(&r.body).unwrap()
    }

    #[test]
    fn bundle_endpoint() {
        let r = app(None).respond("GET", "/bundle");
        assert_eq!(r.status, 200);
        assert_eq!(body(&r)["schema"], "pvbundle/1");
    }

    #[test]
    fn self_diff_is_all_common() {
        let r = app(None).respond("GET", "/diff?i=0&j=0");
        assert_eq!(r.status, 200);
        let segs = body(&r)["script"]["segments"].as_array().unwrap().clone();
        assert!(segs.iter().all(|s| s["label"] == "common"));
    }

    #[test]
    fn diff_out_of_range() {
        let r = app(None).respond("GET", "/diff?i=0&j=999");
        assert_eq!(r.status, 400);
        assert_eq!(body(&r)["error"], "IndexOutOfRange");
    }

    #[test]
    fn diff_bad_params() {
        let a = app(None);
        for q in ["/diff", "/diff?i=0", "/diff?i=x&j=0", "/diff?i=-1&j=0"] {
            let r = a.respond("GET", q);
            assert_eq!(r.status, 400, "{q}");
            assert_eq!(body(&r)["error"], "BadRequest");
        }
    }

    #[test]
    fn index_placeholder_and_static_files() {
        let r = app(None).respond("GET", "/");
        assert_eq!(r.status, 200);
        assert!(r.content_type.starts_with("text/html"));

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("index.html"), "<p>viewer</p>").unwrap();
        fs::write(dir.path().join("app.js"), "run()").unwrap();
        let a = app(Some(dir.path().to_owned()));
        assert_eq!(a.respond("GET", "/").body, b"<p>viewer</p>");
        let js = a.respond("GET", "/app.js");
        assert_eq!(
            (js.status, js.content_type),
            (200, "text/javascript; charset=utf-8")
        );
        assert_eq!(a.respond("GET", "/missing.js").status, 404);
    }

    #[test]
    fn no_path_traversal() {
        let outer = tempfile::tempdir().unwrap();
        let viewer = outer.path().join("viewer");
        fs::create_dir(&viewer).unwrap();
        fs::write(outer.path().join("secret.txt"), "s").unwrap();
        let a = app(Some(viewer));
        for p in [
            "/../secret.txt",
            "/%2e%2e/secret.txt",
            "/..%2Fsecret.txt",
            "//etc/passwd",
        ] {
            assert_eq!(a.respond("GET", p).status, 404, "{p}");
        }
    }

    #[test]
    fn other_methods_rejected() {
        assert_eq!(app(None).respond("POST", "/bundle").status, 405);
    }
}
