#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::mpsc;

use histwidget_server::{router, AppState};

/// Starts the service on an ephemeral port in a background thread and
/// returns its base URL. The server lives until the test process exits.
pub fn spawn_server() -> String {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
            tx.send(listener.local_addr().expect("addr")).expect("send addr");
            axum_serve(listener).await;
        });
    });
    format!("http://{}", rx.recv().expect("server address"))
}

async fn axum_serve(listener: tokio::net::TcpListener) {
    histwidget_server::serve(listener, router(AppState::new()))
        .await
        .expect("server");
}

pub fn cli(server: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histwidget"))
        .arg("--server")
        .arg(server)
        .args(args)
        .output()
        .expect("run histwidget")
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).expect("write fixture");
    p
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
