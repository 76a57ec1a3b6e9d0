use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use kite_core::board::Command;
use kite_core::params::{ElectionId, PartyId};

use crate::api::{
    AssistDelegateBody, AssistVoteBody, DelegateBody, ElectionBody, RootBody, SetupBody,
    StartBody, TallyBody, TransferBody, UndelegateBody, VoteBody,
};
use crate::node::{ApiError, Node, NodeConfig, NodeError};

/// The single serial applier shared by all handlers.
pub type Shared = Arc<Mutex<Node>>;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize>(v: T) -> ApiResult {
    Ok(Json(v).into_response())
}

fn parse<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::malformed(e.to_string()))
}

/// Empty bodies and `null` both mean "absent".
fn parse_optional<T: DeserializeOwned>(bytes: &Bytes) -> Result<Option<T>, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    parse(bytes)
}

async fn with_node<T, F>(shared: &Shared, f: F) -> T
where
    T: Send + 'static,
    F: FnOnce(&mut Node) -> T + Send + 'static,
{
    let shared = shared.clone();
    tokio::task::spawn_blocking(move || {
        let mut node = shared.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut node)
    })
    .await
    .expect("node task panicked")
}

async fn apply(shared: &Shared, cmd: Command) -> ApiResult {
    with_node(shared, move |n| n.apply(cmd)).await.and_then(ok)
}

async fn setup(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let body: SetupBody = parse(&body)?;
    with_node(&s, move |n| n.setup(body)).await.and_then(ok)
}

async fn register(State(s): State<Shared>, Path(p): Path<u32>) -> ApiResult {
    apply(&s, Command::Register { party: PartyId(p) }).await
}

async fn unregister(State(s): State<Shared>, Path(p): Path<u32>) -> ApiResult {
    apply(&s, Command::Unregister { party: PartyId(p) }).await
}

async fn delegate(State(s): State<Shared>, Path(p): Path<u32>, body: Bytes) -> ApiResult {
    let b: DelegateBody = parse(&body)?;
    let cmd = Command::Delegate {
        party: PartyId(p),
        anon_set: b.anon_set,
        ct_vec: b.ct_vec,
        proof: b.proof,
        token_proof: b.token_proof,
    };
    apply(&s, cmd).await
}

async fn undelegate(State(s): State<Shared>, Path(p): Path<u32>, body: Bytes) -> ApiResult {
    let b: UndelegateBody = parse(&body)?;
    let cmd = Command::Undelegate {
        party: PartyId(p),
        anon_set: b.anon_set,
        ct_vec: b.ct_vec,
    };
    apply(&s, cmd).await
}

async fn create_election(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let b: ElectionBody = parse(&body)?;
    apply(&s, Command::ElectionSetup { party: b.party, eid: b.eid, desc: b.desc }).await
}

async fn start_election(State(s): State<Shared>, Path(eid): Path<u64>, body: Bytes) -> ApiResult {
    let b: StartBody = parse(&body)?;
    apply(&s, Command::ElectionStart { party: b.party, eid: ElectionId(eid) }).await
}

async fn vote(State(s): State<Shared>, Path(eid): Path<u64>, body: Bytes) -> ApiResult {
    let b: VoteBody = parse(&body)?;
    apply(&s, b.into_command(ElectionId(eid))).await
}

async fn tally(State(s): State<Shared>, Path(eid): Path<u64>, body: Bytes) -> ApiResult {
    let b: Option<TallyBody> = parse_optional(&body)?;
    with_node(&s, move |n| n.tally(ElectionId(eid), b)).await.and_then(ok)
}

async fn transfer(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let b: TransferBody = parse(&body)?;
    with_node(&s, move |n| n.transfer(b.from, b.to, b.amount)).await.and_then(ok)
}

async fn refresh_root(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let b: RootBody = parse(&body)?;
    apply(&s, Command::RefreshRoot { token_root: b.token_root, root_sig: b.root_sig }).await
}

async fn assist_delegate(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let b: AssistDelegateBody = parse(&body)?;
    with_node(&s, move |n| n.assist_delegate(b)).await.and_then(ok)
}

async fn assist_vote(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let b: AssistVoteBody = parse(&body)?;
    with_node(&s, move |n| n.assist_vote(b)).await.and_then(ok)
}

async fn state(State(s): State<Shared>) -> ApiResult {
    ok(with_node(&s, |n| n.state_view()).await)
}

async fn config(State(s): State<Shared>) -> ApiResult {
    ok(with_node(&s, |n| n.config_view()).await)
}

async fn election(State(s): State<Shared>, Path(eid): Path<u64>) -> ApiResult {
    with_node(&s, move |n| n.election(ElectionId(eid))).await.and_then(ok)
}

async fn snapshot(State(s): State<Shared>, Path(eid): Path<u64>) -> ApiResult {
    with_node(&s, move |n| n.snapshot(ElectionId(eid))).await.and_then(ok)
}

#[derive(Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from: u64,
}

async fn events(State(s): State<Shared>, Query(q): Query<EventsQuery>) -> ApiResult {
    ok(with_node(&s, move |n| n.events_from(q.from)).await)
}

pub fn router(shared: Shared) -> Router {
    Router::new()
        .route("/setup", post(setup))
        .route("/parties/{p}/register", post(register))
        .route("/parties/{p}/unregister", post(unregister))
        .route("/parties/{p}/delegate", post(delegate))
        .route("/parties/{p}/undelegate", post(undelegate))
        .route("/elections", post(create_election))
        .route("/elections/{eid}", get(election))
        .route("/elections/{eid}/start", post(start_election))
        .route("/elections/{eid}/vote", post(vote))
        .route("/elections/{eid}/tally", post(tally))
        .route("/elections/{eid}/snapshot", get(snapshot))
        .route("/transfer", post(transfer))
        .route("/root", post(refresh_root))
        .route("/assist/delegate", post(assist_delegate))
        .route("/assist/vote", post(assist_vote))
        .route("/state", get(state))
        .route("/config", get(config))
        .route("/events", get(events))
        .with_state(shared)
}

/// A bound, not yet serving node.
pub struct Server {
    listener: TcpListener,
    shared: Shared,
}

impl Server {
    /// Replays the log and binds the listen address.
    pub async fn bind(config: NodeConfig) -> Result<Server, NodeError> {
        let addr = config.listen;
        let node = tokio::task::spawn_blocking(move || Node::open(config))
            .await
            .expect("open task panicked")?;
        let listener = TcpListener::bind(addr).await.map_err(|e| match e.kind() {
            std::io::ErrorKind::AddrInUse => NodeError::PortInUse(addr),
            _ => NodeError::Io(e),
        })?;
        Ok(Server {
            listener,
            shared: Arc::new(Mutex::new(node)),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound socket")
    }

    pub fn shared(&self) -> Shared {
        self.shared.clone()
    }

    pub async fn run(self) -> std::io::Result<()> {
        axum::serve(self.listener, router(self.shared)).await
    }

    pub async fn run_until<F>(self, shutdown: F) -> std::io::Result<()>
    where
        F: std::future::Future<Output = ()> + Send + 'static,
    {
        axum::serve(self.listener, router(self.shared))
            .with_graceful_shutdown(shutdown)
            .await
    }
}

/// Serves until the future resolves.
pub async fn serve(config: NodeConfig) -> Result<(), NodeError> {
    let server = Server::bind(config).await?;
    server
        .run_until(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
