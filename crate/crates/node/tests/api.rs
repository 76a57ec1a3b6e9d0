mod common;

use common::{config, start, Driver, Running};
use kite_core::board::{Board, Command};
use kite_core::merkle::MerkleTree;
use kite_core::oracle::{trace_gen, TraceBounds, TraceCommand};
use kite_node::api::{request_for, AssistDelegation, ApiRequest, SnapshotView};
use kite_node::node::LOG_FILE;
use kite_node::{Node, NodeError, Server};
use serde_json::{json, Value};

async fn post_req(node: &Running, req: &ApiRequest) -> (u16, Value) {
    node.post(&req.path, &req.body).await
}

/// Parties 0..3 hold 3, 5, 2 tokens; 1 and 2 register, 0 delegates to 1.
async fn fixture_lifecycle(node: &Running) {
    let (s, _) = node.post("/setup", &json!({"tokens": [3, 5, 2]})).await;
    assert_eq!(s, 200);
    for p in [1, 2] {
        let (s, body) = node.post(&format!("/parties/{p}/register"), &Value::Null).await;
        assert_eq!(s, 200, "{body}");
    }
    let (s, body) = node
        .post("/assist/delegate", &json!({"party": 0, "target": 1, "size": 2}))
        .await;
    assert_eq!(s, 200, "{body}");
    let assist: AssistDelegation = serde_json::from_value(body).unwrap();
    assert_eq!(assist.stored.target().0, 1);
    let (s, body) = post_req(node, &assist.request).await;
    assert_eq!(s, 200, "{body}");
    let delegated = &body["events"][0];
    assert_eq!(delegated["kind"], "delegated");
    assert!(delegated.get("target").is_none());

    let (s, _) = node.post("/elections", &json!({"party": 1, "eid": 1, "desc": "fund it"})).await;
    assert_eq!(s, 200);
    let (s, _) = node.post("/elections/1/start", &json!({"party": 1})).await;
    assert_eq!(s, 200);
    for (party, option, private) in [(1, 0, true), (2, 1, false)] {
        let (s, body) = node
            .post("/assist/vote", &json!({"eid": 1, "party": party, "option": option, "private": private}))
            .await;
        assert_eq!(s, 200, "{body}");
        let req: ApiRequest = serde_json::from_value(body).unwrap();
        let (s, body) = post_req(node, &req).await;
        assert_eq!(s, 200, "{body}");
    }
    let (s, body) = node.post("/elections/1/tally", &Value::Null).await;
    assert_eq!(s, 200, "{body}");
    assert_eq!(body["events"][0]["percentages"], json!([8000, 2000, 0]));
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_dir_starts_uninitialized() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    let (s, body) = node.get("/state").await;
    assert_eq!(s, 200);
    assert_eq!(body["initialized"], false);
    assert_eq!(body["next_seq"], 0);
    let (s, body) = node.post("/parties/0/register", &Value::Null).await;
    assert_eq!(s, 409);
    assert_eq!(body["error"], "NotInitialized");
    node.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn fixture_lifecycle_and_snapshot_root() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    fixture_lifecycle(&node).await;

    let (s, body) = node.get("/elections/1/snapshot").await;
    assert_eq!(s, 200);
    let snap: SnapshotView = serde_json::from_value(body).unwrap();
    let tree = MerkleTree::from_leaf_digests(snap.leaves.clone()).unwrap();
    assert_eq!(tree.root(), snap.snapshot_root);
    assert_eq!(snap.leaves.len(), 3);

    let (s, body) = node.get("/elections/1").await;
    assert_eq!(s, 200);
    assert_eq!(body["phase"], "tallied");
    let (s, _) = node.get("/elections/9").await;
    assert_eq!(s, 404);

    // No published field carries the decrypted counts.
    let (_, events) = node.get("/events?from=0").await;
    let text = events.to_string();
    assert!(!text.contains("\"counts\"") && !text.contains("plain_counts"));
    let (_, tail) = node.get("/events?from=5").await;
    assert_eq!(tail[0]["seq"], 5);
    node.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_bodies_and_status_classes() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    node.post("/setup", &json!({"tokens": [3, 5, 2]})).await;
    let hash = node.state_hash().await;
    let seq = node.get("/state").await.1["next_seq"].clone();

    for (path, body) in [
        ("/elections", "{not json"),
        ("/transfer", r#"{"from": 0}"#),
        ("/parties/0/delegate", r#"{"anon_set": "x"}"#),
        ("/elections/1/vote", r#"{"mode": "secret"}"#),
        ("/setup", "{}"),
    ] {
        let (s, b) = node.post_raw(path, body).await;
        assert_eq!(s, 400, "{path}: {b}");
        assert_eq!(b["error"], "Malformed");
    }
    assert_eq!(node.state_hash().await, hash);
    assert_eq!(node.get("/state").await.1["next_seq"], seq);

    // Guard violation.
    node.post("/parties/1/register", &Value::Null).await;
    let (s, b) = node.post("/parties/1/register", &Value::Null).await;
    assert_eq!(s, 409);
    assert_eq!(b["error"], "AlreadyLocked");
    assert_eq!(b["event"]["kind"], "rejected");

    // Protocol error: a well-formed delegation whose proof belongs elsewhere.
    let (_, body) = node.post("/assist/delegate", &json!({"party": 0, "target": 1, "size": 1})).await;
    let assist: AssistDelegation = serde_json::from_value(body).unwrap();
    let mut req = assist.request.clone();
    req.path = "/parties/2/delegate".into();
    let (s, b) = post_req(&node, &req).await;
    assert_eq!(s, 400, "{b}");
    assert_eq!(b["error"], "InvalidProof");

    // Client-side refusal from the assist endpoint.
    let (s, b) = node.post("/assist/delegate", &json!({"party": 0, "target": 1, "size": 3})).await;
    assert_eq!(s, 400);
    assert_eq!(b["error"], "PoolTooSmall");
    node.stop().await;
}

async fn run_equivalence(seed: u64, restart_at: Option<usize>) {
    let dir = tempfile::tempdir().unwrap();
    let trace: Vec<TraceCommand> = trace_gen(seed, &TraceBounds::default());
    let mut driver = Driver::new(seed);
    let mut node = start(config(dir.path(), false)).await;
    for (k, c) in trace.iter().enumerate() {
        if restart_at == Some(k) {
            node.stop().await;
            node = start(config(dir.path(), false)).await;
        }
        let Some(cmd) = driver.build(c) else { continue };
        let (_, api_event) = node.submit(&cmd).await;
        let (direct_event, follow) = driver.record(c, cmd);
        assert_eq!(api_event, direct_event, "seed {seed} step {k}");
        if let Some(refresh) = follow {
            let (_, api_event) = node.submit(&refresh).await;
            let _ = driver.board.apply(refresh);
            let direct_event = driver.board.events().last().unwrap().clone();
            assert_eq!(api_event, direct_event, "seed {seed} step {k} refresh");
        }
    }
    let direct = serde_json::to_value(driver.board.state_hash()).unwrap();
    assert_eq!(node.state_hash().await, direct, "seed {seed}");
    let (_, events) = node.get("/events").await;
    assert_eq!(events, serde_json::to_value(driver.board.events()).unwrap());
    node.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn api_equals_direct_calls_on_generated_traces() {
    for seed in 0..12 {
        run_equivalence(seed, None).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn restart_mid_trace_matches_uninterrupted_run() {
    for seed in 20..28 {
        let len = trace_gen(seed, &TraceBounds::default()).len();
        run_equivalence(seed, Some(len / 2)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn in_process_authority_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    node.post("/setup", &json!({"tokens": [3, 5, 2, 4]})).await;
    node.post("/parties/1/register", &Value::Null).await;
    node.post("/elections", &json!({"party": 1, "eid": 1})).await;
    let (s, b) = node.post("/transfer", &json!({"from": 0, "to": 3, "amount": 2})).await;
    assert_eq!(s, 200, "{b}");
    assert_eq!(b["events"][1]["kind"], "root_refreshed");
    let (s, b) = node.post("/transfer", &json!({"from": 1, "to": 3, "amount": 1})).await;
    assert_eq!(s, 409);
    assert_eq!(b["event"]["kind"], "transfer_locked");
    let before = node.state_hash().await;
    node.stop().await;

    let node = start(config(dir.path(), true)).await;
    assert_eq!(node.state_hash().await, before);
    node.post("/elections/1/start", &json!({"party": 1})).await;
    let (_, req) = node.post("/assist/vote", &json!({"eid": 1, "party": 1, "option": 2})).await;
    let req: ApiRequest = serde_json::from_value(req).unwrap();
    assert_eq!(post_req(&node, &req).await.0, 200);
    let (s, b) = node.post("/elections/1/tally", &Value::Null).await;
    assert_eq!(s, 200, "{b}");
    assert_eq!(b["events"][0]["percentages"], json!([0, 0, 10000]));
    node.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_delegations_serialize_in_log_order() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    node.post("/setup", &json!({"tokens": [3, 5, 2, 4, 6, 1]})).await;
    for p in [4, 5] {
        node.post(&format!("/parties/{p}/register"), &Value::Null).await;
    }
    let mut reqs = Vec::new();
    for p in 0..4 {
        let (_, b) = node
            .post("/assist/delegate", &json!({"party": p, "target": 4 + p % 2, "size": 2}))
            .await;
        reqs.push(serde_json::from_value::<AssistDelegation>(b).unwrap().request);
    }
    let results = futures_join(&node, reqs).await;
    assert!(results.iter().all(|s| *s == 200), "{results:?}");
    let hash = node.state_hash().await;
    node.stop().await;

    let text = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
    let cmds: Vec<Command> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let replayed = Board::replay(cmds);
    assert_eq!(serde_json::to_value(replayed.state_hash()).unwrap(), hash);
    let st = replayed.state().unwrap();
    assert!(st.locks[..4].iter().all(|l| *l));
}

async fn futures_join(node: &Running, reqs: Vec<ApiRequest>) -> Vec<u16> {
    let mut handles = Vec::new();
    for req in reqs {
        let (http, base) = (node.http.clone(), node.base.clone());
        handles.push(tokio::spawn(async move {
            http.post(format!("{base}{}", req.path))
                .json(&req.body)
                .send()
                .await
                .unwrap()
                .status()
                .as_u16()
        }));
    }
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

#[tokio::test(flavor = "multi_thread")]
async fn corrupt_log_refuses_to_start() {
    let dir = tempfile::tempdir().unwrap();
    let node = start(config(dir.path(), true)).await;
    node.post("/setup", &json!({"tokens": [1, 2]})).await;
    node.stop().await;
    let path = dir.path().join(LOG_FILE);
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"op\": \"register\", \"party\n");
    std::fs::write(&path, text).unwrap();
    match Server::bind(config(dir.path(), true)).await {
        Err(NodeError::CorruptLog { line: 2, .. }) => {}
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("started on a corrupt log"),
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn port_in_use_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let first = Server::bind(config(dir.path(), true)).await.unwrap();
    let mut c = config(dir.path(), true);
    c.listen = first.local_addr();
    assert!(matches!(Server::bind(c).await, Err(NodeError::PortInUse(_))));
}

#[test]
fn stale_root_after_crash_is_refreshed_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let mut node = Node::open(config(dir.path(), true)).unwrap();
    node.setup(kite_node::api::SetupBody {
        tokens: Some(vec![4, 1]),
        ..Default::default()
    })
    .unwrap();
    // The transfer reaches the log but the refresh never does.
    node.apply(Command::Transfer {
        from: kite_core::params::PartyId(0),
        to: kite_core::params::PartyId(1),
        amount: 3,
    })
    .unwrap();
    assert!(node.board().state().unwrap().root_stale);
    drop(node);
    let node = Node::open(config(dir.path(), true)).unwrap();
    let st = node.board().state().unwrap();
    assert!(!st.root_stale);
    assert_eq!(st.balances, vec![1, 4]);
    assert_eq!(node.authority().unwrap().token_list(), &[1, 4]);
}

#[test]
fn request_paths_cover_every_mutation() {
    let dir = tempfile::tempdir().unwrap();
    let mut node = Node::open(config(dir.path(), true)).unwrap();
    node.setup(kite_node::api::SetupBody {
        tokens: Some(vec![1]),
        ..Default::default()
    })
    .unwrap();
    let setup = node.board().commands()[0].clone();
    assert_eq!(request_for(&setup).path, "/setup");
    let reg = Command::Register { party: kite_core::params::PartyId(0) };
    assert_eq!(request_for(&reg).path, "/parties/0/register");
    assert!(request_for(&reg).body.is_null());
}
