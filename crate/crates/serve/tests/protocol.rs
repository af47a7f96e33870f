use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use prefnet::datagen::{generate, GenConfig};
use prefnet::encoding::PreferenceInput;
use prefnet::neural::ModelConfig;
use prefnet::pref::PreferenceDistribution;
use prefnet::rl::{Agent, Task, TrainingPreference};
use prefnet::sim::{EnvConfig, NodeStatus, Topology};
use prefnet::steer::{ServerMessage, SessionState, TelemetryFrame};
use prefnet_serve::{router, AppState, CreateSession, ErrorBody, ServeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio_tungstenite::tungstenite::Message;

const RATE: f64 = 60.0;

struct Server {
    base: String,
    ws: String,
    _dir: tempfile::TempDir,
}

async fn start() -> Server {
    let topo = Topology::toy();
    let gen = GenConfig {
        horizon: 120,
        ..GenConfig::default()
    };
    let data = generate(&topo, &gen, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let alpha = PreferenceDistribution::exponential(RATE).unwrap();
    let agent = Agent::new(
        Task::AutoScaling,
        topo.name(),
        ModelConfig::new(8, 2, 1),
        PreferenceInput::from_training(Task::AutoScaling, &alpha, None).unwrap(),
        TrainingPreference::Sampled { alpha, beta: None },
        &mut ChaCha8Rng::seed_from_u64(5),
    )
    .unwrap();
    let ck = dir.path().join("dp.ckpt");
    agent.save(&ck).unwrap();
    std::fs::write(dir.path().join("junk.ckpt"), b"not a checkpoint").unwrap();

    let config = ServeConfig {
        topology: topo,
        env_config: EnvConfig::new(data.meta.sla_ms),
        records: Arc::new(data.test.clone()),
        checkpoints: BTreeMap::from([("dp".to_string(), ck)]),
        default_tick_ms: 20,
    };
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr: SocketAddr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(AppState::new(config)))
            .await
            .unwrap()
    });
    Server {
        base: format!("http://{addr}"),
        ws: format!("ws://{addr}"),
        _dir: dir,
    }
}

async fn create(server: &Server, checkpoint: &str, alpha: f64) -> reqwest::Response {
    let body = CreateSession {
        checkpoint: checkpoint.into(),
        alpha,
        beta: None,
        tick_ms: None,
    };
    reqwest::Client::new()
        .post(format!("{}/sessions", server.base))
        .json(&body)
        .send()
        .await
        .unwrap()
}

type Socket =
    tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn connect(server: &Server, id: &str) -> Socket {
    tokio_tungstenite::connect_async(format!("{}/session/{id}", server.ws))
        .await
        .unwrap()
        .0
}

async fn send(ws: &mut Socket, json: &str) {
    ws.send(Message::Text(json.into())).await.unwrap();
}

async fn next_msg(ws: &mut Socket) -> Option<ServerMessage> {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .ok()??
            .ok()?;
        if let Message::Text(t) = msg {
            return Some(serde_json::from_str(&t).unwrap());
        }
    }
}

async fn next_frame(ws: &mut Socket) -> TelemetryFrame {
    loop {
        if let ServerMessage::Telemetry(f) = next_msg(ws).await.expect("telemetry") {
            return f;
        }
    }
}

#[tokio::test]
async fn rest_lifecycle_and_isolation() {
    let server = start().await;
    let a: SessionState = create(&server, "dp", 0.01).await.json().await.unwrap();
    let b: SessionState = create(&server, "dp", 0.02).await.json().await.unwrap();
    assert_ne!(a.id, b.id);
    assert!(!a.running && a.tick == 0);
    assert_eq!(a.version, 1);

    let resp = create(
        &server,
        &server._dir.path().join("junk.ckpt").display().to_string(),
        0.01,
    )
    .await;
    assert_eq!(resp.status(), 422);
    let err: ErrorBody = resp.json().await.unwrap();
    assert!(err.error.contains("checkpoint"), "{}", err.error);
    assert_eq!(create(&server, "missing", 0.01).await.status(), 422);

    let client = reqwest::Client::new();
    let got: SessionState = client
        .get(format!("{}/sessions/{}", server.base, a.id))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(got.alpha, 0.01);
    let all: Vec<SessionState> = client
        .get(format!("{}/sessions", server.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(all.len(), 2);

    assert_eq!(
        client
            .delete(format!("{}/sessions/{}", server.base, a.id))
            .send()
            .await
            .unwrap()
            .status(),
        200
    );
    assert_eq!(
        client
            .get(format!("{}/sessions/{}", server.base, a.id))
            .send()
            .await
            .unwrap()
            .status(),
        404
    );
    let still: SessionState = client
        .get(format!("{}/sessions/{}", server.base, b.id))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(still.alpha, 0.02);
}

#[tokio::test]
async fn paused_until_resume_then_consecutive_frames() {
    let server = start().await;
    let s: SessionState = create(&server, "dp", 0.01).await.json().await.unwrap();
    let mut ws = connect(&server, &s.id).await;

    // several tick periods pass with no frame
    let quiet = tokio::time::timeout(Duration::from_millis(150), ws.next()).await;
    assert!(quiet.is_err(), "paused session produced {quiet:?}");

    send(&mut ws, r#"{"kind":"resume"}"#).await;
    match next_msg(&mut ws).await.unwrap() {
        ServerMessage::Ack(ack) => assert!(ack.ok && ack.tick == 0),
        other => panic!("expected ack, got {other:?}"),
    }
    let mut last = 0;
    for _ in 0..6 {
        let f = next_frame(&mut ws).await;
        assert_eq!(f.tick, last + 1);
        assert_eq!(f.version, 1);
        assert!((0.0..=1.0).contains(&f.slav));
        last = f.tick;
    }

    send(&mut ws, r#"{"kind":"pause"}"#).await;
    let mut drained = Vec::new();
    while let Ok(Some(Ok(Message::Text(t)))) =
        tokio::time::timeout(Duration::from_millis(150), ws.next()).await
    {
        drained.push(serde_json::from_str::<ServerMessage>(&t).unwrap());
    }
    // at most the frame of the tick already in flight follows the ack
    let frames = drained
        .iter()
        .filter(|m| matches!(m, ServerMessage::Telemetry(_)))
        .count();
    assert!(frames <= 1, "{drained:?}");
}

#[tokio::test]
async fn preference_change_is_echoed_next_tick() {
    let server = start().await;
    let s: SessionState = create(&server, "dp", 0.01).await.json().await.unwrap();
    let mut ws = connect(&server, &s.id).await;
    send(&mut ws, r#"{"kind":"resume"}"#).await;
    next_frame(&mut ws).await;

    send(
        &mut ws,
        r#"{"kind":"set_preference","payload":{"alpha":0.03}}"#,
    )
    .await;
    let ack_tick = loop {
        match next_msg(&mut ws).await.unwrap() {
            ServerMessage::Ack(a) => {
                assert!(a.ok);
                break a.tick;
            }
            ServerMessage::Telemetry(f) => assert_eq!(f.alpha, 0.01),
        }
    };
    let f = loop {
        let f = next_frame(&mut ws).await;
        if f.tick > ack_tick {
            break f;
        }
        assert_eq!(f.alpha, 0.01);
    };
    assert_eq!(f.tick, ack_tick + 1);
    assert_eq!(f.alpha, 0.03);
    // mean of exp(λ) is 1/λ
    assert!((f.preference_input[0] - 0.03 * RATE).abs() < 1e-12);
}

#[tokio::test]
async fn node_toggle_and_rejections() {
    let server = start().await;
    let s: SessionState = create(&server, "dp", 0.01).await.json().await.unwrap();
    let mut ws = connect(&server, &s.id).await;

    send(&mut ws, r#"{"kind":"node_down","payload":{"node":42}}"#).await;
    match next_msg(&mut ws).await.unwrap() {
        ServerMessage::Ack(a) => assert!(!a.ok && a.error.unwrap().contains("42")),
        other => panic!("{other:?}"),
    }
    send(&mut ws, r#"{"kind":"warp"}"#).await;
    match next_msg(&mut ws).await.unwrap() {
        ServerMessage::Ack(a) => assert!(!a.ok && a.error.unwrap().contains("malformed")),
        other => panic!("{other:?}"),
    }

    send(&mut ws, r#"{"kind":"node_down","payload":{"node":3}}"#).await;
    send(&mut ws, r#"{"kind":"resume"}"#).await;
    let f = next_frame(&mut ws).await;
    let n3 = &f.per_node[3];
    assert_eq!(n3.status, NodeStatus::Down);
    assert_eq!(n3.power, 0.0);
    assert!(n3.instance_counts.iter().all(|&c| c == 0));

    send(&mut ws, r#"{"kind":"node_up","payload":{"node":3}}"#).await;
    let f = loop {
        let f = next_frame(&mut ws).await;
        if f.per_node[3].status == NodeStatus::Up {
            break f;
        }
    };
    assert!(f.per_node[3].power >= 0.0);
}
