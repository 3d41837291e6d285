mod common;

use std::time::Duration;

use relaylab_gateway::{ClientFrame, ServerFrame};
use serde_json::json;

use common::start;

fn send(conversation: &str, cmid: &str, body: &str) -> ClientFrame {
    ClientFrame::Send {
        conversation_id: conversation.into(),
        client_msg_id: cmid.into(),
        body: body.into(),
    }
}

#[tokio::test]
async fn auth_lists_open_conversations() {
    let server = start(30).await;
    let dyad = server.swap_dyad("auth").await;
    let mut client = server.connect().await;
    match client.auth(&dyad.a.1).await {
        ServerFrame::AuthOk {
            participant_id,
            display_name,
            open_conversations,
        } => {
            assert_eq!(participant_id.as_str(), dyad.a.0);
            assert_eq!(display_name, "Alice");
            assert_eq!(open_conversations, vec![dyad.conversation.as_str().into()]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test]
async fn bad_token_gets_auth_error_then_close() {
    let server = start(30).await;
    let mut client = server.connect().await;
    match client.auth("not-a-token").await {
        ServerFrame::Error { code, .. } => assert_eq!(code, "AUTH"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(client.closed_within(Duration::from_secs(2)).await);
}

#[tokio::test]
async fn frames_before_auth_are_refused_without_closing() {
    let server = start(30).await;
    let mut client = server.connect().await;
    client.send(&send("conv_x", "c1", "hello")).await;
    match client.recv().await {
        ServerFrame::Error { code, .. } => assert_eq!(code, "SEQUENCE"),
        other => panic!("unexpected {other:?}"),
    }
    client.send_raw(r#"{"type":"nonsense"}"#).await;
    assert!(matches!(client.recv().await, ServerFrame::Error { code, .. } if code == "BAD_FRAME"));
    client.send(&ClientFrame::Ping).await;
    assert_eq!(client.recv().await, ServerFrame::Pong);
}

#[tokio::test]
async fn recipient_sees_transformed_text_and_sender_sees_original() {
    let server = start(30).await;
    let dyad = server.swap_dyad("mirror").await;
    let mut alice = server.connect().await;
    let mut alice_tab = server.connect().await;
    let mut bob = server.connect().await;
    alice.auth(&dyad.a.1).await;
    alice_tab.auth(&dyad.a.1).await;
    bob.auth(&dyad.b.1).await;

    alice.send(&send(&dyad.conversation, "m1", "The doctor called the pilot.")).await;
    match alice.recv().await {
        ServerFrame::Ack { seq, duplicate, .. } => assert_eq!((seq, duplicate), (2, false)),
        other => panic!("unexpected {other:?}"),
    }
    match bob.recv().await {
        ServerFrame::Event { body, author, seq, system, .. } => {
            assert_eq!(body, "The pilot called the doctor.");
            assert_eq!(author.unwrap().display_name, "Alice");
            assert_eq!(seq, 2);
            assert!(!system);
        }
        other => panic!("unexpected {other:?}"),
    }
    match alice_tab.recv().await {
        ServerFrame::Event { body, .. } => assert_eq!(body, "The doctor called the pilot."),
        other => panic!("unexpected {other:?}"),
    }

    // Bob is the manipulated side only; his words reach Alice verbatim.
    bob.send(&send(&dyad.conversation, "m1", "A doctor? Really?")).await;
    assert!(matches!(bob.recv().await, ServerFrame::Ack { seq: 3, .. }));
    match alice.recv().await {
        ServerFrame::Event { body, .. } => assert_eq!(body, "A doctor? Really?"),
        other => panic!("unexpected {other:?}"),
    }

    let (_, messages) = server.get(&format!("/conversations/{}/messages", dyad.conversation)).await;
    assert_eq!(messages[0]["deliveries"][0]["delivered_body"], "The pilot called the doctor.");
}

#[tokio::test]
async fn resend_with_same_client_id_is_deduplicated() {
    let server = start(30).await;
    let dyad = server.swap_dyad("dedup").await;
    let mut alice = server.connect().await;
    let mut bob = server.connect().await;
    alice.auth(&dyad.a.1).await;
    bob.auth(&dyad.b.1).await;

    for expected_duplicate in [false, true] {
        alice.send(&send(&dyad.conversation, "same", "hello")).await;
        match alice.recv().await {
            ServerFrame::Ack { seq, duplicate, .. } => assert_eq!((seq, duplicate), (2, expected_duplicate)),
            other => panic!("unexpected {other:?}"),
        }
    }
    assert!(matches!(bob.recv().await, ServerFrame::Event { seq: 2, .. }));
    assert!(bob.recv_within(Duration::from_millis(300)).await.is_none());
}

#[tokio::test]
async fn fetch_returns_the_callers_view_since_a_seq() {
    let server = start(30).await;
    let dyad = server.swap_dyad("fetch").await;
    let mut alice = server.connect().await;
    alice.auth(&dyad.a.1).await;
    alice.send(&send(&dyad.conversation, "m1", "ask the doctor")).await;
    alice.recv().await;

    let mut bob = server.connect().await;
    bob.auth(&dyad.b.1).await;
    bob.send(&ClientFrame::Fetch {
        conversation_id: dyad.conversation.as_str().into(),
        since_seq: 0,
    })
    .await;
    match bob.recv().await {
        ServerFrame::Event { seq: 1, system: true, author: None, body, .. } => {
            assert_eq!(body, "Solve the riddle together.")
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(bob.recv().await, ServerFrame::Event { seq: 2, body, .. } if body == "ask the pilot"));

    bob.send(&ClientFrame::Fetch {
        conversation_id: dyad.conversation.as_str().into(),
        since_seq: 2,
    })
    .await;
    assert!(bob.recv_within(Duration::from_millis(300)).await.is_none());
}

#[tokio::test]
async fn relay_errors_map_to_frame_codes() {
    let server = start(30).await;
    let dyad = server.swap_dyad("errors").await;
    let other = server.swap_dyad("errors-other").await;
    let mut alice = server.connect().await;
    alice.auth(&dyad.a.1).await;

    alice.send(&send(&other.conversation, "m1", "hi")).await;
    assert!(matches!(alice.recv().await, ServerFrame::Error { code, .. } if code == "FORBIDDEN"));

    alice.send(&send(&dyad.conversation, "big", &"x".repeat(4097))).await;
    assert!(matches!(alice.recv().await, ServerFrame::Error { code, .. } if code == "SIZE"));

    server
        .post(&format!("/conversations/{}/close", dyad.conversation), json!({}))
        .await;
    alice.send(&send(&dyad.conversation, "late", "hi")).await;
    assert!(matches!(alice.recv().await, ServerFrame::Error { code, .. } if code == "CLOSED"));
}

#[tokio::test]
async fn silent_connections_are_dropped_after_missed_heartbeats() {
    let server = start(1).await;
    let mut client = server.connect().await;
    // Not reading means the client never answers the server's pings.
    tokio::time::sleep(Duration::from_millis(3500)).await;
    assert!(client.closed_within(Duration::from_secs(3)).await);
}

#[tokio::test]
async fn responsive_connections_survive_heartbeats() {
    let server = start(1).await;
    let dyad = server.swap_dyad("alive").await;
    let mut client = server.connect().await;
    client.auth(&dyad.a.1).await;
    // Reading lets the client answer pings automatically.
    assert!(!client.closed_within(Duration::from_millis(3500)).await);
    client.send(&ClientFrame::Ping).await;
    assert_eq!(client.recv().await, ServerFrame::Pong);
}
