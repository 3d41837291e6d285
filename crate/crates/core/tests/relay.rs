mod common;

use std::collections::BTreeMap;

use common::*;
use relaylab_core::transform::TransformSpec;
use relaylab_core::*;

#[test]
fn swap_reaches_recipient_only() {
    let d = dyad(swap());
    let ack = d
        .platform
        .submit_message(&d.a.token, &d.conversation, "m1", "let's sacrifice the pilot")
        .unwrap();
    assert_eq!(ack.seq, 2);
    assert!(!ack.duplicate);
    assert_eq!(ack.own_event.body, "let's sacrifice the pilot");
    assert_eq!(ack.deliveries.len(), 1);
    assert_eq!(ack.deliveries[0].body, "let's sacrifice the doctor");

    let a_view = d.platform.fetch_backlog(&d.a.token, &d.conversation, 0).unwrap();
    let b_view = d.platform.fetch_backlog(&d.b.token, &d.conversation, 0).unwrap();
    assert_eq!(a_view[1].body, "let's sacrifice the pilot");
    assert_eq!(b_view[1].body, "let's sacrifice the doctor");
    assert_eq!(b_view[1].author.as_ref(), Some(&d.a.participant.id));
    assert_eq!(b_view[1].author_name.as_deref(), Some("Alice"));
    assert!(b_view.iter().all(|e| !e.body.contains("pilot")));
}

#[test]
fn prompt_is_first_event_of_every_view() {
    let d = dyad(TransformSpec::identity());
    for token in [&d.a.token, &d.b.token] {
        let view = d.platform.fetch_backlog(token, &d.conversation, 0).unwrap();
        assert_eq!(view.len(), 1);
        assert_eq!(view[0].seq, 1);
        assert_eq!(view[0].kind, ViewEventKind::System);
        assert_eq!(view[0].body, PROMPT);
        assert_eq!(view[0].author, None);
    }
}

#[test]
fn identity_condition_mirrors() {
    let d = dyad(TransformSpec::identity());
    d.platform.submit_message(&d.a.token, &d.conversation, "m1", "ok").unwrap();
    let a_view = d.platform.fetch_backlog(&d.a.token, &d.conversation, 1).unwrap();
    let b_view = d.platform.fetch_backlog(&d.b.token, &d.conversation, 1).unwrap();
    assert_eq!(a_view[0].body, "ok");
    assert_eq!(b_view[0].body, "ok");
}

#[test]
fn resend_is_deduplicated() {
    let d = dyad(swap());
    let first = d.platform.submit_message(&d.a.token, &d.conversation, "m1", "hi").unwrap();
    let again = d.platform.submit_message(&d.a.token, &d.conversation, "m1", "hi").unwrap();
    assert_eq!(first.seq, again.seq);
    assert_eq!(first.message_id, again.message_id);
    assert!(again.duplicate);
    assert!(again.deliveries.is_empty());
    assert_eq!(d.platform.fetch_backlog(&d.b.token, &d.conversation, 0).unwrap().len(), 2);
}

#[test]
fn backlog_cursor() {
    let d = dyad(TransformSpec::identity());
    for i in 0..4 {
        d.platform
            .submit_message(&d.a.token, &d.conversation, &format!("m{i}"), "x")
            .unwrap();
    }
    let all = d.platform.fetch_backlog(&d.a.token, &d.conversation, 0).unwrap();
    assert_eq!(all.iter().map(|e| e.seq).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    assert!(d.platform.fetch_backlog(&d.a.token, &d.conversation, 5).unwrap().is_empty());
}

#[test]
fn submit_errors() {
    let d = dyad(TransformSpec::identity());
    let err = d.platform.submit_message("nope", &d.conversation, "m", "x").unwrap_err();
    assert_eq!(err.code(), "AUTH");
    let big = "a".repeat(4097);
    let err = d.platform.submit_message(&d.a.token, &d.conversation, "m", &big).unwrap_err();
    assert_eq!(err.code(), "SIZE");
    assert!(d.platform.submit_message(&d.a.token, &d.conversation, "m", &"é".repeat(4096)).is_ok());
    let err = d
        .platform
        .submit_message(&d.a.token, &ConversationId::from("conv_missing"), "m", "x")
        .unwrap_err();
    assert_eq!(err.code(), "NOT_FOUND");

    let outsider = d.platform.register_participant(&d.experiment.id, "Eve").unwrap();
    let err = d.platform.submit_message(&outsider.token, &d.conversation, "m", "x").unwrap_err();
    assert_eq!(err.code(), "FORBIDDEN");
    let err = d.platform.fetch_backlog(&outsider.token, &d.conversation, 0).unwrap_err();
    assert_eq!(err.code(), "FORBIDDEN");
}

#[test]
fn close_is_idempotent_and_blocks_submits() {
    let d = dyad(TransformSpec::identity());
    d.platform.submit_message(&d.a.token, &d.conversation, "m1", "bye").unwrap();
    let closed = d.platform.close_conversation(&d.conversation).unwrap();
    assert_eq!(closed.state, ConversationState::Closed);
    let again = d.platform.close_conversation(&d.conversation).unwrap();
    assert_eq!(again, closed);
    let err = d.platform.submit_message(&d.a.token, &d.conversation, "m2", "x").unwrap_err();
    assert_eq!(err.code(), "CLOSED");
    // a resend of an already stored message still gets its ack
    assert!(d.platform.submit_message(&d.a.token, &d.conversation, "m1", "bye").unwrap().duplicate);
    assert_eq!(d.platform.fetch_backlog(&d.b.token, &d.conversation, 0).unwrap().len(), 2);
}

#[test]
fn open_conversation_guards() {
    let platform = Platform::in_memory().unwrap();
    let exp = platform.create_experiment(config("e", 1, vec![identity_condition()])).unwrap();
    let ids: Vec<ParticipantId> = ["A", "B", "C"]
        .iter()
        .map(|n| platform.register_participant(&exp.id, n).unwrap().participant.id)
        .collect();
    let all_identity = |ps: &[ParticipantId]| -> BTreeMap<ParticipantId, TransformSpec> {
        ps.iter().map(|p| (p.clone(), TransformSpec::identity())).collect()
    };

    let three = platform.open_conversation(&exp.id, &ids, all_identity(&ids)).unwrap();
    for p in &ids {
        assert_eq!(platform.fetch_backlog_as(p, &three.id, 0).unwrap().len(), 1);
    }

    let dup = [ids[0].clone(), ids[0].clone()];
    assert_eq!(
        platform.open_conversation(&exp.id, &dup, all_identity(&dup)).unwrap_err().code(),
        "VALIDATION"
    );
    let unknown = [ids[0].clone(), ParticipantId::from("pt_ghost")];
    assert_eq!(
        platform.open_conversation(&exp.id, &unknown, all_identity(&unknown)).unwrap_err().code(),
        "NOT_FOUND"
    );
    let partial = all_identity(&ids[..1]);
    assert_eq!(
        platform.open_conversation(&exp.id, &ids[..2], partial).unwrap_err().code(),
        "VALIDATION"
    );
}

#[test]
fn three_party_fan_out() {
    let platform = Platform::in_memory().unwrap();
    let exp = platform.create_experiment(config("e3", 1, vec![identity_condition()])).unwrap();
    let regs: Vec<Registration> = ["A", "B", "C"]
        .iter()
        .map(|n| platform.register_participant(&exp.id, n).unwrap())
        .collect();
    let ids: Vec<ParticipantId> = regs.iter().map(|r| r.participant.id.clone()).collect();
    let condition = BTreeMap::from([
        (ids[0].clone(), TransformSpec::identity()),
        (ids[1].clone(), swap()),
        (ids[2].clone(), TransformSpec::lexicon_remove(["pilot"]).unwrap()),
    ]);
    let conv = platform.open_conversation(&exp.id, &ids, condition).unwrap();
    let ack = platform
        .submit_message(&regs[0].token, &conv.id, "m", "the pilot stays")
        .unwrap();
    let bodies: BTreeMap<ParticipantId, String> = ack
        .deliveries
        .iter()
        .map(|e| (e.owner.clone(), e.body.clone()))
        .collect();
    assert_eq!(bodies.len(), 2);
    assert_eq!(bodies[&ids[1]], "the doctor stays");
    assert_eq!(bodies[&ids[2]], "the stays");
    assert_eq!(platform.deliveries(&ack.message_id).unwrap().len(), 2);
}

#[test]
fn open_conversations_listing() {
    let d = dyad(TransformSpec::identity());
    assert_eq!(
        d.platform.open_conversations_of(&d.a.participant.id).unwrap(),
        std::slice::from_ref(&d.conversation)
    );
    d.platform.close_conversation(&d.conversation).unwrap();
    assert!(d.platform.open_conversations_of(&d.a.participant.id).unwrap().is_empty());
}
