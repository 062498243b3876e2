use dstlab_web::demo::{goal_surface, goal_update, nbest, ChatDemo};

#[test]
fn surface_matches_pointwise_updates() {
    let s = goal_surface(0.1, 0.2, 5);
    assert_eq!(s.len(), 25);
    // Row 2 is b = 0.5, column 3 is P+ = 0.75.
    let direct = (0.5 + 0.75 * 0.5) * (1.0 - 0.1 - 0.2);
    assert!((s[2 * 5 + 3] - direct).abs() < 1e-12);
    assert_eq!(goal_update(0.0, 0.0, 0.0, 0.0), 0.0);
    assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn clean_channel_keeps_the_truth_on_top() {
    let h = nbest("dstc2-like", "inform(food=thai)|request(phone)", 0.0, 3).unwrap();
    assert!(h[0].correct);
    assert_eq!(h[0].acts, "inform(food=thai)|request(phone)");
    assert!(h.windows(2).all(|w| w[0].score >= w[1].score));
    let json = serde_json::to_string(&h).unwrap();
    assert!(json.contains("\"score\""));
}

#[test]
fn bad_requests_become_errors() {
    assert!(nbest("dstc2-like", "inform(food=", 0.1, 0).is_err());
    assert!(nbest("nowhere", "affirm", 0.1, 0).is_err());
    assert!(nbest("dstc2-like", "affirm", 1.5, 0).is_err());
}

#[test]
fn chat_round_trip() {
    let mut chat = ChatDemo::train("toy", 60, 1).unwrap();
    assert!((0.0..=1.0).contains(&chat.success_rate));
    assert!(chat.opening().starts_with("hello"));
    let slot = chat.ontology().informable()[0].clone();
    let turn = chat.step(&format!("inform({}={})", slot.name, slot.values[0]), 0.8).unwrap();
    assert!(turn.belief.goal[0].values[0].1 > 0.0);
    assert!(turn.success.is_none() || turn.finished);
    assert!(chat.step("inform(food=", 1.0).is_err());
    let end = chat.step("bye", 1.0).unwrap();
    assert!(end.finished);
    assert!(end.success.is_some());
    assert!(chat.step("hello", 1.0).is_err());
    chat.reset();
    assert!(chat.step("hello", 1.0).is_ok());
}
