use fde_exchange::harness::{Classified, Harness, Scenario};
use fde_exchange::transport::{Fault, FaultPlan};
use fde_exchange::wire::MessageType;
use fde_exchange::{ClientOutcome, ClientStep, RailKind, ReasonCode, Scheme, ServerOptions, ServerOutcome, SessionConfig};

fn file(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 37 % 251) as u8).collect()
}

fn cfg(scheme: Scheme, rail: RailKind) -> SessionConfig {
    SessionConfig { scheme, rail, ..SessionConfig::default() }
}

#[test]
fn every_scheme_and_rail_delivers() {
    let plain = file(200);
    let h = Harness::new(&plain, 16, 3).unwrap();
    for scheme in Scheme::ALL {
        for rail in RailKind::ALL {
            let c = cfg(scheme, rail);
            let r = h.deliver(&c, 11).unwrap();
            assert!(r.client.paid_only_after_verification(), "{scheme}/{rail}");
            assert_eq!(r.client_delta, -(c.price as i128));
            assert!(r.wire_bytes > plain.len() as u64);
        }
    }
}

#[test]
fn subset_purchase_returns_only_those_blocks() {
    let plain = file(31 * 9 + 5);
    let h = Harness::new(&plain, 16, 4).unwrap();
    let subset = vec![1u64, 4, 9];
    let c = SessionConfig { subset: Some(subset.clone()), ..cfg(Scheme::VeckPlus, RailKind::Htlc) };
    let r = h.run(&Scenario::honest(c, 5)).unwrap();
    let ClientOutcome::Delivered(bytes) = &r.client.outcome else { panic!("{:?}", r.client.outcome) };
    let mut expected = Vec::new();
    for &i in &subset {
        let start = i as usize * 31;
        expected.extend_from_slice(&plain[start..(start + 31).min(plain.len())]);
    }
    assert_eq!(bytes, &expected);
    assert_eq!(r.server.outcome, ServerOutcome::Paid);
}

#[test]
fn tampered_bundle_is_refused_before_payment() {
    let plain = file(120);
    let h = Harness::new(&plain, 16, 6).unwrap();
    for scheme in Scheme::ALL {
        for seed in 0..4 {
            let mut sc = Scenario::honest(cfg(scheme, RailKind::Contract), seed);
            sc.server_fault = Some(FaultPlan { target: MessageType::Bundle, fault: Fault::Tamper, seed });
            let r = h.run(&sc).unwrap();
            let class = r.classify(&plain, sc.cfg.price);
            assert!(
                matches!(class, Classified::UnpaidNoKey | Classified::DeliveredAndPaid),
                "{scheme} seed {seed}: {class:?}"
            );
            if !r.client.paid() {
                assert!(matches!(
                    r.client.outcome,
                    ClientOutcome::Aborted(ReasonCode::VerCtFail | ReasonCode::VerKeyFail)
                ));
            }
        }
    }
}

#[test]
fn withheld_key_is_refunded_on_every_rail() {
    let plain = file(64);
    let h = Harness::new(&plain, 16, 7).unwrap();
    for rail in RailKind::ALL {
        let mut sc = Scenario::honest(cfg(Scheme::VeckStar, rail), 2);
        sc.server = ServerOptions { withhold_key: true, ..ServerOptions::default() };
        let r = h.run(&sc).unwrap();
        assert_eq!(r.classify(&plain, sc.cfg.price), Classified::Refunded, "{rail}");
        assert_eq!(r.server.outcome, ServerOutcome::Withheld);
        assert!(r.client.steps.contains(&ClientStep::Refunded));
    }
}

#[test]
fn lost_key_message_is_recovered_from_the_ledger() {
    let plain = file(64);
    let h = Harness::new(&plain, 16, 8).unwrap();
    for rail in RailKind::ALL {
        for fault in [Fault::Drop, Fault::Tamper] {
            let mut sc = Scenario::honest(cfg(Scheme::VeckPlus, rail), 3);
            sc.server_fault = Some(FaultPlan { target: MessageType::KeyReveal, fault, seed: 1 });
            let r = h.run(&sc).unwrap();
            assert_eq!(r.classify(&plain, sc.cfg.price), Classified::DeliveredAndPaid, "{rail} {fault:?}");
        }
    }
}

#[test]
fn wrong_key_claim_is_rejected_and_real_one_pays() {
    let plain = file(64);
    let h = Harness::new(&plain, 16, 9).unwrap();
    for rail in RailKind::ALL {
        let mut sc = Scenario::honest(cfg(Scheme::VeckStar, rail), 4);
        sc.server = ServerOptions { wrong_key_first: true, ..ServerOptions::default() };
        let r = h.run(&sc).unwrap();
        assert_eq!(r.classify(&plain, sc.cfg.price), Classified::DeliveredAndPaid, "{rail}");
    }
}

#[test]
fn mismatched_terms_abort_with_negotiation() {
    let plain = file(64);
    let h = Harness::new(&plain, 16, 10).unwrap();
    let mut sc = Scenario::honest(cfg(Scheme::VeckStar, RailKind::Htlc), 5);
    sc.client_fault = Some(FaultPlan { target: MessageType::Offer, fault: Fault::Tamper, seed: 0 });
    let r = h.run(&sc).unwrap();
    assert!(!r.client.paid());
    assert_eq!(r.classify(&plain, sc.cfg.price), Classified::UnpaidNoKey);
}
