mod support;

use std::time::{Duration, Instant};

use chrono::Utc;
use daisy_core::clients::{resolve_accession, FIXTURE_PROTEOME};
use daisy_core::service::{
    compute_proteome_stats, process_manifest, CurationRequest, Pipeline, ProteomeRun, RequestMode, RequestStatus,
    Service, ServiceConfig, ServiceError,
};
use serde_json::json;
use support::server::{offline_clients, status_of, TestServer};

fn start(dir: &std::path::Path) -> std::sync::Arc<Service> {
    let mut config = ServiceConfig::new(dir.join("data"));
    config.workers = 2;
    Service::start(config, Pipeline::with_defaults(offline_clients(&dir.join("cache")))).unwrap()
}

fn wait(svc: &Service, id: &str) -> CurationRequest {
    let started = Instant::now();
    loop {
        let (req, _) = svc.get_request(id).unwrap();
        if req.status.is_terminal() {
            return req;
        }
        assert!(
            started.elapsed() < Duration::from_secs(30),
            "request {id} stuck in {:?}",
            req.status
        );
        std::thread::sleep(Duration::from_millis(20));
    }
}

#[test]
fn submission_validation() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(dir.path());
    let e = |r: Result<String, ServiceError>| r.unwrap_err();
    assert!(matches!(
        e(svc.submit_request("4F47", " ", RequestMode::Basic, &[])),
        ServiceError::MissingEmail
    ));
    assert!(matches!(
        e(svc.submit_request("xx", "a@b", RequestMode::Basic, &[])),
        ServiceError::InvalidAccession(_)
    ));
    assert!(matches!(
        e(svc.submit_request("SYN1", "a@b", RequestMode::Advanced, &[])),
        ServiceError::EmptySelection
    ));
    assert!(matches!(
        e(svc.submit_request("SYN1", "a@b", RequestMode::Advanced, &["9.9".into()])),
        ServiceError::InvalidSubclass(_)
    ));
    assert!(matches!(
        e(svc.submit_request(FIXTURE_PROTEOME, "a@b", RequestMode::Basic, &[])),
        ServiceError::ModeMismatch(..)
    ));
    assert!(matches!(
        e(svc.submit_request("SYN1", "a@b", RequestMode::Proteome, &[])),
        ServiceError::ModeMismatch(..)
    ));
    assert!(matches!(svc.get_request("nope"), Err(ServiceError::UnknownToken(_))));
}

#[test]
fn requests_run_to_completion_or_failure() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(dir.path());
    let ok = svc.submit_request("SYN1", "a@b", RequestMode::Basic, &[]).unwrap();
    let adv = svc
        .submit_request("SYN1", "a@b", RequestMode::Advanced, &["4.4".into()])
        .unwrap();
    let missing = svc.submit_request("1ABC", "a@b", RequestMode::Basic, &[]).unwrap();
    assert_eq!(wait(&svc, &ok).status, RequestStatus::Done);
    let (_, res) = svc.get_request(&ok).unwrap();
    let res = res.unwrap();
    assert_eq!(res.bundle.region_count(), 1);
    assert_eq!(res.bundle.chains[0].executed_subclasses[0].to_string(), "3.3");
    assert!(res.exec_seconds >= 0.0);
    for a in &res.bundle.artifacts {
        assert!(svc.artifact_dir(&ok).join(a).is_file(), "{a}");
    }
    assert_eq!(wait(&svc, &adv).status, RequestStatus::Done);
    let (_, adv_res) = svc.get_request(&adv).unwrap();
    let chain = &adv_res.unwrap().bundle.chains[0];
    assert!(chain.user_selection);
    assert_eq!(
        chain
            .executed_subclasses
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>(),
        ["4.4"]
    );
    let failed = wait(&svc, &missing);
    assert_eq!(failed.status, RequestStatus::Failed);
    assert!(failed.error.unwrap().contains("1ABC"));
}

#[test]
fn interrupted_work_resumes_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = daisy_core::service::Store::open(&dir.path().join("data")).unwrap();
        store
            .save_request(&CurationRequest {
                id: "interrupted-0000000001".into(),
                email: "a@b".into(),
                accession: resolve_accession("SYN2").unwrap(),
                mode: RequestMode::Basic,
                selected_subclasses: Default::default(),
                status: RequestStatus::Running,
                submitted_at: Utc::now(),
                started_at: Some(Utc::now()),
                finished_at: None,
                error: None,
            })
            .unwrap();
    }
    let svc = start(dir.path());
    let req = wait(&svc, "interrupted-0000000001");
    assert_eq!(req.status, RequestStatus::Done);
    assert_eq!(svc.get_request(&req.id).unwrap().1.unwrap().bundle.region_count(), 2);
}

#[test]
fn proteome_parallelism_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::with_defaults(offline_clients(&dir.path().join("cache")));
    let manifest = pipeline.clients.fetch_proteome_manifest(FIXTURE_PROTEOME).unwrap();
    let (one, skipped) = process_manifest(&pipeline, &manifest, 1, &dir.path().join("p1"));
    let (four, _) = process_manifest(&pipeline, &manifest, 4, &dir.path().join("p4"));
    assert!(skipped.is_empty());
    let strip = |v: &[daisy_core::service::ProteomeEntry]| {
        v.iter()
            .map(|e| {
                (
                    e.accession.clone(),
                    e.source,
                    e.component.clone(),
                    e.has_trr,
                    e.region_count,
                    e.error.clone(),
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&one), strip(&four));
    let (a, b) = (
        compute_proteome_stats(&one).unwrap(),
        compute_proteome_stats(&four).unwrap(),
    );
    assert_eq!((a.processed_total, a.processed_pdb, a.processed_alphafold), (5, 3, 2));
    assert_eq!(
        (b.processed_total, b.structures_with_trr),
        (a.processed_total, a.structures_with_trr)
    );
    assert_eq!(a.structures_with_trr, 3);
    assert_eq!(a.avg_regions_per_trr_structure, Some(4.0 / 3.0));
    for label in ["Processed structures", "APT (seconds)", "Structures with TRR"] {
        assert!(a.to_table(FIXTURE_PROTEOME).contains(label), "{label}");
    }
    assert!(compute_proteome_stats(&[]).is_err());
}

#[test]
fn http_errors_and_incomplete_runs() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path());
    let (code, body) = server.post_json("/api/requests", &json!({"accession": "SYN1"}));
    assert!(code == 400 || code == 422, "{code} {body}");
    let (code, body) = server.post_json("/api/requests", &json!({"accession": "SYN1", "email": ""}));
    assert_eq!((code, body["code"].as_str()), (400, Some("MISSING_EMAIL")));
    let (code, body) = server.get_json("/api/proteomes/unknown-run");
    assert_eq!((code, body["code"].as_str()), (404, Some("UNKNOWN_RUN")));

    let pending = ProteomeRun {
        run_id: "pending-run".into(),
        proteome_id: FIXTURE_PROTEOME.into(),
        status: RequestStatus::Queued,
        submitted_at: Utc::now(),
        finished_at: None,
        entries: Vec::new(),
        skipped: Vec::new(),
        stats: None,
        error: None,
    };
    server.service.store().save_run(&pending).unwrap();
    let (code, body) = server.get_json("/api/proteomes/pending-run/stats");
    assert_eq!((code, body["code"].as_str()), (503, Some("RUN_INCOMPLETE")));
    let (code, _) = server.get_json("/api/proteomes/pending-run/results?order_by=size");
    assert_eq!(code, 400);

    let (code, body) = server.post_json(
        "/api/requests",
        &json!({"accession": FIXTURE_PROTEOME, "email": "a@b", "mode": "PROTEOME"}),
    );
    assert_eq!(code, 201, "{body}");
    let id = body["id"].as_str().unwrap().to_string();
    let v = server.poll(&format!("/api/requests/{id}"), Duration::from_secs(30), |v| {
        status_of(v) == "DONE"
    });
    assert_eq!(v["request"]["mode"], "PROTEOME");
    let (code, run) = server.get_json(&format!("/api/proteomes/{id}"));
    assert_eq!(code, 200);
    assert_eq!(run["entries"].as_array().unwrap().len(), 5);
    let (_, rows) = server.get_json(&format!(
        "/api/proteomes/{id}/results?component=solenoid&order_by=db&dir=desc"
    ));
    let accs: Vec<&str> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["accession"].as_str().unwrap())
        .collect();
    assert_eq!(accs, ["Q0SYN4", "9SY1"]);
    server.stop();
}

#[test]
fn outputs_only_after_completion() {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path());
    let (_, body) = server.post_json("/api/requests", &json!({"accession": "1ABC", "email": "a@b"}));
    let id = body["id"].as_str().unwrap().to_string();
    let v = server.poll(&format!("/api/requests/{id}"), Duration::from_secs(30), |v| {
        status_of(v) == "FAILED"
    });
    assert!(v["request"]["error"].as_str().is_some());
    let (code, _) = server.get(&format!("/api/requests/{id}/outputs/summary.json"));
    assert_eq!(code, 404);
    let (code, tax) = server.get_json("/api/taxonomy");
    assert_eq!(code, 200);
    let classes = tax["classes"].as_array().unwrap();
    assert_eq!(
        classes.iter().map(|c| c["class"].as_u64().unwrap()).collect::<Vec<_>>(),
        [3, 4, 5]
    );
    assert!(classes[0]["subclasses"]
        .as_array()
        .unwrap()
        .iter()
        .any(|s| s["id"] == "3.3"));
}
