//! Independent reference implementations used by the integration tests and
//! the acceptance harness. Nothing here calls the code under test for the
//! quantity being checked.

#![allow(dead_code)]

use std::collections::BTreeMap;

use daisy_core::classify::{ProfileHmm, T_DD, T_DM, T_II, T_IM, T_MD, T_MI, T_MM};
use daisy_core::structmodel::Vec3;
use nalgebra::{Matrix4, Rotation3, SymmetricEigen, UnitQuaternion, Vector3};
use rand::Rng;

pub fn random_points<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.gen_range(-scale..scale),
                rng.gen_range(-scale..scale),
                rng.gen_range(-scale..scale),
            )
        })
        .collect()
}

/// Uniformly distributed rotation from a normalised 4D Gaussian.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation3<f64> {
    loop {
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
            return uq.to_rotation_matrix();
        }
    }
}

fn centroid(p: &[Vec3]) -> Vec3 {
    p.iter().fold(Vec3::zeros(), |a, x| a + x) / p.len() as f64
}

/// RMSD after rotating `mobile` by `r` and matching centroids (the optimal
/// translation for a fixed rotation).
pub fn rmsd_for_rotation(mobile: &[Vec3], target: &[Vec3], r: &Rotation3<f64>) -> f64 {
    let pc = centroid(mobile);
    let qc = centroid(target);
    let s: f64 = mobile
        .iter()
        .zip(target)
        .map(|(p, q)| (r * (p - pc) - (q - qc)).norm_squared())
        .sum();
    (s / mobile.len() as f64).sqrt()
}

/// Brute-force minimum RMSD: a ZYZ Euler grid followed by pattern search on
/// small rotation-vector perturbations.
pub fn grid_min_rmsd(mobile: &[Vec3], target: &[Vec3]) -> f64 {
    let step = 10f64.to_radians();
    let mut best_r = Rotation3::identity();
    let mut best = rmsd_for_rotation(mobile, target, &best_r);
    let na = (std::f64::consts::TAU / step).round() as usize;
    let nb = (std::f64::consts::PI / step).round() as usize;
    for i in 0..na {
        for j in 0..=nb {
            for k in 0..na {
                let r = Rotation3::from_axis_angle(&Vector3::z_axis(), i as f64 * step)
                    * Rotation3::from_axis_angle(&Vector3::y_axis(), j as f64 * step)
                    * Rotation3::from_axis_angle(&Vector3::z_axis(), k as f64 * step);
                let v = rmsd_for_rotation(mobile, target, &r);
                if v < best {
                    best = v;
                    best_r = r;
                }
            }
        }
    }
    let mut h = step;
    while h > 1e-9 {
        let mut improved = false;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut w = Vector3::zeros();
                w[axis] = sign * h;
                let r = Rotation3::from_scaled_axis(w) * best_r;
                let v = rmsd_for_rotation(mobile, target, &r);
                if v < best - 1e-15 {
                    best = v;
                    best_r = r;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best
}

/// Minimum RMSD from the largest eigenvalue of Horn's 4x4 quaternion matrix.
pub fn horn_rmsd(mobile: &[Vec3], target: &[Vec3]) -> f64 {
    let pc = centroid(mobile);
    let qc = centroid(target);
    let mut s = [[0.0f64; 3]; 3];
    let mut e0 = 0.0;
    for (p, q) in mobile.iter().zip(target) {
        let a = p - pc;
        let b = q - qc;
        e0 += a.norm_squared() + b.norm_squared();
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += a[i] * b[j];
            }
        }
    }
    let [[sxx, sxy, sxz], [syx, syy, syz], [szx, szy, szz]] = s;
    let n = Matrix4::new(
        sxx + syy + szz,
        syz - szy,
        szx - sxz,
        sxy - syx,
        syz - szy,
        sxx - syy - szz,
        sxy + syx,
        szx + sxz,
        szx - sxz,
        sxy + syx,
        -sxx + syy - szz,
        syz + szy,
        sxy - syx,
        szx + sxz,
        syz + szy,
        -sxx - syy + szz,
    );
    let lmax = SymmetricEigen::new(n).eigenvalues.max();
    ((e0 - 2.0 * lmax).max(0.0) / mobile.len() as f64).sqrt()
}

/// Random profile with `m` match states and scores in a small range.
pub fn random_profile<R: Rng>(rng: &mut R, m: usize) -> ProfileHmm {
    let mut match_emissions = Vec::with_capacity(m);
    let mut transitions = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = [0.0; 20];
        for v in row.iter_mut() {
            *v = rng.gen_range(-3.0..3.0);
        }
        match_emissions.push(row);
        let mut t = [0.0; 7];
        for v in t.iter_mut() {
            *v = rng.gen_range(-4.0..0.5);
        }
        transitions.push(t);
    }
    ProfileHmm {
        name: "rand".into(),
        accession: "PF_RAND".into(),
        match_emissions,
        transitions,
        background: [0.05; 20],
    }
}

#[derive(Clone, Copy)]
enum St {
    M,
    I,
    D,
}

/// Best score of every local path, keyed by (first, last) consumed residue.
///
/// Paths start in any match state on any residue, end after any match state,
/// and follow the profile topology: M_k to M_k+1, I_k or D_k+1; I_k to I_k or
/// M_k+1; D_k to D_k+1 or M_k+1. Insert and unknown residues score 0.
pub fn enumerate_local_paths(profile: &ProfileHmm, seq: &[Option<usize>]) -> BTreeMap<(usize, usize), f64> {
    let m = profile.len();
    let mut best: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    #[allow(clippy::too_many_arguments)]
    fn walk(
        p: &ProfileHmm,
        seq: &[Option<usize>],
        st: St,
        k: usize,
        i: usize,
        start: usize,
        score: f64,
        best: &mut BTreeMap<(usize, usize), f64>,
    ) {
        let m = p.len();
        let t = &p.transitions;
        let emit = |k: usize, i: usize| seq[i].map_or(0.0, |r| p.match_emissions[k][r]);
        match st {
            St::M => {
                let e = best.entry((start, i)).or_insert(f64::NEG_INFINITY);
                if score > *e {
                    *e = score;
                }
                if k + 1 < m && i + 1 < seq.len() {
                    walk(
                        p,
                        seq,
                        St::M,
                        k + 1,
                        i + 1,
                        start,
                        score + t[k][T_MM] + emit(k + 1, i + 1),
                        best,
                    );
                }
                if i + 1 < seq.len() {
                    walk(p, seq, St::I, k, i + 1, start, score + t[k][T_MI], best);
                }
                if k + 1 < m {
                    walk(p, seq, St::D, k + 1, i, start, score + t[k][T_MD], best);
                }
            }
            St::I => {
                if i + 1 < seq.len() {
                    walk(p, seq, St::I, k, i + 1, start, score + t[k][T_II], best);
                    if k + 1 < m {
                        walk(
                            p,
                            seq,
                            St::M,
                            k + 1,
                            i + 1,
                            start,
                            score + t[k][T_IM] + emit(k + 1, i + 1),
                            best,
                        );
                    }
                }
            }
            St::D => {
                if k + 1 < m {
                    walk(p, seq, St::D, k + 1, i, start, score + t[k][T_DD], best);
                    if i + 1 < seq.len() {
                        walk(
                            p,
                            seq,
                            St::M,
                            k + 1,
                            i + 1,
                            start,
                            score + t[k][T_DM] + emit(k + 1, i + 1),
                            best,
                        );
                    }
                }
            }
        }
    }

    for i in 0..seq.len() {
        for k in 0..m {
            let e = seq[i].map_or(0.0, |r| profile.match_emissions[k][r]);
            walk(profile, seq, St::M, k, i, i, e, &mut best);
        }
    }
    best
}

/// Pairs of a two-half placement, built without reference to the library.
pub fn oracle_pairs(start: isize, n_shift: isize, c_shift: isize, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for k in 0..m {
        let q = start + k as isize + if 2 * k < m - (m % 2) { n_shift } else { c_shift };
        if q < 0 || q as usize >= n {
            continue;
        }
        if out.last().is_some_and(|&(lq, _)| q as usize <= lq) {
            continue;
        }
        out.push((q as usize, k));
    }
    out
}

pub struct WindowHit {
    pub pairs: Vec<(usize, usize)>,
    pub rmsd: f64,
    pub coverage: f64,
}

/// Every alignment that passes the filters among two-half placements with
/// shifts up to `max_shift` (no seed pre-filter) and, when `ungapped`, plain
/// windows of every admissible length.
pub fn exhaustive_window_hits(
    query: &[Vec3],
    template: &[Vec3],
    rmsd_cutoff: f64,
    min_coverage: f64,
    min_span: usize,
    max_shift: isize,
    ungapped: bool,
) -> Vec<WindowHit> {
    let n = query.len();
    let m = template.len();
    let mut hits = Vec::new();
    let mut consider = |pairs: Vec<(usize, usize)>| {
        if pairs.len() < 3 {
            return;
        }
        let coverage = pairs.len() as f64 / m as f64;
        let span = pairs.last().unwrap().0 - pairs[0].0 + 1;
        if coverage < min_coverage || span < min_span {
            return;
        }
        let q: Vec<Vec3> = pairs.iter().map(|p| query[p.0]).collect();
        let t: Vec<Vec3> = pairs.iter().map(|p| template[p.1]).collect();
        let rmsd = horn_rmsd(&q, &t);
        if rmsd <= rmsd_cutoff {
            hits.push(WindowHit { pairs, rmsd, coverage });
        }
    };
    // seed windows may overhang either end by two residues
    for start in -2..=(n as isize - m as isize + 2) {
        for a in -max_shift..=max_shift {
            for b in -max_shift..=max_shift {
                consider(oracle_pairs(start, a, b, n, m));
            }
        }
    }
    if !ungapped {
        return hits;
    }
    let min_len = ((min_coverage * m as f64).ceil() as usize).max(3);
    for len in min_len..=m.min(n) {
        for t0 in 0..=(m - len) {
            for q0 in 0..=(n - len) {
                consider((0..len).map(|j| (q0 + j, t0 + j)).collect());
            }
        }
    }
    hits
}

/// Region validity evaluated straight from its definition.
pub fn oracle_valid(
    spans: &[(usize, usize)],
    max_gap: usize,
    max_ratio: f64,
    min_units: usize,
    min_len: usize,
) -> bool {
    if spans.len() < min_units {
        return false;
    }
    if spans.iter().any(|&(s, e)| e - s + 1 < min_len) {
        return false;
    }
    let mut total = 0usize;
    let mut separated = 0usize;
    for i in 1..spans.len() {
        let g = spans[i].0 as isize - spans[i - 1].1 as isize - 1;
        if g > 0 {
            total += g as usize;
            separated += 1;
        }
    }
    total < max_gap || (separated as f64) <= max_ratio * spans.len() as f64
}

/// Consecutive units of `len` residues separated by `gaps`.
pub fn span_layout(len: usize, gaps: &[usize]) -> Vec<(usize, usize)> {
    let mut spans = vec![(0, len - 1)];
    for g in gaps {
        let s = spans.last().unwrap().1 + 1 + g;
        spans.push((s, s + len - 1));
    }
    spans
}

pub mod server {
    use std::path::Path;
    use std::sync::Arc;
    use std::time::{Duration, Instant};

    use daisy_core::clients::{ClientConfig, Clients, NoNetwork};
    use daisy_core::service::{http, Pipeline, Service, ServiceConfig};
    use serde_json::Value;

    /// Offline clients caching under `cache`.
    pub fn offline_clients(cache: &Path) -> Arc<Clients> {
        let mut config = ClientConfig::new(cache);
        config.offline = true;
        Arc::new(Clients::new(config, Arc::new(NoNetwork)))
    }

    /// A service plus its HTTP API on an ephemeral local port.
    pub struct TestServer {
        pub base: String,
        pub service: Arc<Service>,
        runtime: Option<tokio::runtime::Runtime>,
        stop: Option<tokio::sync::oneshot::Sender<()>>,
        task: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
        agent: ureq::Agent,
    }

    impl TestServer {
        pub fn start(data_dir: &Path) -> TestServer {
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("runtime");
            let mut config = ServiceConfig::new(data_dir.join("data"));
            config.workers = 2;
            config.proteome_parallelism = 2;
            let service = Service::start(
                config,
                Pipeline::with_defaults(offline_clients(&data_dir.join("cache"))),
            )
            .expect("service starts");
            let listener = runtime
                .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
                .expect("bind");
            let base = format!("http://{}", listener.local_addr().unwrap());
            let (tx, rx) = tokio::sync::oneshot::channel::<()>();
            let task = runtime.spawn(http::serve(listener, service.clone(), async {
                let _ = rx.await;
            }));
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .http_status_as_error(false)
                .timeout_global(Some(Duration::from_secs(30)))
                .build()
                .into();
            TestServer {
                base,
                service,
                runtime: Some(runtime),
                stop: Some(tx),
                task: Some(task),
                agent,
            }
        }

        pub fn get(&self, path: &str) -> (u16, Vec<u8>) {
            let mut resp = self.agent.get(&format!("{}{}", self.base, path)).call().expect("GET");
            let status = resp.status().as_u16();
            let body = resp.body_mut().read_to_vec().expect("body");
            (status, body)
        }

        pub fn get_json(&self, path: &str) -> (u16, Value) {
            let (s, b) = self.get(path);
            (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
        }

        pub fn post_json(&self, path: &str, body: &Value) -> (u16, Value) {
            let mut resp = self
                .agent
                .post(&format!("{}{}", self.base, path))
                .header("content-type", "application/json")
                .send(body.to_string())
                .expect("POST");
            let status = resp.status().as_u16();
            let text = resp.body_mut().read_to_string().expect("body");
            (status, serde_json::from_str(&text).unwrap_or(Value::Null))
        }

        /// Poll `path` until `done` holds for its JSON, or panic after `limit`.
        pub fn poll(&self, path: &str, limit: Duration, done: impl Fn(&Value) -> bool) -> Value {
            let started = Instant::now();
            loop {
                let (_, v) = self.get_json(path);
                if done(&v) {
                    return v;
                }
                assert!(started.elapsed() < limit, "timed out polling {path}: {v}");
                std::thread::sleep(Duration::from_millis(50));
            }
        }

        /// Graceful stop of the HTTP server and the worker pool.
        pub fn stop(mut self) {
            self.halt();
        }

        fn halt(&mut self) {
            if let Some(tx) = self.stop.take() {
                let _ = tx.send(());
            }
            if let (Some(rt), Some(task)) = (self.runtime.as_ref(), self.task.take()) {
                let _ = rt.block_on(task);
            }
            self.service.shutdown();
            if let Some(rt) = self.runtime.take() {
                rt.shutdown_timeout(Duration::from_secs(5));
            }
        }
    }

    impl Drop for TestServer {
        fn drop(&mut self) {
            self.halt();
        }
    }

    pub fn status_of(v: &Value) -> &str {
        v["request"]["status"].as_str().unwrap_or("")
    }
}

/// Every file under `root` with its bytes, keyed by relative path.
pub fn tree_bytes(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Library of `subclasses.len()` subclasses with `per` units each; the first
/// subclass holds the solenoid unit plus `per - 1` compact decoys.
pub fn equal_subclass_srul(subclasses: &[daisy_core::classify::SubclassId], per: usize) -> daisy_core::reupred::Srul {
    use daisy_core::reupred::{compact_unit, Srul, SrulEntry};
    use daisy_core::structmodel::synth::{build_backbone_seq, solenoid_unit, SOLENOID_UNIT_SEQ};
    let mut entries = Vec::new();
    for (i, id) in subclasses.iter().enumerate() {
        for j in 0..per {
            let unit = if i == 0 && j == 0 {
                build_backbone_seq('A', &solenoid_unit(), SOLENOID_UNIT_SEQ, 1)
            } else {
                compact_unit(20, 9000 + (i * 100 + j) as u64)
            };
            entries.push(SrulEntry::new(&format!("s{i}_u{j}"), id.clone(), unit).unwrap());
        }
    }
    Srul::new(entries).unwrap()
}

/// Eight subclasses of the bundled taxonomy, the solenoid's own (3.3) first.
pub fn eight_subclasses() -> Vec<daisy_core::classify::SubclassId> {
    let own: daisy_core::classify::SubclassId = "3.3".parse().unwrap();
    let mut ids = vec![own.clone()];
    ids.extend(
        daisy_core::classify::Taxonomy::builtin()
            .ids()
            .into_iter()
            .filter(|i| *i != own)
            .take(7),
    );
    assert_eq!(ids.len(), 8);
    ids
}
