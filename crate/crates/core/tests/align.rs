mod support;

use daisy_core::align::{
    compute_rmsd, kabsch_superpose, qualifying_alignments, structural_search, unit_similarity_matrix, CaTrace,
    LevelParams, SearchCounter, ViewUnit,
};
use daisy_core::fixtures;
use daisy_core::reupred::Srul;
use daisy_core::structmodel::synth::{build_backbone, random_torsions};
use daisy_core::structmodel::{StructureSource, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point_sets(seed: u64, n: usize) -> (Vec<Vec3>, Vec<Vec3>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = support::random_points(&mut rng, n, 15.0);
    let b = support::random_points(&mut rng, n, 15.0);
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rotation_is_proper_and_optimal(seed in any::<u64>(), n in 3usize..50) {
        let (a, b) = point_sets(seed, n);
        let sup = kabsch_superpose(&a, &b).unwrap();
        let r = sup.rotation;
        prop_assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-9);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        prop_assert!((sup.rmsd - support::horn_rmsd(&a, &b)).abs() < 1e-6);
        let moved: Vec<Vec3> = a.iter().map(|p| sup.apply(p)).collect();
        prop_assert!((compute_rmsd(&moved, &b).unwrap() - sup.rmsd).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..50 {
            let other = support::random_rotation(&mut rng);
            prop_assert!(sup.rmsd <= support::rmsd_for_rotation(&a, &b, &other) + 1e-9);
        }
    }

    #[test]
    fn rmsd_invariant_under_rigid_motion(seed in any::<u64>(), n in 3usize..40) {
        let (a, b) = point_sets(seed, n);
        let base = kabsch_superpose(&a, &b).unwrap().rmsd;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let r = support::random_rotation(&mut rng);
        let t = Vec3::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
        let a2: Vec<Vec3> = a.iter().map(|p| r * p + t).collect();
        let b2: Vec<Vec3> = b.iter().map(|p| r.inverse() * p - t).collect();
        prop_assert!((kabsch_superpose(&a2, &b).unwrap().rmsd - base).abs() < 1e-6);
        prop_assert!((kabsch_superpose(&a, &b2).unwrap().rmsd - base).abs() < 1e-6);
        prop_assert!((kabsch_superpose(&b, &a).unwrap().rmsd - base).abs() < 1e-6);
    }
}

#[test]
fn degenerate_inputs() {
    let line: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
    let shifted: Vec<Vec3> = line.iter().map(|p| p + Vec3::new(0.0, 3.0, 0.0)).collect();
    let sup = kabsch_superpose(&line, &shifted).unwrap();
    assert!(sup.rmsd < 1e-9);
    assert!((sup.rotation.determinant() - 1.0).abs() < 1e-9);
    // a mirror image cannot be reached by a proper rotation
    let tetra = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 2.0, 0.0),
        Vec3::new(0.0, 0.0, 3.0),
    ];
    let mirror: Vec<Vec3> = tetra.iter().map(|p| Vec3::new(p.x, p.y, -p.z)).collect();
    let sup = kabsch_superpose(&tetra, &mirror).unwrap();
    assert!(sup.rmsd > 0.1);
    assert!((sup.rmsd - support::horn_rmsd(&tetra, &mirror)).abs() < 1e-9);
    assert!(kabsch_superpose(&line[..2], &shifted[..2]).is_err());
    assert!(kabsch_superpose(&line, &shifted[..4]).is_err());
}

fn trace_of(torsions: &[daisy_core::structmodel::synth::Torsions]) -> CaTrace {
    CaTrace::from_chain(&build_backbone('A', torsions, 1))
}

#[test]
fn embedded_copy_found_at_its_offset() {
    let unit = random_torsions(24, 3);
    let mut t = random_torsions(31, 8);
    t.extend_from_slice(&unit);
    t.extend(random_torsions(17, 9));
    let mut counter = SearchCounter::new();
    let hit = structural_search(
        &trace_of(&t),
        &trace_of(&unit),
        &LevelParams {
            rmsd_cutoff: 1.0,
            min_coverage: 0.9,
        },
        13,
        &mut counter,
    )
    .expect("copy found");
    assert_eq!(counter.calls(), 1);
    assert!(hit.rmsd < 1e-3);
    assert_eq!(hit.coverage, 1.0);
    // the first residue's CA depends on the preceding torsion, so allow one
    assert!((31..=32).contains(&hit.query_start()), "start {}", hit.query_start());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn relaxing_a_level_never_loses_alignments(seed in any::<u64>(), qlen in 25usize..60, tlen in 15usize..25) {
        let query = trace_of(&random_torsions(qlen, seed));
        let template = trace_of(&random_torsions(tlen, seed ^ 77));
        let strict = LevelParams { rmsd_cutoff: 2.5, min_coverage: 0.8 };
        let loose = LevelParams { rmsd_cutoff: 4.0, min_coverage: 0.6 };
        let a = qualifying_alignments(&query, &template, &strict, 13);
        let b = qualifying_alignments(&query, &template, &loose, 13);
        for x in &a {
            prop_assert!(b.iter().any(|y| y.pairs == x.pairs));
        }
        let best = |v: &[daisy_core::align::StructuralAlignment]| v.iter().map(|x| x.score).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(best(&b) >= best(&a));
        for x in &b {
            prop_assert!(x.rmsd <= 4.0 && x.coverage >= 0.6 && x.query_span() >= 13);
            let q: Vec<Vec3> = x.pairs.iter().map(|p| query.coords[p.0]).collect();
            let t: Vec<Vec3> = x.pairs.iter().map(|p| template.coords[p.1]).collect();
            prop_assert!((support::horn_rmsd(&q, &t) - x.rmsd).abs() < 1e-6);
            prop_assert!((x.score - x.coverage / (1.0 + x.rmsd)).abs() < 1e-12);
        }
    }
}

#[test]
fn decoy_has_no_repeat_window_under_any_template() {
    let decoy = fixtures::decoy("D", StructureSource::Pdb);
    let query = CaTrace::from_chain(&decoy.chains[0]);
    let loosest = LevelParams {
        rmsd_cutoff: 5.0,
        min_coverage: 0.55,
    };
    let srul = Srul::builtin();
    for entry in &srul.entries {
        let template = CaTrace::from_chain(&entry.unit);
        assert!(
            qualifying_alignments(&query, &template, &loosest, 13).is_empty(),
            "{}",
            entry.unit_id
        );
        let oracle = support::exhaustive_window_hits(&query.coords, &template.coords, 5.0, 0.55, 13, 2, false);
        assert!(
            oracle.is_empty(),
            "{}: oracle found rmsd {:.2} cov {:.2} pairs {:?}",
            entry.unit_id,
            oracle[0].rmsd,
            oracle[0].coverage,
            oracle[0].pairs
        );
    }
}

#[test]
fn solenoid_alignments_are_sound_against_oracle() {
    let s = fixtures::solenoid("S", StructureSource::Pdb);
    let query = CaTrace::from_chain(&s.chains[0]);
    let srul = Srul::builtin();
    let template = CaTrace::from_chain(&srul.entry("syn_solenoid").unwrap().unit);
    let level = LevelParams {
        rmsd_cutoff: 2.0,
        min_coverage: 0.85,
    };
    let found = qualifying_alignments(&query, &template, &level, 13);
    assert!(!found.is_empty());
    let oracle = support::exhaustive_window_hits(&query.coords, &template.coords, 2.0, 0.85, 13, 2, true);
    for x in &found {
        let hit = oracle
            .iter()
            .find(|o| o.pairs == x.pairs)
            .expect("library alignment inside oracle space");
        assert!((hit.rmsd - x.rmsd).abs() < 1e-6);
        assert!((hit.coverage - x.coverage).abs() < 1e-12);
    }
    // six exact copies: six starts with a near-zero full-coverage alignment
    let exact: std::collections::BTreeSet<usize> = oracle
        .iter()
        .filter(|o| o.rmsd < 1e-3 && o.coverage == 1.0)
        .map(|o| o.pairs[0].0)
        .collect();
    assert_eq!(exact.len(), 6, "{exact:?}");
    let lib_exact: std::collections::BTreeSet<usize> = found
        .iter()
        .filter(|o| o.rmsd < 1e-3 && o.coverage == 1.0)
        .map(|o| o.query_start())
        .collect();
    assert_eq!(lib_exact, exact);
}

#[test]
fn similarity_matrix_is_symmetric_with_zero_diagonal() {
    let units: Vec<ViewUnit> = (0..4)
        .map(|i| {
            let t = trace_of(&random_torsions(15 + i, i as u64));
            ViewUnit {
                id: format!("u{i}"),
                sequence: vec!['A'; t.len()],
                secondary: vec!['C'; t.len()],
                trace: t,
            }
        })
        .collect();
    let m = unit_similarity_matrix(&units).unwrap();
    assert_eq!(m.size(), 4);
    for i in 0..4 {
        assert_eq!(m.values[i][i], 0.0);
        for j in 0..4 {
            assert!((m.values[i][j] - m.values[j][i]).abs() < 1e-9);
        }
    }
    assert_eq!(m.to_tsv().lines().count(), 5);
}
