use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dynmdnd::io::pipeline::{
    run_evaluate, run_loglik, run_metrics, run_predict, run_simulate, run_train,
};
use dynmdnd::io::{
    export_edges, ingest, slotting_of, DatasetSpec, RunConfig, Slotting, TimeUnit, VertexMap,
};
use dynmdnd::{EdgeSequence, Error, TimedEdge};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn three_line_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "e.csv",
        "from,to,when\nalice,bob,10\ncarol,alice,5\nbob,alice,20\n",
    );
    let d = ingest(&DatasetSpec::plain(&p)).unwrap();
    assert_eq!(d.edges.len(), 3);
    assert_eq!(d.vertices.labels(), ["carol", "alice", "bob"]);
    let pairs: Vec<_> = d.edges.edges().iter().map(|e| (e.pair(), e.time)).collect();
    assert_eq!(pairs, vec![((0, 1), 5.0), ((1, 2), 10.0), ((2, 1), 20.0)]);
    let stats = d.stats();
    assert_eq!((stats.n_vertices, stats.n_edges, stats.n_slots), (3, 3, 1));
}

#[test]
fn empty_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    assert!(matches!(
        ingest(&DatasetSpec::plain(&empty)),
        Err(Error::InvalidInput(_))
    ));
    let header_only = write(dir.path(), "h.csv", "s,r,t\n");
    assert!(ingest(&DatasetSpec::plain(&header_only)).is_err());
    let bad = write(dir.path(), "bad.csv", "s,r,t\na,b,1\nb,c,oops\n");
    match ingest(&DatasetSpec::plain(&bad)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
    let short = write(dir.path(), "short.csv", "s,r,t\na,b,1\n\nb,c\n");
    match ingest(&DatasetSpec::plain(&short)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
    let commented = write(dir.path(), "c.csv", "s,r,t\n# note\n\na,b,x\n");
    match ingest(&DatasetSpec::plain(&commented)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
    let negative = write(dir.path(), "n.csv", "s,r,t\na,b,-1\n");
    assert!(matches!(
        ingest(&DatasetSpec::plain(&negative)),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(matches!(
        ingest(&DatasetSpec::plain(dir.path().join("missing.csv"))),
        Err(Error::Io { .. })
    ));
}

#[test]
fn descriptor_options() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "e.tsv",
        "# comment\n2\tx\ty\n0\ty\tx\n1\tx\tx\n3\tz\tx\n",
    );
    let spec = DatasetSpec {
        delimiter: '\t',
        header: false,
        sender_col: 1,
        recipient_col: 2,
        time_col: 0,
        timestamp_unit: TimeUnit::Days,
        symmetrize: true,
        slotting: Slotting::FixedWidth {
            width: 2.0,
            origin: None,
        },
        ..DatasetSpec::plain(&p)
    };
    let d = ingest(&spec).unwrap();
    // loops are not mirrored
    assert_eq!(d.edges.len(), 7);
    assert_eq!(d.edges.edges()[0].time, 0.0);
    assert_eq!(d.edges.edges().last().unwrap().time, 3.0 * 86_400.0);
    assert_eq!(
        d.edges.slot_boundaries().unwrap(),
        [0.0, 172_800.0, 345_600.0]
    );
    let same_cols = DatasetSpec {
        recipient_col: 1,
        ..spec.clone()
    };
    assert!(matches!(ingest(&same_cols), Err(Error::Config(_))));
    let bad_width = DatasetSpec {
        slotting: Slotting::FixedWidth {
            width: 0.0,
            origin: None,
        },
        ..spec
    };
    assert!(ingest(&bad_width).is_err());
}

#[test]
fn per_file_and_explicit_slots() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "s,r,t\na,b,0\nb,a,3\n");
    let b = write(dir.path(), "b.csv", "s,r,t\nc,a,5\na,c,9\n");
    let spec = DatasetSpec {
        slotting: Slotting::PerFile {
            files: vec![a.clone(), b.clone()],
        },
        ..DatasetSpec::plain("")
    };
    let d = ingest(&spec).unwrap();
    assert_eq!(d.edges.slot_boundaries().unwrap(), [0.0, 5.0, 9.0]);
    assert_eq!(d.edges.slot_range(1).unwrap(), 2..4);
    let overlap = DatasetSpec {
        slotting: Slotting::PerFile {
            files: vec![b, a.clone()],
        },
        ..DatasetSpec::plain("")
    };
    assert!(ingest(&overlap).is_err());
    let explicit = DatasetSpec {
        slotting: Slotting::Explicit {
            boundaries: vec![0.0, 1.0, 4.0],
        },
        ..DatasetSpec::plain(&a)
    };
    assert_eq!(ingest(&explicit).unwrap().edges.n_slots(), 2);
}

fn edges_strategy() -> impl Strategy<Value = Vec<(u32, u32, f64)>> {
    prop::collection::vec((0u32..12, 0u32..12, 0f64..2e6), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn export_then_ingest_round_trips(raw in edges_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let seq = EdgeSequence::from_unsorted(raw.iter().map(|&(s, r, t)| TimedEdge::new(s, r, t).unwrap()).collect()).unwrap();
        let first = seq.edges()[0].time;
        let seq = seq.with_fixed_slots(first, 1e5).unwrap();
        let path = dir.path().join("x.csv");
        let labels = VertexMap::from_labels((0..12).map(|i| format!("v{i}")).collect()).unwrap();
        export_edges(&path, &seq, &labels).unwrap();
        let spec = DatasetSpec { slotting: slotting_of(&seq), ..DatasetSpec::plain(&path) };
        let once = ingest(&spec).unwrap();
        // ids are reassigned by first appearance, labels are preserved
        for (a, b) in once.edges.edges().iter().zip(seq.edges()) {
            prop_assert_eq!(once.vertices.label(a.sender).unwrap(), labels.label(b.sender).unwrap());
            prop_assert_eq!(once.vertices.label(a.recipient).unwrap(), labels.label(b.recipient).unwrap());
            prop_assert_eq!(a.time.to_bits(), b.time.to_bits());
        }
        export_edges(&path, &once.edges, &once.vertices).unwrap();
        let twice = ingest(&spec).unwrap();
        prop_assert_eq!(&twice, &once);
        for (i, l) in once.vertices.labels().iter().enumerate() {
            prop_assert_eq!(once.vertices.id(l), Some(i as u32));
        }
    }
}

/// The six-edge fixture used throughout, in two slots.
fn fixture_config(dir: &Path, split: &str) -> RunConfig {
    let data = write(
        dir,
        "six.csv",
        "s,r,t\n0,1,0\n0,1,1\n2,3,2\n0,1,3\n2,3,4\n2,1,5\n",
    );
    let text = format!(
        r#"
        seed = 5
        ks = [1, 3]
        repetitions = 3
        output_dir = "{out}"
        [model]
        gamma = 1.0
        tau = 1.0
        alpha = 1.0
        decay = "exponential"
        decay_scale = 1.0
        [chain]
        n_sweeps = 40
        burn_in = 20
        thin = 5
        {split}
        [dataset]
        path = "{data}"
        header = true
        [dataset.slotting]
        kind = "explicit"
        boundaries = [0.0, 2.5, 5.0]
        "#,
        out = dir.join("out").display(),
        data = data.display(),
    );
    RunConfig::from_toml(&text).unwrap()
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn six_edge_pipeline_is_fast_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path(), "[split]\nmode = \"next-slot\"\ntarget_slot = 1");
    let start = Instant::now();
    run_train(&cfg).unwrap();
    let ll = run_loglik(&cfg).unwrap();
    run_predict(&cfg).unwrap();
    let metrics = run_metrics(&cfg).unwrap();
    run_evaluate(&cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() < 1.0, "{:?}", start.elapsed());
    assert!(ll["loglik"].as_f64().unwrap() < 0.0);
    assert_eq!(metrics["repetitions"], 1);
    let out = cfg.output_dir.clone();
    for f in [
        "posterior.json",
        "trace.csv",
        "predictions.csv",
        "metrics.csv",
        "metrics.json",
        "resolved_config.toml",
        "vertices.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = read(out.join("metrics.csv"));
    assert!(csv.starts_with("method,metric,k,repetition,value\n"));
    assert!(csv.contains("\nfrequency,f1,,0,"));
    assert!(csv.contains("\ndynmdnd,map,3,mean,"));

    let first = (read(out.join("posterior.json")), ll, csv);
    let again = fixture_config(dir.path(), "[split]\nmode = \"next-slot\"\ntarget_slot = 1");
    run_train(&again).unwrap();
    let ll2 = run_loglik(&again).unwrap();
    run_evaluate(&again).unwrap();
    assert_eq!(
        first,
        (
            read(out.join("posterior.json")),
            ll2,
            read(out.join("metrics.csv"))
        )
    );
}

#[test]
fn holdout_split_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(
        dir.path(),
        "[split]\nmode = \"within-slot-holdout\"\nfraction = 0.34",
    );
    run_train(&cfg).unwrap();
    let ll = run_loglik(&cfg).unwrap();
    assert_eq!(ll["n_test"], 2);
    assert!(run_predict(&cfg).is_err());
}

#[test]
fn loglik_requires_training_first() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config(dir.path(), "");
    assert!(matches!(run_loglik(&cfg), Err(Error::InvalidInput(_))));
}

#[test]
fn simulate_writes_reingestable_edges() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "seed = 3\noutput_dir = \"{}\"\n[simulate]\nn_edges = 50\nslot_width = 10.0\n[model]\ngamma = 1.0\ntau = 1.0\nalpha = 1.0\ndecay = \"exponential\"\ndecay_scale = 2.0\n",
        dir.path().display()
    );
    let cfg = RunConfig::from_toml(&text).unwrap();
    let summary = run_simulate(&cfg).unwrap();
    assert_eq!(summary["n_edges"], 50);
    let d = ingest(&DatasetSpec::plain(dir.path().join("edges.csv"))).unwrap();
    assert_eq!(d.edges.len(), 50);
    let latent: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("latent.json"))).unwrap();
    assert_eq!(latent["clusters"].as_array().unwrap().len(), 50);
    // without a dataset, training regenerates the simulated sequence
    run_train(&cfg).unwrap();
    assert!(dir.path().join("posterior.json").exists());
}

#[test]
fn config_paths_resolve_against_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.csv", "s,r,t\na,b,0\n");
    let cfg_path = write(dir.path(), "run.toml", "[dataset]\npath = \"e.csv\"\n");
    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.dataset.unwrap().path, dir.path().join("e.csv"));
}
