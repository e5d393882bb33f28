mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use cgoracle::bench::synth::{self, SynthParams};
use cgoracle::query::render::parse_structured;
use cgoracle::query::server::{self, ServerHandle};
use cgoracle::{CallGraph, EdgeStyle, Oracle, RawEdge};
use common::{answers_only, write_file, Http};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain() -> Oracle {
    let mut g = CallGraph::new();
    g.add_edges(&[
        RawEdge::new("a", "b", EdgeStyle::Solid, "chain"),
        RawEdge::new("b", "c", EdgeStyle::Dotted, "chain"),
    ]);
    Oracle::new(g)
}

fn start(oracle: Oracle) -> ServerHandle {
    server::spawn(Arc::new(oracle), "127.0.0.1:0".parse().unwrap()).unwrap()
}

#[test]
fn dest_query_over_http() {
    let srv = start(chain());
    let mut http = Http::connect(srv.local_addr());
    let (status, body) = http.get("/query/dest?fn=c");
    assert_eq!(status, 200);
    let parsed = parse_structured(&body).unwrap();
    assert_eq!(parsed.kind, "dest");
    assert_eq!(parsed.answers, ["a", "b"]);
    assert_eq!(parsed.count, 2);
    srv.shutdown().unwrap();
}

#[test]
fn bogus_kind_leaves_connection_usable() {
    let srv = start(chain());
    let mut http = Http::connect(srv.local_addr());
    let (status, body) = http.get("/query/bogus?fn=c");
    assert_eq!(status, 404);
    assert!(body.starts_with("error "), "{body}");
    let (status, body) = http.get("/query/source?fn=nope&frob=1");
    assert_eq!(status, 400);
    assert!(body.contains("frob"), "{body}");
    let (status, body) = http.get("/query/reachable?fn=a");
    assert_eq!(status, 400);
    assert!(body.contains("target"), "{body}");
    let (status, body) = http.get("/query/source?fn=a");
    assert_eq!(status, 200);
    assert_eq!(parse_structured(&body).unwrap().answers, ["b", "c"]);
}

#[test]
fn every_kind_answers() {
    let srv = start(chain());
    let mut http = Http::connect(srv.local_addr());
    let cases: &[(&str, &[&str])] = &[
        ("/query/file?file=chain", &["a b chain solid", "b c chain dotted"]),
        ("/query/source?fn=a", &["b", "c"]),
        ("/query/dest?fn=c", &["a", "b"]),
        ("/query/cutoff?fn=a&excluded=b&mode=filter", &["c"]),
        ("/query/cutoff?fn=a&excluded=b&mode=barrier", &[]),
        ("/query/cutoff?fn=a&excluded=b", &["c"]),
        ("/query/reachable?fn=a&target=c", &["true"]),
        ("/query/reachable?fn=c&target=a", &["false"]),
        ("/query/top?limit=1", &["c 2"]),
        ("/query/dest?fn=unknown_function", &[]),
        ("/stats", &["functions 3", "files 1", "edges 2", "raw_edges 2", "version 1"]),
    ];
    for (target, want) in cases {
        let (status, body) = http.get(target);
        assert_eq!(status, 200, "{target}: {body}");
        assert_eq!(parse_structured(&body).unwrap().answers, *want, "{target}");
    }
}

#[test]
fn second_identical_query_is_cached() {
    let srv = start(chain());
    let mut http = Http::connect(srv.local_addr());
    let first = parse_structured(&http.get("/query/dest?fn=c").1).unwrap();
    let second = parse_structured(&http.get("/query/dest?fn=c").1).unwrap();
    assert!(!first.cached);
    assert!(second.cached);
    assert_eq!(first.answers, second.answers);
}

#[test]
fn html_and_structured_carry_the_same_answers() {
    let srv = start(chain());
    let mut http = Http::connect(srv.local_addr());
    let structured = parse_structured(&http.get("/query/file?file=chain").1).unwrap();
    let (status, html) = http.get("/query/file?file=chain&render=html");
    assert_eq!(status, 200);
    assert!(html.starts_with("<h3>"), "{html}");
    let items: Vec<String> = html
        .lines()
        .filter_map(|l| l.strip_prefix("<li>")?.strip_suffix("</li>"))
        .map(str::to_owned)
        .collect();
    assert_eq!(items, structured.answers);
}

#[test]
fn answers_above_the_cap_are_truncated() {
    let mut g = CallGraph::new();
    let edges: Vec<RawEdge> = (0..10)
        .map(|i| RawEdge::new(&format!("caller{i}"), "hub", EdgeStyle::Solid, "h"))
        .collect();
    g.add_edges(&edges);
    let srv = start(Oracle::new(g).with_answer_cap(4));
    let mut http = Http::connect(srv.local_addr());
    let (_, body) = http.get("/query/dest?fn=hub");
    let parsed = parse_structured(&body).unwrap();
    assert_eq!(parsed.count, 4);
    assert_eq!(parsed.truncated_from, Some(10));
    assert!(body.ends_with("# truncated 10\n"), "{body}");
}

#[test]
fn admin_ingest_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    write_file(
        &dir.path().join("dumps/init/main.eg"),
        "digraph callgraph { \"start_kernel\" -> \"kmalloc\" [style=solid]; }",
    );
    let srv = start(Oracle::default());
    let mut http = Http::connect(srv.local_addr());
    let dumps = dir.path().join("dumps");
    let (status, body) = http.request("POST", &format!("/admin/ingest?path={}&mode=strict", dumps.display()));
    assert_eq!(status, 200, "{body}");
    assert!(body.contains("edges_emitted 1"), "{body}");

    let snap = dir.path().join("g.snap");
    let (status, body) = http.request("POST", &format!("/admin/snapshot?action=save&path={}", snap.display()));
    assert_eq!(status, 200, "{body}");
    let before = parse_structured(&http.get("/query/dest?fn=kmalloc").1).unwrap();

    let (status, body) = http.request("POST", &format!("/admin/snapshot?action=load&path={}", snap.display()));
    assert_eq!(status, 200, "{body}");
    let after = parse_structured(&http.get("/query/dest?fn=kmalloc").1).unwrap();
    assert_eq!(before.answers, ["start_kernel"]);
    assert_eq!(before.answers, after.answers);
    assert!(after.version > before.version);

    let (status, _) = http.request("POST", "/admin/ingest?path=/no/such/dir");
    assert_eq!(status, 422);
    let (status, _) = http.request("POST", "/admin/snapshot?action=explode&path=/tmp/x");
    assert_eq!(status, 400);
    let (status, _) = http.get("/admin/ingest?path=/tmp");
    assert_eq!(status, 405);
}

#[test]
fn hundred_concurrent_queries_match_sequential_answers() {
    let mut g = CallGraph::new();
    g.add_edges(&synth::generate(&SynthParams::with_edges(10_000).seed(42)));
    let names: Vec<String> = g.functions().iter().map(|(_, n)| n.to_owned()).collect();
    let srv = start(Oracle::new(g));
    let addr = srv.local_addr();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let targets: Vec<String> = (0..100)
        .map(|i| {
            let f = &names[rng.random_range(0..names.len())];
            let h = &names[rng.random_range(0..names.len())];
            match i % 6 {
                0 => format!("/query/dest?fn={f}"),
                1 => format!("/query/source?fn={f}"),
                2 => format!("/query/cutoff?fn={f}&excluded={h},kmalloc&mode=barrier"),
                3 => format!("/query/reachable?fn={f}&target={h}"),
                4 => format!("/query/top?limit={}", rng.random_range(1..20)),
                _ => format!("/query/file?file=synth/unit{:04}.c", rng.random_range(0..200)),
            }
        })
        .collect();

    let mut http = Http::connect(addr);
    let sequential: Vec<String> = targets.iter().map(|t| answers_only(&http.get(t).1)).collect();

    let concurrent: Vec<String> = std::thread::scope(|scope| {
        let handles: Vec<_> = targets
            .iter()
            .map(|t| {
                scope.spawn(move || {
                    let mut http = Http::connect(addr);
                    let (status, body) = http.get(t);
                    assert_eq!(status, 200, "{t}: {body}");
                    answers_only(&body)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(sequential, concurrent);
    let non_empty: BTreeSet<_> = sequential.iter().filter(|s| s.lines().count() > 1).collect();
    assert!(non_empty.len() > 20);
}
