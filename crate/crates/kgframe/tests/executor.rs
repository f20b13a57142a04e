mod common;

use std::collections::HashSet;
use std::num::NonZeroU64;
use std::time::Duration;

use common::{numbered_table, Mock, MockOptions};
use kgframe::executor::{CountingTransport, EndpointConfig, ExecError, Executor, UreqTransport, GET_LIMIT};
use kgframe::results::{parse_results, to_results_json};
use kgframe_core::oracle::{bag_equal, eval_model, solution_to_table};
use kgframe_core::testkit::{random_program, random_store};
use kgframe_core::{generate, Iri};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const ALL: &str = "SELECT * WHERE { ?s ?p ?o }";

fn config(mock: &Mock, page: u64) -> EndpointConfig {
    EndpointConfig::new(&mock.url)
        .with_page_size(NonZeroU64::new(page).unwrap())
        .with_retries(2, Duration::from_millis(5))
        .with_timeout(Duration::from_secs(5))
}

#[test]
fn thousand_rows_in_ten_pages() {
    let table = numbered_table(1000);
    let mock = Mock::start(table.clone());
    let run = Executor::http(config(&mock, 100)).execute(ALL).unwrap();
    assert_eq!(mock.request_count(), 10);
    assert_eq!(run.requests, 10);
    assert_eq!(run.table.len(), 1000);
    let distinct: HashSet<_> = run.table.rows().iter().collect();
    assert_eq!(distinct.len(), 1000);
    assert!(bag_equal(&run.table, &table));
    assert_eq!(run.table.rows(), table.rows(), "pages keep endpoint order");
}

#[test]
fn exact_multiple_needs_no_trailing_empty_page() {
    let mock = Mock::start(numbered_table(300));
    let run = Executor::http(config(&mock, 100)).execute(ALL).unwrap();
    assert_eq!((run.requests, run.table.len()), (3, 300));
}

#[test]
fn user_limit_is_respected() {
    let mock = Mock::start(numbered_table(1000));
    let run = Executor::http(config(&mock, 100)).execute("SELECT * WHERE { ?s ?p ?o } LIMIT 7").unwrap();
    assert_eq!((run.requests, run.table.len()), (1, 7));
}

#[test]
fn user_offset_is_applied_once() {
    let table = numbered_table(50);
    let mock = Mock::start(table.clone());
    let run = Executor::http(config(&mock, 10)).execute("SELECT * WHERE { ?s ?p ?o } LIMIT 25 OFFSET 20").unwrap();
    assert_eq!(run.table.rows(), &table.rows()[20..45]);
    assert_eq!(run.requests, 3);
}

#[test]
fn server_error_on_third_request_is_retried() {
    let table = numbered_table(1000);
    let mock = Mock::with(table.clone(), MockOptions { fail_requests: vec![3], ..Default::default() });
    let run = Executor::http(config(&mock, 100)).execute(ALL).unwrap();
    assert_eq!(run.retries, 1);
    assert_eq!(run.requests, 10);
    assert_eq!(mock.request_count(), 11);
    assert!(bag_equal(&run.table, &table));
}

#[test]
fn persistent_server_error_surfaces_status_and_body() {
    let mock = Mock::with(numbered_table(5), MockOptions { status: Some(503), ..Default::default() });
    let err = Executor::http(config(&mock, 100)).execute(ALL).unwrap_err();
    match &err {
        ExecError::Endpoint { status, excerpt } => {
            assert_eq!(*status, 503);
            assert!(excerpt.contains("mock error body"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(mock.request_count(), 3);
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn client_error_is_not_retried() {
    let mock = Mock::with(numbered_table(5), MockOptions { status: Some(400), ..Default::default() });
    let err = Executor::http(config(&mock, 100)).execute(ALL).unwrap_err();
    assert!(matches!(err, ExecError::Endpoint { status: 400, .. }));
    assert_eq!(mock.request_count(), 1);
}

#[test]
fn slow_endpoint_times_out() {
    let mock = Mock::with(numbered_table(5), MockOptions { delay: Duration::from_millis(600), ..Default::default() });
    let cfg = config(&mock, 100).with_timeout(Duration::from_millis(100)).with_retries(1, Duration::ZERO);
    let err = Executor::http(cfg).execute(ALL).unwrap_err();
    assert!(matches!(err, ExecError::Timeout { attempts: 2 }), "{err:?}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn unreachable_endpoint() {
    let url = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/sparql", l.local_addr().unwrap())
    };
    let cfg = EndpointConfig::new(url).with_retries(1, Duration::ZERO);
    let err = Executor::http(cfg).execute(ALL).unwrap_err();
    assert!(matches!(err, ExecError::Unreachable { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn changing_columns_between_pages_is_a_protocol_error() {
    let mock = Mock::with(numbered_table(30), MockOptions { rename_after_first: true, ..Default::default() });
    let err = Executor::http(config(&mock, 10)).execute(ALL).unwrap_err();
    assert!(matches!(err, ExecError::Protocol(_)), "{err:?}");
}

#[test]
fn long_queries_are_posted_with_default_graph() {
    let mock = Mock::start(numbered_table(3));
    let pad = " ".repeat(GET_LIMIT);
    let cfg = config(&mock, 100).with_default_graph(Iri::new("http://example.org/g").unwrap());
    let exec = Executor::http(cfg);
    exec.execute(ALL).unwrap();
    exec.execute(&format!("SELECT * WHERE {{ ?s ?p ?o {pad}}}")).unwrap();
    let log = mock.requests();
    assert_eq!(log[0].method, "GET");
    assert_eq!(log[1].method, "POST");
    assert!(log.iter().all(|r| r.default_graph.as_deref() == Some("http://example.org/g")));
    assert!(log[1].query.contains("LIMIT 101"));
}

#[test]
fn dataset_clauses_reach_the_outer_query() {
    let mock = Mock::start(numbered_table(3));
    Executor::http(config(&mock, 100)).execute("SELECT ?s FROM <http://g> WHERE { ?s ?p ?o }").unwrap();
    let q = &mock.requests()[0].query;
    let outer_where = q.find("WHERE").unwrap();
    let from = q.find("FROM <http://g>").unwrap();
    assert!(from < outer_where);
    assert_eq!(q.matches("FROM").count(), 1);
}

#[test]
fn no_request_before_execute() {
    let mock = Mock::start(numbered_table(3));
    let counting = CountingTransport::new(UreqTransport::new(Duration::from_secs(5)));
    let exec = Executor::new(&counting, config(&mock, 100));
    let mut rng = StdRng::seed_from_u64(7);
    let frame = random_program(&mut rng, 4, true);
    let _query = kgframe_core::emit(&generate(&frame).unwrap());
    assert_eq!(counting.count(), 0);
    exec.execute(ALL).unwrap();
    assert_eq!(counting.count(), 1);
}

#[test]
fn results_round_trip_through_json() {
    for seed in 0..50 {
        let mut rng = StdRng::seed_from_u64(seed);
        let data = random_store(&mut rng, 40, true);
        let frame = random_program(&mut rng, 4, true);
        let bag = eval_model(&generate(&frame).unwrap(), &data).unwrap();
        let table = solution_to_table(&bag);
        let body = to_results_json(&table).to_string();
        let back = parse_results(&body).unwrap();
        assert!(bag_equal(&table, &back), "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn pagination_is_lossless(rows in 0usize..260, page in 1u64..60) {
        let table = numbered_table(rows);
        let mock = Mock::start(table.clone());
        let run = Executor::http(config(&mock, page)).execute(ALL).unwrap();
        prop_assert_eq!(run.table.rows(), table.rows());
        prop_assert_eq!(run.requests as u64, (rows as u64).div_ceil(page).max(1));
    }
}
