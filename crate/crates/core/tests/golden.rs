use kgframe_core::emit::emit;
use kgframe_core::frame::{Direction, JoinType, KnowledgeGraph};
use kgframe_core::generate::generate;
use kgframe_core::{Frame, Iri};

fn dbpedia() -> KnowledgeGraph {
    KnowledgeGraph::new(Iri::new("http://dbpedia.org").unwrap())
        .with_prefix("dbpp", "http://dbpedia.org/property/")
        .with_prefix("dbpr", "http://dbpedia.org/resource/")
        .with_prefix("dbpo", "http://dbpedia.org/ontology/")
        .with_prefix("dcterms", "http://purl.org/dc/terms/")
}

fn dblp() -> KnowledgeGraph {
    KnowledgeGraph::new(Iri::new("http://dblp.l3s.de").unwrap())
        .with_prefix("dc", "http://purl.org/dc/elements/1.1/")
        .with_prefix("dcterm", "http://purl.org/dc/terms/")
        .with_prefix("swrc", "http://swrc.ontoware.org/ontology#")
        .with_prefix("dblprc", "http://dblp.l3s.de/d2r/resource/conferences/")
}

/// Whitespace-insensitive token stream. PREFIX declarations and the
/// optional `.` before a non-triple token are dropped.
fn tokens(q: &str) -> Vec<String> {
    let mut spaced = String::new();
    let mut in_iri = false;
    let mut in_str = false;
    for c in q.chars() {
        match c {
            '"' if !in_iri => {
                in_str = !in_str;
                spaced.push(c);
            }
            '<' if !in_str && !in_iri => {
                in_iri = true;
                spaced.push(c);
            }
            '>' if in_iri => {
                in_iri = false;
                spaced.push(c);
            }
            '{' | '}' | '(' | ')' | ',' | ';' if !in_str && !in_iri => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            _ => spaced.push(c),
        }
    }
    let raw: Vec<String> = spaced.split_whitespace().map(str::to_string).collect();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "PREFIX" {
            i += 3;
            continue;
        }
        out.push(raw[i].clone());
        i += 1;
    }
    let mut cleaned = Vec::new();
    for (i, t) in out.iter().enumerate() {
        let next = out.get(i + 1).map(String::as_str);
        if t == "." && matches!(next, Some("{") | Some("}") | Some("FILTER") | Some("OPTIONAL") | None) {
            continue;
        }
        cleaned.push(t.clone());
    }
    cleaned
}

fn assert_golden(frame: &Frame, expected: &str) {
    let q = emit(&generate(frame).unwrap());
    assert_eq!(tokens(&q), tokens(expected), "generated:\n{q}");
}

fn prolific_actors() -> Frame {
    let g = dbpedia();
    let movies = g.feature_domain_range("dbpp:starring", "movie", "actor").unwrap();
    let american = movies
        .expand("actor", "dbpp:birthPlace", "actor_country")
        .unwrap()
        .filter(&[("actor_country", &["=dbpr:United_States"])])
        .unwrap();
    let prolific = american
        .group_by(&["actor"])
        .unwrap()
        .count("movie", "movie_count", true)
        .unwrap()
        .filter(&[("movie_count", &[">=50"])])
        .unwrap();
    prolific
        .expand_many(
            "actor",
            &[("dbpp:starring", "movie", Direction::Incoming, false), ("dbpp:academyAward", "award", Direction::Outgoing, true)],
        )
        .unwrap()
}

#[test]
fn prolific_actors_query() {
    assert_golden(
        &prolific_actors(),
        r#"
SELECT  *
FROM <http://dbpedia.org>
WHERE
  { ?movie  dbpp:starring  ?actor
    { SELECT DISTINCT  ?actor
        (COUNT(DISTINCT ?movie) AS ?movie_count)
      WHERE
        { ?movie  dbpp:starring    ?actor .
          ?actor  dbpp:birthPlace  ?actor_country
          FILTER ( ?actor_country = dbpr:United_States )
        }
      GROUP BY ?actor
      HAVING ( COUNT(DISTINCT ?movie) >= 50 )
    }
    OPTIONAL
      { ?actor  dbpp:academyAward  ?award }
  }"#,
    );
}

fn genre_classification() -> Frame {
    let g = dbpedia();
    let movies = g
        .feature_domain_range("dbpp:starring", "movie", "actor")
        .unwrap()
        .expand_many(
            "actor",
            &[("dbpp:birthPlace", "actor_country", Direction::Outgoing, false), ("rdfs:label", "actor_name", Direction::Outgoing, false)],
        )
        .unwrap()
        .expand_many(
            "movie",
            &[
                ("rdfs:label", "movie_name", Direction::Outgoing, false),
                ("dcterms:subject", "subject", Direction::Outgoing, false),
                ("dbpp:country", "movie_country", Direction::Outgoing, false),
                ("dbpp:genre", "genre", Direction::Outgoing, true),
            ],
        )
        .unwrap()
        .cache();
    let american = movies.filter(&[("actor_country", &["regex:USA"])]).unwrap();
    let prolific = movies
        .group_by(&["actor"])
        .unwrap()
        .count("movie", "movie_count", true)
        .unwrap()
        .filter(&[("movie_count", &[">=200"])])
        .unwrap();
    american
        .join(&prolific, "actor", "actor", JoinType::FullOuter, "actor")
        .unwrap()
        .join(&movies, "actor", "actor", JoinType::Inner, "actor")
        .unwrap()
}

const MOVIES_BODY: &str = r#"
?movie  dbpp:starring    ?actor .
?actor  dbpp:birthPlace  ?actor_country ;
        rdfs:label       ?actor_name .
?movie  rdfs:label       ?movie_name ;
        dcterms:subject  ?subject ;
        dbpp:country     ?movie_country
"#;

#[test]
fn genre_classification_query() {
    let american = format!(
        "{{ SELECT * WHERE {{ {MOVIES_BODY} FILTER regex(str(?actor_country), \"USA\") OPTIONAL {{ ?movie dbpp:genre ?genre }} }} }}"
    );
    let prolific = format!(
        "{{ SELECT DISTINCT ?actor (COUNT(DISTINCT ?movie) AS ?movie_count) WHERE {{ {MOVIES_BODY} OPTIONAL {{ ?movie dbpp:genre ?genre }} }} GROUP BY ?actor HAVING ( COUNT(DISTINCT ?movie) >= 200 ) }}"
    );
    let opt = |sub: &str| format!("OPTIONAL {}", sub);
    let expected = format!(
        "SELECT * FROM <http://dbpedia.org> WHERE {{ {MOVIES_BODY} OPTIONAL {{ ?movie dbpp:genre ?genre }} \
         {{ {{ SELECT * WHERE {{ {american} {} }} }} UNION {{ SELECT * WHERE {{ {prolific} {} }} }} }} }}",
        opt(&prolific),
        opt(&american),
    );
    assert_golden(&genre_classification(), &expected);
}

fn topic_modeling() -> Frame {
    let g = dblp();
    let papers = g
        .feature_domain_range("dc:title", "paper", "title")
        .unwrap()
        .join(&g.entities("swrc:InProceedings", "paper").unwrap(), "paper", "paper", JoinType::Inner, "paper")
        .unwrap()
        .expand_many(
            "paper",
            &[("dcterm:issued", "date", Direction::Outgoing, false), ("dc:creator", "author", Direction::Outgoing, false)],
        )
        .unwrap()
        .filter(&[("date", &["raw:year(xsd:dateTime(?date)) >= 2005"])])
        .unwrap();
    let authors = g
        .entities("swrc:InProceedings", "paper")
        .unwrap()
        .expand_many(
            "paper",
            &[
                ("swrc:series", "conference", Direction::Outgoing, false),
                ("dc:creator", "author", Direction::Outgoing, false),
                ("dcterm:issued", "date", Direction::Outgoing, false),
            ],
        )
        .unwrap()
        .filter(&[
            ("date", &["raw:year(xsd:dateTime(?date)) >= 2005"]),
            ("conference", &["In(dblprc:vldb, dblprc:sigmod)"]),
        ])
        .unwrap()
        .group_by(&["author"])
        .unwrap()
        .count("paper", "n_papers", false)
        .unwrap()
        .filter(&[("n_papers", &[">=20"])])
        .unwrap()
        .select_cols(&["author"])
        .unwrap();
    papers.join(&authors, "author", "author", JoinType::Inner, "author").unwrap().select_cols(&["title"]).unwrap()
}

#[test]
fn topic_modeling_query() {
    assert_golden(
        &topic_modeling(),
        r#"
  SELECT  ?title
  FROM <http://dblp.l3s.de>
  WHERE
    { ?paper  dc:title       ?title ;
              rdf:type       swrc:InProceedings ;
              dcterm:issued  ?date ;
              dc:creator     ?author
      FILTER ( year(xsd:dateTime(?date)) >= 2005 )
      { SELECT  ?author
        WHERE
          { ?paper  rdf:type       swrc:InProceedings ;
                    swrc:series    ?conference ;
                    dc:creator     ?author ;
                    dcterm:issued  ?date
            FILTER ( ( year(xsd:dateTime(?date)) >= 2005 )
              && ( ?conference IN (dblprc:vldb, dblprc:sigmod) ) )
          }
        GROUP BY ?author
        HAVING ( COUNT(?paper) >= 20 )
      }
    }"#,
    );
}

#[test]
fn embedding_triples_query() {
    let g = KnowledgeGraph::new(Iri::new("http://dblp.13s.de/").unwrap());
    let frame = g.feature_domain_range("pred", "sub", "obj").unwrap().filter(&[("obj", &["isURI"])]).unwrap();
    let expected = "SELECT * \nFROM <http://dblp.13s.de/>\nWHERE {\n        ?sub ?pred ?obj .\n        FILTER ( isIRI(?obj) ) \n      }";
    assert_golden(&frame, expected);
}
