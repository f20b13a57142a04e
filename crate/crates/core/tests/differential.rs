use kgframe_core::emit;
use kgframe_core::generate::{generate, generate_with, naive_generate, Options};
use kgframe_core::oracle::compare_model;
use kgframe_core::testkit::{random_program, random_store};
use kgframe_core::{Dataset, Frame, QueryModel};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn check(frame: &Frame, model: &QueryModel, data: &Dataset) -> Result<(), String> {
    let c = compare_model(frame, model, data).map_err(|e| e.to_string())?;
    if c.holds() {
        Ok(())
    } else {
        Err(format!("{:?}\nrelational:\n{}\nsparql:\n{}", c.problems, c.expected, c.actual))
    }
}

#[test]
fn generated_models_match_relational_semantics() {
    let mut failures = Vec::new();
    for seed in 0..400u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let data = random_store(&mut rng, 50, true);
        let frame = random_program(&mut rng, 6, true);
        for (label, model) in [("optimized", generate(&frame)), ("naive", naive_generate(&frame))] {
            let model = model.unwrap();
            if let Err(e) = check(&frame, &model, &data) {
                failures.push(format!("seed {seed} {label} [{}]\n{}\n{e}", frame.describe(), emit(&model)));
            }
        }
    }
    assert!(failures.is_empty(), "{} failures; first:\n{}", failures.len(), failures[0]);
}

#[test]
fn corrupted_optional_is_detected() {
    let mut caught = 0;
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let data = random_store(&mut rng, 50, true);
        let frame = random_program(&mut rng, 6, true);
        let bad = generate_with(&frame, Options { corrupt_optional: true }).unwrap();
        if check(&frame, &bad, &data).is_err() {
            caught += 1;
        }
    }
    assert!(caught > 0);
}

#[test]
fn chains_nest_only_in_naive_mode() {
    for k in 1..=10 {
        let f = kgframe_core::testkit::chain_program(k);
        assert_eq!(f.ops().len(), k);
        assert_eq!(generate(&f).unwrap().subquery_count(), 0, "k = {k}");
        assert_eq!(naive_generate(&f).unwrap().subquery_count(), k, "k = {k}");
    }
}
