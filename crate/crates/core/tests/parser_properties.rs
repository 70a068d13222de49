mod common;

use common::{config, phase, poly};
use oscdecay::parser::tokenize;
use oscdecay::{parse_phase, parse_polynomial, ParseError};
use proptest::prelude::*;

fn check_span(src: &str, e: &ParseError) -> Result<(), TestCaseError> {
    prop_assert!(e.span.start <= e.span.end, "{:?}", e);
    prop_assert!(e.span.end <= src.len(), "{:?} on {:?}", e, src);
    prop_assert!(!e.message.is_empty());
    Ok(())
}

/// Strings over the grammar's alphabet plus some noise.
fn near_grammar() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        Just("x1".to_string()),
        Just("y2".to_string()),
        Just("t1".to_string()),
        Just("x9".to_string()),
        Just("x0".to_string()),
        Just("+".to_string()),
        Just("-".to_string()),
        Just("*".to_string()),
        Just("/".to_string()),
        Just("^".to_string()),
        Just("(".to_string()),
        Just(")".to_string()),
        Just(" ".to_string()),
        Just("0".to_string()),
        Just(".".to_string()),
        Just("τ".to_string()),
        "[0-9]{1,3}",
        "[0-9]{1,2}\\.[0-9]{0,2}",
        "[a-z]{1,2}",
    ];
    prop::collection::vec(piece, 0..24).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(config(2000))]

    #[test]
    fn parsing_is_total_on_arbitrary_text(src in "\\PC{0,40}", d in 1usize..4) {
        for res in [parse_polynomial(&src, d), parse_phase(&src, d)] {
            if let Err(e) = res {
                check_span(&src, &e)?;
            }
        }
        if let Err(e) = tokenize(&src) {
            check_span(&src, &e)?;
        }
    }

    #[test]
    fn parsing_is_total_near_the_grammar(src in near_grammar(), d in 1usize..4) {
        match parse_polynomial(&src, d) {
            Ok(p) => prop_assert_eq!(p.dim(), d),
            Err(e) => check_span(&src, &e)?,
        }
    }

    #[test]
    fn tokens_are_ordered_and_disjoint(src in near_grammar()) {
        if let Ok(tokens) = tokenize(&src) {
            for w in tokens.windows(2) {
                prop_assert!(w[0].span.end <= w[1].span.start);
            }
            for t in &tokens {
                prop_assert_eq!(&src[t.span.start..t.span.end], t.lexeme);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn serialized_polynomials_round_trip(p in poly(2, 5, 8)) {
        let text = p.to_string();
        prop_assert_eq!(parse_polynomial(&text, 2).unwrap(), p);
    }

    #[test]
    fn serialized_phases_round_trip(s in phase(3, 4, 6)) {
        prop_assert_eq!(parse_phase(&s.to_string(), 3).unwrap(), s);
    }

    #[test]
    fn json_form_is_the_canonical_text(p in poly(1, 3, 4)) {
        let json = serde_json::to_string(&p).unwrap();
        let text: String = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(parse_polynomial(&text, 1).unwrap(), p);
    }
}

#[test]
fn decimals_and_grouping() {
    let a = parse_phase("0.5*x1^2*y1", 1).unwrap();
    assert_eq!(parse_phase("x1*x1*y1*1/2", 1).unwrap(), a);
    assert_eq!(parse_phase("(1/2)*(x1)^2*y1", 1).unwrap(), a);
    assert!(parse_phase("x1^(2)*y1", 1).is_err());
    assert!(parse_phase("x1*y1/2", 1).is_err());
    assert_eq!(parse_phase("-(-x1)*y1", 1).unwrap(), parse_phase("x1*y1", 1).unwrap());
}

#[test]
fn error_spans_point_at_the_problem() {
    let e = parse_phase("x1*y1 + 2x1", 1).unwrap_err();
    assert_eq!(&"x1*y1 + 2x1"[e.span.start..e.span.end], "x1");
    let e = parse_phase("x1*y3", 2).unwrap_err();
    assert_eq!(&"x1*y3"[e.span.start..e.span.end], "y3");
    let e = parse_phase("(x1*y1", 1).unwrap_err();
    assert!(e.message.contains("unclosed"), "{}", e.message);
    let e = parse_phase("x1*y1*t1", 1).unwrap_err();
    assert_eq!(&"x1*y1*t1"[e.span.start..e.span.end], "t1");
}
