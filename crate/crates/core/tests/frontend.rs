use flatcurry::frontend::{parse_unchecked, ParseError, ParseOptions};
use flatcurry::{parse_program, pretty_print};
use proptest::prelude::*;

#[test]
fn errors_carry_file_line_and_column() {
    let opts = ParseOptions { file: "prog.fcy".into(), generated_names: false };
    let err = parse_unchecked("main = case of", &opts).unwrap_err();
    let loc = err.location();
    assert_eq!((loc.file.as_str(), loc.line), ("prog.fcy", 1));
    assert!(err.to_string().starts_with("prog.fcy:1:"), "{err}");

    let err = parse_program("data B = T\n\nmain = T 1\n").unwrap_err();
    assert!(matches!(err, ParseError::Invalid { .. }));
    assert_eq!(err.location().line, 3);
}

#[test]
fn printing_is_deterministic_and_stable() {
    let src = "data L = Nil | Cons _ _\nf xs = case xs of { Nil -> 0; Cons y ys -> y ? f ys }\nmain = f (Cons 1 (Cons 2 Nil))\n";
    let p = parse_program(src).unwrap();
    let once = pretty_print(&p);
    let twice = pretty_print(&parse_program(&once).unwrap());
    assert_eq!(once, twice);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = parse_unchecked(&text, &ParseOptions::default());
        let _ = parse_program(&text);
    }

    #[test]
    fn token_soup_never_panics(words in prop::collection::vec(
        prop::sample::select(vec![
            "main", "f", "x", "y", "=", "case", "of", "{", "}", ";", "->", "?", "(", ")", "let", "in",
            "free", ",", "fail", "apply", "data", "|", "_", "True", "Cons", "0", "-3", "\n", "\n  ",
        ]),
        0..60,
    )) {
        let text = words.join(" ");
        let _ = parse_program(&text);
        let _ = parse_unchecked(&text, &ParseOptions { generated_names: true, ..ParseOptions::default() });
    }
}
