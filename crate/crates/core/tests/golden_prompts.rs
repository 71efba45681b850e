use redactkit_core::prompts::{build_ft_prompt, build_it_prompt};
use redactkit_core::rag::{assemble_context, reference_exemplars};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn rag_prompt_matches_golden() {
    let got = assemble_context(&reference_exemplars(), "John registered for the app with email 1909@gmail.com");
    assert_eq!(got, fixture("rag_prompt.txt"));
}

#[test]
fn ft_prompt_matches_golden() {
    let got = build_ft_prompt("Dear [Sejd], I am writing to inform you of an important ...");
    assert_eq!(got, fixture("ft_prompt.txt"));
}

#[test]
fn it_prompt_matches_golden() {
    assert_eq!(build_it_prompt("Hi Bob"), fixture("it_prompt_hi_bob.txt"));
}

#[test]
fn it_prompt_has_one_input_and_one_response() {
    for text in ["", "Hi Bob", "### Inputs are fine"] {
        let p = build_it_prompt(text);
        assert_eq!(p.matches("### Input\n").count(), 1);
        assert_eq!(p.matches("### Response").count(), 1);
    }
}
