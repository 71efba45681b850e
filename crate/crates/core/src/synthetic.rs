//! Seeded synthetic corpus generator.
//!
//! Each record is a short templated sentence made of one to three label
//! phrases. Values come from [`crate::formats`], so the regex-backed labels
//! use exactly the grammars the rule baseline matches. Template words never
//! coincide with a token of the inserted PII values, so a gold target leaks
//! nothing under SPriV.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Corpus, Record, Span};
use crate::eval::spriv::MIN_LEAK_TOKEN_CHARS;
use crate::formats::{generate_value, regex_grammars};
use crate::masking::{apply_gold_mask, tokenize, TokenKind};
use crate::taxonomy::{PiiLabel, Placeholder, PlaceholderStyle};

pub const SUPPORTED_LANGUAGES: &[&str] = &["en", "es", "it"];

const MAX_PHRASES: u32 = 3;
const MAX_ATTEMPTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("no languages requested")]
    NoLanguages,
    #[error("unsupported language {0:?} (supported: en, es, it)")]
    UnsupportedLanguage(String),
    #[error("label weights must be finite, non-negative and not all zero")]
    InvalidWeights,
}

/// Equal weight on every canonical label.
pub fn uniform_mix() -> BTreeMap<PiiLabel, f64> {
    PiiLabel::CANONICAL.iter().map(|l| (l.clone(), 1.0)).collect()
}

/// Equal weight on every label the default rule set covers.
pub fn regex_label_mix() -> BTreeMap<PiiLabel, f64> {
    regex_grammars().into_iter().map(|g| (g.label, 1.0)).collect()
}

struct Frame {
    domain: &'static str,
    /// `{}` is replaced by the joined phrases.
    text: &'static str,
}

struct Language {
    frames: &'static [Frame],
    joiner: &'static str,
    phrase: fn(&PiiLabel) -> &'static str,
}

fn language(code: &str) -> Option<Language> {
    match code {
        "en" => Some(Language { frames: EN_FRAMES, joiner: " and ", phrase: en_phrase }),
        "es" => Some(Language { frames: ES_FRAMES, joiner: " y ", phrase: es_phrase }),
        "it" => Some(Language { frames: IT_FRAMES, joiner: " e ", phrase: it_phrase }),
        _ => None,
    }
}

const EN_FRAMES: &[Frame] = &[
    Frame { domain: "chat", text: "hey, {} ok?" },
    Frame { domain: "email", text: "Hello team, {}. Kind regards." },
    Frame { domain: "support", text: "Ticket update: {}." },
    Frame { domain: "medical", text: "Intake note: {}." },
];

const ES_FRAMES: &[Frame] = &[
    Frame { domain: "chat", text: "hola, {} vale?" },
    Frame { domain: "email", text: "Estimado equipo, {}. Saludos cordiales." },
    Frame { domain: "support", text: "Actualización del caso: {}." },
    Frame { domain: "medical", text: "Nota de ingreso: {}." },
];

const IT_FRAMES: &[Frame] = &[
    Frame { domain: "chat", text: "ciao, {} va bene?" },
    Frame { domain: "email", text: "Gentile squadra, {}. Cordiali saluti." },
    Frame { domain: "support", text: "Aggiornamento della pratica: {}." },
    Frame { domain: "medical", text: "Nota di accettazione: {}." },
];

fn en_phrase(label: &PiiLabel) -> &'static str {
    use PiiLabel::*;
    match label {
        Street => "the shipment goes to {}",
        Username => "my handle is {}",
        GeoCoord => "the pin sits at {}",
        GivenName => "{} signed the form",
        SocialNumber => "the social security number is {}",
        CardIssuer => "the card was issued by {}",
        Tel => "you can call {}",
        Email => "please write to {}",
        Title => "address her as {}",
        Building => "the office is in building {}",
        Passport => "the passport number reads {}",
        Ip => "the login came from {}",
        Pass => "the temporary password is {}",
        City => "the meeting is in {}",
        Country => "she moved to {}",
        PostCode => "the postal code is {}",
        Sex => "the patient is {}",
        SecAddress => "deliver to {}",
        Bod => "the birth date on file is {}",
        State => "the branch is located in {}",
        LastName => "the surname on record is {}",
        Time => "we start at {}",
        Date => "the visit was on {}",
        IdCard => "the identity card number is {}",
        DriverLicense => "the licence number is {}",
        Extension(_) => "the reference is {}",
    }
}

fn es_phrase(label: &PiiLabel) -> &'static str {
    use PiiLabel::*;
    match label {
        Street => "el envío va a {}",
        Username => "mi usuario es {}",
        GeoCoord => "la ubicación está en {}",
        GivenName => "{} firmó el formulario",
        SocialNumber => "el número de seguridad social es {}",
        CardIssuer => "la tarjeta la emitió {}",
        Tel => "puedes llamar al {}",
        Email => "escribe a {}",
        Title => "trátala de {}",
        Building => "la oficina está en el edificio {}",
        Passport => "el número de pasaporte es {}",
        Ip => "el acceso vino desde {}",
        Pass => "la contraseña temporal es {}",
        City => "la reunión es en {}",
        Country => "se mudó a {}",
        PostCode => "el código postal es {}",
        Sex => "el paciente es {}",
        SecAddress => "entregar en {}",
        Bod => "la fecha de nacimiento registrada es {}",
        State => "la sucursal está en {}",
        LastName => "el apellido registrado es {}",
        Time => "empezamos a las {}",
        Date => "la visita fue el {}",
        IdCard => "el número del documento es {}",
        DriverLicense => "el número de licencia es {}",
        Extension(_) => "la referencia es {}",
    }
}

fn it_phrase(label: &PiiLabel) -> &'static str {
    use PiiLabel::*;
    match label {
        Street => "la spedizione va in {}",
        Username => "il mio nome utente è {}",
        GeoCoord => "la posizione è {}",
        GivenName => "{} ha firmato il modulo",
        SocialNumber => "il numero di previdenza è {}",
        CardIssuer => "la carta è emessa da {}",
        Tel => "puoi chiamare il {}",
        Email => "scrivi a {}",
        Title => "chiamala {}",
        Building => "l'ufficio è nell'edificio {}",
        Passport => "il numero del passaporto è {}",
        Ip => "l'accesso proviene da {}",
        Pass => "la password temporanea è {}",
        City => "la riunione è a {}",
        Country => "si è trasferita in {}",
        PostCode => "il codice postale è {}",
        Sex => "il paziente è {}",
        SecAddress => "consegnare a {}",
        Bod => "la data di nascita registrata è {}",
        State => "la filiale si trova in {}",
        LastName => "il cognome registrato è {}",
        Time => "iniziamo alle {}",
        Date => "la visita era il {}",
        IdCard => "il numero della carta d'identità è {}",
        DriverLicense => "il numero della patente è {}",
        Extension(_) => "il riferimento è {}",
    }
}

/// Builds `n` records deterministically from `seed`.
///
/// Languages are assigned round-robin in the order given. Each phrase's
/// label is drawn from `label_mix` by weight. Repeated given or last names
/// in one record share a coreference index; distinct ones are numbered from 1.
pub fn gen_synthetic(
    seed: u64,
    n: usize,
    languages: &[&str],
    label_mix: &BTreeMap<PiiLabel, f64>,
) -> Result<Corpus, SyntheticError> {
    if languages.is_empty() {
        return Err(SyntheticError::NoLanguages);
    }
    let langs = languages
        .iter()
        .map(|code| language(code).map(|l| (*code, l)).ok_or_else(|| SyntheticError::UnsupportedLanguage(code.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let (labels, weights): (Vec<&PiiLabel>, Vec<f64>) = label_mix.iter().map(|(l, w)| (l, *w)).unzip();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(SyntheticError::InvalidWeights);
    }
    let dist = WeightedIndex::new(&weights).map_err(|_| SyntheticError::InvalidWeights)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let (code, lang) = &langs[i % langs.len()];
        let frame = &lang.frames[rng.random_range(0..lang.frames.len())];
        let k = 1 + rng.random_range(0..MAX_PHRASES);
        let chosen: Vec<&PiiLabel> = (0..k).map(|_| labels[dist.sample(&mut rng)]).collect();
        let (source_text, spans) = (0..MAX_ATTEMPTS)
            .find_map(|_| compose(&mut rng, lang, frame, &chosen))
            .expect("template vocabulary is disjoint from value vocabulary for some draw");
        let target = apply_gold_mask(&source_text, &spans, PlaceholderStyle::Single)
            .expect("generated spans are valid by construction");
        records.push(Record {
            id: format!("syn-{seed}-{i:05}"),
            language: code.to_string(),
            domain: frame.domain.to_string(),
            source_text,
            target_text: Some(target),
            spans,
        });
    }
    Ok(Corpus::new(format!("synthetic-{seed}"), records))
}

/// One attempt at a record; `None` if a template word collides with a value
/// token long enough to count as a leak.
fn compose(rng: &mut ChaCha8Rng, lang: &Language, frame: &Frame, labels: &[&PiiLabel]) -> Option<(String, Vec<Span>)> {
    let (prefix, suffix) = frame.text.split_once("{}").expect("frame has a slot");
    let mut text = String::from(prefix);
    let mut chars = prefix.chars().count();
    let mut template_words = String::from(frame.text);
    let mut spans = Vec::new();
    let mut coref: HashMap<(PiiLabel, String), u32> = HashMap::new();
    let mut next_index: HashMap<PiiLabel, u32> = HashMap::new();

    for (j, label) in labels.iter().enumerate() {
        if j > 0 {
            text.push_str(lang.joiner);
            chars += lang.joiner.chars().count();
        }
        let phrase = (lang.phrase)(label);
        template_words.push(' ');
        template_words.push_str(&phrase.replace("{}", " "));
        let (before, after) = phrase.split_once("{}").expect("phrase has a slot");
        text.push_str(before);
        chars += before.chars().count();

        let value = generate_value(label, rng);
        let placeholder = if matches!(label, PiiLabel::GivenName | PiiLabel::LastName) {
            let key = ((*label).clone(), value.clone());
            let idx = *coref.entry(key).or_insert_with(|| {
                let n = next_index.entry((*label).clone()).or_insert(0);
                *n += 1;
                *n
            });
            Placeholder::indexed((*label).clone(), idx)
        } else {
            Placeholder::new((*label).clone())
        };
        let len = value.chars().count();
        spans.push(Span::new(placeholder, chars, chars + len, value.as_str()));
        text.push_str(&value);
        chars += len;
        text.push_str(after);
        chars += after.chars().count();
    }
    text.push_str(suffix);

    let template_tokens: HashSet<String> = tokenize(&template_words)
        .tokens
        .into_iter()
        .filter(|t| t.kind == TokenKind::Plain)
        .map(|t| t.text.to_lowercase())
        .collect();
    let clash = spans
        .iter()
        .flat_map(|s| tokenize(&s.surface).tokens)
        .filter(|t| t.text.chars().count() >= MIN_LEAK_TOKEN_CHARS)
        .any(|t| template_tokens.contains(&t.text.to_lowercase()));
    (!clash).then_some((text, spans))
}
