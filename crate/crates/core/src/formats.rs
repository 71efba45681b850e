//! Per-label surface grammars shared by the rule baseline and the synthetic
//! generator.
//!
//! Each regex-backed label has a pattern (used by [`crate::rules`]) and a
//! generator that only emits strings the pattern matches in full. The
//! patterns are chosen so that no generated value of one label contains a
//! match for another label's pattern.

use rand::Rng;

use crate::taxonomy::PiiLabel;

pub struct FormatGrammar {
    pub label: PiiLabel,
    pub pattern: &'static str,
    pub generate: fn(&mut dyn RngLike) -> String,
}

/// Object-safe slice of [`Rng`] used by the generators.
pub trait RngLike {
    fn below(&mut self, n: u32) -> u32;
}

impl<R: Rng> RngLike for R {
    fn below(&mut self, n: u32) -> u32 {
        self.random_range(0..n)
    }
}

fn pick<'a>(rng: &mut dyn RngLike, items: &'a [&'a str]) -> &'a str {
    items[rng.below(items.len() as u32) as usize]
}

fn digits(rng: &mut dyn RngLike, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.below(10) as u8)).collect()
}

fn upper(rng: &mut dyn RngLike, n: usize) -> String {
    (0..n).map(|_| char::from(b'A' + rng.below(26) as u8)).collect()
}

const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

pub const GIVEN_NAMES: &[&str] = &[
    "Alice", "Bob", "Carla", "John", "Jordan", "Sejd", "Lucia", "Marco", "Giulia", "Pablo",
    "Elena", "Tomas", "Amira", "Kenji", "Noor", "Ingrid", "Rafael", "Chiara", "Diego", "Mei",
];

pub const LAST_NAMES: &[&str] = &[
    "Biesenkamp", "Verdiani", "Okafor", "Lindqvist", "Moreau", "Castellano", "Nakamura",
    "Haddad", "Kowalski", "Ferreira", "Rossi", "Garcia", "Schmidt", "Novak", "Brennan",
];

const EMAIL_DOMAINS: &[&str] = &["gmail.com", "example.org", "mail.co.uk", "outlook.es", "libero.it", "posteo.de"];

fn gen_email(rng: &mut dyn RngLike) -> String {
    let first = pick(rng, GIVEN_NAMES).to_lowercase();
    let last = pick(rng, LAST_NAMES).to_lowercase();
    let local = match rng.below(3) {
        0 => format!("{first}.{last}"),
        1 => format!("{first}{}", digits(rng, 2)),
        _ => format!("{}{last}", &first[..1]),
    };
    format!("{local}@{}", pick(rng, EMAIL_DOMAINS))
}

fn gen_tel(rng: &mut dyn RngLike) -> String {
    match rng.below(4) {
        0 => format!("+{} {} {} {}", 1 + rng.below(98), digits(rng, 3), digits(rng, 3), digits(rng, 4)),
        1 => format!("({}) {}-{}", digits(rng, 3), digits(rng, 3), digits(rng, 4)),
        2 => format!("{}-{}-{}", digits(rng, 3), digits(rng, 3), digits(rng, 4)),
        _ => format!("{}-{}", digits(rng, 3), digits(rng, 4)),
    }
}

fn gen_ip(rng: &mut dyn RngLike) -> String {
    let o: Vec<String> = (0..4).map(|_| rng.below(256).to_string()).collect();
    o.join(".")
}

fn gen_time(rng: &mut dyn RngLike) -> String {
    let (h, m) = (rng.below(24), rng.below(60));
    if rng.below(3) == 0 {
        format!("{h:02}:{m:02}:{:02}", rng.below(60))
    } else {
        format!("{h:02}:{m:02}")
    }
}

fn gen_date(rng: &mut dyn RngLike) -> String {
    let (y, m, d) = (1950 + rng.below(75), 1 + rng.below(12), 1 + rng.below(28));
    match rng.below(3) {
        0 => format!("{y}-{m:02}-{d:02}"),
        1 => format!("{d}/{m}/{y}"),
        _ => format!("{} {d}, {y}", MONTHS[(m - 1) as usize]),
    }
}

fn gen_postcode(rng: &mut dyn RngLike) -> String {
    if rng.below(4) == 0 {
        format!("{}-{}", digits(rng, 5), digits(rng, 4))
    } else {
        digits(rng, 5)
    }
}

fn gen_geocoord(rng: &mut dyn RngLike) -> String {
    let lat = rng.below(90);
    let lon = rng.below(180);
    let sign = |rng: &mut dyn RngLike| if rng.below(2) == 0 { "-" } else { "" };
    let s1 = sign(rng);
    let d1 = digits(rng, 4);
    let s2 = sign(rng);
    let d2 = digits(rng, 4);
    format!("{s1}{lat}.{d1}, {s2}{lon}.{d2}")
}

fn gen_social(rng: &mut dyn RngLike) -> String {
    format!("{}-{}-{}", digits(rng, 3), digits(rng, 2), digits(rng, 4))
}

fn gen_passport(rng: &mut dyn RngLike) -> String {
    format!("{}{}", upper(rng, 2), digits(rng, 7))
}

fn gen_idcard(rng: &mut dyn RngLike) -> String {
    format!("{}{}", digits(rng, 8), upper(rng, 1))
}

fn gen_driverlicense(rng: &mut dyn RngLike) -> String {
    format!("{}{}-{}-{}", upper(rng, 1), digits(rng, 3), digits(rng, 4), digits(rng, 4))
}

fn gen_username(rng: &mut dyn RngLike) -> String {
    let first = pick(rng, GIVEN_NAMES).to_lowercase();
    match rng.below(3) {
        0 => format!("@{first}{}", digits(rng, 2)),
        1 => format!("@{first}_{}", pick(rng, LAST_NAMES).to_lowercase()),
        _ => format!("@the_{first}"),
    }
}

/// Grammars for every label the rule baseline covers, in rule priority order.
pub fn regex_grammars() -> Vec<FormatGrammar> {
    use PiiLabel::*;
    vec![
        FormatGrammar {
            label: Email,
            pattern: r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}\b",
            generate: gen_email,
        },
        FormatGrammar {
            label: GeoCoord,
            pattern: r"-?\b\d{1,2}\.\d{4}, -?\d{1,3}\.\d{4}\b",
            generate: gen_geocoord,
        },
        FormatGrammar {
            label: Ip,
            pattern: r"\b(?:(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\.){3}(?:25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)\b",
            generate: gen_ip,
        },
        FormatGrammar {
            label: Date,
            pattern: r"\b\d{4}-\d{2}-\d{2}\b|\b\d{1,2}/\d{1,2}/\d{4}\b|\b(?:January|February|March|April|May|June|July|August|September|October|November|December) \d{1,2}, \d{4}\b",
            generate: gen_date,
        },
        FormatGrammar {
            label: Time,
            pattern: r"\b(?:[01]\d|2[0-3]):[0-5]\d(?::[0-5]\d)?\b",
            generate: gen_time,
        },
        FormatGrammar {
            label: SocialNumber,
            pattern: r"\b\d{3}-\d{2}-\d{4}\b",
            generate: gen_social,
        },
        FormatGrammar {
            label: DriverLicense,
            pattern: r"\b[A-Z]\d{3}-\d{4}-\d{4}\b",
            generate: gen_driverlicense,
        },
        FormatGrammar {
            label: Tel,
            pattern: r"\+\d{1,2} \d{3} \d{3} \d{4}\b|\(\d{3}\) \d{3}-\d{4}\b|\b\d{3}-\d{3}-\d{4}\b|\b\d{3}-\d{4}\b",
            generate: gen_tel,
        },
        FormatGrammar {
            label: Passport,
            pattern: r"\b[A-Z]{2}\d{7}\b",
            generate: gen_passport,
        },
        FormatGrammar {
            label: IdCard,
            pattern: r"\b\d{8}[A-Z]\b",
            generate: gen_idcard,
        },
        FormatGrammar {
            label: PostCode,
            pattern: r"\b\d{5}(?:-\d{4})?\b",
            generate: gen_postcode,
        },
        FormatGrammar {
            label: Username,
            pattern: r"\B@[A-Za-z][A-Za-z0-9_]{2,}\b",
            generate: gen_username,
        },
    ]
}

const CITIES: &[&str] = &["Madrid", "Bologna", "Lyon", "Rotterdam", "Denver", "Osaka", "Porto", "Graz", "Tucson", "Valencia"];
const COUNTRIES: &[&str] = &["Spain", "Italy", "France", "Germany", "Canada", "Japan", "Portugal", "Austria", "Kenya", "Chile"];
const STATES: &[&str] = &["California", "Texas", "Bavaria", "Ontario", "Lombardy", "Catalonia", "Queensland", "Oregon"];
const STREETS: &[&str] = &["Elm", "Maple", "Harbor", "Via Roma", "Calle Mayor", "Birch", "Linden", "Cedar"];
const STREET_KINDS: &[&str] = &["Road", "Avenue", "Lane", "Boulevard"];
const TITLES: &[&str] = &["Dr", "Mr", "Mrs", "Ms", "Prof"];
const SEXES: &[&str] = &["female", "male", "nonbinary"];
const ISSUERS: &[&str] = &["Visa", "Mastercard", "Maestro", "Amex", "JCB"];
const PASS_CHARS: &[u8] = b"abcdefghijkmnpqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789#$%&*";

/// Draws a surface value for any canonical label. Regex-backed labels use
/// their grammar; the rest draw from word lists. Extension labels get a
/// capitalized pseudo-word.
pub fn generate_value(label: &PiiLabel, rng: &mut dyn RngLike) -> String {
    use PiiLabel::*;
    if let Some(g) = regex_grammars().into_iter().find(|g| &g.label == label) {
        return (g.generate)(rng);
    }
    match label {
        GivenName => pick(rng, GIVEN_NAMES).to_string(),
        LastName => pick(rng, LAST_NAMES).to_string(),
        City => pick(rng, CITIES).to_string(),
        Country => pick(rng, COUNTRIES).to_string(),
        State => pick(rng, STATES).to_string(),
        Street => format!("{} {} {}", 1 + rng.below(998), pick(rng, STREETS), pick(rng, STREET_KINDS)),
        Building => format!("{}", 1 + rng.below(998)),
        SecAddress => format!("Apt {}{}", 1 + rng.below(98), upper(rng, 1)),
        Title => pick(rng, TITLES).to_string(),
        Sex => pick(rng, SEXES).to_string(),
        CardIssuer => pick(rng, ISSUERS).to_string(),
        Bod => gen_date(rng),
        Pass => {
            let mut s = String::from(char::from(b'A' + rng.below(26) as u8));
            for _ in 0..9 {
                s.push(char::from(PASS_CHARS[rng.below(PASS_CHARS.len() as u32) as usize]));
            }
            s
        }
        _ => format!("Zorb{}", upper(rng, 3).to_lowercase()),
    }
}
