//! Regenerates the bundled 1000-document fixture corpus.
//!
//! ```text
//! cargo run -p tweetlens --example make_fixture -- crates/core/data/fixture
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SEED: u64 = 2018;
const DOCS: usize = 1000;

struct Topic {
    words: &'static [&'static str],
    opinions: &'static [&'static str],
}

const TOPICS: [Topic; 5] = [
    Topic {
        words: &["eleicao", "urna", "turno", "campanha", "vitoria", "povo", "mudanca", "votos", "presidente", "apuracao"],
        opinions: &["vencer", "venceu", "vencemos", "ganhar", "ganhou"],
    },
    Topic {
        words: &["ditadura", "militar", "regime", "coronel", "memoria", "historia", "direitos", "humanos", "porao", "anistia"],
        opinions: &["torturar", "torturou", "torturaram"],
    },
    Topic {
        words: &["economia", "emprego", "empregos", "crise", "salario", "mercado", "imposto", "divida", "inflacao", "reforma"],
        opinions: &["perder", "perdeu", "perdemos", "perdendo"],
    },
    Topic {
        words: &["fake", "news", "whatsapp", "mensagem", "boato", "noticia", "imprensa", "midia", "grupo", "compartilhar"],
        opinions: &["verdade"],
    },
    Topic {
        words: &["igreja", "familia", "deus", "cristao", "valores", "escola", "kit", "crianca", "pastor", "biblia"],
        opinions: &["verdade", "mentir"],
    },
];

const FILLER: &[&str] = &["o", "a", "de", "que", "e", "do", "da", "em", "um", "para", "com", "não", "os", "no", "se", "na", "por", "mais"];
const GENERAL: &[&str] = &["hoje", "amanha", "todos", "brasileiro", "pais", "governo", "gente", "agora", "sempre", "nunca"];
const ELECTION_TAGS: &[&str] = &["#B17", "#Bolsonaro17", "#BolsonaroPresidente", "#EleSim", "#HaddadNaoECristao", "#NasRuasComBolsonaro"];
const OFF_TOPIC_TAGS: &[&str] = &["#Copa2018", "#Novela", "#Futebol"];

const LEMMAS: &[(&str, &str)] = &[
    ("venceu", "vencer"),
    ("vencemos", "vencer"),
    ("ganhou", "ganhar"),
    ("torturou", "torturar"),
    ("torturaram", "torturar"),
    ("perdeu", "perder"),
    ("perdemos", "perder"),
    ("perdendo", "perder"),
    ("votos", "voto"),
    ("empregos", "emprego"),
    ("mentiu", "mentir"),
];

fn timestamp(rng: &mut ChaCha8Rng) -> String {
    let day = rng.random_range(1..=28);
    let hour = rng.random_range(0..24);
    let minute = rng.random_range(0..60);
    format!("2018-10-{day:02}T{hour:02}:{minute:02}:00Z")
}

fn topic_text(rng: &mut ChaCha8Rng, topic: &Topic) -> String {
    let len = rng.random_range(7..=12);
    let mut words: Vec<String> = Vec::new();
    for _ in 0..len {
        let w = if rng.random_bool(0.85) { topic.words.choose(rng) } else { GENERAL.choose(rng) };
        words.push(w.unwrap().to_string());
        if rng.random_bool(0.35) {
            words.push(FILLER.choose(rng).unwrap().to_string());
        }
    }
    if rng.random_bool(0.7) {
        let pos = rng.random_range(0..=words.len());
        words.insert(pos, topic.opinions.choose(rng).unwrap().to_string());
    }
    if rng.random_bool(0.15) {
        words.insert(0, format!("@user{}", rng.random_range(1..500)));
    }
    if rng.random_bool(0.1) {
        words.push(format!("https://t.co/x{}", rng.random_range(1000..9999)));
    }
    words.join(" ")
}

fn main() {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "crates/core/data/fixture".into()).into();
    fs::create_dir_all(&out).expect("create fixture dir");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // Repeated texts shared by many accounts; sizes sum to 95.
    let repeated: Vec<(String, usize)> = [(0usize, 60usize), (1, 25), (3, 10)]
        .iter()
        .map(|&(t, n)| {
            let tag = ELECTION_TAGS[t];
            (format!("{} {tag}", topic_text(&mut rng, &TOPICS[t])), n)
        })
        .collect();

    let mut records = Vec::with_capacity(DOCS);
    for (text, n) in &repeated {
        for _ in 0..*n {
            records.push(text.clone());
        }
    }
    while records.len() < DOCS {
        if rng.random_bool(0.05) {
            let t = rng.random_range(0..5);
            let text = format!("{} {}", topic_text(&mut rng, &TOPICS[t]), OFF_TOPIC_TAGS.choose(&mut rng).unwrap());
            records.push(text);
        } else {
            let t = rng.random_range(0..5);
            let text = format!("{} {}", topic_text(&mut rng, &TOPICS[t]), ELECTION_TAGS.choose(&mut rng).unwrap());
            records.push(text);
        }
    }
    records.shuffle(&mut rng);

    let mut corpus = String::new();
    for (i, text) in records.iter().enumerate() {
        let record = json!({
            "id": format!("t{:04}", i + 1),
            "author_id": format!("u{:03}", rng.random_range(1..=400)),
            "created_at": timestamp(&mut rng),
            "text": text,
        });
        writeln!(corpus, "{record}").unwrap();
    }
    fs::write(out.join("corpus.jsonl"), corpus).expect("write corpus");

    let mut lemmas = String::from("# surface\tlemma\n");
    for (s, l) in LEMMAS {
        writeln!(lemmas, "{s}\t{l}").unwrap();
    }
    fs::write(out.join("lemmas.tsv"), lemmas).expect("write lemmas");
    println!("wrote {} documents to {}", records.len(), out.display());
}
