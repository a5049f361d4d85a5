//! Shared fixtures and independent reference implementations for the
//! integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use inputtopic::{Corpus, Document, FeatureVector, Rule, RuleSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn tokens(words: &[&str]) -> FeatureVector {
    words.iter().copied().collect()
}

pub fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

pub fn strings(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

pub fn doc(doc_id: usize, page: &str, words: &[&str], topic: Option<&str>) -> Document {
    Document {
        doc_id,
        page_id: page.to_string(),
        element_path: format!("/html[1]/body[1]/form[1]/input[{}]", doc_id + 1),
        attributes: Vec::new(),
        tokens: tokens(words),
        topic: topic.map(String::from),
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix given as rows.
/// Returns eigenvalues sorted descending and matching eigenvectors as
/// columns of a row-major matrix.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Singular values of a dense `rows × cols` matrix from the eigenvalues of
/// `XᵀX`, descending.
pub fn singular_values_oracle(x: &[Vec<f64>]) -> Vec<f64> {
    let cols = x[0].len();
    let gram: Vec<Vec<f64>> = (0..cols)
        .map(|i| (0..cols).map(|j| x.iter().map(|row| row[i] * row[j]).sum()).collect())
        .collect();
    jacobi_eigen(&gram).0.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Plain tf-idf (`count × log2(N/n_t)`, L2-normalized) over string tokens,
/// built with hash maps and no shared code with the library.
pub struct TfIdfOracle {
    n_docs: usize,
    doc_freq: HashMap<String, usize>,
}

impl TfIdfOracle {
    pub fn new<'a>(docs: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut doc_freq = HashMap::new();
        let mut n_docs = 0;
        for d in docs {
            n_docs += 1;
            let seen: HashSet<&String> = d.iter().collect();
            for t in seen {
                *doc_freq.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Self { n_docs, doc_freq }
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.doc_freq.get(term).map(|&n| (self.n_docs as f64 / n as f64).log2())
    }

    pub fn vector(&self, tokens: &[String]) -> HashMap<String, f64> {
        let mut counts: HashMap<String, f64> = HashMap::new();
        for t in tokens {
            if self.doc_freq.contains_key(t) {
                *counts.entry(t.clone()).or_insert(0.0) += 1.0;
            }
        }
        let mut w: HashMap<String, f64> = counts
            .into_iter()
            .map(|(t, c)| {
                let idf = self.idf(&t).unwrap();
                (t, c * idf)
            })
            .filter(|(_, x)| *x != 0.0)
            .collect();
        let norm = w.values().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in w.values_mut() {
                *x /= norm;
            }
        }
        w
    }
}

pub fn sparse_cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Brute-force nearest neighbour over raw tf-idf vectors: similarities of
/// `query` to every training document, in training order.
pub fn brute_force_similarities(train: &[Vec<String>], query: &[String]) -> Vec<f64> {
    let oracle = TfIdfOracle::new(train.iter().map(Vec::as_slice));
    let q = oracle.vector(query);
    train.iter().map(|d| sparse_cosine(&q, &oracle.vector(d))).collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_density(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Two-sided p-value by composite Simpson integration of the t density
/// over `[0, |t|]`.
pub fn t_two_sided_p_oracle(t: f64, df: f64) -> f64 {
    let n = 200_000;
    let b = t.abs();
    let h = b / n as f64;
    let mut sum = t_density(0.0, df) + t_density(b, df);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * t_density(i as f64 * h, df);
    }
    1.0 - 2.0 * sum * h / 3.0
}

// ---------------------------------------------------------------------------
// Adversarial rule fixture

pub const ADV_TOPICS: [&str; 8] = [
    "first_name",
    "last_name",
    "email",
    "password",
    "phone",
    "city",
    "zip",
    "birth_date",
];

const ADV_WORDS: [&[&str]; 8] = [
    &["first", "name", "given"],
    &["last", "surname", "family"],
    &["email", "address", "mail"],
    &["password", "secret", "pass"],
    &["phone", "telephone", "mobile"],
    &["city", "town", "locality"],
    &["zip", "postal", "code"],
    &["birth", "date", "dob"],
];

pub const ADV_FORMS: usize = 20;
pub const ADV_FAMILIES: usize = 10;

/// Rule vocabulary word for `topic` in variant `v`.
pub fn rule_word(topic: usize, v: usize) -> String {
    format!("t{topic}v{v}x")
}

/// Topics whose words appear as decoys in the id of a field of `topic`.
pub fn decoys(topic: usize) -> Vec<usize> {
    let mut d = vec![(topic + 1) % 8];
    if topic < 3 {
        d.push((topic + 3) % 8);
    }
    d
}

pub fn adv_page(form: usize) -> String {
    format!("form{form:02}.html")
}

/// 20 forms in 10 families of two. Every form has one field per topic.
/// Field tokens depend only on the topic, so natural-language inference
/// always finds an exact duplicate. The field id concatenates the topic's
/// own rule word for the form's family with one or two decoy words of
/// other topics.
pub fn adversarial_corpus() -> Corpus {
    let mut docs = Vec::new();
    for form in 0..ADV_FORMS {
        let family = form / 2;
        for topic in 0..ADV_TOPICS.len() {
            let mut id = rule_word(topic, family);
            for (i, d) in decoys(topic).into_iter().enumerate() {
                id.push_str(&rule_word(d, (family + 1 + i) % ADV_FAMILIES));
            }
            let doc_id = docs.len();
            docs.push(Document {
                doc_id,
                page_id: adv_page(form),
                element_path: format!("/html[1]/body[1]/form[1]/input[{}]", topic + 1),
                attributes: vec![("type".into(), "text".into()), ("id".into(), id)],
                tokens: ADV_WORDS[topic].iter().copied().collect(),
                topic: Some(ADV_TOPICS[topic].to_string()),
            });
        }
    }
    Corpus::from_documents(docs).unwrap()
}

/// Every rule word of every topic, active in all trials. Each field then
/// matches its own topic plus its decoys.
pub fn adversarial_global_rules() -> RuleSet {
    let mut rules = Vec::new();
    for topic in 0..ADV_TOPICS.len() {
        for v in 0..ADV_FAMILIES {
            rules.push(Rule::new(&rule_word(topic, v), ADV_TOPICS[topic]).unwrap());
        }
    }
    RuleSet::new(rules).unwrap()
}

/// Rules as an author would derive them from each form: the field's own
/// word maps to its topic. Only rules from training forms are active.
pub fn adversarial_form_rules() -> RuleSet {
    let mut rules = Vec::new();
    for form in 0..ADV_FORMS {
        for topic in 0..ADV_TOPICS.len() {
            let mut r = Rule::new(&rule_word(topic, form / 2), ADV_TOPICS[topic]).unwrap();
            r.source_page = Some(adv_page(form));
            rules.push(r);
        }
    }
    RuleSet::new(rules).unwrap()
}

/// Expected plain-RB accuracy under the global rules: the mean over fields
/// of `1 / |candidates|`. Every form has the same topic layout, so this is
/// the same for any test set.
pub fn adversarial_expected_rb() -> f64 {
    let n = ADV_TOPICS.len() as f64;
    (0..ADV_TOPICS.len()).map(|t| 1.0 / (1 + decoys(t).len()) as f64).sum::<f64>() / n
}

pub fn candidate_sets(corpus: &Corpus, rules: &RuleSet) -> Vec<BTreeSet<String>> {
    corpus
        .documents()
        .iter()
        .map(|d| inputtopic::infer::match_rules(&d.attributes, &rules.rules))
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

/// Dense `rows × cols` matrix with entries uniform in `[-1, 1)`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Columns of a dense matrix as sparse tf-idf style vectors.
pub fn columns(x: &[Vec<f64>]) -> Vec<inputtopic::TfIdfVector> {
    let cols = x[0].len();
    (0..cols)
        .map(|c| inputtopic::TfIdfVector {
            entries: x.iter().enumerate().map(|(r, row)| (r, row[c])).filter(|(_, w)| *w != 0.0).collect(),
        })
        .collect()
}
