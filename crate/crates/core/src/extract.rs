//! Feature extraction from HTML input elements.
//!
//! A feature vector holds the tokens of every configured attribute (name
//! followed by value) plus the texts of the closest label-like tags, found by
//! searching the element's siblings and then climbing towards the root.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use scraper::{ElementRef, Html, Node};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Attribute names whose name and value are copied into the vector.
    pub attribute_list: Vec<String>,
    /// Tag names searched for label texts, in search order.
    pub tag_list: Vec<String>,
    /// Number of search levels before giving up on labels.
    pub max_iterations: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            attribute_list: ["id", "name", "type", "placeholder", "maxlength"]
                .map(String::from)
                .to_vec(),
            tag_list: ["label", "span", "small"].map(String::from).to_vec(),
            max_iterations: 3,
            stopwords: BTreeSet::new(),
        }
    }
}

impl ExtractionConfig {
    fn wants_attribute(&self, name: &str) -> bool {
        self.attribute_list
            .iter()
            .any(|a| a.eq_ignore_ascii_case(name))
    }
}

/// Locates one input element inside a parsed page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRef {
    pub page_id: String,
    /// Slash separated `tag[n]` steps from the document root, `n` being the
    /// 1-based position among same-named element siblings.
    pub element_path: String,
    /// Attributes in markup order.
    pub raw_attributes: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    pub tokens: Vec<String>,
}

impl FeatureVector {
    pub fn new(tokens: Vec<String>) -> Self {
        Self { tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

impl<S: Into<String>> FromIterator<S> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// One line of the extractor's JSON Lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedField {
    pub page_id: String,
    pub element_path: String,
    pub tokens: Vec<String>,
}

/// A parsed HTML document with its identifier.
pub struct Page {
    id: String,
    html: Html,
}

impl Page {
    pub fn parse(id: impl Into<String>, source: &str) -> Self {
        Self {
            id: id.into(),
            html: Html::parse_document(source),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(path.display().to_string(), &source))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn html(&self) -> &Html {
        &self.html
    }

    /// All `input` elements in document order.
    pub fn input_elements(&self) -> impl Iterator<Item = ElementRef<'_>> {
        self.html
            .tree
            .root()
            .descendants()
            .filter_map(ElementRef::wrap)
            .filter(|e| e.value().name().eq_ignore_ascii_case("input"))
    }

    pub fn field_ref(&self, element: ElementRef<'_>) -> FieldRef {
        FieldRef {
            page_id: self.id.clone(),
            element_path: element_path(element),
            raw_attributes: element
                .value()
                .attrs()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn resolve(&self, element_path: &str) -> Result<ElementRef<'_>> {
        let mut node = self.html.tree.root();
        let steps = element_path.trim_start_matches('/');
        if steps.is_empty() {
            return Err(Error::Locator(element_path.to_string()));
        }
        for step in steps.split('/') {
            let (name, nth) = parse_step(step).ok_or_else(|| Error::Locator(element_path.into()))?;
            node = node
                .children()
                .filter(|c| matches!(c.value(), Node::Element(e) if e.name() == name))
                .nth(nth - 1)
                .ok_or_else(|| Error::Locator(element_path.into()))?;
        }
        ElementRef::wrap(node).ok_or_else(|| Error::Locator(element_path.into()))
    }
}

fn parse_step(step: &str) -> Option<(&str, usize)> {
    let open = step.find('[')?;
    let name = &step[..open];
    let nth: usize = step[open + 1..].strip_suffix(']')?.parse().ok()?;
    (nth >= 1 && !name.is_empty()).then_some((name, nth))
}

fn element_path(element: ElementRef<'_>) -> String {
    let mut steps = Vec::new();
    let mut node = Some(*element);
    while let Some(n) = node {
        let Node::Element(e) = n.value() else { break };
        let name = e.name();
        let nth = 1 + n
            .prev_siblings()
            .filter(|s| matches!(s.value(), Node::Element(p) if p.name() == name))
            .count();
        steps.push(format!("{name}[{nth}]"));
        node = n.parent();
    }
    steps.reverse();
    format!("/{}", steps.join("/"))
}

/// Lowercases, splits on every character outside `[a-z0-9]` and drops empty
/// fragments and stopwords. Camel case is left intact.
pub fn normalize_tokens(raw: &str, cfg: &ExtractionConfig) -> Vec<String> {
    raw.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty() && !cfg.stopwords.contains(*t))
        .map(String::from)
        .collect()
}

/// Result of a label search, including how many times it climbed to a parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSearch {
    pub texts: Vec<String>,
    pub ascents: usize,
}

/// Texts of the tags in `cfg.tag_list` found in the siblings of `element`,
/// searching parents level by level until something is found or
/// `cfg.max_iterations` is reached.
pub fn find_closest_labels(element: ElementRef<'_>, cfg: &ExtractionConfig, iteration: usize) -> Vec<String> {
    search_labels(element, cfg, iteration).texts
}

pub fn search_labels(element: ElementRef<'_>, cfg: &ExtractionConfig, iteration: usize) -> LabelSearch {
    let mut search = LabelSearch::default();
    let mut current = element;
    let mut level = iteration;
    loop {
        if level >= cfg.max_iterations {
            return search;
        }
        let texts = sibling_label_texts(current, cfg);
        if !texts.is_empty() {
            search.texts = texts;
            return search;
        }
        match current.parent().and_then(ElementRef::wrap) {
            Some(parent) => {
                current = parent;
                level += 1;
                search.ascents += 1;
            }
            None => return search,
        }
    }
}

fn sibling_label_texts(element: ElementRef<'_>, cfg: &ExtractionConfig) -> Vec<String> {
    let mut before: Vec<_> = element.prev_siblings().filter_map(ElementRef::wrap).collect();
    before.reverse();
    let after = element.next_siblings().filter_map(ElementRef::wrap);

    let mut texts = Vec::new();
    for sibling in before.into_iter().chain(after) {
        for tag in &cfg.tag_list {
            let found = sibling
                .descendants()
                .filter_map(ElementRef::wrap)
                .filter(|e| e.value().name().eq_ignore_ascii_case(tag));
            for e in found {
                texts.push(collapse_whitespace(e));
            }
        }
    }
    texts
}

fn collapse_whitespace(e: ElementRef<'_>) -> String {
    e.text()
        .flat_map(str::split_whitespace)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn extract_element(element: ElementRef<'_>, cfg: &ExtractionConfig) -> FeatureVector {
    let mut tokens = Vec::new();
    for (name, value) in element.value().attrs() {
        if cfg.wants_attribute(name) {
            tokens.extend(normalize_tokens(name, cfg));
            tokens.extend(normalize_tokens(value, cfg));
        }
    }
    for text in find_closest_labels(element, cfg, 0) {
        tokens.extend(normalize_tokens(&text, cfg));
    }
    FeatureVector { tokens }
}

pub fn extract_features(page: &Page, field: &FieldRef, cfg: &ExtractionConfig) -> Result<FeatureVector> {
    let element = page.resolve(&field.element_path)?;
    Ok(extract_element(element, cfg))
}

pub fn extract_form_fields(page: &Page, cfg: &ExtractionConfig) -> Vec<(FieldRef, FeatureVector)> {
    page.input_elements()
        .map(|e| (page.field_ref(e), extract_element(e, cfg)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    const FIRST_NAME_FIELD: &str = r#"<div class="control-group">
  <label for="firstName" class="control-label">
    First Name
  </label>
  <div class="controls">
    <input id="firstName" name="firstName" maxlength="45"
      type="text">
  </div>
</div>"#;

    #[test]
    fn normalizes_tokens() {
        let cfg = ExtractionConfig::default();
        assert_eq!(normalize_tokens("user@example.com", &cfg), strings(&["user", "example", "com"]));
        assert_eq!(normalize_tokens("MM/DD/YYYY", &cfg), strings(&["mm", "dd", "yyyy"]));
        assert!(normalize_tokens("", &cfg).is_empty());
        assert_eq!(normalize_tokens("firstName", &cfg), strings(&["firstname"]));
    }

    #[test]
    fn stopwords_are_dropped() {
        let cfg = ExtractionConfig {
            stopwords: ["is", "your"].map(String::from).into(),
            ..Default::default()
        };
        assert_eq!(
            normalize_tokens("Your email address is your username", &cfg),
            strings(&["email", "address", "username"])
        );
    }

    #[test]
    fn label_found_one_level_up() {
        let page = Page::parse("first_name_field", FIRST_NAME_FIELD);
        let cfg = ExtractionConfig::default();
        let input = page.input_elements().next().unwrap();
        let search = search_labels(input, &cfg, 0);
        assert_eq!(search.texts, vec!["First Name".to_string()]);
        assert_eq!(search.ascents, 1);
    }

    #[test]
    fn first_name_field_vector() {
        let page = Page::parse("first_name_field", FIRST_NAME_FIELD);
        let fields = extract_form_fields(&page, &ExtractionConfig::default());
        assert_eq!(fields.len(), 1);
        let expected = strings(&[
            "first", "name", "type", "text", "id", "firstname", "name", "firstname", "maxlength", "45",
        ]);
        assert_eq!(sorted(fields[0].1.tokens.clone()), sorted(expected));
    }

    #[test]
    fn zero_iterations_finds_nothing() {
        let page = Page::parse("first_name_field", FIRST_NAME_FIELD);
        let cfg = ExtractionConfig {
            max_iterations: 0,
            ..Default::default()
        };
        let input = page.input_elements().next().unwrap();
        assert!(find_closest_labels(input, &cfg, 0).is_empty());
    }

    #[test]
    fn direct_sibling_span() {
        let page = Page::parse(
            "p",
            r#"<div><span>Confirm Password</span><input type="password" id="pw2"></div>"#,
        );
        let input = page.input_elements().next().unwrap();
        let cfg = ExtractionConfig::default();
        let search = search_labels(input, &cfg, 0);
        assert_eq!(search.texts, vec!["Confirm Password".to_string()]);
        assert_eq!(search.ascents, 0);
    }

    #[test]
    fn bare_input_yields_empty_vector() {
        let page = Page::parse("p", "<html><body><input></body></html>");
        let fields = extract_form_fields(&page, &ExtractionConfig::default());
        assert_eq!(fields.len(), 1);
        assert!(fields[0].1.is_empty());
    }

    #[test]
    fn empty_document_has_no_fields() {
        let page = Page::parse("empty", "");
        assert!(extract_form_fields(&page, &ExtractionConfig::default()).is_empty());
    }

    #[test]
    fn element_path_round_trips() {
        let page = Page::parse(
            "p",
            "<form><div><input id=a></div><div><input id=b><input id=c></div></form>",
        );
        for e in page.input_elements() {
            let r = page.field_ref(e);
            let back = page.resolve(&r.element_path).unwrap();
            assert_eq!(back.id(), e.id());
        }
        let paths: Vec<_> = page.input_elements().map(|e| page.field_ref(e).element_path).collect();
        assert_eq!(
            paths,
            vec![
                "/html[1]/body[1]/form[1]/div[1]/input[1]",
                "/html[1]/body[1]/form[1]/div[2]/input[1]",
                "/html[1]/body[1]/form[1]/div[2]/input[2]",
            ]
        );
    }

    #[test]
    fn bad_locator_is_an_error() {
        let page = Page::parse("p", "<input>");
        for path in ["/html[1]/body[1]/input[2]", "", "/html[0]", "/html"] {
            assert!(matches!(page.resolve(path), Err(Error::Locator(_))), "{path}");
        }
        let field = FieldRef {
            page_id: "p".into(),
            element_path: "/html[1]/body[1]/select[1]".into(),
            raw_attributes: vec![],
        };
        assert!(extract_features(&page, &field, &ExtractionConfig::default()).is_err());
    }

    #[test]
    fn value_attribute_is_opt_in() {
        let page = Page::parse("p", r#"<input id="q" value="Secret Stuff">"#);
        let default = extract_form_fields(&page, &ExtractionConfig::default());
        assert_eq!(default[0].1.tokens, strings(&["id", "q"]));
        let mut cfg = ExtractionConfig::default();
        cfg.attribute_list.push("value".into());
        let with_value = extract_form_fields(&page, &cfg);
        assert_eq!(with_value[0].1.tokens, strings(&["id", "q", "value", "secret", "stuff"]));
    }
}
