//! Toy corpora sampled from category templates.

use rand::seq::IndexedRandom;

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarSpec {
    /// Category name and its words.
    pub categories: Vec<(String, Vec<String>)>,
    /// Each template is a sequence of category names.
    pub templates: Vec<Vec<String>>,
    pub sentences: usize,
    pub seed: u64,
}

const DEFAULT_TEMPLATES: [&str; 6] = [
    "det adj noun verb det noun prep det adj noun",
    "det noun verb prep det adj noun prep det noun",
    "det adj adj noun verb det noun prep det adj noun",
    "det noun prep det noun verb det adj noun prep det noun",
    "det adj noun prep det noun verb det adj adj noun",
    "det noun verb det noun prep det adj noun prep det noun",
];

impl GrammarSpec {
    pub fn with_seed(seed: u64) -> Self {
        GrammarSpec {
            seed,
            ..GrammarSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(Error::invalid("grammar has no templates"));
        }
        for template in &self.templates {
            if template.is_empty() {
                return Err(Error::invalid("grammar has an empty template"));
            }
            for cat in template {
                match self.categories.iter().find(|(name, _)| name == cat) {
                    None => return Err(Error::invalid(format!("unknown category {cat:?}"))),
                    Some((_, words)) if words.is_empty() => {
                        return Err(Error::invalid(format!("category {cat:?} has no words")))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Category of `word`, if it belongs to one.
    pub fn category_of(&self, word: &str) -> Option<&str> {
        self.categories
            .iter()
            .find(|(_, words)| words.iter().any(|w| w == word))
            .map(|(name, _)| name.as_str())
    }
}

impl Default for GrammarSpec {
    /// Five categories of twenty words each and templates of 10 to 12 slots;
    /// 10,000 sentences.
    fn default() -> Self {
        let categories = ["det", "adj", "noun", "verb", "prep"]
            .iter()
            .map(|cat| {
                let words = (0..20).map(|i| format!("{cat}{i:02}")).collect();
                (cat.to_string(), words)
            })
            .collect();
        let templates = DEFAULT_TEMPLATES
            .iter()
            .map(|t| t.split_whitespace().map(String::from).collect())
            .collect();
        GrammarSpec {
            categories,
            templates,
            sentences: 10_000,
            seed: 0,
        }
    }
}

/// Samples `spec.sentences` sentences: a uniform template, then a uniform
/// word for each slot.
pub fn generate_synthetic_corpus(spec: &GrammarSpec) -> Result<Vec<String>> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let lookup = |cat: &str| -> &[String] {
        &spec
            .categories
            .iter()
            .find(|(name, _)| name == cat)
            .expect("validated")
            .1
    };
    Ok((0..spec.sentences)
        .map(|_| {
            let template = spec.templates.choose(&mut rng).expect("validated non-empty");
            template
                .iter()
                .map(|cat| lookup(cat).choose(&mut rng).expect("validated").as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect())
}
