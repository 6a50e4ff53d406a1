use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::matrix::SparseVec;

/// Bag-of-words vocabulary fitted on training documents.
///
/// Kept tokens satisfy `2 <= df <= floor(N / 2)` where `N` is the number of
/// fit documents. Columns are in lexicographic token order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    fit_docs: usize,
    #[serde(default)]
    df: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, df: Vec<usize>, fit_docs: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens,
            fit_docs,
            df,
            index,
        }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn fit_docs(&self) -> usize {
        self.fit_docs
    }

    pub fn document_frequency(&self, token: &str) -> Option<usize> {
        self.column(token).and_then(|i| self.df.get(i).copied())
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// Fits a vocabulary on tokenized training documents.
pub fn fit_vocabulary<D: AsRef<[String]>>(documents: &[D]) -> Vocabulary {
    let n = documents.len();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in documents {
        let unique: HashSet<&str> = doc.as_ref().iter().map(String::as_str).collect();
        for token in unique {
            *df.entry(token).or_default() += 1;
        }
    }
    let max_df = n / 2;
    let (tokens, dfs): (Vec<String>, Vec<usize>) = df
        .into_iter()
        .filter(|&(_, d)| d >= 2 && d <= max_df)
        .map(|(t, d)| (t.to_string(), d))
        .unzip();
    if tokens.is_empty() {
        log::warn!("vocabulary is empty after pruning {n} documents");
    }
    Vocabulary::from_parts(tokens, dfs, n)
}

/// Token counts over the vocabulary. Unknown tokens are ignored.
pub fn transform_bow(vocab: &Vocabulary, document: &[String]) -> SparseVec {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for token in document {
        if let Some(col) = vocab.column(token) {
            *counts.entry(col as u32).or_default() += 1.0;
        }
    }
    let (indices, values) = counts.into_iter().unzip();
    SparseVec { indices, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::preprocess_code;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| preprocess_code([*t])).collect()
    }

    #[test]
    fn hand_worked_pruning() {
        let v = fit_vocabulary(&docs(&["alpha beta", "alpha gamma", "gamma delta", "gamma epsilon"]));
        assert_eq!(v.tokens(), ["alpha"]);
        assert_eq!(v.document_frequency("alpha"), Some(2));
        assert_eq!(v.fit_docs(), 4);
    }

    #[test]
    fn single_document_prunes_everything() {
        let v = fit_vocabulary(&docs(&["alpha alpha beta"]));
        assert!(v.is_empty());
    }

    #[test]
    fn transform_counts_and_ignores_unknown() {
        let v = fit_vocabulary(&docs(&["alpha beta", "alpha gamma", "gamma delta", "gamma epsilon"]));
        let row = transform_bow(&v, &preprocess_code(["alpha alpha beta zeta"]));
        assert_eq!(row.to_dense(v.len()), vec![2.0]);
        assert_eq!(transform_bow(&v, &[]).nnz(), 0);
        assert_eq!(transform_bow(&v, &preprocess_code(["gamma beta"])).nnz(), 0);
    }

    #[test]
    fn serde_round_trip_restores_lookup() {
        let v = fit_vocabulary(&docs(&["aa bb", "aa bb", "cc", "dd"]));
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"tokens\"") && json.contains("\"fit_docs\""));
        let back: Vocabulary = serde_json::from_str::<Vocabulary>(&json).unwrap().reindex();
        assert_eq!(back, v);
        assert_eq!(back.column("bb"), Some(1));
    }
}
