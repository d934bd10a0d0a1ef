#![allow(dead_code)]

use depctx_core::conllu::{Sentence, Token};
use proptest::prelude::*;

pub const FORMS: &[&str] = &[
    "dog", "cat", "runs", "with", "big", "the", "and", "park", "in", "quickly", "sees", "two",
];

pub const RELATIONS: &[&str] = &[
    "nsubj", "dobj", "amod", "nmod", "case", "conj", "cc", "det", "advmod", "nummod", "compound",
    "punct", "acl:relcl", "appos", "xcomp", "obl", "mark",
];

/// Builds a tree from an attachment order: `order[0]` is the root and every
/// later token attaches to one placed before it.
pub fn build_sentence(order: &[usize], parents: &[usize], forms: &[usize], rels: &[usize]) -> Sentence {
    let n = order.len();
    let mut head = vec![0usize; n];
    for k in 1..n {
        let parent = order[parents[k] % k];
        head[order[k]] = parent + 1;
    }
    let tokens = (0..n)
        .map(|i| Token {
            index: i + 1,
            form: FORMS[forms[i] % FORMS.len()].to_owned(),
            lemma: FORMS[forms[i] % FORMS.len()].to_owned(),
            upos: "X".to_owned(),
            head: head[i],
            deprel: if head[i] == 0 {
                "root".to_owned()
            } else {
                RELATIONS[rels[i] % RELATIONS.len()].to_owned()
            },
        })
        .collect();
    Sentence::new(tokens)
}

pub fn sentence(max_len: usize) -> impl Strategy<Value = Sentence> {
    (1..=max_len).prop_flat_map(|n| {
        (
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            proptest::collection::vec(0usize..64, n),
            proptest::collection::vec(0usize..64, n),
            proptest::collection::vec(0usize..64, n),
        )
            .prop_map(|(order, parents, forms, rels)| build_sentence(&order, &parents, &forms, &rels))
    })
}

pub fn corpus(max_sentences: usize) -> impl Strategy<Value = Vec<Sentence>> {
    proptest::collection::vec(sentence(12), 0..=max_sentences)
}

pub fn to_text(sentences: &[Sentence]) -> String {
    sentences.iter().map(Sentence::to_conllu).collect()
}
