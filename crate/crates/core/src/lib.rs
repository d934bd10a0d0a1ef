pub mod conllu;
pub mod eval;
pub mod extract;
mod hash;
pub mod search;
pub mod sgns;
pub mod pipeline;
