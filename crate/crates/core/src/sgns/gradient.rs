//! Negative-sampling logistic loss for one positive pair and its sampled
//! negatives:
//!
//! `L = -log σ(w·c) - Σ_k log σ(-w·n_k)`
//!
//! The trainer uses [`output_coefficient`] for its updates; the full
//! gradient is exposed for checking against finite differences.

use num_traits::Float;

#[inline]
pub fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<T: Float>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss of one logistic output: `-log σ(x)` for a positive, `-log σ(-x)`
/// for a negative.
#[inline]
pub fn logistic_loss<T: Float>(x: T, positive: bool) -> T {
    if positive {
        softplus(-x)
    } else {
        softplus(x)
    }
}

/// `label - σ(x)`, the negated derivative of [`logistic_loss`] w.r.t. `x`.
#[inline]
pub fn output_coefficient<T: Float>(x: T, positive: bool) -> T {
    let label = if positive { T::one() } else { T::zero() };
    label - sigmoid(x)
}

#[inline]
pub fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairGradients<T> {
    pub loss: T,
    pub word: Vec<T>,
    pub positive: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

/// Loss and gradients w.r.t. the word vector, the positive context vector
/// and each negative context vector.
pub fn pair_loss_gradients<T: Float>(word: &[T], positive: &[T], negatives: &[&[T]]) -> PairGradients<T> {
    let dim = word.len();
    let mut grad_word = vec![T::zero(); dim];

    let f = dot(word, positive);
    let mut loss = logistic_loss(f, true);
    let g = -output_coefficient(f, true);
    for i in 0..dim {
        grad_word[i] = grad_word[i] + g * positive[i];
    }
    let grad_positive = word.iter().map(|&w| g * w).collect();

    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let f = dot(word, neg);
        loss = loss + logistic_loss(f, false);
        let g = -output_coefficient(f, false);
        for i in 0..dim {
            grad_word[i] = grad_word[i] + g * neg[i];
        }
        grad_negatives.push(word.iter().map(|&w| g * w).collect());
    }

    PairGradients {
        loss,
        word: grad_word,
        positive: grad_positive,
        negatives: grad_negatives,
    }
}
