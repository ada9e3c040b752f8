//! Concrete models built on the composite problem: a hinge-loss linear SVM
//! trained on bag-of-words features and a parametric sparse representation
//! problem.

pub mod sparse;
pub mod svm;
