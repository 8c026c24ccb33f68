//! Beam search and iterated local search for the single-product maritime
//! inventory routing problem.

pub mod beam;
pub mod evaluator;
pub mod greedy;
pub mod harness;
pub mod ils;
pub mod instance;
pub mod localsearch;
pub mod money;
pub mod seeding;
pub mod solution;
pub mod validator;
