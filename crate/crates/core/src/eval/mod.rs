//! Link-prediction evaluation and similarity kernels over embeddings.

mod linkpred;
mod similarity;
mod split;

pub use linkpred::{
    link_predict, random_precision_expectation, random_precision_variance, run_trials, summarize,
    write_summary_csv, RankedResult, Summary, Trial, TrialOptions, DEFAULT_NS, DEFAULT_TRIALS,
};
pub use similarity::{
    binarized_hamming, cosine, dimension_medians, hamming, jaccard, similarity, write_kernel_matrix, Kernel,
    Metric, HAMMING_EPSILON,
};
pub use split::{make_split, CandidatePair, EvalSplit, DEFAULT_PAIR_FRACTION, DEFAULT_TEST_FRACTION, SPLIT_RETRIES};
