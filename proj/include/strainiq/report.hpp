#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strainiq/corpus.hpp"
#include "strainiq/stats.hpp"

namespace strainiq::stats {

using ScoreFn = std::function<double(const corpus::LoadedPair&)>;
using FitFn = std::function<ScoreFn(const std::vector<corpus::LoadedPair>&)>;

// A model column. Fixed metrics set `score` only. Trainable metrics set
// `fit`; with folds, each fold is scored by a model fitted on the other
// folds, without folds the fit sees every pair (in-sample).
struct ModelSpec {
    std::string label;
    ScoreFn score;
    FitFn fit;
};

struct ScoreSeries {
    std::string label;
    std::vector<double> values;
};

struct CorrelationCell {
    int n = 0;
    bool defined = false;  // false: undefined (constant series or too few points)
    double spearman = 0.0;
    double pearson = 0.0;
};

struct ModelResult {
    std::string label;
    bool failed = false;
    std::string diagnostic;
    std::vector<double> scores;  // pooled, aligned with the pair list
    CorrelationCell overall;
    std::vector<std::pair<std::string, CorrelationCell>> by_category;
    std::vector<CorrelationCell> per_fold;
    bool fold_mean_defined = false;
    double fold_mean_spearman = 0.0;
    double fold_mean_pearson = 0.0;
    bool permutation_ran = false;
    double permutation_p = 1.0;
    double permutation_p_adjusted = 1.0;
    bool permutation_significant = false;
};

struct ComparisonResult {
    std::string model_a;
    std::string model_b;
    bool defined = false;
    std::string note;  // reason when not defined
    double r_a = 0.0;
    double r_b = 0.0;
    long long n = 0;
    double p = 1.0;
    double p_adjusted = 1.0;
    bool significant = false;
};

struct EvalOptions {
    std::optional<corpus::FoldAssignment> folds;
    // Model label pairs whose pooled correlations are compared by Fisher
    // r-to-z; the compared coefficient is `fisher_statistic`.
    std::vector<std::pair<std::string, std::string>> fisher_pairs;
    CorrStatistic fisher_statistic = CorrStatistic::spearman;
    int n_perm = 0;  // 0 disables per-model permutation tests vs zero
    std::uint64_t perm_seed = 0;
    double bonferroni_fisher = 1.0;
    double bonferroni_perm = 1.0;
    double alpha = 0.05;
    std::string dataset_label;
    std::string dmos_convention = "printed";   // recorded in the report
    std::string stretch_mode = "independent";  // recorded in the report
};

struct EvalReport {
    EvalOptions options;
    int pair_count = 0;
    std::vector<std::string> categories;  // first-appearance order
    std::vector<ModelResult> models;
    std::vector<ComparisonResult> comparisons;
};

// Scores every model on every pair (held-out per fold for trainable models,
// with the held-out scores pooled), then correlates against DMOS overall,
// per category, and per fold.
EvalReport evaluate_models(const std::vector<corpus::LoadedPair>& pairs, const std::vector<ModelSpec>& models,
                           const EvalOptions& opt = {});

std::string render_text(const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

struct ScatterOptions {
    bool zscore = false;    // z-score each score column (sample sd, n - 1)
    bool log_axes = false;  // fit on log10 axes; non-positive rows excluded
};

// One row per pair: dmos plus each model's (optionally z-scored) score.
// Header comments carry a least-squares fit of dmos against each column on
// the requested axes.
void export_scatter(const std::string& path, const std::vector<ScoreSeries>& series,
                    const std::vector<double>& dmos, const ScatterOptions& opt = {});

}  // namespace strainiq::stats
