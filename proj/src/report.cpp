#include "strainiq/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "strainiq/error.hpp"
#include "strainiq/rng.hpp"
#include "strainiq/util.hpp"

namespace strainiq::stats {

namespace {

CorrelationCell correlate(const std::vector<double>& scores, const std::vector<double>& dmos,
                          const std::vector<std::size_t>& take) {
    std::vector<double> s, d;
    s.reserve(take.size());
    d.reserve(take.size());
    for (std::size_t i : take) {
        s.push_back(scores[i]);
        d.push_back(dmos[i]);
    }
    CorrelationCell cell;
    cell.n = static_cast<int>(take.size());
    auto rho = try_spearman(s, d);
    auto r = try_pearson(s, d);
    if (rho && r) {
        cell.defined = true;
        cell.spearman = *rho;
        cell.pearson = *r;
    }
    return cell;
}

}  // namespace

EvalReport evaluate_models(const std::vector<corpus::LoadedPair>& pairs, const std::vector<ModelSpec>& models,
                           const EvalOptions& opt) {
    if (pairs.empty()) throw ShapeError("no pairs to evaluate");
    EvalReport rep;
    rep.options = opt;
    rep.pair_count = static_cast<int>(pairs.size());

    std::vector<double> dmos;
    dmos.reserve(pairs.size());
    for (const auto& p : pairs) {
        dmos.push_back(p.meta.dmos);
        if (std::find(rep.categories.begin(), rep.categories.end(), p.meta.category) == rep.categories.end())
            rep.categories.push_back(p.meta.category);
    }

    int k = 0;
    std::vector<int> pair_fold(pairs.size(), -1);
    if (opt.folds) {
        k = opt.folds->fold_count;
        for (std::size_t i = 0; i < pairs.size(); ++i)
            pair_fold[i] = corpus::fold_of(*opt.folds, pairs[i].meta.ref_path);
    }

    std::vector<std::size_t> all_indices(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) all_indices[i] = i;

    for (const auto& spec : models) {
        ModelResult res;
        res.label = spec.label;
        try {
            res.scores.assign(pairs.size(), 0.0);
            if (spec.fit && opt.folds) {
                // Each fold is scored by a model that never saw its
                // reference images.
                for (int f = 0; f < k; ++f) {
                    std::vector<corpus::LoadedPair> train;
                    for (std::size_t i = 0; i < pairs.size(); ++i)
                        if (pair_fold[i] != f) train.push_back(pairs[i]);
                    if (train.empty()) throw DegeneracyError("fold " + std::to_string(f) + " has no training pairs");
                    ScoreFn scorer = spec.fit(train);
                    for (std::size_t i = 0; i < pairs.size(); ++i)
                        if (pair_fold[i] == f) res.scores[i] = scorer(pairs[i]);
                }
            } else if (spec.fit) {
                ScoreFn scorer = spec.fit(pairs);
                for (std::size_t i = 0; i < pairs.size(); ++i) res.scores[i] = scorer(pairs[i]);
            } else if (spec.score) {
                for (std::size_t i = 0; i < pairs.size(); ++i) res.scores[i] = spec.score(pairs[i]);
            } else {
                throw ParseError("model '" + spec.label + "' has neither a scorer nor a fitter");
            }
            for (double s : res.scores)
                if (!std::isfinite(s)) throw DegeneracyError("non-finite score produced");
        } catch (const std::exception& e) {
            res.failed = true;
            res.diagnostic = e.what();
            res.scores.clear();
            rep.models.push_back(std::move(res));
            continue;
        }

        res.overall = correlate(res.scores, dmos, all_indices);
        for (const auto& cat : rep.categories) {
            std::vector<std::size_t> take;
            for (std::size_t i = 0; i < pairs.size(); ++i)
                if (pairs[i].meta.category == cat) take.push_back(i);
            res.by_category.emplace_back(cat, correlate(res.scores, dmos, take));
        }
        if (opt.folds) {
            bool all_defined = true;
            double sum_s = 0.0, sum_r = 0.0;
            for (int f = 0; f < k; ++f) {
                std::vector<std::size_t> take;
                for (std::size_t i = 0; i < pairs.size(); ++i)
                    if (pair_fold[i] == f) take.push_back(i);
                auto cell = correlate(res.scores, dmos, take);
                all_defined = all_defined && cell.defined;
                sum_s += cell.spearman;
                sum_r += cell.pearson;
                res.per_fold.push_back(cell);
            }
            if (all_defined && k > 0) {
                res.fold_mean_defined = true;
                res.fold_mean_spearman = sum_s / k;
                res.fold_mean_pearson = sum_r / k;
            }
        }
        if (opt.n_perm > 0 && res.overall.defined) {
            PermutationOptions popt;
            popt.n_perm = opt.n_perm;
            popt.seed = mix_seed(opt.perm_seed, fnv1a64(res.label));
            popt.statistic = CorrStatistic::spearman;
            res.permutation_ran = true;
            res.permutation_p = permutation_test_corr(res.scores, dmos, popt);
            res.permutation_p_adjusted = std::min(1.0, res.permutation_p * opt.bonferroni_perm);
            res.permutation_significant = res.permutation_p_adjusted < opt.alpha;
        }
        rep.models.push_back(std::move(res));
    }

    for (const auto& [label_a, label_b] : opt.fisher_pairs) {
        ComparisonResult cmp;
        cmp.model_a = label_a;
        cmp.model_b = label_b;
        const ModelResult* a = nullptr;
        const ModelResult* b = nullptr;
        for (const auto& m : rep.models) {
            if (m.label == label_a) a = &m;
            if (m.label == label_b) b = &m;
        }
        if (!a || !b) {
            cmp.note = "unknown model label";
        } else if (a->failed || b->failed) {
            cmp.note = "model column failed";
        } else if (!a->overall.defined || !b->overall.defined) {
            cmp.note = "correlation undefined";
        } else {
            cmp.r_a = opt.fisher_statistic == CorrStatistic::spearman ? a->overall.spearman : a->overall.pearson;
            cmp.r_b = opt.fisher_statistic == CorrStatistic::spearman ? b->overall.spearman : b->overall.pearson;
            cmp.n = rep.pair_count;
            try {
                cmp.p = fisher_rz_two_sample(cmp.r_a, cmp.n, cmp.r_b, cmp.n);
                cmp.p_adjusted = std::min(1.0, cmp.p * opt.bonferroni_fisher);
                cmp.significant = cmp.p_adjusted < opt.alpha;
                cmp.defined = true;
            } catch (const DegeneracyError& e) {
                cmp.note = e.what();
            }
        }
        rep.comparisons.push_back(std::move(cmp));
    }
    return rep;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

constexpr std::size_t kValueWidth = 22;

std::string cell_text(const CorrelationCell& cell, bool want_spearman) {
    if (!cell.defined) return "undefined";
    return format_full(want_spearman ? cell.spearman : cell.pearson);
}

}  // namespace

std::string render_text(const EvalReport& rep) {
    std::ostringstream out;
    const auto& opt = rep.options;
    out << "dataset: " << (opt.dataset_label.empty() ? "(unnamed)" : opt.dataset_label) << '\n';
    out << "pairs: " << rep.pair_count << "   dmos convention: " << opt.dmos_convention
        << "   stretch: " << opt.stretch_mode;
    if (opt.folds)
        out << "   folds: " << opt.folds->fold_count << " (seed " << opt.folds->seed << ")";
    out << "\n\n";

    std::size_t group_w = std::string("group").size();
    for (const auto& c : rep.categories) group_w = std::max(group_w, c.size() + 2);
    group_w = std::max(group_w, std::size_t{12});

    auto header = [&]() {
        out << pad("group", group_w) << ' ' << pad("n", 6) << ' ' << pad("stat", 9);
        for (const auto& m : rep.models) out << ' ' << pad(m.label, kValueWidth);
        out << '\n';
    };

    out << "== correlation with dmos (pooled scores) ==\n";
    header();
    for (int want_spearman = 1; want_spearman >= 0; --want_spearman) {
        out << pad("all", group_w) << ' ' << pad(std::to_string(rep.pair_count), 6) << ' '
            << pad(want_spearman ? "spearman" : "pearson", 9);
        for (const auto& m : rep.models)
            out << ' ' << pad(m.failed ? "failed" : cell_text(m.overall, want_spearman), kValueWidth);
        out << '\n';
    }
    for (std::size_t c = 0; c < rep.categories.size(); ++c) {
        const std::string label = rep.categories[c].empty() ? "(none)" : rep.categories[c];
        int n = 0;
        for (const auto& m : rep.models)
            if (!m.failed) {
                n = m.by_category[c].second.n;
                break;
            }
        for (int want_spearman = 1; want_spearman >= 0; --want_spearman) {
            out << pad("  " + label, group_w) << ' ' << pad(std::to_string(n), 6) << ' '
                << pad(want_spearman ? "spearman" : "pearson", 9);
            for (const auto& m : rep.models)
                out << ' '
                    << pad(m.failed ? "failed" : cell_text(m.by_category[c].second, want_spearman), kValueWidth);
            out << '\n';
        }
    }

    if (opt.folds) {
        out << "\n== mean of per-fold correlations ==\n";
        header();
        for (int want_spearman = 1; want_spearman >= 0; --want_spearman) {
            out << pad("all", group_w) << ' ' << pad("-", 6) << ' '
                << pad(want_spearman ? "spearman" : "pearson", 9);
            for (const auto& m : rep.models) {
                std::string text = m.failed               ? "failed"
                                   : !m.fold_mean_defined ? "undefined"
                                   : format_full(want_spearman ? m.fold_mean_spearman : m.fold_mean_pearson);
                out << ' ' << pad(text, kValueWidth);
            }
            out << '\n';
        }
    }

    bool any_perm = false;
    for (const auto& m : rep.models) any_perm = any_perm || m.permutation_ran;
    if (any_perm) {
        out << "\n== permutation test vs zero correlation (" << opt.n_perm << " draws, bonferroni x"
            << format_full(opt.bonferroni_perm) << ", alpha " << format_full(opt.alpha) << ") ==\n";
        for (const auto& m : rep.models) {
            if (m.failed) {
                out << "  " << m.label << ": column failed (" << m.diagnostic << ")\n";
            } else if (!m.permutation_ran) {
                out << "  " << m.label << ": not run\n";
            } else {
                out << "  " << m.label << ": p=" << format_full(m.permutation_p)
                    << " adjusted=" << format_full(m.permutation_p_adjusted)
                    << (m.permutation_significant ? " significant" : " not-significant") << '\n';
            }
        }
    }

    if (!rep.comparisons.empty()) {
        out << "\n== fisher r-to-z model comparisons ("
            << (opt.fisher_statistic == CorrStatistic::spearman ? "spearman" : "pearson") << ", bonferroni x"
            << format_full(opt.bonferroni_fisher) << ", alpha " << format_full(opt.alpha) << ") ==\n";
        for (const auto& c : rep.comparisons) {
            out << "  " << c.model_a << " vs " << c.model_b << ": ";
            if (!c.defined) {
                out << "skipped (" << c.note << ")\n";
            } else {
                out << "r=" << format_full(c.r_a) << " vs r=" << format_full(c.r_b) << " (n=" << c.n
                    << "), p=" << format_full(c.p) << " adjusted=" << format_full(c.p_adjusted)
                    << (c.significant ? " significant" : " not-significant") << '\n';
            }
        }
    }

    for (const auto& m : rep.models)
        if (m.failed) out << "\nmodel '" << m.label << "' failed: " << m.diagnostic << '\n';
    return out.str();
}

void write_report_csv(const std::string& path, const EvalReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << "kind,dataset,group,model,model_b,n,defined,spearman,pearson,"
           "spearman_fold_mean,pearson_fold_mean,p,p_adjusted,significant\n";
    const std::string& ds = rep.options.dataset_label;
    auto corr_row = [&](const std::string& group, const ModelResult& m, const CorrelationCell& cell) {
        out << "correlation," << ds << ',' << group << ',' << m.label << ",," << cell.n << ','
            << (m.failed ? "failed" : cell.defined ? "yes" : "no") << ',';
        if (cell.defined && !m.failed)
            out << format_full(cell.spearman) << ',' << format_full(cell.pearson);
        else
            out << ',';
        if (group == "all" && m.fold_mean_defined)
            out << ',' << format_full(m.fold_mean_spearman) << ',' << format_full(m.fold_mean_pearson);
        else
            out << ",,";
        if (group == "all" && m.permutation_ran)
            out << ',' << format_full(m.permutation_p) << ',' << format_full(m.permutation_p_adjusted) << ','
                << (m.permutation_significant ? "yes" : "no");
        else
            out << ",,,";
        out << '\n';
    };
    for (const auto& m : rep.models) {
        corr_row("all", m, m.overall);
        for (const auto& [cat, cell] : m.by_category) corr_row(cat.empty() ? "(none)" : cat, m, cell);
        for (std::size_t f = 0; f < m.per_fold.size(); ++f)
            corr_row("fold" + std::to_string(f), m, m.per_fold[f]);
    }
    for (const auto& c : rep.comparisons) {
        out << "comparison," << ds << ",all," << c.model_a << ',' << c.model_b << ',' << c.n << ','
            << (c.defined ? "yes" : "no") << ',';
        if (c.defined)
            out << format_full(c.r_a) << ',' << format_full(c.r_b);
        else
            out << ',';
        out << ",,";  // fold-mean columns unused
        if (c.defined)
            out << ',' << format_full(c.p) << ',' << format_full(c.p_adjusted) << ','
                << (c.significant ? "yes" : "no");
        else
            out << ",,,";
        out << '\n';
    }
    if (!out) throw IoError("write failure on " + path);
}

namespace {

struct Fit {
    bool defined = false;
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
    int excluded = 0;
};

Fit fit_line(const std::vector<double>& x, const std::vector<double>& y, bool log_axes) {
    Fit fit;
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (log_axes) {
            if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
                ++fit.excluded;
                continue;
            }
            fx.push_back(std::log10(x[i]));
            fy.push_back(std::log10(y[i]));
        } else {
            fx.push_back(x[i]);
            fy.push_back(y[i]);
        }
    }
    fit.points = static_cast<int>(fx.size());
    if (fx.size() < 2) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
        mx += fx[i];
        my += fy[i];
    }
    mx /= static_cast<double>(fx.size());
    my /= static_cast<double>(fx.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < fx.size(); ++i) {
        sxx += (fx[i] - mx) * (fx[i] - mx);
        sxy += (fx[i] - mx) * (fy[i] - my);
    }
    if (sxx == 0.0) return fit;
    fit.defined = true;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

}  // namespace

void export_scatter(const std::string& path, const std::vector<ScoreSeries>& series,
                    const std::vector<double>& dmos, const ScatterOptions& opt) {
    if (series.empty()) throw ShapeError("no score series to export");
    for (const auto& s : series)
        if (s.values.size() != dmos.size())
            throw ShapeError("series '" + s.label + "' has " + std::to_string(s.values.size()) +
                             " values for " + std::to_string(dmos.size()) + " pairs");

    // Exported values: optionally z-scored per column (sample sd, n - 1).
    std::vector<std::vector<double>> columns;
    for (const auto& s : series) {
        std::vector<double> col = s.values;
        if (opt.zscore) {
            if (col.size() < 2) throw DegeneracyError("z-scoring needs at least 2 values");
            double mean = 0.0;
            for (double v : col) mean += v;
            mean /= static_cast<double>(col.size());
            double ss = 0.0;
            for (double v : col) ss += (v - mean) * (v - mean);
            double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
            if (sd == 0.0) throw DegeneracyError("z-scoring undefined for constant series '" + s.label + "'");
            for (double& v : col) v = (v - mean) / sd;
        }
        columns.push_back(std::move(col));
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << "# scatter export: zscore=" << (opt.zscore ? "on" : "off")
        << " axes=" << (opt.log_axes ? "log10" : "linear") << '\n';
    for (std::size_t m = 0; m < series.size(); ++m) {
        Fit fit = fit_line(columns[m], dmos, opt.log_axes);
        out << "# fit " << series[m].label << ": ";
        if (fit.defined)
            out << "slope=" << format_full(fit.slope) << " intercept=" << format_full(fit.intercept);
        else
            out << "undefined";
        out << " points=" << fit.points << " excluded=" << fit.excluded << '\n';
    }
    out << "dmos";
    for (const auto& s : series) out << ',' << s.label;
    if (opt.log_axes)
        for (const auto& s : series) out << ",in_fit_" << s.label;
    out << '\n';
    for (std::size_t i = 0; i < dmos.size(); ++i) {
        out << format_full(dmos[i]);
        for (const auto& col : columns) out << ',' << format_full(col[i]);
        if (opt.log_axes)
            for (const auto& col : columns) out << ',' << ((col[i] > 0.0 && dmos[i] > 0.0) ? 1 : 0);
        out << '\n';
    }
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace strainiq::stats
