// Command-line front end: scoring, batch scoring, training, parameter sweeps,
// model comparison, and scatter export. Exit codes: 0 success, 2 parse,
// 3 io, 4 shape, 5 degeneracy, 1 anything else.
#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "strainiq/baselines.hpp"
#include "strainiq/connectivity.hpp"
#include "strainiq/corpus.hpp"
#include "strainiq/error.hpp"
#include "strainiq/geometry.hpp"
#include "strainiq/regression.hpp"
#include "strainiq/report.hpp"
#include "strainiq/stats.hpp"
#include "strainiq/util.hpp"

namespace {

using namespace strainiq;

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError(what + ": trailing characters in '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(what + ": cannot parse number '" + s + "'");
    }
}

// A scoring function plus the spec string it was parsed from.
struct Metric {
    std::string name;
    std::function<double(const GrayImage&, const GrayImage&)> score;
};

// euclid | ssim | gauss:<sigma> | dog:<center>,<surround>,<alpha> | jacobian:<path>
Metric parse_metric(const std::string& spec, bool allow_crop) {
    Metric m;
    m.name = spec;
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "euclid" || head == "ssim") {
        if (!rest.empty()) throw ParseError("metric '" + head + "' takes no parameters");
        if (head == "euclid")
            m.score = [](const GrayImage& a, const GrayImage& b) { return baselines::euclidean_metric(a, b); };
        else
            m.score = [](const GrayImage& a, const GrayImage& b) { return baselines::ssim(a, b); };
        return m;
    }
    if (head == "gauss") {
        double sigma = parse_double(rest, "gauss sigma");
        auto kernel = std::make_shared<connectivity::ConnectivityKernel>(
            connectivity::build_kernel(connectivity::GaussianProfile{sigma}));
        m.score = [kernel](const GrayImage& a, const GrayImage& b) {
            return connectivity::score_pair(a, b, *kernel);
        };
        return m;
    }
    if (head == "dog") {
        auto parts = split(rest, ',');
        if (parts.size() != 3) throw ParseError("dog metric needs center,surround,alpha");
        connectivity::DogProfile p{parse_double(parts[0], "dog center"),
                                   parse_double(parts[1], "dog surround"),
                                   parse_double(parts[2], "dog alpha")};
        auto kernel = std::make_shared<connectivity::ConnectivityKernel>(connectivity::build_kernel(p));
        m.score = [kernel](const GrayImage& a, const GrayImage& b) {
            return connectivity::score_pair(a, b, *kernel);
        };
        return m;
    }
    if (head == "jacobian") {
        if (rest.empty()) throw ParseError("jacobian metric needs a file path");
        auto j = std::make_shared<regression::TileJacobian>(regression::load_jacobian(rest));
        m.score = [j, allow_crop](const GrayImage& a, const GrayImage& b) {
            return regression::tiled_distance(a, b, *j, allow_crop);
        };
        return m;
    }
    throw ParseError("unknown metric '" + spec +
                     "' (expected euclid, ssim, gauss:S, dog:C,S,A, or jacobian:PATH)");
}

// "lo:step:hi" -> inclusive arithmetic grid.
std::vector<double> parse_grid(const std::string& s, const std::string& what) {
    auto parts = split(s, ':');
    if (parts.size() != 3) throw ParseError(what + ": expected lo:step:hi, got '" + s + "'");
    double lo = parse_double(parts[0], what + " lo");
    double step = parse_double(parts[1], what + " step");
    double hi = parse_double(parts[2], what + " hi");
    return connectivity::make_grid(lo, hi, step);
}

corpus::Manifest single_row_manifest(const corpus::RatedPair& row, const std::string& dataset_id) {
    corpus::Manifest m;
    m.pairs.push_back(row);
    m.dataset_id = dataset_id;
    return m;
}

int exit_code_of(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const ShapeError*>(&e)) return 4;
    if (dynamic_cast<const DegeneracyError*>(&e)) return 5;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    return 1;
}

int cmd_score(const std::string& metric_spec, const std::string& ref_path, const std::string& deg_path,
              const std::string& stretch, bool allow_crop) {
    Metric metric = parse_metric(metric_spec, allow_crop);
    corpus::RatedPair row;
    row.ref_path = ref_path;
    row.deg_path = deg_path;
    auto pairs = corpus::load_pairs(single_row_manifest(row, ""), corpus::parse_stretch_mode(stretch));
    std::cout << format_full(metric.score(*pairs[0].ref, *pairs[0].deg)) << "\n";
    return 0;
}

int cmd_batch(const std::string& manifest_path, const std::string& metric_spec, const std::string& out_path,
              const std::string& stretch, bool allow_crop) {
    corpus::Manifest manifest = corpus::load_manifest(manifest_path);
    if (manifest.pairs.empty()) throw ParseError(manifest_path + ": manifest has no rows");
    Metric metric = parse_metric(metric_spec, allow_crop);
    corpus::StretchMode mode = corpus::parse_stretch_mode(stretch);

    const std::size_t n = manifest.pairs.size();
    std::vector<double> scores(n, 0.0);
    std::vector<std::string> diagnostics(n);
    std::vector<int> codes(n, 0);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            auto pairs = corpus::load_pairs(single_row_manifest(manifest.pairs[idx], manifest.dataset_id), mode);
            scores[idx] = metric.score(*pairs[0].ref, *pairs[0].deg);
        } catch (const std::exception& e) {
            diagnostics[idx] = e.what();
            codes[idx] = exit_code_of(e);
        }
    }

    std::ofstream out(out_path);
    if (!out) throw IoError(out_path + ": cannot open for writing");
    out << "ref_path,deg_path,score\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = manifest.pairs[i];
        out << row.ref_path << ',' << row.deg_path << ','
            << (codes[i] == 0 ? format_full(scores[i]) : std::string("error")) << "\n";
    }
    out.close();

    int first_code = 0;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (codes[i] == 0) continue;
        ++failed;
        if (first_code == 0) first_code = codes[i];
        std::cerr << "row " << (i + 1) << " (" << manifest.pairs[i].ref_path << ", "
                  << manifest.pairs[i].deg_path << "): " << diagnostics[i] << "\n";
    }
    if (failed > 0) {
        std::cerr << failed << " of " << n << " rows failed\n";
        return first_code;
    }
    std::cout << "scored " << n << " pairs -> " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, long long iters, double step, std::uint64_t seed,
              const std::string& out_path, const std::string& trace_path, int checkpoint_every,
              bool use_root, bool allow_crop, const std::string& stretch) {
    corpus::Manifest manifest = corpus::load_manifest(manifest_path);
    auto pairs = corpus::load_pairs(manifest, corpus::parse_stretch_mode(stretch));
    bool dmos_constant = true;
    for (const auto& p : pairs)
        if (p.meta.dmos != pairs.front().meta.dmos) {
            dmos_constant = false;
            break;
        }
    if (dmos_constant)
        throw DegeneracyError(manifest_path + ": dmos is constant; the training objective is undefined");

    regression::TrainingConfig cfg;
    cfg.iterations = iters;
    cfg.step = step;
    cfg.seed = seed;
    cfg.checkpoint_every = checkpoint_every;
    cfg.use_root = use_root;
    cfg.allow_crop = allow_crop;
    cfg.dataset_id = manifest.dataset_id;
    auto [jacobian, trace] = regression::train_jacobian(pairs, cfg);

    regression::save_jacobian(jacobian, out_path);
    if (!trace_path.empty()) regression::write_trace_table(trace_path, trace);
    std::cout << "initial error " << format_full(trace.initial_error) << "\n";
    std::cout << "final error " << format_full(trace.final_error) << "\n";
    std::cout << "accepted " << trace.accepted.size() << " of " << trace.proposals << " proposals\n";
    return 0;
}

void print_sweep_best(const connectivity::SweepResult& result) {
    for (int f = 0; f < result.fold_count; ++f) {
        const std::size_t g = result.best_index_per_fold[static_cast<std::size_t>(f)];
        std::cout << "fold " << f << " best:";
        for (std::size_t p = 0; p < result.param_names.size(); ++p)
            std::cout << ' ' << result.param_names[p] << '='
                      << format_full(result.grid[g][p]);
        std::cout << " error=" << format_full(result.fold_errors[static_cast<std::size_t>(f)][g]);
        if (result.degenerate[static_cast<std::size_t>(f)][g]) std::cout << " (degenerate)";
        std::cout << "\n";
    }
}

int cmd_sweep(const std::string& manifest_path, const std::string& metric, const std::string& grid,
              const std::string& center_grid, const std::string& surround_grid, const std::string& alpha_grid,
              int folds, std::uint64_t seed, const std::string& out_path, const std::string& stretch) {
    corpus::Manifest manifest = corpus::load_manifest(manifest_path);
    auto pairs = corpus::load_pairs(manifest, corpus::parse_stretch_mode(stretch));

    connectivity::SweepResult result;
    if (metric == "gauss") {
        result = connectivity::sweep_gaussian(pairs, parse_grid(grid, "--grid"), folds, seed);
    } else if (metric == "dog") {
        result = connectivity::sweep_dog(pairs, parse_grid(center_grid, "--center-grid"),
                                         parse_grid(surround_grid, "--surround-grid"),
                                         parse_grid(alpha_grid, "--alpha-grid"), folds, seed);
    } else {
        throw ParseError("sweep metric must be gauss or dog, got '" + metric + "'");
    }
    connectivity::write_sweep_table(out_path, result);
    print_sweep_best(result);
    return 0;
}

int cmd_compare(const std::string& manifest_path, const std::string& metrics_csv, int folds,
                std::uint64_t seed, const std::string& fisher_csv, int n_perm, std::uint64_t perm_seed,
                double bonf_fisher, double bonf_perm, const std::string& out_csv, const std::string& stretch,
                bool allow_crop) {
    corpus::Manifest manifest = corpus::load_manifest(manifest_path);
    auto pairs = corpus::load_pairs(manifest, corpus::parse_stretch_mode(stretch));

    std::vector<stats::ModelSpec> models;
    for (const auto& spec : split(metrics_csv, ',')) {
        if (spec.empty()) throw ParseError("--metrics contains an empty entry");
        Metric metric = parse_metric(spec, allow_crop);
        stats::ModelSpec model;
        model.label = metric.name;
        model.score = [metric](const corpus::LoadedPair& p) { return metric.score(*p.ref, *p.deg); };
        models.push_back(std::move(model));
    }

    stats::EvalOptions opt;
    if (folds > 0) opt.folds = corpus::stratified_folds(manifest, folds, seed);
    if (!fisher_csv.empty()) {
        for (const auto& pair_spec : split(fisher_csv, ',')) {
            auto eq = pair_spec.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == pair_spec.size())
                throw ParseError("--fisher entries must look like labelA=labelB, got '" + pair_spec + "'");
            opt.fisher_pairs.emplace_back(pair_spec.substr(0, eq), pair_spec.substr(eq + 1));
        }
    }
    opt.n_perm = n_perm;
    opt.perm_seed = perm_seed;
    opt.bonferroni_fisher = bonf_fisher;
    opt.bonferroni_perm = bonf_perm;
    opt.dataset_label = manifest.dataset_id;
    opt.stretch_mode = stretch;

    stats::EvalReport report = stats::evaluate_models(pairs, models, opt);
    std::cout << stats::render_text(report);
    if (!out_csv.empty()) stats::write_report_csv(out_csv, report);
    for (const auto& m : report.models)
        if (m.failed) {
            std::cerr << "model column failed: " << m.label << ": " << m.diagnostic << "\n";
            return 1;
        }
    return 0;
}

int cmd_scatter(const std::string& manifest_path, const std::vector<std::string>& score_paths,
                const std::string& out_path, bool zscore, bool log_axes) {
    corpus::Manifest manifest = corpus::load_manifest(manifest_path);
    std::vector<double> dmos;
    for (const auto& row : manifest.pairs) dmos.push_back(row.dmos);

    std::vector<stats::ScoreSeries> series;
    for (const auto& path : score_paths) {
        std::ifstream in(path);
        if (!in) throw IoError(path + ": cannot open");
        std::string line;
        if (!std::getline(in, line) || trim(line) != "ref_path,deg_path,score")
            throw ParseError(path + ": expected header 'ref_path,deg_path,score'");
        stats::ScoreSeries s;
        auto slash = path.find_last_of('/');
        std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = base.find_last_of('.');
        s.label = dot == std::string::npos ? base : base.substr(0, dot);
        std::size_t row_idx = 0;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto fields = split(trim(line), ',');
            if (fields.size() != 3) throw ParseError(path + ": malformed row '" + line + "'");
            if (row_idx >= manifest.pairs.size())
                throw ShapeError(path + ": more rows than the manifest");
            const auto& want = manifest.pairs[row_idx];
            if (fields[0] != want.ref_path || fields[1] != want.deg_path)
                throw ShapeError(path + ": row " + std::to_string(row_idx + 1) +
                                 " does not match the manifest pair order");
            s.values.push_back(parse_double(fields[2], path + " score"));
            ++row_idx;
        }
        if (row_idx != manifest.pairs.size())
            throw ShapeError(path + ": fewer rows than the manifest");
        series.push_back(std::move(s));
    }

    stats::ScatterOptions opt;
    opt.zscore = zscore;
    opt.log_axes = log_axes;
    stats::export_scatter(out_path, series, dmos, opt);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"strain-tensor image quality toolkit"};
    app.require_subcommand(1);

    std::string metric, ref_path, deg_path, manifest_path, out_path, trace_path, stretch = "independent";
    std::string metrics_csv, fisher_csv, grid = "0.4:0.1:3.0";
    std::string center_grid = "0.6:0.2:5.0", surround_grid = "0.6:0.2:5.6", alpha_grid = "0.5:0.1:1.5";
    std::vector<std::string> score_paths;
    long long iters = 10000;
    double step = 0.1;
    std::uint64_t seed = 0, perm_seed = 0;
    int folds = 0, n_perm = 0, checkpoint_every = 500;
    double bonf_fisher = 1.0, bonf_perm = 1.0;
    bool allow_crop = false, use_root = false, zscore = false, log_axes = false;

    auto add_stretch = [&](CLI::App* cmd) {
        cmd->add_option("--stretch", stretch, "luminance stretch: independent|paired|none")
            ->default_val("independent");
    };

    CLI::App* score = app.add_subcommand("score", "score one reference/degraded pair");
    score->add_option("--metric", metric)->required();
    score->add_option("--ref", ref_path)->required();
    score->add_option("--deg", deg_path)->required();
    score->add_flag("--allow-crop", allow_crop, "crop non-multiple-of-8 images for jacobian metrics");
    add_stretch(score);

    CLI::App* batch = app.add_subcommand("batch", "score every pair in a manifest");
    batch->add_option("--manifest", manifest_path)->required();
    batch->add_option("--metric", metric)->required();
    batch->add_option("--out", out_path)->required();
    batch->add_flag("--allow-crop", allow_crop);
    add_stretch(batch);

    CLI::App* train = app.add_subcommand("train", "fit a tile jacobian to a manifest's dmos");
    train->add_option("--manifest", manifest_path)->required();
    train->add_option("--iters", iters, "proposal count")->default_val(10000);
    train->add_option("--step", step, "lattice step")->default_val(0.1);
    train->add_option("--seed", seed)->required();
    train->add_option("--out", out_path)->required();
    train->add_option("--trace", trace_path, "write accepted-move error trace CSV");
    train->add_option("--checkpoint-every", checkpoint_every)->default_val(500);
    train->add_flag("--use-root", use_root, "correlate sqrt(distance) instead of the squared form");
    train->add_flag("--allow-crop", allow_crop);
    add_stretch(train);

    CLI::App* sweep = app.add_subcommand("sweep", "cross-validated kernel parameter sweep");
    sweep->add_option("--manifest", manifest_path)->required();
    sweep->add_option("--metric", metric, "gauss or dog")->required();
    sweep->add_option("--grid", grid, "gaussian sigma grid lo:step:hi")->default_val("0.4:0.1:3.0");
    sweep->add_option("--center-grid", center_grid)->default_val("0.6:0.2:5.0");
    sweep->add_option("--surround-grid", surround_grid)->default_val("0.6:0.2:5.6");
    sweep->add_option("--alpha-grid", alpha_grid)->default_val("0.5:0.1:1.5");
    sweep->add_option("--folds", folds)->required();
    sweep->add_option("--seed", seed)->required();
    sweep->add_option("--out", out_path)->required();
    add_stretch(sweep);

    CLI::App* compare = app.add_subcommand("compare", "correlate metrics against dmos");
    compare->add_option("--manifest", manifest_path)->required();
    compare->add_option("--metrics", metrics_csv, "comma-separated metric specs")->required();
    auto* folds_opt = compare->add_option("--folds", folds);
    auto* seed_opt = compare->add_option("--seed", seed);
    seed_opt->needs(folds_opt);
    folds_opt->needs(seed_opt);
    compare->add_option("--fisher", fisher_csv, "labelA=labelB[,labelC=labelD...] pairs to test");
    compare->add_option("--n-perm", n_perm, "permutations per model (0 = off)");
    compare->add_option("--perm-seed", perm_seed);
    compare->add_option("--bonferroni-fisher", bonf_fisher)->default_val(1.0);
    compare->add_option("--bonferroni-perm", bonf_perm)->default_val(1.0);
    compare->add_option("--out", out_path, "also write the report as CSV");
    compare->add_flag("--allow-crop", allow_crop);
    add_stretch(compare);

    CLI::App* scatter = app.add_subcommand("scatter", "merge batch score files with dmos for plotting");
    scatter->add_option("--manifest", manifest_path)->required();
    scatter->add_option("--scores", score_paths, "batch output files")->required();
    scatter->add_option("--out", out_path)->required();
    scatter->add_flag("--zscore", zscore);
    scatter->add_flag("--log", log_axes);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (score->parsed()) return cmd_score(metric, ref_path, deg_path, stretch, allow_crop);
        if (batch->parsed()) return cmd_batch(manifest_path, metric, out_path, stretch, allow_crop);
        if (train->parsed())
            return cmd_train(manifest_path, iters, step, seed, out_path, trace_path, checkpoint_every,
                             use_root, allow_crop, stretch);
        if (sweep->parsed())
            return cmd_sweep(manifest_path, metric, grid, center_grid, surround_grid, alpha_grid, folds,
                             seed, out_path, stretch);
        if (compare->parsed())
            return cmd_compare(manifest_path, metrics_csv, folds, seed, fisher_csv, n_perm, perm_seed,
                               bonf_fisher, bonf_perm, out_path, stretch, allow_crop);
        if (scatter->parsed())
            return cmd_scatter(manifest_path, score_paths, out_path, zscore, log_axes);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_of(e);
    }
    return 2;
}
