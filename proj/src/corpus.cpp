#include "strainiq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "strainiq/error.hpp"
#include "strainiq/rng.hpp"
#include "strainiq/util.hpp"

namespace fs = std::filesystem;

namespace strainiq::corpus {

GrayImage to_grayscale(const DecodedImage& img) {
    if (img.width < 1 || img.height < 1) throw ShapeError("empty image");
    std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    if (img.pixels.size() != n * img.channels) throw ShapeError("pixel buffer does not match dimensions");
    GrayImage out;
    out.width = img.width;
    out.height = img.height;
    out.values.resize(n);
    if (img.channels == 1) {
        for (std::size_t i = 0; i < n; ++i) out.values[i] = img.pixels[i];
    } else if (img.channels == 3) {
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char* px = img.pixels.data() + 3 * i;
            double y = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            out.values[i] = std::round(y);  // round halves away from zero
        }
    } else {
        throw ShapeError("unsupported channel layout: " + std::to_string(img.channels) + " channels");
    }
    return out;
}

StretchResult luminance_stretch_with_range(const GrayImage& img, double lo, double hi) {
    StretchResult res;
    res.image.width = img.width;
    res.image.height = img.height;
    res.image.values.resize(img.values.size());
    if (!(hi > lo)) {
        res.degenerate = true;
        std::fill(res.image.values.begin(), res.image.values.end(), 0.0);
        return res;
    }
    double span = hi - lo;
    // (v-lo)/span is computed before the 255 scale so that v = hi lands on
    // exactly 255 and interior values can never exceed it.
    for (std::size_t i = 0; i < img.values.size(); ++i)
        res.image.values[i] = 255.0 * ((img.values[i] - lo) / span);
    return res;
}

StretchResult luminance_stretch(const GrayImage& img) {
    if (img.values.empty()) throw ShapeError("empty image");
    auto [mn, mx] = std::minmax_element(img.values.begin(), img.values.end());
    return luminance_stretch_with_range(img, *mn, *mx);
}

StretchMode parse_stretch_mode(const std::string& name) {
    if (name == "independent") return StretchMode::independent;
    if (name == "paired") return StretchMode::paired;
    if (name == "none") return StretchMode::none;
    throw ParseError("unknown stretch mode '" + name + "' (expected independent, paired, or none)");
}

std::string stretch_mode_name(StretchMode mode) {
    switch (mode) {
        case StretchMode::independent: return "independent";
        case StretchMode::paired: return "paired";
        case StretchMode::none: return "none";
    }
    return "?";
}

double rating_to_dmos(double rating, bool inverted) {
    if (!(rating >= 0.0 && rating <= 100.0))
        throw ParseError("rating out of range [0, 100]: " + format_full(rating));
    return inverted ? rating / 100.0 : 1.0 - rating / 100.0;
}

namespace {

std::string resolve_against(const fs::path& dir, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (dir / path).lexically_normal().string();
}

}  // namespace

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Manifest m;
    m.dataset_id = fs::path(path).stem().string();
    m.checksum = to_hex(fnv1a64(bytes));

    fs::path dir = fs::path(path).parent_path();
    std::istringstream stream(bytes);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::set<std::pair<std::string, std::string>> seen_pairs;

    auto where = [&](int n) { return path + ":" + std::to_string(n) + ": "; };

    while (std::getline(stream, line)) {
        ++line_no;
        std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (!header_seen) {
            if (body != kManifestHeader)
                throw ParseError(where(line_no) + "expected header '" + kManifestHeader + "', got '" +
                                 std::string(body) + "'");
            header_seen = true;
            continue;
        }
        auto fields = split(body, ',');
        if (fields.size() < 3 || fields.size() > 6)
            throw ParseError(where(line_no) + "expected 3 to 6 fields, got " + std::to_string(fields.size()));
        fields.resize(6);
        for (auto& f : fields) f = std::string(trim(f));

        RatedPair pair;
        pair.ref_path = resolve_against(dir, fields[0]);
        pair.deg_path = resolve_against(dir, fields[1]);
        if (fields[0].empty() || fields[1].empty()) throw ParseError(where(line_no) + "empty image path");

        const std::string& dmos_text = fields[2];
        char* end = nullptr;
        pair.dmos = std::strtod(dmos_text.c_str(), &end);
        if (end != dmos_text.c_str() + dmos_text.size() || dmos_text.empty() || !std::isfinite(pair.dmos))
            throw ParseError(where(line_no) + "bad dmos value '" + dmos_text + "'");
        if (pair.dmos < 0.0 || pair.dmos > 1.0)
            throw ParseError(where(line_no) + "dmos out of range [0, 1]: " + dmos_text);

        pair.category = fields[3];
        pair.codec = fields[4];
        pair.quality = fields[5];

        if (!seen_pairs.insert({pair.ref_path, pair.deg_path}).second)
            throw ParseError(where(line_no) + "duplicate pair " + fields[0] + " / " + fields[1]);
        for (const std::string& p : {pair.ref_path, pair.deg_path})
            if (!fs::is_regular_file(p)) throw IoError(where(line_no) + "image file not found: " + p);

        m.pairs.push_back(std::move(pair));
    }
    if (!header_seen) throw ParseError(path + ": missing header line");
    if (m.pairs.empty()) throw ParseError(path + ": manifest has no data rows");
    return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << kManifestHeader << '\n';
    for (const auto& p : m.pairs)
        out << p.ref_path << ',' << p.deg_path << ',' << format_full(p.dmos) << ',' << p.category << ','
            << p.codec << ',' << p.quality << '\n';
    if (!out) throw IoError("write failure on " + path);
}

FoldAssignment stratified_folds(const Manifest& m, int k, std::uint64_t seed) {
    return stratified_folds(m.pairs, k, seed);
}

FoldAssignment stratified_folds(const std::vector<RatedPair>& pairs, int k, std::uint64_t seed) {
    if (k < 2) throw ParseError("fold count must be at least 2, got " + std::to_string(k));

    // Unique reference paths per category, both in first-appearance order.
    std::vector<std::string> category_order;
    std::map<std::string, std::vector<std::string>> refs_by_category;
    std::set<std::string> seen_refs;
    for (const auto& p : pairs) {
        if (!seen_refs.insert(p.ref_path).second) continue;
        auto [it, inserted] = refs_by_category.try_emplace(p.category);
        if (inserted) category_order.push_back(p.category);
        it->second.push_back(p.ref_path);
    }

    FoldAssignment out;
    out.fold_count = k;
    out.seed = seed;

    // Small categories cannot be spread over every fold, so they are pooled
    // into one synthetic stratum and shuffled together.
    std::vector<std::pair<std::string, std::vector<std::string>>> strata;
    std::vector<std::string> pooled;
    for (const auto& cat : category_order) {
        auto& refs = refs_by_category[cat];
        if (static_cast<int>(refs.size()) >= k) {
            strata.emplace_back(cat, refs);
        } else {
            out.warnings.push_back("category '" + cat + "' has only " + std::to_string(refs.size()) +
                                   " reference image(s) for " + std::to_string(k) + " folds; pooled");
            pooled.insert(pooled.end(), refs.begin(), refs.end());
        }
    }
    if (!pooled.empty()) strata.emplace_back("", std::move(pooled));

    // Per-stratum streams keep the assignment independent of stratum count;
    // the rotating start offset balances the leftover refs across folds.
    int stratum_index = 0;
    for (auto& [name, refs] : strata) {
        Rng rng(mix_seed(seed, fnv1a64(name) ^ static_cast<std::uint64_t>(stratum_index)));
        rng.shuffle(refs);
        for (std::size_t i = 0; i < refs.size(); ++i)
            out.fold_of_ref[refs[i]] = static_cast<int>((stratum_index + i) % k);
        ++stratum_index;
    }
    return out;
}

int fold_of(const FoldAssignment& folds, const std::string& ref_path) {
    auto it = folds.fold_of_ref.find(ref_path);
    if (it == folds.fold_of_ref.end()) throw ShapeError("reference image has no fold assignment: " + ref_path);
    return it->second;
}

std::vector<LoadedPair> load_pairs(const Manifest& m, StretchMode mode) {
    struct RefEntry {
        std::shared_ptr<const GrayImage> stretched;
        double raw_min = 0.0, raw_max = 0.0;
        bool degenerate = false;
    };
    std::map<std::string, RefEntry> ref_cache;

    std::vector<LoadedPair> out;
    out.reserve(m.pairs.size());
    for (const auto& meta : m.pairs) {
        auto it = ref_cache.find(meta.ref_path);
        if (it == ref_cache.end()) {
            GrayImage gray = to_grayscale(decode_image(meta.ref_path));
            RefEntry entry;
            auto [mn, mx] = std::minmax_element(gray.values.begin(), gray.values.end());
            entry.raw_min = *mn;
            entry.raw_max = *mx;
            if (mode == StretchMode::none) {
                entry.stretched = std::make_shared<GrayImage>(std::move(gray));
            } else {
                auto res = luminance_stretch(gray);
                entry.degenerate = res.degenerate;
                entry.stretched = std::make_shared<GrayImage>(std::move(res.image));
            }
            it = ref_cache.emplace(meta.ref_path, std::move(entry)).first;
        }

        GrayImage deg_gray = to_grayscale(decode_image(meta.deg_path));
        if (deg_gray.width != it->second.stretched->width || deg_gray.height != it->second.stretched->height)
            throw ShapeError("pair dimensions differ: " + meta.ref_path + " is " +
                             std::to_string(it->second.stretched->width) + "x" +
                             std::to_string(it->second.stretched->height) + ", " + meta.deg_path + " is " +
                             std::to_string(deg_gray.width) + "x" + std::to_string(deg_gray.height));

        LoadedPair pair;
        pair.meta = meta;
        pair.ref = it->second.stretched;
        pair.ref_degenerate = it->second.degenerate;
        switch (mode) {
            case StretchMode::none:
                pair.deg = std::make_shared<GrayImage>(std::move(deg_gray));
                break;
            case StretchMode::independent: {
                auto res = luminance_stretch(deg_gray);
                pair.deg_degenerate = res.degenerate;
                pair.deg = std::make_shared<GrayImage>(std::move(res.image));
                break;
            }
            case StretchMode::paired: {
                auto res = luminance_stretch_with_range(deg_gray, it->second.raw_min, it->second.raw_max);
                pair.deg_degenerate = res.degenerate;
                pair.deg = std::make_shared<GrayImage>(std::move(res.image));
                break;
            }
        }
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace strainiq::corpus
