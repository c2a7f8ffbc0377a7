#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "strainiq/geometry.hpp"

namespace strainiq::corpus {

// Raw decode result: 8-bit samples, interleaved row-major, 1 or 3 channels.
struct DecodedImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<unsigned char> pixels;
};

// Reads PNG, JPEG, or binary PGM/PPM (maxval 255), dispatching on magic bytes.
DecodedImage decode_image(const std::string& path);

// Writers used to persist synthetic fixtures. Values are rounded and clamped
// to [0, 255].
void write_pgm(const std::string& path, const GrayImage& img);
void write_ppm(const std::string& path, const DecodedImage& img);

// 1-channel input passes through; 3-channel converts with
// Y = 0.299 R + 0.587 G + 0.114 B rounded half away from zero.
GrayImage to_grayscale(const DecodedImage& img);

struct StretchResult {
    GrayImage image;
    bool degenerate = false;  // constant input: output all zeros
};

// Affine map sending min -> 0 and max -> 255, endpoints exact.
StretchResult luminance_stretch(const GrayImage& img);

// Same map but with an externally supplied range (paired mode uses the
// reference image's raw min/max). Values outside [lo, hi] extrapolate.
StretchResult luminance_stretch_with_range(const GrayImage& img, double lo, double hi);

enum class StretchMode { independent, paired, none };
StretchMode parse_stretch_mode(const std::string& name);
std::string stretch_mode_name(StretchMode mode);

struct RatedPair {
    std::string ref_path;
    std::string deg_path;
    double dmos = 0.0;  // in [0, 1]
    std::string category;
    std::string codec;
    std::string quality;
};

struct Manifest {
    std::vector<RatedPair> pairs;
    std::string dataset_id;  // manifest filename stem
    std::string checksum;    // fnv1a64 of the file bytes, hex
};

inline constexpr const char* kManifestHeader = "ref_path,deg_path,dmos,category,codec,quality";

// Parses and validates a manifest CSV. Relative image paths resolve against
// the manifest's directory; every path must exist. Diagnostics carry
// path:line prefixes.
Manifest load_manifest(const std::string& path);

void write_manifest(const std::string& path, const Manifest& m);

// Printed convention: 1 - rating/100. The inverted flag selects rating/100.
double rating_to_dmos(double rating, bool inverted = false);

struct FoldAssignment {
    int fold_count = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> fold_of_ref;
    std::vector<std::string> warnings;
};

// Seeded shuffle within each category, then round-robin over folds. The fold
// unit is the reference image: all degraded versions follow it. Categories
// with fewer than k references are pooled into one shared stratum.
FoldAssignment stratified_folds(const std::vector<RatedPair>& pairs, int k, std::uint64_t seed);
FoldAssignment stratified_folds(const Manifest& m, int k, std::uint64_t seed);

int fold_of(const FoldAssignment& folds, const std::string& ref_path);

// One scored unit: both images decoded, grayscaled, and stretched.
struct LoadedPair {
    RatedPair meta;
    std::shared_ptr<const GrayImage> ref;
    std::shared_ptr<const GrayImage> deg;
    bool ref_degenerate = false;
    bool deg_degenerate = false;
};

// Decodes every pair in manifest order. Reference images are decoded once
// and shared across their pairs.
std::vector<LoadedPair> load_pairs(const Manifest& m, StretchMode mode = StretchMode::independent);

}  // namespace strainiq::corpus
