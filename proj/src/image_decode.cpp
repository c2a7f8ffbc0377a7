#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "strainiq/corpus.hpp"
#include "strainiq/error.hpp"

#include <jpeglib.h>

namespace strainiq::corpus {

namespace {

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path);
    return bytes;
}

// --- binary PGM/PPM ---

struct PnmCursor {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
};

// Next whitespace-delimited token, skipping '#' comments to end of line.
std::string pnm_token(PnmCursor& c, const std::string& path) {
    while (c.pos < c.bytes.size()) {
        unsigned char ch = c.bytes[c.pos];
        if (ch == '#') {
            while (c.pos < c.bytes.size() && c.bytes[c.pos] != '\n') ++c.pos;
        } else if (std::isspace(ch)) {
            ++c.pos;
        } else {
            break;
        }
    }
    std::size_t start = c.pos;
    while (c.pos < c.bytes.size() && !std::isspace(c.bytes[c.pos]) && c.bytes[c.pos] != '#') ++c.pos;
    if (start == c.pos) throw ParseError(path + ": truncated header");
    return std::string(c.bytes.begin() + start, c.bytes.begin() + c.pos);
}

int pnm_int(PnmCursor& c, const std::string& path, const char* what) {
    std::string tok = pnm_token(c, path);
    for (char ch : tok)
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw ParseError(path + ": bad " + what + " '" + tok + "'");
    long v = std::strtol(tok.c_str(), nullptr, 10);
    if (v <= 0 || v > 1 << 20) throw ParseError(path + ": " + what + " out of range: " + tok);
    return static_cast<int>(v);
}

DecodedImage decode_pnm(const std::vector<unsigned char>& bytes, const std::string& path) {
    PnmCursor c{bytes};
    std::string magic = pnm_token(c, path);
    int channels = magic == "P5" ? 1 : magic == "P6" ? 3 : 0;
    if (channels == 0) throw ParseError(path + ": unsupported PNM magic '" + magic + "'");
    DecodedImage img;
    img.channels = channels;
    img.width = pnm_int(c, path, "width");
    img.height = pnm_int(c, path, "height");
    int maxval = pnm_int(c, path, "maxval");
    if (maxval != 255) throw ParseError(path + ": only maxval 255 is supported, got " + std::to_string(maxval));
    ++c.pos;  // single whitespace byte after maxval
    std::size_t need = static_cast<std::size_t>(img.width) * img.height * channels;
    if (bytes.size() - c.pos < need)
        throw ParseError(path + ": pixel data truncated (" + std::to_string(bytes.size() - c.pos) + " of " +
                         std::to_string(need) + " bytes)");
    img.pixels.assign(bytes.begin() + c.pos, bytes.begin() + c.pos + need);
    return img;
}

// --- PNG ---

struct PngReadState {
    const std::vector<unsigned char>* bytes;
    std::size_t pos;
};

void png_memory_read(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->bytes->size()) png_error(png, "read past end of PNG stream");
    std::memcpy(out, st->bytes->data() + st->pos, len);
    st->pos += len;
}

DecodedImage decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError(path + ": png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError(path + ": png init failed");
    }
    DecodedImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path + ": invalid PNG stream");
    }
    PngReadState state{&bytes, 0};
    png_set_read_fn(png, &state, png_memory_read);
    png_read_info(png, info);

    png_byte color = png_get_color_type(png, info);
    png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path + ": unsupported PNG channel count " + std::to_string(img.channels));
    }
    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    img.pixels.resize(stride * img.height);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

// --- JPEG ---

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

DecodedImage decode_jpeg(const std::vector<unsigned char>& bytes, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw ParseError(path + ": invalid JPEG stream (" + err.message + ")");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    DecodedImage img;
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = cinfo.output_components;
    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    img.pixels.resize(stride * img.height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

DecodedImage decode_image(const std::string& path) {
    auto bytes = read_bytes(path);
    if (bytes.size() < 4) throw ParseError(path + ": file too short to identify");
    if (bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes, path);
    if (bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') return decode_png(bytes, path);
    if (bytes[0] == 0xFF && bytes[1] == 0xD8) return decode_jpeg(bytes, path);
    throw ParseError(path + ": unrecognized image format");
}

namespace {

unsigned char quantize(double v) {
    double r = std::round(v);
    r = std::clamp(r, 0.0, 255.0);
    return static_cast<unsigned char>(r);
}

}  // namespace

void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (double v : img.values) out.put(static_cast<char>(quantize(v)));
    if (!out) throw IoError("write failure on " + path);
}

void write_ppm(const std::string& path, const DecodedImage& img) {
    if (img.channels != 3) throw ShapeError("write_ppm expects a 3-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace strainiq::corpus
