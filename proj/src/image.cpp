#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "common.hpp"

namespace cg {
namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

long parse_number(std::istream& in, const char* what) {
    const std::string tok = next_token(in);
    if (tok.empty()) fail_format(std::string("pnm header: missing ") + what);
    for (char ch : tok)
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            fail_format(std::string("pnm header: bad ") + what + " '" + tok + "'");
    return std::stol(tok);
}

}  // namespace

Image2D read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open image file: " + path);
    const std::string magic = next_token(in);
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else fail_format("unsupported pnm magic '" + magic + "' in " + path);

    const long w = parse_number(in, "width");
    const long h = parse_number(in, "height");
    const long maxval = parse_number(in, "maxval");
    if (w < 1 || h < 1) fail_format("pnm dimensions must be positive in " + path);
    if (maxval < 1 || maxval > 65535) fail_format("pnm maxval out of range in " + path);
    // the token reader already consumed the single whitespace after maxval

    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t n_samples = static_cast<std::size_t>(w) * h * channels;
    std::vector<unsigned char> raw(n_samples * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        fail_format("pnm raster truncated in " + path);

    Image2D img(static_cast<int>(w), static_cast<int>(h), channels);
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < n_samples; ++i) {
        unsigned v;
        if (bytes_per_sample == 2)
            v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        else
            v = raw[i];
        img.values[i] = static_cast<double>(v) * scale;
    }
    return img;
}

void write_pgm(const Image2D& img, const std::string& path, int bits) {
    require(img.channels == 1, "write_pgm expects a single-channel image");
    require(bits == 8 || bits == 16, "write_pgm supports 8 or 16 bits");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write image file: " + path);
    const unsigned maxval = bits == 8 ? 255u : 65535u;
    out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    for (double v : img.values) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        const unsigned q = static_cast<unsigned>(std::lround(clamped * maxval));
        if (bits == 16) out.put(static_cast<char>((q >> 8) & 0xff));
        out.put(static_cast<char>(q & 0xff));
    }
    if (!out) fail_io("short write to " + path);
}

void write_ppm(const Image2D& img, const std::string& path) {
    require(img.channels == 3, "write_ppm expects a three-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write image file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.values) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        out.put(static_cast<char>(static_cast<unsigned>(std::lround(clamped * 255.0)) & 0xff));
    }
    if (!out) fail_io("short write to " + path);
}

Mask read_mask_pgm(const std::string& path) {
    const Image2D img = read_pnm(path);
    if (img.channels != 1) fail_format("mask must be P5: " + path);
    Mask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        const double v = img.values[i];
        if (v == 0.0) mask.values[i] = 0;
        else if (v == 1.0) mask.values[i] = 1;
        else fail_format("mask pixels must be 0 or maxval: " + path);
    }
    return mask;
}

void write_mask_pgm(const Mask& mask, const std::string& path) {
    Image2D img(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.values.size(); ++i)
        img.values[i] = mask.values[i] ? 1.0 : 0.0;
    write_pgm(img, path, 8);
}

}  // namespace cg
