#include "dualfocus/pgm.hpp"
#include "dualfocus/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace dualfocus {

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::string& path) {
    std::string tok;
    for (;;) {
        const int c = in.get();
        if (c == EOF) break;
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw IoError("truncated PGM header in '" + path + "'");
    return tok;
}

int parse_positive(const std::string& tok, const std::string& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw IoError("bad PGM header field '" + tok + "' in '" + path + "'");
}

} // namespace

void write_pgm(const std::string& path, const Image& img, double full_scale) {
    if (!(full_scale > 0.0)) throw ArgumentError("full_scale must be positive");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "P5\n" << img.width() << ' ' << img.height() << "\n65535\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(img.pixels().size() * 2);
    for (double v : img.pixels()) {
        const double scaled = std::clamp(v / full_scale, 0.0, 1.0) * 65535.0;
        const auto g = static_cast<unsigned>(std::lround(scaled));
        bytes.push_back(static_cast<unsigned char>(g >> 8));
        bytes.push_back(static_cast<unsigned char>(g & 0xff));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

Image read_pgm(const std::string& path, double full_scale) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    if (next_token(in, path) != "P5") throw IoError("'" + path + "' is not a binary PGM");
    const int width = parse_positive(next_token(in, path), path);
    const int height = parse_positive(next_token(in, path), path);
    const int maxval = parse_positive(next_token(in, path), path);
    if (maxval > 65535) throw IoError("PGM maxval out of range in '" + path + "'");
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<unsigned char> bytes(n * bpp);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError("truncated PGM data in '" + path + "'");
    Image img(width, height);
    auto px = img.pixels();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned g = bpp == 2 ? (unsigned{bytes[2 * i]} << 8) | bytes[2 * i + 1] : bytes[i];
        px[i] = full_scale * g / maxval;
    }
    return img;
}

} // namespace dualfocus
