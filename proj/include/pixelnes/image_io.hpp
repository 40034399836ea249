#pragma once

// Grayscale image files: portable graymap (P2 ascii / P5 binary) and
// whitespace-separated float rows (one image row per line, values in [0,1]).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "compressor.hpp"
#include "error.hpp"

namespace pixelnes {

namespace detail {

inline std::string next_pnm_token(std::istream& in)
{
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty())
                break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty())
        throw FormatError("truncated graymap header");
    return tok;
}

inline std::size_t parse_uint(const std::string& tok)
{
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
        v = std::stoul(tok, &pos);
    } catch (const std::exception&) {
        throw FormatError("bad number '" + tok + "' in graymap");
    }
    if (pos != tok.size())
        throw FormatError("bad number '" + tok + "' in graymap");
    return v;
}

inline std::size_t parse_positive(const std::string& tok)
{
    const std::size_t v = parse_uint(tok);
    if (v == 0)
        throw FormatError("zero where a positive graymap header value was expected");
    return v;
}

} // namespace detail

inline Observation read_pgm(std::istream& in)
{
    const std::string magic = detail::next_pnm_token(in);
    if (magic != "P2" && magic != "P5")
        throw FormatError("not a portable graymap (expected P2 or P5)");
    const std::size_t w = detail::parse_positive(detail::next_pnm_token(in));
    const std::size_t h = detail::parse_positive(detail::next_pnm_token(in));
    const std::size_t maxval = detail::parse_positive(detail::next_pnm_token(in));
    if (maxval > 65535)
        throw FormatError("graymap maxval out of range");

    std::vector<float> px(w * h);
    if (magic == "P2") {
        for (auto& p : px) {
            const std::size_t v = detail::parse_uint(detail::next_pnm_token(in));
            if (v > maxval)
                throw FormatError("graymap sample exceeds maxval");
            p = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
        }
    } else {
        const std::size_t bytes = maxval < 256 ? 1 : 2;
        for (auto& p : px) {
            std::size_t v = 0;
            for (std::size_t b = 0; b < bytes; ++b) {
                const int c = in.get();
                if (c == EOF)
                    throw FormatError("truncated graymap data");
                v = (v << 8) | static_cast<std::size_t>(c);
            }
            if (v > maxval)
                throw FormatError("graymap sample exceeds maxval");
            p = static_cast<float>(static_cast<double>(v) / static_cast<double>(maxval));
        }
    }
    return Observation(std::move(px), w, h);
}

inline Observation read_float_rows(std::istream& in)
{
    std::vector<float> px;
    std::size_t w = 0;
    std::size_t h = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<float> row;
        float v;
        while (ls >> v)
            row.push_back(v);
        if (!ls.eof())
            throw FormatError("non-numeric value in float image");
        if (row.empty())
            continue;
        if (w == 0)
            w = row.size();
        else if (row.size() != w)
            throw FormatError("float image rows differ in length");
        px.insert(px.end(), row.begin(), row.end());
        ++h;
    }
    if (h == 0)
        throw FormatError("empty float image");
    for (float p : px)
        if (!(p >= 0.0f && p <= 1.0f))
            throw FormatError("float image value outside [0,1]");
    return Observation(std::move(px), w, h);
}

/// Reads a graymap if the file starts with P2/P5, float rows otherwise.
inline Observation read_image_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open image '" + path + "'");
    const int c0 = in.peek();
    if (c0 == 'P') {
        in.get();
        const int c1 = in.peek();
        in.unget();
        if (c1 == '2' || c1 == '5')
            return read_pgm(in);
    }
    return read_float_rows(in);
}

inline void write_pgm(std::ostream& out, const Observation& img)
{
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    for (float p : img.pixels) {
        const auto v = static_cast<long>(std::lround(static_cast<double>(p) * 255.0));
        out.put(static_cast<char>(std::clamp(v, 0L, 255L)));
    }
}

} // namespace pixelnes
