#ifndef PICA_IMAGE_IO_HPP
#define PICA_IMAGE_IO_HPP

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pica/attention_map.hpp"
#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/mask.hpp"

namespace pica::io {

namespace detail {

inline std::string read_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

inline std::size_t parse_header_number(std::istream& in, const char* what) {
    auto tok = read_token(in);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw FormatError(std::string("PNM header: bad ") + what + " '" + tok + "'");
    }
    return std::stoul(tok);
}

inline std::string lower_extension(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace detail

/// Binary PGM (P5) or PPM (P6) with maxval 255.
inline Image read_pnm(std::istream& in) {
    char magic[2] = {};
    if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
        throw FormatError("not a binary PGM/PPM file");
    }
    const std::size_t channels = magic[1] == '5' ? 1 : 3;
    const auto width = detail::parse_header_number(in, "width");
    const auto height = detail::parse_header_number(in, "height");
    const auto maxval = detail::parse_header_number(in, "maxval");
    if (maxval != 255) throw FormatError("only maxval 255 is supported, got " + std::to_string(maxval));
    // read_token consumed exactly one whitespace byte after maxval
    std::vector<std::uint8_t> data(height * width * channels);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (static_cast<std::size_t>(in.gcount()) != data.size()) {
        throw FormatError("truncated PNM payload: expected " + std::to_string(data.size()) + " bytes, got " +
                          std::to_string(in.gcount()));
    }
    return Image({height, width, channels}, std::move(data));
}

inline void write_pnm(std::ostream& out, const Image& image) {
    out << (image.channels() == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
    auto d = image.data();
    out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size()));
}

inline Image read_png(const std::filesystem::path& path) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) {
        throw FormatError("cannot read PNG '" + path.string() + "': " + png.message);
    }
    const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const std::size_t channels = gray ? 1 : 3;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, data.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw FormatError("cannot decode PNG '" + path.string() + "': " + msg);
    }
    return Image({png.height, png.width, channels}, std::move(data));
}

inline void write_png(const std::filesystem::path& path, const Image& image) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, image.data().data(), 0, nullptr)) {
        throw Error("cannot write PNG '" + path.string() + "': " + png.message);
    }
}

/// Reads PNG or binary PGM/PPM, chosen by the file's magic bytes.
inline Image read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    char sig[8] = {};
    in.read(sig, 8);
    if (in.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(sig), 0, 8) == 0) {
        return read_png(path);
    }
    in.clear();
    in.seekg(0);
    return read_pnm(in);
}

/// Format follows the extension: .png, otherwise PGM/PPM by channel count.
inline void write_image(const std::filesystem::path& path, const Image& image) {
    if (detail::lower_extension(path) == ".png") {
        write_png(path, image);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    write_pnm(out, image);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline AttentionMap read_attention(const std::filesystem::path& path) {
    auto img = read_image(path);
    if (img.channels() != 1) throw FormatError("attention map '" + path.string() + "' must be single-channel");
    auto v = img.data();
    return {img.height(), img.width(), std::vector<std::uint8_t>(v.begin(), v.end())};
}

inline void write_attention(const std::filesystem::path& path, const AttentionMap& map) {
    auto v = map.values();
    write_image(path, Image({map.height(), map.width(), 1}, std::vector<std::uint8_t>(v.begin(), v.end())));
}

/// Masks travel as PGM: 0 excluded, anything else included (255 on write).
inline PixelMask read_mask(const std::filesystem::path& path) { return binarize(read_attention(path)); }

inline void write_mask(const std::filesystem::path& path, const PixelMask& mask) {
    AttentionMap m(mask.height(), mask.width());
    for (std::size_t l = 0; l < mask.height(); ++l) {
        for (std::size_t w = 0; w < mask.width(); ++w) m(l, w) = mask.test(l, w) ? 255 : 0;
    }
    write_attention(path, m);
}

} // namespace pica::io

#endif // PICA_IMAGE_IO_HPP
