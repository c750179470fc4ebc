#ifndef PICA_WIRE_HPP
#define PICA_WIRE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/oracle.hpp"

// Oracle wire protocol, shared by the subprocess (one line per message) and
// HTTP (one body per message) transports:
//
//   request: {"id":<n>,"h":H,"w":W,"c":C,"pixels":"<base64 of row-major bytes>"}
//   reply:   {"id":<n>,"probs":[p0,p1,...]}
//   error:   {"id":<n>,"error":"<message>"}
namespace pica::wire {

/// Replies whose probabilities sum to 1 within this tolerance are renormalised;
/// anything further off is rejected.
inline constexpr double kRenormalizeTolerance = 1e-3;

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += alphabet[(v >> 6) & 63];
        out += alphabet[v & 63];
    }
    if (const auto rest = bytes.size() - i; rest > 0) {
        std::uint32_t v = bytes[i] << 16;
        if (rest == 2) v |= bytes[i + 1] << 8;
        out += alphabet[(v >> 18) & 63];
        out += alphabet[(v >> 12) & 63];
        out += rest == 2 ? alphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    static const auto table = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        const std::string_view a = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        for (std::size_t i = 0; i < a.size(); ++i) t[static_cast<unsigned char>(a[i])] = static_cast<int>(i);
        return t;
    }();
    if (text.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4 (truncated?)");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char ch = text[i + k];
            if (ch == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0) throw ProtocolError("base64 data after padding");
            v[k] = table[static_cast<unsigned char>(ch)];
            if (v[k] < 0) throw ProtocolError("invalid base64 character");
        }
        const std::uint32_t n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>(n >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((n >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(n & 0xff));
    }
    return out;
}

struct Request {
    std::uint64_t id = 0;
    Image image;
};

inline std::string encode_request(std::uint64_t id, const Image& image) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["h"] = image.height();
    j["w"] = image.width();
    j["c"] = image.channels();
    j["pixels"] = base64_encode(image.data());
    return j.dump();
}

inline nlohmann::json parse_object(std::string_view line, const char* what) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ProtocolError(std::string("malformed ") + what + ": not a JSON object");
    }
    if (!j.contains("id") || !j["id"].is_number_unsigned()) {
        throw ProtocolError(std::string("malformed ") + what + ": missing or invalid id");
    }
    return j;
}

inline Request decode_request(std::string_view line) {
    const auto j = parse_object(line, "request");
    for (const char* k : {"h", "w", "c"}) {
        if (!j.contains(k) || !j[k].is_number_unsigned()) {
            throw ProtocolError(std::string("malformed request: missing or invalid '") + k + "'");
        }
    }
    if (!j.contains("pixels") || !j["pixels"].is_string()) throw ProtocolError("malformed request: missing pixels");
    const Shape shape{j["h"].get<std::size_t>(), j["w"].get<std::size_t>(), j["c"].get<std::size_t>()};
    auto bytes = base64_decode(j["pixels"].get<std::string>());
    if (bytes.size() != shape.size()) {
        throw ProtocolError("request pixel payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                            std::to_string(shape.size()));
    }
    try {
        return {j["id"].get<std::uint64_t>(), Image(shape, std::move(bytes))};
    } catch (const StructuralError& e) {
        throw ProtocolError(std::string("malformed request: ") + e.what());
    }
}

inline std::string encode_reply(std::uint64_t id, std::span<const double> probabilities) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["probs"] = std::vector<double>(probabilities.begin(), probabilities.end());
    return j.dump();
}

inline std::string encode_error_reply(std::uint64_t id, std::string_view message) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["error"] = std::string(message);
    return j.dump();
}

/// Parses a reply, checks it answers `expected_id` and returns the validated
/// (and, within kRenormalizeTolerance, renormalised) probability vector.
inline std::vector<double> decode_reply(std::string_view line, std::uint64_t expected_id) {
    const auto j = parse_object(line, "reply");
    const auto id = j["id"].get<std::uint64_t>();
    if (id != expected_id) {
        throw ProtocolError("reply id mismatch: expected " + std::to_string(expected_id) + ", got " +
                            std::to_string(id));
    }
    if (j.contains("error")) {
        throw OracleError("remote oracle reported an error for request " + std::to_string(id) + ": " +
                          (j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump()));
    }
    if (!j.contains("probs") || !j["probs"].is_array() || j["probs"].empty()) {
        throw ProtocolError("malformed reply: missing probs array");
    }
    std::vector<double> probs;
    probs.reserve(j["probs"].size());
    double sum = 0.0;
    for (const auto& v : j["probs"]) {
        if (!v.is_number()) throw ProtocolError("malformed reply: non-numeric probability");
        const double p = v.get<double>();
        if (!(p >= 0.0) || !std::isfinite(p)) throw ProtocolError("reply contains a negative or non-finite probability");
        probs.push_back(p);
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
        throw ProtocolError("reply probabilities sum to " + std::to_string(sum) + ", not 1");
    }
    for (auto& p : probs) p /= sum;
    return probs;
}

} // namespace pica::wire

#endif // PICA_WIRE_HPP
