#ifndef PICA_REPORT_IO_HPP
#define PICA_REPORT_IO_HPP

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pica/attack.hpp"
#include "pica/error.hpp"
#include "pica/image.hpp"
#include "pica/mask.hpp"
#include "pica/perturbation.hpp"

namespace pica::io {

/// Shortest-safe round-trip text for a double ("%.17g"), locale independent
/// enough for CSV.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// One changed intensity, addressed by image coordinates.
struct PixelDelta {
    std::size_t l = 0;
    std::size_t w = 0;
    std::size_t c = 0;
    double value = 0.0;

    friend bool operator==(const PixelDelta&, const PixelDelta&) = default;
};

inline std::vector<PixelDelta> to_deltas(const SparsePerturbation& pert, const VariableIndex& index) {
    std::vector<PixelDelta> out;
    out.reserve(pert.entries.size());
    for (const auto& e : pert.entries) {
        const auto& v = index.coord(e.variable);
        out.push_back({v.l, v.w, v.c, e.value});
    }
    return out;
}

/// Rebuilds the attacked image from a delta list (clamp/round as in apply_perturbation).
inline Image apply_deltas(const Image& original, const std::vector<PixelDelta>& deltas) {
    Image out = original;
    for (const auto& d : deltas) {
        if (d.l >= original.height() || d.w >= original.width() || d.c >= original.channels()) {
            throw StructuralError("perturbation entry (" + std::to_string(d.l) + "," + std::to_string(d.w) + "," +
                                  std::to_string(d.c) + ") lies outside a " + to_string(original.shape()) + " image");
        }
        out(d.l, d.w, d.c) = to_intensity(original(d.l, d.w, d.c) + d.value);
    }
    return out;
}

inline void write_perturbation_csv(std::ostream& out, const std::vector<PixelDelta>& deltas) {
    out << "l,w,c,value\n";
    for (const auto& d : deltas) out << d.l << ',' << d.w << ',' << d.c << ',' << format_double(d.value) << '\n';
}

inline std::vector<PixelDelta> read_perturbation_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("perturbation CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "l,w,c,value") throw FormatError("perturbation CSV header must be 'l,w,c,value'");
    std::vector<PixelDelta> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        PixelDelta d;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(row >> d.l >> c1 >> d.w >> c2 >> d.c >> c3 >> d.value) || c1 != ',' || c2 != ',' || c3 != ',') {
            throw FormatError("perturbation CSV line " + std::to_string(lineno) + " is malformed");
        }
        out.push_back(d);
    }
    return out;
}

/// Pareto front CSV, sorted by f2 ascending (ties: f1, then eval_index).
inline void write_front_csv(std::ostream& out, std::vector<FrontPoint> front) {
    std::stable_sort(front.begin(), front.end(), [](const FrontPoint& a, const FrontPoint& b) {
        if (a.f2 != b.f2) return a.f2 < b.f2;
        if (a.f1 != b.f1) return a.f1 < b.f1;
        return a.eval_index < b.eval_index;
    });
    out << "f1,f2,predicted_class,success,eval_index\n";
    for (const auto& p : front) {
        out << format_double(p.f1) << ',' << format_double(p.f2) << ',' << p.predicted_class << ','
            << (p.success ? 1 : 0) << ',' << p.eval_index << '\n';
    }
}

inline std::vector<FrontPoint> read_front_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "f1,f2,predicted_class,success,eval_index") {
        throw FormatError("front CSV header must be 'f1,f2,predicted_class,success,eval_index'");
    }
    std::vector<FrontPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        FrontPoint p;
        int success = 0;
        char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
        if (!(row >> p.f1 >> c1 >> p.f2 >> c2 >> p.predicted_class >> c3 >> success >> c4 >> p.eval_index)) {
            throw FormatError("malformed front CSV row '" + line + "'");
        }
        p.success = success != 0;
        out.push_back(std::move(p));
    }
    return out;
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryRecord>& history) {
    out << "eval_index,f1,f2,predicted_class,confidence\n";
    for (const auto& h : history) {
        out << h.eval_index << ',' << format_double(h.f1) << ',' << format_double(h.f2) << ',' << h.predicted_class
            << ',' << format_double(h.confidence) << '\n';
    }
}

inline nlohmann::ordered_json config_to_json(const AttackConfig& c) {
    nlohmann::ordered_json j;
    j["population_size"] = c.moea.population_size;
    j["max_evaluations"] = c.moea.max_evaluations;
    j["eta_c"] = c.moea.eta_c;
    j["eta_m"] = c.moea.eta_m;
    j["crossover_probability"] = c.moea.crossover_probability;
    if (c.moea.mutation_probability) {
        j["mutation_probability"] = *c.moea.mutation_probability;
    } else {
        j["mutation_probability"] = "1/d";
    }
    j["seed"] = c.moea.seed;
    j["threads"] = c.moea.threads;
    j["use_attention"] = c.use_attention;
    j["use_parity"] = c.use_parity;
    j["parity_segment"] = c.parity_segment == ParitySegment::Even ? "even" : "odd";
    if (c.delta_max) {
        j["delta_max"] = *c.delta_max;
    } else {
        j["delta_max"] = nullptr;
    }
    j["upsample"] = c.upsample == Upsample::Bilinear ? "bilinear" : "nearest";
    j["final_from_front_only"] = c.final_from_front_only;
    return j;
}

inline nlohmann::ordered_json report_to_json(const AttackReport& r) {
    nlohmann::ordered_json j;
    j["format"] = "pica-report";
    j["version"] = 1;
    j["complete"] = r.complete;
    j["success"] = r.success();
    j["image"] = {{"height", r.image_shape.height}, {"width", r.image_shape.width},
                  {"channels", r.image_shape.channels}};
    j["original_class"] = r.original_class;
    j["clean_confidence"] = r.clean_confidence;
    j["queries"] = r.queries;
    j["evaluations"] = r.history.size();
    j["wall_seconds"] = r.wall_seconds;
    j["dimension"] = r.dimension();
    j["attention_pixels"] = r.attention_pixels;
    j["mask_pixels"] = r.mask.popcount();
    j["warnings"] = r.warnings;
    j["config"] = config_to_json(r.config);
    if (r.final_ae) {
        const auto& ae = *r.final_ae;
        j["final"] = {{"predicted_class", ae.predicted_class}, {"confidence", ae.confidence}, {"f1", ae.f1},
                      {"l2", ae.l2},
                      {"eval_index", ae.eval_index},
                      {"changed_values", ae.perturbation.entries.size()}};
    } else {
        j["final"] = nullptr;
    }
    auto& front = j["front"] = nlohmann::ordered_json::array();
    for (const auto& p : r.front) {
        front.push_back({{"f1", p.f1}, {"f2", p.f2}, {"predicted_class", p.predicted_class},
                         {"success", p.success}, {"eval_index", p.eval_index}});
    }
    return j;
}

inline std::vector<FrontPoint> front_from_report(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "pica-report") throw FormatError("not a pica report");
    if (!j.contains("front") || !j["front"].is_array()) throw FormatError("report has no front");
    std::vector<FrontPoint> out;
    for (const auto& p : j["front"]) {
        FrontPoint fp;
        fp.f1 = p.at("f1").get<double>();
        fp.f2 = p.at("f2").get<double>();
        fp.predicted_class = p.at("predicted_class").get<std::size_t>();
        fp.success = p.at("success").get<bool>();
        fp.eval_index = p.at("eval_index").get<std::size_t>();
        out.push_back(std::move(fp));
    }
    return out;
}

} // namespace pica::io

#endif // PICA_REPORT_IO_HPP
