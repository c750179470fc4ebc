#ifndef PICA_APP_HPP
#define PICA_APP_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "pica/attack.hpp"
#include "pica/attention.hpp"
#include "pica/error.hpp"
#include "pica/image_io.hpp"
#include "pica/models.hpp"
#include "pica/oracle.hpp"
#include "pica/remote_oracle.hpp"
#include "pica/report_io.hpp"
#include "pica/toy_data.hpp"
#include "pica/visualize.hpp"

// Command implementations behind the `pica` executable. Kept in the library
// so tests can drive them without spawning processes.
namespace pica::app {

enum ExitCode : int { kSuccess = 0, kError = 1, kAttackFailed = 2 };

inline constexpr std::size_t kProxyFilters = 16;
inline constexpr std::size_t kProxyKernel = 3;
inline constexpr std::size_t kProxyStride = 2;

struct RunConfig {
    std::string image;
    /// toy:linear | toy:conv-gap | subprocess:<command> | http://host:port
    std::string oracle = "toy:linear";
    /// proxy | file:<pgm>
    std::string attention = "proxy";
    std::string proxy_model;     // optional conv-gap model file for the proxy
    std::uint64_t proxy_seed = 7;
    std::string target_model;    // optional model file for toy targets
    std::uint64_t model_seed = 1;
    std::size_t classes = 10;

    bool use_attention = true;
    bool use_parity = true;
    bool odd_parity = false;
    std::string upsample = "bilinear";
    std::optional<double> delta_max;
    bool final_from_front = false;

    std::size_t population = 50;
    std::size_t budget = 10000;
    double eta_c = 20.0;
    double eta_m = 20.0;
    double crossover_probability = 1.0;
    std::optional<double> mutation_probability;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::size_t http_in_flight = 4;

    std::string output_dir = "pica-out";
    bool write_history = false;

    AttackConfig attack_config() const {
        AttackConfig c;
        c.moea.population_size = population;
        c.moea.max_evaluations = budget;
        c.moea.eta_c = eta_c;
        c.moea.eta_m = eta_m;
        c.moea.crossover_probability = crossover_probability;
        c.moea.mutation_probability = mutation_probability;
        c.moea.seed = seed;
        c.moea.threads = threads;
        c.use_attention = use_attention;
        c.use_parity = use_parity;
        c.parity_segment = odd_parity ? ParitySegment::Odd : ParitySegment::Even;
        c.delta_max = delta_max;
        c.upsample = upsample == "nearest" ? Upsample::Nearest : Upsample::Bilinear;
        c.final_from_front_only = final_from_front;
        return c;
    }

    /// Checks what can be checked before the variable count is known.
    void validate() const {
        if (image.empty()) throw ConfigError("no input image given");
        if (budget == 0) throw ConfigError("evaluation budget must be positive");
        if (population < 2 || population % 2 != 0) {
            throw ConfigError("population size must be even and at least 2");
        }
        if (budget < population) {
            throw ConfigError("evaluation budget (" + std::to_string(budget) +
                              ") must be at least the population size (" + std::to_string(population) + ")");
        }
        if (upsample != "bilinear" && upsample != "nearest") throw ConfigError("upsample must be bilinear or nearest");
        if (attention != "proxy" && attention.rfind("file:", 0) != 0) {
            throw ConfigError("attention source must be 'proxy' or 'file:<path>'");
        }
        if (classes < 2) throw ConfigError("toy models need at least two classes");
        if (threads == 0) throw ConfigError("thread count must be at least 1");
        if (delta_max && !(*delta_max >= 0.0)) throw ConfigError("delta-max must be non-negative");
    }
};

/// Turns a flat "key = value" file into command-line arguments ("--key value";
/// boolean true becomes a bare "--key", false drops the key). Blank lines and
/// lines starting with '#' are ignored.
inline std::vector<std::string> config_file_args(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::vector<std::string> args;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (value == "true") {
            args.push_back("--" + key);
        } else if (value != "false") {
            args.push_back("--" + key);
            args.push_back(value);
        }
    }
    return args;
}

/// The toy linear target used when no model file is supplied.
inline LinearSoftmaxModel default_linear_target(Shape shape, std::size_t classes, std::uint64_t seed) {
    return toy::default_target(toy::make_prototypes(shape, classes, seed), seed);
}

inline ConvGapModel default_proxy(std::size_t channels, std::size_t classes, std::uint64_t seed) {
    return ConvGapModel::random(channels, kProxyFilters, kProxyKernel, kProxyStride, classes, seed);
}

inline ConvGapModel make_proxy(const std::string& model_file, std::size_t channels, std::size_t classes,
                               std::uint64_t seed) {
    if (model_file.empty()) return default_proxy(channels, classes, seed);
    auto m = load_model(std::filesystem::path(model_file));
    if (!std::holds_alternative<ConvGapModel>(m)) throw ConfigError("proxy model file must hold a conv-gap model");
    return std::get<ConvGapModel>(std::move(m));
}

inline std::unique_ptr<Oracle> make_oracle(const RunConfig& cfg, const Image& image) {
    const auto& spec = cfg.oracle;
    if (spec == "toy:linear" || spec == "toy:conv-gap") {
        if (!cfg.target_model.empty()) {
            auto m = load_model(std::filesystem::path(cfg.target_model));
            const bool want_linear = spec == "toy:linear";
            if (want_linear != std::holds_alternative<LinearSoftmaxModel>(m)) {
                throw ConfigError("target model file kind does not match oracle spec " + spec);
            }
            return std::make_unique<ToyOracle>(std::move(m));
        }
        if (spec == "toy:linear") {
            return std::make_unique<ToyOracle>(default_linear_target(image.shape(), cfg.classes, cfg.model_seed));
        }
        return std::make_unique<ToyOracle>(default_proxy(image.channels(), cfg.classes, cfg.model_seed));
    }
    if (spec.rfind("subprocess:", 0) == 0) {
        auto cmd = spec.substr(11);
        if (cmd.empty()) throw ConfigError("subprocess oracle needs a command");
        return std::make_unique<SubprocessOracle>(cmd);
    }
    if (spec.rfind("http:", 0) == 0 || spec.rfind("https:", 0) == 0) {
        return std::make_unique<HttpOracle>(spec, cfg.http_in_flight);
    }
    throw ConfigError("unknown oracle spec '" + spec + "' (expected toy:linear, toy:conv-gap, subprocess:<cmd> or http://...)");
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

template <class Fn>
void write_with(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot create '" + path.string() + "'");
    fn(out);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_report(const std::filesystem::path& dir, const AttackReport& report) {
    write_text(dir / "report.json", io::report_to_json(report).dump(2) + "\n");
}

} // namespace detail

/// Runs one attack and writes into output_dir:
///   adversarial.png   final adversarial example (success only)
///   perturbation.csv  its effective perturbation, l,w,c,value
///   front.csv         first front of the final population
///   report.json       summary, config echo and front
///   mask.pgm          final spatial mask
///   history.csv       every evaluation (with write_history)
/// Exit code: 0 success, 2 no misclassifying candidate, 1 error.
inline int cmd_attack(const RunConfig& cfg, std::ostream& log = std::cerr) {
    try {
        cfg.validate();
        const auto image = io::read_image(cfg.image);
        auto oracle = make_oracle(cfg, image);

        AttentionSource source;
        if (cfg.attention == "proxy") {
            source = make_proxy(cfg.proxy_model, image.channels(), cfg.classes, cfg.proxy_seed);
        } else {
            source = load_attention(cfg.attention.substr(5), image.height(), image.width());
        }

        const std::filesystem::path dir(cfg.output_dir);
        std::filesystem::create_directories(dir);

        AttackReport report;
        try {
            report = run_attack(image, *oracle, source, cfg.attack_config());
        } catch (const AttackError& e) {
            if (e.partial()) detail::write_report(dir, *e.partial());
            log << "error: " << e.what() << '\n';
            return kError;
        }

        for (const auto& w : report.warnings) log << "warning: " << w << '\n';

        io::write_mask(dir / "mask.pgm", report.mask);
        detail::write_with(dir / "front.csv", [&](std::ostream& o) { io::write_front_csv(o, report.front); });
        std::vector<io::PixelDelta> deltas;
        if (report.final_ae) deltas = io::to_deltas(report.final_ae->perturbation, report.index);
        detail::write_with(dir / "perturbation.csv", [&](std::ostream& o) { io::write_perturbation_csv(o, deltas); });
        if (cfg.write_history) {
            detail::write_with(dir / "history.csv", [&](std::ostream& o) { io::write_history_csv(o, report.history); });
        }
        if (report.final_ae) io::write_image(dir / "adversarial.png", report.final_ae->image);
        detail::write_report(dir, report);

        log << "d=" << report.dimension() << " queries=" << report.queries << " original_class="
            << report.original_class << " (p=" << report.clean_confidence << ")\n";
        if (!report.final_ae) {
            log << "attack failed: no evaluated candidate changed the predicted class\n";
            return kAttackFailed;
        }
        log << "success: class " << report.final_ae->predicted_class << " (p=" << report.final_ae->confidence
            << "), l2=" << report.final_ae->l2 << ", changed values=" << report.final_ae->perturbation.entries.size()
            << '\n';
        return kSuccess;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kError;
    }
}

inline int cmd_visualize(const std::string& original_path, const std::string& perturbation_path,
                         const std::string& mask_path, const std::string& output_path,
                         std::ostream& log = std::cerr) {
    try {
        const auto original = io::read_image(original_path);
        std::ifstream in(perturbation_path);
        if (!in) throw Error("cannot open '" + perturbation_path + "'");
        const auto deltas = io::read_perturbation_csv(in);
        const auto mask = io::read_mask(mask_path);
        io::write_image(output_path, render_pattern(original, deltas, mask));
        return kSuccess;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kError;
    }
}

/// Re-exports the front stored in a report as CSV sorted by f2, plus an
/// optional whitespace-separated "f2 f1" file for plotting.
inline int cmd_export_front(const std::string& report_path, const std::string& csv_path,
                            const std::string& plot_path = {}, std::ostream& log = std::cerr) {
    try {
        std::ifstream in(report_path);
        if (!in) throw Error("cannot open report '" + report_path + "'");
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw FormatError("report '" + report_path + "' is not valid JSON");
        auto front = io::front_from_report(j);
        detail::write_with(csv_path, [&](std::ostream& o) { io::write_front_csv(o, front); });
        if (!plot_path.empty()) {
            std::stable_sort(front.begin(), front.end(),
                             [](const FrontPoint& a, const FrontPoint& b) { return a.f2 < b.f2; });
            detail::write_with(plot_path, [&](std::ostream& o) {
                o << "# f2 f1\n";
                for (const auto& p : front) o << io::format_double(p.f2) << ' ' << io::format_double(p.f1) << '\n';
            });
        }
        return kSuccess;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kError;
    }
}

struct GenAttentionOptions {
    std::string image;
    std::string output;          // attention PGM
    std::string mask_output;     // optional final mask PGM
    std::string proxy_model;
    std::uint64_t proxy_seed = 7;
    std::size_t classes = 10;
    bool use_parity = true;
    bool odd_parity = false;
    std::string upsample = "bilinear";
};

inline int cmd_gen_attention(const GenAttentionOptions& opt, std::ostream& log = std::cerr) {
    try {
        const auto image = io::read_image(opt.image);
        const auto proxy = make_proxy(opt.proxy_model, image.channels(), opt.classes, opt.proxy_seed);
        const auto mode = opt.upsample == "nearest" ? Upsample::Nearest : Upsample::Bilinear;
        const auto map = compute_cam(proxy, image, mode);
        save_attention(opt.output, map);
        const auto screened = binarize(map);
        log << "attention pixels: " << screened.popcount() << " of " << image.pixels() << '\n';
        if (!opt.mask_output.empty()) {
            AttackConfig cfg;
            cfg.use_parity = opt.use_parity;
            cfg.parity_segment = opt.odd_parity ? ParitySegment::Odd : ParitySegment::Even;
            const auto plan = plan_mask(image, map, cfg);
            if (plan.fell_back) log << "warning: final mask was empty; fell back to the full-image checkerboard\n";
            io::write_mask(opt.mask_output, plan.final_mask);
            log << "mask pixels: " << plan.final_mask.popcount() << '\n';
        }
        return kSuccess;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kError;
    }
}

} // namespace pica::app

#endif // PICA_APP_HPP
