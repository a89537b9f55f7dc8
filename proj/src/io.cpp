#include "paritylab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace paritylab {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_double_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw std::invalid_argument("parse_double: not a number: " + s);
    return v;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const std::string& config_line,
                          const TrajectoryLog& log) {
    auto out = open_out(path);
    out << "# " << config_line << "\n";
    out << "step,risk,grad_norm,pl_ratio,eta\n";
    for (const auto& row : log.steps) {
        out << row.step << ',' << format_double(row.risk) << ',' << format_double(row.grad_norm)
            << ',' << format_double(row.pl_ratio) << ',' << format_double(row.eta) << "\n";
    }
}

void write_attention_csv(const std::string& path, const std::string& config_line,
                         const AttentionMap& map) {
    auto out = open_out(path);
    out << "# " << config_line << "\n";
    out << "head,position,gamma\n";
    for (int i = 1; i <= map.m; ++i) {
        for (int p = 1; p <= map.n; ++p) {
            out << i << ',' << p << ',' << format_double(map.at(i, p)) << "\n";
        }
    }
}

void write_attention_pgm(const std::string& path, const std::string& config_line,
                         const AttentionMap& map) {
    auto out = open_out(path);
    out << "P2\n";
    out << "# " << config_line << "\n";
    out << map.n << ' ' << map.m << "\n255\n";
    for (int i = 1; i <= map.m; ++i) {
        for (int p = 1; p <= map.n; ++p) {
            const int gray = static_cast<int>(std::lround(255.0 * map.at(i, p)));
            out << gray << (p == map.n ? '\n' : ' ');
        }
    }
}

void write_probes_csv(const std::string& path, const std::string& config_line,
                      std::span<const ProbeReport> reports) {
    auto out = open_out(path);
    out << "# " << config_line << "\n";
    out << "probe,samples,observed,bound,pass\n";
    for (const auto& r : reports) {
        out << r.probe << ',' << r.samples << ',' << format_double(r.observed) << ','
            << format_double(r.bound) << ',' << (r.pass ? "true" : "false") << "\n";
    }
}

void write_checkpoint(const std::string& path, const std::string& config_line,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
    auto out = open_out(path);
    out << "# " << config_line << "\n";
    for (const auto& [key, value] : entries) {
        out << key << '=' << value << "\n";
    }
}

std::map<std::string, std::string> read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed checkpoint line: " + line);
        entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return entries;
}

std::vector<std::pair<std::string, std::string>> checkpoint_entries(const AttentionHeads& heads,
                                                                    const ParitySpec& spec,
                                                                    const TrainConfig& config,
                                                                    const TrajectoryLog& log) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("format", "paritylab-checkpoint-v1");
    kv.emplace_back("kind", "attention");
    kv.emplace_back("n", std::to_string(spec.n));
    kv.emplace_back("k", std::to_string(spec.k()));
    std::ostringstream bits;
    for (std::size_t i = 0; i < spec.bits.size(); ++i) bits << (i ? "," : "") << spec.bits[i];
    kv.emplace_back("parity_bits", bits.str());
    kv.emplace_back("tau", format_double_hex(heads.tau));
    kv.emplace_back("b_sigma", format_double_hex(config.b_sigma));
    kv.emplace_back("seed", std::to_string(config.seed));
    kv.emplace_back("mode", heads.mode == AttentionMode::hard ? "hard" : "soft");
    kv.emplace_back("status", log.status == TrainStatus::converged ? "converged" : "epoch-limit");
    kv.emplace_back("final_risk", format_double_hex(log.final_risk));
    kv.emplace_back("final_eta", format_double_hex(log.final_eta));
    kv.emplace_back("updates", std::to_string(log.updates));
    for (int i = 0; i < heads.count(); ++i) {
        const auto& u = heads.params[static_cast<std::size_t>(i)];
        kv.emplace_back("head." + std::to_string(i + 1) + ".a13", format_double_hex(u[0]));
        kv.emplace_back("head." + std::to_string(i + 1) + ".a14", format_double_hex(u[1]));
    }
    return kv;
}

}  // namespace paritylab
