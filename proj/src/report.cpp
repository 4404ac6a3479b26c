#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "slelab/experiments.hpp"

namespace slelab {

namespace {

constexpr const char* kArtifactVersion = "sle-lab 1.0.0";

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

std::string csv_row(const ExperimentResult& r) {
    std::ostringstream ss;
    ss << r.kind << "," << r.label << "," << fmt(r.estimate) << "," << fmt(r.stderr_) << ","
       << (r.has_target ? fmt(r.target) : "") << "," << (r.has_target ? fmt(r.z) : "") << ","
       << r.n << "," << r.invalid << "," << fmt(r.seconds) << ","
       << (r.inconclusive ? "inconclusive" : "ok");
    return ss.str();
}

std::string result_json(const ExperimentResult& r) {
    std::ostringstream ss;
    ss << "{\"kind\":\"" << r.kind << "\",\"label\":\"" << r.label
       << "\",\"estimate\":" << fmt(r.estimate) << ",\"stderr\":" << fmt(r.stderr_)
       << ",\"has_target\":" << (r.has_target ? "true" : "false")
       << ",\"target\":" << fmt(r.target) << ",\"z\":" << fmt(r.z) << ",\"n\":" << r.n
       << ",\"invalid\":" << r.invalid
       << ",\"inconclusive\":" << (r.inconclusive ? "true" : "false")
       << ",\"seconds\":" << fmt(r.seconds) << ",\"digest\":\"" << r.digest << "\",\"extras\":{";
    for (std::size_t i = 0; i < r.extras.size(); ++i)
        ss << (i ? "," : "") << "\"" << r.extras[i].first << "\":" << fmt(r.extras[i].second);
    ss << "}}";
    return ss.str();
}

ExperimentResult result_from_json(const std::string& line) {
    // Minimal field extraction for the fixed writer format above.
    auto find_str = [&](const std::string& key) {
        const std::string pat = "\"" + key + "\":\"";
        const auto p = line.find(pat);
        if (p == std::string::npos) return std::string();
        const auto q = line.find('"', p + pat.size());
        return line.substr(p + pat.size(), q - p - pat.size());
    };
    auto find_val = [&](const std::string& key) {
        const std::string pat = "\"" + key + "\":";
        const auto p = line.find(pat);
        if (p == std::string::npos) return std::string();
        auto q = p + pat.size();
        auto e = line.find_first_of(",}", q);
        return line.substr(q, e - q);
    };
    ExperimentResult r;
    r.kind = find_str("kind");
    r.label = find_str("label");
    r.estimate = std::stod(find_val("estimate"));
    r.stderr_ = std::stod(find_val("stderr"));
    r.has_target = find_val("has_target") == "true";
    r.target = std::stod(find_val("target"));
    r.z = std::stod(find_val("z"));
    r.n = std::stoull(find_val("n"));
    r.invalid = std::stoull(find_val("invalid"));
    r.inconclusive = find_val("inconclusive") == "true";
    r.seconds = std::stod(find_val("seconds"));
    r.digest = find_str("digest");
    return r;
}

void write_summary(const std::string& path, const std::vector<ExperimentResult>& results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_report: cannot write " + path);
    out << "kind,label,estimate,stderr,target,z,n,invalid,seconds,flag\n";
    for (const auto& r : results) out << csv_row(r) << "\n";
}

}  // namespace

std::string emit_report(const ExperimentConfig& cfg, const std::vector<ExperimentResult>& results,
                        const std::vector<ReplicaRecord>& detail, const std::string& out_root) {
    if (results.empty()) throw std::invalid_argument("emit_report: no results");
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_root) / cfg.digest();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("emit_report: cannot create " + dir.string());

    write_summary((dir / "summary.csv").string(), results);

    {
        std::ofstream out(dir / "results.ndjson", std::ios::binary);
        for (const auto& r : results) out << result_json(r) << "\n";
    }
    {
        std::ofstream out(dir / "detail.ndjson", std::ios::binary);
        for (const auto& rec : detail) {
            out << "{\"seed\":" << rec.seed_index << ",\"status\":\"" << rec.status
                << "\",\"M_terminal\":" << fmt(rec.m_terminal)
                << ",\"ratio_at_Tmax\":" << fmt(rec.ratio_at_tmax)
                << ",\"schwarzian_integral\":" << fmt(rec.schwarzian_integral)
                << ",\"invalid_flag\":" << (rec.invalid_flag ? "true" : "false") << "}\n";
        }
    }
    {
        std::ofstream out(dir / "manifest.txt", std::ios::binary);
        out << "version=" << kArtifactVersion << "\n" << cfg.canonical_string();
    }
    return dir.string();
}

int report_exit_code(const std::vector<ExperimentResult>& results, bool strict) {
    for (const auto& r : results) {
        if (r.has_target && std::abs(r.z) > 4.0) return 1;
        if (strict && r.inconclusive) return 1;
    }
    return 0;
}

void regenerate_report(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path dir(run_dir);
    std::ifstream in(dir / "results.ndjson");
    if (!in) throw std::runtime_error("regenerate_report: missing results.ndjson in " + run_dir);
    std::vector<ExperimentResult> results;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) results.push_back(result_from_json(line));
    write_summary((dir / "summary.csv").string(), results);
}

}  // namespace slelab
