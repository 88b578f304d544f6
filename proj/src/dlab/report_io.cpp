#include "dlab/report_io.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dlab/version.h"

namespace dlab {
namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DomainError("io", "cannot open " + tmp.string() + " for writing");
        os.write(content.data(), std::streamsize(content.size()));
        if (!os) throw DomainError("io", "short write on " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string report_csv(const EstimateReport& rep) {
    std::string out = "t,lhs,envelope\r\n";
    for (Eigen::Index i = 0; i < rep.t_samples.size(); ++i) {
        out += fmt_g17(rep.t_samples[i]);
        out += ',';
        out += fmt_g17(i < rep.lhs.size() ? rep.lhs[i] : 0.0);
        out += ',';
        out += fmt_g17(i < rep.envelope.size() ? rep.envelope[i] : 0.0);
        out += "\r\n";
    }
    return out;
}

std::string report_sidecar(const EstimateReport& rep) {
    nlohmann::json j;
    j["estimate_id"] = rep.estimate_id;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : rep.params) params[k] = v;
    j["parameters"] = params;
    j["fitted_exponent"] = rep.fitted_exponent;
    j["bound_constant"] = rep.bound_constant;
    j["verdict"] = verdict_name(rep.verdict);
    j["runtime_seconds"] = rep.runtime;
    j["build"] = DLAB_BUILD_ID;
    return j.dump(2) + "\n";
}

void write_report(const std::string& dir, const std::string& stem, const EstimateReport& rep) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    atomic_write((fs::path(dir) / (stem + ".csv")).string(), report_csv(rep));
    atomic_write((fs::path(dir) / (stem + ".json")).string(), report_sidecar(rep));
}

}  // namespace dlab
