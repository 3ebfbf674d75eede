#include "lorenz/report.hpp"

#include "lorenz/errors.hpp"

#include <cinttypes>
#include <cmath>
#include <fstream>

#ifndef LORENZ_GIT_DESCRIBE
#define LORENZ_GIT_DESCRIBE "unknown"
#endif

namespace lorenz {

namespace {

nlohmann::ordered_json result_config(const ExperimentConfig& cfg)
{
    auto j = to_json(cfg);
    j.erase("threads");
    j.erase("out");
    return j;
}

} // namespace

std::string config_hash(const ExperimentConfig& cfg)
{
    const std::string s = result_config(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

const char* build_version() { return LORENZ_GIT_DESCRIBE; }

CsvWriter::CsvWriter(const std::filesystem::path& path, const ExperimentConfig& cfg,
                     const std::vector<std::string>& columns)
    : columns_(columns.size()), path_(path.string())
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    f_ = std::fopen(path_.c_str(), "wb");
    if (!f_)
        throw Error("cannot write " + path_);
    std::fprintf(f_, "# config_hash=%s\n# seed=%" PRIu64 "\n", config_hash(cfg).c_str(), cfg.noise.seed);
    bool first = true;
    for (const auto& c : columns) {
        std::fprintf(f_, first ? "%s" : ",%s", c.c_str());
        first = false;
    }
    std::fputc('\n', f_);
}

CsvWriter::~CsvWriter()
{
    if (f_)
        std::fclose(f_);
}

void CsvWriter::sep()
{
    if (fields_++ > 0)
        std::fputc(',', f_);
}

CsvWriter& CsvWriter::operator<<(double x)
{
    sep();
    std::fprintf(f_, "%.17g", x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::size_t x)
{
    sep();
    std::fprintf(f_, "%zu", x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(int x)
{
    sep();
    std::fprintf(f_, "%d", x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(bool x)
{
    sep();
    std::fputc(x ? '1' : '0', f_);
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s)
{
    sep();
    if (s.find_first_of(",\"\n") == std::string::npos) {
        std::fputs(s.c_str(), f_);
        return *this;
    }
    std::fputc('"', f_);
    for (char ch : s) {
        if (ch == '"')
            std::fputc('"', f_);
        std::fputc(ch, f_);
    }
    std::fputc('"', f_);
    return *this;
}

void CsvWriter::end_row()
{
    if (fields_ != columns_)
        throw Error(path_ + ": row has " + std::to_string(fields_) + " fields, header has " +
                    std::to_string(columns_));
    std::fputc('\n', f_);
    fields_ = 0;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace

void write_summary(const std::filesystem::path& path, const std::string& subcommand, const ExperimentConfig& cfg,
                   const nlohmann::ordered_json& results)
{
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.noise.seed;
    j["config"] = result_config(cfg);
    j["results"] = results;
    write_json(path, j);
}

void write_run_info(const std::filesystem::path& path, const std::string& subcommand, double wall_seconds,
                    std::size_t threads)
{
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["version"] = build_version();
    j["wall_seconds"] = wall_seconds;
    j["threads"] = threads;
    write_json(path, j);
}

nlohmann::ordered_json number_or_null(double x)
{
    if (std::isfinite(x))
        return x;
    return nullptr;
}

} // namespace lorenz
