#pragma once

#include "lorenz/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lorenz {

/// FNV-1a 64 of the canonical config dump, without the fields that cannot change results
/// (threads, out). 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Version string baked in at configure time ("unknown" outside a git checkout).
const char* build_version();

/// CSV file with `# config_hash=` and `# seed=` preamble lines. Doubles use %.17g.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const ExperimentConfig& cfg, const std::vector<std::string>& columns);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(std::size_t x);
    CsvWriter& operator<<(int x);
    CsvWriter& operator<<(bool x);
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
    /// Empty field when x has no value.
    template <class T>
    CsvWriter& operator<<(const std::optional<T>& x)
    {
        if (x)
            return *this << *x;
        return *this << std::string();
    }
    /// Ends the current row; throws if the field count differs from the header.
    void end_row();

private:
    void sep();
    std::FILE* f_ = nullptr;
    std::size_t columns_ = 0;
    std::size_t fields_ = 0;
    std::string path_;
};

/// Writes {subcommand, config_hash, seed, config, results} to path; the config echo omits threads and out,
/// so the file depends only on what can change the results.
void write_summary(const std::filesystem::path& path, const std::string& subcommand, const ExperimentConfig& cfg,
                   const nlohmann::ordered_json& results);

/// Non-reproducible run metadata (version string, wall-clock seconds, threads) kept apart from the summary.
void write_run_info(const std::filesystem::path& path, const std::string& subcommand, double wall_seconds,
                    std::size_t threads);

/// NaN and infinities become null.
nlohmann::ordered_json number_or_null(double x);

} // namespace lorenz
