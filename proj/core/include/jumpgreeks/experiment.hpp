#pragma once

#include "jumpgreeks/greeks.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jumpgreeks {

struct ExperimentConfig {
    ModelTag model = ModelTag::vasicek;
    double x0 = 100.0;
    double rate = 0.1;
    double level = 10.0; ///< mean-reversion level, Vasicek only
    double intensity = 1.0;
    double horizon = 5.0;
    std::vector<double> sigmas;
    PayoffKind payoff = PayoffKind::call;
    double strike = 100.0;
    std::vector<Method> methods;
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    std::optional<double> fd_bump;   ///< default 0.01 x
    std::optional<double> loc_width; ///< default 0.2 sqrt(Variance(S_T))
    double alpha = 0.25;
    unsigned workers = 0;
    std::filesystem::path out;
    std::filesystem::path plots;

    /// Throws ParameterError on an empty sigma list, M < 10 or a custom model.
    void validate() const;
};

/// Parameter sets of the three published tables (1: Vasicek call,
/// 2: Vasicek digital, 3: geometric digital).
ExperimentConfig table_preset(int table);

/// Default Vasicek grid 50 / sqrt(k), k = 10, ..., 1.
std::vector<double> vasicek_sigma_grid();
/// Default geometric grid 0.1, ..., 0.6.
std::vector<double> geometric_sigma_grid();

struct TheoreticalVariance {
    double printed = 0.0; ///< formula as published
    double derived = 0.0; ///< exact variance of S_T for standard normal amplitudes
};

TheoreticalVariance theoretical_variance(ModelTag model, double x0, double rate, double level, double sigma,
                                         double intensity, double horizon);
TheoreticalVariance theoretical_variance(const ExperimentConfig& config, double sigma);

/// Model and problem for one sigma of a configuration.
DeltaProblem make_problem(const ExperimentConfig& config, double sigma);
PayoffSpec make_payoff(const ExperimentConfig& config, double sigma);

struct MethodCell {
    double estimate = 0.0;
    double standard_error = 0.0;
    double variance = 0.0;
};

struct TableRow {
    double sigma = 0.0;
    double var_st_theory = 0.0;  ///< derived value
    double var_st_printed = 0.0; ///< published formula, not written to the CSV
    std::map<Method, MethodCell> cells;
    std::map<Method, EstimateReport> reports;
};

inline constexpr const char* table_csv_header =
    "sigma,var_st_theory,delta_aj,se_aj,var_aj,delta_jt,se_jt,var_jt,delta_fd,se_fd,var_fd,"
    "delta_mixed,se_mixed,var_mixed";

/// One row per sigma. Writes the CSV when config.out is set and plot series
/// when config.plots is set.
std::vector<TableRow> run_table(const ExperimentConfig& config);

/// Shortest round-trip decimal form.
std::string format_number(double v);

void write_table_csv(const std::vector<TableRow>& rows, const std::filesystem::path& path);
std::string table_csv(const std::vector<TableRow>& rows);
/// Inverse of table_csv; empty cells become absent methods.
std::vector<TableRow> parse_table_csv(const std::string& text);

/// One whitespace-separated file per method with columns
/// sigma, estimate, estimate - 2 SE, estimate + 2 SE. Returns the files written.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<TableRow>& rows, PayoffKind payoff,
                                                  const std::vector<Method>& methods,
                                                  const std::filesystem::path& directory);

/// Flat `key = value` lines; `#` starts a comment. Throws IoError when the
/// file cannot be read and ParameterError on a malformed line.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Builds a configuration from option values keyed like the CLI flags
/// (model, payoff, methods, sigma, paths, seed, fd-bump, loc-width, alpha,
/// out, plots, table, strike, x, rate, level, intensity, horizon, workers).
/// A `table` key selects the preset first; the other keys override it.
ExperimentConfig config_from_options(const std::map<std::string, std::string>& options);

std::string_view payoff_name(PayoffKind kind);
std::string_view model_name(ModelTag tag);

} // namespace jumpgreeks
