#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lqexplore/learner.hpp"
#include "lqexplore/model.hpp"

namespace lqexplore {

/// Plain-text key = value file. '#' starts a comment; blank lines are ignored.
/// Unknown or repeated keys are rejected with ErrorKind::ConfigError.
///
///   A = 1
///   B = 1            # comma-separated for l > 1
///   C = 1, 0.5       # one entry per noise dimension
///   D = 1; 2         # one vector per noise dimension, separated by ';'
///   dt_mode = fixed  # or theorem
///   Gamma_floor = band  # or a positive number
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text, const std::string& source = "<string>");
    static ConfigFile load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }
    [[nodiscard]] std::optional<double> number(const std::string& key) const;
    [[nodiscard]] std::optional<std::vector<double>> numbers(const std::string& key) const;
    [[nodiscard]] std::optional<std::string> text(const std::string& key) const;
    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, std::string> entries_;
    std::string source_;
};

/// Overwrites the model coefficients named in the file.
ModelParams apply_model_keys(ModelParams base, const ConfigFile& cfg);

/// True if the file names any model coefficient.
bool has_model_keys(const ConfigFile& cfg);

struct LearnerOverrides {
    std::optional<double> phi0;
    std::optional<double> Gamma0;
    std::optional<double> gamma0;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> c_gamma;
    std::optional<DtMode> dt_mode;
    std::optional<double> dt;
    std::optional<long> n_iters;
    std::optional<double> phi_box_lo;
    std::optional<double> phi_box_hi;
    std::optional<double> Gamma_lo;
    std::optional<double> Gamma_hi;
    /// "band" keeps Gamma >= max(1e-6, 1/b_n); a number sets a constant floor.
    std::optional<double> Gamma_floor;
    std::optional<bool> Gamma_floor_band;
    std::optional<double> b_scale;
    std::optional<double> a_phi_scale;
    std::optional<double> a_Gamma_scale;
    std::optional<double> prior_estimate;
};

LearnerOverrides learner_overrides(const ConfigFile& cfg);

double parse_double(std::string_view token, const std::string& context);

} // namespace lqexplore
