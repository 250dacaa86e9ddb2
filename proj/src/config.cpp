#include "lqexplore/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lqexplore/errors.hpp"

namespace lqexplore {

namespace {

constexpr std::array kModelKeys = {"A", "B", "C", "D", "Q", "H", "x0", "T"};
constexpr std::array kLearnerKeys = {
    "phi0",       "Gamma0",     "gamma0",   "alpha",   "beta",        "c_gamma",
    "dt_mode",    "dt",         "n_iters",  "phi_box_lo", "phi_box_hi", "Gamma_lo",
    "Gamma_hi",   "Gamma_floor", "b_scale",    "a_phi_scale", "a_Gamma_scale", "prior_estimate"};

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool known_key(std::string_view key)
{
    for (const char* k : kModelKeys)
        if (key == k)
            return true;
    for (const char* k : kLearnerKeys)
        if (key == k)
            return true;
    return false;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

double parse_double(std::string_view token, const std::string& context)
{
    token = trim(token);
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
        throw Error(ErrorKind::ConfigError, context + ": '" + std::string(token) + "' is not a number");
    if (!std::isfinite(v))
        throw Error(ErrorKind::ConfigError, context + ": value must be finite");
    return v;
}

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source)
{
    ConfigFile cfg;
    cfg.source_ = source;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        const std::string where = source + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorKind::ConfigError, where + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!known_key(key))
            throw Error(ErrorKind::ConfigError, where + ": unknown key '" + key + "'");
        if (value.empty())
            throw Error(ErrorKind::ConfigError, where + ": empty value for '" + key + "'");
        if (!cfg.entries_.emplace(key, value).second)
            throw Error(ErrorKind::ConfigError, where + ": duplicate key '" + key + "'");
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::ConfigError, "cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

std::optional<double> ConfigFile::number(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    return parse_double(it->second, source_ + ": key '" + key + "'");
}

std::optional<std::vector<double>> ConfigFile::numbers(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    std::vector<double> out;
    for (auto tok : split(it->second, ','))
        out.push_back(parse_double(tok, source_ + ": key '" + key + "'"));
    return out;
}

std::optional<std::string> ConfigFile::text(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

bool has_model_keys(const ConfigFile& cfg)
{
    for (const char* k : kModelKeys)
        if (cfg.has(k))
            return true;
    return false;
}

ModelParams apply_model_keys(ModelParams p, const ConfigFile& cfg)
{
    if (auto v = cfg.number("A"))
        p.A = *v;
    if (auto v = cfg.numbers("B"))
        p.B = to_vector(*v);
    if (auto v = cfg.numbers("C"))
        p.C = *v;
    if (auto v = cfg.text("D")) {
        p.D.clear();
        for (auto group : split(*v, ';')) {
            std::vector<double> entries;
            for (auto tok : split(group, ','))
                entries.push_back(parse_double(tok, "key 'D'"));
            p.D.push_back(to_vector(entries));
        }
    }
    if (auto v = cfg.number("Q"))
        p.Q = *v;
    if (auto v = cfg.number("H"))
        p.H = *v;
    if (auto v = cfg.number("x0"))
        p.x0 = *v;
    if (auto v = cfg.number("T"))
        p.T = *v;

    if (p.C.size() != p.D.size())
        throw Error(ErrorKind::ConfigError, "C and D must list the same number of noise dimensions");
    for (const auto& d : p.D)
        if (d.size() != p.B.size())
            throw Error(ErrorKind::ConfigError, "every D vector must have the length of B");
    return p;
}

LearnerOverrides learner_overrides(const ConfigFile& cfg)
{
    LearnerOverrides o;
    o.phi0 = cfg.number("phi0");
    o.Gamma0 = cfg.number("Gamma0");
    o.gamma0 = cfg.number("gamma0");
    o.alpha = cfg.number("alpha");
    o.beta = cfg.number("beta");
    o.c_gamma = cfg.number("c_gamma");
    o.dt = cfg.number("dt");
    o.phi_box_lo = cfg.number("phi_box_lo");
    o.phi_box_hi = cfg.number("phi_box_hi");
    o.Gamma_lo = cfg.number("Gamma_lo");
    o.Gamma_hi = cfg.number("Gamma_hi");
    o.b_scale = cfg.number("b_scale");
    o.a_phi_scale = cfg.number("a_phi_scale");
    o.a_Gamma_scale = cfg.number("a_Gamma_scale");
    o.prior_estimate = cfg.number("prior_estimate");

    if (auto mode = cfg.text("dt_mode")) {
        if (*mode == "fixed")
            o.dt_mode = DtMode::Fixed;
        else if (*mode == "theorem")
            o.dt_mode = DtMode::TheoremSchedule;
        else
            throw Error(ErrorKind::ConfigError, "dt_mode must be 'fixed' or 'theorem'");
    }
    if (auto floor = cfg.text("Gamma_floor")) {
        if (*floor == "band") {
            o.Gamma_floor_band = true;
        } else {
            o.Gamma_floor = parse_double(*floor, "key 'Gamma_floor'");
            o.Gamma_floor_band = false;
            if (!(*o.Gamma_floor > 0.0))
                throw Error(ErrorKind::ConfigError, "Gamma_floor must be positive or 'band'");
        }
    }
    if (auto n = cfg.number("n_iters")) {
        if (*n < 0.0 || std::floor(*n) != *n)
            throw Error(ErrorKind::ConfigError, "n_iters must be a non-negative integer");
        o.n_iters = static_cast<long>(*n);
    }
    return o;
}

} // namespace lqexplore
