#include "jumpgreeks/experiment.hpp"

#include "jumpgreeks/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jumpgreeks {

namespace {

constexpr std::array<Method, 4> csv_order{Method::aj, Method::jt, Method::fd, Method::mixed};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

double parse_double(std::string_view s, std::string_view key)
{
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ParameterError("invalid number '" + t + "' for " + std::string(key));
    }
    return v;
}

std::uint64_t parse_unsigned(std::string_view s, std::string_view key)
{
    const std::string t = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ParameterError("invalid integer '" + t + "' for " + std::string(key));
    }
    return v;
}

} // namespace

std::string_view payoff_name(PayoffKind kind)
{
    switch (kind) {
    case PayoffKind::call:
        return "call";
    case PayoffKind::digital:
        return "digital";
    case PayoffKind::custom:
        return "custom";
    }
    return "?";
}

std::string_view model_name(ModelTag tag)
{
    switch (tag) {
    case ModelTag::vasicek:
        return "vasicek";
    case ModelTag::geometric:
        return "geometric";
    case ModelTag::custom:
        return "custom";
    }
    return "?";
}

void ExperimentConfig::validate() const
{
    if (model == ModelTag::custom) {
        throw ParameterError("experiments run the vasicek or geometric model");
    }
    if (payoff == PayoffKind::custom) {
        throw ParameterError("experiments run call or digital payoffs");
    }
    if (sigmas.empty()) {
        throw ParameterError("sigma list must not be empty");
    }
    for (double s : sigmas) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ParameterError("sigma values must be positive");
        }
    }
    if (paths < 10) {
        throw ParameterError("need at least 10 paths");
    }
    if (fd_bump && !(*fd_bump > 0.0)) {
        throw ParameterError("fd bump must be positive");
    }
    if (loc_width && !(*loc_width >= 0.0)) {
        throw ParameterError("localization width must be nonnegative");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw ParameterError("alpha must lie in (0, 1/2)");
    }
    if (!(intensity > 0.0) || !(horizon > 0.0)) {
        throw ParameterError("intensity and horizon must be positive");
    }
}

std::vector<double> vasicek_sigma_grid()
{
    std::vector<double> g;
    for (int k = 10; k >= 1; --k) {
        g.push_back(50.0 / std::sqrt(static_cast<double>(k)));
    }
    return g;
}

std::vector<double> geometric_sigma_grid()
{
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
}

ExperimentConfig table_preset(int table)
{
    ExperimentConfig c;
    switch (table) {
    case 1:
        c.payoff = PayoffKind::call;
        break;
    case 2:
        c.payoff = PayoffKind::digital;
        break;
    case 3:
        c.model = ModelTag::geometric;
        c.payoff = PayoffKind::digital;
        c.sigmas = geometric_sigma_grid();
        c.methods = {Method::aj, Method::fd};
        return c;
    default:
        throw ParameterError("table must be 1, 2 or 3");
    }
    c.sigmas = vasicek_sigma_grid();
    c.methods = {Method::aj, Method::jt, Method::fd};
    return c;
}

TheoreticalVariance theoretical_variance(ModelTag model, double x0, double rate, double level, double sigma,
                                         double intensity, double horizon)
{
    TheoreticalVariance v;
    switch (model) {
    case ModelTag::vasicek: {
        const double e2 = std::exp(-2.0 * rate * horizon);
        v.derived = sigma * sigma * intensity * (1.0 - e2) / (2.0 * rate);
        v.printed = 2.0 * level * e2 * (x0 - level) + v.derived;
        return v;
    }
    case ModelTag::geometric:
        v.printed = x0 * x0 * std::exp(2.0 * rate * horizon) * std::expm1(sigma * sigma * intensity * horizon);
        v.derived = v.printed;
        return v;
    case ModelTag::custom:
        break;
    }
    throw ParameterError("no theoretical variance for a custom model");
}

TheoreticalVariance theoretical_variance(const ExperimentConfig& config, double sigma)
{
    return theoretical_variance(config.model, config.x0, config.rate, config.level, sigma, config.intensity,
                                config.horizon);
}

DeltaProblem make_problem(const ExperimentConfig& config, double sigma)
{
    DeltaProblem p;
    p.model = config.model == ModelTag::vasicek ? ModelSpec::vasicek(config.rate, config.level, sigma)
                                                : ModelSpec::geometric(config.rate, sigma);
    p.x0 = config.x0;
    p.horizon = config.horizon;
    p.intensity = config.intensity;
    p.alpha = config.alpha;
    return p;
}

PayoffSpec make_payoff(const ExperimentConfig& config, double sigma)
{
    const double width = config.loc_width ? *config.loc_width
                                          : 0.2 * std::sqrt(theoretical_variance(config, sigma).derived);
    return config.payoff == PayoffKind::call ? PayoffSpec::call(config.strike, width)
                                             : PayoffSpec::digital(config.strike, width);
}

std::vector<TableRow> run_table(const ExperimentConfig& config)
{
    config.validate();
    std::vector<TableRow> rows;
    for (double sigma : config.sigmas) {
        TableRow row;
        row.sigma = sigma;
        const TheoreticalVariance tv = theoretical_variance(config, sigma);
        row.var_st_theory = tv.derived;
        row.var_st_printed = tv.printed;
        const DeltaProblem problem = make_problem(config, sigma);
        const PayoffSpec payoff = make_payoff(config, sigma);
        for (Method m : config.methods) {
            const EstimateReport r = m == Method::fd
                                         ? delta_fd(problem, payoff, config.fd_bump.value_or(0.01 * config.x0),
                                                    config.paths, config.seed, config.workers)
                                         : delta_malliavin(problem, payoff, m, config.paths, config.seed,
                                                           config.workers);
            row.cells[m] = {r.estimate, r.standard_error, r.variance};
            row.reports[m] = r;
        }
        rows.push_back(std::move(row));
    }
    if (!config.out.empty()) {
        write_table_csv(rows, config.out);
    }
    if (!config.plots.empty()) {
        emit_plot_data(rows, config.payoff, config.methods, config.plots);
    }
    return rows;
}

std::string format_number(double v)
{
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        throw NumericError("cannot format number");
    }
    return std::string(buf.data(), ptr);
}

std::string table_csv(const std::vector<TableRow>& rows)
{
    std::string out = table_csv_header;
    out += '\n';
    for (const TableRow& r : rows) {
        out += format_number(r.sigma);
        out += ',';
        out += format_number(r.var_st_theory);
        for (Method m : csv_order) {
            const auto it = r.cells.find(m);
            for (int k = 0; k < 3; ++k) {
                out += ',';
                if (it != r.cells.end()) {
                    const MethodCell& c = it->second;
                    out += format_number(k == 0 ? c.estimate : k == 1 ? c.standard_error : c.variance);
                }
            }
        }
        out += '\n';
    }
    return out;
}

void write_table_csv(const std::vector<TableRow>& rows, const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    f << table_csv(rows);
    if (!f.flush()) {
        throw IoError("failed writing " + path.string());
    }
}

std::vector<TableRow> parse_table_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != table_csv_header) {
        throw ParameterError("unexpected CSV header");
    }
    std::vector<TableRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 14) {
            throw ParameterError("CSV row must have 14 fields");
        }
        TableRow r;
        r.sigma = parse_double(f[0], "sigma");
        r.var_st_theory = parse_double(f[1], "var_st_theory");
        for (std::size_t m = 0; m < csv_order.size(); ++m) {
            const std::size_t base = 2 + 3 * m;
            if (f[base].empty()) {
                continue;
            }
            r.cells[csv_order[m]] = {parse_double(f[base], "delta"), parse_double(f[base + 1], "se"),
                                     parse_double(f[base + 2], "var")};
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::filesystem::path> emit_plot_data(const std::vector<TableRow>& rows, PayoffKind payoff,
                                                  const std::vector<Method>& methods,
                                                  const std::filesystem::path& directory)
{
    if (rows.empty()) {
        throw ParameterError("no rows to plot");
    }
    std::vector<std::filesystem::path> written;
    if (methods.empty()) {
        return written;
    }
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create " + directory.string() + ": " + ec.message());
    }
    for (Method m : methods) {
        const auto file = directory / (std::string(payoff_name(payoff)) + "_" + std::string(method_name(m)) + ".dat");
        std::ofstream f(file, std::ios::binary);
        if (!f) {
            throw IoError("cannot open " + file.string() + " for writing");
        }
        f << "# sigma estimate lower upper\n";
        for (const TableRow& r : rows) {
            const auto it = r.cells.find(m);
            if (it == r.cells.end()) {
                continue;
            }
            const MethodCell& c = it->second;
            f << format_number(r.sigma) << ' ' << format_number(c.estimate) << ' '
              << format_number(c.estimate - 2.0 * c.standard_error) << ' '
              << format_number(c.estimate + 2.0 * c.standard_error) << '\n';
        }
        if (!f.flush()) {
            throw IoError("failed writing " + file.string());
        }
        written.push_back(file);
    }
    return written;
}

std::map<std::string, std::string> parse_config_text(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(number) + ": expected key = value");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) {
            throw ParameterError("config line " + std::to_string(number) + ": empty key");
        }
        out[key] = trim(std::string_view(body).substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw IoError("cannot read config file " + path.string());
    }
    std::ostringstream s;
    s << f.rdbuf();
    return parse_config_text(s.str());
}

ExperimentConfig config_from_options(const std::map<std::string, std::string>& options)
{
    ExperimentConfig c;
    if (const auto it = options.find("table"); it != options.end()) {
        c = table_preset(static_cast<int>(parse_unsigned(it->second, "table")));
    }
    bool sigma_given = false;
    for (const auto& [key, value] : options) {
        if (key == "table") {
            continue;
        } else if (key == "model") {
            if (value == "vasicek") {
                c.model = ModelTag::vasicek;
            } else if (value == "geometric") {
                c.model = ModelTag::geometric;
            } else {
                throw ParameterError("model must be vasicek or geometric");
            }
        } else if (key == "payoff") {
            if (value == "call") {
                c.payoff = PayoffKind::call;
            } else if (value == "digital") {
                c.payoff = PayoffKind::digital;
            } else {
                throw ParameterError("payoff must be call or digital");
            }
        } else if (key == "methods") {
            c.methods.clear();
            for (const std::string& m : split(value, ',')) {
                if (!m.empty()) {
                    const Method parsed = parse_method(m);
                    if (std::find(c.methods.begin(), c.methods.end(), parsed) == c.methods.end()) {
                        c.methods.push_back(parsed);
                    }
                }
            }
        } else if (key == "sigma") {
            sigma_given = true;
            c.sigmas.clear();
            for (const std::string& s : split(value, ',')) {
                c.sigmas.push_back(parse_double(s, key));
            }
        } else if (key == "paths") {
            c.paths = parse_unsigned(value, key);
        } else if (key == "seed") {
            c.seed = parse_unsigned(value, key);
        } else if (key == "fd-bump") {
            c.fd_bump = parse_double(value, key);
        } else if (key == "loc-width") {
            c.loc_width = parse_double(value, key);
        } else if (key == "alpha") {
            c.alpha = parse_double(value, key);
        } else if (key == "out") {
            c.out = value;
        } else if (key == "plots") {
            c.plots = value;
        } else if (key == "strike") {
            c.strike = parse_double(value, key);
        } else if (key == "x") {
            c.x0 = parse_double(value, key);
        } else if (key == "rate") {
            c.rate = parse_double(value, key);
        } else if (key == "level") {
            c.level = parse_double(value, key);
        } else if (key == "intensity") {
            c.intensity = parse_double(value, key);
        } else if (key == "horizon") {
            c.horizon = parse_double(value, key);
        } else if (key == "workers") {
            c.workers = static_cast<unsigned>(parse_unsigned(value, key));
        } else {
            throw ParameterError("unknown option '" + key + "'");
        }
    }
    if (!sigma_given && c.sigmas.empty()) {
        c.sigmas = c.model == ModelTag::vasicek ? vasicek_sigma_grid() : geometric_sigma_grid();
    }
    if (c.methods.empty()) {
        c.methods = c.model == ModelTag::vasicek ? std::vector<Method>{Method::aj, Method::jt, Method::fd}
                                                 : std::vector<Method>{Method::aj, Method::fd};
    }
    return c;
}

} // namespace jumpgreeks
