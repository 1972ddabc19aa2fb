#include "poolcast/io.hpp"

#include "poolcast/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace poolcast::io {

namespace {

using Json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct Line {
    std::size_t number;
    std::string_view text;
};

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<Line> content_lines(std::string_view text) {
    std::vector<Line> out;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        const auto raw = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        ++number;
        const auto t = trim(raw);
        if (!t.empty() && t.front() != '#') out.push_back({number, t});
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void schema_error(const std::string& msg) { throw Error(ErrorCode::SchemaError, msg); }

double parse_number(std::string_view field, std::size_t line, std::string_view column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        schema_error("line " + std::to_string(line) + ", column '" + std::string(column) + "': cannot parse '" +
                     std::string(field) + "' as a finite number");
    }
    return v;
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Header {
    std::map<std::string, std::size_t, std::less<>> index;
    std::size_t width = 0;
    std::size_t line = 0;
};

Header parse_header(const std::vector<Line>& lines) {
    if (lines.empty()) schema_error("missing header line");
    Header h;
    h.line = lines.front().number;
    const auto cols = split(lines.front().text, ',');
    h.width = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i].empty()) schema_error("line " + std::to_string(h.line) + ": empty column name at position " + std::to_string(i + 1));
        if (!h.index.emplace(std::string(cols[i]), i).second) {
            schema_error("line " + std::to_string(h.line) + ": duplicate column '" + std::string(cols[i]) + "'");
        }
    }
    return h;
}

std::size_t require_column(const Header& h, const std::string& name) {
    const auto it = h.index.find(name);
    if (it == h.index.end()) schema_error("missing column '" + name + "'");
    return it->second;
}

// Number of numbered components `<prefix>1, <prefix>2, ...` present in the header.
std::size_t count_numbered(const Header& h, const std::string& prefix) {
    std::size_t k = 0;
    while (h.index.count(prefix + std::to_string(k + 1))) ++k;
    return k;
}

std::vector<std::string_view> row_fields(const Header& h, const Line& line) {
    auto fields = split(line.text, ',');
    if (fields.size() != h.width) {
        schema_error("line " + std::to_string(line.number) + ": expected " + std::to_string(h.width) + " fields, found " +
                     std::to_string(fields.size()));
    }
    return fields;
}

bool is_gaussian(const PredictiveDist& d) { return std::holds_alternative<dist::Gaussian>(d.kind()); }
bool is_bernoulli(const PredictiveDist& d) { return std::holds_alternative<dist::TwoPointBernoulli>(d.kind()); }

double get_number(const Json& j, const std::string& key) {
    const auto it = j.find(key);
    if (it == j.end()) schema_error("parameter record lacks key '" + key + "'");
    if (!it->is_number()) schema_error("parameter '" + key + "' is not a number");
    return it->get<double>();
}

std::optional<double> get_optional(const Json& j, const std::string& key) {
    if (!j.contains(key)) return std::nullopt;
    return get_number(j, key);
}

}  // namespace

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        os.flush();
        if (!os) throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot rename onto '" + path.string() + "'");
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path sibling(const std::filesystem::path& path, std::string_view suffix) {
    auto out = path;
    out.replace_extension();
    out += std::string(suffix);
    return out;
}

fit::Dataset parse_gaussian_csv(std::string_view text) {
    const auto lines = content_lines(text);
    const auto h = parse_header(lines);
    const auto y_col = require_column(h, "y");
    const std::size_t k = std::max(count_numbered(h, "mu_"), count_numbered(h, "sd_"));
    if (k == 0) schema_error("missing column 'mu_1'");
    std::vector<std::size_t> mu_col(k), sd_col(k);
    for (std::size_t i = 0; i < k; ++i) {
        mu_col[i] = require_column(h, "mu_" + std::to_string(i + 1));
        sd_col[i] = require_column(h, "sd_" + std::to_string(i + 1));
    }
    if (h.width != 2 * k + 1) {
        for (const auto& [name, idx] : h.index) {
            (void)idx;
            if (name != "y" && name.rfind("mu_", 0) != 0 && name.rfind("sd_", 0) != 0) {
                schema_error("line " + std::to_string(h.line) + ": unexpected column '" + name + "'");
            }
        }
        schema_error("line " + std::to_string(h.line) + ": component columns are not numbered 1.." + std::to_string(k));
    }

    fit::Dataset data;
    data.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = row_fields(h, lines[r]);
        fit::ForecastCase fc;
        fc.y = parse_number(fields[y_col], lines[r].number, "y");
        fc.components.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto mu_name = "mu_" + std::to_string(i + 1);
            const auto sd_name = "sd_" + std::to_string(i + 1);
            const double mu = parse_number(fields[mu_col[i]], lines[r].number, mu_name);
            const double sd = parse_number(fields[sd_col[i]], lines[r].number, sd_name);
            if (!(sd > 0.0)) {
                schema_error("line " + std::to_string(lines[r].number) + ", column '" + sd_name +
                             "': standard deviation must be positive");
            }
            fc.components.push_back(PredictiveDist::gaussian(mu, sd));
        }
        data.push_back(std::move(fc));
    }
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "no data rows");
    return data;
}

fit::Dataset read_gaussian_csv(const std::filesystem::path& path) { return parse_gaussian_csv(read_file(path)); }

std::string format_gaussian_csv(const fit::Dataset& data) {
    const std::size_t k = fit::component_count(data);
    std::string out = "y";
    for (std::size_t i = 1; i <= k; ++i) out += ",mu_" + std::to_string(i) + ",sd_" + std::to_string(i);
    out += '\n';
    for (const auto& c : data) {
        out += num(c.y);
        for (const auto& d : c.components) {
            const auto* g = std::get_if<dist::Gaussian>(&d.kind());
            if (!g) throw Error(ErrorCode::InvalidArgument, "Gaussian CSV needs Gaussian components");
            out += ',' + num(g->mu) + ',' + num(g->sigma);
        }
        out += '\n';
    }
    return out;
}

BinaryTable parse_binary_csv(std::string_view text) {
    const auto lines = content_lines(text);
    const auto h = parse_header(lines);
    const auto y_col = require_column(h, "y");
    const std::size_t k = count_numbered(h, "p_");
    if (k == 0) schema_error("missing column 'p_1'");
    if (h.width != k + 1) schema_error("line " + std::to_string(h.line) + ": expected columns y,p_1..p_" + std::to_string(k));
    std::vector<std::size_t> p_col(k);
    for (std::size_t i = 0; i < k; ++i) p_col[i] = require_column(h, "p_" + std::to_string(i + 1));

    BinaryTable t;
    t.p.resize(k);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = row_fields(h, lines[r]);
        const double y = parse_number(fields[y_col], lines[r].number, "y");
        if (y != 0.0 && y != 1.0) schema_error("line " + std::to_string(lines[r].number) + ", column 'y': must be 0 or 1");
        t.y.push_back(static_cast<int>(y));
        for (std::size_t i = 0; i < k; ++i) {
            const auto name = "p_" + std::to_string(i + 1);
            const double p = parse_number(fields[p_col[i]], lines[r].number, name);
            if (!(p >= 0.0 && p <= 1.0)) {
                schema_error("line " + std::to_string(lines[r].number) + ", column '" + name + "': must lie in [0, 1]");
            }
            t.p[i].push_back(p);
        }
    }
    if (t.y.empty()) throw Error(ErrorCode::EmptyInput, "no data rows");
    return t;
}

std::string format_binary_csv(const BinaryTable& t) {
    std::string out = "y";
    for (std::size_t i = 1; i <= t.p.size(); ++i) out += ",p_" + std::to_string(i);
    out += '\n';
    for (std::size_t j = 0; j < t.y.size(); ++j) {
        out += std::to_string(t.y[j]);
        for (const auto& col : t.p) out += ',' + num(col.at(j));
        out += '\n';
    }
    return out;
}

Schema detect_schema(std::string_view text) {
    const auto lines = content_lines(text);
    if (lines.empty()) return Schema::Unknown;
    for (auto col : split(lines.front().text, ',')) {
        if (col == "mu_1") return Schema::Gaussian;
        if (col == "p_1") return Schema::Binary;
    }
    return Schema::Unknown;
}

std::string format_simulation_csv(const sim::SimulatedData& data) {
    const auto& cases = data.cases;
    auto all = [&cases](auto pred) {
        for (const auto& c : cases)
            for (const auto& d : c.components)
                if (!pred(d)) return false;
        return true;
    };
    if (!cases.empty() && all(is_gaussian)) return format_gaussian_csv(cases);
    if (!cases.empty() && all(is_bernoulli)) {
        BinaryTable t;
        t.p.resize(cases.front().components.size());
        for (const auto& c : cases) {
            t.y.push_back(static_cast<int>(c.y));
            for (std::size_t i = 0; i < c.components.size(); ++i) {
                t.p[i].push_back(std::get<dist::TwoPointBernoulli>(c.components[i].kind()).p);
            }
        }
        return format_binary_csv(t);
    }
    std::string out = "y\n";
    for (const auto& c : cases) out += num(c.y) + '\n';
    return out;
}

std::string format_latents_csv(const sim::SimulatedData& data) {
    std::string out = "y";
    for (const auto& name : data.latent_names) out += ',' + name;
    out += '\n';
    for (std::size_t j = 0; j < data.cases.size(); ++j) {
        out += num(data.cases[j].y);
        for (double v : data.latents.at(j)) out += ',' + num(v);
        out += '\n';
    }
    return out;
}

ParamRecord to_record(const fit::FitResult& fit) {
    return ParamRecord{fit.spec, fit.std_errors, fit.converged, fit.iterations, fit.mean_log_score_train};
}

std::string format_params(const ParamRecord& r) {
    Json j;
    const auto& w = pool_weights(r.spec);
    j["method"] = pool_method(r.spec);
    j["k"] = w.size();
    for (std::size_t i = 0; i < w.size(); ++i) j["w_" + std::to_string(i + 1)] = w[i];
    if (const auto* s = std::get_if<pools::Slp>(&r.spec)) j["c"] = s->c;
    if (const auto* b = std::get_if<pools::Blp>(&r.spec)) {
        j["alpha"] = b->alpha;
        j["beta"] = b->beta;
    }
    if (r.std_errors) {
        for (std::size_t i = 0; i < r.std_errors->w.size(); ++i) j["se_w_" + std::to_string(i + 1)] = r.std_errors->w[i];
        if (r.std_errors->c) j["se_c"] = *r.std_errors->c;
        if (r.std_errors->alpha) j["se_alpha"] = *r.std_errors->alpha;
        if (r.std_errors->beta) j["se_beta"] = *r.std_errors->beta;
    }
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["mean_log_score"] = r.mean_log_score;
    return j.dump(2) + "\n";
}

ParamRecord parse_params(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        schema_error(std::string("parameter record is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) schema_error("parameter record must be a JSON object");
    if (!j.contains("method") || !j["method"].is_string()) schema_error("parameter record lacks key 'method'");
    const auto method = j["method"].get<std::string>();
    const double kd = get_number(j, "k");
    if (!(kd >= 1.0) || kd != std::floor(kd)) schema_error("parameter 'k' must be a positive integer");
    const auto k = static_cast<std::size_t>(kd);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = get_number(j, "w_" + std::to_string(i + 1));

    ParamRecord r;
    if (method == "tlp") {
        r.spec = pools::Tlp{w};
    } else if (method == "slp") {
        r.spec = pools::Slp{w, get_number(j, "c")};
    } else if (method == "blp") {
        r.spec = pools::Blp{w, get_number(j, "alpha"), get_number(j, "beta")};
    } else if (method.rfind("glp-", 0) == 0) {
        r.spec = pools::Glp{w, parse_link(method.substr(4))};
    } else {
        schema_error("unknown method '" + method + "'");
    }
    validate(r.spec);

    if (j.contains("se_w_1")) {
        fit::StdErrors se;
        for (std::size_t i = 0; i < k; ++i) se.w.push_back(get_number(j, "se_w_" + std::to_string(i + 1)));
        se.c = get_optional(j, "se_c");
        se.alpha = get_optional(j, "se_alpha");
        se.beta = get_optional(j, "se_beta");
        r.std_errors = se;
    }
    if (j.contains("converged")) {
        if (!j["converged"].is_boolean()) schema_error("parameter 'converged' is not a boolean");
        r.converged = j["converged"].get<bool>();
    }
    if (j.contains("iterations")) r.iterations = static_cast<std::size_t>(get_number(j, "iterations"));
    if (j.contains("mean_log_score")) r.mean_log_score = get_number(j, "mean_log_score");
    return r;
}

std::string format_estimate_table(const ParamRecord& r) {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-10s %12s %12s\n", "parameter", "estimate", "std.error");
    os << "method " << pool_method(r.spec) << "\n" << buf;
    auto row = [&](const std::string& name, double v, std::optional<double> se) {
        if (se) std::snprintf(buf, sizeof buf, "%-10s %12.4f %12.4f\n", name.c_str(), v, *se);
        else std::snprintf(buf, sizeof buf, "%-10s %12.4f %12s\n", name.c_str(), v, "---");
        os << buf;
    };
    const auto& w = pool_weights(r.spec);
    for (std::size_t i = 0; i < w.size(); ++i) {
        std::optional<double> se;
        if (r.std_errors && i < r.std_errors->w.size()) se = r.std_errors->w[i];
        row("w_" + std::to_string(i + 1), w[i], se);
    }
    if (const auto* s = std::get_if<pools::Slp>(&r.spec)) row("c", s->c, r.std_errors ? r.std_errors->c : std::nullopt);
    if (const auto* b = std::get_if<pools::Blp>(&r.spec)) {
        row("alpha", b->alpha, r.std_errors ? r.std_errors->alpha : std::nullopt);
        row("beta", b->beta, r.std_errors ? r.std_errors->beta : std::nullopt);
    }
    std::snprintf(buf, sizeof buf, "mean log score %.6f, iterations %zu, converged %s\n", r.mean_log_score, r.iterations,
                  r.converged ? "yes" : "no");
    os << buf;
    return os.str();
}

std::string format_evaluation_json(const EvaluationOutput& out) {
    Json j;
    j["method"] = out.method;
    j["n"] = out.n;
    j["seed"] = out.seed;
    j["mean_log_score"] = out.report.mean_log_score;
    j["pit_variance"] = out.report.pit_variance;
    j["pit_variance_ci_halfwidth"] = out.report.dispersion.ci_halfwidth;
    j["dispersion"] = std::string(pit::to_string(out.report.dispersion.classification));
    j["rmv"] = out.report.rmv;
    j["bins"] = out.report.histogram.size();
    return j.dump(2) + "\n";
}

std::string format_histogram_csv(const std::vector<pit::HistogramBin>& bins) {
    std::ostringstream os;
    os.precision(17);
    pit::write_histogram_csv(os, bins);
    return os.str();
}

std::string format_reliability_csv(const std::vector<pit::ReliabilityBin>& bins) {
    std::ostringstream os;
    os.precision(17);
    pit::write_reliability_csv(os, bins);
    return os.str();
}

std::string histogram_svg(const std::vector<pit::HistogramBin>& bins, std::string_view title) {
    constexpr double width = 400.0, height = 260.0, margin = 30.0;
    std::size_t total = 0, peak = 0;
    for (const auto& b : bins) {
        total += b.count;
        peak = std::max(peak, b.count);
    }
    const double uniform = bins.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(bins.size());
    const double top = std::max(static_cast<double>(peak), uniform) * 1.1;
    const double plot_w = width - 2.0 * margin, plot_h = height - 2.0 * margin;
    auto y_of = [&](double v) { return height - margin - (top > 0.0 ? v / top * plot_h : 0.0); };

    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", width, height);
    os << buf;
    std::string t(title);
    for (auto& ch : t)
        if (ch == '<' || ch == '>' || ch == '&') ch = '_';
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">%s</text>\n",
                  width / 2.0, t.c_str());
    os << buf;
    for (const auto& b : bins) {
        const double x0 = margin + b.lo * plot_w;
        const double x1 = margin + b.hi * plot_w;
        const double y = y_of(static_cast<double>(b.count));
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#9ab\" stroke=\"#345\"/>\n", x0,
                      y, x1 - x0, height - margin - y);
        os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.2f\" x2=\"%.1f\" y2=\"%.2f\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n",
                  margin, y_of(uniform), width - margin, y_of(uniform));
    os << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#000\"/>\n", margin,
                  height - margin, width - margin, height - margin);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">0</text>\n", margin - 3.0, height - margin + 14.0);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">1</text>\n", width - margin - 3.0,
                  height - margin + 14.0);
    os << buf << "</svg>\n";
    return os.str();
}

}  // namespace poolcast::io
