#include "rbls/datagen.hpp"

#include "rbls/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <string_view>

namespace rbls {

namespace {

void check_corruption_params(std::size_t n, std::size_t p, const CorruptionParams& c) {
    if (n == 0 || p == 0) throw Error(ErrorCode::InvalidParams, "n and p must be positive");
    if (!(c.pi >= 0.0 && c.pi <= 1.0)) throw Error(ErrorCode::InvalidParams, "pi must lie in [0, 1]");
    if (!(c.sigma_x > 0.0) || !(c.sigma_w >= 0.0) || !(c.sigma_eps >= 0.0) || !std::isfinite(c.sigma_x) ||
        !std::isfinite(c.sigma_w) || !std::isfinite(c.sigma_eps))
        throw Error(ErrorCode::InvalidParams, "scales must be finite, sigma_x > 0, sigma_w and sigma_eps >= 0");
}

// Rows are generated one at a time from a single stream, so the first k rows
// of a problem do not depend on n. Rows at or beyond `corruptible_rows` are
// never corrupted.
RegressionProblem assemble(std::size_t n, std::size_t p, const CorruptionParams& c, Seed seed,
                           std::size_t corruptible_rows,
                           const std::function<void(Rng&, std::span<double>)>& draw_row) {
    Rng rng(seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::bernoulli_distribution corrupt(c.pi);

    GroundTruth t;
    t.sigma_x = c.sigma_x;
    t.sigma_w = c.sigma_w;
    t.sigma_eps = c.sigma_eps;
    t.pi = c.pi;
    t.beta.resize(p);
    for (double& b : t.beta) b = std_normal(rng);
    t.x = DenseMatrix(n, p);
    t.w = DenseMatrix(n, p);
    t.noise.resize(n);
    t.corruption_mask.assign(n, 0);

    for (std::size_t i = 0; i < n; ++i) {
        draw_row(rng, t.x.row(i));
        for (double& v : t.w.row(i)) v = c.sigma_w * std_normal(rng);
        const bool u = corrupt(rng);
        t.corruption_mask[i] = (u && i < corruptible_rows) ? 1 : 0;
        t.noise[i] = c.sigma_eps * std_normal(rng);
    }

    RegressionProblem prob;
    prob.z = regenerate_design(t);
    prob.y = regenerate_response(t);
    prob.truth = std::move(t);
    return prob;
}

RegressionProblem take_rows(const RegressionProblem& src, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = begin; i < end; ++i) idx[i - begin] = i;
    RegressionProblem out;
    out.z = src.z.gather_rows(idx);
    out.y.assign(src.y.begin() + static_cast<std::ptrdiff_t>(begin), src.y.begin() + static_cast<std::ptrdiff_t>(end));
    if (src.truth) {
        const auto& s = *src.truth;
        GroundTruth t = s;
        t.x = s.x.gather_rows(idx);
        t.w = s.w.gather_rows(idx);
        t.noise.assign(s.noise.begin() + static_cast<std::ptrdiff_t>(begin),
                       s.noise.begin() + static_cast<std::ptrdiff_t>(end));
        t.corruption_mask.assign(s.corruption_mask.begin() + static_cast<std::ptrdiff_t>(begin),
                                 s.corruption_mask.begin() + static_cast<std::ptrdiff_t>(end));
        out.truth = std::move(t);
    }
    return out;
}

std::function<void(Rng&, std::span<double>)> regime_row(LeverageRegime regime) {
    return [regime](Rng& rng, std::span<double> x) {
        std::normal_distribution<double> std_normal(0.0, 1.0);
        for (double& v : x) v = std_normal(rng);
        if (regime == LeverageRegime::Gaussian) return;
        const double df = regime == LeverageRegime::T3 ? 3.0 : 1.0;
        std::chi_squared_distribution<double> chi(df);
        const double scale = 1.0 / std::sqrt(chi(rng) / df);
        for (double& v : x) v *= scale;
    };
}

SplitProblem split(const RegressionProblem& all, std::size_t n_train) {
    return {take_rows(all, 0, n_train), take_rows(all, n_train, all.rows())};
}

} // namespace

DenseMatrix regenerate_design(const GroundTruth& t) {
    DenseMatrix z = t.x;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (!t.corruption_mask[i]) continue;
        auto zi = z.row(i);
        auto wi = t.w.row(i);
        for (std::size_t j = 0; j < zi.size(); ++j) zi[j] += wi[j];
    }
    return z;
}

DenseVector regenerate_response(const GroundTruth& t) {
    DenseVector y = matvec(t.x, t.beta);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t.noise[i];
    return y;
}

RegressionProblem gen_corrupted(std::size_t n, std::size_t p, const CorruptionParams& params, Seed seed) {
    check_corruption_params(n, p, params);
    const double sx = params.sigma_x;
    return assemble(n, p, params, seed, n, [sx](Rng& rng, std::span<double> x) {
        std::normal_distribution<double> g(0.0, sx);
        for (double& v : x) v = g(rng);
    });
}

SplitProblem gen_corrupted_split(std::size_t n_train, std::size_t n_test, std::size_t p,
                                 const CorruptionParams& params, Seed seed, bool corrupt_test) {
    const std::size_t n = n_train + n_test;
    check_corruption_params(n, p, params);
    const double sx = params.sigma_x;
    auto all = assemble(n, p, params, seed, corrupt_test ? n : n_train, [sx](Rng& rng, std::span<double> x) {
        std::normal_distribution<double> g(0.0, sx);
        for (double& v : x) v = g(rng);
    });
    return split(all, n_train);
}

RegressionProblem gen_leverage_regime(std::size_t n, std::size_t p, LeverageRegime regime, Seed seed) {
    if (p == 0 || n <= p) throw Error(ErrorCode::InvalidParams, "leverage regimes need n > p > 0");
    const CorruptionParams clean{0.0, 1.0, 0.0, 0.1};
    return assemble(n, p, clean, seed, n, regime_row(regime));
}

SplitProblem gen_leverage_split(std::size_t n_train, std::size_t n_test, std::size_t p, LeverageRegime regime,
                                Seed seed) {
    if (p == 0 || n_train <= p) throw Error(ErrorCode::InvalidParams, "leverage regimes need n > p > 0");
    const CorruptionParams clean{0.0, 1.0, 0.0, 0.1};
    return split(assemble(n_train + n_test, p, clean, seed, 0, regime_row(regime)), n_train);
}

std::optional<LeverageRegime> parse_regime(std::string_view name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "gaussian") return LeverageRegime::Gaussian;
    if (s == "t3" || s == "t-3") return LeverageRegime::T3;
    if (s == "t1" || s == "t-1") return LeverageRegime::T1;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Airline CSV
// ---------------------------------------------------------------------------

std::string OdDictionary::key(const std::string& origin, const std::string& dest) { return origin + '\x1f' + dest; }

std::size_t OdDictionary::insert(const std::string& origin, const std::string& dest) {
    auto [it, added] = index_.try_emplace(key(origin, dest), pairs_.size());
    if (added) pairs_.emplace_back(origin, dest);
    return it->second;
}

std::optional<std::size_t> OdDictionary::encode(const std::string& origin, const std::string& dest) const {
    auto it = index_.find(key(origin, dest));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::pair<std::string, std::string> OdDictionary::decode(std::size_t index) const {
    if (index >= pairs_.size()) throw Error(ErrorCode::InvalidInput, "OD index out of range");
    return pairs_[index];
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
        out.emplace_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA"; }

double parse_number(const std::string& s, std::size_t line, std::string_view column) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": column " + std::string(column) + " is not a number: '" + s + "'");
    return v;
}

struct FlightRow {
    std::string origin;
    std::string dest;
    double distance;
    double delay;
};

} // namespace

AirlineData load_airline_csv(const std::filesystem::path& path, std::size_t n_train, std::size_t n_test,
                             const AirlineFilter& filter) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::SchemaError, "missing header row in " + path.string());
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    const auto header = split_csv_line(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        return std::nullopt;
    };

    std::vector<std::string> required = {"Origin", "Dest", "Distance", "ArrDelay"};
    if (!filter.carrier.empty()) required.emplace_back("UniqueCarrier");
    if (filter.year != 0) required.emplace_back("Year");
    if (filter.month != 0) required.emplace_back("Month");
    std::string missing;
    for (const auto& r : required)
        if (!column(r)) missing += (missing.empty() ? "" : ", ") + r;
    if (!missing.empty()) throw Error(ErrorCode::SchemaError, "missing columns: " + missing);

    const std::size_t c_origin = *column("Origin"), c_dest = *column("Dest");
    const std::size_t c_dist = *column("Distance"), c_delay = *column("ArrDelay");

    AirlineData data;
    std::vector<FlightRow> rows;
    const std::size_t wanted = n_train + n_test;
    std::size_t line_no = 1;
    while (rows.size() < wanted && std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(f.size()));
        if (!filter.carrier.empty() && f[*column("UniqueCarrier")] != filter.carrier) continue;
        if (filter.year != 0 && (is_missing(f[*column("Year")]) ||
                                 parse_number(f[*column("Year")], line_no, "Year") != filter.year))
            continue;
        if (filter.month != 0 && (is_missing(f[*column("Month")]) ||
                                  parse_number(f[*column("Month")], line_no, "Month") != filter.month))
            continue;
        if (is_missing(f[c_origin]) || is_missing(f[c_dest]) || is_missing(f[c_dist]) || is_missing(f[c_delay])) {
            ++data.dropped_rows;
            continue;
        }
        rows.push_back({f[c_origin], f[c_dest], parse_number(f[c_dist], line_no, "Distance"),
                        parse_number(f[c_delay], line_no, "ArrDelay")});
    }
    if (rows.empty()) throw Error(ErrorCode::SchemaError, "no usable rows in " + path.string());

    const std::size_t train_rows = std::min(n_train, rows.size());
    const std::size_t test_rows = rows.size() - train_rows;

    double mean = 0.0;
    for (std::size_t i = 0; i < train_rows; ++i) {
        data.dictionary.insert(rows[i].origin, rows[i].dest);
        mean += rows[i].distance;
    }
    mean /= static_cast<double>(train_rows);
    double ss = 0.0;
    for (std::size_t i = 0; i < train_rows; ++i) ss += (rows[i].distance - mean) * (rows[i].distance - mean);
    double sd = train_rows > 1 ? std::sqrt(ss / static_cast<double>(train_rows - 1)) : 0.0;
    if (!(sd > 0.0)) sd = 1.0;
    data.distance_mean = mean;
    data.distance_sd = sd;

    const std::size_t k = data.dictionary.size();
    auto encode_block = [&](std::size_t begin, std::size_t count) {
        RegressionProblem prob;
        prob.z = DenseMatrix(count, k + 1);
        prob.y.resize(count);
        for (std::size_t r = 0; r < count; ++r) {
            const auto& row = rows[begin + r];
            if (auto idx = data.dictionary.encode(row.origin, row.dest)) prob.z(r, *idx) = 1.0;
            prob.z(r, k) = (row.distance - mean) / sd;
            prob.y[r] = row.delay;
        }
        return prob;
    };
    data.split.train = encode_block(0, train_rows);
    data.split.test = encode_block(train_rows, test_rows);
    return data;
}

} // namespace rbls
