#pragma once

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "trace.hpp"

namespace regnewton {

/// Sparse LIBSVM dataset. Feature indices are 1-based and strictly increasing
/// within a row; labels are in {0, 1}.
struct SparseDataset {
    struct Entry {
        std::size_t index = 0;
        double value = 0.0;
        bool operator==(const Entry&) const = default;
    };

    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::vector<Entry>> rows;
    std::vector<double> labels;

    bool operator==(const SparseDataset&) const = default;
};

struct LibsvmOptions {
    std::optional<std::size_t> dim; // overrides the inferred max index
    // Maps any two distinct labels {lo < hi} to {0, 1}. Needed for datasets
    // such as mushrooms that use {1, 2}.
    bool remap_two_class = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view tok) {
    if (tok.empty())
        return std::nullopt;
    const std::string buf(tok);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || errno == ERANGE)
        return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(std::string_view tok) {
    if (tok.empty())
        return std::nullopt;
    const std::string buf(tok);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(buf.c_str(), &end, 10);
    if (end != buf.c_str() + buf.size() || errno == ERANGE)
        return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t')
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string format_real(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace detail

/// Parses "<label> <idx>:<val> ..." lines. '#' starts a comment, blank lines
/// are skipped and labels -1/+1 become 0/1.
inline SparseDataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {}) {
    SparseDataset ds;
    std::vector<std::size_t> line_of_row;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty())
            continue;

        const auto tokens = detail::split_ws(view);
        const auto label = detail::parse_double(tokens[0]);
        if (!label)
            throw ParseError(lineno, "bad label '" + std::string(tokens[0]) + "'");

        std::vector<SparseDataset::Entry> row;
        for (std::size_t t = 1; t < tokens.size(); ++t) {
            const auto tok = tokens[t];
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos)
                throw ParseError(lineno, "expected <index>:<value>, got '" + std::string(tok) + "'");
            const auto idx = detail::parse_int(tok.substr(0, colon));
            const auto val = detail::parse_double(tok.substr(colon + 1));
            if (!idx || !val)
                throw ParseError(lineno, "malformed feature '" + std::string(tok) + "'");
            if (*idx < 1)
                throw ParseError(lineno, "feature index must be >= 1, got " + std::to_string(*idx));
            const auto index = static_cast<std::size_t>(*idx);
            if (!row.empty() && index <= row.back().index)
                throw ParseError(lineno, "feature indices must be strictly increasing");
            row.push_back({index, *val});
            ds.d = std::max(ds.d, index);
        }
        ds.rows.push_back(std::move(row));
        ds.labels.push_back(*label);
        line_of_row.push_back(lineno);
    }
    ds.n = ds.rows.size();

    if (opts.remap_two_class) {
        const std::set<double> distinct(ds.labels.begin(), ds.labels.end());
        if (distinct.size() > 2)
            throw NonBinaryLabel("dataset has " + std::to_string(distinct.size()) + " distinct labels");
        const double hi = distinct.empty() ? 1.0 : *distinct.rbegin();
        for (auto& y : ds.labels)
            y = (distinct.size() == 2 && y == hi) || (distinct.size() == 1 && y > 0.0) ? 1.0 : 0.0;
    } else {
        for (std::size_t i = 0; i < ds.n; ++i) {
            double& y = ds.labels[i];
            if (y == -1.0)
                y = 0.0;
            else if (y != 0.0 && y != 1.0)
                throw NonBinaryLabel("line " + std::to_string(line_of_row[i]) + ": label " +
                                     detail::format_real(y) + " is not in {-1, 0, +1}");
        }
    }

    if (opts.dim) {
        if (*opts.dim < ds.d)
            throw ParseError(lineno, "dimension override " + std::to_string(*opts.dim) +
                                         " is below the max feature index " + std::to_string(ds.d));
        ds.d = *opts.dim;
    }
    return ds;
}

inline SparseDataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {}) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open dataset '" + path + "'");
    return parse_libsvm(in, opts);
}

/// Writes the dataset back in LIBSVM form with 17 significant digits.
inline void serialize_libsvm(const SparseDataset& ds, std::ostream& out) {
    for (std::size_t i = 0; i < ds.n; ++i) {
        out << detail::format_real(ds.labels[i]);
        for (const auto& e : ds.rows[i])
            out << ' ' << e.index << ':' << detail::format_real(e.value);
        out << '\n';
    }
}

/// Dense n x d feature matrix (0-based columns) and label vector.
inline std::pair<Matrix, Vector> to_dense(const SparseDataset& ds) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(ds.n), static_cast<Eigen::Index>(ds.d));
    Vector b(static_cast<Eigen::Index>(ds.n));
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (const auto& e : ds.rows[i])
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index - 1)) = e.value;
        b[static_cast<Eigen::Index>(i)] = ds.labels[i];
    }
    return {std::move(a), std::move(b)};
}

/// Standard-normal a_i (rows) and b_i from a seeded Mersenne twister.
inline std::pair<Matrix, Vector> gen_logsumexp_instance(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (n < 1 || d < 1)
        throw DimensionMismatch("gen_logsumexp_instance: n and d must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            a(i, j) = normal(rng);
    Vector b(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < b.size(); ++i)
        b[i] = normal(rng);
    return {std::move(a), std::move(b)};
}

/// Synthetic binary classification data: Gaussian features scaled by
/// feature_scale, labels drawn from a logistic model around a random
/// direction.
inline std::pair<Matrix, Vector> gen_logistic_instance(std::size_t n, std::size_t d, std::uint64_t seed,
                                                       double feature_scale = 1.0) {
    if (n < 1 || d < 1)
        throw DimensionMismatch("gen_logistic_instance: n and d must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector w(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < w.size(); ++j)
        w[j] = normal(rng);
    w /= std::sqrt(static_cast<double>(d));
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Vector b(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            a(i, j) = feature_scale * normal(rng);
        const double p = 1.0 / (1.0 + std::exp(-a.row(i).dot(w) / feature_scale));
        b[i] = unif(rng) < p ? 1.0 : 0.0;
    }
    return {std::move(a), std::move(b)};
}

// Trace CSV ------------------------------------------------------------------

inline constexpr std::string_view kTraceHeader =
    "k,f,grad_norm,lambda,step_norm,h_k,inner_count,newton_steps_cum,wall_ms";
inline constexpr std::string_view kLMTraceHeader = "k,residual_norm,grad_norm,lambda,step_norm,c_k";

inline void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out) {
    out << kTraceHeader << '\n';
    for (const auto& r : trace) {
        out << r.k << ',' << detail::format_real(r.f) << ',' << detail::format_real(r.grad_norm) << ','
            << detail::format_real(r.lambda) << ',' << detail::format_real(r.step_norm) << ','
            << detail::format_real(r.h_k) << ',' << r.inner_count << ',' << r.newton_steps_cum << ','
            << detail::format_real(r.wall_ms) << '\n';
    }
}

inline void write_trace_csv(const std::vector<LMTraceRecord>& trace, std::ostream& out) {
    out << kLMTraceHeader << '\n';
    for (const auto& r : trace) {
        out << r.k << ',' << detail::format_real(r.residual_norm) << ',' << detail::format_real(r.grad_norm) << ','
            << detail::format_real(r.lambda) << ',' << detail::format_real(r.step_norm) << ','
            << detail::format_real(r.c_k) << '\n';
    }
}

template <class Record>
void write_trace_csv(const std::vector<Record>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write trace '" + path + "'");
    write_trace_csv(trace, out);
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

template <class Record, class Fill>
std::vector<Record> read_csv(std::istream& in, std::string_view header, std::size_t columns, Fill fill) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != header)
        throw SchemaError("trace header mismatch: expected '" + std::string(header) + "'");
    std::vector<Record> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto view = trim(line);
        if (view.empty())
            continue;
        const auto cells = split_csv(view);
        if (cells.size() != columns)
            throw SchemaError("line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                              " columns, got " + std::to_string(cells.size()));
        auto real = [&](std::size_t i) {
            const auto v = parse_double(cells[i]);
            if (!v)
                throw SchemaError("line " + std::to_string(lineno) + ": bad number '" + std::string(cells[i]) + "'");
            return *v;
        };
        auto integer = [&](std::size_t i) {
            const auto v = parse_int(cells[i]);
            if (!v)
                throw SchemaError("line " + std::to_string(lineno) + ": bad integer '" + std::string(cells[i]) + "'");
            return *v;
        };
        out.push_back(fill(real, integer));
    }
    return out;
}

} // namespace detail

inline std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    return detail::read_csv<TraceRecord>(in, kTraceHeader, 9, [](auto real, auto integer) {
        TraceRecord r;
        r.k = static_cast<int>(integer(0));
        r.f = real(1);
        r.grad_norm = real(2);
        r.lambda = real(3);
        r.step_norm = real(4);
        r.h_k = real(5);
        r.inner_count = static_cast<int>(integer(6));
        r.newton_steps_cum = static_cast<long>(integer(7));
        r.wall_ms = real(8);
        return r;
    });
}

inline std::vector<LMTraceRecord> read_lm_trace_csv(std::istream& in) {
    return detail::read_csv<LMTraceRecord>(in, kLMTraceHeader, 6, [](auto real, auto integer) {
        LMTraceRecord r;
        r.k = static_cast<int>(integer(0));
        r.residual_norm = real(1);
        r.grad_norm = real(2);
        r.lambda = real(3);
        r.step_norm = real(4);
        r.c_k = real(5);
        return r;
    });
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open trace '" + path + "'");
    return read_trace_csv(in);
}

inline std::vector<LMTraceRecord> read_lm_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open trace '" + path + "'");
    return read_lm_trace_csv(in);
}

} // namespace regnewton
