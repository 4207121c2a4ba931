#pragma once
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>
#include <celer/dataset.hpp>
#include <celer/errors.hpp>

namespace celer {

enum class LabelMode {
    Regression,     // labels kept as real values
    Classification, // label > 0 -> +1, otherwise -1
};

namespace detail {

inline bool parse_double(std::string_view s, double& out)
{
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_index(std::string_view s, long long& out)
{
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/**
 * Reads LIBSVM text: one sample per line, `label idx:val idx:val ...` with
 * 1-based feature indices in nondecreasing order. Blank lines are skipped.
 * Repeated indices on a line are summed; explicit zeros are not stored.
 *
 * @param   n_features  optional feature count; must be >= the largest index seen.
 */
inline Dataset parse_libsvm(std::istream& in,
                            LabelMode mode = LabelMode::Regression,
                            std::optional<Index> n_features = std::nullopt)
{
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> labels;
    long long max_index = 0;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const auto tokens = detail::split_ws(line);
        if (tokens.empty()) continue;

        double label;
        if (!detail::parse_double(tokens[0], label)) {
            throw ParseError(lineno, "non-numeric label '" + std::string(tokens[0]) + "'");
        }
        const Index row = static_cast<Index>(labels.size());
        labels.push_back(mode == LabelMode::Classification ? (label > 0 ? 1.0 : -1.0) : label);

        long long prev = 0;
        for (std::size_t k = 1; k < tokens.size(); ++k) {
            const auto tok = tokens[k];
            const auto colon = tok.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError(lineno, "expected idx:val, got '" + std::string(tok) + "'");
            }
            long long idx;
            double val;
            if (!detail::parse_index(tok.substr(0, colon), idx)) {
                throw ParseError(lineno, "non-numeric index in '" + std::string(tok) + "'");
            }
            if (idx <= 0) throw ParseError(lineno, "feature index must be >= 1");
            if (idx < prev) throw ParseError(lineno, "feature indices must be nondecreasing");
            if (!detail::parse_double(tok.substr(colon + 1), val)) {
                throw ParseError(lineno, "non-numeric value in '" + std::string(tok) + "'");
            }
            prev = idx;
            max_index = std::max(max_index, idx);
            if (val != 0.0) trip.emplace_back(row, static_cast<Index>(idx - 1), val);
        }
    }
    if (labels.empty()) throw ParseError(lineno, "empty LIBSVM stream");

    Index p = static_cast<Index>(max_index);
    if (n_features) {
        if (*n_features < p) {
            throw std::invalid_argument("n_features is smaller than the largest index in the file");
        }
        p = *n_features;
    }
    DesignMatrix::sparse_t X(static_cast<Index>(labels.size()), p);
    X.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(labels.data(), static_cast<Index>(labels.size()));
    Targets targets = mode == LabelMode::Classification ? Targets::classification(std::move(y))
                                                        : Targets::regression(std::move(y));
    return Dataset(DesignMatrix(std::move(X)), std::move(targets), "libsvm");
}

inline Dataset parse_libsvm(std::string_view text,
                            LabelMode mode = LabelMode::Regression,
                            std::optional<Index> n_features = std::nullopt)
{
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, mode, n_features);
}

/// Writes a single-task dataset in LIBSVM format (17 significant digits).
inline void write_libsvm(const Dataset& ds, std::ostream& out)
{
    if (ds.targets.q() != 1) throw std::invalid_argument("LIBSVM holds a single target column");
    // row-major view so each line is emitted in increasing feature order
    Eigen::SparseMatrix<double, Eigen::RowMajor, int> R;
    if (ds.X.is_sparse()) R = ds.X.sparse();
    else R = ds.X.dense().sparseView(0.0, 0.0);
    const auto& y = ds.targets.values();
    for (Index i = 0; i < ds.n(); ++i) {
        out << detail::format_double(y(i, 0));
        for (decltype(R)::InnerIterator it(R, i); it; ++it) {
            out << ' ' << (it.index() + 1) << ':' << detail::format_double(it.value());
        }
        out << '\n';
    }
}

/// Whitespace-separated dense matrix, one row per line (multitask targets).
inline Eigen::MatrixXd read_dense_matrix(std::istream& in)
{
    std::vector<double> values;
    Index cols = -1;
    Index rows = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tokens = detail::split_ws(line);
        if (tokens.empty()) continue;
        if (cols >= 0 && static_cast<Index>(tokens.size()) != cols) {
            throw ParseError(lineno, "row has " + std::to_string(tokens.size()) + " entries, expected "
                                         + std::to_string(cols));
        }
        cols = static_cast<Index>(tokens.size());
        for (auto tok : tokens) {
            double v;
            if (!detail::parse_double(tok, v)) {
                throw ParseError(lineno, "non-numeric entry '" + std::string(tok) + "'");
            }
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(lineno, "empty matrix stream");
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
}

} // namespace celer
