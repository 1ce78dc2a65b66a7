#include "lexiport/embed_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "lexiport/error.hpp"

namespace lexiport {

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

VectorTable::VectorTable(std::vector<std::string> tokens, Matrix vectors)
    : vectors_(0, vectors.cols()) {
    if (tokens.size() != vectors.rows())
        throw ContractError("token count differs from vector row count");
    vectors_.data().reserve(vectors.data().size());
    tokens_.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) add(std::move(tokens[i]), vectors.row(i));
}

void VectorTable::add(std::string token, std::span<const float> vector) {
    if (vector.size() != dim())
        throw DimensionError("vector for '" + token + "' has " + std::to_string(vector.size()) +
                             " components, table dim is " + std::to_string(dim()));
    for (float v : vector)
        if (!std::isfinite(v)) throw ContractError("non-finite component in vector for '" + token + "'");
    if (token.empty()) throw ContractError("empty token");
    if (!index_.emplace(token, tokens_.size()).second)
        throw ContractError("duplicate token '" + token + "'");
    tokens_.push_back(std::move(token));
    vectors_.append_row(vector);
}

std::span<const float> VectorTable::word_vector(std::string_view word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return {};
    return vectors_.row(it->second);
}

std::ptrdiff_t VectorTable::index_of(std::string_view word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::string format_float(float value) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
    if (ec != std::errc{}) throw ContractError("float formatting failed");
    return std::string(buf, end);
}

namespace {

bool parse_size(std::string_view s, std::size_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

VectorTable load_vec(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + name);

    std::string line;
    if (!std::getline(in, line)) throw FormatError(name, 1, "missing \"count dim\" header");
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    const auto sp = line.find(' ');
    std::size_t count = 0, dim = 0;
    if (sp == std::string::npos || !parse_size(std::string_view(line).substr(0, sp), count) ||
        !parse_size(std::string_view(line).substr(sp + 1), dim) || dim == 0)
        throw FormatError(name, 1, "header must be \"count dim\"");

    VectorTable table(dim);
    std::vector<float> values(dim);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        if (table.size() == count)
            throw FormatError(name, lineno, "more entries than the header count " + std::to_string(count));
        const auto tok_end = line.find(' ');
        if (tok_end == std::string::npos || tok_end == 0)
            throw FormatError(name, lineno, "expected token followed by values");
        const char* p = line.data() + tok_end;
        const char* end = line.data() + line.size();
        for (std::size_t j = 0; j < dim; ++j) {
            while (p < end && *p == ' ') ++p;
            auto [q, ec] = std::from_chars(p, end, values[j]);
            if (ec != std::errc{} || (q < end && *q != ' '))
                throw FormatError(name, lineno, "bad number in component " + std::to_string(j + 1));
            if (!std::isfinite(values[j]))
                throw FormatError(name, lineno, "non-finite value in component " + std::to_string(j + 1));
            p = q;
        }
        while (p < end && *p == ' ') ++p;
        if (p != end) throw FormatError(name, lineno, "more than " + std::to_string(dim) + " components");
        try {
            table.add(line.substr(0, tok_end), values);
        } catch (const Error& e) {
            throw FormatError(name, lineno, e.what());
        }
    }
    if (table.size() != count)
        throw FormatError(name, 0, "header announces " + std::to_string(count) + " entries, found " +
                                       std::to_string(table.size()));
    return table;
}

void save_vec(const VectorTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot create " + path.string());
    out << table.size() << ' ' << table.dim() << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << table.tokens()[i];
        for (float v : table.vectors().row(i)) out << ' ' << format_float(v);
        out << '\n';
    }
    if (!out.flush()) throw WriteError("write failed for " + path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path) {
    auto p = matrix_path;
    return p.replace_extension(".json");
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw WriteError("cannot create " + path.string());
        out.write(reinterpret_cast<const char*>(m.data().data()),
                  static_cast<std::streamsize>(m.data().size() * sizeof(float)));
        if (!out.flush()) throw WriteError("write failed for " + path.string());
    }
    const auto side = sidecar_path(path);
    std::ofstream out(side, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot create " + side.string());
    out << nlohmann::json{{"rows", m.rows()}, {"dim", m.cols()}}.dump() << '\n';
    if (!out.flush()) throw WriteError("write failed for " + side.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
    const auto side = sidecar_path(path);
    std::ifstream meta(side, std::ios::binary);
    if (!meta) throw StreamError("cannot open matrix sidecar " + side.string());
    std::size_t rows = 0, dim = 0;
    try {
        const auto j = nlohmann::json::parse(meta);
        rows = j.at("rows").get<std::size_t>();
        dim = j.at("dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(side.string(), 0, e.what());
    }
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw StreamError("cannot open matrix " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != rows * dim * sizeof(float))
        throw FormatError(path.string(), 0,
                          "size " + std::to_string(bytes) + " bytes does not match " +
                              std::to_string(rows) + "x" + std::to_string(dim) + " float32");
    in.seekg(0);
    Matrix m(rows, dim);
    in.read(reinterpret_cast<char*>(m.data().data()), static_cast<std::streamsize>(bytes));
    if (!in) throw StreamError("read failed for " + path.string());
    return m;
}

GaussianInit fit_gaussian(const Matrix& rows) {
    if (rows.rows() < 2)
        throw EstimationError("need at least 2 rows to fit a normal, got " + std::to_string(rows.rows()));
    const std::size_t d = rows.cols();
    GaussianInit g;
    g.mean.assign(d, 0.0);
    g.variance.assign(d, 0.0);
    g.source_row_count = rows.rows();
    // Welford, per column
    std::vector<double> m2(d, 0.0);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto r = rows.row(i);
        const double n = static_cast<double>(i + 1);
        for (std::size_t j = 0; j < d; ++j) {
            const double x = r[j];
            const double delta = x - g.mean[j];
            g.mean[j] += delta / n;
            m2[j] += delta * (x - g.mean[j]);
        }
    }
    for (std::size_t j = 0; j < d; ++j)
        g.variance[j] = std::max(0.0, m2[j] / static_cast<double>(rows.rows()));
    return g;
}

std::vector<float> sample_gaussian(const GaussianInit& g, Rng& rng) {
    std::vector<float> out(g.mean.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double z = rng.normal();
        out[j] = static_cast<float>(g.variance[j] == 0.0 ? g.mean[j]
                                                         : g.mean[j] + std::sqrt(g.variance[j]) * z);
    }
    return out;
}

}  // namespace lexiport
