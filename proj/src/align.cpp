#include "lexiport/align.hpp"

#include <fstream>
#include <set>

#include <Eigen/SVD>

#include "lexiport/corpus_io.hpp"
#include "lexiport/error.hpp"
#include "lexiport/utf8.hpp"

namespace lexiport {

Lexicon parse_lexicon(const std::filesystem::path& path) {
    const std::string name = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open lexicon " + name);
    Lexicon lex;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        try {
            utf8::validate(line);
        } catch (const DecodeError& e) {
            throw FormatError(name, lineno, e.what());
        }
        auto fields = split_whitespace(line);
        if (fields.empty() || fields.front().starts_with('#')) continue;
        if (fields.size() != 2)
            throw FormatError(name, lineno, "expected 2 fields, found " + std::to_string(fields.size()));
        std::pair<std::string, std::string> p{std::move(fields[0]), std::move(fields[1])};
        if (seen.insert(p).second) lex.pairs.push_back(std::move(p));
    }
    return lex;
}

OrthogonalMap fit_procrustes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionError("paired matrices differ in shape");
    if (x.rows() < 3)
        throw AlignmentError("need at least 3 usable pairs, have " + std::to_string(x.rows()));
    if (x.norm() == 0.0) throw AlignmentError("target-side matrix has rank 0");

    const Eigen::MatrixXd cross = x.transpose() * y;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    OrthogonalMap map;
    map.matrix = svd.matrixU() * svd.matrixV().transpose();
    map.fit_stats.pair_count = static_cast<std::size_t>(x.rows());
    map.fit_stats.residual = (x * map.matrix - y).norm();
    return map;
}

OrthogonalMap fit_alignment(const Lexicon& lexicon, const VectorLookup& source,
                            const VectorLookup& target, const AlignOptions& options) {
    if (source.dim() != target.dim())
        throw DimensionError("source dim " + std::to_string(source.dim()) + " vs target dim " +
                             std::to_string(target.dim()));
    const auto d = static_cast<Eigen::Index>(source.dim());
    std::vector<std::pair<std::span<const float>, std::span<const float>>> usable;
    for (const auto& [src, tgt] : lexicon.pairs) {
        auto sv = source.word_vector(src);
        auto tv = target.word_vector(tgt);
        if (!sv.empty() && !tv.empty()) usable.emplace_back(tv, sv);
    }
    if (usable.size() < 3)
        throw AlignmentError("only " + std::to_string(usable.size()) + " of " +
                             std::to_string(lexicon.pairs.size()) +
                             " lexicon pairs have vectors on both sides; need at least 3");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(usable.size()), d);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(usable.size()), d);
    for (std::size_t i = 0; i < usable.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < d; ++j) {
            x(r, j) = usable[i].first[static_cast<std::size_t>(j)];
            y(r, j) = usable[i].second[static_cast<std::size_t>(j)];
        }
    }
    if (options.normalize_before_align) {
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            if (const double n = x.row(r).norm(); n > 0) x.row(r) /= n;
            if (const double n = y.row(r).norm(); n > 0) y.row(r) /= n;
        }
    }
    OrthogonalMap map = fit_procrustes(x, y);
    if (usable.size() < source.dim())
        map.fit_stats.warnings.push_back("only " + std::to_string(usable.size()) +
                                         " usable pairs for dimension " +
                                         std::to_string(source.dim()) +
                                         "; the map is weakly determined");
    return map;
}

VectorTable apply_map(const OrthogonalMap& map, VectorTable table, kernels::Exec exec) {
    kernels::right_multiply_rows(table.vectors(), map.matrix, exec);
    return table;
}

EmbeddingModel apply_map(const OrthogonalMap& map, EmbeddingModel model, kernels::Exec exec) {
    model.transform_input([&](Matrix& input) { kernels::right_multiply_rows(input, map.matrix, exec); });
    return model;
}

void save_map(const OrthogonalMap& map, const std::filesystem::path& path) {
    const auto d = static_cast<std::size_t>(map.matrix.rows());
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m(i, j) = static_cast<float>(map.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    save_matrix(m, path);
}

OrthogonalMap load_map(const std::filesystem::path& path) {
    const Matrix m = load_matrix(path);
    if (m.rows() != m.cols()) throw FormatError(path.string(), 0, "map matrix is not square");
    OrthogonalMap map;
    map.matrix.resize(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            map.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return map;
}

}  // namespace lexiport
