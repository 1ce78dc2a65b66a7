#include <algorithm>
#include <cmath>

#include "lexiport/error.hpp"
#include "lexiport/kernels.hpp"

namespace lexiport::kernels {

namespace {

double norm_of(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

bool skipped(std::span<const std::uint8_t> mask, std::size_t i) {
    return !mask.empty() && mask[i] != 0;
}

bool ranks_before(const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.index < b.index;
}

void topk_row(std::span<const float> q, double qnorm, const Matrix& keys,
              const std::vector<double>& key_norms, const std::vector<std::size_t>& live_keys,
              std::size_t k, std::vector<Neighbor>& scratch, std::vector<Neighbor>& out) {
    scratch.clear();
    for (std::size_t key : live_keys) {
        const auto r = keys.row(key);
        double dot = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) dot += static_cast<double>(q[j]) * r[j];
        const double denom = qnorm * key_norms[key];
        double c = denom > 0.0 ? dot / denom : 0.0;
        c = std::clamp(c, -1.0, 1.0);
        scratch.push_back({key, c});
    }
    const std::size_t take = std::min(k, scratch.size());
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take),
                      scratch.end(), ranks_before);
    out.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take));
}

}  // namespace

std::vector<std::vector<Neighbor>> topk_cosine(const Matrix& queries,
                                               std::span<const std::uint8_t> query_skip,
                                               const Matrix& keys,
                                               std::span<const std::uint8_t> key_skip,
                                               std::size_t k, Exec exec) {
    if (queries.cols() != keys.cols())
        throw DimensionError("query dim " + std::to_string(queries.cols()) + " vs key dim " +
                             std::to_string(keys.cols()));
    if ((!query_skip.empty() && query_skip.size() != queries.rows()) ||
        (!key_skip.empty() && key_skip.size() != keys.rows()))
        throw ContractError("skip mask length differs from row count");

    std::vector<double> key_norms(keys.rows());
    std::vector<std::size_t> live_keys;
    for (std::size_t i = 0; i < keys.rows(); ++i) {
        key_norms[i] = norm_of(keys.row(i));
        if (!skipped(key_skip, i)) live_keys.push_back(i);
    }

    const auto n = static_cast<std::ptrdiff_t>(queries.rows());
    std::vector<std::vector<Neighbor>> result(queries.rows());
    if (exec == Exec::serial) {
        std::vector<Neighbor> scratch;
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            if (skipped(query_skip, i)) continue;
            const auto q = queries.row(i);
            topk_row(q, norm_of(q), keys, key_norms, live_keys, k, scratch, result[i]);
        }
        return result;
    }
#pragma omp parallel
    {
        std::vector<Neighbor> scratch;
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            if (skipped(query_skip, i)) continue;
            const auto q = queries.row(i);
            topk_row(q, norm_of(q), keys, key_norms, live_keys, k, scratch, result[i]);
        }
    }
    return result;
}

}  // namespace lexiport::kernels
