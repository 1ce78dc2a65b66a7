#include "lexiport/error.hpp"
#include "lexiport/kernels.hpp"

namespace lexiport::kernels {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void map_row(std::span<float> row, const RowMajor& map, std::vector<double>& acc) {
    const auto d = static_cast<Eigen::Index>(row.size());
    acc.assign(row.size(), 0.0);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double x = row[i];
        if (x == 0.0) continue;
        const double* m = map.data() + i * d;
        for (Eigen::Index j = 0; j < d; ++j) acc[j] += x * m[j];
    }
    for (Eigen::Index j = 0; j < d; ++j) row[j] = static_cast<float>(acc[j]);
}

}  // namespace

void right_multiply_rows(Matrix& rows, const Eigen::MatrixXd& map, Exec exec) {
    if (map.rows() != map.cols() || static_cast<std::size_t>(map.rows()) != rows.cols())
        throw DimensionError("map is " + std::to_string(map.rows()) + "x" +
                             std::to_string(map.cols()) + ", rows have width " +
                             std::to_string(rows.cols()));
    const RowMajor m = map;
    const auto n = static_cast<std::ptrdiff_t>(rows.rows());
    if (exec == Exec::serial) {
        std::vector<double> acc;
        for (std::ptrdiff_t i = 0; i < n; ++i) map_row(rows.row(i), m, acc);
        return;
    }
#pragma omp parallel
    {
        std::vector<double> acc;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) map_row(rows.row(i), m, acc);
    }
}

}  // namespace lexiport::kernels
