#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ksums/common.hpp"

namespace ksums {

// Immutable collection of n vectors in R^d with precomputed squared norms.
// Rows are stored as float32, either dense row-major or CSR sparse; all
// arithmetic against accumulators happens in double.
class Dataset {
public:
    Dataset() = default;

    static Dataset dense(std::size_t dim, std::vector<float> values,
                         std::vector<int> labels_true = {}) {
        if (dim < 1) throw DataError("dataset dimensionality must be >= 1");
        if (values.empty() || values.size() % dim != 0)
            throw DataError("dense value count " + std::to_string(values.size()) +
                            " is not a positive multiple of d=" + std::to_string(dim));
        Dataset ds;
        ds.n_ = values.size() / dim;
        ds.d_ = dim;
        ds.dense_ = std::move(values);
        ds.adopt_labels(std::move(labels_true));
        ds.check_finite_dense();
        ds.compute_sq_norms();
        return ds;
    }

    static Dataset sparse(std::size_t n, std::size_t dim,
                          std::vector<std::size_t> row_start,
                          std::vector<std::uint32_t> cols,
                          std::vector<float> vals,
                          std::vector<int> labels_true = {}) {
        if (n < 1 || dim < 1) throw DataError("sparse dataset needs n >= 1 and d >= 1");
        if (row_start.size() != n + 1 || row_start.front() != 0 ||
            row_start.back() != cols.size() || cols.size() != vals.size())
            throw DataError("inconsistent sparse row index");
        for (std::size_t i = 0; i < n; ++i)
            if (row_start[i] > row_start[i + 1])
                throw DataError("sparse row starts must be non-decreasing");
        for (std::size_t p = 0; p < cols.size(); ++p) {
            if (cols[p] >= dim)
                throw DataError("sparse column " + std::to_string(cols[p]) +
                                " out of range at entry " + std::to_string(p));
            if (!std::isfinite(vals[p]))
                throw DataError("non-finite sparse value at entry " + std::to_string(p));
        }
        Dataset ds;
        ds.n_ = n;
        ds.d_ = dim;
        ds.is_sparse_ = true;
        ds.row_start_ = std::move(row_start);
        ds.cols_ = std::move(cols);
        ds.vals_ = std::move(vals);
        ds.adopt_labels(std::move(labels_true));
        ds.compute_sq_norms();
        return ds;
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    bool is_sparse() const { return is_sparse_; }

    double sq_norm(std::size_t i) const { return sq_norms_[i]; }
    double total_sq_norm() const { return total_sq_norm_; }

    bool has_labels_true() const { return !labels_true_.empty(); }
    const std::vector<int>& labels_true() const { return labels_true_; }
    int class_count() const { return class_count_; }

    std::span<const float> dense_row(std::size_t i) const {
        KSUMS_REQUIRE(!is_sparse_, "dense_row on sparse dataset");
        return {dense_.data() + i * d_, d_};
    }

    // x_i' * v for a dense double accumulator of length d.
    double dot(std::size_t i, const double* v) const {
        double s = 0.0;
        if (!is_sparse_) {
            const float* x = dense_.data() + i * d_;
            for (std::size_t j = 0; j < d_; ++j) s += static_cast<double>(x[j]) * v[j];
        } else {
            for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
                s += static_cast<double>(vals_[p]) * v[cols_[p]];
        }
        return s;
    }

    // v += scale * x_i
    void axpy(std::size_t i, double scale, double* v) const {
        if (!is_sparse_) {
            const float* x = dense_.data() + i * d_;
            for (std::size_t j = 0; j < d_; ++j) v[j] += scale * static_cast<double>(x[j]);
        } else {
            for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
                v[cols_[p]] += scale * static_cast<double>(vals_[p]);
        }
    }

    // Densified copy of row i into out[0..d).
    void copy_row(std::size_t i, double* out) const {
        for (std::size_t j = 0; j < d_; ++j) out[j] = 0.0;
        axpy(i, 1.0, out);
    }

    std::vector<double> row_as_vector(std::size_t i) const {
        std::vector<double> out(d_);
        copy_row(i, out.data());
        return out;
    }

    // Scales every row to unit L2 norm. Zero-norm rows cannot be normalized.
    void l2_normalize() {
        for (std::size_t i = 0; i < n_; ++i) {
            const double nrm = std::sqrt(sq_norms_[i]);
            if (nrm == 0.0)
                throw DataError("cannot normalize zero-norm row " + std::to_string(i));
            const float inv = static_cast<float>(1.0 / nrm);
            if (!is_sparse_) {
                float* x = dense_.data() + i * d_;
                for (std::size_t j = 0; j < d_; ++j) x[j] *= inv;
            } else {
                for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
                    vals_[p] *= inv;
            }
        }
        compute_sq_norms();
    }

    // Cosine runs need every row to have a nonzero norm.
    void validate_for_metric(Metric metric) const {
        if (metric != Metric::Cosine) return;
        for (std::size_t i = 0; i < n_; ++i)
            if (sq_norms_[i] == 0.0)
                throw DataError("cosine metric rejects zero-norm row " + std::to_string(i));
    }

    double max_unit_norm_deviation() const {
        double dev = 0.0;
        for (double s : sq_norms_) dev = std::max(dev, std::abs(s - 1.0));
        return dev;
    }

private:
    void adopt_labels(std::vector<int> labels) {
        if (labels.empty()) return;
        if (labels.size() != n_)
            throw DataError("ground-truth label count does not match sample count");
        int max_class = -1;
        for (int c : labels) {
            if (c < 0) throw DataError("negative ground-truth class id");
            max_class = std::max(max_class, c);
        }
        labels_true_ = std::move(labels);
        class_count_ = max_class + 1;
    }

    void check_finite_dense() {
        for (std::size_t p = 0; p < dense_.size(); ++p)
            if (!std::isfinite(dense_[p]))
                throw DataError("non-finite value at row " + std::to_string(p / d_) +
                                ", column " + std::to_string(p % d_));
    }

    void compute_sq_norms() {
        sq_norms_.assign(n_, 0.0);
        if (!is_sparse_) {
            for (std::size_t i = 0; i < n_; ++i) {
                const float* x = dense_.data() + i * d_;
                double s = 0.0;
                for (std::size_t j = 0; j < d_; ++j)
                    s += static_cast<double>(x[j]) * static_cast<double>(x[j]);
                sq_norms_[i] = s;
            }
        } else {
            for (std::size_t i = 0; i < n_; ++i) {
                double s = 0.0;
                for (std::size_t p = row_start_[i]; p < row_start_[i + 1]; ++p)
                    s += static_cast<double>(vals_[p]) * static_cast<double>(vals_[p]);
                sq_norms_[i] = s;
            }
        }
        total_sq_norm_ = 0.0;
        for (double s : sq_norms_) total_sq_norm_ += s;
    }

    std::size_t n_ = 0;
    std::size_t d_ = 0;
    bool is_sparse_ = false;
    std::vector<float> dense_;             // n*d, row-major
    std::vector<std::size_t> row_start_;   // n+1
    std::vector<std::uint32_t> cols_;
    std::vector<float> vals_;
    std::vector<double> sq_norms_;
    double total_sq_norm_ = 0.0;
    std::vector<int> labels_true_;
    int class_count_ = 0;
};

}  // namespace ksums
