#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace fsi {

using Vector = Eigen::VectorXd;

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    double value = 0.0;
};

/// Square matrix in compressed row storage. Column indices are sorted and
/// unique within each row.
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    SparseMatrix() = default;
    explicit SparseMatrix(Storage m) : data_(std::move(m)) { data_.makeCompressed(); }

    std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }
    std::size_t nonzeros() const { return static_cast<std::size_t>(data_.nonZeros()); }

    std::span<const int> row_offsets() const { return {data_.outerIndexPtr(), rows() + 1}; }
    std::span<const int> column_indices() const { return {data_.innerIndexPtr(), nonzeros()}; }
    std::span<const double> values() const { return {data_.valuePtr(), nonzeros()}; }

    double coeff(std::size_t r, std::size_t c) const
    {
        return data_.coeff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }

    Vector operator*(const Vector& x) const { return data_ * x; }

    /// Quadratic form x^T A y.
    double form(const Vector& x, const Vector& y) const { return x.dot(data_ * y); }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : values()) m = std::max(m, std::abs(v));
        return m;
    }

    SparseMatrix transpose() const { return SparseMatrix(Storage(data_.transpose())); }

    Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(data_); }

    const Storage& eigen() const { return data_; }

    friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) { return SparseMatrix(Storage(a.data_ + b.data_)); }
    friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) { return SparseMatrix(Storage(a.data_ - b.data_)); }
    friend SparseMatrix operator*(double s, const SparseMatrix& a) { return SparseMatrix(Storage(s * a.data_)); }
    friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) { return SparseMatrix(Storage(a.data_ * b.data_)); }

private:
    Storage data_;
};

/// Builds a rows x cols matrix; duplicate entries are summed.
inline SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> entries)
{
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.row >= rows || e.col >= cols) {
            throw std::out_of_range("from_triplets: entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                                    ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        t.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col), e.value);
    }
    SparseMatrix::Storage m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(t.begin(), t.end());
    return SparseMatrix(std::move(m));
}

inline SparseMatrix from_triplets(std::size_t n, std::span<const Triplet> entries) { return from_triplets(n, n, entries); }

inline SparseMatrix identity_matrix(std::size_t n)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, t);
}

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A content fingerprint of a matrix (FNV-1a over the CSR arrays).
inline std::uint64_t fingerprint(const SparseMatrix& a)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    const std::size_t n = a.rows();
    mix(&n, sizeof n);
    mix(a.row_offsets().data(), a.row_offsets().size_bytes());
    mix(a.column_indices().data(), a.column_indices().size_bytes());
    mix(a.values().data(), a.values().size_bytes());
    return h;
}

namespace detail {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class PivotedSparseLU : public Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> {
public:
    /// Smallest |pivot| of U; the diagonal blocks live in the supernodal L store.
    double min_abs_pivot() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < this->cols(); ++j) {
            bool found = false;
            for (SCMatrix::InnerIterator it(this->m_Lstore, j); it; ++it) {
                if (it.index() == j) {
                    m = std::min(m, std::abs(it.value()));
                    found = true;
                    break;
                }
            }
            if (!found) return 0.0;
        }
        return m;
    }
};

}  // namespace detail

/// Sparse LU with partial pivoting and a COLAMD fill-reducing ordering.
/// solve() is const but shares factor storage; concurrent solves against one
/// factorization must be serialized by the caller.
class Factorization {
public:
    static constexpr double kPivotTolerance = 1e-14;

    Factorization() = default;

    Factorization(const SparseMatrix& a, std::string label) : label_(std::move(label))
    {
        if (a.rows() != a.cols()) throw std::invalid_argument("factorize(" + label_ + "): matrix must be square");
        n_ = a.rows();
        fingerprint_ = fsi::fingerprint(a);
        if (n_ == 0) return;
        const double scale = a.max_abs();
        if (!(scale > 0.0)) throw SingularSystemError("singular system in step '" + label_ + "': zero matrix");
        matrix_ = a;
        lu_ = std::make_unique<detail::PivotedSparseLU>();
        detail::ColMatrix col(a.eigen());
        col.makeCompressed();
        lu_->analyzePattern(col);
        lu_->factorize(col);
        if (lu_->info() != Eigen::Success) {
            throw SingularSystemError("singular system in step '" + label_ + "': " + lu_->lastErrorMessage());
        }
        const double pivot = lu_->min_abs_pivot();
        if (pivot < kPivotTolerance * scale) {
            throw SingularSystemError("singular system in step '" + label_ + "': pivot " + std::to_string(pivot) +
                                      " below tolerance relative to max entry " + std::to_string(scale));
        }
    }

    Vector solve(const Vector& b) const
    {
        if (static_cast<std::size_t>(b.size()) != n_) throw std::invalid_argument("solve(" + label_ + "): size mismatch");
        if (n_ == 0) return Vector();
        Vector x = lu_->solve(b);
        // one step of iterative refinement takes the residual from ~1e-13 to round-off
        for (int k = 0; k < refinement_steps; ++k) x += lu_->solve(b - matrix_ * x);
        return x;
    }

    int refinement_steps = 1;

    std::size_t size() const { return n_; }
    std::uint64_t source_fingerprint() const { return fingerprint_; }
    const std::string& label() const { return label_; }

private:
    std::string label_;
    std::size_t n_ = 0;
    std::uint64_t fingerprint_ = 0;
    SparseMatrix matrix_;
    std::unique_ptr<detail::PivotedSparseLU> lu_;
};

inline Factorization factorize(const SparseMatrix& a, std::string label = "unnamed") { return Factorization(a, std::move(label)); }

/// A x = b with some unknowns prescribed. The reduced matrix over the free
/// unknowns is factored once; each solve moves the prescribed columns to the
/// right-hand side.
class ConstrainedSystem {
public:
    ConstrainedSystem() = default;

    ConstrainedSystem(const SparseMatrix& a, const std::vector<std::size_t>& constrained, std::string label)
        : n_(a.rows())
    {
        is_fixed_.assign(n_, 0);
        for (std::size_t d : constrained) is_fixed_[d] = 1;
        free_index_.assign(n_, -1);
        for (std::size_t i = 0; i < n_; ++i) {
            if (!is_fixed_[i]) {
                free_index_[i] = static_cast<long>(free_.size());
                free_.push_back(i);
            } else {
                fixed_index_.push_back(i);
            }
        }
        std::vector<long> fixed_pos(n_, -1);
        for (std::size_t k = 0; k < fixed_index_.size(); ++k) fixed_pos[fixed_index_[k]] = static_cast<long>(k);

        std::vector<Triplet> ff, fc;
        const auto off = a.row_offsets();
        const auto col = a.column_indices();
        const auto val = a.values();
        for (std::size_t r = 0; r < n_; ++r) {
            if (is_fixed_[r]) continue;
            const auto fr = static_cast<std::size_t>(free_index_[r]);
            for (int k = off[r]; k < off[r + 1]; ++k) {
                const auto c = static_cast<std::size_t>(col[static_cast<std::size_t>(k)]);
                const double v = val[static_cast<std::size_t>(k)];
                if (is_fixed_[c]) {
                    fc.push_back({fr, static_cast<std::size_t>(fixed_pos[c]), v});
                } else {
                    ff.push_back({fr, static_cast<std::size_t>(free_index_[c]), v});
                }
            }
        }
        reduced_ = from_triplets(free_.size(), ff);
        coupling_ = from_triplets(free_.size(), fixed_index_.size(), fc);
        lu_ = std::make_shared<Factorization>(reduced_, std::move(label));
    }

    /// values_fixed follows the order of constrained_dofs() passed at construction (sorted ascending).
    Vector solve(const Vector& b, const Vector& values_fixed) const
    {
        Vector bf(static_cast<Eigen::Index>(free_.size()));
        for (std::size_t k = 0; k < free_.size(); ++k) bf[static_cast<Eigen::Index>(k)] = b[static_cast<Eigen::Index>(free_[k])];
        if (!fixed_index_.empty()) bf -= coupling_ * values_fixed;
        const Vector xf = lu_->solve(bf);
        Vector x(static_cast<Eigen::Index>(n_));
        for (std::size_t k = 0; k < free_.size(); ++k) x[static_cast<Eigen::Index>(free_[k])] = xf[static_cast<Eigen::Index>(k)];
        for (std::size_t k = 0; k < fixed_index_.size(); ++k) {
            x[static_cast<Eigen::Index>(fixed_index_[k])] = values_fixed[static_cast<Eigen::Index>(k)];
        }
        return x;
    }

    /// Prescribed values gathered from a full-length vector.
    Vector gather_fixed(const Vector& full) const
    {
        Vector g(static_cast<Eigen::Index>(fixed_index_.size()));
        for (std::size_t k = 0; k < fixed_index_.size(); ++k) g[static_cast<Eigen::Index>(k)] = full[static_cast<Eigen::Index>(fixed_index_[k])];
        return g;
    }

    Vector solve(const Vector& b) const { return solve(b, Vector::Zero(static_cast<Eigen::Index>(fixed_index_.size()))); }

    const std::vector<std::size_t>& fixed() const { return fixed_index_; }
    std::size_t size() const { return n_; }
    const Factorization& factorization() const { return *lu_; }

private:
    std::size_t n_ = 0;
    std::vector<char> is_fixed_;
    std::vector<long> free_index_;
    std::vector<std::size_t> free_;
    std::vector<std::size_t> fixed_index_;
    SparseMatrix reduced_;
    SparseMatrix coupling_;
    std::shared_ptr<Factorization> lu_;
};

}  // namespace fsi
