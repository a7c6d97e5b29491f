#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ssfl/error.hpp"

namespace ssfl {

// Rows are samples, columns are feature dimensions throughout.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-class representative vectors, one row per class. Class c of an episode
// is row c; class_ids maps episode classes back to dataset class ids.
struct PrototypeSet {
    Matrix prototypes;           // C x d
    std::vector<int> class_ids;  // length C

    int num_classes() const { return static_cast<int>(prototypes.rows()); }
    int dim() const { return static_cast<int>(prototypes.cols()); }
};

// n x C class-score matrix. When `normalized`, each row is a probability
// distribution (sums to 1, entries >= 0).
struct SoftLabels {
    Matrix scores;
    bool normalized = false;

    int num_rows() const { return static_cast<int>(scores.rows()); }
    int num_classes() const { return static_cast<int>(scores.cols()); }
};

inline void check_finite(const Matrix& m, const std::string& name) {
    if (!m.allFinite()) throw input_error(name + ": non-finite entry");
}

inline void check_finite(const Vector& v, const std::string& name) {
    if (!v.allFinite()) throw input_error(name + ": non-finite entry");
}

inline void check_same_dim(const Matrix& a, const Matrix& b, const std::string& where) {
    if (a.cols() != b.cols())
        throw input_error(where + ": feature dimensions differ (" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
}

}  // namespace ssfl
