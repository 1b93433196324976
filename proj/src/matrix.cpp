#include "licem/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace licem {

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for hashing: " + path);
    }
    std::uint64_t h = kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= kFnvPrime;
        }
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 shifted away from 0 so log() is safe.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw UsageError("Rng::below(0)");
    }
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = 0;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (static_cast<size_t>(r) * c != data.size()) {
        throw DimError("matrix data length does not match rows*cols");
    }
}

Matrix Matrix::full(int r, int c, double v) {
    Matrix m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
}

Matrix Matrix::row_vector(const std::vector<double>& v) {
    return Matrix(1, static_cast<int>(v.size()), v);
}

Matrix Matrix::column_vector(const std::vector<double>& v) {
    return Matrix(static_cast<int>(v.size()), 1, v);
}

Matrix Matrix::random_normal(int r, int c, Rng& rng, double stddev) {
    Matrix m(r, c);
    for (double& x : m.data) {
        x = rng.normal() * stddev;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

namespace {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows << "x" << m.cols;
    return os.str();
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimError("matmul shape mismatch: " + shape_str(a) + " * " + shape_str(b));
    }
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<size_t>(i) * out.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) {
                continue;
            }
            const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimError("add shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += b.data[i];
    }
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimError("sub shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] -= b.data[i];
    }
    return out;
}

Matrix mul(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimError("mul shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] *= b.data[i];
    }
    return out;
}

Matrix scale(const Matrix& a, double k) {
    Matrix out = a;
    for (double& x : out.data) {
        x *= k;
    }
    return out;
}

Matrix add_rowvec(const Matrix& x, const Matrix& bias) {
    if (bias.rows != 1 || bias.cols != x.cols) {
        throw DimError("add_rowvec bias shape mismatch: " + shape_str(x) + " + " + shape_str(bias));
    }
    Matrix out = x;
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) {
            out.at(i, j) += bias.at(0, j);
        }
    }
    return out;
}

Matrix mul_colbroadcast(const Matrix& x, const Matrix& s) {
    if (s.cols != 1 || s.rows != x.rows) {
        throw DimError("mul_colbroadcast shape mismatch: " + shape_str(x) + " * " + shape_str(s));
    }
    Matrix out = x;
    for (int i = 0; i < x.rows; ++i) {
        const double k = s.at(i, 0);
        for (int j = 0; j < x.cols; ++j) {
            out.at(i, j) *= k;
        }
    }
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

Matrix sigmoid(const Matrix& x) {
    Matrix out = x;
    for (double& v : out.data) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return out;
}

Matrix softmax_rows(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        double mx = x.at(i, 0);
        for (int j = 1; j < x.cols; ++j) {
            mx = std::max(mx, x.at(i, j));
        }
        double sum = 0.0;
        for (int j = 0; j < x.cols; ++j) {
            const double e = std::exp(x.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < x.cols; ++j) {
            out.at(i, j) /= sum;
        }
    }
    return out;
}

} // namespace licem
