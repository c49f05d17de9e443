#include "aefin/tensor.hpp"

#include "aefin/error.hpp"

#include <algorithm>

namespace aefin {

std::string SeriesWindow::shape_string() const {
    return std::to_string(batch_) + "x" + std::to_string(channels_) + "x" + std::to_string(length_);
}

Matrix as_row_matrix(const SeriesWindow& w) {
    Matrix m(w.rows(), w.length());
    std::copy(w.values().begin(), w.values().end(), m.values().begin());
    return m;
}

SeriesWindow from_row_matrix(const Matrix& m, std::size_t batch, std::size_t channels) {
    if (m.rows() != batch * channels) {
        throw ShapeMismatch("row matrix has " + std::to_string(m.rows()) + " rows, expected " +
                            std::to_string(batch * channels));
    }
    SeriesWindow w(batch, channels, m.cols());
    std::copy(m.values().begin(), m.values().end(), w.values().begin());
    return w;
}

SeriesWindow concat_time(const SeriesWindow& first, const SeriesWindow& second) {
    if (first.batch() != second.batch() || first.channels() != second.channels()) {
        throw ShapeMismatch("concat_time: " + first.shape_string() + " vs " + second.shape_string());
    }
    SeriesWindow out(first.batch(), first.channels(), first.length() + second.length());
    for (std::size_t b = 0; b < first.batch(); ++b) {
        for (std::size_t c = 0; c < first.channels(); ++c) {
            auto dst = out.row(b, c);
            auto a = first.row(b, c);
            auto s = second.row(b, c);
            std::copy(a.begin(), a.end(), dst.begin());
            std::copy(s.begin(), s.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
        }
    }
    return out;
}

SeriesWindow gather_batch(const SeriesWindow& w, std::span<const std::size_t> indices) {
    SeriesWindow out(indices.size(), w.channels(), w.length());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= w.batch()) throw InvalidInput("gather_batch: index out of range");
        for (std::size_t c = 0; c < w.channels(); ++c) {
            const auto src = w.row(indices[i], c);
            std::copy(src.begin(), src.end(), out.row(i, c).begin());
        }
    }
    return out;
}

void require_same_shape(const SeriesWindow& a, const SeriesWindow& b, const char* context) {
    if (!a.same_shape(b)) {
        throw ShapeMismatch(std::string(context) + ": " + a.shape_string() + " vs " + b.shape_string());
    }
}

} // namespace aefin
