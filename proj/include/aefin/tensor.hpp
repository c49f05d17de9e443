#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace aefin {

/// Dense row-major real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Batch x channels x length tensor of time-domain samples. Each (batch, channel)
/// pair is a contiguous row of `length()` values.
class SeriesWindow {
public:
    SeriesWindow() = default;
    SeriesWindow(std::size_t batch, std::size_t channels, std::size_t length, double fill = 0.0)
        : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

    std::size_t batch() const { return batch_; }
    std::size_t channels() const { return channels_; }
    std::size_t length() const { return length_; }
    std::size_t rows() const { return batch_ * channels_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t b, std::size_t c, std::size_t t) {
        return data_[(b * channels_ + c) * length_ + t];
    }
    double operator()(std::size_t b, std::size_t c, std::size_t t) const {
        return data_[(b * channels_ + c) * length_ + t];
    }

    std::span<double> row(std::size_t b, std::size_t c) {
        return {data_.data() + (b * channels_ + c) * length_, length_};
    }
    std::span<const double> row(std::size_t b, std::size_t c) const {
        return {data_.data() + (b * channels_ + c) * length_, length_};
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const SeriesWindow& other) const {
        return batch_ == other.batch_ && channels_ == other.channels_ && length_ == other.length_;
    }

    std::string shape_string() const;

    bool operator==(const SeriesWindow&) const = default;

private:
    std::size_t batch_ = 0;
    std::size_t channels_ = 0;
    std::size_t length_ = 0;
    std::vector<double> data_;
};

/// View the (batch, channel) rows of a window as a (B*C) x L matrix copy.
Matrix as_row_matrix(const SeriesWindow& w);
SeriesWindow from_row_matrix(const Matrix& m, std::size_t batch, std::size_t channels);

/// Concatenate along the time axis: out[b][c] = [a[b][c] | b[b][c]].
SeriesWindow concat_time(const SeriesWindow& first, const SeriesWindow& second);

/// Selects batch elements by index, in the given order.
SeriesWindow gather_batch(const SeriesWindow& w, std::span<const std::size_t> indices);

void require_same_shape(const SeriesWindow& a, const SeriesWindow& b, const char* context);

} // namespace aefin
