#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace signcraft {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major n-dimensional array. Images use NCHW.
///
/// The element type is a template parameter so the same layer code can run in
/// 32-bit for training and in 64-bit for finite-difference gradient checks.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    /// Throws ShapeError for an empty shape or a zero dimension.
    explicit BasicTensor(Shape shape, T fill = T{0});
    BasicTensor(Shape shape, std::vector<T> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    T* raw() noexcept { return data_.data(); }
    const T* raw() const noexcept { return data_.data(); }

    T& operator[](std::size_t offset) noexcept { return data_[offset]; }
    const T& operator[](std::size_t offset) const noexcept { return data_[offset]; }

    /// Row-major multi-index access; bounds are checked.
    T& at(std::initializer_list<std::size_t> index);
    const T& at(std::initializer_list<std::size_t> index) const;

    std::size_t offset_of(std::initializer_list<std::size_t> index) const;
    std::vector<std::size_t> strides() const;

    /// Same data, new shape with identical element count.
    BasicTensor reshaped(Shape shape) const&;
    BasicTensor reshaped(Shape shape) &&;

    void fill(T value);

    template <typename U>
    BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Shape-checked constructor mirroring the library's tensor_new operation.
template <typename T = float>
BasicTensor<T> tensor_new(const Shape& shape, T fill) {
    return BasicTensor<T>(shape, fill);
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace signcraft
