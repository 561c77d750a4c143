#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cistgcn/common.hpp"

namespace cistgcn {

template <typename T>
struct TensorData {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // empty until backward touches it
    bool requires_grad = false;
};

// Value-semantic handle over shared storage. All tensors are contiguous
// row-major; f32 is the training dtype, f64 the verification dtype.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, T value);
    static Tensor from_vector(Shape shape, std::vector<T> values);
    static Tensor scalar(T value) { return from_vector({1}, {value}); }

    bool defined() const { return static_cast<bool>(d_); }
    const Shape& shape() const { return d_->shape; }
    int ndim() const { return static_cast<int>(d_->shape.size()); }
    int64_t numel() const { return static_cast<int64_t>(d_->values.size()); }
    int64_t dim(int i) const { return d_->shape[static_cast<size_t>(i)]; }

    std::span<const T> values() const { return d_->values; }
    std::span<T> raw_values() { return d_->values; }  // init/optimizer only

    bool requires_grad() const { return d_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        d_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return !d_->grad.empty(); }
    std::span<const T> grad() const { return d_->grad; }
    std::vector<T>& grad_buffer() {
        if (d_->grad.empty()) d_->grad.assign(d_->values.size(), T(0));
        return d_->grad;
    }
    void zero_grad() { d_->grad.clear(); }

    T item() const {
        if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
        return d_->values[0];
    }

    T at(std::initializer_list<int64_t> idx) const {
        Shape st = strides_of(d_->shape);
        int64_t off = 0;
        size_t k = 0;
        for (int64_t i : idx) off += i * st[k++];
        return d_->values[static_cast<size_t>(off)];
    }

    Tensor detached() const {
        Tensor out = from_vector(d_->shape, d_->values);
        return out;
    }

    std::shared_ptr<TensorData<T>> impl() const { return d_; }

private:
    std::shared_ptr<TensorData<T>> d_;
};

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
    return full(std::move(shape), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
    Tensor t;
    t.d_ = std::make_shared<TensorData<T>>();
    t.d_->shape = std::move(shape);
    t.d_->values.assign(static_cast<size_t>(numel_of(t.d_->shape)), value);
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_vector(Shape shape, std::vector<T> values) {
    if (numel_of(shape) != static_cast<int64_t>(values.size()))
        throw ShapeError("tensor data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    Tensor t;
    t.d_ = std::make_shared<TensorData<T>>();
    t.d_->shape = std::move(shape);
    t.d_->values = std::move(values);
    return t;
}

// Ordered record of executed operations. Execution order is a topological
// order by construction; backward walks it once in exact reverse.
template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void push(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

    size_t size() const { return nodes_.size(); }
    bool frozen() const { return frozen_; }

    void backward(Tensor<T> loss) {
        if (frozen_) throw NumericError("backward called twice on a frozen tape");
        if (loss.numel() != 1)
            throw ShapeError("backward requires a scalar loss, got " + shape_str(loss.shape()));
        frozen_ = true;
        loss.grad_buffer()[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void clear() {
        nodes_.clear();
        frozen_ = false;
    }

    // Thread-local recording scope: ops record onto the innermost active tape;
    // with no scope active they run forward-only.
    class Scope {
    public:
        explicit Scope(Tape& t) : prev_(active_slot()) { active_slot() = &t; }
        ~Scope() { active_slot() = prev_; }
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* prev_;
    };

    static Tape* active() { return active_slot(); }

private:
    static Tape*& active_slot() {
        thread_local Tape* t = nullptr;
        return t;
    }

    std::vector<std::function<void()>> nodes_;
    bool frozen_ = false;
};

// Names the model stage in non-finite-value errors.
class StageGuard {
public:
    explicit StageGuard(std::string name) : name_(std::move(name)), prev_(slot()) {
        slot() = name_.c_str();
    }
    ~StageGuard() { slot() = prev_; }
    StageGuard(const StageGuard&) = delete;
    StageGuard& operator=(const StageGuard&) = delete;

    static const char* current() { return slot(); }

private:
    static const char*& slot() {
        thread_local const char* s = nullptr;
        return s;
    }
    std::string name_;
    const char* prev_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace cistgcn
