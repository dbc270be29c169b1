// Minimal expected-style result; std::expected lands in C++23 and the corpus
// targets C++20, so domain operations that can fail return this instead.
#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace vaultsim {

template <class T, class E>
class Expected {
public:
    Expected(T value) : v_(std::in_place_index<0>, std::move(value)) {}
    Expected(E error) : v_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }

    T& value() {
        if (!ok()) throw std::logic_error("Expected: value() on error");
        return std::get<0>(v_);
    }
    const T& value() const {
        if (!ok()) throw std::logic_error("Expected: value() on error");
        return std::get<0>(v_);
    }
    const E& error() const {
        if (ok()) throw std::logic_error("Expected: error() on value");
        return std::get<1>(v_);
    }

    T& operator*() { return value(); }
    const T& operator*() const { return value(); }
    T* operator->() { return &value(); }
    const T* operator->() const { return &value(); }

private:
    std::variant<T, E> v_;
};

} // namespace vaultsim
