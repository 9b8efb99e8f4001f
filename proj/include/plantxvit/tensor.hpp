#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace plantxvit {

using Shape = std::vector<std::size_t>;

// Number of elements; throws ShapeError for an empty list, a zero dimension,
// or a product that does not fit in size_t.
std::size_t checked_numel(const Shape& shape);

std::string to_string(const Shape& shape);

// Initial contents of a new tensor.
class Fill {
 public:
  enum class Kind { kZeros, kConstant, kUniform, kHeUniform, kNormal };

  static Fill zeros() { return Fill(Kind::kZeros); }
  static Fill constant(double value);
  static Fill uniform(double lo, double hi, std::uint64_t seed);
  // U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)).
  static Fill he_uniform(std::size_t fan_in, std::uint64_t seed);
  static Fill normal(double mean, double stddev, std::uint64_t seed);

  Kind kind() const noexcept { return kind_; }

  template <typename T>
  void apply(std::span<T> out) const;

 private:
  explicit Fill(Kind kind) : kind_(kind) {}

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::uint64_t seed_ = 0;
};

template <typename T>
class Tape;

// Dense row-major tensor. Storage is shared and never mutated after
// construction, so copies are cheap. A tensor produced under a Tape (or
// registered with Tape::watch) carries an identity on that tape.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data);
  explicit Tensor(Shape shape, const Fill& fill = Fill::zeros());

  static Tensor scalar(T value) { return Tensor({1}, std::vector<T>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const noexcept { return data_ ? data_->size() : 0; }
  bool empty() const noexcept { return data_ == nullptr; }

  std::span<const T> data() const noexcept {
    return data_ ? std::span<const T>(*data_) : std::span<const T>();
  }
  T operator[](std::size_t i) const { return (*data_)[i]; }
  // Value of a single-element tensor.
  T item() const;

  bool requires_grad() const noexcept { return tape_ != nullptr; }
  Tape<T>* tape() const noexcept { return tape_; }
  std::uint64_t id() const noexcept { return id_; }

  // Same values, no tape identity.
  Tensor detach() const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>((*data_)[i]);
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  friend class Tape<T>;

  Shape shape_;
  std::shared_ptr<const std::vector<T>> data_;
  Tape<T>* tape_ = nullptr;
  std::uint64_t id_ = 0;
};

// Accumulates gradients for one recorded op. grad_inputs[k] is null when input
// k does not need a gradient; otherwise it is a zero-initialised (or partially
// accumulated) buffer of the input's size which the function must add into.
template <typename T>
using BackwardFn =
    std::function<void(std::span<const T> grad_out, std::span<std::vector<T>* const> grad_inputs)>;

template <typename T>
class Gradients {
 public:
  // Gradient with respect to a watched tensor; zeros if the root does not
  // depend on it.
  Tensor<T> of(const Tensor<T>& watched) const;
  bool reached(const Tensor<T>& watched) const;

 private:
  friend class Tape<T>;

  const Tape<T>* tape_ = nullptr;
  std::unordered_map<std::uint64_t, std::vector<T>> grads_;
};

// Ordered record of differentiable operations. One tape serves one
// forward/backward pass and must outlive every tensor recorded on it.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers `t` as a leaf whose gradient is wanted.
  Tensor<T> watch(const Tensor<T>& t);

  // Returns `value` (sharing its storage) with a fresh identity on this tape.
  Tensor<T> record(const Tensor<T>& value, std::span<const Tensor<T>* const> inputs,
                   BackwardFn<T> backward);

  // Reverse sweep from a scalar root. The tape is left intact, so repeated
  // calls give identical results.
  Gradients<T> backward(const Tensor<T>& root) const;

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    std::uint64_t output;
    std::vector<std::uint64_t> inputs;  // 0 for untracked inputs
    std::vector<std::size_t> input_sizes;
    BackwardFn<T> backward;
  };

  std::vector<Entry> entries_;
  std::uint64_t next_id_ = 1;
};

// Builds an op result. When any input is tracked the result is recorded on
// that input's tape with `backward`; otherwise `backward` is dropped. All
// tracked inputs must share one tape.
template <typename T>
Tensor<T> make_result(const Tensor<T>& value, std::initializer_list<const Tensor<T>*> inputs,
                      BackwardFn<T> backward);

template <typename T>
Tensor<T> make_result(const Tensor<T>& value, std::span<const Tensor<T>* const> inputs,
                      BackwardFn<T> backward);

}  // namespace plantxvit
