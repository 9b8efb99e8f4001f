#include "plantxvit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "plantxvit/error.hpp"
#include "plantxvit/random.hpp"

namespace plantxvit {

std::size_t checked_numel(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have at least one dimension");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero dimension in shape " + to_string(shape));
    if (n > std::numeric_limits<std::size_t>::max() / d) {
      throw ShapeError("dimension overflow in shape " + to_string(shape));
    }
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Fill Fill::constant(double value) {
  Fill f(Kind::kConstant);
  f.a_ = value;
  return f;
}

Fill Fill::uniform(double lo, double hi, std::uint64_t seed) {
  Fill f(Kind::kUniform);
  f.a_ = lo;
  f.b_ = hi;
  f.seed_ = seed;
  return f;
}

Fill Fill::he_uniform(std::size_t fan_in, std::uint64_t seed) {
  if (fan_in == 0) throw ShapeError("He initialisation needs fan_in >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Fill f(Kind::kHeUniform);
  f.a_ = -limit;
  f.b_ = limit;
  f.seed_ = seed;
  return f;
}

Fill Fill::normal(double mean, double stddev, std::uint64_t seed) {
  Fill f(Kind::kNormal);
  f.a_ = mean;
  f.b_ = stddev;
  f.seed_ = seed;
  return f;
}

template <typename T>
void Fill::apply(std::span<T> out) const {
  switch (kind_) {
    case Kind::kZeros:
      std::fill(out.begin(), out.end(), T(0));
      return;
    case Kind::kConstant:
      std::fill(out.begin(), out.end(), static_cast<T>(a_));
      return;
    case Kind::kUniform:
    case Kind::kHeUniform: {
      Rng rng(seed_);
      for (T& v : out) v = static_cast<T>(rng.uniform(a_, b_));
      return;
    }
    case Kind::kNormal: {
      Rng rng(seed_);
      for (T& v : out) v = static_cast<T>(a_ + b_ * rng.normal());
      return;
    }
  }
}

template void Fill::apply<float>(std::span<float>) const;
template void Fill::apply<double>(std::span<double>) const;

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)) {
  const std::size_t n = checked_numel(shape_);
  if (data.size() != n) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " needs " + std::to_string(n) +
                     " values, got " + std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<T>>(std::move(data));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, const Fill& fill) : shape_(std::move(shape)) {
  std::vector<T> data(checked_numel(shape_));
  fill.apply(std::span<T>(data));
  data_ = std::make_shared<const std::vector<T>>(std::move(data));
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape_));
  return (*data_)[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  Tensor out = *this;
  out.tape_ = nullptr;
  out.id_ = 0;
  return out;
}

template <typename T>
Tensor<T> Gradients<T>::of(const Tensor<T>& watched) const {
  if (watched.tape() != tape_) throw GradientError("tensor is not tracked on this tape");
  auto it = grads_.find(watched.id());
  if (it == grads_.end()) return Tensor<T>(watched.shape());
  return Tensor<T>(watched.shape(), it->second);
}

template <typename T>
bool Gradients<T>::reached(const Tensor<T>& watched) const {
  return watched.tape() == tape_ && grads_.count(watched.id()) != 0;
}

template <typename T>
Tensor<T> Tape<T>::watch(const Tensor<T>& t) {
  if (t.empty()) throw GradientError("cannot watch an empty tensor");
  Tensor<T> out = t.detach();
  out.tape_ = this;
  out.id_ = next_id_++;
  return out;
}

template <typename T>
Tensor<T> Tape<T>::record(const Tensor<T>& value, std::span<const Tensor<T>* const> inputs,
                          BackwardFn<T> backward) {
  if (value.empty()) throw GradientError("cannot record an empty tensor");
  Tensor<T> out = value.detach();
  Entry entry;
  entry.output = next_id_++;
  for (const Tensor<T>* in : inputs) {
    if (in->tape() != nullptr && in->tape() != this) {
      throw GradientError("op mixes tensors from different tapes");
    }
    entry.inputs.push_back(in->tape() == this ? in->id() : 0);
    entry.input_sizes.push_back(in->numel());
  }
  entry.backward = std::move(backward);
  out.tape_ = this;
  out.id_ = entry.output;
  entries_.push_back(std::move(entry));
  return out;
}

template <typename T>
Gradients<T> Tape<T>::backward(const Tensor<T>& root) const {
  if (root.tape() != this) throw GradientError("backward root is not recorded on this tape");
  if (root.numel() != 1) {
    throw GradientError("backward root must be a scalar, got shape " + to_string(root.shape()));
  }
  Gradients<T> result;
  result.tape_ = this;
  auto& grads = result.grads_;
  grads[root.id()] = std::vector<T>{T(1)};

  std::vector<std::vector<T>*> slots;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto found = grads.find(it->output);
    if (found == grads.end()) continue;
    // References into an unordered_map survive rehashing.
    const std::vector<T>& grad_out = found->second;
    slots.clear();
    for (std::size_t k = 0; k < it->inputs.size(); ++k) {
      if (it->inputs[k] == 0) {
        slots.push_back(nullptr);
        continue;
      }
      std::vector<T>& buf = grads[it->inputs[k]];
      if (buf.empty()) buf.assign(it->input_sizes[k], T(0));
      slots.push_back(&buf);
    }
    it->backward(grad_out, slots);
    // Op outputs are never leaves; their gradient is complete once consumed.
    grads.erase(it->output);
  }
  return result;
}

template <typename T>
Tensor<T> make_result(const Tensor<T>& value, std::span<const Tensor<T>* const> inputs,
                      BackwardFn<T> backward) {
  Tape<T>* tape = nullptr;
  for (const Tensor<T>* in : inputs) {
    if (in->tape() == nullptr) continue;
    if (tape != nullptr && in->tape() != tape) {
      throw GradientError("op mixes tensors from different tapes");
    }
    tape = in->tape();
  }
  if (tape == nullptr) return value.detach();
  return tape->record(value, inputs, std::move(backward));
}

template <typename T>
Tensor<T> make_result(const Tensor<T>& value, std::initializer_list<const Tensor<T>*> inputs,
                      BackwardFn<T> backward) {
  return make_result(value, std::span<const Tensor<T>* const>(inputs.begin(), inputs.size()),
                     std::move(backward));
}

template class Tensor<float>;
template class Tensor<double>;
template class Gradients<float>;
template class Gradients<double>;
template class Tape<float>;
template class Tape<double>;

template Tensor<float> make_result(const Tensor<float>&, std::span<const Tensor<float>* const>,
                                   BackwardFn<float>);
template Tensor<double> make_result(const Tensor<double>&,
                                    std::span<const Tensor<double>* const>, BackwardFn<double>);
template Tensor<float> make_result(const Tensor<float>&,
                                   std::initializer_list<const Tensor<float>*>, BackwardFn<float>);
template Tensor<double> make_result(const Tensor<double>&,
                                    std::initializer_list<const Tensor<double>*>,
                                    BackwardFn<double>);

}  // namespace plantxvit
